#pragma once

#include "cbf/config.hpp"

#include <string>
#include <vector>

namespace cbf {

/// Process exit codes shared by all commands.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailure = 2,
    kExitSolverFailure = 3,
    kExitConfigError = 4,
};

/// One emitted result row; serialized with the config hash and check tag.
struct ResultRow {
    std::string tag;
    std::string case_id;
    double lhs = 0.0;
    double bound1 = 0.0;
    double bound2 = 0.0;
    bool passed = false;
    bool skipped = false;
    std::string detail;
};

struct CommandResult {
    int exit_code = kExitOk;
    std::vector<ResultRow> rows;
    std::string message;
};

void write_rows_csv(const std::string& path, const ExperimentConfig& cfg,
                    const std::vector<ResultRow>& rows);

/// Randomized verification of the operator identities and inequalities.
CommandResult cmd_verify_operators(const ExperimentConfig& cfg);

/// One stationary solve with bound and inclusion checks; writes the Newton
/// ledger and the result rows.
CommandResult cmd_solve_stationary(const ExperimentConfig& cfg);

/// One Rothe trajectory with the energy ledger checks; writes the trajectory
/// CSV (i, t, norms, boundary pairing, identity residual) and snapshots.
CommandResult cmd_run_rothe(const ExperimentConfig& cfg);

/// Refinement study over N_list; asserts monotone decrease of e_N and d_N.
CommandResult cmd_convergence(const ExperimentConfig& cfg);

/// Perturbed-data continuous-dependence check.
CommandResult cmd_twin_run(const ExperimentConfig& cfg);

/// mu sweep: thresholds + twin-solve agreement per mu; asserts agreement for
/// every mu above the computed uniqueness threshold.
CommandResult cmd_sweep(const ExperimentConfig& cfg);

}  // namespace cbf
