#include "cbf/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

struct CommonOpts {
    std::string config_path;
    long seed = -1;
    std::string out_dir;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")->required();
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
    cmd->add_option("--jobs", opts.jobs, "worker pool size for fan-out commands");
}

int run_command(const CommonOpts& opts,
                cbf::CommandResult (*fn)(const cbf::ExperimentConfig&)) {
    cbf::ExperimentConfig cfg;
    try {
        cfg = cbf::load_config(opts.config_path);
        if (opts.seed >= 0) cfg.seed = std::uint64_t(opts.seed);
        if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
        if (const char* env = std::getenv("CBF_OUT"); env && opts.out_dir.empty())
            cfg.out_dir = env;
        if (opts.jobs > 0) cfg.jobs = opts.jobs;
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cbf::kExitConfigError;
    }
    try {
        cbf::CommandResult res = fn(cfg);
        for (const cbf::ResultRow& row : res.rows) {
            std::cout << (row.skipped ? "[skip] " : (row.passed ? "[pass] " : "[FAIL] "))
                      << row.tag;
            if (!row.case_id.empty()) std::cout << " (" << row.case_id << ")";
            if (!row.detail.empty()) std::cout << " - " << row.detail;
            std::cout << "\n";
        }
        if (!res.message.empty()) std::cerr << res.message << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cbf::kExitSolverFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver and verification harness for the 2D convective "
                 "Brinkman-Forchheimer system with nonsmooth boundary laws"};
    app.require_subcommand(1);

    CommonOpts o_verify, o_stat, o_rothe, o_conv, o_twin, o_sweep;
    add_common(app.add_subcommand("verify-operators",
                                  "randomized operator identity/inequality suite"),
               o_verify);
    add_common(app.add_subcommand("solve-stationary", "one stationary solve with checks"),
               o_stat);
    add_common(app.add_subcommand("run-rothe", "one backward-Euler trajectory with checks"),
               o_rothe);
    add_common(app.add_subcommand("convergence", "time-step refinement study"), o_conv);
    add_common(app.add_subcommand("twin-run", "perturbed-data continuous-dependence check"),
               o_twin);
    add_common(app.add_subcommand("sweep", "uniqueness sweep over mu"), o_sweep);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("verify-operators"))
        return run_command(o_verify, cbf::cmd_verify_operators);
    if (app.got_subcommand("solve-stationary"))
        return run_command(o_stat, cbf::cmd_solve_stationary);
    if (app.got_subcommand("run-rothe")) return run_command(o_rothe, cbf::cmd_run_rothe);
    if (app.got_subcommand("convergence")) return run_command(o_conv, cbf::cmd_convergence);
    if (app.got_subcommand("twin-run")) return run_command(o_twin, cbf::cmd_twin_run);
    if (app.got_subcommand("sweep")) return run_command(o_sweep, cbf::cmd_sweep);
    return cbf::kExitConfigError;
}
