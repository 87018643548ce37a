#pragma once

#include "cbf/operators.hpp"
#include "cbf/superpotential.hpp"

#include <vector>

namespace cbf {

/// Smoothing-continuation Newton options.
struct SolveOptions {
    std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double newton_tol = 1e-10;
    int max_iters = 200;
    double damping = 1.0;              // initial step factor, halved on residual increase
    bool include_convection = true;
    bool picard = false;               // freeze the convective Jacobian at the previous iterate
    bool warn_on_thresholds = true;

    void validate() const;
};

struct NewtonIterRecord {
    double eps = 0.0;
    int iter = 0;
    double residual = 0.0;
    double step_norm = 0.0;
};

struct StationarySolveReport {
    State y;
    BoundaryMultiplier eta;
    double residual = 0.0;
    std::vector<int> iterations_per_stage;
    bool converged = false;
    std::vector<NewtonIterRecord> ledger;
    std::string warning;
};

/// Solve F(y) + ell^T (wGamma .* eta) = f with eta in the Clarke interval of
/// the boundary law at ell y, by damped Newton on the smoothed problems
/// G_eps(y) = F(y) + ell^T (wGamma .* g_eps(ell y)) - f, warm-started along
/// the eps schedule. The final eta is the last smoothed evaluation projected
/// nodewise onto the Clarke interval (snapped at the final eps width).
StationarySolveReport solve_stationary(const OperatorSet& ops, const CbfParams& p,
                                       const Superpotential& j, const TraceOperator& tr,
                                       const DualVector& f, const SolveOptions& opts = {},
                                       const State* warm_start = nullptr);

/// Checks the a-priori bounds at a converged solve:
///   ||y||_V <= (C_psi ||ell|| + ||f||_V') / (mu - C_psi ||ell||^2)     [bound1]
///   ||y||_{L^{r+1}}^{r+1} <= (C_psi ||ell|| + ||f||_V')^2 / (beta mu~) [bound2]
/// Skipped when mu~ <= 0 (the bounds are not claimed there).
CheckReport verify_stationary_bounds(const StationarySolveReport& report, const OperatorSet& ops,
                                     const CbfParams& p, const Superpotential& j,
                                     const TraceOperator& tr, const DualVector& f);

/// Nodewise feasibility of eta in the Clarke intervals at ell y (1e-8 slack,
/// breakpoints snapped at the final smoothing width).
CheckReport verify_inclusion(const StationarySolveReport& report, const Superpotential& j,
                             const TraceOperator& tr, double snap_tol);

/// Two full solves from distinct warm starts; passes iff the V-distance of
/// the two solutions is <= 1e-7.
CheckReport twin_solve_uniqueness(const OperatorSet& ops, const CbfParams& p,
                                  const Superpotential& j, const TraceOperator& tr,
                                  const DualVector& f, const State& seed1, const State& seed2,
                                  const SolveOptions& opts = {});

}  // namespace cbf
