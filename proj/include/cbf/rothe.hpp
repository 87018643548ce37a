#pragma once

#include "cbf/stationary.hpp"

#include <functional>
#include <vector>

namespace cbf {

/// Per-step energy ledger entry for the backward-Euler scheme. The identity
/// residual is
///   ||y_i||_H^2 - ||y_{i-1}||_H^2 + ||y_i - y_{i-1}||_H^2
///     + 2k [mu ||y_i||_V^2 + alpha ||y_i||_H^2 + beta ||y_i||_{L^{r+1}}^{r+1}]
///     + 2k <eta_i, ell y_i>_U - 2k <f_i, y_i>.
struct EnergyRecord {
    double h2 = 0.0;        // ||y_i||_H^2
    double h2_prev = 0.0;   // ||y_{i-1}||_H^2
    double h2_diff = 0.0;   // ||y_i - y_{i-1}||_H^2
    double v2 = 0.0;        // ||y_i||_V^2
    double lr = 0.0;        // ||y_i||_{L^{r+1}}^{r+1}
    double eta_pair = 0.0;  // <eta_i, ell y_i>_U
    double f_pair = 0.0;    // <f_i, y_i>
    double identity_residual = 0.0;
};

/// Time-dependent forcing as a map t -> dual vector.
using ForcingFn = std::function<DualVector(double)>;

struct RotheTrajectory {
    double k = 0.0;
    double T = 0.0;
    int N = 0;
    std::vector<State> snapshots;       // y_0 .. y_N
    std::vector<Vec> multipliers;       // eta_1 .. eta_N
    std::vector<DualVector> forcing;    // f_1 .. f_N
    std::vector<EnergyRecord> energy;   // records 1 .. N
    double init_growth_constant = 0.0;  // sqrt(T) * ||y_0||_{V cap L^{r+1}}
    double newton_tol = 0.0;            // inner-solve tolerance actually used

    void validate() const;
};

/// f_{k,i} = (1/k) * integral of f over ((i-1)k, ik], by 4-point Gauss.
std::vector<DualVector> discretize_forcing(const ForcingFn& f, double T, int N,
                                           Eigen::Index n);

/// The discrete space is fixed, so the initial datum is taken as-is; the
/// returned state equals y0.
State initial_approximation(const State& y0);

struct RotheStepResult {
    State y;
    Vec eta;
    StationarySolveReport report;
};

/// One backward-Euler step: solve the stationary inclusion with the Darcy
/// coefficient shifted by 1/k and right side f_i + (1/k) * mass(y_prev).
RotheStepResult rothe_step(const OperatorSet& ops, const CbfParams& p, const Superpotential& j,
                           const TraceOperator& tr, const State& y_prev, const DualVector& f_i,
                           double k, const SolveOptions& opts = {});

/// Full trajectory with the energy ledger filled. Throws on any step failure.
RotheTrajectory rothe_run(const OperatorSet& ops, const CbfParams& p, const Superpotential& j,
                          const TraceOperator& tr, const State& y0, const ForcingFn& f, double T,
                          int N, const SolveOptions& opts = {});

/// Piecewise-linear / piecewise-constant interpolants of the trajectory.
State eval_linear(const RotheTrajectory& traj, double t);
State eval_constant(const RotheTrajectory& traj, double t);

/// The gap integral int_0^T || ybar_k - y_k ||_H^2 dt, reported through two
/// algebraically identical routes: (k/3) sum ||y_i - y_{i-1}||_H^2 and
/// (k^2/3) ||y_k'||^2_{L^2(0,T;H)}.
struct GapReport {
    double gap_sq = 0.0;
    double predicted = 0.0;
};
GapReport interpolant_gap(const RotheTrajectory& traj, const SpaceSpec& space);

/// (a) per-step identity residual <= 10 * newton_tol * (1 + ||y_i||_H^2);
/// (b) cumulative bound
///   max_n ||y_n||^2 + sum ||dy_i||^2 + mu~ k sum ||y_i||_V^2 + 2 beta k sum ||y_i||^{r+1}
///     <= ||y_0||^2 + (2/mu~) [C_psi^2 ||ell||^2 T + ||f||^2_{L^2(0,T;V')}]
/// with the accumulated solver slack added on the right. Skips (b) when
/// mu~ <= 0.
CheckReport energy_ledger_check(const RotheTrajectory& traj, const OperatorSet& ops,
                                const CbfParams& p, const Superpotential& j,
                                const TraceOperator& tr, double f_l2_sq);

/// k sum ||eta_i||_U^2 <= 2 C_psi^2 (T + ||ell||^2 k sum ||y_i||_V^2).
CheckReport multiplier_bound_check(const RotheTrajectory& traj, const OperatorSet& ops,
                                   const Superpotential& j, const TraceOperator& tr);

struct ConvergenceRow {
    int N = 0;
    double e_N = 0.0;  // max over shared knots against the next-finer run
    double d_N = 0.0;  // energy-equality defect, trapezoidal reconstruction
};

/// Runs the problem at each N in n_list (must be doubling) and compares
/// consecutive runs at shared knots; also reports the energy-equality defect
/// of each run. The last row carries only d_N.
std::vector<ConvergenceRow> convergence_study(const OperatorSet& ops, const CbfParams& p,
                                              const Superpotential& j, const TraceOperator& tr,
                                              const State& y0, const ForcingFn& f, double T,
                                              const std::vector<int>& n_list,
                                              const SolveOptions& opts = {});

/// Continuous-dependence check for a twin pair of data sets:
///   max_i ||w_i||_H^2 + mu^ k sum ||w_i||_V^2
///     <= [||w_0||^2 + (2/mu^) k sum ||df_i||_{V'}^2] * exp(G)
/// with mu^ = mu - m ||ell||^2 and the regime-appropriate exponent G
/// computed from the second run (generic constants default to 1).
CheckReport twin_run_gronwall(const OperatorSet& ops, const CbfParams& p,
                              const Superpotential& j, const TraceOperator& tr, const State& y0_1,
                              const ForcingFn& f1, const State& y0_2, const ForcingFn& f2,
                              double T, int N, const SolveOptions& opts = {},
                              double generic_C = 1.0);

}  // namespace cbf
