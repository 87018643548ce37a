#include "cbf/rothe.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbf {

namespace {

// 4-point Gauss-Legendre on [-1, 1].
constexpr double kGaussX[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                               0.8611363115940526};
constexpr double kGaussW[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                               0.3478548451374538};

double l4_pow4(const SpaceSpec& sp, const State& y) {
    double v = norm_Lp(sp, y, 4.0);
    return v * v * v * v;
}

}  // namespace

void RotheTrajectory::validate() const {
    if (N < 1) throw std::invalid_argument("RotheTrajectory: N must be >= 1");
    if (snapshots.size() != size_t(N) + 1)
        throw std::invalid_argument("RotheTrajectory: snapshot count must be N + 1");
    if (std::abs(double(N) * k - T) > 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("RotheTrajectory: N * k must equal T");
}

std::vector<DualVector> discretize_forcing(const ForcingFn& f, double T, int N,
                                           Eigen::Index n) {
    if (N < 1) throw std::invalid_argument("discretize_forcing: N must be >= 1");
    const double k = T / double(N);
    std::vector<DualVector> out;
    out.reserve(size_t(N));
    for (int i = 1; i <= N; ++i) {
        double a = (i - 1) * k, mid = a + 0.5 * k;
        DualVector acc = Vec::Zero(n);
        for (int q = 0; q < 4; ++q) acc += kGaussW[q] * f(mid + 0.5 * k * kGaussX[q]);
        out.push_back(0.5 * acc);  // (1/k) * (k/2) * sum w f
    }
    return out;
}

State initial_approximation(const State& y0) { return y0; }

RotheStepResult rothe_step(const OperatorSet& ops, const CbfParams& p, const Superpotential& j,
                           const TraceOperator& tr, const State& y_prev, const DualVector& f_i,
                           double k, const SolveOptions& opts) {
    if (!(k > 0.0)) throw std::invalid_argument("rothe_step: k must be positive");
    CbfParams shifted = p;
    shifted.alpha += 1.0 / k;
    DualVector rhs = f_i + (1.0 / k) * mass_apply(ops, y_prev);
    SolveOptions step_opts = opts;
    step_opts.warn_on_thresholds = false;
    StationarySolveReport rep = solve_stationary(ops, shifted, j, tr, rhs, step_opts, &y_prev);
    RotheStepResult out;
    out.y = rep.y;
    out.eta = rep.eta.values;
    out.report = std::move(rep);
    return out;
}

RotheTrajectory rothe_run(const OperatorSet& ops, const CbfParams& p, const Superpotential& j,
                          const TraceOperator& tr, const State& y0, const ForcingFn& f, double T,
                          int N, const SolveOptions& opts) {
    if (N < 1) throw std::invalid_argument("rothe_run: N must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("rothe_run: T must be positive");
    const SpaceSpec& sp = *ops.space;
    RotheTrajectory traj;
    traj.T = T;
    traj.N = N;
    traj.k = T / double(N);
    traj.newton_tol = opts.newton_tol;
    traj.forcing = discretize_forcing(f, T, N, sp.n);

    State y = initial_approximation(y0);
    y.validate(sp.n);
    double v0 = norm_V(sp, y);
    double l0 = norm_Lp(sp, y, p.r + 1.0);
    traj.init_growth_constant = std::sqrt(T) * std::sqrt(v0 * v0 + l0 * l0);
    traj.snapshots.push_back(y);

    for (int i = 1; i <= N; ++i) {
        RotheStepResult step = rothe_step(ops, p, j, tr, y, traj.forcing[size_t(i - 1)], traj.k, opts);
        if (!step.report.converged)
            throw std::runtime_error("rothe_run: step " + std::to_string(i) +
                                     " failed to converge (residual " +
                                     std::to_string(step.report.residual) + ")");
        EnergyRecord rec;
        rec.h2_prev = std::pow(norm_H(sp, y), 2);
        rec.h2 = std::pow(norm_H(sp, step.y), 2);
        State d(Vec(step.y.coeffs - y.coeffs));
        rec.h2_diff = std::pow(norm_H(sp, d), 2);
        rec.v2 = std::pow(norm_V(sp, step.y), 2);
        rec.lr = std::pow(norm_Lp(sp, step.y, p.r + 1.0), p.r + 1.0);
        rec.eta_pair = tr.boundary_pairing(step.eta, tr.trace(step.y));
        rec.f_pair = pairing(traj.forcing[size_t(i - 1)], step.y);
        rec.identity_residual = rec.h2 - rec.h2_prev + rec.h2_diff +
                                2.0 * traj.k * (p.mu * rec.v2 + p.alpha * rec.h2 + p.beta * rec.lr) +
                                2.0 * traj.k * rec.eta_pair - 2.0 * traj.k * rec.f_pair;
        traj.energy.push_back(rec);
        traj.multipliers.push_back(step.eta);
        traj.snapshots.push_back(step.y);
        y = step.y;
    }
    return traj;
}

namespace {

int knot_index(const RotheTrajectory& traj, double t) {
    if (t < 0.0 || t > traj.T * (1.0 + 1e-12))
        throw std::invalid_argument("interpolant: t outside [0, T]");
    if (t == 0.0) return 0;
    int i = int(std::ceil(t / traj.k - 1e-12));
    return std::min(std::max(i, 1), traj.N);
}

}  // namespace

State eval_linear(const RotheTrajectory& traj, double t) {
    int i = knot_index(traj, t);
    if (i == 0) return traj.snapshots[0];
    const Vec& yi = traj.snapshots[size_t(i)].coeffs;
    const Vec& ym = traj.snapshots[size_t(i) - 1].coeffs;
    double theta = t / traj.k - double(i);  // in [-1, 0]
    return State(Vec(yi + theta * (yi - ym)));
}

State eval_constant(const RotheTrajectory& traj, double t) {
    int i = knot_index(traj, t);
    return traj.snapshots[size_t(i)];
}

GapReport interpolant_gap(const RotheTrajectory& traj, const SpaceSpec& space) {
    GapReport rep;
    double acc = 0.0, acc_rate = 0.0;
    for (int i = 1; i <= traj.N; ++i) {
        State d(Vec(traj.snapshots[size_t(i)].coeffs - traj.snapshots[size_t(i) - 1].coeffs));
        double d2 = std::pow(norm_H(space, d), 2);
        acc += d2;
        State rate(Vec(d.coeffs / traj.k));
        acc_rate += traj.k * std::pow(norm_H(space, rate), 2);
    }
    rep.gap_sq = traj.k / 3.0 * acc;
    rep.predicted = traj.k * traj.k / 3.0 * acc_rate;
    return rep;
}

CheckReport energy_ledger_check(const RotheTrajectory& traj, const OperatorSet& ops,
                                const CbfParams& p, const Superpotential& j,
                                const TraceOperator& tr, double f_l2_sq) {
    const SpaceSpec& sp = *ops.space;
    CheckReport rep;
    rep.tag = "energy_ledger";
    double worst_rel = 0.0;
    double slack = 0.0;
    for (const EnergyRecord& rec : traj.energy) {
        double tol = 10.0 * traj.newton_tol * (1.0 + rec.h2);
        worst_rel = std::max(worst_rel, std::abs(rec.identity_residual) / tol);
        slack += std::abs(rec.identity_residual);
    }
    bool per_step_ok = worst_rel <= 1.0;
    rep.lhs = worst_rel;  // per-step residual / allowance, worst case
    rep.detail = "per-step";

    double C_psi = C1_constant(j.C0(), tr.meas_gamma());
    double mu_tilde = p.mu - C_psi * tr.op_norm * tr.op_norm;
    if (!(mu_tilde > 0.0)) {
        rep.skipped = true;  // cumulative part not claimed
        rep.passed = per_step_ok;
        rep.detail = "per-step only (mu_tilde <= 0, cumulative bound skipped)";
        return rep;
    }
    // The summed estimate holds at every n; assert the worst prefix.
    double lhs_cum = 0.0, acc = 0.0;
    for (const EnergyRecord& rec : traj.energy) {
        acc += rec.h2_diff + mu_tilde * traj.k * rec.v2 + 2.0 * p.beta * traj.k * rec.lr;
        lhs_cum = std::max(lhs_cum, rec.h2 + acc);
    }
    double h2_0 = std::pow(norm_H(sp, traj.snapshots[0]), 2);
    double rhs_cum = h2_0 + 2.0 / mu_tilde *
                                (C_psi * C_psi * tr.op_norm * tr.op_norm * traj.T + f_l2_sq);
    rep.bound1 = lhs_cum;
    rep.bound2 = rhs_cum;
    rep.tolerance = slack + 1e-12 * (1.0 + lhs_cum + rhs_cum);
    rep.passed = per_step_ok && lhs_cum <= rhs_cum + rep.tolerance;
    rep.detail = "per-step and cumulative";
    return rep;
}

CheckReport multiplier_bound_check(const RotheTrajectory& traj, const OperatorSet& ops,
                                   const Superpotential& j, const TraceOperator& tr) {
    (void)ops;
    CheckReport rep;
    rep.tag = "multiplier_bound";
    double C_psi = C1_constant(j.C0(), tr.meas_gamma());
    double sum_eta = 0.0, sum_v2 = 0.0;
    for (size_t i = 0; i < traj.multipliers.size(); ++i) {
        const Vec& eta = traj.multipliers[i];
        sum_eta += (tr.wGamma.array() * eta.array().square()).sum();
        sum_v2 += traj.energy[i].v2;
    }
    rep.lhs = traj.k * sum_eta;
    rep.bound1 =
        2.0 * C_psi * C_psi * (traj.T + tr.op_norm * tr.op_norm * traj.k * sum_v2);
    rep.tolerance = 1e-8 * (1.0 + rep.bound1);
    rep.passed = rep.lhs <= rep.bound1 + rep.tolerance;
    return rep;
}

namespace {

double energy_equality_defect(const RotheTrajectory& traj, const OperatorSet& ops,
                              const CbfParams& p, const TraceOperator& tr, const ForcingFn& f) {
    const SpaceSpec& sp = *ops.space;
    const int N = traj.N;
    // Knot samples of the integrands; the multiplier at t=0 is extended
    // constantly from the first step.
    std::vector<double> diss(size_t(N) + 1), bnd(size_t(N) + 1), frc(size_t(N) + 1);
    for (int i = 0; i <= N; ++i) {
        const State& y = traj.snapshots[size_t(i)];
        double v2 = std::pow(norm_V(sp, y), 2);
        double h2 = std::pow(norm_H(sp, y), 2);
        double lr = std::pow(norm_Lp(sp, y, p.r + 1.0), p.r + 1.0);
        diss[size_t(i)] = p.mu * v2 + p.alpha * h2 + p.beta * lr;
        const Vec& eta = traj.multipliers[size_t(std::max(i, 1)) - 1];
        bnd[size_t(i)] = tr.boundary_pairing(eta, tr.trace(y));
        frc[size_t(i)] = pairing(f(std::min(double(i) * traj.k, traj.T)), y);
    }
    auto trap = [&](const std::vector<double>& g) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) acc += 0.5 * traj.k * (g[size_t(i)] + g[size_t(i) + 1]);
        return acc;
    };
    double h2_T = std::pow(norm_H(sp, traj.snapshots[size_t(N)]), 2);
    double h2_0 = std::pow(norm_H(sp, traj.snapshots[0]), 2);
    return std::abs(h2_T - h2_0 + 2.0 * trap(diss) + 2.0 * trap(bnd) - 2.0 * trap(frc));
}

}  // namespace

std::vector<ConvergenceRow> convergence_study(const OperatorSet& ops, const CbfParams& p,
                                              const Superpotential& j, const TraceOperator& tr,
                                              const State& y0, const ForcingFn& f, double T,
                                              const std::vector<int>& n_list,
                                              const SolveOptions& opts) {
    if (n_list.size() < 2)
        throw std::invalid_argument("convergence_study: need at least two N values");
    std::vector<RotheTrajectory> runs;
    runs.reserve(n_list.size());
    for (int N : n_list) runs.push_back(rothe_run(ops, p, j, tr, y0, f, T, N, opts));

    std::vector<ConvergenceRow> rows;
    const SpaceSpec& sp = *ops.space;
    for (size_t a = 0; a < runs.size(); ++a) {
        ConvergenceRow row;
        row.N = n_list[a];
        row.d_N = energy_equality_defect(runs[a], ops, p, tr, f);
        if (a + 1 < runs.size()) {
            int ratio = n_list[a + 1] / n_list[a];
            if (n_list[a + 1] % n_list[a] != 0)
                throw std::invalid_argument("convergence_study: N values must be nested");
            double worst = 0.0;
            for (int i = 0; i <= n_list[a]; ++i) {
                State d(Vec(runs[a].snapshots[size_t(i)].coeffs -
                            runs[a + 1].snapshots[size_t(i) * size_t(ratio)].coeffs));
                worst = std::max(worst, norm_H(sp, d));
            }
            row.e_N = worst;
        }
        rows.push_back(row);
    }
    return rows;
}

CheckReport twin_run_gronwall(const OperatorSet& ops, const CbfParams& p,
                              const Superpotential& j, const TraceOperator& tr, const State& y0_1,
                              const ForcingFn& f1, const State& y0_2, const ForcingFn& f2,
                              double T, int N, const SolveOptions& opts, double generic_C) {
    const SpaceSpec& sp = *ops.space;
    CheckReport rep;
    rep.tag = "gronwall";
    double l2 = tr.op_norm * tr.op_norm;
    double mu_hat = p.mu - j.m() * l2;
    if (!(mu_hat > 0.0)) {
        rep.skipped = true;
        rep.passed = true;
        rep.detail = "mu - m ||ell||^2 <= 0: regime condition unmet";
        return rep;
    }
    double coef = mu_hat;  // coefficient of the V-sum on the left
    double G = 0.0;
    RotheTrajectory t1 = rothe_run(ops, p, j, tr, y0_1, f1, T, N, opts);
    RotheTrajectory t2 = rothe_run(ops, p, j, tr, y0_2, f2, T, N, opts);

    if (p.r > 3.0) {
        if (!(p.beta > 0.0)) {
            rep.skipped = true;
            rep.passed = true;
            rep.detail = "r > 3 regime needs beta > 0";
            return rep;
        }
        double base = 8.0 / (p.beta * mu_hat * (p.r - 1.0));
        double rho_tilde = (p.r - 3.0) / (p.r - 1.0) * std::pow(base, 2.0 / (p.r - 3.0));
        G = 2.0 * rho_tilde * T / mu_hat;
        rep.detail = "r>3";
    } else if (p.r == 3.0) {
        double mu_bar = (p.beta > 0.0)
                            ? p.mu - 1.0 / (2.0 * p.beta) - j.m() * l2
                            : -std::numeric_limits<double>::infinity();
        if (!(mu_bar > 0.0)) {
            rep.skipped = true;
            rep.passed = true;
            rep.detail = "r = 3 regime needs mu > 1/(2 beta) + m ||ell||^2";
            return rep;
        }
        coef = mu_bar;
        G = 0.0;
        rep.detail = "r=3";
    } else {
        double int_l4 = 0.0;
        for (int i = 1; i <= N; ++i)
            int_l4 += t2.k * l4_pow4(sp, t2.snapshots[size_t(i)]);
        G = generic_C / (mu_hat * mu_hat * mu_hat) * int_l4;
        rep.detail = "d=2, r in [1,3)";
    }

    // Combined estimate at every prefix; assert the worst n.
    double lhs = 0.0, sum_wv2 = 0.0, sum_df2 = 0.0;
    for (int i = 0; i <= N; ++i) {
        State w(Vec(t1.snapshots[size_t(i)].coeffs - t2.snapshots[size_t(i)].coeffs));
        if (i >= 1) {
            sum_wv2 += std::pow(norm_V(sp, w), 2);
            DualVector df = t1.forcing[size_t(i) - 1] - t2.forcing[size_t(i) - 1];
            double dn = dual_norm_V(sp, df);
            sum_df2 += dn * dn;
        }
        lhs = std::max(lhs, std::pow(norm_H(sp, w), 2) + coef * t1.k * sum_wv2);
    }
    State w0(Vec(y0_1.coeffs - y0_2.coeffs));
    double base = std::pow(norm_H(sp, w0), 2) + 2.0 / coef * t1.k * sum_df2;
    double rhs = base * std::exp(G);
    rep.lhs = lhs;
    rep.bound1 = rhs;
    rep.bound2 = G;
    rep.tolerance = 1e-10 * (1.0 + rhs);
    rep.passed = lhs <= rhs + rep.tolerance;
    if (p.r < 3.0 && base > 0.0 && lhs > 0.0) {
        // smallest generic factor that would make the bound tight
        double int_l4 = G * mu_hat * mu_hat * mu_hat / std::max(generic_C, 1e-300);
        double c_min = (lhs > base && int_l4 > 0.0)
                           ? mu_hat * mu_hat * mu_hat * std::log(lhs / base) / int_l4
                           : 0.0;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "; C_min=%.3g", c_min);
        rep.detail += buf;
    }
    return rep;
}

}  // namespace cbf
