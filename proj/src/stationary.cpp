#include "cbf/stationary.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <stdexcept>

namespace cbf {

namespace {

DualVector smoothed_boundary_term(const Superpotential& j, const TraceOperator& tr,
                                  const Vec& xi, double eps) {
    Vec gv(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) gv[i] = j.smoothed_c1(xi[i], eps);
    return tr.adjoint(gv);
}

SpMat boundary_jacobian(const Superpotential& j, const TraceOperator& tr, const Vec& xi,
                        double eps) {
    Vec slope(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i)
        slope[i] = tr.wGamma[i] * j.smoothed_c1_deriv(xi[i], eps);
    SpMat D(xi.size(), xi.size());
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index i = 0; i < xi.size(); ++i) trips.emplace_back(int(i), int(i), slope[i]);
    D.setFromTriplets(trips.begin(), trips.end());
    return SpMat(tr.L.transpose() * (D * tr.L).eval());
}

}  // namespace

void SolveOptions::validate() const {
    if (eps_schedule.empty())
        throw std::invalid_argument("SolveOptions: eps schedule must be nonempty");
    for (size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0.0))
            throw std::invalid_argument("SolveOptions: eps values must be positive");
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
            throw std::invalid_argument("SolveOptions: eps schedule must be strictly decreasing");
    }
    if (!(newton_tol > 0.0)) throw std::invalid_argument("SolveOptions: newton_tol > 0 required");
    if (max_iters < 1) throw std::invalid_argument("SolveOptions: max_iters >= 1 required");
    if (!(damping > 0.0 && damping <= 1.0))
        throw std::invalid_argument("SolveOptions: damping must lie in (0, 1]");
}

StationarySolveReport solve_stationary(const OperatorSet& ops, const CbfParams& p,
                                       const Superpotential& j, const TraceOperator& tr,
                                       const DualVector& f, const SolveOptions& opts,
                                       const State* warm_start) {
    opts.validate();
    p.validate();
    const SpaceSpec& sp = *ops.space;
    if (f.size() != sp.n) throw std::invalid_argument("solve_stationary: forcing dimension");

    StationarySolveReport rep;
    if (opts.warn_on_thresholds) {
        ThresholdReport th = thresholds(p, tr, j);
        if (!th.rothe_wellposed)
            rep.warning = "mu_tilde <= 0: coercivity margin not established for this law";
    }

    State y = warm_start ? *warm_start : State(Vec::Zero(sp.n));
    y.validate(sp.n);

    // Smooth laws see the same problem at every eps; one stage suffices.
    std::vector<double> schedule = opts.eps_schedule;
    if (j.breakpoints().empty()) schedule = {opts.eps_schedule.back()};

    auto residual_vec = [&](const State& v, double eps) {
        DualVector G = apply_F(ops, p, v, opts.include_convection) - f;
        if (!j.is_zero()) G += smoothed_boundary_term(j, tr, tr.trace(v), eps);
        return G;
    };

    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;
    const SpMat& M = sp.gram_H;

    auto newton_stage = [&](State& yk, double eps) -> bool {
        DualVector G = residual_vec(yk, eps);
        double res = G.norm();
        int it = 0;
        rep.ledger.push_back({eps, 0, res, 0.0});
        bool ok = res <= opts.newton_tol;
        while (res > opts.newton_tol && it < opts.max_iters) {
            ++it;
            SpMat J = SpMat(p.mu * ops.A());
            if (p.alpha != 0.0) J += SpMat(p.alpha * M);
            if (p.beta != 0.0) J += gateaux_C_matrix(ops, yk, p.r);
            if (opts.include_convection && !opts.picard) J += convection_jacobian(ops, yk);
            if (!j.is_zero()) J += boundary_jacobian(j, tr, tr.trace(yk), eps);
            J.makeCompressed();
            if (!analyzed) {
                lu.analyzePattern(J);
                analyzed = true;
            }
            lu.factorize(J);
            if (lu.info() != Eigen::Success) {
                // Nudge the diagonal and retry once before giving up on the stage.
                SpMat Jr = J;
                double shift = 1e-10 * (1.0 + J.coeffs().abs().maxCoeff());
                for (Eigen::Index d = 0; d < Jr.rows(); ++d) Jr.coeffRef(d, d) += shift;
                lu.factorize(Jr);
                if (lu.info() != Eigen::Success) break;
            }
            Vec step = lu.solve(-G);
            double lambda = opts.damping;
            State trial;
            DualVector Gt;
            double res_t = 0.0;
            bool accepted = false;
            while (lambda >= 1e-8) {
                trial = State(Vec(yk.coeffs + lambda * step));
                Gt = residual_vec(trial, eps);
                res_t = Gt.norm();
                if (res_t < res || res_t <= opts.newton_tol) {
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!accepted) break;
            yk = trial;
            G = Gt;
            res = res_t;
            rep.ledger.push_back({eps, it, res, lambda * step.norm()});
            if (res <= opts.newton_tol) ok = true;
        }
        rep.iterations_per_stage.push_back(it);
        return ok;
    };

    const double eps_final = schedule.back();

    // Warm-started solves usually sit in the final stage's Newton basin
    // already; try it directly and fall back to the full continuation.
    bool solved_fast = false;
    if (warm_start && schedule.size() > 1) {
        State attempt = y;
        if (newton_stage(attempt, eps_final)) {
            y = attempt;
            solved_fast = true;
        } else {
            rep.ledger.clear();
            rep.iterations_per_stage.clear();
        }
    }

    // Continuation along the schedule. A stage that stalls is retried through
    // geometric bisection of the eps gap, restarting from the last converged
    // iterate; stiff laws shed window nodes gradually this way.
    if (!solved_fast) {
        double eps_prev = 0.0;
        bool have_prev = false;
        for (double eps_target : schedule) {
            std::vector<double> pending{eps_target};
            State base = y;
            bool stage_ok = false;
            int splits = 0;
            while (!pending.empty()) {
                double eps = pending.back();
                State attempt = y;
                if (newton_stage(attempt, eps)) {
                    y = attempt;
                    pending.pop_back();
                    eps_prev = eps;
                    have_prev = true;
                    stage_ok = true;
                } else if (have_prev && splits < 24 && eps_prev / eps > 1.05) {
                    pending.push_back(std::sqrt(eps_prev * eps));
                    ++splits;
                    y = base;  // restart the subchain from the converged iterate
                } else {
                    y = attempt;  // best effort
                    stage_ok = false;
                    break;
                }
                base = y;
            }
            if (!stage_ok) break;
        }
    }

    // Final multiplier: last smoothed values projected onto the Clarke
    // intervals (snapped at the final eps; midpoint on overshoot at kinks).
    const double eps_last = eps_final;
    Vec xi = tr.trace(y);
    Vec eta(xi.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        double val = j.is_zero() ? 0.0 : j.smoothed_c1(xi[i], eps_last);
        Interval iv = j.subdiff(xi[i], eps_last);
        if (iv.contains(val)) {
            eta[i] = val;
        } else {
            double dist = std::max(iv.lo - val, val - iv.hi);
            eta[i] = (dist <= iv.hi - iv.lo + eps_last) ? iv.clamp(val) : iv.midpoint();
        }
    }
    rep.eta.values = eta;
    DualVector G_final = apply_F(ops, p, y, opts.include_convection) + tr.adjoint(eta) - f;
    rep.residual = G_final.norm();
    rep.converged = rep.residual <= opts.newton_tol;
    rep.y = std::move(y);
    return rep;
}

CheckReport verify_stationary_bounds(const StationarySolveReport& report, const OperatorSet& ops,
                                     const CbfParams& p, const Superpotential& j,
                                     const TraceOperator& tr, const DualVector& f) {
    const SpaceSpec& sp = *ops.space;
    CheckReport rep;
    rep.tag = "stationary_bounds";
    double C_psi = C1_constant(j.C0(), tr.meas_gamma());
    double mu_tilde = p.mu - C_psi * tr.op_norm * tr.op_norm;
    if (!(mu_tilde > 0.0)) {
        rep.skipped = true;
        rep.passed = true;
        rep.detail = "mu_tilde <= 0: bounds not claimed";
        return rep;
    }
    if (!report.converged) {
        rep.passed = false;
        rep.detail = "solve did not converge";
        return rep;
    }
    double fdual = dual_norm_V(sp, f);
    double load = C_psi * tr.op_norm + fdual;
    double vy = norm_V(sp, report.y);
    rep.lhs = vy;
    rep.bound1 = load / mu_tilde;
    bool ok = vy <= rep.bound1 + 1e-10 * (1.0 + rep.bound1);
    if (p.beta > 0.0) {
        double lr = std::pow(norm_Lp(sp, report.y, p.r + 1.0), p.r + 1.0);
        rep.bound2 = load * load / (p.beta * mu_tilde);
        ok = ok && lr <= rep.bound2 + 1e-10 * (1.0 + rep.bound2);
        rep.detail = "V-bound and L^{r+1}-bound";
    } else {
        rep.detail = "V-bound only (beta = 0)";
    }
    rep.tolerance = 1e-10;
    rep.passed = ok;
    return rep;
}

CheckReport verify_inclusion(const StationarySolveReport& report, const Superpotential& j,
                             const TraceOperator& tr, double snap_tol) {
    CheckReport rep;
    rep.tag = "inclusion_feasibility";
    Vec xi = tr.trace(report.y);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        Interval iv = j.subdiff(xi[i], snap_tol);
        double v = report.eta.values[i];
        double dist = std::max(0.0, std::max(iv.lo - v, v - iv.hi));
        worst = std::max(worst, dist);
    }
    rep.lhs = worst;
    rep.tolerance = 1e-8;
    rep.passed = worst <= rep.tolerance;
    return rep;
}

CheckReport twin_solve_uniqueness(const OperatorSet& ops, const CbfParams& p,
                                  const Superpotential& j, const TraceOperator& tr,
                                  const DualVector& f, const State& seed1, const State& seed2,
                                  const SolveOptions& opts) {
    CheckReport rep;
    rep.tag = "uniqueness_twin";
    StationarySolveReport r1 = solve_stationary(ops, p, j, tr, f, opts, &seed1);
    StationarySolveReport r2 = solve_stationary(ops, p, j, tr, f, opts, &seed2);
    if (!r1.converged || !r2.converged) {
        rep.passed = false;
        rep.detail = "a twin solve did not converge";
        return rep;
    }
    State d(Vec(r1.y.coeffs - r2.y.coeffs));
    rep.lhs = norm_V(*ops.space, d);
    rep.tolerance = 1e-7;
    rep.passed = rep.lhs <= rep.tolerance;
    return rep;
}

}  // namespace cbf
