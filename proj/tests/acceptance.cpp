// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run on fixed seeds; every tolerance is pinned in code.

#include "cbf/cbf2d.hpp"
#include "cbf/config.hpp"
#include "cbf/harness.hpp"
#include "cbf/rothe.hpp"
#include "cbf/stationary.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace cbf;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
    int id;
    std::string name;
    bool passed;
    std::string detail;
    double seconds;
};

std::vector<Criterion> g_results;

void run(int id, const std::string& name, const std::function<bool(std::string&)>& body) {
    auto t0 = Clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    double sec = std::chrono::duration<double>(Clock::now() - t0).count();
    g_results.push_back({id, name, ok, detail, sec});
    std::printf("[%s] %2d %-34s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), sec);
    std::fflush(stdout);
}

State random_state(const SpaceSpec& sp, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec c(sp.n);
    for (Eigen::Index i = 0; i < sp.n; ++i) c[i] = scale * u(rng);
    return State(std::move(c));
}

double forcing_l2_sq(const SpaceSpec& sp, const ForcingFn& f, double T, int N) {
    constexpr double X[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                             0.8611363115940526};
    constexpr double W[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                             0.3478548451374538};
    double k = T / double(N), acc = 0.0;
    for (int i = 1; i <= N; ++i) {
        double mid = (double(i) - 0.5) * k;
        for (int q = 0; q < 4; ++q) {
            double nv = dual_norm_V(sp, f(mid + 0.5 * k * X[q]));
            acc += 0.5 * k * W[q] * nv * nv;
        }
    }
    return acc;
}

char buf_detail[256];

}  // namespace

int main() {
    BuiltSpace b32 = build_space(GridSpec{32, 32});
    BuiltSpace b16 = build_space(GridSpec{16, 16});

    // 1. Coercivity identity on 1000 random states, 32x32, < 10 s.
    run(1, "coercivity-identity", [&](std::string& detail) {
        auto t0 = Clock::now();
        std::mt19937_64 rng(101);
        CbfParams p{1.0, 0.5, 1.5, 3.0};
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            State y = random_state(*b32.space, rng);
            double lhs = pairing(apply_F(b32.ops, p, y), y);
            double v = norm_V(*b32.space, y), h = norm_H(*b32.space, y);
            double rhs = p.mu * v * v + p.alpha * h * h +
                         p.beta * std::pow(norm_Lp(*b32.space, y, p.r + 1.0), p.r + 1.0);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        }
        double sec = std::chrono::duration<double>(Clock::now() - t0).count();
        std::snprintf(buf_detail, sizeof(buf_detail), "max rel err %.2e, %.2fs", worst, sec);
        detail = buf_detail;
        return worst <= 1e-12 && sec < 10.0;
    });

    // 2. Skew symmetry of the convective form on 1000 random pairs.
    run(2, "skew-symmetry", [&](std::string& detail) {
        std::mt19937_64 rng(102);
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            State y = random_state(*b32.space, rng), z = random_state(*b32.space, rng);
            double bzz = pairing(apply_B(b32.ops, y, z), z);
            double scale = 1.0 + norm_V(*b32.space, y) * std::pow(norm_H(*b32.space, z), 2);
            worst = std::max(worst, std::abs(bzz) / scale);
        }
        std::snprintf(buf_detail, sizeof(buf_detail), "max |b(y,z,z)|/scale %.2e", worst);
        detail = buf_detail;
        return worst <= 1e-13;
    });

    // 3. Monotonicity suite.
    run(3, "monotonicity-suite", [&](std::string& detail) {
        std::mt19937_64 rng(103);
        for (double r : {1.0, 2.0, 3.0, 4.0, 5.0})
            for (int t = 0; t < 1000; ++t) {
                State y = random_state(*b16.space, rng), z = random_state(*b16.space, rng);
                if (!verify_monotonicity_C(b16.ops, y, z, r).passed) {
                    detail = "damping monotonicity failed at r=" + std::to_string(r);
                    return false;
                }
            }
        CbfParams p5{1.0, 0.1, 1.0, 5.0};
        if (rho_constant(p5) != 0.25) {
            detail = "rho(r=5, beta=mu=1) != 0.25";
            return false;
        }
        for (int t = 0; t < 500; ++t) {
            State y = random_state(*b16.space, rng), z = random_state(*b16.space, rng);
            if (!verify_local_monotonicity_F(b16.ops, p5, y, z).passed) {
                detail = "local monotonicity failed (r=5)";
                return false;
            }
        }
        CbfParams p3{0.6, 0.0, 1.0, 3.0};  // 2 beta mu = 1.2 >= 1
        for (int t = 0; t < 500; ++t) {
            State y = random_state(*b16.space, rng), z = random_state(*b16.space, rng);
            CheckReport rep = verify_local_monotonicity_F(b16.ops, p3, y, z);
            if (rep.skipped || !rep.passed) {
                detail = "critical global monotonicity failed";
                return false;
            }
        }
        CbfParams pweak{0.3, 0.0, 1.0, 3.0};  // 2 beta mu < 1: must be skipped
        State y = random_state(*b16.space, rng), z = random_state(*b16.space, rng);
        if (!verify_local_monotonicity_F(b16.ops, pweak, y, z).skipped) {
            detail = "sub-threshold critical case was asserted instead of skipped";
            return false;
        }
        detail = "5 exponents x 1000 pairs, rho = 0.25, 500+500 pairs";
        return true;
    });

    // 4. Gateaux finite-difference order.
    run(4, "gateaux-derivative", [&](std::string& detail) {
        std::mt19937_64 rng(104);
        State y = random_state(*b16.space, rng), z = random_state(*b16.space, rng);
        double worst_order = 10.0;
        for (double r : {1.0, 2.5, 4.0}) {
            double errs[3];
            int k = 0;
            for (double h : {1e-3, 1e-4, 1e-5}) {
                State yh(Vec(y.coeffs + h * z.coeffs));
                DualVector fd = (apply_C(b16.ops, yh, r) - apply_C(b16.ops, y, r)) / h;
                errs[k++] = (fd - gateaux_C(b16.ops, y, z, r)).norm();
            }
            if (r == 1.0) {
                // the r = 1 derivative is exact; only rounding noise remains
                if (errs[0] > 1e-8 || errs[2] > 1e-8) {
                    detail = "r=1 difference quotient is not exact";
                    return false;
                }
                continue;
            }
            for (int s = 0; s + 1 < 3; ++s)
                worst_order = std::min(worst_order, std::log10(errs[s] / errs[s + 1]));
        }
        std::snprintf(buf_detail, sizeof(buf_detail), "min observed order %.3f", worst_order);
        detail = buf_detail;
        return worst_order >= 0.9;
    });

    // 5. Rothe energy identities over 20 randomized runs.
    run(5, "rothe-energy-ledger", [&](std::string& detail) {
        auto t0 = Clock::now();
        SolveOptions opts;
        const double rs[3] = {2.0, 3.0, 5.0};
        double worst_ratio = 0.0;
        for (int runidx = 0; runidx < 20; ++runidx) {
            CbfParams p{1.0, 0.1, 1.0, rs[runidx % 3]};
            Superpotential law = make_superpotential("quadratic", {0.5});
            if (runidx % 3 == 1) law = make_superpotential("jump");
            if (runidx % 3 == 2) {
                law = make_superpotential("arctan");
                p.mu = 3.0;  // keeps mu - C_psi ||ell||^2 positive for C0 = pi
            }
            ForcingFn f = make_forcing(b16, p,
                                       ProfileSpec{"random", 0.4, "sine", 1.0},
                                       900 + std::uint64_t(runidx));
            State y0 = make_initial_state(b16, ProfileSpec{"random", 0.3, "constant", 1.0},
                                          1900 + std::uint64_t(runidx));
            RotheTrajectory traj =
                rothe_run(b16.ops, p, law, b16.trace, y0, f, 0.5, 50, opts);
            for (const EnergyRecord& rec : traj.energy)
                worst_ratio = std::max(worst_ratio, std::abs(rec.identity_residual) /
                                                        (10.0 * opts.newton_tol * (1.0 + rec.h2)));
            CheckReport led = energy_ledger_check(traj, b16.ops, p, law, b16.trace,
                                                  forcing_l2_sq(*b16.space, f, 0.5, 50));
            if (led.skipped || !led.passed) {
                detail = "cumulative bound failed on run " + std::to_string(runidx);
                return false;
            }
            if (!multiplier_bound_check(traj, b16.ops, law, b16.trace).passed) {
                detail = "multiplier bound failed on run " + std::to_string(runidx);
                return false;
            }
        }
        double sec = std::chrono::duration<double>(Clock::now() - t0).count();
        std::snprintf(buf_detail, sizeof(buf_detail),
                      "20 runs x 50 steps, worst residual/allowance %.3f, %.0fs", worst_ratio,
                      sec);
        detail = buf_detail;
        return worst_ratio <= 1.0 && sec < 300.0;
    });

    // 6. Interpolant-gap identity.
    run(6, "interpolant-gap", [&](std::string& detail) {
        CbfParams p{1.0, 0.1, 1.0, 3.0};
        Superpotential jump = make_superpotential("jump");
        ForcingFn f = make_forcing(b16, p, ProfileSpec{"random", 0.4, "sine", 1.0}, 600);
        State y0 = make_initial_state(b16, ProfileSpec{"random", 0.3, "constant", 1.0}, 601);
        RotheTrajectory traj = rothe_run(b16.ops, p, jump, b16.trace, y0, f, 0.5, 50);
        GapReport gap = interpolant_gap(traj, *b16.space);

        int bins_per_step = 1000 / traj.N;
        double brute = 0.0;
        for (int i = 1; i <= traj.N; ++i) {
            double a = (i - 1) * traj.k, h = traj.k / bins_per_step;
            const Vec& ybar = traj.snapshots[size_t(i)].coeffs;
            auto g = [&](double t) {
                State dd(Vec(ybar - eval_linear(traj, std::min(t, traj.T)).coeffs));
                return std::pow(norm_H(*b16.space, dd), 2);
            };
            for (int s = 0; s < bins_per_step; ++s) {
                double u0 = a + s * h, u2 = u0 + h;
                brute += h / 6.0 * (g(u0) + 4.0 * g(0.5 * (u0 + u2)) + g(u2));
            }
        }
        double rel_brute = std::abs(gap.gap_sq - brute) / (1.0 + std::abs(gap.gap_sq));
        double rel_pred = std::abs(gap.gap_sq - gap.predicted) / (1.0 + std::abs(gap.gap_sq));
        std::snprintf(buf_detail, sizeof(buf_detail), "vs brute %.2e, vs rate form %.2e",
                      rel_brute, rel_pred);
        detail = buf_detail;
        return rel_brute <= 1e-10 && rel_pred <= 1e-13;
    });

    // 7. Stationary bounds and manufactured recovery.
    run(7, "stationary-bounds", [&](std::string& detail) {
        CbfParams p{1.0, 0.1, 1.0, 3.0};
        Superpotential law = make_superpotential("quadratic", {0.1});
        for (int t = 0; t < 50; ++t) {
            State src = random_smooth_state(b16.grid, 700 + std::uint64_t(t), 0.4);
            DualVector f = apply_F(b16.ops, p, src);
            StationarySolveReport rep = solve_stationary(b16.ops, p, law, b16.trace, f);
            if (!rep.converged) {
                detail = "solve " + std::to_string(t) + " did not converge";
                return false;
            }
            CheckReport bounds = verify_stationary_bounds(rep, b16.ops, p, law, b16.trace, f);
            if (bounds.skipped || !bounds.passed) {
                detail = "a-priori bound failed on solve " + std::to_string(t);
                return false;
            }
        }
        Superpotential none = make_superpotential("none");
        auto [ystar, fstar] = manufactured_case(b16, p, "taylor-green");
        StationarySolveReport rec = solve_stationary(b16.ops, p, none, b16.trace, fstar);
        State d(Vec(rec.y.coeffs - ystar.coeffs));
        double err = norm_V(*b16.space, d);
        std::snprintf(buf_detail, sizeof(buf_detail), "50 solves, recovery err %.2e", err);
        detail = buf_detail;
        return rec.converged && err <= 1e-8;
    });

    // 8. Backward-Euler refinement.
    run(8, "backward-euler-refinement", [&](std::string& detail) {
        // linear subcase against the exact exponential decay of a pencil mode
        EigenEstimate ev =
            smallest_generalized_eigenvalue(b16.space->gram_V, b16.space->gram_H, 1e-12, 2000);
        if (!ev.converged) {
            detail = "pencil mode estimation failed";
            return false;
        }
        CbfParams lin{1.0, 0.0, 0.0, 3.0};
        double lam = lin.mu * ev.value;
        State v(ev.vector);
        v.coeffs /= norm_H(*b16.space, v);
        Superpotential none = make_superpotential("none");
        SolveOptions lopts;
        lopts.include_convection = false;
        double T = 2.0 / lam;
        ForcingFn fzero = [&](double) { return DualVector(Vec::Zero(b16.space->n)); };
        double errs[4];
        int k = 0;
        for (int N : {25, 50, 100, 200}) {
            RotheTrajectory tr = rothe_run(b16.ops, lin, none, b16.trace, v, fzero, T, N, lopts);
            double worst = 0.0;
            for (int i = 0; i <= N; ++i) {
                State ex(Vec(std::exp(-lam * i * tr.k) * v.coeffs));
                State d(Vec(tr.snapshots[size_t(i)].coeffs - ex.coeffs));
                worst = std::max(worst, norm_H(*b16.space, d));
            }
            errs[k++] = worst;
        }
        for (int s = 0; s < 3; ++s) {
            double ratio = errs[s] / errs[s + 1];
            if (ratio < 1.7 || ratio > 2.3) {
                std::snprintf(buf_detail, sizeof(buf_detail),
                              "linear ratio %.3f outside [1.7, 2.3]", ratio);
                detail = buf_detail;
                return false;
            }
        }

        // full nonlinear nonsmooth case: strict decrease of e_N and d_N
        CbfParams p{1.0, 0.1, 1.0, 3.0};
        Superpotential jump = make_superpotential("jump");
        ForcingFn f = make_forcing(b16, p, ProfileSpec{"taylor-green", 0.3, "sine", 1.0}, 800);
        State y0 = make_initial_state(b16, ProfileSpec{"shear", 4.0, "constant", 1.0}, 801);
        auto rows = convergence_study(b16.ops, p, jump, b16.trace, y0, f, 0.5, {25, 50, 100, 200});
        for (size_t i = 0; i + 2 < rows.size(); ++i)
            if (!(rows[i + 1].e_N < rows[i].e_N)) {
                detail = "nonlinear e_N not strictly decreasing";
                return false;
            }
        for (size_t i = 0; i + 1 < rows.size(); ++i)
            if (!(rows[i + 1].d_N < rows[i].d_N)) {
                detail = "energy-equality defect not strictly decreasing";
                return false;
            }
        std::snprintf(buf_detail, sizeof(buf_detail),
                      "linear ratios ~2, e_N %.1e->%.1e, d_N %.1e->%.1e", rows[0].e_N,
                      rows[rows.size() - 2].e_N, rows[0].d_N, rows.back().d_N);
        detail = buf_detail;
        return true;
    });

    // 9. Gronwall bound per regime + uniqueness sweep.
    run(9, "gronwall-and-sweep", [&](std::string& detail) {
        Superpotential law = make_superpotential("quadratic", {0.1});
        State y0 = make_initial_state(b16, ProfileSpec{"random", 0.4, "constant", 1.0}, 901);
        State delta = random_smooth_state(b16.grid, 902, 1e-3);
        State y0p(Vec(y0.coeffs + delta.coeffs));
        for (double r : {2.0, 3.0, 5.0}) {
            CbfParams p{1.0, 0.1, 1.0, r};
            ForcingFn f = make_forcing(b16, p, ProfileSpec{"random", 0.4, "sine", 1.0}, 903);
            ForcingFn f2 = [&f](double t) { return DualVector(1.002 * f(t)); };
            CheckReport ini = twin_run_gronwall(b16.ops, p, law, b16.trace, y0, f, y0p, f, 0.3, 15);
            CheckReport frc = twin_run_gronwall(b16.ops, p, law, b16.trace, y0, f, y0, f2, 0.3, 15);
            if (ini.skipped || !ini.passed || frc.skipped || !frc.passed) {
                detail = "continuous-dependence bound failed at r=" + std::to_string(r);
                return false;
            }
        }

        // sweep over mu at r = 3, beta = 1: agreement must hold above the
        // computed threshold on the 4-point grid
        CbfParams base{1.0, 0.1, 1.0, 3.0};
        DualVector f = apply_F(b16.ops, base, random_smooth_state(b16.grid, 904, 0.4));
        State seed1(Vec::Zero(b16.space->n));
        State seed2 = random_smooth_state(b16.grid, 905, 1.0);
        int above = 0;
        for (double mu : {0.2, 0.5, 1.0, 2.0}) {
            CbfParams p = base;
            p.mu = mu;
            ThresholdReport th = thresholds(p, b16.trace, law);
            if (p.mu > th.stationary_uniqueness_mu) {
                ++above;
                CheckReport twin =
                    twin_solve_uniqueness(b16.ops, p, law, b16.trace, f, seed1, seed2);
                if (!twin.passed) {
                    std::snprintf(buf_detail, sizeof(buf_detail),
                                  "twin solves disagree at mu=%.2f (threshold %.4f)", mu,
                                  th.stationary_uniqueness_mu);
                    detail = buf_detail;
                    return false;
                }
            }
        }
        std::snprintf(buf_detail, sizeof(buf_detail),
                      "3 regimes x 2 perturbations, %d sweep points above threshold", above);
        detail = buf_detail;
        return above >= 2;
    });

    // 10. Superpotential hypothesis verification.
    run(10, "superpotential-hypotheses", [&](std::string& detail) {
        for (const char* name : {"quadratic", "arctan", "jump"}) {
            Superpotential law = make_superpotential(name);
            std::vector<double> grid = default_verification_grid(law);
            try {
                law.validate();
                estimate_growth(law, grid);
                estimate_relaxed_monotonicity(law, grid);
            } catch (const std::exception& e) {
                detail = std::string(name) + " rejected: " + e.what();
                return false;
            }
        }
        Superpotential down = make_superpotential("downjump");
        double prev = 0.0;
        bool diverges = true;
        for (double gap : {1e-2, 1e-3, 1e-4}) {
            double m_hat = 0.0;
            try {
                estimate_relaxed_monotonicity(down, {-0.5 * gap, 0.5 * gap});
                detail = "downward jump was accepted";
                return false;
            } catch (const std::invalid_argument& e) {
                std::string msg = e.what();
                m_hat = std::stod(msg.substr(msg.find("m_hat = ") + 8));
            }
            if (prev > 0.0 && m_hat < 5.0 * prev) diverges = false;
            prev = m_hat;
        }
        if (!diverges) {
            detail = "m_hat did not diverge as the pair gap shrank";
            return false;
        }
        std::snprintf(buf_detail, sizeof(buf_detail),
                      "3 laws accepted; downjump rejected, m_hat -> %.0f", prev);
        detail = buf_detail;
        return true;
    });

    int failures = 0;
    for (const Criterion& c : g_results)
        if (!c.passed) ++failures;
    std::printf("%d/%zu criteria passed\n", int(g_results.size()) - failures, g_results.size());
    return failures == 0 ? 0 : 1;
}
