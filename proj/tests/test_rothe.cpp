#include "cbf/rothe.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cbf;
using namespace cbf::testing;

namespace {

ForcingFn zero_forcing(const SpaceSpec& sp) {
    Eigen::Index n = sp.n;
    return [n](double) { return DualVector(Vec::Zero(n)); };
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

}  // namespace

TEST_CASE("discretize_forcing: constant, linear ramp, Jensen bound") {
    const BuiltSpace& b = shared_built(16);
    const SpaceSpec& sp = *b.space;
    DualVector f0 = mass_apply(b.ops, random_smooth_state(b.grid, 70, 1.0));

    auto cf = discretize_forcing([&](double) { return f0; }, 1.0, 5, sp.n);
    for (const DualVector& fi : cf) CHECK((fi - f0).norm() <= 1e-14 * f0.norm());

    double k = 0.2;
    auto lf = discretize_forcing([&](double t) { return DualVector(t * f0); }, k, 1, sp.n);
    CHECK((lf[0] - 0.5 * k * f0).norm() <= 1e-14 * f0.norm());

    // sum k ||f_i||^2 <= integral ||f||^2 (+ quadrature error) for smooth f
    ForcingFn smoothf = [&](double t) { return DualVector(std::sin(3.0 * t + 0.4) * f0); };
    int N = 20;
    double T = 1.0;
    auto fs = discretize_forcing(smoothf, T, N, sp.n);
    double lhs = 0.0;
    for (const DualVector& fi : fs) {
        double dn = dual_norm_V(sp, fi);
        lhs += (T / N) * dn * dn;
    }
    CHECK(lhs <= forcing_l2_sq(sp, smoothf, T, N) + 1e-8);
}

TEST_CASE("initial approximation is the identity with a recorded constant") {
    const BuiltSpace& b = shared_built(16);
    State y0 = random_smooth_state(b.grid, 71, 1.0);
    State ap = initial_approximation(y0);
    CHECK((ap.coeffs - y0.coeffs).norm() == 0.0);

    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential none = make_superpotential("none");
    RotheTrajectory tr =
        rothe_run(b.ops, p, none, b.trace, y0, zero_forcing(*b.space), 0.25, 5);
    CHECK(tr.init_growth_constant > 0.0);

    // projection of a fixed smooth field is stable in the H-norm under grid
    // refinement (second-order approach to the continuum value)
    double vals[3];
    int k = 0;
    for (int n : {8, 16, 32}) {
        BuiltSpace bb = build_space(GridSpec{n, n});
        State y = sample_stream(bb.grid, [](double x, double yv) {
            return std::sin(3.1 * x + 0.2) * std::sin(2.7 * yv + 0.4);
        });
        vals[k++] = norm_H(*bb.space, y);
    }
    CHECK(std::abs(vals[2] - vals[1]) <= 0.3 * std::abs(vals[1] - vals[0]));
}

TEST_CASE("rothe_step: trivial, manufactured fixed point, dissipation") {
    const BuiltSpace& b = shared_built(16);
    const SpaceSpec& sp = *b.space;
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential none = make_superpotential("none");
    Superpotential jump = make_superpotential("jump");
    double k = 0.02;

    State zero(Vec::Zero(sp.n));
    RotheStepResult triv =
        rothe_step(b.ops, p, none, b.trace, zero, Vec::Zero(sp.n), k);
    CHECK(triv.report.converged);
    CHECK(norm_H(sp, triv.y) <= 1e-12);

    auto [ystar, fstar] = manufactured_case(b, p, "taylor-green");
    RotheStepResult fix = rothe_step(b.ops, p, none, b.trace, ystar, fstar, k);
    REQUIRE(fix.report.converged);
    State d(Vec(fix.y.coeffs - ystar.coeffs));
    CHECK(norm_V(sp, d) <= 1e-7);

    // stationary data keeps the whole trajectory at the fixed point
    ForcingFn fconst = [&, fs = fstar](double) { return fs; };
    RotheTrajectory ftraj = rothe_run(b.ops, p, none, b.trace, ystar, fconst, 0.2, 8);
    for (const State& s : ftraj.snapshots) {
        State dd(Vec(s.coeffs - ystar.coeffs));
        CHECK(norm_V(sp, dd) <= 1e-7);
    }

    // monotone law with 0 in its subdifferential at 0 dissipates energy
    State y = random_smooth_state(b.grid, 72, 0.5);
    for (int i = 0; i < 5; ++i) {
        RotheStepResult st = rothe_step(b.ops, p, jump, b.trace, y, Vec::Zero(sp.n), k);
        REQUIRE(st.report.converged);
        CHECK(norm_H(sp, st.y) <= norm_H(sp, y) * (1.0 + 1e-12));
        y = st.y;
    }
}

TEST_CASE("rothe_run: trivial cases and the energy ledger") {
    const BuiltSpace& b = shared_built(16);
    const SpaceSpec& sp = *b.space;
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential none = make_superpotential("none");

    RotheTrajectory z =
        rothe_run(b.ops, p, none, b.trace, State(Vec::Zero(sp.n)), zero_forcing(sp), 0.5, 4);
    z.validate();
    for (const State& s : z.snapshots) CHECK(norm_H(sp, s) <= 1e-12);
    for (const EnergyRecord& rec : z.energy) CHECK(std::abs(rec.identity_residual) <= 1e-12);

    // N = 1 reduces to a single step
    State y0 = random_smooth_state(b.grid, 73, 0.4);
    ForcingFn f = [&](double) {
        return DualVector(mass_apply(b.ops, random_smooth_state(b.grid, 74, 0.2)));
    };
    RotheTrajectory one = rothe_run(b.ops, p, none, b.trace, y0, f, 0.1, 1);
    auto fs = discretize_forcing(f, 0.1, 1, sp.n);
    RotheStepResult st = rothe_step(b.ops, p, none, b.trace, y0, fs[0], 0.1);
    CHECK((one.snapshots[1].coeffs - st.y.coeffs).norm() <= 1e-12);

    // smooth forcing: per-step identity residuals within the solver allowance
    Superpotential arct = make_superpotential("arctan", {0.5});
    SolveOptions opts;
    RotheTrajectory tr = rothe_run(b.ops, p, arct, b.trace, y0, f, 0.5, 50, opts);
    for (const EnergyRecord& rec : tr.energy)
        CHECK(std::abs(rec.identity_residual) <= 10.0 * opts.newton_tol * (1.0 + rec.h2));
    CheckReport led =
        energy_ledger_check(tr, b.ops, p, arct, b.trace, forcing_l2_sq(sp, f, 0.5, 50));
    CHECK(!led.skipped);
    CHECK(led.passed);
    CHECK(multiplier_bound_check(tr, b.ops, arct, b.trace).passed);

    // monotone nonincreasing H-norm with zero data and a monotone law
    Superpotential jump = make_superpotential("jump");
    RotheTrajectory decay = rothe_run(b.ops, p, jump, b.trace, y0, zero_forcing(sp), 0.5, 20);
    for (size_t i = 1; i < decay.snapshots.size(); ++i)
        CHECK(norm_H(sp, decay.snapshots[i]) <=
              norm_H(sp, decay.snapshots[i - 1]) * (1.0 + 1e-12));
}

TEST_CASE("interpolants: knots, midpoints, t = 0") {
    const BuiltSpace& b = shared_built(16);
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential none = make_superpotential("none");
    State y0 = random_smooth_state(b.grid, 75, 0.5);
    ForcingFn f = [&](double t) {
        return DualVector(std::cos(t) * mass_apply(b.ops, random_smooth_state(b.grid, 76, 0.3)));
    };
    RotheTrajectory tr = rothe_run(b.ops, p, none, b.trace, y0, f, 0.4, 8);

    for (int i = 0; i <= 8; ++i) {
        double t = i * tr.k;
        CHECK((eval_linear(tr, t).coeffs - tr.snapshots[size_t(i)].coeffs).norm() <= 1e-12);
        CHECK((eval_constant(tr, t).coeffs - tr.snapshots[size_t(i)].coeffs).norm() == 0.0);
    }
    for (int i = 1; i <= 8; ++i) {
        double t = (i - 0.5) * tr.k;
        Vec mid = 0.5 * (tr.snapshots[size_t(i)].coeffs + tr.snapshots[size_t(i) - 1].coeffs);
        CHECK((eval_linear(tr, t).coeffs - mid).norm() <= 1e-12 * (1.0 + mid.norm()));
        CHECK((eval_constant(tr, t).coeffs - tr.snapshots[size_t(i)].coeffs).norm() == 0.0);
    }
    CHECK((eval_constant(tr, 0.0).coeffs - tr.snapshots[0].coeffs).norm() == 0.0);
    CHECK_THROWS_AS(eval_linear(tr, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(eval_constant(tr, 0.5), std::invalid_argument);
}

TEST_CASE("interpolant gap: closed form, rate identity, brute force") {
    const BuiltSpace& b = shared_built(16);
    const SpaceSpec& sp = *b.space;
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential none = make_superpotential("none");
    State y0 = random_smooth_state(b.grid, 77, 0.5);
    ForcingFn f = [&](double t) {
        return DualVector((1.0 + std::sin(4.0 * t)) *
                          mass_apply(b.ops, random_smooth_state(b.grid, 78, 0.3)));
    };

    // constant trajectory: gap 0
    RotheTrajectory c =
        rothe_run(b.ops, p, none, b.trace, State(Vec::Zero(sp.n)), zero_forcing(sp), 0.3, 3);
    CHECK(interpolant_gap(c, sp).gap_sq <= 1e-24);

    // N = 1: gap = (k/3) ||y1 - y0||_H^2
    RotheTrajectory one = rothe_run(b.ops, p, none, b.trace, y0, f, 0.1, 1);
    State d(Vec(one.snapshots[1].coeffs - one.snapshots[0].coeffs));
    double expected = 0.1 / 3.0 * std::pow(norm_H(sp, d), 2);
    CHECK(interpolant_gap(one, sp).gap_sq == doctest::Approx(expected).epsilon(1e-13));

    RotheTrajectory tr = rothe_run(b.ops, p, none, b.trace, y0, f, 0.5, 25);
    GapReport gap = interpolant_gap(tr, sp);
    CHECK(std::abs(gap.gap_sq - gap.predicted) <= 1e-13 * (1.0 + std::abs(gap.gap_sq)));

    // Brute-force time quadrature: composite Simpson per step, 1000 bins in
    // total. The piecewise-constant interpolant is sampled by its a.e. value
    // on the open-left segment (the step's snapshot).
    int bins_per_step = 1000 / tr.N;
    double brute = 0.0;
    for (int i = 1; i <= tr.N; ++i) {
        double a = (i - 1) * tr.k, h = tr.k / bins_per_step;
        const Vec& ybar = tr.snapshots[size_t(i)].coeffs;
        auto g = [&](double t) {
            State dd(Vec(ybar - eval_linear(tr, std::min(t, tr.T)).coeffs));
            return std::pow(norm_H(sp, dd), 2);
        };
        for (int s = 0; s < bins_per_step; ++s) {
            double t0 = a + s * h, t2 = t0 + h, t1 = 0.5 * (t0 + t2);
            brute += h / 6.0 * (g(t0) + 4.0 * g(t1) + g(t2));
        }
    }
    CHECK(gap.gap_sq == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("convergence study: backward-Euler refinement on calm data") {
    const BuiltSpace& b = shared_built(16);
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential jump = make_superpotential("jump");
    ProfileSpec fp{"taylor-green", 0.3, "sine", 1.0};
    ProfileSpec ip{"shear", 4.0, "constant", 1.0};
    ForcingFn f = make_forcing(b, p, fp, 42);
    State y0 = make_initial_state(b, ip, 43);
    auto rows = convergence_study(b.ops, p, jump, b.trace, y0, f, 0.5, {10, 20, 40, 80});
    REQUIRE(rows.size() == 4);
    for (size_t i = 0; i + 2 < rows.size(); ++i) CHECK(rows[i + 1].e_N < rows[i].e_N);
    for (size_t i = 0; i + 1 < rows.size(); ++i) CHECK(rows[i + 1].d_N < rows[i].d_N);
    // stationary data: e_N = 0 for all N
    auto [ystar, fstar] = manufactured_case(b, p, "taylor-green");
    ForcingFn fconst = [&, fs = fstar](double) { return fs; };
    Superpotential none = make_superpotential("none");
    auto srows = convergence_study(b.ops, p, none, b.trace, ystar, fconst, 0.2, {4, 8, 16});
    for (size_t i = 0; i + 1 < srows.size(); ++i) CHECK(srows[i].e_N <= 1e-7);
}

TEST_CASE("twin-run continuous dependence") {
    const BuiltSpace& b = shared_built(16);
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential arct = make_superpotential("arctan", {0.5});
    State y0 = random_smooth_state(b.grid, 79, 0.4);
    ForcingFn f = make_forcing(b, p, ProfileSpec{"random", 0.4, "sine", 1.0}, 80);

    // identical data: left side vanishes
    CheckReport same = twin_run_gronwall(b.ops, p, arct, b.trace, y0, f, y0, f, 0.3, 10);
    CHECK(!same.skipped);
    CHECK(same.lhs <= 1e-16);

    // perturbed initial data in each covered regime
    State delta = random_smooth_state(b.grid, 81, 1e-3);
    State y0p(Vec(y0.coeffs + delta.coeffs));
    for (double r : {2.0, 3.0, 5.0}) {
        CbfParams pr = p;
        pr.r = r;
        CheckReport rep = twin_run_gronwall(b.ops, pr, arct, b.trace, y0, f, y0p, f, 0.3, 10);
        CHECK(!rep.skipped);
        CHECK(rep.passed);
    }

    // perturbed forcing, d = 2, r = 2
    CbfParams p2 = p;
    p2.r = 2.0;
    ForcingFn f2 = [&](double t) { return DualVector(1.002 * f(t)); };
    CheckReport fp_rep = twin_run_gronwall(b.ops, p2, arct, b.trace, y0, f, y0, f2, 0.3, 10);
    CHECK(!fp_rep.skipped);
    CHECK(fp_rep.passed);

    // regime condition unmet: r = 3 with tiny mu
    CbfParams weak{0.3, 0.1, 1.0, 3.0};
    CheckReport skip = twin_run_gronwall(b.ops, weak, arct, b.trace, y0, f, y0p, f, 0.3, 5);
    CHECK(skip.skipped);
}

TEST_CASE("an unreachable inner tolerance aborts the trajectory") {
    const BuiltSpace& b = shared_built(16);
    CbfParams p{1.0, 0.1, 1.0, 3.0};
    Superpotential arct = make_superpotential("arctan");
    State y0 = random_smooth_state(b.grid, 82, 0.4);
    ForcingFn f = [&](double) {
        return DualVector(mass_apply(b.ops, random_smooth_state(b.grid, 83, 0.3)));
    };
    SolveOptions opts;
    opts.newton_tol = 1e-30;
    opts.max_iters = 5;
    CHECK_THROWS_AS(rothe_run(b.ops, p, arct, b.trace, y0, f, 0.1, 2, opts),
                    std::runtime_error);
}

TEST_CASE("trajectory validation") {
    RotheTrajectory bad;
    bad.N = 3;
    bad.k = 0.1;
    bad.T = 0.5;
    bad.snapshots.resize(4);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
