#include "cbf/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace cbf {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir + "/" + name);
    if (!os) throw std::runtime_error("cannot open output file " + dir + "/" + name);
    return os;
}

State random_state(const SpaceSpec& sp, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec c(sp.n);
    for (Eigen::Index i = 0; i < sp.n; ++i) c[i] = scale * u(rng);
    return State(std::move(c));
}

ResultRow from_check(const CheckReport& rep, const std::string& case_id) {
    ResultRow row;
    row.tag = rep.tag;
    row.case_id = case_id;
    row.lhs = rep.lhs;
    row.bound1 = rep.bound1;
    row.bound2 = rep.bound2;
    row.passed = rep.passed;
    row.skipped = rep.skipped;
    row.detail = rep.detail;
    return row;
}

int exit_for(const std::vector<ResultRow>& rows) {
    for (const ResultRow& r : rows)
        if (!r.passed && !r.skipped) return kExitCheckFailure;
    return kExitOk;
}

/// Run tasks 0..count-1 over a bounded pool; results merged by task index.
/// The first worker exception is rethrown on the caller after the join.
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

void write_rows_csv(const std::string& path, const ExperimentConfig& cfg,
                    const std::vector<ResultRow>& rows) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path().string().empty()
                                            ? "."
                                            : std::filesystem::path(path).parent_path().string());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open output file " + path);
    os << "config_hash,tag,case,lhs,bound1,bound2,passed,skipped,detail\n";
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)cfg.hash());
    for (const ResultRow& r : rows)
        os << hash << "," << r.tag << "," << r.case_id << "," << fmt(r.lhs) << ","
           << fmt(r.bound1) << "," << fmt(r.bound2) << "," << (r.passed ? 1 : 0) << ","
           << (r.skipped ? 1 : 0) << "," << r.detail << "\n";
}

CommandResult cmd_verify_operators(const ExperimentConfig& cfg) {
    CommandResult out;
    BuiltSpace built = build_space(GridSpec{cfg.nx, cfg.ny});
    built.space->validate();
    const SpaceSpec& sp = *built.space;
    const OperatorSet& ops = built.ops;
    std::mt19937_64 rng(cfg.seed);
    const int trials = cfg.trials;

    // Coercivity identity <F(y), y> = mu ||y||_V^2 + alpha ||y||_H^2 +
    // beta ||y||_{L^{r+1}}^{r+1}, exact because <B(y,y), y> vanishes.
    {
        double worst = 0.0;
        int worst_trial = -1;
        for (int t = 0; t < trials; ++t) {
            State y = random_state(sp, rng);
            double lhs = pairing(apply_F(ops, cfg.params, y), y);
            double vy = norm_V(sp, y), hy = norm_H(sp, y);
            double rhs = cfg.params.mu * vy * vy + cfg.params.alpha * hy * hy +
                         cfg.params.beta *
                             std::pow(norm_Lp(sp, y, cfg.params.r + 1.0), cfg.params.r + 1.0);
            double rel = std::abs(lhs - rhs) / (1.0 + std::abs(rhs));
            if (rel > worst) {
                worst = rel;
                worst_trial = t;
            }
        }
        ResultRow row;
        row.tag = "coercivity_identity";
        row.case_id = "trials=" + std::to_string(trials) + ";seed=" + std::to_string(cfg.seed);
        row.lhs = worst;
        row.bound1 = 1e-12;
        row.passed = worst <= 1e-12;
        if (!row.passed) row.detail = "worst trial " + std::to_string(worst_trial);
        out.rows.push_back(row);
    }

    // Skew symmetry of the convective form.
    {
        double worst = 0.0;
        int worst_trial = -1;
        for (int t = 0; t < trials; ++t) {
            State y = random_state(sp, rng), z = random_state(sp, rng);
            double bzz = pairing(apply_B(ops, y, z), z);
            double scale = 1.0 + norm_V(sp, y) * std::pow(norm_H(sp, z), 2);
            double rel = std::abs(bzz) / scale;
            if (rel > worst) {
                worst = rel;
                worst_trial = t;
            }
        }
        ResultRow row;
        row.tag = "skew_symmetry";
        row.case_id = "trials=" + std::to_string(trials);
        row.lhs = worst;
        row.bound1 = 1e-13;
        row.passed = worst <= 1e-13;
        if (!row.passed) row.detail = "worst trial " + std::to_string(worst_trial);
        out.rows.push_back(row);
    }

    // Antisymmetry in the last two arguments.
    {
        double worst = 0.0;
        for (int t = 0; t < std::min(trials, 200); ++t) {
            State y = random_state(sp, rng), z = random_state(sp, rng), w = random_state(sp, rng);
            double a = pairing(apply_B(ops, y, z), w);
            double b = pairing(apply_B(ops, y, w), z);
            worst = std::max(worst, std::abs(a + b) / (1.0 + std::abs(a) + std::abs(b)));
        }
        ResultRow row;
        row.tag = "swap_antisymmetry";
        row.case_id = "trials=" + std::to_string(std::min(trials, 200));
        row.lhs = worst;
        row.bound1 = 1e-13;
        row.passed = worst <= 1e-13;
        out.rows.push_back(row);
    }

    // Damping monotonicity (both lower bounds) at r from the config and the
    // standard sweep values.
    for (double r : {1.0, 2.0, 3.0, 4.0, 5.0, cfg.params.r}) {
        bool ok = true;
        int bad = -1;
        for (int t = 0; t < trials; ++t) {
            State y = random_state(sp, rng), z = random_state(sp, rng);
            CheckReport rep = verify_monotonicity_C(ops, y, z, r);
            if (!rep.passed) {
                ok = false;
                bad = t;
                break;
            }
        }
        ResultRow row;
        row.tag = "damping_monotonicity";
        row.case_id = "r=" + fmt(r);
        row.passed = ok;
        if (!ok) row.detail = "failed at trial " + std::to_string(bad);
        out.rows.push_back(row);
    }

    // Local (and critical global) monotonicity of F at the config parameters.
    {
        bool ok = true;
        bool skipped = true;
        int bad = -1;
        for (int t = 0; t < std::max(1, trials / 2); ++t) {
            State y = random_state(sp, rng), z = random_state(sp, rng);
            CheckReport rep = verify_local_monotonicity_F(ops, cfg.params, y, z);
            skipped = rep.skipped;
            if (rep.skipped) break;
            if (!rep.passed) {
                ok = false;
                bad = t;
                break;
            }
        }
        ResultRow row;
        row.tag = "local_monotonicity";
        row.case_id = "mu=" + fmt(cfg.params.mu) + ";beta=" + fmt(cfg.params.beta) +
                      ";r=" + fmt(cfg.params.r);
        row.passed = ok;
        row.skipped = skipped;
        if (!ok) row.detail = "failed at trial " + std::to_string(bad);
        out.rows.push_back(row);
    }

    // Finite-difference probe of the damping derivative. At r = 1 the
    // difference quotient is exact and only rounding noise remains.
    {
        std::mt19937_64 rng_fd(cfg.seed + 17);
        State y = random_state(sp, rng_fd), z = random_state(sp, rng_fd);
        double r = cfg.params.r;
        double e_prev = 0.0;
        bool ok = true;
        double order = 0.0;
        double h1 = 1e-3, h2 = 1e-4;
        for (double h : {h1, h2}) {
            State yh(Vec(y.coeffs + h * z.coeffs));
            DualVector fd = (apply_C(ops, yh, r) - apply_C(ops, y, r)) / h;
            double err = (fd - gateaux_C(ops, y, z, r)).norm();
            if (h == h1)
                e_prev = err;
            else if (err > 1e-14)
                order = std::log10(e_prev / err);
        }
        ok = (e_prev <= 1e-8) || order >= 0.9;
        ResultRow row;
        row.tag = "gateaux_fd";
        row.case_id = "r=" + fmt(r);
        row.lhs = order;
        row.bound1 = 0.9;
        row.passed = ok;
        out.rows.push_back(row);
    }

    write_rows_csv(cfg.out_dir + "/operators.csv", cfg, out.rows);
    out.exit_code = exit_for(out.rows);
    return out;
}

CommandResult cmd_solve_stationary(const ExperimentConfig& cfg) {
    CommandResult out;
    BuiltSpace built = build_space(GridSpec{cfg.nx, cfg.ny});
    Superpotential j = cfg.superpotential();
    // stationary solves use the unmodulated forcing shape
    ProfileSpec shape = cfg.forcing;
    shape.modulation = "constant";
    DualVector f = make_forcing(built, cfg.params, shape, cfg.seed)(0.0);
    SolveOptions opts = cfg.solve_options();
    StationarySolveReport rep = solve_stationary(built.ops, cfg.params, j, built.trace, f, opts);

    {
        std::ofstream os = open_out(cfg.out_dir, "stationary_newton.csv");
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)cfg.hash());
        os << "config_hash,tag,eps,iter,residual,step_norm\n";
        for (const NewtonIterRecord& it : rep.ledger)
            os << hash << ",newton_iteration," << fmt(it.eps) << "," << it.iter << ","
               << fmt(it.residual) << "," << fmt(it.step_norm) << "\n";
    }

    ResultRow conv;
    conv.tag = "stationary_converged";
    conv.lhs = rep.residual;
    conv.bound1 = opts.newton_tol;
    conv.passed = rep.converged;
    conv.detail = rep.warning;
    out.rows.push_back(conv);
    if (!rep.converged) {
        write_rows_csv(cfg.out_dir + "/stationary.csv", cfg, out.rows);
        out.exit_code = kExitSolverFailure;
        out.message = "stationary solve did not converge";
        return out;
    }
    out.rows.push_back(
        from_check(verify_stationary_bounds(rep, built.ops, cfg.params, j, built.trace, f), ""));
    out.rows.push_back(
        from_check(verify_inclusion(rep, j, built.trace, opts.eps_schedule.back()), ""));
    write_rows_csv(cfg.out_dir + "/stationary.csv", cfg, out.rows);
    out.exit_code = exit_for(out.rows);
    return out;
}

namespace {

void write_trajectory_csv(const std::string& dir, const ExperimentConfig& cfg,
                          const RotheTrajectory& traj, const BuiltSpace& built) {
    std::ofstream os = open_out(dir, "trajectory.csv");
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)cfg.hash());
    os << "config_hash,tag,i,t,norm_H,norm_V,norm_Lr1,eta_pair,identity_residual\n";
    const SpaceSpec& sp = *built.space;
    for (int i = 0; i <= traj.N; ++i) {
        const State& y = traj.snapshots[size_t(i)];
        double nh = norm_H(sp, y), nv = norm_V(sp, y);
        double nl = norm_Lp(sp, y, cfg.params.r + 1.0);
        double ep = i > 0 ? traj.energy[size_t(i) - 1].eta_pair : 0.0;
        double res = i > 0 ? traj.energy[size_t(i) - 1].identity_residual : 0.0;
        os << hash << ",energy_identity," << i << "," << fmt(double(i) * traj.k) << ","
           << fmt(nh) << "," << fmt(nv) << "," << fmt(nl) << "," << fmt(ep) << "," << fmt(res)
           << "\n";
    }
    std::ofstream snap = open_out(dir, "snapshots.csv");
    snap << "config_hash,tag,i,dof,value\n";
    std::string snap_prefix = std::string(hash) + ",snapshot,";
    for (int i = 0; i <= traj.N; ++i)
        for (Eigen::Index d = 0; d < sp.n; ++d)
            snap << snap_prefix << i << "," << d << ","
                 << fmt(traj.snapshots[size_t(i)].coeffs[d]) << "\n";
}

double forcing_l2_sq(const BuiltSpace& built, const ForcingFn& f, double T, int N) {
    // Gauss-4 time quadrature of ||f(t)||_{V'}^2 per step.
    constexpr double X[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                             0.8611363115940526};
    constexpr double W[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                             0.3478548451374538};
    double k = T / double(N);
    double acc = 0.0;
    for (int i = 1; i <= N; ++i) {
        double mid = (double(i) - 0.5) * k;
        for (int q = 0; q < 4; ++q) {
            double nv = dual_norm_V(*built.space, f(mid + 0.5 * k * X[q]));
            acc += 0.5 * k * W[q] * nv * nv;
        }
    }
    return acc;
}

}  // namespace

CommandResult cmd_run_rothe(const ExperimentConfig& cfg) {
    CommandResult out;
    BuiltSpace built = build_space(GridSpec{cfg.nx, cfg.ny});
    Superpotential j = cfg.superpotential();
    ForcingFn f = make_forcing(built, cfg.params, cfg.forcing, cfg.seed);
    State y0 = make_initial_state(built, cfg.initial, cfg.seed + 1);
    SolveOptions opts = cfg.solve_options();

    ThresholdReport th = thresholds(cfg.params, built.trace, j);
    if (!th.rothe_wellposed) {
        ResultRow warn;
        warn.tag = "threshold_warning";
        warn.skipped = true;
        warn.passed = true;
        warn.lhs = th.mu_tilde;
        warn.detail = "mu_tilde <= 0: coercivity margin not established";
        out.rows.push_back(warn);
    }

    RotheTrajectory traj;
    try {
        traj = rothe_run(built.ops, cfg.params, j, built.trace, y0, f, cfg.T, cfg.N, opts);
    } catch (const std::exception& e) {
        out.exit_code = kExitSolverFailure;
        out.message = e.what();
        ResultRow row;
        row.tag = "rothe_run";
        row.passed = false;
        row.detail = e.what();
        out.rows.push_back(row);
        write_rows_csv(cfg.out_dir + "/rothe.csv", cfg, out.rows);
        return out;
    }
    write_trajectory_csv(cfg.out_dir, cfg, traj, built);

    double fl2 = forcing_l2_sq(built, f, cfg.T, cfg.N);
    out.rows.push_back(from_check(energy_ledger_check(traj, built.ops, cfg.params, j, built.trace, fl2), ""));
    out.rows.push_back(from_check(multiplier_bound_check(traj, built.ops, j, built.trace), ""));
    GapReport gap = interpolant_gap(traj, *built.space);
    ResultRow grow;
    grow.tag = "interpolant_gap";
    grow.lhs = gap.gap_sq;
    grow.bound1 = gap.predicted;
    grow.passed = std::abs(gap.gap_sq - gap.predicted) <= 1e-13 * (1.0 + std::abs(gap.gap_sq));
    out.rows.push_back(grow);
    write_rows_csv(cfg.out_dir + "/rothe.csv", cfg, out.rows);
    out.exit_code = exit_for(out.rows);
    return out;
}

CommandResult cmd_convergence(const ExperimentConfig& cfg) {
    CommandResult out;
    if (cfg.N_list.size() < 3)
        throw std::invalid_argument("convergence: need N_list with at least three values");
    BuiltSpace built = build_space(GridSpec{cfg.nx, cfg.ny});
    Superpotential j = cfg.superpotential();
    ForcingFn f = make_forcing(built, cfg.params, cfg.forcing, cfg.seed);
    State y0 = make_initial_state(built, cfg.initial, cfg.seed + 1);
    SolveOptions opts = cfg.solve_options();

    // Fan independent runs over the worker pool, then compare in order.
    std::vector<RotheTrajectory> runs(cfg.N_list.size());
    parallel_for(int(cfg.N_list.size()), cfg.jobs, [&](int i) {
        runs[size_t(i)] =
            rothe_run(built.ops, cfg.params, j, built.trace, y0, f, cfg.T, cfg.N_list[size_t(i)], opts);
    });

    const SpaceSpec& sp = *built.space;
    std::vector<ConvergenceRow> rows;
    for (size_t a = 0; a < runs.size(); ++a) {
        ConvergenceRow row;
        row.N = cfg.N_list[a];
        // trapezoidal energy-equality defect
        row.d_N = 0.0;
        {
            const RotheTrajectory& tr = runs[a];
            std::vector<double> diss(size_t(tr.N) + 1), bnd(size_t(tr.N) + 1),
                frc(size_t(tr.N) + 1);
            for (int i = 0; i <= tr.N; ++i) {
                const State& y = tr.snapshots[size_t(i)];
                double v2 = std::pow(norm_V(sp, y), 2), h2 = std::pow(norm_H(sp, y), 2);
                double lr = std::pow(norm_Lp(sp, y, cfg.params.r + 1.0), cfg.params.r + 1.0);
                diss[size_t(i)] =
                    cfg.params.mu * v2 + cfg.params.alpha * h2 + cfg.params.beta * lr;
                const Vec& eta = tr.multipliers[size_t(std::max(i, 1)) - 1];
                bnd[size_t(i)] = built.trace.boundary_pairing(eta, built.trace.trace(y));
                frc[size_t(i)] = pairing(f(std::min(double(i) * tr.k, tr.T)), y);
            }
            double acc = 0.0;
            for (int i = 0; i < tr.N; ++i)
                acc += 0.5 * tr.k *
                       (diss[size_t(i)] + diss[size_t(i) + 1] + bnd[size_t(i)] + bnd[size_t(i) + 1] -
                        frc[size_t(i)] - frc[size_t(i) + 1]);
            double h2T = std::pow(norm_H(sp, tr.snapshots[size_t(tr.N)]), 2);
            double h20 = std::pow(norm_H(sp, tr.snapshots[0]), 2);
            row.d_N = std::abs(h2T - h20 + 2.0 * acc);
        }
        if (a + 1 < runs.size()) {
            if (cfg.N_list[a + 1] % cfg.N_list[a] != 0)
                throw std::invalid_argument("convergence: N_list must be nested");
            int ratio = cfg.N_list[a + 1] / cfg.N_list[a];
            double worst = 0.0;
            for (int i = 0; i <= cfg.N_list[a]; ++i) {
                State d(Vec(runs[a].snapshots[size_t(i)].coeffs -
                            runs[a + 1].snapshots[size_t(i * ratio)].coeffs));
                worst = std::max(worst, norm_H(sp, d));
            }
            row.e_N = worst;
        }
        rows.push_back(row);
    }

    std::ofstream os = open_out(cfg.out_dir, "convergence.csv");
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", (unsigned long long)cfg.hash());
    os << "config_hash,tag,N,e_N,d_N\n";
    for (const ConvergenceRow& r : rows)
        os << hash << ",refinement," << r.N << "," << fmt(r.e_N) << "," << fmt(r.d_N) << "\n";

    bool e_mono = true, d_mono = true;
    for (size_t a = 0; a + 2 < rows.size(); ++a)
        if (!(rows[a + 1].e_N < rows[a].e_N)) e_mono = false;
    for (size_t a = 0; a + 1 < rows.size(); ++a)
        if (!(rows[a + 1].d_N < rows[a].d_N)) d_mono = false;
    ResultRow re;
    re.tag = "refinement_e";
    re.passed = e_mono;
    out.rows.push_back(re);
    ResultRow rd;
    rd.tag = "refinement_d";
    rd.passed = d_mono;
    out.rows.push_back(rd);
    write_rows_csv(cfg.out_dir + "/convergence_checks.csv", cfg, out.rows);
    out.exit_code = exit_for(out.rows);
    return out;
}

CommandResult cmd_twin_run(const ExperimentConfig& cfg) {
    CommandResult out;
    BuiltSpace built = build_space(GridSpec{cfg.nx, cfg.ny});
    Superpotential j = cfg.superpotential();
    ForcingFn f1 = make_forcing(built, cfg.params, cfg.forcing, cfg.seed);
    State y0 = make_initial_state(built, cfg.initial, cfg.seed + 1);
    SolveOptions opts = cfg.solve_options();

    State y0_2 = y0;
    ForcingFn f2 = f1;
    if (cfg.twin_target == "initial") {
        State delta = random_smooth_state(built.grid, cfg.seed + 2, cfg.twin_perturb);
        y0_2 = State(Vec(y0.coeffs + delta.coeffs));
    } else {
        State delta = random_smooth_state(built.grid, cfg.seed + 2, cfg.twin_perturb);
        DualVector df = apply_F(built.ops, cfg.params, delta);
        f2 = [f1, df](double t) { return DualVector(f1(t) + df); };
    }
    CheckReport rep = twin_run_gronwall(built.ops, cfg.params, j, built.trace, y0, f1, y0_2, f2,
                                        cfg.T, cfg.N, opts);
    out.rows.push_back(from_check(rep, "perturb=" + std::to_string(cfg.twin_perturb)));
    write_rows_csv(cfg.out_dir + "/twin.csv", cfg, out.rows);
    out.exit_code = exit_for(out.rows);
    return out;
}

CommandResult cmd_sweep(const ExperimentConfig& cfg) {
    CommandResult out;
    if (cfg.mu_list.empty())
        throw std::invalid_argument("sweep: [sweep] mu_list must be provided");
    BuiltSpace built = build_space(GridSpec{cfg.nx, cfg.ny});
    Superpotential j = cfg.superpotential();
    ProfileSpec shape = cfg.forcing;
    shape.modulation = "constant";
    DualVector f = make_forcing(built, cfg.params, shape, cfg.seed)(0.0);
    SolveOptions opts = cfg.solve_options();

    std::vector<ResultRow> rows(cfg.mu_list.size());
    parallel_for(int(cfg.mu_list.size()), cfg.jobs, [&](int i) {
        CbfParams p = cfg.params;
        p.mu = cfg.mu_list[size_t(i)];
        ThresholdReport th = thresholds(p, built.trace, j);
        State seed1(Vec::Zero(built.space->n));
        State seed2 = random_smooth_state(built.grid, cfg.seed + 3, 1.0);
        CheckReport twin =
            twin_solve_uniqueness(built.ops, p, j, built.trace, f, seed1, seed2, opts);
        ResultRow row = from_check(twin, "mu=" + fmt(p.mu));
        row.bound2 = th.stationary_uniqueness_mu;
        bool above = p.mu > th.stationary_uniqueness_mu;
        // Above the threshold the theorem asserts agreement; below it the
        // outcome is recorded without an assertion.
        row.skipped = !above;
        row.detail = above ? "above threshold" : "below threshold (informational)";
        rows[size_t(i)] = row;
    });
    out.rows = rows;
    write_rows_csv(cfg.out_dir + "/sweep.csv", cfg, out.rows);
    out.exit_code = exit_for(out.rows);
    return out;
}

}  // namespace cbf
