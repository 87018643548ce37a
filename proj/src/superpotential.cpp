#include "cbf/superpotential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cbf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Superpotential::Superpotential(std::string name, std::vector<double> breakpoints,
                               std::vector<Piece> pieces, double C0, double m)
    : name_(std::move(name)),
      breakpoints_(std::move(breakpoints)),
      pieces_(std::move(pieces)),
      C0_(C0),
      m_(m) {
    if (pieces_.size() != breakpoints_.size() + 1)
        throw std::invalid_argument("Superpotential: need one piece per interval");
    if (!std::is_sorted(breakpoints_.begin(), breakpoints_.end()))
        throw std::invalid_argument("Superpotential: breakpoints must be sorted");
}

int Superpotential::piece_index(double xi) const {
    // Right-continuous selection: piece i covers [b_{i-1}, b_i).
    int idx = 0;
    while (idx < int(breakpoints_.size()) && xi >= breakpoints_[size_t(idx)]) ++idx;
    return idx;
}

double Superpotential::g(double xi) const { return pieces_[size_t(piece_index(xi))].g(xi); }

double Superpotential::g_prime(double xi) const {
    return pieces_[size_t(piece_index(xi))].dg(xi);
}

double Superpotential::j(double xi) const {
    // Integrate g from 0 to xi across the breakpoints in between.
    double lo = std::min(0.0, xi), hi = std::max(0.0, xi);
    double acc = 0.0;
    double left = lo;
    for (size_t b = 0; b <= breakpoints_.size(); ++b) {
        double right = (b < breakpoints_.size()) ? std::min(breakpoints_[b], hi) : hi;
        if (right > left) {
            const Piece& pc = pieces_[size_t(piece_index(0.5 * (left + right)))];
            acc += pc.G(right) - pc.G(left);
            left = right;
        }
        if (left >= hi) break;
    }
    return (xi >= 0.0) ? acc : -acc;
}

Interval Superpotential::subdiff(double xi, double snap_tol) const {
    for (size_t b = 0; b < breakpoints_.size(); ++b) {
        double bp = breakpoints_[b];
        if (std::abs(xi - bp) <= snap_tol) {
            double gl = pieces_[b].g(bp);
            double gr = pieces_[b + 1].g(bp);
            return {std::min(gl, gr), std::max(gl, gr)};
        }
    }
    double v = g(xi);
    return {v, v};
}

void Superpotential::check_eps(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("smoothed_subdiff: eps must be positive");
    for (size_t b = 1; b < breakpoints_.size(); ++b)
        if (breakpoints_[b] - breakpoints_[b - 1] <= 2.0 * eps)
            throw std::invalid_argument("smoothed_subdiff: eps overlaps two breakpoints");
}

double Superpotential::smoothed(double xi, double eps) const {
    check_eps(eps);
    for (size_t b = 0; b < breakpoints_.size(); ++b) {
        double bp = breakpoints_[b];
        if (xi >= bp - eps && xi <= bp + eps) {
            double gl = pieces_[b].g(bp - eps);
            double gr = pieces_[b + 1].g(bp + eps);
            return gl + (xi - (bp - eps)) / (2.0 * eps) * (gr - gl);
        }
    }
    return g(xi);
}

double Superpotential::smoothed_deriv(double xi, double eps) const {
    check_eps(eps);
    for (size_t b = 0; b < breakpoints_.size(); ++b) {
        double bp = breakpoints_[b];
        if (xi >= bp - eps && xi <= bp + eps) {
            double gl = pieces_[b].g(bp - eps);
            double gr = pieces_[b + 1].g(bp + eps);
            return (gr - gl) / (2.0 * eps);
        }
    }
    return g_prime(xi);
}

double Superpotential::smoothed_c1(double xi, double eps) const {
    check_eps(eps);
    for (size_t b = 0; b < breakpoints_.size(); ++b) {
        double bp = breakpoints_[b];
        if (xi >= bp - eps && xi <= bp + eps) {
            double v0 = pieces_[b].g(bp - eps), v1 = pieces_[b + 1].g(bp + eps);
            double m0 = pieces_[b].dg(bp - eps) * 2.0 * eps;
            double m1 = pieces_[b + 1].dg(bp + eps) * 2.0 * eps;
            double u = (xi - (bp - eps)) / (2.0 * eps);
            double u2 = u * u, u3 = u2 * u;
            return (2.0 * u3 - 3.0 * u2 + 1.0) * v0 + (u3 - 2.0 * u2 + u) * m0 +
                   (-2.0 * u3 + 3.0 * u2) * v1 + (u3 - u2) * m1;
        }
    }
    return g(xi);
}

double Superpotential::smoothed_c1_deriv(double xi, double eps) const {
    check_eps(eps);
    for (size_t b = 0; b < breakpoints_.size(); ++b) {
        double bp = breakpoints_[b];
        if (xi >= bp - eps && xi <= bp + eps) {
            double v0 = pieces_[b].g(bp - eps), v1 = pieces_[b + 1].g(bp + eps);
            double m0 = pieces_[b].dg(bp - eps) * 2.0 * eps;
            double m1 = pieces_[b + 1].dg(bp + eps) * 2.0 * eps;
            double u = (xi - (bp - eps)) / (2.0 * eps);
            double u2 = u * u;
            double h = (6.0 * u2 - 6.0 * u) * v0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 +
                       (-6.0 * u2 + 6.0 * u) * v1 + (3.0 * u2 - 2.0 * u) * m1;
            return h / (2.0 * eps);
        }
    }
    return g_prime(xi);
}

void Superpotential::validate() const {
    for (size_t b = 0; b < breakpoints_.size(); ++b) {
        double bp = breakpoints_[b];
        double gl = pieces_[b].g(bp);
        double gr = pieces_[b + 1].g(bp);
        if (gr < gl)
            throw std::invalid_argument("Superpotential '" + name_ +
                                        "': downward jump at breakpoint (relaxed monotonicity "
                                        "cannot hold with finite m)");
    }
    if (C0_ < 0.0) throw std::invalid_argument("Superpotential: C0 must be nonnegative");
    if (m_ < 0.0) throw std::invalid_argument("Superpotential: m must be nonnegative");
}

Superpotential make_superpotential(const std::string& name, const std::vector<double>& params) {
    using Piece = Superpotential::Piece;
    auto param = [&params](size_t i, double dflt) {
        return i < params.size() ? params[i] : dflt;
    };
    if (name == "none") {
        Piece p{[](double) { return 0.0; }, [](double) { return 0.0; },
                [](double) { return 0.0; }};
        return Superpotential("none", {}, {p}, 0.0, 0.0);
    }
    if (name == "quadratic") {
        double k = param(0, 1.0);
        if (k < 0.0) throw std::invalid_argument("quadratic superpotential: slope must be >= 0");
        Piece p{[k](double x) { return k * x; }, [k](double) { return k; },
                [k](double x) { return 0.5 * k * x * x; }};
        return Superpotential("quadratic", {}, {p}, std::max(k, 0.0), 0.0);
    }
    if (name == "arctan") {
        double a = param(0, 2.0);
        Piece p{[a](double x) { return x - a * std::atan(x); },
                [a](double x) { return 1.0 - a / (1.0 + x * x); },
                [a](double x) {
                    return 0.5 * x * x - a * (x * std::atan(x) - 0.5 * std::log1p(x * x));
                }};
        double C0 = std::max(1.0, a * std::numbers::pi / 2.0);
        double m = std::max(0.0, a - 1.0);
        return Superpotential("arctan", {}, {p}, C0, m);
    }
    if (name == "jump" || name == "downjump") {
        double c = param(0, 1.0);
        double step = (name == "jump") ? c : -c;
        Piece left{[](double x) { return x; }, [](double) { return 1.0; },
                   [](double x) { return 0.5 * x * x; }};
        Piece right{[step](double x) { return x + step; }, [](double) { return 1.0; },
                    [step](double x) { return 0.5 * x * x + step * x; }};
        double C0 = std::max(1.0, std::abs(step));
        return Superpotential(name, {0.0}, {left, right}, C0, 0.0);
    }
    throw std::invalid_argument("unknown superpotential '" + name + "'");
}

Superpotential load_superpotential_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("superpotential table: cannot open " + path);
    std::vector<double> breakpoints;
    std::vector<std::vector<double>> polys;
    double C0 = -1.0, m = -1.0;
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "breakpoints") {
            double b;
            while (ls >> b) breakpoints.push_back(b);
        } else if (key == "piece") {
            std::vector<double> c;
            double v;
            while (ls >> v) c.push_back(v);
            if (c.empty()) throw std::runtime_error("superpotential table: empty piece");
            polys.push_back(std::move(c));
        } else if (key == "C0") {
            ls >> C0;
        } else if (key == "m") {
            ls >> m;
        } else {
            throw std::runtime_error("superpotential table: unknown key '" + key + "'");
        }
    }
    if (polys.size() != breakpoints.size() + 1)
        throw std::runtime_error("superpotential table: need one piece per interval");
    if (C0 < 0.0 || m < 0.0)
        throw std::runtime_error("superpotential table: C0 and m must be declared");
    std::vector<Superpotential::Piece> pieces;
    for (const auto& c : polys) {
        auto g = [c](double x) {
            double acc = 0.0;
            for (size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
            return acc;
        };
        auto dg = [c](double x) {
            double acc = 0.0;
            for (size_t i = c.size(); i-- > 1;) acc = acc * x + double(i) * c[i];
            return acc;
        };
        auto G = [c](double x) {
            double acc = 0.0;
            for (size_t i = c.size(); i-- > 0;) acc = acc * x + c[i] / double(i + 1);
            return acc * x;
        };
        pieces.push_back({g, dg, G});
    }
    return Superpotential("table", breakpoints, pieces, C0, m);
}

double TraceOperator::boundary_pairing(const Vec& eta, const Vec& u) const {
    if (eta.size() != wGamma.size() || u.size() != wGamma.size())
        throw std::invalid_argument("boundary_pairing: dimension mismatch");
    return (wGamma.array() * eta.array() * u.array()).sum();
}

DualVector TraceOperator::adjoint(const Vec& eta) const {
    if (eta.size() != wGamma.size())
        throw std::invalid_argument("TraceOperator::adjoint: dimension mismatch");
    return L.transpose() * (wGamma.array() * eta.array()).matrix();
}

double trace_op_norm(const TraceOperator& tr, const SpaceSpec& space, double tol,
                     int max_iters) {
    SpMat W(tr.wGamma.size(), tr.wGamma.size());
    std::vector<Eigen::Triplet<double>> trips;
    for (Eigen::Index i = 0; i < tr.wGamma.size(); ++i)
        trips.emplace_back(int(i), int(i), tr.wGamma[i]);
    W.setFromTriplets(trips.begin(), trips.end());
    SpMat LtWL = SpMat(tr.L.transpose() * (W * tr.L).eval());
    EigenEstimate est =
        largest_generalized_eigenvalue(LtWL, space.gram_V_llt(), space.gram_V, tol, max_iters);
    return std::sqrt(std::max(0.0, est.value));
}

double J_value(const Superpotential& j, const TraceOperator& tr, const Vec& u) {
    if (u.size() != tr.wGamma.size()) throw std::invalid_argument("J_value: dimension mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) acc += tr.wGamma[i] * j.j(u[i]);
    return acc;
}

namespace {

double growth_quotient_max(const Superpotential& j, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("estimate_growth: empty grid");
    double worst = 0.0;
    for (double xi : grid) {
        Interval iv = j.subdiff(xi);
        double denom = 1.0 + std::abs(xi);
        worst = std::max(worst, std::max(std::abs(iv.lo), std::abs(iv.hi)) / denom);
    }
    return worst;
}

double relaxed_monotonicity_min(const Superpotential& j, const std::vector<double>& grid) {
    if (grid.size() < 2)
        throw std::invalid_argument("estimate_relaxed_monotonicity: need at least two points");
    double worst = 0.0;
    for (size_t a = 0; a < grid.size(); ++a) {
        Interval ia = j.subdiff(grid[a]);
        for (size_t b = a + 1; b < grid.size(); ++b) {
            double dxi = grid[a] - grid[b];
            if (dxi == 0.0) continue;
            Interval ib = j.subdiff(grid[b]);
            for (double za : {ia.lo, ia.hi})
                for (double zb : {ib.lo, ib.hi})
                    worst = std::min(worst, (za - zb) * dxi / (dxi * dxi));
        }
    }
    return worst;
}

}  // namespace

double estimate_growth(const Superpotential& j, const std::vector<double>& grid) {
    double C0_hat = growth_quotient_max(j, grid);
    if (C0_hat > j.C0() + 1e-12)
        throw std::invalid_argument("superpotential '" + j.name() +
                                    "' violates declared growth constant: C0_hat = " +
                                    std::to_string(C0_hat) + " > C0 = " + std::to_string(j.C0()));
    return C0_hat;
}

double estimate_relaxed_monotonicity(const Superpotential& j, const std::vector<double>& grid) {
    double m_hat = std::max(0.0, -relaxed_monotonicity_min(j, grid));
    if (m_hat > j.m() + 1e-10)
        throw std::invalid_argument("superpotential '" + j.name() +
                                    "' violates declared relaxed-monotonicity constant: m_hat = " +
                                    std::to_string(m_hat) + " > m = " + std::to_string(j.m()));
    return m_hat;
}

double C1_constant(double C0, double gamma_measure) {
    if (C0 < 0.0 || gamma_measure <= 0.0)
        throw std::invalid_argument("C1_constant: need C0 >= 0 and meas(Gamma) > 0");
    return std::sqrt(2.0) * C0 * std::max(std::sqrt(gamma_measure), 1.0);
}

ThresholdReport thresholds(const CbfParams& p, const TraceOperator& tr, const Superpotential& j,
                           double f_dual_norm, double generic_C) {
    p.validate();
    ThresholdReport rep;
    rep.alpha_degenerate = p.alpha_degenerate();
    rep.beta_degenerate = p.beta_degenerate();
    rep.C_psi = C1_constant(j.C0(), tr.meas_gamma());
    double l2 = tr.op_norm * tr.op_norm;
    rep.mu_tilde = p.mu - rep.C_psi * l2;
    rep.rothe_wellposed = rep.mu_tilde > 0.0;
    double m = j.m();

    if (p.r > 3.0) {
        rep.rho = rho_constant(p);
        rep.rho_defined = true;
        double mu_hat = p.mu - m * l2;
        double rho_tilde = kInf;
        if (mu_hat > 0.0 && p.beta > 0.0) {
            double base = 2.0 / (p.beta * mu_hat * (p.r - 1.0));
            rho_tilde = (p.r - 3.0) / (p.r - 1.0) * std::pow(base, 2.0 / (p.r - 3.0));
        }
        double via_rho = (p.alpha > 0.0) ? rho_tilde / (2.0 * p.alpha) + m * l2 : kInf;
        double via_crit = std::max(p.beta > 0.0 ? 1.0 / (2.0 * p.beta) : kInf,
                                   (p.alpha > 0.0) ? 1.0 / (4.0 * p.alpha) + m * l2 : kInf);
        rep.threshold_r_gt3 = std::min(via_rho, via_crit);
        rep.stationary_uniqueness_mu = rep.threshold_r_gt3;
    }
    rep.threshold_r_eq3 =
        (p.beta > 0.0) ? 1.0 / (2.0 * p.beta) + rep.C_psi * l2 : kInf;
    if (p.r == 3.0) rep.stationary_uniqueness_mu = rep.threshold_r_eq3;
    {
        // d = 2 exponents: (4-d)/(4+d) = 1/3, 8/(4+d) = 4/3.
        double th = kInf;
        if (rep.mu_tilde > 0.0 && p.alpha > 0.0) {
            double load = (rep.C_psi * tr.op_norm + f_dual_norm) / rep.mu_tilde;
            th = std::pow(generic_C / p.alpha, 1.0 / 3.0) * std::pow(load, 4.0 / 3.0) + m * l2;
        }
        rep.threshold_r_le3 = th;
        if (p.r < 3.0) rep.stationary_uniqueness_mu = rep.threshold_r_le3;
    }
    rep.uniqueness_satisfied = p.mu > rep.stationary_uniqueness_mu;
    return rep;
}

std::vector<double> default_verification_grid(const Superpotential& j) {
    std::vector<double> grid;
    const int npts = 401;
    for (int i = 0; i < npts; ++i) grid.push_back(-10.0 + 20.0 * double(i) / double(npts - 1));
    for (double b : j.breakpoints())
        for (double d : {0.0, 1e-6, 1e-3, 1e-2}) {
            grid.push_back(b - d);
            grid.push_back(b + d);
        }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace cbf
