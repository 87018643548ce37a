#pragma once

#include "cbf/check.hpp"
#include "cbf/operators.hpp"
#include "cbf/state_space.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cbf {

/// Clarke subdifferential of a piecewise-C1 scalar function at one point:
/// a singleton at smooth points, the interval between one-sided limits at a
/// breakpoint.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
    double midpoint() const { return 0.5 * (lo + hi); }
};

/// Scalar boundary law j, stored through its derivative g = j' off
/// breakpoints. Each piece carries g, g', and an antiderivative of g; j is
/// reconstructed piecewise with the anchor j(0) = 0. Breakpoint jumps must be
/// upward (g(b+) >= g(b-)) for the relaxed-monotonicity constant to be finite.
class Superpotential {
public:
    struct Piece {
        std::function<double(double)> g;
        std::function<double(double)> dg;
        std::function<double(double)> G;  // antiderivative of g (arbitrary constant)
    };

    Superpotential() = default;
    Superpotential(std::string name, std::vector<double> breakpoints, std::vector<Piece> pieces,
                   double C0, double m);

    const std::string& name() const { return name_; }
    double C0() const { return C0_; }
    double m() const { return m_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    bool is_zero() const { return name_ == "none"; }

    double g(double xi) const;        // right-continuous at breakpoints
    double g_prime(double xi) const;  // derivative of the active piece
    double j(double xi) const;        // antiderivative, j(0) = 0

    /// Clarke subdifferential at xi. Points within snap_tol of a breakpoint
    /// are treated as sitting at the breakpoint (full interval).
    Interval subdiff(double xi, double snap_tol = 0.0) const;

    /// Single-valued Lipschitz regularization: linear interpolation of g
    /// across [b-eps, b+eps] around each breakpoint b. Throws if eps windows
    /// overlap two breakpoints.
    double smoothed(double xi, double eps) const;
    double smoothed_deriv(double xi, double eps) const;

    /// C1 variant on the same windows (monotone cubic Hermite blend), used by
    /// the Newton solvers: a continuously differentiable residual keeps the
    /// exact Newton direction a descent direction for the merit norm.
    double smoothed_c1(double xi, double eps) const;
    double smoothed_c1_deriv(double xi, double eps) const;

    /// Structural validation: upward jumps, positive window separation.
    void validate() const;

private:
    int piece_index(double xi) const;
    void check_eps(double eps) const;

    std::string name_ = "none";
    std::vector<double> breakpoints_;
    std::vector<Piece> pieces_;
    double C0_ = 0.0;
    double m_ = 0.0;
};

/// Shipped laws: "none" (g = 0), "quadratic" (g = k xi, default k = 1),
/// "arctan" (g = xi - a atan xi, default a = 2), "jump" (g = xi + c H(xi),
/// default c = 1), "downjump" (g = xi - c H(xi); violates relaxed
/// monotonicity, kept as the rejection counterexample).
Superpotential make_superpotential(const std::string& name,
                                   const std::vector<double>& params = {});

/// Piecewise-polynomial law from a text table: first line "breakpoints b1 ..."
/// (possibly just "breakpoints"), then one line of ascending-power polynomial
/// coefficients per piece, plus a line "C0 <v>" and "m <v>".
Superpotential load_superpotential_table(const std::string& path);

/// Discrete trace to the boundary: L maps stream-function coefficients to the
/// normal velocity at the n_U boundary nodes, wGamma are the boundary
/// quadrature weights (sum = meas Gamma), op_norm the computed operator norm.
struct TraceOperator {
    SpMat L;      // n_U x n
    Vec wGamma;   // n_U
    double op_norm = 0.0;

    double meas_gamma() const { return wGamma.sum(); }
    Vec trace(const State& y) const { return L * y.coeffs; }
    /// <eta, u>_U with the Riesz identification through wGamma.
    double boundary_pairing(const Vec& eta, const Vec& u) const;
    /// ell^* eta as a dual vector: L^T (wGamma .* eta).
    DualVector adjoint(const Vec& eta) const;
};

/// Discrete multiplier eta, identified with U = L^2(Gamma) via wGamma.
struct BoundaryMultiplier {
    Vec values;
};

/// Recompute ||ell||: sqrt of the largest generalized eigenvalue of
/// L^T diag(wGamma) L versus gram_V.
double trace_op_norm(const TraceOperator& tr, const SpaceSpec& space, double tol = 1e-8,
                     int max_iters = 200);

/// J(u) = sum_i wGamma_i j(u_i).
double J_value(const Superpotential& j, const TraceOperator& tr, const Vec& u);

/// Growth verification for the declared C0: max over the grid (including both
/// one-sided values at breakpoints) of |zeta| / (1 + |xi|). Throws if the
/// declared C0 is violated beyond 1e-12.
double estimate_growth(const Superpotential& j, const std::vector<double>& grid);

/// Relaxed-monotonicity verification for the declared m: the most negative
/// pairwise quotient (zeta1-zeta2)(xi1-xi2)/|xi1-xi2|^2 over grid pairs and
/// subgradient endpoint combinations, clipped at 0. Throws if it exceeds the
/// declared m beyond 1e-10.
double estimate_relaxed_monotonicity(const Superpotential& j, const std::vector<double>& grid);

/// C1 = sqrt(2) C0 max(sqrt(meas Gamma), 1).
double C1_constant(double C0, double gamma_measure);

/// Derived constants and regime flags for the given parameters and law.
struct ThresholdReport {
    double rho = 0.0;                       // only meaningful when r > 3
    bool rho_defined = false;
    double C_psi = 0.0;                     // C1(C0, meas Gamma)
    double mu_tilde = 0.0;                  // mu - C_psi ||ell||^2
    double stationary_uniqueness_mu = 0.0;  // regime-appropriate RHS of the mu-condition
    bool rothe_wellposed = false;           // mu_tilde > 0
    double threshold_r_gt3 = 0.0;
    double threshold_r_eq3 = 0.0;
    double threshold_r_le3 = 0.0;
    bool uniqueness_satisfied = false;
    bool alpha_degenerate = false;
    bool beta_degenerate = false;
};

ThresholdReport thresholds(const CbfParams& p, const TraceOperator& tr, const Superpotential& j,
                           double f_dual_norm = 0.0, double generic_C = 1.0);

/// Default verification grid: uniform on [-10, 10] plus points hugging each
/// breakpoint.
std::vector<double> default_verification_grid(const Superpotential& j);

}  // namespace cbf
