#include "cbf/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cbf {

namespace {

void check_dims(const OperatorSet& ops, const State& y, const char* who) {
    if (y.size() != ops.space->n) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

// y (y . z) scaled by |y|^(r-3), with the 0-branch at y = 0 for 1 < r < 3.
inline void gateaux_block(double r, double y1, double y2, double& a11, double& a12,
                          double& a22) {
    if (r == 1.0) {
        a11 = 1.0;
        a12 = 0.0;
        a22 = 1.0;
        return;
    }
    double mag = std::hypot(y1, y2);
    if (mag == 0.0) {
        a11 = a12 = a22 = 0.0;
        return;
    }
    double mpow = std::pow(mag, r - 1.0);
    double cross = (r - 1.0) * std::pow(mag, r - 3.0);
    a11 = mpow + cross * y1 * y1;
    a12 = cross * y1 * y2;
    a22 = mpow + cross * y2 * y2;
}

}  // namespace

void CbfParams::validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("CbfParams: mu must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("CbfParams: alpha must be nonnegative");
    if (!(beta >= 0.0)) throw std::invalid_argument("CbfParams: beta must be nonnegative");
    if (!(r >= 1.0)) throw std::invalid_argument("CbfParams: r must be >= 1");
}

double pairing(const DualVector& f, const State& y) {
    if (f.size() != y.size()) throw std::invalid_argument("pairing: dimension mismatch");
    return f.dot(y.coeffs);
}

DualVector apply_A(const OperatorSet& ops, const State& y) {
    check_dims(ops, y, "apply_A");
    return ops.A() * y.coeffs;
}

DualVector apply_B(const OperatorSet& ops, const State& y, const State& z) {
    check_dims(ops, y, "apply_B");
    check_dims(ops, z, "apply_B");
    const SpaceSpec& sp = *ops.space;
    Vec omega = ops.curl_q * y.coeffs;       // n_q
    Vec zv = sp.velocities(z);               // 2 n_q
    Vec dual_q(2 * sp.n_q);
    for (Eigen::Index g = 0; g < sp.n_q; ++g) {
        double c = sp.quad_weights[g] * omega[g];
        dual_q[2 * g] = -c * zv[2 * g + 1];
        dual_q[2 * g + 1] = c * zv[2 * g];
    }
    return sp.eval_map.transpose() * dual_q;
}

DualVector apply_C(const OperatorSet& ops, const State& y, double r) {
    check_dims(ops, y, "apply_C");
    if (r < 1.0) throw std::invalid_argument("apply_C: r must be >= 1");
    const SpaceSpec& sp = *ops.space;
    Vec yv = sp.velocities(y);
    Vec dual_q(2 * sp.n_q);
    for (Eigen::Index g = 0; g < sp.n_q; ++g) {
        double mag = std::hypot(yv[2 * g], yv[2 * g + 1]);
        double f = (r == 1.0) ? 1.0 : (mag == 0.0 ? 0.0 : std::pow(mag, r - 1.0));
        double c = sp.quad_weights[g] * f;
        dual_q[2 * g] = c * yv[2 * g];
        dual_q[2 * g + 1] = c * yv[2 * g + 1];
    }
    return sp.eval_map.transpose() * dual_q;
}

DualVector gateaux_C(const OperatorSet& ops, const State& y, const State& z, double r) {
    check_dims(ops, y, "gateaux_C");
    check_dims(ops, z, "gateaux_C");
    if (r < 1.0) throw std::invalid_argument("gateaux_C: r must be >= 1");
    const SpaceSpec& sp = *ops.space;
    Vec yv = sp.velocities(y);
    Vec zv = sp.velocities(z);
    Vec dual_q(2 * sp.n_q);
    for (Eigen::Index g = 0; g < sp.n_q; ++g) {
        double a11, a12, a22;
        gateaux_block(r, yv[2 * g], yv[2 * g + 1], a11, a12, a22);
        double w = sp.quad_weights[g];
        dual_q[2 * g] = w * (a11 * zv[2 * g] + a12 * zv[2 * g + 1]);
        dual_q[2 * g + 1] = w * (a12 * zv[2 * g] + a22 * zv[2 * g + 1]);
    }
    return sp.eval_map.transpose() * dual_q;
}

DualVector mass_apply(const OperatorSet& ops, const State& y) {
    check_dims(ops, y, "mass_apply");
    return ops.space->gram_H * y.coeffs;
}

DualVector apply_F(const OperatorSet& ops, const CbfParams& p, const State& y,
                   bool include_convection) {
    check_dims(ops, y, "apply_F");
    DualVector f = p.mu * apply_A(ops, y);
    if (include_convection) f += apply_B(ops, y, y);
    if (p.alpha != 0.0) f += p.alpha * mass_apply(ops, y);
    if (p.beta != 0.0) f += p.beta * apply_C(ops, y, p.r);
    return f;
}

SpMat gateaux_C_matrix(const OperatorSet& ops, const State& y, double r) {
    check_dims(ops, y, "gateaux_C_matrix");
    const SpaceSpec& sp = *ops.space;
    Vec yv = sp.velocities(y);
    SpMat blk(2 * sp.n_q, 2 * sp.n_q);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(4 * sp.n_q));
    for (Eigen::Index g = 0; g < sp.n_q; ++g) {
        double a11, a12, a22;
        gateaux_block(r, yv[2 * g], yv[2 * g + 1], a11, a12, a22);
        double w = sp.quad_weights[g];
        trips.emplace_back(int(2 * g), int(2 * g), w * a11);
        trips.emplace_back(int(2 * g), int(2 * g + 1), w * a12);
        trips.emplace_back(int(2 * g + 1), int(2 * g), w * a12);
        trips.emplace_back(int(2 * g + 1), int(2 * g + 1), w * a22);
    }
    blk.setFromTriplets(trips.begin(), trips.end());
    return SpMat(sp.eval_map.transpose() * (blk * sp.eval_map).eval());
}

SpMat convection_jacobian(const OperatorSet& ops, const State& y) {
    check_dims(ops, y, "convection_jacobian");
    const SpaceSpec& sp = *ops.space;
    Vec omega = ops.curl_q * y.coeffs;
    Vec yv = sp.velocities(y);

    // d/dy B(y,y) z = B(y, z) + B(z, y):
    //   B(y, z): rotation block scaled by w omega_y at each node,
    //   B(z, y): couples the curl of z to (-y2, y1).
    std::vector<Eigen::Triplet<double>> rot_trips, cpl_trips;
    rot_trips.reserve(size_t(2 * sp.n_q));
    cpl_trips.reserve(size_t(2 * sp.n_q));
    for (Eigen::Index g = 0; g < sp.n_q; ++g) {
        double w = sp.quad_weights[g];
        rot_trips.emplace_back(int(2 * g), int(2 * g + 1), -w * omega[g]);
        rot_trips.emplace_back(int(2 * g + 1), int(2 * g), w * omega[g]);
        cpl_trips.emplace_back(int(2 * g), int(g), -w * yv[2 * g + 1]);
        cpl_trips.emplace_back(int(2 * g + 1), int(g), w * yv[2 * g]);
    }
    SpMat rot(2 * sp.n_q, 2 * sp.n_q);
    rot.setFromTriplets(rot_trips.begin(), rot_trips.end());
    SpMat cpl(2 * sp.n_q, sp.n_q);
    cpl.setFromTriplets(cpl_trips.begin(), cpl_trips.end());

    SpMat fix_y = SpMat(sp.eval_map.transpose() * (rot * sp.eval_map).eval());
    SpMat fix_z = SpMat(sp.eval_map.transpose() * (cpl * ops.curl_q).eval());
    return SpMat(fix_y + fix_z);
}

double rho_constant(const CbfParams& p) {
    if (!(p.r > 3.0)) throw std::invalid_argument("rho_constant: requires r > 3");
    double base = 2.0 / (p.beta * p.mu * (p.r - 1.0));
    return (p.r - 3.0) / (p.r - 1.0) * std::pow(base, 2.0 / (p.r - 3.0));
}

CheckReport verify_monotonicity_C(const OperatorSet& ops, const State& y, const State& z,
                                  double r) {
    if (r < 1.0) throw std::invalid_argument("verify_monotonicity_C: r must be >= 1");
    const SpaceSpec& sp = *ops.space;
    DualVector diffC = apply_C(ops, y, r) - apply_C(ops, z, r);
    State d(Vec(y.coeffs - z.coeffs));
    CheckReport rep;
    rep.tag = "damping_monotonicity";
    rep.lhs = pairing(diffC, d);

    Vec yv = sp.velocities(y), zv = sp.velocities(z);
    double b1 = 0.0;
    for (Eigen::Index g = 0; g < sp.n_q; ++g) {
        double dy1 = yv[2 * g] - zv[2 * g], dy2 = yv[2 * g + 1] - zv[2 * g + 1];
        double d2 = dy1 * dy1 + dy2 * dy2;
        double my = std::hypot(yv[2 * g], yv[2 * g + 1]);
        double mz = std::hypot(zv[2 * g], zv[2 * g + 1]);
        double py = (r == 1.0) ? 1.0 : (my == 0.0 ? 0.0 : std::pow(my, r - 1.0));
        double pz = (r == 1.0) ? 1.0 : (mz == 0.0 ? 0.0 : std::pow(mz, r - 1.0));
        b1 += 0.5 * sp.quad_weights[g] * (py + pz) * d2;
    }
    rep.bound1 = b1;
    rep.bound2 = std::pow(2.0, 1.0 - r) * std::pow(norm_Lp(sp, d, r + 1.0), r + 1.0);
    double scale = std::abs(rep.lhs) + std::abs(rep.bound1) + std::abs(rep.bound2);
    rep.tolerance = 1e-10 * (1.0 + scale);
    rep.passed = rep.lhs >= rep.bound1 - rep.tolerance && rep.lhs >= rep.bound2 - rep.tolerance;
    return rep;
}

CheckReport verify_local_monotonicity_F(const OperatorSet& ops, const CbfParams& p,
                                        const State& y, const State& z) {
    const SpaceSpec& sp = *ops.space;
    CheckReport rep;
    rep.tag = "local_monotonicity";
    State d(Vec(y.coeffs - z.coeffs));
    DualVector diffF = apply_F(ops, p, y) - apply_F(ops, p, z);
    double lhs_pair = pairing(diffF, d);
    double dH2 = std::pow(norm_H(sp, d), 2);
    double dV2 = std::pow(norm_V(sp, d), 2);

    if (p.r > 3.0) {
        double rho = rho_constant(p);
        rep.lhs = lhs_pair + rho / (2.0 * p.mu) * dH2;
        rep.bound1 = 0.5 * p.mu * dV2 + p.alpha * dH2;
        double scale = std::abs(rep.lhs) + std::abs(rep.bound1);
        rep.tolerance = 1e-10 * (1.0 + scale);
        rep.passed = rep.lhs >= rep.bound1 - rep.tolerance;
        rep.detail = "r>3";
        return rep;
    }
    if (p.r == 3.0 && 2.0 * p.beta * p.mu >= 1.0) {
        rep.tag = "global_monotonicity_critical";
        rep.lhs = lhs_pair;
        rep.bound1 = 0.0;
        rep.tolerance = 1e-10 * (1.0 + std::abs(lhs_pair) + dV2 + dH2);
        rep.passed = rep.lhs >= -rep.tolerance;
        rep.detail = "r=3, 2*beta*mu>=1";
        return rep;
    }
    rep.skipped = true;
    rep.passed = true;
    rep.detail = "parameter regime not covered (needs r>3, or r=3 with 2*beta*mu>=1)";
    return rep;
}

}  // namespace cbf
