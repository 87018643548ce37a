#pragma once

#include "cbf/linalg.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace cbf {

/// Discrete velocity field, represented by its stream-function coefficients.
struct State {
    Vec coeffs;

    State() = default;
    explicit State(Vec c) : coeffs(std::move(c)) {}
    Eigen::Index size() const { return coeffs.size(); }

    /// Throws if the length does not match the space or an entry is not finite.
    void validate(Eigen::Index n) const;
};

/// Dual-space coefficients (a linear functional on States, paired by dot).
using DualVector = Vec;

/// Discrete function-space descriptor. Matrices are immutable after
/// construction; factorizations are cached lazily and shared across threads.
///
/// Conventions:
///  - eval_map has 2*n_q rows; rows (2g, 2g+1) hold the two velocity
///    components at quadrature node g.
///  - quad_weights are the n_q positive quadrature weights (sum = area).
class SpaceSpec {
public:
    Eigen::Index n = 0;    // degrees of freedom
    Eigen::Index n_q = 0;  // quadrature nodes
    SpMat gram_H;          // n x n, discrete (.,.)_H
    SpMat gram_V;          // n x n, discrete (curl., curl.)
    SpMat eval_map;        // 2*n_q x n
    Vec quad_weights;      // n_q
    std::optional<SpMat> gram_H1;  // n x n, discrete H^1 Gram (builder-supplied)

    SpaceSpec();
    SpaceSpec(const SpaceSpec& other);             // copies data, resets the cache
    SpaceSpec(SpaceSpec&&) noexcept;
    SpaceSpec& operator=(const SpaceSpec& other);  // ditto
    SpaceSpec& operator=(SpaceSpec&&) noexcept;
    ~SpaceSpec();

    /// Throws std::invalid_argument if dimensions are inconsistent, a Gram
    /// matrix is asymmetric beyond 1e-14 relative, weights are nonpositive,
    /// or a Gram matrix fails to be positive definite.
    void validate() const;

    const Eigen::SimplicialLLT<SpMat>& gram_V_llt() const;
    const Eigen::SimplicialLLT<SpMat>& gram_H_llt() const;

    /// Velocity 2-vectors at the quadrature nodes (length 2*n_q).
    Vec velocities(const State& y) const;

private:
    struct FactorCache;
    mutable std::unique_ptr<FactorCache> cache_;
};

double norm_H(const SpaceSpec& space, const State& y);
double norm_V(const SpaceSpec& space, const State& y);

/// Nodal-quadrature L^p norm of the velocity magnitude, p >= 1.
double norm_Lp(const SpaceSpec& space, const State& y, double p);

/// Extreme generalized eigenvalues of gram_H1 v = lambda gram_V v, returned
/// as (c_low, c_high) = (sqrt(lambda_min), sqrt(lambda_max)), so that
/// c_low * norm_V <= norm_H1 <= c_high * norm_V for all discrete states.
/// Requires gram_H1; throws if absent or gram_V is singular.
std::pair<double, double> norm_equivalence_constants(const SpaceSpec& space,
                                                     double tol = 1e-8,
                                                     int max_iters = 200);

/// Dual V-norm sqrt(f^T gram_V^{-1} f) via the cached factorization.
double dual_norm_V(const SpaceSpec& space, const DualVector& f);

/// Serialization: text, matrix-market-style. Header records n and n_q,
/// followed by the three sparse matrices (gram_H, gram_V, eval_map) in COO
/// form and the weight vector; gram_H1 is appended as an optional block.
void save_space(const SpaceSpec& space, const std::string& path);
SpaceSpec load_space(const std::string& path);

}  // namespace cbf
