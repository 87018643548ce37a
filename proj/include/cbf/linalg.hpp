#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>

namespace cbf {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Result of a generalized eigenvalue estimation A v = lambda B v.
struct EigenEstimate {
    double value = 0.0;
    Vec vector;
    int iterations = 0;
    bool converged = false;
};

/// Largest generalized eigenvalue of A v = lambda B v (A symmetric PSD,
/// B SPD) by power iteration on B^{-1} A with Rayleigh-quotient stopping.
EigenEstimate largest_generalized_eigenvalue(const SpMat& A,
                                             const Eigen::SimplicialLLT<SpMat>& B_llt,
                                             const SpMat& B,
                                             double tol = 1e-8,
                                             int max_iters = 200);

/// Smallest generalized eigenvalue of A v = lambda B v (both SPD), computed
/// as 1 / largest eigenvalue of the swapped pencil.
EigenEstimate smallest_generalized_eigenvalue(const SpMat& A,
                                              const SpMat& B,
                                              double tol = 1e-8,
                                              int max_iters = 200);

/// Smallest eigenvalue of a symmetric matrix via inverse iteration.
EigenEstimate smallest_eigenvalue(const SpMat& A, double tol = 1e-8, int max_iters = 200);

/// Max relative asymmetry |A - A^T| / scale, used by validation checks.
double symmetry_defect(const SpMat& A);

}  // namespace cbf
