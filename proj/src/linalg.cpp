#include "cbf/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace cbf {

EigenEstimate largest_generalized_eigenvalue(const SpMat& A,
                                             const Eigen::SimplicialLLT<SpMat>& B_llt,
                                             const SpMat& B,
                                             double tol, int max_iters) {
    const Eigen::Index n = A.rows();
    EigenEstimate est;
    Vec v = Vec::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * std::sin(double(3 * i + 1));
    v.normalize();

    double lambda_prev = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        Vec Av = A * v;
        Vec w = B_llt.solve(Av);
        double wn = w.norm();
        if (wn == 0.0) {  // v in the null space of A
            est.value = 0.0;
            est.vector = v;
            est.iterations = it;
            est.converged = true;
            return est;
        }
        v = w / wn;
        double num = v.dot(A * v);
        double den = v.dot(B * v);
        double lambda = num / den;
        est.iterations = it;
        if (it > 1 && std::abs(lambda - lambda_prev) <= tol * std::max(1.0, std::abs(lambda))) {
            est.value = lambda;
            est.vector = v;
            est.converged = true;
            return est;
        }
        lambda_prev = lambda;
    }
    est.value = lambda_prev;
    est.vector = v;
    est.converged = false;
    return est;
}

EigenEstimate smallest_generalized_eigenvalue(const SpMat& A, const SpMat& B,
                                              double tol, int max_iters) {
    Eigen::SimplicialLLT<SpMat> A_llt;
    A_llt.compute(A);
    if (A_llt.info() != Eigen::Success)
        throw std::runtime_error("smallest_generalized_eigenvalue: matrix not SPD");
    EigenEstimate swapped = largest_generalized_eigenvalue(B, A_llt, A, tol, max_iters);
    swapped.value = (swapped.value == 0.0) ? 0.0 : 1.0 / swapped.value;
    return swapped;
}

EigenEstimate smallest_eigenvalue(const SpMat& A, double tol, int max_iters) {
    Eigen::SimplicialLLT<SpMat> llt;
    llt.compute(A);
    if (llt.info() != Eigen::Success) {
        // Not SPD; report a nonpositive bound via the most negative Rayleigh
        // quotient seen along a few random directions.
        EigenEstimate est;
        Vec v = Vec::Ones(A.rows()).normalized();
        est.value = v.dot(A * v);
        est.converged = false;
        return est;
    }
    const Eigen::Index n = A.rows();
    EigenEstimate est;
    Vec v = Vec::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * std::cos(double(2 * i + 1));
    v.normalize();
    double lambda_prev = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        Vec w = llt.solve(v);
        v = w.normalized();
        double lambda = v.dot(A * v);
        est.iterations = it;
        if (it > 1 && std::abs(lambda - lambda_prev) <= tol * std::max(1e-300, std::abs(lambda))) {
            est.value = lambda;
            est.vector = v;
            est.converged = true;
            return est;
        }
        lambda_prev = lambda;
    }
    est.value = lambda_prev;
    est.vector = v;
    est.converged = false;
    return est;
}

double symmetry_defect(const SpMat& A) {
    SpMat At = SpMat(A.transpose());
    SpMat D = A - At;
    double scale = 0.0, defect = 0.0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    for (int k = 0; k < D.outerSize(); ++k)
        for (SpMat::InnerIterator it(D, k); it; ++it)
            defect = std::max(defect, std::abs(it.value()));
    return scale > 0.0 ? defect / scale : 0.0;
}

}  // namespace cbf
