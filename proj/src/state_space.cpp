#include "cbf/state_space.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cbf {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void write_sparse(std::ostream& os, const std::string& tag, const SpMat& M) {
    os << tag << " " << M.rows() << " " << M.cols() << " " << M.nonZeros() << "\n";
    char buf[64];
    for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n", long(it.row()), long(it.col()),
                          it.value());
            os << buf;
        }
}

SpMat read_sparse_body(std::istream& is) {
    long rows = 0, cols = 0, nnz = 0;
    is >> rows >> cols >> nnz;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(nnz));
    for (long e = 0; e < nnz; ++e) {
        long r, c;
        double v;
        is >> r >> c >> v;
        trips.emplace_back(int(r), int(c), v);
    }
    SpMat M(rows, cols);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

SpMat read_sparse(std::istream& is, const std::string& expected_tag) {
    std::string tag;
    is >> tag;
    if (tag != expected_tag)
        throw std::runtime_error("space file: expected block '" + expected_tag + "', got '" +
                                 tag + "'");
    return read_sparse_body(is);
}

}  // namespace

void State::validate(Eigen::Index n) const {
    require(coeffs.size() == n, "State: length does not match the space");
    require(coeffs.allFinite(), "State: entries must be finite");
}

struct SpaceSpec::FactorCache {
    std::once_flag once_V, once_H;
    Eigen::SimplicialLLT<SpMat> llt_V, llt_H;
};

SpaceSpec::SpaceSpec() : cache_(std::make_unique<FactorCache>()) {}

SpaceSpec::SpaceSpec(const SpaceSpec& other)
    : n(other.n),
      n_q(other.n_q),
      gram_H(other.gram_H),
      gram_V(other.gram_V),
      eval_map(other.eval_map),
      quad_weights(other.quad_weights),
      gram_H1(other.gram_H1),
      cache_(std::make_unique<FactorCache>()) {}

SpaceSpec& SpaceSpec::operator=(const SpaceSpec& other) {
    if (this != &other) {
        n = other.n;
        n_q = other.n_q;
        gram_H = other.gram_H;
        gram_V = other.gram_V;
        eval_map = other.eval_map;
        quad_weights = other.quad_weights;
        gram_H1 = other.gram_H1;
        cache_ = std::make_unique<FactorCache>();
    }
    return *this;
}

SpaceSpec::SpaceSpec(SpaceSpec&&) noexcept = default;
SpaceSpec& SpaceSpec::operator=(SpaceSpec&&) noexcept = default;
SpaceSpec::~SpaceSpec() = default;

void SpaceSpec::validate() const {
    require(n > 0, "SpaceSpec: n must be positive");
    require(n_q > 0, "SpaceSpec: n_q must be positive");
    require(gram_H.rows() == n && gram_H.cols() == n, "SpaceSpec: gram_H dimension mismatch");
    require(gram_V.rows() == n && gram_V.cols() == n, "SpaceSpec: gram_V dimension mismatch");
    require(eval_map.rows() == 2 * n_q && eval_map.cols() == n,
            "SpaceSpec: eval_map dimension mismatch");
    require(quad_weights.size() == n_q, "SpaceSpec: quadrature weight count mismatch");
    require(quad_weights.minCoeff() > 0.0, "SpaceSpec: quadrature weights must be positive");
    require(symmetry_defect(gram_H) <= 1e-14, "SpaceSpec: gram_H asymmetric beyond 1e-14");
    require(symmetry_defect(gram_V) <= 1e-14, "SpaceSpec: gram_V asymmetric beyond 1e-14");
    EigenEstimate hmin = smallest_eigenvalue(gram_H);
    require(hmin.value > 0.0, "SpaceSpec: gram_H is not positive definite");
    EigenEstimate vmin = smallest_eigenvalue(gram_V);
    require(vmin.value > 0.0, "SpaceSpec: gram_V is not positive definite");
}

const Eigen::SimplicialLLT<SpMat>& SpaceSpec::gram_V_llt() const {
    std::call_once(cache_->once_V, [this] {
        cache_->llt_V.compute(gram_V);
        if (cache_->llt_V.info() != Eigen::Success)
            throw std::runtime_error("SpaceSpec: gram_V factorization failed");
    });
    return cache_->llt_V;
}

const Eigen::SimplicialLLT<SpMat>& SpaceSpec::gram_H_llt() const {
    std::call_once(cache_->once_H, [this] {
        cache_->llt_H.compute(gram_H);
        if (cache_->llt_H.info() != Eigen::Success)
            throw std::runtime_error("SpaceSpec: gram_H factorization failed");
    });
    return cache_->llt_H;
}

Vec SpaceSpec::velocities(const State& y) const {
    if (y.size() != n) throw std::invalid_argument("velocities: state dimension mismatch");
    return eval_map * y.coeffs;
}

double norm_H(const SpaceSpec& space, const State& y) {
    if (y.size() != space.n) throw std::invalid_argument("norm_H: dimension mismatch");
    return std::sqrt(std::max(0.0, y.coeffs.dot(space.gram_H * y.coeffs)));
}

double norm_V(const SpaceSpec& space, const State& y) {
    if (y.size() != space.n) throw std::invalid_argument("norm_V: dimension mismatch");
    return std::sqrt(std::max(0.0, y.coeffs.dot(space.gram_V * y.coeffs)));
}

double norm_Lp(const SpaceSpec& space, const State& y, double p) {
    if (p < 1.0) throw std::invalid_argument("norm_Lp: p must be >= 1");
    if (y.size() != space.n) throw std::invalid_argument("norm_Lp: dimension mismatch");
    Vec v = space.velocities(y);
    double acc = 0.0;
    for (Eigen::Index g = 0; g < space.n_q; ++g) {
        double mag = std::hypot(v[2 * g], v[2 * g + 1]);
        acc += space.quad_weights[g] * std::pow(mag, p);
    }
    return std::pow(acc, 1.0 / p);
}

std::pair<double, double> norm_equivalence_constants(const SpaceSpec& space, double tol,
                                                     int max_iters) {
    if (!space.gram_H1)
        throw std::invalid_argument("norm_equivalence_constants: gram_H1 not supplied");
    const SpMat& H1 = *space.gram_H1;
    EigenEstimate hi = largest_generalized_eigenvalue(H1, space.gram_V_llt(), space.gram_V,
                                                      tol, max_iters);
    EigenEstimate lo = smallest_generalized_eigenvalue(H1, space.gram_V, tol, max_iters);
    if (!(hi.value > 0.0) || !(lo.value > 0.0))
        throw std::runtime_error("norm_equivalence_constants: degenerate pencil");
    return {std::sqrt(lo.value), std::sqrt(hi.value)};
}

double dual_norm_V(const SpaceSpec& space, const DualVector& f) {
    if (f.size() != space.n) throw std::invalid_argument("dual_norm_V: dimension mismatch");
    Vec u = space.gram_V_llt().solve(f);
    return std::sqrt(std::max(0.0, f.dot(u)));
}

void save_space(const SpaceSpec& space, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_space: cannot open " + path);
    os << "cbf-space 1\n";
    os << space.n << " " << space.n_q << "\n";
    write_sparse(os, "gram_H", space.gram_H);
    write_sparse(os, "gram_V", space.gram_V);
    write_sparse(os, "eval_map", space.eval_map);
    os << "quad_weights " << space.quad_weights.size() << "\n";
    char buf[40];
    for (Eigen::Index i = 0; i < space.quad_weights.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", space.quad_weights[i]);
        os << buf;
    }
    if (space.gram_H1) write_sparse(os, "gram_H1", *space.gram_H1);
}

SpaceSpec load_space(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_space: cannot open " + path);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "cbf-space" || version != 1)
        throw std::runtime_error("load_space: unrecognized file header");
    SpaceSpec s;
    is >> s.n >> s.n_q;
    s.gram_H = read_sparse(is, "gram_H");
    s.gram_V = read_sparse(is, "gram_V");
    s.eval_map = read_sparse(is, "eval_map");
    std::string tag;
    long m = 0;
    is >> tag >> m;
    if (tag != "quad_weights") throw std::runtime_error("load_space: missing weight block");
    s.quad_weights.resize(m);
    for (long i = 0; i < m; ++i) is >> s.quad_weights[i];
    if (is >> tag && tag == "gram_H1") s.gram_H1 = read_sparse_body(is);
    return s;
}

}  // namespace cbf
