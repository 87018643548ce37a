#include "cbf/cbf2d.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace cbf {

namespace {

using Trip = Eigen::Triplet<double>;

void add_dof(std::vector<Trip>& trips, Eigen::Index row, Eigen::Index dof, double v) {
    if (dof >= 0) trips.emplace_back(int(row), int(dof), v);
}

SpMat diag_sparse(const Vec& w) {
    SpMat D(w.size(), w.size());
    std::vector<Trip> trips;
    trips.reserve(size_t(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) trips.emplace_back(int(i), int(i), w[i]);
    D.setFromTriplets(trips.begin(), trips.end());
    return D;
}

// Nodal -Laplacian with reflection ghosts, rows over all nodes, columns over
// dofs (the pinned corner column is dropped).
SpMat nodal_curl(const GridSpec& g) {
    const double cx = 1.0 / (g.hx() * g.hx());
    const double cy = 1.0 / (g.hy() * g.hy());
    std::vector<Trip> trips;
    trips.reserve(size_t(5 * g.num_nodes()));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Eigen::Index row = g.node_id(i, j);
            // -d2/dx2
            if (i == 0) {
                add_dof(trips, row, g.dof_id(1, j), -2.0 * cx);
                add_dof(trips, row, g.dof_id(0, j), 2.0 * cx);
            } else if (i == g.nx - 1) {
                add_dof(trips, row, g.dof_id(g.nx - 2, j), -2.0 * cx);
                add_dof(trips, row, g.dof_id(g.nx - 1, j), 2.0 * cx);
            } else {
                add_dof(trips, row, g.dof_id(i - 1, j), -cx);
                add_dof(trips, row, g.dof_id(i, j), 2.0 * cx);
                add_dof(trips, row, g.dof_id(i + 1, j), -cx);
            }
            // -d2/dy2
            if (j == 0) {
                add_dof(trips, row, g.dof_id(i, 1), -2.0 * cy);
                add_dof(trips, row, g.dof_id(i, 0), 2.0 * cy);
            } else if (j == g.ny - 1) {
                add_dof(trips, row, g.dof_id(i, g.ny - 2), -2.0 * cy);
                add_dof(trips, row, g.dof_id(i, g.ny - 1), 2.0 * cy);
            } else {
                add_dof(trips, row, g.dof_id(i, j - 1), -cy);
                add_dof(trips, row, g.dof_id(i, j), 2.0 * cy);
                add_dof(trips, row, g.dof_id(i, j + 1), -cy);
            }
        }
    SpMat M(g.num_nodes(), g.num_dofs());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

// Nodal second differences in one direction (reflection ghosts at the ends),
// for the H^1 Gram of the velocity field.
SpMat nodal_second_diff(const GridSpec& g, bool xdir) {
    const double c = xdir ? 1.0 / (g.hx() * g.hx()) : 1.0 / (g.hy() * g.hy());
    const int count = xdir ? g.nx : g.ny;
    std::vector<Trip> trips;
    auto id = [&](int along, int across) {
        return xdir ? g.dof_id(along, across) : g.dof_id(across, along);
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Eigen::Index row = g.node_id(i, j);
            int a = xdir ? i : j;
            int b = xdir ? j : i;
            if (a == 0) {
                add_dof(trips, row, id(1, b), 2.0 * c);
                add_dof(trips, row, id(0, b), -2.0 * c);
            } else if (a == count - 1) {
                add_dof(trips, row, id(count - 2, b), 2.0 * c);
                add_dof(trips, row, id(count - 1, b), -2.0 * c);
            } else {
                add_dof(trips, row, id(a - 1, b), c);
                add_dof(trips, row, id(a, b), -2.0 * c);
                add_dof(trips, row, id(a + 1, b), c);
            }
        }
    SpMat M(g.num_nodes(), g.num_dofs());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

Vec trapezoid_weights(const GridSpec& g) {
    Vec w(g.num_nodes());
    const double base = g.hx() * g.hy();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double cx = (i == 0 || i == g.nx - 1) ? 0.5 : 1.0;
            double cy = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
            w[g.node_id(i, j)] = base * cx * cy;
        }
    return w;
}

struct BoundaryLoop {
    std::vector<Eigen::Index> nodes;  // counterclockwise node ids
    std::vector<double> seglen;       // seglen[m]: arc length from node m to m+1
};

BoundaryLoop boundary_loop(const GridSpec& g) {
    BoundaryLoop loop;
    for (int i = 0; i < g.nx - 1; ++i) {  // bottom, left to right
        loop.nodes.push_back(g.node_id(i, 0));
        loop.seglen.push_back(g.hx());
    }
    for (int j = 0; j < g.ny - 1; ++j) {  // right, bottom to top
        loop.nodes.push_back(g.node_id(g.nx - 1, j));
        loop.seglen.push_back(g.hy());
    }
    for (int i = g.nx - 1; i > 0; --i) {  // top, right to left
        loop.nodes.push_back(g.node_id(i, g.ny - 1));
        loop.seglen.push_back(g.hx());
    }
    for (int j = g.ny - 1; j > 0; --j) {  // left, top to bottom
        loop.nodes.push_back(g.node_id(0, j));
        loop.seglen.push_back(g.hy());
    }
    return loop;
}

}  // namespace

void GridSpec::validate() const {
    if (nx < 8 || ny < 8) throw std::invalid_argument("GridSpec: nx, ny must be >= 8");
}

BuiltSpace build_space(const GridSpec& grid) {
    grid.validate();
    const int nx = grid.nx, ny = grid.ny;
    const double hx = grid.hx(), hy = grid.hy();
    const Eigen::Index ncell = Eigen::Index(nx - 1) * (ny - 1);
    const Eigen::Index n_q = 4 * ncell;
    const Eigen::Index n = grid.num_dofs();

    // Gauss offsets on the reference cell.
    const double ga = 0.5 - 0.5 / std::sqrt(3.0);
    const double gb = 0.5 + 0.5 / std::sqrt(3.0);
    const double gpts[4][2] = {{ga, ga}, {gb, ga}, {ga, gb}, {gb, gb}};

    std::vector<Trip> etrips, ptrips, dxytrips;
    etrips.reserve(size_t(8 * n_q));
    ptrips.reserve(size_t(4 * n_q));
    Vec wq(n_q);
    for (int cj = 0; cj < ny - 1; ++cj)
        for (int ci = 0; ci < nx - 1; ++ci) {
            Eigen::Index cell = Eigen::Index(cj) * (nx - 1) + ci;
            Eigen::Index d00 = grid.dof_id(ci, cj), d10 = grid.dof_id(ci + 1, cj);
            Eigen::Index d01 = grid.dof_id(ci, cj + 1), d11 = grid.dof_id(ci + 1, cj + 1);
            for (int q = 0; q < 4; ++q) {
                Eigen::Index gq = 4 * cell + q;
                double xi = gpts[q][0], eta = gpts[q][1];
                wq[gq] = 0.25 * hx * hy;
                // y1 = ds/dy of the bilinear interpolant
                Eigen::Index r1 = 2 * gq;
                add_dof(etrips, r1, d00, -(1.0 - xi) / hy);
                add_dof(etrips, r1, d01, (1.0 - xi) / hy);
                add_dof(etrips, r1, d10, -xi / hy);
                add_dof(etrips, r1, d11, xi / hy);
                // y2 = -ds/dx
                Eigen::Index r2 = 2 * gq + 1;
                add_dof(etrips, r2, d00, (1.0 - eta) / hx);
                add_dof(etrips, r2, d10, -(1.0 - eta) / hx);
                add_dof(etrips, r2, d01, eta / hx);
                add_dof(etrips, r2, d11, -eta / hx);
                // bilinear interpolation of nodal values to the Gauss node
                ptrips.emplace_back(int(gq), int(grid.node_id(ci, cj)),
                                    (1.0 - xi) * (1.0 - eta));
                ptrips.emplace_back(int(gq), int(grid.node_id(ci + 1, cj)), xi * (1.0 - eta));
                ptrips.emplace_back(int(gq), int(grid.node_id(ci, cj + 1)), (1.0 - xi) * eta);
                ptrips.emplace_back(int(gq), int(grid.node_id(ci + 1, cj + 1)), xi * eta);
            }
            // cross derivative at the cell center
            double cxy = 1.0 / (hx * hy);
            add_dof(dxytrips, cell, d00, cxy);
            add_dof(dxytrips, cell, d11, cxy);
            add_dof(dxytrips, cell, d10, -cxy);
            add_dof(dxytrips, cell, d01, -cxy);
        }

    auto space = std::make_shared<SpaceSpec>();
    space->n = n;
    space->n_q = n_q;
    space->quad_weights = wq;

    space->eval_map.resize(2 * n_q, n);
    space->eval_map.setFromTriplets(etrips.begin(), etrips.end());

    Vec w2(2 * n_q);
    for (Eigen::Index gq = 0; gq < n_q; ++gq) w2[2 * gq] = w2[2 * gq + 1] = wq[gq];
    SpMat W2 = diag_sparse(w2);
    space->gram_H = SpMat(space->eval_map.transpose() * (W2 * space->eval_map).eval());
    space->gram_H.makeCompressed();

    SpMat Lc = nodal_curl(grid);
    Vec wn = trapezoid_weights(grid);
    SpMat Wn = diag_sparse(wn);
    space->gram_V = SpMat(Lc.transpose() * (Wn * Lc).eval());
    space->gram_V.makeCompressed();

    // H^1 Gram of the velocity: |grad y|^2 = s_xx^2 + 2 s_xy^2 + s_yy^2.
    SpMat Dxx = nodal_second_diff(grid, true);
    SpMat Dyy = nodal_second_diff(grid, false);
    SpMat Dxy(ncell, n);
    Dxy.setFromTriplets(dxytrips.begin(), dxytrips.end());
    SpMat Wc = diag_sparse(Vec::Constant(ncell, hx * hy));
    SpMat grad_gram = SpMat(Dxx.transpose() * (Wn * Dxx).eval()) +
                      SpMat(Dyy.transpose() * (Wn * Dyy).eval()) +
                      SpMat(2.0 * (Dxy.transpose() * (Wc * Dxy).eval()));
    space->gram_H1 = SpMat(space->gram_H + grad_gram);
    space->gram_H1->makeCompressed();

    BuiltSpace built;
    built.grid = grid;
    built.space = space;

    SpMat P(n_q, grid.num_nodes());
    P.setFromTriplets(ptrips.begin(), ptrips.end());
    built.ops.space = space;
    built.ops.curl_q = SpMat(P * Lc);
    built.ops.curl_q.makeCompressed();

    // Boundary trace: y_n equals the tangential derivative of s along the
    // counterclockwise loop; the centered-loop difference makes the weighted
    // circulation telescope to zero exactly.
    BoundaryLoop loop = boundary_loop(grid);
    const size_t nb = loop.nodes.size();
    std::vector<Trip> ltrips;
    built.trace.wGamma.resize(Eigen::Index(nb));
    for (size_t m = 0; m < nb; ++m) {
        size_t prev = (m + nb - 1) % nb, next = (m + 1) % nb;
        double hminus = loop.seglen[prev], hplus = loop.seglen[m];
        built.trace.wGamma[Eigen::Index(m)] = 0.5 * (hminus + hplus);
        double c = 1.0 / (hminus + hplus);
        Eigen::Index dn = loop.nodes[next] - 1, dp = loop.nodes[prev] - 1;
        if (dn >= 0) ltrips.emplace_back(int(m), int(dn), c);
        if (dp >= 0) ltrips.emplace_back(int(m), int(dp), -c);
    }
    built.trace.L.resize(Eigen::Index(nb), n);
    built.trace.L.setFromTriplets(ltrips.begin(), ltrips.end());
    built.trace.op_norm = trace_op_norm(built.trace, *space);
    return built;
}

State sample_stream(const GridSpec& grid, const std::function<double(double, double)>& s) {
    double pin = s(0.0, 0.0);
    Vec c(grid.num_dofs());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            Eigen::Index d = grid.dof_id(i, j);
            if (d >= 0) c[d] = s(i * grid.hx(), j * grid.hy()) - pin;
        }
    return State(std::move(c));
}

std::pair<State, DualVector> manufactured_case(const BuiltSpace& built, const CbfParams& p,
                                               const std::string& name) {
    State y;
    if (name == "zero") {
        y = State(Vec::Zero(built.space->n));
    } else if (name == "taylor-green") {
        y = sample_stream(built.grid, [](double x, double yv) {
            return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * yv);
        });
    } else if (name == "shear") {
        y = sample_stream(built.grid, [](double x, double yv) {
            double fx = x * x * (1.0 - x) * (1.0 - x);
            double fy = yv * yv * (1.0 - yv) * (1.0 - yv);
            return fx * fy;
        });
    } else {
        throw std::invalid_argument("manufactured_case: unknown case '" + name + "'");
    }
    DualVector f = apply_F(built.ops, p, y);
    return {std::move(y), std::move(f)};
}

}  // namespace cbf
