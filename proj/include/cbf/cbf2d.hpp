#pragma once

#include "cbf/operators.hpp"
#include "cbf/superpotential.hpp"

#include <functional>
#include <memory>
#include <string>

namespace cbf {

/// Uniform grid on the unit square. Stream-function values live at the
/// nx*ny nodes; the corner node (0,0) is pinned to fix the additive constant,
/// leaving nx*ny - 1 degrees of freedom.
struct GridSpec {
    int nx = 16;
    int ny = 16;

    double hx() const { return 1.0 / double(nx - 1); }
    double hy() const { return 1.0 / double(ny - 1); }
    Eigen::Index num_nodes() const { return Eigen::Index(nx) * ny; }
    Eigen::Index num_dofs() const { return num_nodes() - 1; }
    Eigen::Index node_id(int i, int j) const { return Eigen::Index(j) * nx + i; }
    /// -1 for the pinned corner node.
    Eigen::Index dof_id(int i, int j) const { return node_id(i, j) - 1; }

    void validate() const;
};

/// Everything the concrete builder produces for one grid.
struct BuiltSpace {
    GridSpec grid;
    std::shared_ptr<const SpaceSpec> space;
    OperatorSet ops;
    TraceOperator trace;
};

/// Assemble the discrete spaces on the unit square: velocity is the rotated
/// gradient of the bilinear stream-function interpolant at 2x2 Gauss nodes
/// per cell; the scalar curl is the nodal five-point -Laplacian with Neumann
/// reflection ghosts (y_tau = 0); the trace is the tangential derivative of
/// the stream function along the boundary loop.
BuiltSpace build_space(const GridSpec& grid);

/// Sample a scalar stream function at the grid nodes, anchored so the pinned
/// corner value is zero.
State sample_stream(const GridSpec& grid, const std::function<double(double, double)>& s);

/// Named manufactured states with their exact discrete forcing f = F(y*).
/// Names: "zero", "taylor-green" (s = sin(pi x) sin(pi y)),
/// "shear" (s = x^2 (1-x)^2 y^2 (1-y)^2).
std::pair<State, DualVector> manufactured_case(const BuiltSpace& built, const CbfParams& p,
                                               const std::string& name);

}  // namespace cbf
