#ifndef CAPMINK_GRID_HPP
#define CAPMINK_GRID_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "capmink/geom.hpp"
#include "capmink/vecmath.hpp"

namespace capmink {

// Discretization parameters for the equilibrium-potential solve.
struct GridConfig {
  double cells_per_unit = 64.0;  // core resolution per unit length
  double truncation_factor = 5.0;  // kappa: outer radius = kappa * diam
  double picard_tol = 1e-6;        // relative change stopping the outer loop
  int picard_max_iters = 80;
  // Gradient regularization: the effective epsilon in
  // (|grad U|^2 + eps^2)^{(p-2)/2} is regularization_eps * cells_per_unit.
  double regularization_eps = 1e-8;
};

// Grid geometry only: a graded tensor-product grid with a uniform core box
// around the body and geometrically stretched spacing out to a spherical
// Dirichlet shell of radius outer_radius. Keeping the geometry separate lets
// perturbed copies of a polytope share the exact same grid, so finite
// differences of capacities see correlated discretization error.
struct GridFrame {
  int dim = 3;
  std::array<std::vector<double>, 3> axis;  // node coordinates; axis[2]={0} in 2d
  Vec center = {0, 0, 0};                   // truncation sphere center
  double outer_radius = 0.0;
  double core_spacing = 0.0;

  std::size_t nodes_per_axis(int ax) const { return axis[ax].size(); }
  std::size_t num_nodes() const {
    return axis[0].size() * axis[1].size() * axis[2].size();
  }
  std::size_t stride(int ax) const {
    if (ax == 0) return 1;
    if (ax == 1) return axis[0].size();
    return axis[0].size() * axis[1].size();
  }
  Vec node_pos(std::size_t i, std::size_t j, std::size_t k) const {
    return {axis[0][i], axis[1][j], dim == 3 ? axis[2][k] : 0.0};
  }
};

// kappa_scale = 1 or 2 selects the truncation radius kappa or 2*kappa used
// by the two-radius extrapolation. The core box is identical for both.
GridFrame make_frame(const Polytope& P, const GridConfig& cfg,
                     double kappa_scale);

enum class NodeState : std::uint8_t {
  body = 0,     // inside the polytope: Dirichlet U = 1
  unknown = 1,  // exterior annulus: solved for
  outer = 2,    // beyond the truncation sphere: Dirichlet U = 0
};

inline constexpr std::uint32_t kNoFix = 0xffffffffu;

// Node classification plus cut-link data on a frame. A link from an unknown
// node to a Dirichlet neighbor is shortened to theta * spacing, where theta
// locates the exact crossing of the polytope facet plane (or the truncation
// sphere) along the link; the Dirichlet value applies at the crossing.
struct DiscreteSystem {
  const GridFrame* frame = nullptr;
  const Polytope* body = nullptr;
  std::vector<NodeState> state;
  std::array<std::vector<double>, 3> dualw;  // dual cell widths per axis
  std::vector<std::uint32_t> fix_slot;       // per node; kNoFix if uncut
  // Per slot: theta for links (axis 0 -,+), (axis 1 -,+), (axis 2 -,+).
  std::vector<std::array<double, 6>> fix_theta;
  std::size_t num_unknown = 0;

  double theta(std::size_t node, int ax, int dir) const {
    return fix_theta[fix_slot[node]][2 * ax + (dir > 0 ? 1 : 0)];
  }
};

// Tile-accelerated classification: 8^dim node tiles are tested against each
// facet plane via their bounding boxes, so only planes actually straddling a
// tile are evaluated per node.
DiscreteSystem classify(const GridFrame& frame, const Polytope& P);

// Multilinear interpolation of a node field at point x (clamped to the grid
// box). Used by the facet quadrature probes.
double interpolate(const GridFrame& frame, const std::vector<double>& u,
                   const Vec& x);

}  // namespace capmink

#endif
