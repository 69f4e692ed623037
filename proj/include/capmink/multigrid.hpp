#ifndef CAPMINK_MULTIGRID_HPP
#define CAPMINK_MULTIGRID_HPP

#include <array>
#include <memory>
#include <vector>

#include "capmink/geom.hpp"
#include "capmink/grid.hpp"
#include "capmink/kernels.hpp"

namespace capmink {

struct SolveStats {
  int iterations = 0;
  double delta_inf = 0.0;  // max-norm of the applied correction
};

// Jacobi-preconditioned conjugate gradients on the correction equation
// A delta = -A u; u is updated in place (Dirichlet entries untouched).
// Reference linear solver: used directly on small grids and as the
// coarsest-level solver of the multigrid hierarchy.
SolveStats pcg_jacobi(const DiscreteSystem& sys, const kernels::FaceCoef& fc,
                      std::vector<double>& u, double rel_tol, int max_iters);

// One level of a geometric hierarchy. Every level is a rediscretization of
// the same polytope with cells_per_unit halved, sharing the body, the
// truncation sphere, and (in the core box) the node lattice of the level
// above, so transfers are plain multilinear interpolation.
struct MgLevel {
  std::shared_ptr<const GridFrame> frame;
  DiscreteSystem sys;
  kernels::FaceCoef fc;       // per-level diffusivities (empty for p = 2)
  kernels::LinkWeights lw;    // assembled link weights for the hot kernels
  std::vector<double> diag;   // Jacobi diagonal for the smoother

  // Per-axis maps to the NEXT COARSER level (unused on the last level).
  // Fine node j lies in coarse interval [lo[j], lo[j]+1] with weight lam[j]
  // on the upper end (0 exactly on shared core nodes).
  std::array<std::vector<std::size_t>, 3> lo;
  std::array<std::vector<double>, 3> lam;
  // Gather ranges for the transposed restriction: fine indices [ca[J], cb[J])
  // contribute to coarse index J.
  std::array<std::vector<std::size_t>, 3> ca, cb;
  // Fine-interval bracket of each coarse coordinate, for sampling the
  // current solution onto the coarse grid (coefficient refresh).
  std::array<std::vector<std::size_t>, 3> rlo;
  std::array<std::vector<double>, 3> rlam;

  std::vector<double> r, e, tmp, tmp2;  // per-level work vectors
  kernels::LineWorkspace lws;           // scratch for the smoothing sweeps
};

struct MgHierarchy {
  std::shared_ptr<const Polytope> body;
  std::vector<MgLevel> levels;  // [0] = finest
  double p = 2.0;
  double eps = 0.0;  // gradient regularization used in coefficient refresh
};

// Builds the hierarchy down to a grid small enough for the direct CG
// solve; the finest level uses exactly make_frame(P, cfg, kappa_scale).
MgHierarchy build_hierarchy(const std::shared_ptr<const Polytope>& P, double p,
                            const GridConfig& cfg, double kappa_scale);

// Recomputes the lagged-diffusivity coefficients on every level from the
// current fine solution (sampled down level by level). No-op for p = 2.
void refresh_coefficients(MgHierarchy& h, const std::vector<double>& u_fine);

// Conjugate gradients preconditioned by one V-cycle (alternating-direction
// line-Jacobi smoothing, rediscretized coarse operators, transposed-
// interpolation restriction). Falls back to plain Jacobi CG when only one
// level exists.
SolveStats mgcg_solve(MgHierarchy& h, std::vector<double>& u, double rel_tol);

}  // namespace capmink

#endif
