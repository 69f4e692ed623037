#ifndef CAPMINK_CAPACITY_HPP
#define CAPMINK_CAPACITY_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "capmink/geom.hpp"
#include "capmink/grid.hpp"

namespace capmink {

// Discrete p-equilibrium potential of a polytope: U = 1 on the body, U = 0
// on the truncation sphere, p-harmonic in between. The polytope and frame
// are held by shared pointers so the field stays valid when moved around.
struct PotentialField {
  std::shared_ptr<const Polytope> body;
  std::shared_ptr<const GridFrame> frame;
  DiscreteSystem sys;      // points into *frame and *body
  std::vector<double> u;   // node values
  double p = 2.0;
  double energy = 0.0;     // capacity of the truncated condenser
  int picard_iters = 0;    // outer lagged-diffusivity sweeps (1 when p = 2)
  int cg_iters = 0;        // total conjugate-gradient iterations
};

struct CapacityReport {
  double value = 0.0;                  // extrapolated p-capacity
  std::vector<double> facet_measures;  // per direction; 0 for non-facets
  GridConfig discretization;
  // Relative size of the truncation correction removed by extrapolation;
  // an upper envelope for the remaining truncation error.
  double error_estimate = 0.0;
  // Relative residual of capacity = (p-1)/(n-p) sum h_i mu_i *before* the
  // common rescaling of the measures enforces it exactly.
  double poincare_defect = 0.0;
};

// Closed form r^{n-p} * omega_{n-1} * ((n-p)/(p-1))^{p-1} for the ball of
// radius r, in the energy normalization (4*pi for the unit ball, n=3, p=2).
double reference_ball_capacity(int dim, double p, double r);

// Solves the truncated exterior problem on a graded grid: outer Dirichlet
// sphere at kappa_scale * truncation_factor * diam. Lagged-diffusivity
// (Picard) outer loop for p != 2; Jacobi-preconditioned conjugate gradients
// inside. Throws ValidationError for p outside (1, n) or a grid too coarse
// to resolve the body, NumericError on non-convergence.
PotentialField solve_potential(const Polytope& P, double p,
                               const GridConfig& cfg,
                               double kappa_scale = 1.0);

// Per-direction capacitary measures mu_i = integral over facet i of
// |grad U|^p. Every boundary-cut grid link attributes its discrete flux to
// the facet its crossing point lies on; patch-accumulated fluxes are powered
// to |grad U|^p densities, with a closed-form wedge correction next to
// edges. Rescaled by one common factor so the Poincare identity holds
// exactly against field.energy. Zero for directions without a facet.
std::vector<double> capacitary_measure(const Polytope& P, double p,
                                       const PotentialField& field);

// Full capacity pipeline: solves at truncation radii kappa*diam and
// 2*kappa*diam on the same core grid, removes the leading truncation bias
// using the known radial decay (exact for balls), extrapolates the facet
// measures the same way, and rescales them against the extrapolated value.
CapacityReport capacity(const Polytope& P, double p, const GridConfig& cfg);

// L_q-style reweighting h_i^{1 - p_index} * mu_i. p_index = 0 gives the
// target measure h_i mu_i. Requires all h_i > 0 (origin interior).
std::vector<double> lp_capacitary_measure(const Polytope& P, double p_cap,
                                          double p_index,
                                          const std::vector<double>& measures);

// First mixed capacity (p-1)/(n-p) * sum h_L(u_i) mu_i, with h_L evaluated
// at P's directions. L_support = P.support recovers capacity itself.
double mixed_capacity(const Polytope& P, const std::vector<double>& L_support,
                      double p, const std::vector<double>& measures);

struct WosResult {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Walk-on-spheres cross-check of the harmonic case (n = 3, p = 2 only):
// estimates U at six antipodal probes 10 diameters out (the pairing cancels
// the dipole term) and reads the capacity off the far-field coefficient
// 4*pi*U(x)*|x - c|. Deterministic for a given seed at any thread count.
WosResult wos_capacity(const Polytope& P, std::size_t walks,
                       std::uint64_t seed);

// Binary field dump for external visualization. Little-endian layout:
//   bytes 0..7   magic "CAPMINKF"
//   u32 version (=1), u32 dim, u32 nx, u32 ny, u32 nz
//   f64 p, f64 center[3], f64 outer_radius, f64 core_spacing
//   f64 x-coordinates [nx], f64 y-coordinates [ny], f64 z-coordinates [nz]
//   f64 values [nx*ny*nz], x fastest, then y, then z
void dump_field(const PotentialField& field, const std::string& path);

}  // namespace capmink

#endif
