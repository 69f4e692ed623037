#ifndef CAPMINK_ENTROPY_HPP
#define CAPMINK_ENTROPY_HPP

#include "capmink/geom.hpp"
#include "capmink/vecmath.hpp"

namespace capmink {

// Result of maximizing  Phi(xi) = sum_i gamma_i log(h_i - xi.u_i)  over the
// interior of the polytope. Phi is strictly concave there (general position
// makes the curvature matrix positive definite), so the maximizer is unique.
struct EntropyResult {
  Vec xi = {0, 0, 0};
  double phi_value = 0.0;
  double gradient_norm = 0.0;
  int newton_iterations = 0;
};

// Phi at a strictly interior point; throws NumericError if some
// h_i - xi.u_i <= 0.
double phi(const Polytope& P, const WeightedDirections& mu, const Vec& xi);

struct PhiDerivatives {
  Vec gradient = {0, 0, 0};  // grad Phi = -sum_i gamma_i u_i / (h_i - xi.u_i)
  SymMat curvature;          // sum_i gamma_i u_i u_i^T / (h_i - xi.u_i)^2,
                             // the negated Hessian; positive definite
};

PhiDerivatives phi_derivatives(const Polytope& P, const WeightedDirections& mu,
                               const Vec& xi);

// Dimensionally consistent default tolerance for the gradient norm.
double default_xi_tol(const Polytope& P, const WeightedDirections& mu);

// Damped Newton from the Chebyshev center; every iterate stays strictly
// interior (step halving on exit or on Phi decrease). Throws NumericError
// if 200 iterations do not reach the tolerance.
EntropyResult solve_xi(const Polytope& P, const WeightedDirections& mu,
                       double tol);

// P - xi(P): afterwards xi = o within tolerance and the recentering residual
// sum_i gamma_i u_i / h_i vanishes. Optionally reports the solve.
Polytope recenter(const Polytope& P, const WeightedDirections& mu,
                  EntropyResult* info = nullptr);

}  // namespace capmink

#endif
