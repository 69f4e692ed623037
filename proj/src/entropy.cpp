#include "capmink/entropy.hpp"

#include <cmath>

#include "capmink/errors.hpp"

namespace capmink {
namespace {

// Distances h_i - xi.u_i; returns false if any is nonpositive.
bool plane_gaps(const Polytope& P, const WeightedDirections& mu, const Vec& xi,
                std::vector<double>& d) {
  const int N = mu.size();
  d.resize(N);
  for (int i = 0; i < N; ++i) {
    d[i] = P.support[i] - dot(xi, mu.directions[i]);
    if (!(d[i] > 0.0)) return false;
  }
  return true;
}

double phi_from_gaps(const WeightedDirections& mu, const std::vector<double>& d) {
  double s = 0.0;
  for (int i = 0; i < mu.size(); ++i) s += mu.weights[i] * std::log(d[i]);
  return s;
}

}  // namespace

double phi(const Polytope& P, const WeightedDirections& mu, const Vec& xi) {
  std::vector<double> d;
  if (!plane_gaps(P, mu, xi, d))
    throw NumericError("phi evaluated at a non-interior point");
  return phi_from_gaps(mu, d);
}

PhiDerivatives phi_derivatives(const Polytope& P, const WeightedDirections& mu,
                               const Vec& xi) {
  std::vector<double> d;
  if (!plane_gaps(P, mu, xi, d))
    throw NumericError("phi_derivatives evaluated at a non-interior point");
  PhiDerivatives out;
  out.curvature.dim = P.dim;
  for (int i = 0; i < mu.size(); ++i) {
    const double w = mu.weights[i] / d[i];
    // d/dxi of log(h_i - xi.u_i) is -u_i / d_i.
    out.gradient = out.gradient - w * mu.directions[i];
    out.curvature.add_outer(mu.directions[i], w / d[i]);
  }
  return out;
}

double default_xi_tol(const Polytope& P, const WeightedDirections& mu) {
  const double inr = std::max(P.cheb_radius, 1e-300);
  return 1e-10 * mu.total_weight() / inr;
}

EntropyResult solve_xi(const Polytope& P, const WeightedDirections& mu,
                       double tol) {
  if (mu.size() != P.num_directions())
    throw ValidationError("measure and polytope direction counts differ");

  Vec xi = P.cheb_center;
  std::vector<double> d;
  if (!plane_gaps(P, mu, xi, d))
    throw NumericError("no strictly interior starting point");
  double f = phi_from_gaps(mu, d);

  EntropyResult res;
  const int max_iters = 200;
  for (int it = 0; it < max_iters; ++it) {
    const PhiDerivatives der = phi_derivatives(P, mu, xi);
    const double gn = norm(der.gradient);
    if (gn <= tol) {
      res.xi = xi;
      res.phi_value = f;
      res.gradient_norm = gn;
      res.newton_iterations = it;
      return res;
    }
    Vec step;
    if (!solve_spd(der.curvature, der.gradient, step))
      throw NumericError("entropy curvature matrix not positive definite");

    // Backtrack (factor 0.5) until the candidate is interior and Phi does
    // not decrease; concavity guarantees such a step exists.
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = xi + alpha * step;
      std::vector<double> dc;
      if (plane_gaps(P, mu, cand, dc)) {
        const double fc = phi_from_gaps(mu, dc);
        if (fc >= f) {
          xi = cand;
          f = fc;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Step underflow: the gradient norm check on the next pass decides.
      const PhiDerivatives fin = phi_derivatives(P, mu, xi);
      if (norm(fin.gradient) <= tol) break;
      throw NumericError("entropy maximization stalled before tolerance");
    }
  }

  const PhiDerivatives fin = phi_derivatives(P, mu, xi);
  if (norm(fin.gradient) > tol)
    throw NumericError("entropy maximization hit the iteration cap");
  res.xi = xi;
  res.phi_value = f;
  res.gradient_norm = norm(fin.gradient);
  res.newton_iterations = max_iters;
  return res;
}

Polytope recenter(const Polytope& P, const WeightedDirections& mu,
                  EntropyResult* info) {
  const EntropyResult r = solve_xi(P, mu, default_xi_tol(P, mu));
  if (info) *info = r;
  return translate(P, -r.xi);
}

}  // namespace capmink
