#ifndef CAPMINK_KERNELS_HPP
#define CAPMINK_KERNELS_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "capmink/grid.hpp"

namespace capmink {
namespace kernels {

// Execution backends. The serial namespace is the reference implementation;
// the par namespace runs the same arithmetic under OpenMP. Reductions are
// blocked identically (fixed block count, per-block serial partial sums,
// serial final sum), so both backends produce bitwise-identical results for
// any thread count.
enum class Exec { serial, openmp };

void set_default_exec(Exec e);
Exec default_exec();

// Face diffusivity arrays, one per axis; entry at the lower node id of the
// face. Empty arrays mean unit coefficients (the p = 2 case).
using FaceCoef = std::array<std::vector<double>, 3>;

// Fully assembled link weights coef * area / (theta * dist), stored at the
// lower node id of each link and zero for absent links or links joining two
// Dirichlet nodes. Building them once per coefficient refresh turns the hot
// stencil and line kernels into pure streaming passes; the weight-based
// overloads reproduce the FaceCoef-based ones bitwise.
struct LinkWeights {
  std::array<std::vector<double>, 3> w;
};

// Node-indexed scratch arrays for the batched line solves (tridiagonal
// pivots, sub-diagonal entries, right-hand sides). Callers that sweep
// repeatedly keep one per grid to avoid reallocation.
struct LineWorkspace {
  std::vector<double> piv, off, rhs;
};

namespace serial {
double dot(const std::vector<double>& a, const std::vector<double>& b);
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);
void xpay(const std::vector<double>& x, double beta, std::vector<double>& p);
void pointwise_div(const std::vector<double>& r, const std::vector<double>& d,
                   std::vector<double>& z);
// out = A v on unknown nodes (0 elsewhere). v carries Dirichlet values at
// body/outer nodes: pass the solution vector for residuals, or a vector with
// zeros at Dirichlet nodes for CG directions.
void apply_stencil(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v, std::vector<double>& out);
void jacobi_diag(const DiscreteSystem& sys, const FaceCoef& fc,
                 std::vector<double>& diag);
// Discrete Dirichlet energy sum_links a (dv)^2 area / dist, cut links
// included with their shortened lengths. Equals the p-capacity integrand's
// quadratic form at the converged Picard coefficients.
double link_energy(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v);
// Lagged-diffusivity coefficients a = (|grad v|^2 + eps^2)^{(p-2)/2} at faces.
void update_face_coef(const DiscreteSystem& sys, const std::vector<double>& v,
                      double p, double eps, FaceCoef& fc);
// One damped block-Jacobi sweep of tridiagonal line solves along axis ax:
// e += omega * T_ax^{-1} resid, with T_ax holding the full row diagonal and
// the axis-ax couplings between unknown nodes. The workhorse smoother for
// the stretched far-field cells, whose anisotropy defeats point smoothing.
void line_jacobi(const DiscreteSystem& sys, const FaceCoef& fc,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e);
void build_link_weights(const DiscreteSystem& sys, const FaceCoef& fc,
                        LinkWeights& lw);
void apply_stencil(const DiscreteSystem& sys, const LinkWeights& lw,
                   const std::vector<double>& v, std::vector<double>& out);
void jacobi_diag(const DiscreteSystem& sys, const LinkWeights& lw,
                 std::vector<double>& diag);
void line_jacobi(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e);
// Fused smoothing sweep: e += omega * T_ax^{-1} (r - A e). The residual is
// assembled in one pass over the frozen e, then all lines are solved, so
// the result is independent of line order (and of the thread count).
void line_smooth(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& r, std::vector<double>& e,
                 LineWorkspace& ws);
}  // namespace serial

namespace par {
double dot(const std::vector<double>& a, const std::vector<double>& b);
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);
void xpay(const std::vector<double>& x, double beta, std::vector<double>& p);
void pointwise_div(const std::vector<double>& r, const std::vector<double>& d,
                   std::vector<double>& z);
void apply_stencil(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v, std::vector<double>& out);
void jacobi_diag(const DiscreteSystem& sys, const FaceCoef& fc,
                 std::vector<double>& diag);
double link_energy(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v);
void update_face_coef(const DiscreteSystem& sys, const std::vector<double>& v,
                      double p, double eps, FaceCoef& fc);
void line_jacobi(const DiscreteSystem& sys, const FaceCoef& fc,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e);
void build_link_weights(const DiscreteSystem& sys, const FaceCoef& fc,
                        LinkWeights& lw);
void apply_stencil(const DiscreteSystem& sys, const LinkWeights& lw,
                   const std::vector<double>& v, std::vector<double>& out);
void jacobi_diag(const DiscreteSystem& sys, const LinkWeights& lw,
                 std::vector<double>& diag);
void line_jacobi(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e);
void line_smooth(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& r, std::vector<double>& e,
                 LineWorkspace& ws);
}  // namespace par

// Dispatch through the process-wide default backend.
double dot(const std::vector<double>& a, const std::vector<double>& b);
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);
void xpay(const std::vector<double>& x, double beta, std::vector<double>& p);
void pointwise_div(const std::vector<double>& r, const std::vector<double>& d,
                   std::vector<double>& z);
void apply_stencil(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v, std::vector<double>& out);
void jacobi_diag(const DiscreteSystem& sys, const FaceCoef& fc,
                 std::vector<double>& diag);
double link_energy(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v);
void update_face_coef(const DiscreteSystem& sys, const std::vector<double>& v,
                      double p, double eps, FaceCoef& fc);
void line_jacobi(const DiscreteSystem& sys, const FaceCoef& fc,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e);
void build_link_weights(const DiscreteSystem& sys, const FaceCoef& fc,
                        LinkWeights& lw);
void apply_stencil(const DiscreteSystem& sys, const LinkWeights& lw,
                   const std::vector<double>& v, std::vector<double>& out);
void jacobi_diag(const DiscreteSystem& sys, const LinkWeights& lw,
                 std::vector<double>& diag);
void line_jacobi(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e);
void line_smooth(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& r, std::vector<double>& e,
                 LineWorkspace& ws);

}  // namespace kernels
}  // namespace capmink

#endif
