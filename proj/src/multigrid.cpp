#include "capmink/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "capmink/errors.hpp"

namespace capmink {
namespace {

constexpr double kOmegaLine = 1.00;  // damping for the line-Jacobi smoother

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Core preconditioned-CG loop solving A x = b from x = 0, with b (and hence
// every Krylov vector) vanishing on Dirichlet nodes. Returns iterations.
int pcg_core(const DiscreteSystem& sys, const kernels::LinkWeights& lw,
             const std::vector<double>& diag, const std::vector<double>& b,
             std::vector<double>& x, double rel_tol, int max_iters,
             bool throw_on_stall) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  std::vector<double> r = b, z(n), pdir(n), Ap(n);
  double rr = kernels::dot(r, r);
  const double rr0 = rr;
  if (rr0 == 0.0) return 0;
  const double stop2 = rel_tol * rel_tol * rr0;
  kernels::pointwise_div(r, diag, z);
  pdir = z;
  double rz = kernels::dot(r, z);
  int it = 0;
  bool converged = false;
  while (it < max_iters) {
    kernels::apply_stencil(sys, lw, pdir, Ap);
    const double pAp = kernels::dot(pdir, Ap);
    if (pAp <= 0.0) break;  // fp loss of definiteness
    const double alpha = rz / pAp;
    kernels::axpy(alpha, pdir, x);
    kernels::axpy(-alpha, Ap, r);
    ++it;
    rr = kernels::dot(r, r);
    if (rr <= stop2) {
      converged = true;
      break;
    }
    kernels::pointwise_div(r, diag, z);
    const double rz_new = kernels::dot(r, z);
    kernels::xpay(z, rz_new / rz, pdir);
    rz = rz_new;
  }
  if (throw_on_stall && !converged && rr > 1e-8 * rr0)
    throw NumericError("conjugate gradients failed to reduce the residual");
  return it;
}

// Per-axis transfer maps between a level and the next coarser one.
void build_axis_maps(MgLevel& fine, const GridFrame& coarse) {
  for (int ax = 0; ax < 3; ++ax) {
    const std::vector<double>& xs = fine.frame->axis[ax];
    const std::vector<double>& cs = coarse.axis[ax];
    const std::size_t nf = xs.size(), nc = cs.size();
    fine.lo[ax].resize(nf);
    fine.lam[ax].resize(nf);
    for (std::size_t j = 0; j < nf; ++j) {
      if (nc == 1) {
        fine.lo[ax][j] = 0;
        fine.lam[ax][j] = 0.0;
        continue;
      }
      std::size_t hi =
          std::upper_bound(cs.begin(), cs.end(), xs[j]) - cs.begin();
      std::size_t J = hi == 0 ? 0 : std::min(hi - 1, nc - 2);
      double lam = (xs[j] - cs[J]) / (cs[J + 1] - cs[J]);
      // shared core nodes snap to exact weights so the transfer is injection
      if (std::fabs(lam) < 1e-9) lam = 0.0;
      if (std::fabs(1.0 - lam) < 1e-9) lam = 1.0;
      fine.lo[ax][j] = J;
      fine.lam[ax][j] = std::clamp(lam, 0.0, 1.0);
    }
    // gather ranges: coarse J receives fine j with lo[j] in {J-1, J}
    fine.ca[ax].assign(nc, nf);
    fine.cb[ax].assign(nc, nf);
    for (std::size_t J = 0; J < nc; ++J) {
      std::size_t a = 0;
      while (a < nf && fine.lo[ax][a] + 1 < J) ++a;
      std::size_t b = a;
      while (b < nf && fine.lo[ax][b] < J + 1) ++b;
      fine.ca[ax][J] = a;
      fine.cb[ax][J] = b;
    }
    // bracket of each coarse coordinate in the fine axis (for sampling)
    fine.rlo[ax].resize(nc);
    fine.rlam[ax].resize(nc);
    for (std::size_t J = 0; J < nc; ++J) {
      if (nf == 1) {
        fine.rlo[ax][J] = 0;
        fine.rlam[ax][J] = 0.0;
        continue;
      }
      std::size_t hi =
          std::upper_bound(xs.begin(), xs.end(), cs[J]) - xs.begin();
      std::size_t j = hi == 0 ? 0 : std::min(hi - 1, nf - 2);
      double lam = (cs[J] - xs[j]) / (xs[j + 1] - xs[j]);
      if (std::fabs(lam) < 1e-9) lam = 0.0;
      if (std::fabs(1.0 - lam) < 1e-9) lam = 1.0;
      fine.rlo[ax][J] = j;
      fine.rlam[ax][J] = std::clamp(lam, 0.0, 1.0);
    }
  }
}

// Transposed-interpolation restriction of a fine residual onto the coarse
// grid; coarse Dirichlet entries are zeroed so the correction equation
// keeps homogeneous boundary values.
void restrict_to(const MgLevel& fine, const MgLevel& coarse,
                 const std::vector<double>& rf, std::vector<double>& rc) {
  const GridFrame& gc = *coarse.frame;
  const std::size_t ncx = gc.nodes_per_axis(0), ncy = gc.nodes_per_axis(1),
                    ncz = gc.nodes_per_axis(2);
  const std::size_t fsx = fine.frame->stride(0), fsy = fine.frame->stride(1),
                    fsz = fine.frame->stride(2);
  const std::size_t rows = ncy * ncz;
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t Jz = row / ncy, Jy = row % ncy;
    std::size_t cid = row * ncx;
    for (std::size_t Jx = 0; Jx < ncx; ++Jx, ++cid) {
      if (coarse.sys.state[cid] != NodeState::unknown) {
        rc[cid] = 0.0;
        continue;
      }
      double acc = 0.0;
      for (std::size_t jz = fine.ca[2][Jz]; jz < fine.cb[2][Jz]; ++jz) {
        const double wz = fine.lo[2][jz] == Jz ? 1.0 - fine.lam[2][jz]
                                               : fine.lam[2][jz];
        if (wz == 0.0) continue;
        for (std::size_t jy = fine.ca[1][Jy]; jy < fine.cb[1][Jy]; ++jy) {
          const double wy = fine.lo[1][jy] == Jy ? 1.0 - fine.lam[1][jy]
                                                 : fine.lam[1][jy];
          if (wy == 0.0) continue;
          const std::size_t base = jz * fsz + jy * fsy;
          double accx = 0.0;
          for (std::size_t jx = fine.ca[0][Jx]; jx < fine.cb[0][Jx]; ++jx) {
            const double wx = fine.lo[0][jx] == Jx ? 1.0 - fine.lam[0][jx]
                                                   : fine.lam[0][jx];
            if (wx == 0.0) continue;
            accx += wx * rf[base + jx * fsx];
          }
          acc += wy * wz * accx;
        }
      }
      rc[cid] = acc;
    }
  }
}

// Multilinear prolongation of a coarse correction, added to the fine
// correction on unknown nodes only.
void prolong_add(const MgLevel& fine, const MgLevel& coarse,
                 const std::vector<double>& ec, std::vector<double>& ef) {
  const GridFrame& gf = *fine.frame;
  const std::size_t nfx = gf.nodes_per_axis(0), nfy = gf.nodes_per_axis(1),
                    nfz = gf.nodes_per_axis(2);
  const std::size_t csx = coarse.frame->stride(0),
                    csy = coarse.frame->stride(1),
                    csz = coarse.frame->stride(2);
  const std::size_t rows = nfy * nfz;
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t jz = row / nfy, jy = row % nfy;
    const std::size_t Jz = fine.lo[2][jz], Jy = fine.lo[1][jy];
    const double lz = fine.lam[2][jz], ly = fine.lam[1][jy];
    std::size_t fid = row * nfx;
    for (std::size_t jx = 0; jx < nfx; ++jx, ++fid) {
      if (fine.sys.state[fid] != NodeState::unknown) continue;
      const std::size_t Jx = fine.lo[0][jx];
      const double lx = fine.lam[0][jx];
      double acc = 0.0;
      for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? lz : 1.0 - lz;
        if (wz == 0.0) continue;
        for (int dy = 0; dy < 2; ++dy) {
          const double wy = dy ? ly : 1.0 - ly;
          if (wy == 0.0) continue;
          const std::size_t base = (Jz + dz) * csz + (Jy + dy) * csy;
          for (int dx = 0; dx < 2; ++dx) {
            const double wx = dx ? lx : 1.0 - lx;
            if (wx == 0.0) continue;
            acc += wx * wy * wz * ec[base + (Jx + dx) * csx];
          }
        }
      }
      ef[fid] += acc;
    }
  }
}

// Samples a fine node field at the coarse node positions (multilinear).
void sample_to_coarse(const MgLevel& fine, const MgLevel& coarse,
                      const std::vector<double>& uf, std::vector<double>& uc) {
  const GridFrame& gc = *coarse.frame;
  const std::size_t ncx = gc.nodes_per_axis(0), ncy = gc.nodes_per_axis(1),
                    ncz = gc.nodes_per_axis(2);
  const std::size_t fsx = fine.frame->stride(0), fsy = fine.frame->stride(1),
                    fsz = fine.frame->stride(2);
  const std::size_t rows = ncy * ncz;
  uc.resize(gc.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t Jz = row / ncy, Jy = row % ncy;
    const std::size_t jz = fine.rlo[2][Jz], jy = fine.rlo[1][Jy];
    const double lz = fine.rlam[2][Jz], ly = fine.rlam[1][Jy];
    std::size_t cid = row * ncx;
    for (std::size_t Jx = 0; Jx < ncx; ++Jx, ++cid) {
      const std::size_t jx = fine.rlo[0][Jx];
      const double lx = fine.rlam[0][Jx];
      double acc = 0.0;
      for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? lz : 1.0 - lz;
        if (wz == 0.0) continue;
        for (int dy = 0; dy < 2; ++dy) {
          const double wy = dy ? ly : 1.0 - ly;
          if (wy == 0.0) continue;
          const std::size_t base = (jz + dz) * fsz + (jy + dy) * fsy;
          for (int dx = 0; dx < 2; ++dx) {
            const double wx = dx ? lx : 1.0 - lx;
            if (wx == 0.0) continue;
            acc += wx * wy * wz * uf[base + (jx + dx) * fsx];
          }
        }
      }
      uc[cid] = acc;
    }
  }
}

// One alternating-direction smoothing pass: a damped line-Jacobi sweep per
// axis, each acting on the current residual r - A e. Graded grids leave
// strongly anisotropic cells in the stretch zone, where point smoothing
// stalls but line solves along the tightly coupled axis do not. The
// post-smoothing pass must visit axes in reverse order to keep the whole
// V-cycle symmetric, as conjugate gradients requires.
void smooth_pass(MgLevel& L, bool reverse) {
  const int dim = L.frame->dim;
  for (int k = 0; k < dim; ++k) {
    const int ax = reverse ? dim - 1 - k : k;
    kernels::line_smooth(L.sys, L.lw, L.diag, ax, kOmegaLine, L.r, L.e, L.lws);
  }
}

// One V-cycle on level l: the incoming residual is levels[l].r and the
// correction comes back in levels[l].e.
void vcycle(MgHierarchy& h, std::size_t l) {
  MgLevel& L = h.levels[l];
  const std::size_t n = L.r.size();
  if (l + 1 == h.levels.size()) {
    pcg_core(L.sys, L.lw, L.diag, L.r, L.e, 1e-10,
             static_cast<int>(4 * std::sqrt(static_cast<double>(n))) + 200,
             false);
    return;
  }
  L.e.assign(n, 0.0);
  smooth_pass(L, false);
  // restrict the smoothed residual
  kernels::apply_stencil(L.sys, L.lw, L.e, L.tmp);
  L.tmp2 = L.r;
  kernels::axpy(-1.0, L.tmp, L.tmp2);
  restrict_to(L, h.levels[l + 1], L.tmp2, h.levels[l + 1].r);
  vcycle(h, l + 1);
  prolong_add(L, h.levels[l + 1], h.levels[l + 1].e, L.e);
  smooth_pass(L, true);
}

}  // namespace

SolveStats pcg_jacobi(const DiscreteSystem& sys, const kernels::FaceCoef& fc,
                      std::vector<double>& u, double rel_tol, int max_iters) {
  const std::size_t n = u.size();
  kernels::LinkWeights lw;
  kernels::build_link_weights(sys, fc, lw);
  std::vector<double> diag(n), b(n, 0.0), tmp(n), delta;
  kernels::jacobi_diag(sys, lw, diag);
  kernels::apply_stencil(sys, lw, u, tmp);
  kernels::axpy(-1.0, tmp, b);
  SolveStats st;
  st.iterations = pcg_core(sys, lw, diag, b, delta, rel_tol, max_iters, true);
  kernels::axpy(1.0, delta, u);
  st.delta_inf = max_abs(delta);
  return st;
}

MgHierarchy build_hierarchy(const std::shared_ptr<const Polytope>& P, double p,
                            const GridConfig& cfg, double kappa_scale) {
  MgHierarchy h;
  h.body = P;
  h.p = p;
  h.eps = cfg.regularization_eps * cfg.cells_per_unit;

  Vec blo = P->vertices.front(), bhi = blo;
  for (const Vec& v : P->vertices)
    for (int ax = 0; ax < P->dim; ++ax) {
      blo[ax] = std::min(blo[ax], v[ax]);
      bhi[ax] = std::max(bhi[ax], v[ax]);
    }
  double ext = bhi[0] - blo[0];
  for (int ax = 1; ax < P->dim; ++ax) ext = std::min(ext, bhi[ax] - blo[ax]);

  GridConfig lvl = cfg;
  for (;;) {
    MgLevel L;
    L.frame = std::make_shared<GridFrame>(make_frame(*P, lvl, kappa_scale));
    L.sys = classify(*L.frame, *P);
    const std::size_t n = L.frame->num_nodes();
    kernels::build_link_weights(L.sys, L.fc, L.lw);
    L.diag.resize(n);
    kernels::jacobi_diag(L.sys, L.lw, L.diag);
    L.r.resize(n);
    L.e.resize(n);
    L.tmp.resize(n);
    L.tmp2.resize(n);
    h.levels.push_back(std::move(L));

    if (n <= 4000) break;  // coarse enough for the direct CG solve
    const double h_next = 2.0 / lvl.cells_per_unit;
    if (ext < 4.0 * h_next || lvl.cells_per_unit < 4.0) break;
    lvl.cells_per_unit /= 2.0;
  }
  for (std::size_t l = 0; l + 1 < h.levels.size(); ++l)
    build_axis_maps(h.levels[l], *h.levels[l + 1].frame);
  return h;
}

void refresh_coefficients(MgHierarchy& h, const std::vector<double>& u_fine) {
  if (h.p == 2.0) return;  // unit coefficients, weights already built
  kernels::update_face_coef(h.levels[0].sys, u_fine, h.p, h.eps,
                            h.levels[0].fc);
  kernels::build_link_weights(h.levels[0].sys, h.levels[0].fc, h.levels[0].lw);
  kernels::jacobi_diag(h.levels[0].sys, h.levels[0].lw, h.levels[0].diag);
  const std::vector<double>* cur = &u_fine;
  for (std::size_t l = 1; l < h.levels.size(); ++l) {
    sample_to_coarse(h.levels[l - 1], h.levels[l], *cur, h.levels[l].tmp2);
    kernels::update_face_coef(h.levels[l].sys, h.levels[l].tmp2, h.p, h.eps,
                              h.levels[l].fc);
    kernels::build_link_weights(h.levels[l].sys, h.levels[l].fc,
                                h.levels[l].lw);
    kernels::jacobi_diag(h.levels[l].sys, h.levels[l].lw, h.levels[l].diag);
    cur = &h.levels[l].tmp2;
  }
}

SolveStats mgcg_solve(MgHierarchy& h, std::vector<double>& u, double rel_tol) {
  MgLevel& L = h.levels[0];
  if (h.levels.size() == 1)
    return pcg_jacobi(L.sys, L.fc, u, rel_tol, 40000);

  // The CG residual lives in L.r, which each V-cycle reads (and leaves
  // intact) to produce the preconditioned residual in L.e.
  const std::size_t n = u.size();
  std::vector<double> pdir(n), Ap(n), delta(n, 0.0);
  L.r.assign(n, 0.0);
  kernels::apply_stencil(L.sys, L.lw, u, Ap);
  kernels::axpy(-1.0, Ap, L.r);
  double rr = kernels::dot(L.r, L.r);
  const double rr0 = rr;
  SolveStats st;
  if (rr0 == 0.0) return st;
  const double stop2 = rel_tol * rel_tol * rr0;

  vcycle(h, 0);
  pdir = L.e;
  double rz = kernels::dot(L.r, L.e);
  if (rz <= 0.0) throw NumericError("multigrid preconditioner broke down");
  const int max_iters = 400;
  bool converged = false;
  while (st.iterations < max_iters) {
    kernels::apply_stencil(L.sys, L.lw, pdir, Ap);
    const double pAp = kernels::dot(pdir, Ap);
    if (pAp <= 0.0) break;
    const double alpha = rz / pAp;
    kernels::axpy(alpha, pdir, delta);
    kernels::axpy(-alpha, Ap, L.r);
    ++st.iterations;
    rr = kernels::dot(L.r, L.r);
    if (rr <= stop2) {
      converged = true;
      break;
    }
    vcycle(h, 0);
    const double rz_new = kernels::dot(L.r, L.e);
    if (rz_new <= 0.0) break;
    kernels::xpay(L.e, rz_new / rz, pdir);
    rz = rz_new;
  }
  if (!converged && rr > 1e-8 * rr0)
    throw NumericError(
        "multigrid-preconditioned conjugate gradients failed to converge");
  kernels::axpy(1.0, delta, u);
  st.delta_inf = max_abs(delta);
  return st;
}

}  // namespace capmink
