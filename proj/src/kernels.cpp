#include "capmink/kernels.hpp"

#include <cmath>

namespace capmink {
namespace kernels {
namespace {

// Fixed reduction blocking shared by both backends: partial sums are formed
// per block in serial order and combined serially, which makes every
// reduction bitwise reproducible for any thread count.
constexpr std::size_t kBlocks = 4096;

std::size_t block_lo(std::size_t n, std::size_t b) { return n * b / kBlocks; }

struct Ctx {
  const DiscreteSystem* sys;
  const FaceCoef* fc;
  std::size_t nx, ny, nz, rows;
  std::size_t stride[3];
  std::size_t count[3];
  int dim;

  explicit Ctx(const DiscreteSystem& s, const FaceCoef& f) {
    sys = &s;
    fc = &f;
    const GridFrame& g = *s.frame;
    nx = g.nodes_per_axis(0);
    ny = g.nodes_per_axis(1);
    nz = g.nodes_per_axis(2);
    rows = ny * nz;
    stride[0] = 1;
    stride[1] = nx;
    stride[2] = nx * ny;
    count[0] = nx;
    count[1] = ny;
    count[2] = nz;
    dim = g.dim;
  }
  double coef(int ax, std::size_t lower_id) const {
    return (*fc)[ax].empty() ? 1.0 : (*fc)[ax][lower_id];
  }
};

// One matrix row: sum over the 2*dim links of a (v_id - v_nbr) weighted by
// coef * area / (theta * dist). Dirichlet neighbors carry their boundary
// value in v, so the same expression serves solutions and corrections.
inline double apply_node(const Ctx& c, const std::size_t ijk[3],
                         std::size_t id, const std::vector<double>& v) {
  const DiscreteSystem& s = *c.sys;
  const GridFrame& g = *s.frame;
  double acc = 0.0;
  for (int ax = 0; ax < c.dim; ++ax) {
    const int a1 = (ax == 0) ? 1 : 0;
    const int a2 = (ax == 2) ? 1 : 2;
    const double area = s.dualw[a1][ijk[a1]] * s.dualw[a2][ijk[a2]];
    const std::vector<double>& xs = g.axis[ax];
    const std::size_t idx = ijk[ax];
    if (idx > 0) {
      const std::size_t nb = id - c.stride[ax];
      const double d = xs[idx] - xs[idx - 1];
      const double th =
          s.state[nb] == NodeState::unknown ? 1.0 : s.theta(id, ax, -1);
      acc += c.coef(ax, nb) * area / (th * d) * (v[id] - v[nb]);
    }
    if (idx + 1 < c.count[ax]) {
      const std::size_t nb = id + c.stride[ax];
      const double d = xs[idx + 1] - xs[idx];
      const double th =
          s.state[nb] == NodeState::unknown ? 1.0 : s.theta(id, ax, +1);
      acc += c.coef(ax, id) * area / (th * d) * (v[id] - v[nb]);
    }
  }
  return acc;
}

inline double diag_node(const Ctx& c, const std::size_t ijk[3],
                        std::size_t id) {
  const DiscreteSystem& s = *c.sys;
  const GridFrame& g = *s.frame;
  double acc = 0.0;
  for (int ax = 0; ax < c.dim; ++ax) {
    const int a1 = (ax == 0) ? 1 : 0;
    const int a2 = (ax == 2) ? 1 : 2;
    const double area = s.dualw[a1][ijk[a1]] * s.dualw[a2][ijk[a2]];
    const std::vector<double>& xs = g.axis[ax];
    const std::size_t idx = ijk[ax];
    if (idx > 0) {
      const std::size_t nb = id - c.stride[ax];
      const double d = xs[idx] - xs[idx - 1];
      const double th =
          s.state[nb] == NodeState::unknown ? 1.0 : s.theta(id, ax, -1);
      acc += c.coef(ax, nb) * area / (th * d);
    }
    if (idx + 1 < c.count[ax]) {
      const std::size_t nb = id + c.stride[ax];
      const double d = xs[idx + 1] - xs[idx];
      const double th =
          s.state[nb] == NodeState::unknown ? 1.0 : s.theta(id, ax, +1);
      acc += c.coef(ax, id) * area / (th * d);
    }
  }
  return acc;
}

inline void apply_row(const Ctx& c, std::size_t row, const std::vector<double>& v,
                      std::vector<double>& out) {
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    if (c.sys->state[id] != NodeState::unknown) {
      out[id] = 0.0;
      continue;
    }
    const std::size_t ijk[3] = {i, j, k};
    out[id] = apply_node(c, ijk, id, v);
  }
}

inline void diag_row(const Ctx& c, std::size_t row, std::vector<double>& out) {
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    if (c.sys->state[id] != NodeState::unknown) {
      out[id] = 1.0;  // harmless placeholder; these entries are never used
      continue;
    }
    const std::size_t ijk[3] = {i, j, k};
    out[id] = diag_node(c, ijk, id);
  }
}

// Energy of the +direction links owned by this row's nodes. Links between
// two Dirichlet nodes carry no energy (equal values or disconnected).
inline double energy_row(const Ctx& c, std::size_t row,
                         const std::vector<double>& v) {
  const DiscreteSystem& s = *c.sys;
  const GridFrame& g = *s.frame;
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  double acc = 0.0;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    const std::size_t ijk[3] = {i, j, k};
    for (int ax = 0; ax < c.dim; ++ax) {
      const std::size_t idx = ijk[ax];
      if (idx + 1 >= c.count[ax]) continue;
      const std::size_t nb = id + c.stride[ax];
      const bool u0 = s.state[id] == NodeState::unknown;
      const bool u1 = s.state[nb] == NodeState::unknown;
      if (!u0 && !u1) continue;
      double th = 1.0;
      if (!u1) {
        th = s.theta(id, ax, +1);
      } else if (!u0) {
        th = s.theta(nb, ax, -1);
      }
      const int a1 = (ax == 0) ? 1 : 0;
      const int a2 = (ax == 2) ? 1 : 2;
      const double area = s.dualw[a1][ijk[a1]] * s.dualw[a2][ijk[a2]];
      const double d = g.axis[ax][idx + 1] - g.axis[ax][idx];
      const double dv = v[nb] - v[id];
      acc += c.coef(ax, id) * area / (th * d) * dv * dv;
    }
  }
  return acc;
}

// Central difference of v along axis t at a node, one-sided at grid edges.
inline double central_diff(const Ctx& c, const std::vector<double>& v,
                           std::size_t id, const std::size_t ijk[3], int t) {
  const std::vector<double>& xs = c.sys->frame->axis[t];
  const std::size_t it = ijk[t];
  const std::size_t lo = (it > 0) ? it - 1 : it;
  const std::size_t hi = (it + 1 < c.count[t]) ? it + 1 : it;
  if (hi == lo) return 0.0;
  const std::size_t idlo = id - (it - lo) * c.stride[t];
  const std::size_t idhi = id + (hi - it) * c.stride[t];
  return (v[idhi] - v[idlo]) / (xs[hi] - xs[lo]);
}

inline void coef_row(const Ctx& c, std::size_t row, const std::vector<double>& v,
                     double p, double eps2, FaceCoef& fc) {
  const DiscreteSystem& s = *c.sys;
  const GridFrame& g = *s.frame;
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  const double expo = 0.5 * (p - 2.0);
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    const std::size_t ijk[3] = {i, j, k};
    for (int ax = 0; ax < c.dim; ++ax) {
      const std::size_t idx = ijk[ax];
      if (idx + 1 >= c.count[ax]) continue;
      const std::size_t nb = id + c.stride[ax];
      std::size_t ijk2[3] = {i, j, k};
      ijk2[ax] += 1;
      // Across a cut face the span between the stored values is theta*d.
      const bool u0 = s.state[id] == NodeState::unknown;
      const bool u1 = s.state[nb] == NodeState::unknown;
      double th = 1.0;
      if (u0 && !u1) {
        th = s.theta(id, ax, +1);
      } else if (u1 && !u0) {
        th = s.theta(nb, ax, -1);
      }
      const double gn =
          (v[nb] - v[id]) / (th * (g.axis[ax][idx + 1] - g.axis[ax][idx]));
      double g2 = gn * gn + eps2;
      for (int t = 0; t < c.dim; ++t) {
        if (t == ax) continue;
        const double gt = 0.5 * (central_diff(c, v, id, ijk, t) +
                                 central_diff(c, v, nb, ijk2, t));
        g2 += gt * gt;
      }
      fc[ax][id] = std::pow(g2, expo);
    }
  }
}

// Thomas solve of the assembled symmetric tridiagonal line system followed
// by the damped scatter of the correction onto unknown nodes.
inline void thomas_scatter(const DiscreteSystem& s, std::size_t base,
                           std::size_t st, std::size_t n, double omega,
                           std::vector<double>& e, std::vector<double>& wd,
                           std::vector<double>& woff, std::vector<double>& wx) {
  for (std::size_t m = 1; m < n; ++m) {
    const double f = woff[m] / wd[m - 1];
    wd[m] -= f * woff[m];
    wx[m] -= f * wx[m - 1];
  }
  wx[n - 1] /= wd[n - 1];
  for (std::size_t m = n - 1; m-- > 0;)
    wx[m] = (wx[m] - woff[m + 1] * wx[m + 1]) / wd[m];
  std::size_t id = base;
  for (std::size_t m = 0; m < n; ++m, id += st)
    if (s.state[id] == NodeState::unknown) e[id] += omega * wx[m];
}

// One line along axis ax: assemble the tridiagonal block (full row diagonal
// plus the axis-ax couplings between unknown nodes), solve it by the Thomas
// algorithm, and add omega times the correction to e. Dirichlet nodes get
// identity rows with zero right-hand side, so their correction stays zero.
// Lines are disjoint node sets, so sweeps parallelize without races and the
// per-line arithmetic is identical for both backends.
inline void line_solve(const Ctx& c, int ax, std::size_t i1, std::size_t i2,
                       int t1, int t2, double omega,
                       const std::vector<double>& diag,
                       const std::vector<double>& resid, std::vector<double>& e,
                       std::vector<double>& wd, std::vector<double>& woff,
                       std::vector<double>& wx) {
  const DiscreteSystem& s = *c.sys;
  const std::vector<double>& xs = s.frame->axis[ax];
  const std::size_t n = c.count[ax];
  const std::size_t st = c.stride[ax];
  const std::size_t base = i1 * c.stride[t1] + i2 * c.stride[t2];
  const double area = s.dualw[t1][i1] * s.dualw[t2][i2];
  std::size_t id = base;
  for (std::size_t m = 0; m < n; ++m, id += st) {
    const bool un = s.state[id] == NodeState::unknown;
    wd[m] = un ? diag[id] : 1.0;
    wx[m] = un ? resid[id] : 0.0;
    // Couplings to Dirichlet neighbors live only on the diagonal (their
    // correction is zero), and links between unknowns always have theta = 1.
    woff[m] = (m > 0 && un && s.state[id - st] == NodeState::unknown)
                  ? -c.coef(ax, id - st) * area / (xs[m] - xs[m - 1])
                  : 0.0;
  }
  thomas_scatter(s, base, st, n, omega, e, wd, woff, wx);
}

inline double stencil_node_lw(const Ctx& c, const LinkWeights& lw,
                              const std::size_t ijk[3], std::size_t id,
                              const std::vector<double>& v) {
  double acc = 0.0;
  for (int ax = 0; ax < c.dim; ++ax) {
    const std::size_t idx = ijk[ax];
    if (idx > 0) {
      const std::size_t nb = id - c.stride[ax];
      acc += lw.w[ax][nb] * (v[id] - v[nb]);
    }
    if (idx + 1 < c.count[ax]) {
      const std::size_t nb = id + c.stride[ax];
      acc += lw.w[ax][id] * (v[id] - v[nb]);
    }
  }
  return acc;
}

// Axes of a batched sweep along ax: lines are processed in slices of the
// outer axis ox, with the inner loops running over the batch axis vx so the
// Thomas recurrences of many independent lines interleave (hiding division
// latency) and memory access stays plane-local.
inline void batch_axes(int ax, int& vx, int& ox) {
  vx = (ax == 0) ? 1 : 0;
  ox = 3 - ax - vx;
}

// Assembly pass of a batched sweep along ax, one grid row at a time: full
// row diagonal as pivot, the coupling to the -ax neighbor when both ends
// are unknown, and the right-hand side. Fused sweeps form r - A e here, on
// the frozen incoming e, with exactly the stencil arithmetic of
// apply_lw_row; plain sweeps copy the caller's residual. Dirichlet nodes
// get identity rows with zero right-hand side.
template <bool Fused>
inline void smooth_assemble_row(const Ctx& c, const LinkWeights& lw,
                                const std::vector<double>& diag, int ax,
                                std::size_t row, const std::vector<double>& rin,
                                const std::vector<double>& e,
                                LineWorkspace& ws) {
  const DiscreteSystem& s = *c.sys;
  const std::size_t stm = c.stride[ax];
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    const std::size_t ijk[3] = {i, j, k};
    const bool un = s.state[id] == NodeState::unknown;
    ws.piv[id] = un ? diag[id] : 1.0;
    if (!un) {
      ws.rhs[id] = 0.0;
    } else if constexpr (Fused) {
      ws.rhs[id] = rin[id] - stencil_node_lw(c, lw, ijk, id, e);
    } else {
      ws.rhs[id] = rin[id];
    }
    // Couplings to Dirichlet neighbors live only on the diagonal (their
    // correction is zero), and links between unknowns always have theta = 1.
    ws.off[id] = (ijk[ax] > 0 && un && s.state[id - stm] == NodeState::unknown)
                     ? -lw.w[ax][id - stm]
                     : 0.0;
  }
}

// Elimination, back-substitution, and damped scatter for all lines along ax
// within outer slice o, interleaved over the batch axis vx so the Thomas
// recurrences of independent lines pipeline. Touches only slice-o nodes of
// e, and the per-line arithmetic equals thomas_scatter's bitwise.
inline void smooth_solve_slice(const Ctx& c, int ax, int vx, int ox,
                               std::size_t o, double omega, LineWorkspace& ws,
                               std::vector<double>& e) {
  const DiscreteSystem& s = *c.sys;
  const std::size_t nm = c.count[ax], nv = c.count[vx];
  const std::size_t stm = c.stride[ax], stv = c.stride[vx];
  const std::size_t base = o * c.stride[ox];
  for (std::size_t m = 1; m < nm; ++m) {
    const std::size_t r1 = base + m * stm, r0 = r1 - stm;
    for (std::size_t q = 0; q < nv; ++q) {
      const std::size_t a = r1 + q * stv, b = r0 + q * stv;
      const double f = ws.off[a] / ws.piv[b];
      ws.piv[a] -= f * ws.off[a];
      ws.rhs[a] -= f * ws.rhs[b];
    }
  }
  const std::size_t rl = base + (nm - 1) * stm;
  for (std::size_t q = 0; q < nv; ++q) ws.rhs[rl + q * stv] /= ws.piv[rl + q * stv];
  for (std::size_t m = nm - 1; m-- > 0;) {
    const std::size_t r0 = base + m * stm, r1 = r0 + stm;
    for (std::size_t q = 0; q < nv; ++q) {
      const std::size_t a = r0 + q * stv, b = r1 + q * stv;
      ws.rhs[a] = (ws.rhs[a] - ws.off[b] * ws.rhs[b]) / ws.piv[a];
    }
  }
  for (std::size_t m = 0; m < nm; ++m) {
    const std::size_t r0 = base + m * stm;
    for (std::size_t q = 0; q < nv; ++q) {
      const std::size_t a = r0 + q * stv;
      if (s.state[a] == NodeState::unknown) e[a] += omega * ws.rhs[a];
    }
  }
}

// Assembled weight of the + side link of each node, computed with exactly
// the arithmetic of apply_node/diag_node so the weight-based kernels match
// the coefficient-based ones bitwise.
inline void weights_row(const Ctx& c, std::size_t row, LinkWeights& lw) {
  const DiscreteSystem& s = *c.sys;
  const GridFrame& g = *s.frame;
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    const std::size_t ijk[3] = {i, j, k};
    for (int ax = 0; ax < c.dim; ++ax) {
      const std::size_t idx = ijk[ax];
      if (idx + 1 >= c.count[ax]) continue;
      const std::size_t nb = id + c.stride[ax];
      const bool u0 = s.state[id] == NodeState::unknown;
      const bool u1 = s.state[nb] == NodeState::unknown;
      if (!u0 && !u1) continue;  // stays zero
      double th = 1.0;
      if (!u1) {
        th = s.theta(id, ax, +1);
      } else if (!u0) {
        th = s.theta(nb, ax, -1);
      }
      const int a1 = (ax == 0) ? 1 : 0;
      const int a2 = (ax == 2) ? 1 : 2;
      const double area = s.dualw[a1][ijk[a1]] * s.dualw[a2][ijk[a2]];
      const double d = g.axis[ax][idx + 1] - g.axis[ax][idx];
      lw.w[ax][id] = c.coef(ax, id) * area / (th * d);
    }
  }
}

inline void apply_lw_row(const Ctx& c, const LinkWeights& lw, std::size_t row,
                         const std::vector<double>& v,
                         std::vector<double>& out) {
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    if (c.sys->state[id] != NodeState::unknown) {
      out[id] = 0.0;
      continue;
    }
    const std::size_t ijk[3] = {i, j, k};
    out[id] = stencil_node_lw(c, lw, ijk, id, v);
  }
}

inline void diag_lw_row(const Ctx& c, const LinkWeights& lw, std::size_t row,
                        std::vector<double>& out) {
  const std::size_t k = row / c.ny, j = row % c.ny;
  std::size_t id = row * c.nx;
  for (std::size_t i = 0; i < c.nx; ++i, ++id) {
    if (c.sys->state[id] != NodeState::unknown) {
      out[id] = 1.0;  // harmless placeholder; these entries are never used
      continue;
    }
    const std::size_t ijk[3] = {i, j, k};
    double acc = 0.0;
    for (int ax = 0; ax < c.dim; ++ax) {
      const std::size_t idx = ijk[ax];
      if (idx > 0) acc += lw.w[ax][id - c.stride[ax]];
      if (idx + 1 < c.count[ax]) acc += lw.w[ax][id];
    }
    out[id] = acc;
  }
}

}  // namespace

namespace {
Exec g_exec = Exec::openmp;
}

void set_default_exec(Exec e) { g_exec = e; }
Exec default_exec() { return g_exec; }

// ---------------------------------------------------------------- serial --

namespace serial {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double partial[kBlocks];
  for (std::size_t blk = 0; blk < kBlocks; ++blk) {
    double s = 0.0;
    const std::size_t hi = block_lo(n, blk + 1);
    for (std::size_t i = block_lo(n, blk); i < hi; ++i) s += a[i] * b[i];
    partial[blk] = s;
  }
  double total = 0.0;
  for (std::size_t blk = 0; blk < kBlocks; ++blk) total += partial[blk];
  return total;
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void xpay(const std::vector<double>& x, double beta, std::vector<double>& p) {
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = x[i] + beta * p[i];
}

void pointwise_div(const std::vector<double>& r, const std::vector<double>& d,
                   std::vector<double>& z) {
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = r[i] / d[i];
}

void apply_stencil(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v, std::vector<double>& out) {
  const Ctx c(sys, fc);
  for (std::size_t row = 0; row < c.rows; ++row) apply_row(c, row, v, out);
}

void jacobi_diag(const DiscreteSystem& sys, const FaceCoef& fc,
                 std::vector<double>& diag) {
  const Ctx c(sys, fc);
  for (std::size_t row = 0; row < c.rows; ++row) diag_row(c, row, diag);
}

double link_energy(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v) {
  const Ctx c(sys, fc);
  double partial[kBlocks];
  for (std::size_t blk = 0; blk < kBlocks; ++blk) {
    double s = 0.0;
    const std::size_t hi = block_lo(c.rows, blk + 1);
    for (std::size_t row = block_lo(c.rows, blk); row < hi; ++row)
      s += energy_row(c, row, v);
    partial[blk] = s;
  }
  double total = 0.0;
  for (std::size_t blk = 0; blk < kBlocks; ++blk) total += partial[blk];
  return total;
}

void update_face_coef(const DiscreteSystem& sys, const std::vector<double>& v,
                      double p, double eps, FaceCoef& fc) {
  const Ctx c(sys, fc);
  for (int ax = 0; ax < c.dim; ++ax) fc[ax].assign(v.size(), 1.0);
  for (std::size_t row = 0; row < c.rows; ++row)
    coef_row(c, row, v, p, eps * eps, fc);
}

void line_jacobi(const DiscreteSystem& sys, const FaceCoef& fc,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e) {
  const Ctx c(sys, fc);
  const int t1 = (ax == 0) ? 1 : 0;
  const int t2 = (ax == 2) ? 1 : 2;
  const std::size_t lines = c.count[t1] * c.count[t2];
  std::vector<double> wd(c.count[ax]), woff(c.count[ax]), wx(c.count[ax]);
  for (std::size_t L = 0; L < lines; ++L)
    line_solve(c, ax, L % c.count[t1], L / c.count[t1], t1, t2, omega, diag,
               resid, e, wd, woff, wx);
}

void build_link_weights(const DiscreteSystem& sys, const FaceCoef& fc,
                        LinkWeights& lw) {
  const Ctx c(sys, fc);
  const std::size_t n = sys.frame->num_nodes();
  for (int ax = 0; ax < c.dim; ++ax) lw.w[ax].assign(n, 0.0);
  for (std::size_t row = 0; row < c.rows; ++row) weights_row(c, row, lw);
}

void apply_stencil(const DiscreteSystem& sys, const LinkWeights& lw,
                   const std::vector<double>& v, std::vector<double>& out) {
  const FaceCoef none;
  const Ctx c(sys, none);
  for (std::size_t row = 0; row < c.rows; ++row) apply_lw_row(c, lw, row, v, out);
}

void jacobi_diag(const DiscreteSystem& sys, const LinkWeights& lw,
                 std::vector<double>& diag) {
  const FaceCoef none;
  const Ctx c(sys, none);
  for (std::size_t row = 0; row < c.rows; ++row) diag_lw_row(c, lw, row, diag);
}

void line_jacobi(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e) {
  const FaceCoef none;
  const Ctx c(sys, none);
  int vx, ox;
  batch_axes(ax, vx, ox);
  LineWorkspace ws;
  const std::size_t n = sys.frame->num_nodes();
  ws.piv.resize(n);
  ws.off.resize(n);
  ws.rhs.resize(n);
  for (std::size_t row = 0; row < c.rows; ++row)
    smooth_assemble_row<false>(c, lw, diag, ax, row, resid, resid, ws);
  for (std::size_t o = 0; o < c.count[ox]; ++o)
    smooth_solve_slice(c, ax, vx, ox, o, omega, ws, e);
}

void line_smooth(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& r, std::vector<double>& e,
                 LineWorkspace& ws) {
  const FaceCoef none;
  const Ctx c(sys, none);
  int vx, ox;
  batch_axes(ax, vx, ox);
  const std::size_t n = sys.frame->num_nodes();
  ws.piv.resize(n);
  ws.off.resize(n);
  ws.rhs.resize(n);
  for (std::size_t row = 0; row < c.rows; ++row)
    smooth_assemble_row<true>(c, lw, diag, ax, row, r, e, ws);
  for (std::size_t o = 0; o < c.count[ox]; ++o)
    smooth_solve_slice(c, ax, vx, ox, o, omega, ws, e);
}

}  // namespace serial

// ---------------------------------------------------------------- openmp --

namespace par {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double partial[kBlocks];
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < kBlocks; ++blk) {
    double s = 0.0;
    const std::size_t hi = block_lo(n, blk + 1);
    for (std::size_t i = block_lo(n, blk); i < hi; ++i) s += a[i] * b[i];
    partial[blk] = s;
  }
  double total = 0.0;
  for (std::size_t blk = 0; blk < kBlocks; ++blk) total += partial[blk];
  return total;
}

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = y.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpay(const std::vector<double>& x, double beta, std::vector<double>& p) {
  const std::size_t n = p.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) p[i] = x[i] + beta * p[i];
}

void pointwise_div(const std::vector<double>& r, const std::vector<double>& d,
                   std::vector<double>& z) {
  const std::size_t n = z.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / d[i];
}

void apply_stencil(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v, std::vector<double>& out) {
  const Ctx c(sys, fc);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row) apply_row(c, row, v, out);
}

void jacobi_diag(const DiscreteSystem& sys, const FaceCoef& fc,
                 std::vector<double>& diag) {
  const Ctx c(sys, fc);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row) diag_row(c, row, diag);
}

double link_energy(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v) {
  const Ctx c(sys, fc);
  double partial[kBlocks];
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < kBlocks; ++blk) {
    double s = 0.0;
    const std::size_t hi = block_lo(c.rows, blk + 1);
    for (std::size_t row = block_lo(c.rows, blk); row < hi; ++row)
      s += energy_row(c, row, v);
    partial[blk] = s;
  }
  double total = 0.0;
  for (std::size_t blk = 0; blk < kBlocks; ++blk) total += partial[blk];
  return total;
}

void update_face_coef(const DiscreteSystem& sys, const std::vector<double>& v,
                      double p, double eps, FaceCoef& fc) {
  const Ctx c(sys, fc);
  for (int ax = 0; ax < c.dim; ++ax) fc[ax].assign(v.size(), 1.0);
  const double eps2 = eps * eps;
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row) coef_row(c, row, v, p, eps2, fc);
}

void line_jacobi(const DiscreteSystem& sys, const FaceCoef& fc,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e) {
  const Ctx c(sys, fc);
  const int t1 = (ax == 0) ? 1 : 0;
  const int t2 = (ax == 2) ? 1 : 2;
  const std::size_t lines = c.count[t1] * c.count[t2];
#pragma omp parallel
  {
    std::vector<double> wd(c.count[ax]), woff(c.count[ax]), wx(c.count[ax]);
#pragma omp for schedule(static)
    for (std::size_t L = 0; L < lines; ++L)
      line_solve(c, ax, L % c.count[t1], L / c.count[t1], t1, t2, omega, diag,
                 resid, e, wd, woff, wx);
  }
}

void build_link_weights(const DiscreteSystem& sys, const FaceCoef& fc,
                        LinkWeights& lw) {
  const Ctx c(sys, fc);
  const std::size_t n = sys.frame->num_nodes();
  for (int ax = 0; ax < c.dim; ++ax) lw.w[ax].assign(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row) weights_row(c, row, lw);
}

void apply_stencil(const DiscreteSystem& sys, const LinkWeights& lw,
                   const std::vector<double>& v, std::vector<double>& out) {
  const FaceCoef none;
  const Ctx c(sys, none);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row) apply_lw_row(c, lw, row, v, out);
}

void jacobi_diag(const DiscreteSystem& sys, const LinkWeights& lw,
                 std::vector<double>& diag) {
  const FaceCoef none;
  const Ctx c(sys, none);
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row) diag_lw_row(c, lw, row, diag);
}

void line_jacobi(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e) {
  const FaceCoef none;
  const Ctx c(sys, none);
  int vx, ox;
  batch_axes(ax, vx, ox);
  LineWorkspace ws;
  const std::size_t n = sys.frame->num_nodes();
  ws.piv.resize(n);
  ws.off.resize(n);
  ws.rhs.resize(n);
  const std::size_t no = c.count[ox];
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row)
    smooth_assemble_row<false>(c, lw, diag, ax, row, resid, resid, ws);
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < no; ++o)
    smooth_solve_slice(c, ax, vx, ox, o, omega, ws, e);
}

void line_smooth(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& r, std::vector<double>& e,
                 LineWorkspace& ws) {
  const FaceCoef none;
  const Ctx c(sys, none);
  int vx, ox;
  batch_axes(ax, vx, ox);
  const std::size_t n = sys.frame->num_nodes();
  ws.piv.resize(n);
  ws.off.resize(n);
  ws.rhs.resize(n);
  const std::size_t no = c.count[ox];
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < c.rows; ++row)
    smooth_assemble_row<true>(c, lw, diag, ax, row, r, e, ws);
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < no; ++o)
    smooth_solve_slice(c, ax, vx, ox, o, omega, ws, e);
}

}  // namespace par

// -------------------------------------------------------------- dispatch --

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return g_exec == Exec::openmp ? par::dot(a, b) : serial::dot(a, b);
}
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  g_exec == Exec::openmp ? par::axpy(alpha, x, y) : serial::axpy(alpha, x, y);
}
void xpay(const std::vector<double>& x, double beta, std::vector<double>& p) {
  g_exec == Exec::openmp ? par::xpay(x, beta, p) : serial::xpay(x, beta, p);
}
void pointwise_div(const std::vector<double>& r, const std::vector<double>& d,
                   std::vector<double>& z) {
  g_exec == Exec::openmp ? par::pointwise_div(r, d, z)
                         : serial::pointwise_div(r, d, z);
}
void apply_stencil(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v, std::vector<double>& out) {
  g_exec == Exec::openmp ? par::apply_stencil(sys, fc, v, out)
                         : serial::apply_stencil(sys, fc, v, out);
}
void jacobi_diag(const DiscreteSystem& sys, const FaceCoef& fc,
                 std::vector<double>& diag) {
  g_exec == Exec::openmp ? par::jacobi_diag(sys, fc, diag)
                         : serial::jacobi_diag(sys, fc, diag);
}
double link_energy(const DiscreteSystem& sys, const FaceCoef& fc,
                   const std::vector<double>& v) {
  return g_exec == Exec::openmp ? par::link_energy(sys, fc, v)
                                : serial::link_energy(sys, fc, v);
}
void update_face_coef(const DiscreteSystem& sys, const std::vector<double>& v,
                      double p, double eps, FaceCoef& fc) {
  g_exec == Exec::openmp ? par::update_face_coef(sys, v, p, eps, fc)
                         : serial::update_face_coef(sys, v, p, eps, fc);
}
void line_jacobi(const DiscreteSystem& sys, const FaceCoef& fc,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e) {
  g_exec == Exec::openmp
      ? par::line_jacobi(sys, fc, diag, ax, omega, resid, e)
      : serial::line_jacobi(sys, fc, diag, ax, omega, resid, e);
}
void build_link_weights(const DiscreteSystem& sys, const FaceCoef& fc,
                        LinkWeights& lw) {
  g_exec == Exec::openmp ? par::build_link_weights(sys, fc, lw)
                         : serial::build_link_weights(sys, fc, lw);
}
void apply_stencil(const DiscreteSystem& sys, const LinkWeights& lw,
                   const std::vector<double>& v, std::vector<double>& out) {
  g_exec == Exec::openmp ? par::apply_stencil(sys, lw, v, out)
                         : serial::apply_stencil(sys, lw, v, out);
}
void jacobi_diag(const DiscreteSystem& sys, const LinkWeights& lw,
                 std::vector<double>& diag) {
  g_exec == Exec::openmp ? par::jacobi_diag(sys, lw, diag)
                         : serial::jacobi_diag(sys, lw, diag);
}
void line_jacobi(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& resid, std::vector<double>& e) {
  g_exec == Exec::openmp
      ? par::line_jacobi(sys, lw, diag, ax, omega, resid, e)
      : serial::line_jacobi(sys, lw, diag, ax, omega, resid, e);
}
void line_smooth(const DiscreteSystem& sys, const LinkWeights& lw,
                 const std::vector<double>& diag, int ax, double omega,
                 const std::vector<double>& r, std::vector<double>& e,
                 LineWorkspace& ws) {
  g_exec == Exec::openmp
      ? par::line_smooth(sys, lw, diag, ax, omega, r, e, ws)
      : serial::line_smooth(sys, lw, diag, ax, omega, r, e, ws);
}

}  // namespace kernels
}  // namespace capmink
