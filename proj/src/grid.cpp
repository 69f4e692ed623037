#include "capmink/grid.hpp"

#include <algorithm>
#include <cmath>

#include "capmink/errors.hpp"

namespace capmink {
namespace {

constexpr double kStretchRatio = 1.3;
constexpr double kThetaMin = 0.01;

// One axis of the graded grid: uniform spacing h on [c-w, c+w], then
// geometrically stretched gaps (capped) until +-reach is covered, with one
// extra node beyond so every node inside the sphere has neighbors.
std::vector<double> build_axis(double c, double w, double h, double reach,
                               double gap_cap) {
  const int m = static_cast<int>(std::ceil(w / h));
  std::vector<double> right;  // offsets > 0
  for (int k = 1; k <= m; ++k) right.push_back(k * h);
  double gap = h;
  while (right.back() < reach) {
    gap = std::min(gap * kStretchRatio, gap_cap);
    right.push_back(right.back() + gap);
  }
  std::vector<double> xs;
  xs.reserve(2 * right.size() + 1);
  for (std::size_t i = right.size(); i > 0; --i) xs.push_back(c - right[i - 1]);
  xs.push_back(c);
  for (double o : right) xs.push_back(c + o);
  return xs;
}

}  // namespace

GridFrame make_frame(const Polytope& P, const GridConfig& cfg,
                     double kappa_scale) {
  if (!(cfg.cells_per_unit > 0) || !(cfg.truncation_factor >= 4.0))
    throw ValidationError(
        "grid config: cells_per_unit must be positive and truncation_factor "
        ">= 4");
  GridFrame f;
  f.dim = P.dim;
  const double h = 1.0 / cfg.cells_per_unit;
  f.core_spacing = h;

  Vec lo = P.vertices[0], hi = P.vertices[0];
  for (const Vec& v : P.vertices)
    for (int j = 0; j < 3; ++j) {
      lo[j] = std::min(lo[j], v[j]);
      hi[j] = std::max(hi[j], v[j]);
    }
  const double diam = metrics(P).diameter;
  f.center = 0.5 * (lo + hi);
  f.outer_radius = cfg.truncation_factor * kappa_scale * diam;

  // Pad the uniform core so small support perturbations and the quadrature
  // probes (a few cells outward from the facets) stay in the uniform region.
  const double pad = 6.0 * h + 0.02 * diam;
  const double reach = f.outer_radius * 1.0001;
  const double gap_cap = f.outer_radius / 8.0;
  for (int ax = 0; ax < f.dim; ++ax) {
    const double w = 0.5 * (hi[ax] - lo[ax]) + pad;
    f.axis[ax] = build_axis(f.center[ax], w, h, reach, gap_cap);
  }
  if (f.dim == 2) f.axis[2] = {0.0};
  return f;
}

DiscreteSystem classify(const GridFrame& frame, const Polytope& P) {
  DiscreteSystem sys;
  sys.frame = &frame;
  sys.body = &P;
  const std::size_t nx = frame.nodes_per_axis(0);
  const std::size_t ny = frame.nodes_per_axis(1);
  const std::size_t nz = frame.nodes_per_axis(2);
  const std::size_t total = nx * ny * nz;
  sys.state.assign(total, NodeState::unknown);
  sys.fix_slot.assign(total, kNoFix);

  for (int ax = 0; ax < 3; ++ax) {
    const std::vector<double>& xs = frame.axis[ax];
    std::vector<double>& w = sys.dualw[ax];
    w.resize(xs.size());
    if (xs.size() == 1) {
      w[0] = 1.0;  // unit thickness for the collapsed axis in 2d
      continue;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double left = (i == 0) ? xs[0] : 0.5 * (xs[i - 1] + xs[i]);
      const double right =
          (i + 1 == xs.size()) ? xs.back() : 0.5 * (xs[i] + xs[i + 1]);
      w[i] = right - left;
    }
  }

  const int N = P.num_directions();
  const double R2 = frame.outer_radius * frame.outer_radius;

  // Tile sweep: per tile, find the facet planes whose halfspace boundary
  // crosses the tile box; nodes in the tile are tested against those only.
  const std::size_t tile = 8;
  std::vector<int> active;
  for (std::size_t k0 = 0; k0 < nz; k0 += tile)
    for (std::size_t j0 = 0; j0 < ny; j0 += tile)
      for (std::size_t i0 = 0; i0 < nx; i0 += tile) {
        const std::size_t i1 = std::min(i0 + tile, nx);
        const std::size_t j1 = std::min(j0 + tile, ny);
        const std::size_t k1 = std::min(k0 + tile, nz);
        const Vec blo = frame.node_pos(i0, j0, k0);
        const Vec bhi = frame.node_pos(i1 - 1, j1 - 1, k1 - 1);

        active.clear();
        bool outside = false;  // tile entirely outside the body
        for (int f = 0; f < N && !outside; ++f) {
          const Vec& u = P.normals[f];
          double mn = 0, mx = 0;
          for (int d = 0; d < 3; ++d) {
            mn += u[d] * (u[d] > 0 ? blo[d] : bhi[d]);
            mx += u[d] * (u[d] > 0 ? bhi[d] : blo[d]);
          }
          if (mn > P.support[f]) {
            outside = true;  // every tile point violates this halfspace
          } else if (mx > P.support[f]) {
            active.push_back(f);
          }
        }

        for (std::size_t k = k0; k < k1; ++k)
          for (std::size_t j = j0; j < j1; ++j)
            for (std::size_t i = i0; i < i1; ++i) {
              const std::size_t id = (k * ny + j) * nx + i;
              const Vec x = frame.node_pos(i, j, k);
              const Vec rel = x - frame.center;
              if (norm2(rel) >= R2) {
                sys.state[id] = NodeState::outer;
                continue;
              }
              if (outside) continue;  // stays unknown
              bool in = true;
              for (int f : active)
                if (dot(x, P.normals[f]) > P.support[f]) {
                  in = false;
                  break;
                }
              if (in) sys.state[id] = NodeState::body;
            }
      }

  // Cut links: for each unknown node with a Dirichlet neighbor along an
  // axis, locate the exact crossing.
  const std::size_t stride[3] = {1, nx, nx * ny};
  const std::size_t count[3] = {nx, ny, nz};
  auto crossing_theta = [&](const Vec& x, const Vec& y, bool to_body) {
    if (to_body) {
      // Entry parameter into the convex body: max over the crossing
      // parameters of the halfspaces violated at x.
      double t = 0.0;
      for (int f = 0; f < N; ++f) {
        const double gx = dot(x, P.normals[f]) - P.support[f];
        if (gx <= 0.0) continue;
        const double gy = dot(y, P.normals[f]) - P.support[f];
        t = std::max(t, gx / (gx - gy));
      }
      return std::clamp(t, kThetaMin, 1.0);
    }
    // Crossing of the truncation sphere.
    const Vec a = x - frame.center;
    const Vec d = y - x;
    const double qa = norm2(d), qb = 2.0 * dot(a, d), qc = norm2(a) - R2;
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
    return std::clamp(t, kThetaMin, 1.0);
  };

  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t id = (k * ny + j) * nx + i;
        if (sys.state[id] != NodeState::unknown) continue;
        ++sys.num_unknown;
        const std::size_t ijk[3] = {i, j, k};
        std::array<double, 6> th = {1, 1, 1, 1, 1, 1};
        bool cut = false;
        for (int ax = 0; ax < frame.dim; ++ax) {
          for (int dir = -1; dir <= 1; dir += 2) {
            if (dir < 0 && ijk[ax] == 0) continue;
            if (dir > 0 && ijk[ax] + 1 == count[ax]) continue;
            const std::size_t nb = dir < 0 ? id - stride[ax] : id + stride[ax];
            if (sys.state[nb] == NodeState::unknown) continue;
            Vec x = frame.node_pos(i, j, k);
            Vec y = x;
            y[ax] = frame.axis[ax][ijk[ax] + dir];
            th[2 * ax + (dir > 0 ? 1 : 0)] =
                crossing_theta(x, y, sys.state[nb] == NodeState::body);
            cut = true;
          }
        }
        if (cut) {
          sys.fix_slot[id] = static_cast<std::uint32_t>(sys.fix_theta.size());
          sys.fix_theta.push_back(th);
        }
      }
  return sys;
}

double interpolate(const GridFrame& frame, const std::vector<double>& u,
                   const Vec& x) {
  std::size_t cell[3] = {0, 0, 0};
  double w[3] = {0, 0, 0};
  for (int ax = 0; ax < 3; ++ax) {
    const std::vector<double>& xs = frame.axis[ax];
    if (xs.size() == 1) continue;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x[ax]);
    std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    hi = std::clamp<std::size_t>(hi, 1, xs.size() - 1);
    cell[ax] = hi - 1;
    w[ax] = std::clamp((x[ax] - xs[hi - 1]) / (xs[hi] - xs[hi - 1]), 0.0, 1.0);
  }
  const std::size_t sx = frame.stride(0), sy = frame.stride(1),
                    sz = frame.stride(2);
  double acc = 0.0;
  const int kmax = frame.dim == 3 ? 1 : 0;
  for (int dk = 0; dk <= kmax; ++dk)
    for (int dj = 0; dj <= 1; ++dj)
      for (int di = 0; di <= 1; ++di) {
        const double weight = (di ? w[0] : 1 - w[0]) * (dj ? w[1] : 1 - w[1]) *
                              (dk ? w[2] : 1 - w[2]);
        const std::size_t id =
            (cell[0] + di) * sx + (cell[1] + dj) * sy + (cell[2] + dk) * sz;
        acc += weight * u[id];
      }
  return acc;
}

}  // namespace capmink
