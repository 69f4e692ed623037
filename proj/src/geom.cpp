#include "capmink/geom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "capmink/errors.hpp"
#include "capmink/smalllp.hpp"

namespace capmink {
namespace {

// Perpendicular basis {e1, e2} completing u to a right-handed frame.
void plane_basis(const Vec& u, Vec& e1, Vec& e2) {
  const Vec axis = (std::abs(u[0]) < 0.9) ? vec3(1, 0, 0) : vec3(0, 1, 0);
  e1 = normalized(cross(u, axis));
  e2 = cross(u, e1);
}

bool lex_less(const Vec& a, const Vec& b) {
  if (a[0] != b[0]) return a[0] < b[0];
  if (a[1] != b[1]) return a[1] < b[1];
  return a[2] < b[2];
}

// 90-degree counterclockwise rotation, used to orient 2-D facets.
Vec rot90(const Vec& u) { return {-u[1], u[0], 0.0}; }

double bbox_diag(const std::vector<Vec>& pts) {
  if (pts.empty()) return 0.0;
  Vec lo = pts[0], hi = pts[0];
  for (const Vec& p : pts)
    for (int j = 0; j < 3; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  return norm(hi - lo);
}

// Assembles the derived data of a polytope from raw vertices plus, per
// direction, the ids of vertices lying on its plane. Vertices are put into
// canonical (lexicographic) order; facets with fewer than dim distinct
// vertices or vanishing measure are dropped (the direction supports only a
// vertex or an edge). Combinatorics are taken as given, so translate/scale
// can reuse them without re-running plane tests.
Polytope build_from_incidence(int dim, std::vector<Direction> normals,
                              std::vector<double> h, std::vector<Vec> verts,
                              std::vector<std::vector<int>> incidence,
                              const ChebyshevResult* cheb_known) {
  const int nv = static_cast<int>(verts.size());
  std::vector<int> order(nv);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return lex_less(verts[a], verts[b]); });
  std::vector<int> rank(nv);
  for (int r = 0; r < nv; ++r) rank[order[r]] = r;

  Polytope P;
  P.dim = dim;
  P.normals = std::move(normals);
  P.support = std::move(h);
  P.vertices.resize(nv);
  for (int i = 0; i < nv; ++i) P.vertices[rank[i]] = verts[i];

  const double diag = bbox_diag(P.vertices);
  const int N = P.num_directions();
  P.facet_index.assign(N, -1);

  for (int i = 0; i < N; ++i) {
    std::vector<int>& ids = incidence[i];
    for (int& id : ids) id = rank[id];
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (static_cast<int>(ids.size()) < dim) continue;

    FacetData f;
    f.normal_index = i;
    const Vec& u = P.normals[i];

    if (dim == 2) {
      // Keep the two extreme points along the edge tangent, ordered so the
      // polygon interior lies to the left.
      const Vec t = rot90(u);
      std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        return dot(P.vertices[a], t) < dot(P.vertices[b], t);
      });
      f.vertex_indices = {ids.front(), ids.back()};
      const Vec a = P.vertices[ids.front()], b = P.vertices[ids.back()];
      f.area = norm(b - a);
      f.centroid = 0.5 * (a + b);
      if (f.area <= 1e-12 * (diag + 1e-300)) continue;
    } else {
      Vec c0 = {0, 0, 0};
      for (int id : ids) c0 = c0 + P.vertices[id];
      c0 = (1.0 / static_cast<double>(ids.size())) * c0;
      Vec e1, e2;
      plane_basis(u, e1, e2);
      std::vector<std::pair<double, int>> ang;
      ang.reserve(ids.size());
      for (int id : ids) {
        const Vec d = P.vertices[id] - c0;
        ang.emplace_back(std::atan2(dot(d, e2), dot(d, e1)), id);
      }
      std::sort(ang.begin(), ang.end());
      // Rotate the cycle so it starts at the smallest vertex id.
      std::size_t start = 0;
      for (std::size_t k = 1; k < ang.size(); ++k)
        if (ang[k].second < ang[start].second) start = k;
      f.vertex_indices.reserve(ang.size());
      for (std::size_t k = 0; k < ang.size(); ++k)
        f.vertex_indices.push_back(ang[(start + k) % ang.size()].second);

      double area2 = 0.0;
      Vec cw = {0, 0, 0};
      const Vec p0 = P.vertices[f.vertex_indices[0]];
      for (std::size_t k = 1; k + 1 < f.vertex_indices.size(); ++k) {
        const Vec pa = P.vertices[f.vertex_indices[k]] - p0;
        const Vec pb = P.vertices[f.vertex_indices[k + 1]] - p0;
        const double tri2 = dot(cross(pa, pb), u);  // signed, positive if CCW
        area2 += tri2;
        const Vec tric = (1.0 / 3.0) * (pa + pb);  // centroid offset from p0
        cw = cw + tri2 * tric;
      }
      f.area = 0.5 * area2;
      if (f.area <= 1e-12 * (diag * diag + 1e-300)) continue;
      f.centroid = p0 + (1.0 / area2) * cw;
    }
    P.facet_index[i] = static_cast<int>(P.facets.size());
    P.facets.push_back(std::move(f));
  }

  if (cheb_known) {
    P.cheb_center = cheb_known->center;
    P.cheb_radius = cheb_known->radius;
  } else {
    const ChebyshevResult cc = chebyshev_center(
        P.normals, P.support, dim, diag + 1.0);
    P.cheb_center = cc.center;
    P.cheb_radius = cc.radius;
  }
  return P;
}

}  // namespace

double WeightedDirections::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

bool Polytope::contains(const Vec& x, double tol) const {
  for (int i = 0; i < num_directions(); ++i)
    if (dot(x, normals[i]) - support[i] > tol) return false;
  return true;
}

ValidationReport validate_directions(const WeightedDirections& U, double tol) {
  const int n = U.dim;
  const int N = U.size();
  if (n != 2 && n != 3)
    throw ValidationError("unsupported dimension " + std::to_string(n));
  if (N != static_cast<int>(U.weights.size()))
    throw ValidationError("directions/weights length mismatch");
  if (N < n + 1)
    throw ValidationError("need at least n+1 directions, got " +
                          std::to_string(N));
  for (int i = 0; i < N; ++i) {
    for (double c : U.directions[i])
      if (!std::isfinite(c)) throw ValidationError("nonfinite direction entry");
    if (!(U.weights[i] > 0.0) || !std::isfinite(U.weights[i]))
      throw ValidationError("weights must be positive and finite");
  }

  ValidationReport rep;
  rep.unit_norm = true;
  for (int i = 0; i < N; ++i) {
    if (std::abs(norm(U.directions[i]) - 1.0) > 1e-12) {
      rep.unit_norm = false;
      rep.detail = "direction " + std::to_string(i) + " is not unit length";
      break;
    }
  }

  // General position: every n-subset linearly independent.
  std::vector<Vec> un(N);
  for (int i = 0; i < N; ++i) un[i] = normalized(U.directions[i]);
  rep.general_position = true;
  if (n == 2) {
    for (int i = 0; i < N && rep.general_position; ++i)
      for (int j = i + 1; j < N; ++j)
        if (std::abs(det_rows(un[i], un[j], 2)) < tol) {
          rep.general_position = false;
          if (rep.detail.empty()) {
            std::ostringstream os;
            os << "not in general position: directions {" << i << "," << j
               << "} are linearly dependent";
            rep.detail = os.str();
          }
          break;
        }
  } else {
    for (int i = 0; i < N && rep.general_position; ++i)
      for (int j = i + 1; j < N && rep.general_position; ++j)
        for (int k = j + 1; k < N; ++k)
          if (std::abs(det_rows(un[i], un[j], un[k])) < tol) {
            rep.general_position = false;
            if (rep.detail.empty()) {
              std::ostringstream os;
              os << "not in general position: directions {" << i << "," << j
                 << "," << k << "} are linearly dependent";
              rep.detail = os.str();
            }
            break;
          }
  }

  // Hemisphere test:  max s  s.t.  s - v.u_i <= 0, |v_j| <= 1. Concentrated
  // on a closed hemisphere iff the optimum is strictly positive (exact under
  // general position, where at most n-1 directions can lie on the boundary
  // great circle).
  LpProblem lp;
  lp.dim = n + 1;
  lp.box = 2.0;
  lp.c = {0, 0, 0, 0};
  lp.c[n] = 1.0;
  for (int i = 0; i < N; ++i) {
    std::array<double, 4> a = {0, 0, 0, 0};
    for (int j = 0; j < n; ++j) a[j] = -un[i][j];
    a[n] = 1.0;
    lp.a.push_back(a);
    lp.b.push_back(0.0);
  }
  for (int j = 0; j < n; ++j) {
    std::array<double, 4> a = {0, 0, 0, 0};
    a[j] = 1.0;
    lp.a.push_back(a);
    lp.b.push_back(1.0);
    a[j] = -1.0;
    lp.a.push_back(a);
    lp.b.push_back(1.0);
  }
  const LpSolution ls = lp_maximize(lp);
  rep.positively_spanning = !(ls.feasible && ls.value > 1e-10);
  if (!rep.positively_spanning && rep.detail.empty())
    rep.detail = "concentrated on a closed hemisphere";
  return rep;
}

ChebyshevResult chebyshev_center(const std::vector<Direction>& normals,
                                 const std::vector<double>& h, int dim,
                                 double box_hint) {
  LpProblem lp;
  lp.dim = dim + 1;
  lp.box = std::max(1.0, 2.0 * box_hint);
  lp.c = {0, 0, 0, 0};
  lp.c[dim] = 1.0;  // maximize the inradius variable
  for (std::size_t i = 0; i < normals.size(); ++i) {
    std::array<double, 4> a = {0, 0, 0, 0};
    for (int j = 0; j < dim; ++j) a[j] = normals[i][j];
    a[dim] = 1.0;  // x.u_i + r <= h_i for unit normals
    lp.a.push_back(a);
    lp.b.push_back(h[i]);
  }
  const LpSolution ls = lp_maximize(lp);
  ChebyshevResult r;
  if (!ls.feasible) return r;
  for (int j = 0; j < dim; ++j) r.center[j] = ls.x[j];
  r.radius = ls.x[dim];
  return r;
}

Polytope intersect_halfspaces(const std::vector<Direction>& normals,
                              const std::vector<double>& h, int dim) {
  const int N = static_cast<int>(normals.size());
  if (dim != 2 && dim != 3)
    throw ValidationError("unsupported dimension " + std::to_string(dim));
  if (N < dim + 1 || h.size() != normals.size())
    throw ValidationError("halfspace list too short or mismatched");

  double hmax = 0.0;
  for (double v : h) hmax = std::max(hmax, std::abs(v));

  // Boundedness: max +-x_j over the region must not reach a huge box.
  {
    const double big = 1e5 * (hmax + 1.0);
    for (int j = 0; j < dim; ++j) {
      for (double sgn : {1.0, -1.0}) {
        LpProblem lp;
        lp.dim = dim;
        lp.box = big;
        lp.c = {0, 0, 0, 0};
        lp.c[j] = sgn;
        for (int i = 0; i < N; ++i) {
          std::array<double, 4> a = {0, 0, 0, 0};
          for (int d = 0; d < dim; ++d) a[d] = normals[i][d];
          lp.a.push_back(a);
          lp.b.push_back(h[i]);
        }
        const LpSolution ls = lp_maximize(lp);
        if (!ls.feasible)
          throw ValidationError("halfspace intersection is empty");
        if (ls.value > 0.99 * big)
          throw ValidationError(
              "halfspace intersection is unbounded (directions do not "
              "positively span)");
      }
    }
  }

  // Enumerate candidate vertices from all n-subsets of planes.
  std::vector<Vec> cand;
  auto feasible = [&](const Vec& x) {
    const double nx = norm(x);
    for (int k = 0; k < N; ++k) {
      if (dot(x, normals[k]) - h[k] > 1e-9 * (1.0 + std::abs(h[k]) + nx))
        return false;
    }
    return true;
  };

  if (dim == 2) {
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        const double det = det_rows(normals[i], normals[j], 2);
        if (std::abs(det) < 1e-9) continue;
        const Vec x = {(h[i] * normals[j][1] - h[j] * normals[i][1]) / det,
                       (normals[i][0] * h[j] - normals[j][0] * h[i]) / det,
                       0.0};
        if (feasible(x)) cand.push_back(x);
      }
  } else {
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        const Vec cij = cross(normals[i], normals[j]);
        for (int k = j + 1; k < N; ++k) {
          const double det = dot(cij, normals[k]);
          if (std::abs(det) < 1e-9) continue;
          // Cramer in cross-product form.
          const Vec x = (1.0 / det) * (h[i] * cross(normals[j], normals[k]) +
                                       h[j] * cross(normals[k], normals[i]) +
                                       h[k] * cij);
          if (feasible(x)) cand.push_back(x);
        }
      }
  }

  if (static_cast<int>(cand.size()) < dim + 1)
    throw ValidationError("halfspace intersection has empty interior");

  // Deduplicate with a diameter-scaled tolerance.
  const double dedup = 1e-9 * (bbox_diag(cand) + 1e-300);
  std::vector<Vec> verts;
  for (const Vec& x : cand) {
    bool dup = false;
    for (const Vec& v : verts)
      if (norm(x - v) <= dedup) {
        dup = true;
        break;
      }
    if (!dup) verts.push_back(x);
  }
  if (static_cast<int>(verts.size()) < dim + 1)
    throw ValidationError("halfspace intersection has empty interior");

  // Incidence: vertex id lists per plane.
  std::vector<std::vector<int>> inc(N);
  for (int v = 0; v < static_cast<int>(verts.size()); ++v) {
    const double nx = norm(verts[v]);
    for (int i = 0; i < N; ++i) {
      const double gap = h[i] - dot(verts[v], normals[i]);
      if (std::abs(gap) <= 1e-7 * (1.0 + std::abs(h[i]) + nx))
        inc[i].push_back(v);
    }
  }

  Polytope P = build_from_incidence(dim, normals, h, std::move(verts),
                                    std::move(inc), nullptr);
  if (P.cheb_radius <= 1e-10 * (hmax + 1.0))
    throw ValidationError("halfspace intersection has empty interior");
  if (P.facets.empty())
    throw ValidationError("halfspace intersection produced no facets");
  return P;
}

Metrics metrics(const Polytope& P) {
  Metrics m;
  Vec c = {0, 0, 0};
  for (const Vec& v : P.vertices) c = c + v;
  c = (1.0 / static_cast<double>(P.vertices.size())) * c;
  for (const FacetData& f : P.facets) {
    m.surface_area += f.area;
    m.volume += (P.support[f.normal_index] - dot(c, P.normals[f.normal_index])) *
                f.area / static_cast<double>(P.dim);
  }
  for (std::size_t i = 0; i < P.vertices.size(); ++i)
    for (std::size_t j = i + 1; j < P.vertices.size(); ++j)
      m.diameter = std::max(m.diameter, norm(P.vertices[i] - P.vertices[j]));
  return m;
}

namespace {

double point_segment_distance(const Vec& x, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = norm2(ab);
  double t = (len2 > 0) ? dot(x - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(x - (a + t * ab));
}

}  // namespace

double distance_to(const Polytope& P, const Vec& x) {
  if (P.contains(x, 0.0)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const FacetData& f : P.facets) {
    if (P.dim == 2) {
      best = std::min(best, point_segment_distance(
                                x, P.vertices[f.vertex_indices[0]],
                                P.vertices[f.vertex_indices[1]]));
      continue;
    }
    const Vec& u = P.normals[f.normal_index];
    const double off = dot(x, u) - P.support[f.normal_index];
    // Foot of the perpendicular; accept if it lies inside the facet polygon.
    const Vec foot = x - off * u;
    bool inside = true;
    const std::size_t m = f.vertex_indices.size();
    for (std::size_t k = 0; k < m; ++k) {
      const Vec& a = P.vertices[f.vertex_indices[k]];
      const Vec& b = P.vertices[f.vertex_indices[(k + 1) % m]];
      if (dot(cross(b - a, foot - a), u) < 0.0) {
        inside = false;
        break;
      }
    }
    if (inside) {
      best = std::min(best, std::abs(off));
    } else {
      for (std::size_t k = 0; k < m; ++k)
        best = std::min(best,
                        point_segment_distance(
                            x, P.vertices[f.vertex_indices[k]],
                            P.vertices[f.vertex_indices[(k + 1) % m]]));
    }
  }
  return best;
}

double hausdorff_distance(const Polytope& P, const Polytope& Q) {
  double d = 0.0;
  for (const Vec& v : P.vertices) d = std::max(d, distance_to(Q, v));
  for (const Vec& v : Q.vertices) d = std::max(d, distance_to(P, v));
  // Support-number gaps over shared directions are a lower bound; folding
  // them in guards the vertex computation.
  for (int i = 0; i < P.num_directions(); ++i)
    for (int j = 0; j < Q.num_directions(); ++j)
      if (norm(P.normals[i] - Q.normals[j]) < 1e-12)
        d = std::max(d, std::abs(P.support[i] - Q.support[j]));
  return d;
}

Polytope translate(const Polytope& P, const Vec& t) {
  std::vector<double> h(P.support);
  for (int i = 0; i < P.num_directions(); ++i) h[i] += dot(t, P.normals[i]);
  std::vector<Vec> verts(P.vertices);
  for (Vec& v : verts) v = v + t;
  std::vector<std::vector<int>> inc(P.num_directions());
  for (const FacetData& f : P.facets) inc[f.normal_index] = f.vertex_indices;
  ChebyshevResult cc{P.cheb_center + t, P.cheb_radius};
  return build_from_incidence(P.dim, P.normals, std::move(h), std::move(verts),
                              std::move(inc), &cc);
}

Polytope scale(const Polytope& P, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("scale factor must be positive");
  std::vector<double> h(P.support);
  for (double& v : h) v *= lambda;
  std::vector<Vec> verts(P.vertices);
  for (Vec& v : verts) v = lambda * v;
  std::vector<std::vector<int>> inc(P.num_directions());
  for (const FacetData& f : P.facets) inc[f.normal_index] = f.vertex_indices;
  ChebyshevResult cc{lambda * P.cheb_center, lambda * P.cheb_radius};
  return build_from_incidence(P.dim, P.normals, std::move(h), std::move(verts),
                              std::move(inc), &cc);
}

Polytope clip(const Polytope& P, int i0, double t) {
  if (i0 < 0 || i0 >= P.num_directions())
    throw ValidationError("clip index out of range");
  std::vector<double> h(P.support);
  h[i0] -= t;
  return intersect_halfspaces(P.normals, h, P.dim);
}

Polytope make_ball_polytope(int dim, int level) {
  if (dim == 2) {
    const int M = std::max(3, level);
    std::vector<Direction> normals(M);
    std::vector<double> h(M, 1.0);
    std::vector<Vec> verts(M);
    const double r = 1.0 / std::cos(M_PI / M);
    std::vector<std::vector<int>> inc(M);
    for (int k = 0; k < M; ++k) {
      const double th = 2.0 * M_PI * k / M;
      normals[k] = vec2(std::cos(th), std::sin(th));
      const double tv = th + M_PI / M;
      verts[k] = vec2(r * std::cos(tv), r * std::sin(tv));
    }
    for (int k = 0; k < M; ++k) {
      inc[k] = {(k + M - 1) % M, k};  // edge k spans the two adjacent corners
    }
    ChebyshevResult cc{vec2(0, 0), 1.0};
    return build_from_incidence(2, std::move(normals), std::move(h),
                                std::move(verts), std::move(inc), &cc);
  }
  if (dim != 3) throw ValidationError("unsupported dimension");

  // Icosphere: subdivide an icosahedron, project to the sphere. Mesh
  // vertices become polytope facet normals (support 1), mesh triangles
  // become polytope vertices, so no subset enumeration is needed.
  std::vector<Vec> mv;
  std::vector<std::array<int, 3>> mf;
  {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double raw[12][3] = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0},
                               {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                               {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},
                               {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    for (const auto& p : raw) mv.push_back(normalized(vec3(p[0], p[1], p[2])));
    const int faces[20][3] = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},
                              {0, 7, 10},  {0, 10, 11}, {1, 5, 9},
                              {5, 11, 4},  {11, 10, 2}, {10, 7, 6},
                              {7, 1, 8},   {3, 9, 4},   {3, 4, 2},
                              {3, 2, 6},   {3, 6, 8},   {3, 8, 9},
                              {4, 9, 5},   {2, 4, 11},  {6, 2, 10},
                              {8, 6, 7},   {9, 8, 1}};
    for (const auto& f : faces) mf.push_back({f[0], f[1], f[2]});
  }
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      mv.push_back(normalized(0.5 * (mv[a] + mv[b])));
      const int id = static_cast<int>(mv.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mf.size() * 4);
    for (const auto& f : mf) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mf = std::move(next);
  }

  const int N = static_cast<int>(mv.size());
  std::vector<double> h(N, 1.0);
  std::vector<Vec> verts;
  verts.reserve(mf.size());
  std::vector<std::vector<int>> inc(N);
  for (const auto& f : mf) {
    const Vec &a = mv[f[0]], &b = mv[f[1]], &c = mv[f[2]];
    const double det = dot(a, cross(b, c));
    // Plane triple intersection with all support numbers equal to 1.
    const Vec x = (1.0 / det) * (cross(b, c) + cross(c, a) + cross(a, b));
    const int id = static_cast<int>(verts.size());
    verts.push_back(x);
    inc[f[0]].push_back(id);
    inc[f[1]].push_back(id);
    inc[f[2]].push_back(id);
  }
  ChebyshevResult cc{vec3(0, 0, 0), 1.0};
  return build_from_incidence(3, std::move(mv), std::move(h), std::move(verts),
                              std::move(inc), &cc);
}

}  // namespace capmink
