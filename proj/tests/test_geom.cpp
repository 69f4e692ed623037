#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "capmink/errors.hpp"
#include "capmink/geom.hpp"
#include "capmink/smalllp.hpp"

using namespace capmink;

namespace {

Direction dir2(double deg) {
  const double t = deg * M_PI / 180.0;
  return vec2(std::cos(t), std::sin(t));
}

Vec random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v = {g(rng), g(rng), dim == 3 ? g(rng) : 0.0};
  return normalized(v);
}

WeightedDirections angles_instance(std::initializer_list<double> degs) {
  WeightedDirections U;
  U.dim = 2;
  for (double d : degs) {
    U.directions.push_back(dir2(d));
    U.weights.push_back(1.0);
  }
  return U;
}

// Brute-force LP reference: enumerate all d-subsets of constraints (the box
// planes included), solve each square system by Gaussian elimination, keep
// the best feasible point.
LpSolution lp_brute(const LpProblem& p) {
  std::vector<std::array<double, 4>> a(p.a);
  std::vector<double> b(p.b);
  for (int j = 0; j < p.dim; ++j) {
    std::array<double, 4> e = {0, 0, 0, 0};
    e[j] = 1.0;
    a.push_back(e);
    b.push_back(p.box);
    e[j] = -1.0;
    a.push_back(e);
    b.push_back(p.box);
  }
  const int m = static_cast<int>(a.size());
  const int d = p.dim;
  LpSolution best;

  std::vector<int> idx(d);
  auto try_subset = [&]() {
    double mat[4][5];
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) mat[r][c] = a[idx[r]][c];
      mat[r][d] = b[idx[r]];
    }
    for (int c = 0; c < d; ++c) {  // partial pivoting
      int piv = c;
      for (int r = c + 1; r < d; ++r)
        if (std::abs(mat[r][c]) > std::abs(mat[piv][c])) piv = r;
      if (std::abs(mat[piv][c]) < 1e-11) return;
      for (int k = 0; k <= d; ++k) std::swap(mat[c][k], mat[piv][k]);
      for (int r = 0; r < d; ++r) {
        if (r == c) continue;
        const double f = mat[r][c] / mat[c][c];
        for (int k = c; k <= d; ++k) mat[r][k] -= f * mat[c][k];
      }
    }
    std::array<double, 4> x = {0, 0, 0, 0};
    for (int c = 0; c < d; ++c) x[c] = mat[c][d] / mat[c][c];
    for (int r = 0; r < m; ++r) {
      double lhs = 0;
      for (int c = 0; c < d; ++c) lhs += a[r][c] * x[c];
      if (lhs > b[r] + 1e-8) return;
    }
    double val = 0;
    for (int c = 0; c < d; ++c) val += p.c[c] * x[c];
    if (!best.feasible || val > best.value) {
      best.feasible = true;
      best.value = val;
      best.x = x;
    }
  };
  // All d-subsets of m constraints.
  std::vector<int> comb(d);
  for (int i = 0; i < d; ++i) comb[i] = i;
  while (true) {
    idx = comb;
    try_subset();
    int k = d - 1;
    while (k >= 0 && comb[k] == m - d + k) --k;
    if (k < 0) break;
    ++comb[k];
    for (int j = k + 1; j < d; ++j) comb[j] = comb[j - 1] + 1;
  }
  return best;
}

Polytope inradius1_triangle() {
  std::vector<Direction> n = {dir2(90), dir2(210), dir2(330)};
  std::vector<double> h = {1, 1, 1};
  return intersect_halfspaces(n, h, 2);
}

}  // namespace

TEST_CASE("seidel lp matches brute-force vertex enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    LpProblem p;
    p.dim = 2 + static_cast<int>(rng() % 3);  // 2..4 variables
    p.box = 8.0;
    const int m = 3 + static_cast<int>(rng() % 10);
    for (int i = 0; i < m; ++i) {
      std::array<double, 4> a = {0, 0, 0, 0};
      for (int j = 0; j < p.dim; ++j) a[j] = un(rng);
      p.a.push_back(a);
      p.b.push_back(un(rng) + 1.2);  // keeps the origin feasible most runs
    }
    for (int j = 0; j < p.dim; ++j) p.c[j] = un(rng);

    const LpSolution got = lp_maximize(p, 99 + trial);
    const LpSolution ref = lp_brute(p);
    REQUIRE(got.feasible == ref.feasible);
    if (ref.feasible) CHECK(got.value == doctest::Approx(ref.value).epsilon(1e-7));
  }
}

TEST_CASE("antipodal pair fails general position") {
  const auto rep = validate_directions(angles_instance({0, 90, 180}));
  CHECK(rep.unit_norm);
  CHECK_FALSE(rep.general_position);
  CHECK(rep.detail.find("general position") != std::string::npos);
}

TEST_CASE("spread quadrilateral directions validate") {
  const auto rep = validate_directions(angles_instance({0, 100, 200, 300}));
  CHECK(rep.unit_norm);
  CHECK(rep.general_position);
  CHECK(rep.positively_spanning);
  CHECK(rep.ok());
}

TEST_CASE("hemisphere-concentrated set is flagged") {
  // All directions within a quarter circle: v at the bisector works.
  const auto rep = validate_directions(angles_instance({10, 40, 60, 80}));
  CHECK(rep.general_position);
  CHECK_FALSE(rep.positively_spanning);
  CHECK(rep.detail.find("hemisphere") != std::string::npos);
}

TEST_CASE("general position test agrees with exhaustive subsets in 3d") {
  std::mt19937_64 rng(7);
  WeightedDirections U;
  U.dim = 3;
  for (int i = 0; i < 8; ++i) {
    U.directions.push_back(random_unit(rng, 3));
    U.weights.push_back(1.0);
  }
  bool brute = true;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j)
      for (int k = j + 1; k < 8; ++k)
        if (std::abs(det_rows(U.directions[i], U.directions[j],
                              U.directions[k])) < 1e-9)
          brute = false;
  const auto rep = validate_directions(U);
  CHECK(rep.general_position == brute);
  CHECK(brute);  // random vectors are in general position with prob. 1
}

TEST_CASE("structural validation errors") {
  WeightedDirections U = angles_instance({0, 120});
  CHECK_THROWS_AS(validate_directions(U), ValidationError);
  U = angles_instance({0, 120, 240});
  U.weights[1] = -1.0;
  CHECK_THROWS_AS(validate_directions(U), ValidationError);
}

TEST_CASE("equilateral triangle from halfspaces") {
  const Polytope P = inradius1_triangle();
  REQUIRE(P.vertices.size() == 3);
  REQUIRE(P.facets.size() == 3);
  // Vertices at distance 2 from the origin, at angles 30, 150, 270 degrees.
  std::set<int> seen;
  for (const Vec& v : P.vertices) {
    CHECK(norm(v) == doctest::Approx(2.0).epsilon(1e-12));
    const double ang = std::atan2(v[1], v[0]) * 180.0 / M_PI;
    for (double want : {30.0, 150.0, -90.0})
      if (std::abs(ang - want) < 1e-9) seen.insert(static_cast<int>(want));
  }
  CHECK(seen.size() == 3);

  const Metrics m = metrics(P);
  CHECK(m.volume == doctest::Approx(3.0 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(m.diameter == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(P.cheb_radius == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(norm(P.cheb_center) < 1e-9);
}

TEST_CASE("shoelace oracle on the triangle") {
  const Polytope P = inradius1_triangle();
  // Order the vertices by angle and apply the shoelace formula.
  std::vector<Vec> v(P.vertices);
  std::sort(v.begin(), v.end(), [](const Vec& a, const Vec& b) {
    return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]);
  });
  double area2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec& a = v[i];
    const Vec& b = v[(i + 1) % v.size()];
    area2 += a[0] * b[1] - a[1] * b[0];
  }
  CHECK(metrics(P).volume == doctest::Approx(0.5 * area2).epsilon(1e-12));
}

TEST_CASE("quadrilateral has four active facets and interior origin") {
  std::vector<Direction> n = {dir2(0), dir2(100), dir2(200), dir2(300)};
  std::vector<double> h = {1, 1, 1, 1};
  const Polytope P = intersect_halfspaces(n, h, 2);
  CHECK(P.facets.size() == 4);
  CHECK(P.vertices.size() == 4);
  CHECK(P.contains(vec2(0, 0), -1e-12));  // strictly interior
  for (int i = 0; i < 4; ++i) CHECK(P.is_facet(i));
}

TEST_CASE("vertex support maxima identify active facets") {
  std::mt19937_64 rng(41);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<Direction> n;
      const int N = dim + 3 + static_cast<int>(rng() % 4);
      for (int i = 0; i < N; ++i) n.push_back(random_unit(rng, dim));
      std::vector<double> h(N, 1.0);
      Polytope P;
      try {
        P = intersect_halfspaces(n, h, dim);
      } catch (const ValidationError&) {
        continue;  // sampled set may be hemisphere-concentrated
      }
      for (int i = 0; i < N; ++i) {
        double mx = -1e300;
        for (const Vec& v : P.vertices) mx = std::max(mx, dot(v, n[i]));
        if (P.is_facet(i)) {
          CHECK(mx == doctest::Approx(h[i]).epsilon(1e-9));
        } else {
          CHECK(mx < h[i] - 1e-12);
        }
        for (const Vec& v : P.vertices) CHECK(dot(v, n[i]) <= h[i] + 1e-9);
      }
    }
  }
}

TEST_CASE("euler relation in 3d") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<Direction> n;
    for (int i = 0; i < 9; ++i) n.push_back(random_unit(rng, 3));
    Polytope P;
    try {
      P = intersect_halfspaces(n, std::vector<double>(9, 1.0), 3);
    } catch (const ValidationError&) {
      continue;
    }
    std::set<std::pair<int, int>> edges;
    for (const FacetData& f : P.facets) {
      const std::size_t m = f.vertex_indices.size();
      for (std::size_t k = 0; k < m; ++k) {
        int a = f.vertex_indices[k], b = f.vertex_indices[(k + 1) % m];
        edges.insert({std::min(a, b), std::max(a, b)});
      }
    }
    const long V = static_cast<long>(P.vertices.size());
    const long E = static_cast<long>(edges.size());
    const long F = static_cast<long>(P.facets.size());
    CHECK(V - E + F == 2);
  }
}

TEST_CASE("hausdorff metric basics") {
  const Polytope P = inradius1_triangle();
  CHECK(hausdorff_distance(P, P) == doctest::Approx(0.0));
  const Vec t = vec2(0.3, -0.2);
  const Polytope Q = translate(P, t);
  CHECK(hausdorff_distance(P, Q) == doctest::Approx(norm(t)).epsilon(1e-12));
  // Support-number shift matches the translation formula h' = h + t.u.
  for (int i = 0; i < 3; ++i)
    CHECK(Q.support[i] ==
          doctest::Approx(P.support[i] + dot(t, P.normals[i])).epsilon(1e-12));
  const Polytope back = translate(Q, -t);
  CHECK(hausdorff_distance(P, back) < 1e-12);
}

TEST_CASE("scaling homogeneity of volume and area") {
  const Polytope P = inradius1_triangle();
  const Polytope Q = scale(P, 2.0);
  const Metrics mp = metrics(P), mq = metrics(Q);
  CHECK(mq.volume == doctest::Approx(4.0 * mp.volume).epsilon(1e-12));
  CHECK(mq.surface_area == doctest::Approx(2.0 * mp.surface_area).epsilon(1e-12));
  for (int i = 0; i < 3; ++i)
    CHECK(Q.support[i] == doctest::Approx(2.0 * P.support[i]));

  // Translation invariance of volume and surface area.
  const Metrics mt = metrics(translate(P, vec2(5, -7)));
  CHECK(mt.volume == doctest::Approx(mp.volume).epsilon(1e-12));
  CHECK(mt.surface_area == doctest::Approx(mp.surface_area).epsilon(1e-12));
}

TEST_CASE("clipping a facet keeps the rebuild consistent") {
  const Polytope P = inradius1_triangle();
  const Polytope C = clip(P, 1, 0.5);
  CHECK(C.support[1] == doctest::Approx(0.5));
  CHECK(C.facets.size() == 3);
  CHECK(C.vertices.size() == 3);
  CHECK(metrics(C).volume < metrics(P).volume);
}

TEST_CASE("direction through a vertex is not a facet") {
  // Equilateral triangle plus a fourth plane that touches it exactly at the
  // vertex (sqrt(3), 1): its normal lies strictly inside that vertex's
  // normal cone, and its support number is the support of the vertex.
  std::vector<Direction> n = {dir2(90), dir2(210), dir2(330),
                              normalized(vec2(0.2, 1.0))};
  const Vec vtx = vec2(std::sqrt(3.0), 1.0);
  std::vector<double> h = {1, 1, 1, dot(vtx, n[3])};
  const Polytope P = intersect_halfspaces(n, h, 2);
  CHECK(P.facets.size() == 3);
  CHECK_FALSE(P.is_facet(3));
  CHECK(P.vertices.size() == 3);
}

TEST_CASE("unbounded and empty intersections are rejected") {
  // Two halfspaces in 2d can never bound a polygon.
  std::vector<Direction> n = {dir2(0), dir2(90), dir2(45)};
  CHECK_THROWS_AS(intersect_halfspaces(n, {1, 1, 1}, 2), ValidationError);
  // Shifted so the feasible set is empty: x <= -3, -x <= ... with spread set.
  std::vector<Direction> m = {dir2(0), dir2(120), dir2(240)};
  CHECK_THROWS_AS(intersect_halfspaces(m, {-3, -3, -3}, 2), ValidationError);
}

TEST_CASE("ball polytope in the plane") {
  const Polytope P = make_ball_polytope(2, 64);
  CHECK(P.facets.size() == 64);
  CHECK(P.vertices.size() == 64);
  const Metrics m = metrics(P);
  // Circumscribed 64-gon: area M tan(pi/M), perimeter 2 M tan(pi/M).
  const double tanpm = std::tan(M_PI / 64);
  CHECK(m.volume == doctest::Approx(64 * tanpm).epsilon(1e-12));
  CHECK(m.surface_area == doctest::Approx(2 * 64 * tanpm).epsilon(1e-12));
  CHECK(m.volume > M_PI);
  // Contains the unit ball, contained in (1/cos(pi/M)) ball.
  for (const Vec& v : P.vertices) {
    CHECK(norm(v) >= 1.0);
    CHECK(norm(v) <= 1.0 / std::cos(M_PI / 64) + 1e-12);
  }
}

TEST_CASE("ball polytope icosphere levels") {
  for (int level : {0, 1, 2}) {
    const Polytope P = make_ball_polytope(3, level);
    const int expect_normals = 10 * (1 << (2 * level)) + 2;
    CHECK(P.num_directions() == expect_normals);
    CHECK(static_cast<int>(P.facets.size()) == expect_normals);
    // Every mesh triangle becomes one polytope vertex.
    CHECK(static_cast<int>(P.vertices.size()) == 20 * (1 << (2 * level)));
    std::set<std::pair<int, int>> edges;
    for (const FacetData& f : P.facets) {
      const std::size_t s = f.vertex_indices.size();
      for (std::size_t k = 0; k < s; ++k) {
        int a = f.vertex_indices[k], b = f.vertex_indices[(k + 1) % s];
        edges.insert({std::min(a, b), std::max(a, b)});
      }
    }
    CHECK(static_cast<long>(P.vertices.size()) - static_cast<long>(edges.size()) +
              static_cast<long>(P.facets.size()) ==
          2);
    for (const Vec& v : P.vertices) CHECK(norm(v) >= 1.0 - 1e-12);
  }
  // Volume converges to the unit-ball volume from above, roughly
  // quartering the excess per subdivision level.
  const double ball = 4.0 * M_PI / 3.0;
  const double v2 = metrics(make_ball_polytope(3, 2)).volume;
  const double v3 = metrics(make_ball_polytope(3, 3)).volume;
  CHECK(v2 > ball);
  CHECK(v2 < ball * 1.03);
  CHECK(v3 > ball);
  CHECK(v3 < ball * 1.01);
  CHECK((v3 - ball) < 0.35 * (v2 - ball));
}

TEST_CASE("distance to polytope") {
  const Polytope P = inradius1_triangle();
  CHECK(distance_to(P, vec2(0, 0)) == 0.0);
  CHECK(distance_to(P, vec2(0, 2)) == doctest::Approx(1.0).epsilon(1e-12));
  // Beyond the top-right vertex at angle 30 degrees, distance is to the
  // vertex itself.
  const Vec v = vec2(2.0 * std::cos(M_PI / 6), 2.0 * std::sin(M_PI / 6));
  CHECK(distance_to(P, 2.0 * v) == doctest::Approx(norm(v)).epsilon(1e-12));
}
