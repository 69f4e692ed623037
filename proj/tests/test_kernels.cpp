// Grid construction, node classification, and the serial/OpenMP kernel pair.
// The central claim checked here is bitwise agreement between the two
// backends at any thread count, which the capacity tests rely on.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <random>
#include <vector>

#include "capmink/errors.hpp"
#include "capmink/geom.hpp"
#include "capmink/grid.hpp"
#include "capmink/kernels.hpp"

using namespace capmink;

namespace {

Polytope make_cube(double h) {
  std::vector<Direction> us = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                               {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<double> hs(6, h);
  return intersect_halfspaces(us, hs, 3);
}

Polytope make_square(double h) {
  std::vector<Direction> us = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  std::vector<double> hs(4, h);
  return intersect_halfspaces(us, hs, 2);
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = unif(rng);
  return v;
}

// Zero out Dirichlet entries so a vector lives in the unknown subspace.
void mask_unknown(const DiscreteSystem& sys, std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (sys.state[i] != NodeState::unknown) v[i] = 0.0;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("frame: graded axes are symmetric, increasing, and reach the shell") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);

  CHECK(g.dim == 3);
  CHECK(g.core_spacing == doctest::Approx(0.125));
  CHECK(g.outer_radius == doctest::Approx(4.0 * 2.0 * 0.95 * std::sqrt(3.0)));
  for (int ax = 0; ax < 3; ++ax) {
    const std::vector<double>& xs = g.axis[ax];
    REQUIRE(xs.size() >= 3);
    // strictly increasing, mirror-symmetric about the center coordinate
    for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] > xs[i - 1]);
    for (std::size_t i = 0; i < xs.size(); ++i)
      CHECK(xs[i] + xs[xs.size() - 1 - i] ==
            doctest::Approx(2.0 * g.center[ax]).epsilon(1e-12));
    // endpoints cover the truncation sphere
    CHECK(xs.front() <= g.center[ax] - g.outer_radius);
    CHECK(xs.back() >= g.center[ax] + g.outer_radius);
    // spacings in the graded region never shrink and never exceed R/8
    double prev = xs[1] - xs[0];
    (void)prev;
    for (std::size_t i = xs.size() / 2; i + 1 < xs.size(); ++i) {
      double gap = xs[i + 1] - xs[i];
      CHECK(gap >= 0.125 * (1.0 - 1e-12));
      CHECK(gap <= g.outer_radius / 8.0 * (1.0 + 1e-12));
    }
  }
  // doubling kappa_scale doubles the radius but keeps the core spacing
  GridFrame g2 = make_frame(cube, cfg, 2.0);
  CHECK(g2.outer_radius == doctest::Approx(2.0 * g.outer_radius));
  CHECK(g2.core_spacing == doctest::Approx(g.core_spacing));
}

TEST_CASE("frame: invalid configuration is rejected") {
  Polytope cube = make_cube(1.0);
  GridConfig cfg;
  cfg.cells_per_unit = 0.0;
  CHECK_THROWS_AS(make_frame(cube, cfg, 1.0), ValidationError);
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 3.0;  // below the minimum of 4
  CHECK_THROWS_AS(make_frame(cube, cfg, 1.0), ValidationError);
}

TEST_CASE("classify: cube states, cut thetas, and dual widths") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);

  REQUIRE(sys.state.size() == g.num_nodes());
  const std::size_t nx = g.nodes_per_axis(0), ny = g.nodes_per_axis(1),
                    nz = g.nodes_per_axis(2);
  std::size_t n_body = 0, n_unknown = 0, n_outer = 0;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t id = (k * ny + j) * nx + i;
        const Vec x = g.node_pos(i, j, k);
        const double linf =
            std::max({std::fabs(x[0]), std::fabs(x[1]), std::fabs(x[2])});
        const double r = norm(x - g.center);
        switch (sys.state[id]) {
          case NodeState::body:
            ++n_body;
            CHECK(linf <= 0.95 + 1e-12);
            break;
          case NodeState::outer:
            ++n_outer;
            CHECK(r >= g.outer_radius * (1.0 - 1e-12));
            break;
          case NodeState::unknown:
            ++n_unknown;
            CHECK(linf > 0.95 - 1e-12);
            CHECK(r < g.outer_radius * (1.0 + 1e-12));
            break;
        }
      }
  CHECK(n_body > 0);
  CHECK(n_outer > 0);
  CHECK(sys.num_unknown == n_unknown);

  // Every unknown node with a Dirichlet neighbor owns a slot with thetas in
  // [0.01, 1]; nodes at x = 1.0 next to body nodes at x = 0.875 cross the
  // facet plane x = 0.95 at theta = (1.0 - 0.95) / 0.125 = 0.4 exactly.
  std::size_t n_cut = 0, n_theta_checked = 0;
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t id = (k * ny + j) * nx + i;
        if (sys.state[id] != NodeState::unknown) continue;
        bool has_dirichlet_neighbor = false;
        const std::size_t ijk[3] = {i, j, k};
        const std::size_t counts[3] = {nx, ny, nz};
        for (int ax = 0; ax < 3; ++ax) {
          if (ijk[ax] > 0 &&
              sys.state[id - g.stride(ax)] != NodeState::unknown)
            has_dirichlet_neighbor = true;
          if (ijk[ax] + 1 < counts[ax] &&
              sys.state[id + g.stride(ax)] != NodeState::unknown)
            has_dirichlet_neighbor = true;
        }
        if (has_dirichlet_neighbor) {
          REQUIRE(sys.fix_slot[id] != kNoFix);
          ++n_cut;
          for (int ax = 0; ax < 3; ++ax) {
            if (ijk[ax] > 0 &&
                sys.state[id - g.stride(ax)] != NodeState::unknown) {
              const double th = sys.theta(id, ax, -1);
              CHECK(th >= 0.01);
              CHECK(th <= 1.0);
            }
            if (ijk[ax] + 1 < counts[ax] &&
                sys.state[id + g.stride(ax)] != NodeState::unknown) {
              const double th = sys.theta(id, ax, +1);
              CHECK(th >= 0.01);
              CHECK(th <= 1.0);
            }
          }
          const Vec x = g.node_pos(i, j, k);
          if (std::fabs(x[0] - 1.0) < 1e-12 && std::fabs(x[1]) < 0.6 &&
              std::fabs(x[2]) < 0.6) {
            CHECK(sys.theta(id, 0, -1) == doctest::Approx(0.4).epsilon(1e-9));
            ++n_theta_checked;
          }
        } else {
          CHECK(sys.fix_slot[id] == kNoFix);
        }
      }
  CHECK(n_cut > 0);
  CHECK(n_theta_checked > 0);

  // Dual widths: interior entries are the average of adjacent gaps.
  for (int ax = 0; ax < 3; ++ax) {
    const std::vector<double>& xs = g.axis[ax];
    REQUIRE(sys.dualw[ax].size() == xs.size());
    for (std::size_t i = 1; i + 1 < xs.size(); ++i)
      CHECK(sys.dualw[ax][i] ==
            doctest::Approx(0.5 * (xs[i + 1] - xs[i - 1])).epsilon(1e-12));
  }
}

TEST_CASE("classify: 2d square keeps a collapsed z axis of unit thickness") {
  Polytope sq = make_square(1.0);
  GridConfig cfg;
  cfg.cells_per_unit = 16.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(sq, cfg, 1.0);
  REQUIRE(g.dim == 2);
  CHECK(g.nodes_per_axis(2) == 1);
  DiscreteSystem sys = classify(g, sq);
  REQUIRE(sys.dualw[2].size() == 1);
  CHECK(sys.dualw[2][0] == 1.0);
  CHECK(sys.num_unknown > 0);
}

TEST_CASE("interpolate: multilinear reproduces affine fields exactly") {
  Polytope cube = make_cube(1.0);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);

  std::vector<double> u(g.num_nodes());
  const std::size_t nx = g.nodes_per_axis(0), ny = g.nodes_per_axis(1),
                    nz = g.nodes_per_axis(2);
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const Vec x = g.node_pos(i, j, k);
        u[(k * ny + j) * nx + i] = 2.0 * x[0] + 3.0 * x[1] - x[2] + 0.25;
      }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    const Vec x = {unif(rng), unif(rng), unif(rng)};
    const double want = 2.0 * x[0] + 3.0 * x[1] - x[2] + 0.25;
    CHECK(interpolate(g, u, x) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("kernels: serial and openmp agree bitwise at several thread counts") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);
  const std::size_t n = g.num_nodes();

  std::vector<double> a = random_vector(n, 11);
  std::vector<double> b = random_vector(n, 12);
  std::vector<double> smooth(n);
  const std::size_t nx = g.nodes_per_axis(0), ny = g.nodes_per_axis(1),
                    nz = g.nodes_per_axis(2);
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const Vec x = g.node_pos(i, j, k);
        smooth[(k * ny + j) * nx + i] =
            1.0 / (1.0 + norm2(x)) + 0.05 * x[0] * x[1];
      }

  kernels::FaceCoef fc_ref;
  kernels::serial::update_face_coef(sys, smooth, 1.6, 1e-6, fc_ref);
  const double dot_ref = kernels::serial::dot(a, b);
  const double energy_unit_ref = kernels::serial::link_energy(sys, {}, smooth);
  const double energy_coef_ref =
      kernels::serial::link_energy(sys, fc_ref, smooth);
  std::vector<double> av_ref(n), diag_ref(n);
  kernels::serial::apply_stencil(sys, fc_ref, smooth, av_ref);
  kernels::serial::jacobi_diag(sys, fc_ref, diag_ref);
  std::vector<double> y_ref = a, p_ref = a, z_ref(n);
  kernels::serial::axpy(0.37, b, y_ref);
  kernels::serial::xpay(b, -0.81, p_ref);
  std::vector<double> dpos(n);
  for (std::size_t i = 0; i < n; ++i) dpos[i] = 1.0 + std::fabs(b[i]);
  kernels::serial::pointwise_div(a, dpos, z_ref);

  for (int threads : {1, 2, 5}) {
    CAPTURE(threads);
    omp_set_num_threads(threads);
    CHECK(kernels::par::dot(a, b) == dot_ref);
    CHECK(kernels::par::link_energy(sys, {}, smooth) == energy_unit_ref);
    CHECK(kernels::par::link_energy(sys, fc_ref, smooth) == energy_coef_ref);

    kernels::FaceCoef fc;
    kernels::par::update_face_coef(sys, smooth, 1.6, 1e-6, fc);
    for (int ax = 0; ax < 3; ++ax) CHECK(bitwise_equal(fc[ax], fc_ref[ax]));

    std::vector<double> av(n), diag(n), z(n);
    kernels::par::apply_stencil(sys, fc_ref, smooth, av);
    kernels::par::jacobi_diag(sys, fc_ref, diag);
    CHECK(bitwise_equal(av, av_ref));
    CHECK(bitwise_equal(diag, diag_ref));

    std::vector<double> y = a, p = a;
    kernels::par::axpy(0.37, b, y);
    kernels::par::xpay(b, -0.81, p);
    kernels::par::pointwise_div(a, dpos, z);
    CHECK(bitwise_equal(y, y_ref));
    CHECK(bitwise_equal(p, p_ref));
    CHECK(bitwise_equal(z, z_ref));
  }
  omp_set_num_threads(omp_get_num_procs());

  // The dispatch layer routes to whichever backend is selected.
  kernels::set_default_exec(kernels::Exec::serial);
  CHECK(kernels::dot(a, b) == dot_ref);
  kernels::set_default_exec(kernels::Exec::openmp);
  CHECK(kernels::dot(a, b) == dot_ref);
}

TEST_CASE("stencil: symmetric, zero row sums, energy matches quadratic form") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 6.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);
  const std::size_t n = g.num_nodes();

  std::vector<double> v = random_vector(n, 21);
  std::vector<double> w = random_vector(n, 22);
  mask_unknown(sys, v);
  mask_unknown(sys, w);

  for (bool with_coef : {false, true}) {
    CAPTURE(with_coef);
    kernels::FaceCoef fc;
    if (with_coef) {
      std::vector<double> smooth = random_vector(n, 23);
      kernels::serial::update_face_coef(sys, smooth, 2.5, 1e-3, fc);
    }
    std::vector<double> av(n), aw(n);
    kernels::serial::apply_stencil(sys, fc, v, av);
    kernels::serial::apply_stencil(sys, fc, w, aw);

    // symmetry of the operator on the unknown subspace
    const double vAw = kernels::serial::dot(v, aw);
    const double wAv = kernels::serial::dot(w, av);
    CHECK(vAw == doctest::Approx(wAv).epsilon(1e-11));

    // quadratic form equals the link energy when Dirichlet entries are zero
    const double vAv = kernels::serial::dot(v, av);
    const double e = kernels::serial::link_energy(sys, fc, v);
    CHECK(vAv == doctest::Approx(e).epsilon(1e-10));
    CHECK(vAv > 0.0);

    // constant vectors are annihilated: row sums of A are zero
    std::vector<double> ones(n, 1.0), a1(n);
    kernels::serial::apply_stencil(sys, fc, ones, a1);
    for (std::size_t i = 0; i < n; ++i) CHECK(a1[i] == 0.0);

    // Jacobi diagonal is strictly positive on unknowns
    std::vector<double> diag(n);
    kernels::serial::jacobi_diag(sys, fc, diag);
    for (std::size_t i = 0; i < n; ++i)
      if (sys.state[i] == NodeState::unknown) CHECK(diag[i] > 0.0);
  }
}

TEST_CASE("face coefficients: p = 2 collapses to unit diffusivity") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 6.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);
  const std::size_t n = g.num_nodes();
  std::vector<double> v = random_vector(n, 31);

  kernels::FaceCoef fc;
  kernels::serial::update_face_coef(sys, v, 2.0, 1e-6, fc);
  for (int ax = 0; ax < 3; ++ax) {
    REQUIRE(fc[ax].size() == n);
    for (double c : fc[ax]) CHECK(c == 1.0);
  }
  // and therefore the stencil matches the empty-coefficient path bitwise
  std::vector<double> a1(n), a2(n);
  kernels::serial::apply_stencil(sys, fc, v, a1);
  kernels::serial::apply_stencil(sys, kernels::FaceCoef{}, v, a2);
  CHECK(bitwise_equal(a1, a2));
}

TEST_CASE("link weights: assembled weights reproduce the face-coefficient path bitwise") {
  for (int dim : {2, 3}) {
    CAPTURE(dim);
    Polytope body = dim == 3 ? make_cube(0.95) : make_square(0.95);
    GridConfig cfg;
    cfg.cells_per_unit = dim == 3 ? 8.0 : 24.0;
    cfg.truncation_factor = 4.0;
    GridFrame g = make_frame(body, cfg, 1.0);
    DiscreteSystem sys = classify(g, body);
    const std::size_t n = g.num_nodes();
    std::vector<double> v = random_vector(n, 41);

    for (bool with_coef : {false, true}) {
      CAPTURE(with_coef);
      kernels::FaceCoef fc;
      if (with_coef) {
        std::vector<double> smooth = random_vector(n, 42);
        kernels::serial::update_face_coef(sys, smooth, 1.7, 1e-4, fc);
      }
      kernels::LinkWeights lw;
      kernels::serial::build_link_weights(sys, fc, lw);
      for (int ax = 0; ax < g.dim; ++ax) REQUIRE(lw.w[ax].size() == n);

      std::vector<double> a_fc(n), a_lw(n), d_fc(n), d_lw(n);
      kernels::serial::apply_stencil(sys, fc, v, a_fc);
      kernels::serial::apply_stencil(sys, lw, v, a_lw);
      kernels::serial::jacobi_diag(sys, fc, d_fc);
      kernels::serial::jacobi_diag(sys, lw, d_lw);
      CHECK(bitwise_equal(a_fc, a_lw));
      CHECK(bitwise_equal(d_fc, d_lw));

      // and the line sweep built from weights matches the one that reads
      // the face coefficients directly
      std::vector<double> r = random_vector(n, 43);
      mask_unknown(sys, r);
      for (int ax = 0; ax < g.dim; ++ax) {
        CAPTURE(ax);
        std::vector<double> e1 = random_vector(n, 44), e2 = e1;
        mask_unknown(sys, e1);
        mask_unknown(sys, e2);
        kernels::serial::line_jacobi(sys, fc, d_fc, ax, 0.85, r, e1);
        kernels::serial::line_jacobi(sys, lw, d_lw, ax, 0.85, r, e2);
        CHECK(bitwise_equal(e1, e2));
      }
    }
  }
}

TEST_CASE("line smoothing: fused sweep equals residual-then-sweep composition") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);
  const std::size_t n = g.num_nodes();

  kernels::LinkWeights lw;
  kernels::serial::build_link_weights(sys, kernels::FaceCoef{}, lw);
  std::vector<double> diag(n);
  kernels::serial::jacobi_diag(sys, lw, diag);

  std::vector<double> r = random_vector(n, 51);
  mask_unknown(sys, r);
  std::vector<double> e_fused = random_vector(n, 52);
  mask_unknown(sys, e_fused);
  std::vector<double> e_ref = e_fused;

  kernels::LineWorkspace ws;
  for (int ax : {0, 1, 2, 1, 0}) {
    CAPTURE(ax);
    kernels::serial::line_smooth(sys, lw, diag, ax, 0.9, r, e_fused, ws);

    // reference: explicit residual, then the plain sweep on it
    std::vector<double> ae(n), res(n);
    kernels::serial::apply_stencil(sys, lw, e_ref, ae);
    res = r;
    kernels::serial::axpy(-1.0, ae, res);
    kernels::serial::line_jacobi(sys, lw, diag, ax, 0.9, res, e_ref);

    CHECK(bitwise_equal(e_fused, e_ref));
  }
}

TEST_CASE("line smoothing: every sweep strictly decreases the energy functional") {
  // For the SPD system A e = r the functional F(e) = e.Ae/2 - e.r decreases
  // under any convergent smoother step; the line sweeps at omega = 1 are
  // convergent because twice the block-diagonal dominates A.
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);
  const std::size_t n = g.num_nodes();

  kernels::LinkWeights lw;
  kernels::serial::build_link_weights(sys, kernels::FaceCoef{}, lw);
  std::vector<double> diag(n);
  kernels::serial::jacobi_diag(sys, lw, diag);

  std::vector<double> r = random_vector(n, 61);
  mask_unknown(sys, r);
  std::vector<double> e(n, 0.0), ae(n);
  kernels::LineWorkspace ws;

  auto functional = [&]() {
    kernels::serial::apply_stencil(sys, lw, e, ae);
    return 0.5 * kernels::serial::dot(e, ae) - kernels::serial::dot(e, r);
  };

  double prev = functional();
  CHECK(prev == 0.0);
  for (int sweep = 0; sweep < 6; ++sweep) {
    kernels::serial::line_smooth(sys, lw, diag, sweep % 3, 1.0, r, e, ws);
    const double cur = functional();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("line smoothing: serial and openmp agree bitwise at several thread counts") {
  Polytope cube = make_cube(0.95);
  GridConfig cfg;
  cfg.cells_per_unit = 8.0;
  cfg.truncation_factor = 4.0;
  GridFrame g = make_frame(cube, cfg, 1.0);
  DiscreteSystem sys = classify(g, cube);
  const std::size_t n = g.num_nodes();

  std::vector<double> smooth = random_vector(n, 71);
  kernels::FaceCoef fc;
  kernels::serial::update_face_coef(sys, smooth, 1.6, 1e-6, fc);

  kernels::LinkWeights lw_ref;
  kernels::serial::build_link_weights(sys, fc, lw_ref);
  std::vector<double> diag_ref(n);
  kernels::serial::jacobi_diag(sys, lw_ref, diag_ref);

  std::vector<double> r = random_vector(n, 72);
  mask_unknown(sys, r);

  // serial reference trajectories
  std::vector<double> ej_ref = random_vector(n, 73);
  mask_unknown(sys, ej_ref);
  std::vector<double> es_ref = ej_ref;
  kernels::LineWorkspace ws_ref;
  for (int ax : {0, 1, 2}) {
    kernels::serial::line_jacobi(sys, lw_ref, diag_ref, ax, 0.85, r, ej_ref);
    kernels::serial::line_smooth(sys, lw_ref, diag_ref, ax, 0.85, r, es_ref,
                                 ws_ref);
  }

  for (int threads : {1, 2, 5}) {
    CAPTURE(threads);
    omp_set_num_threads(threads);

    kernels::LinkWeights lw;
    kernels::par::build_link_weights(sys, fc, lw);
    for (int ax = 0; ax < 3; ++ax) CHECK(bitwise_equal(lw.w[ax], lw_ref.w[ax]));

    std::vector<double> a_lw(n), diag(n);
    kernels::par::apply_stencil(sys, lw, smooth, a_lw);
    kernels::par::jacobi_diag(sys, lw, diag);
    std::vector<double> a_lw_ref(n);
    kernels::serial::apply_stencil(sys, lw_ref, smooth, a_lw_ref);
    CHECK(bitwise_equal(a_lw, a_lw_ref));
    CHECK(bitwise_equal(diag, diag_ref));

    std::vector<double> ej = random_vector(n, 73);
    mask_unknown(sys, ej);
    std::vector<double> es = ej;
    kernels::LineWorkspace ws;
    for (int ax : {0, 1, 2}) {
      kernels::par::line_jacobi(sys, lw, diag, ax, 0.85, r, ej);
      kernels::par::line_smooth(sys, lw, diag, ax, 0.85, r, es, ws);
    }
    CHECK(bitwise_equal(ej, ej_ref));
    CHECK(bitwise_equal(es, es_ref));
  }
  omp_set_num_threads(omp_get_num_procs());
}
