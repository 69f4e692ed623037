// Walk-on-spheres estimate of the harmonic capacity (n = 3, p = 2): the
// equilibrium potential at a point equals the probability that Brownian
// motion started there hits the body before escaping to infinity.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "capmink/capacity.hpp"
#include "capmink/errors.hpp"

namespace capmink {
namespace {

constexpr double kPi = 3.14159265358979323846;

// SplitMix64 finalizer: decorrelates the per-walk seeds derived from
// (user seed, walk index) so neighboring walks are independent.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t walk) {
  std::uint64_t x = seed + (walk + 1) * 0x9e3779b97f4a7c15ull;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

Vec uniform_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double z = 1.0 - 2.0 * unif(rng);
  const double phi = 2.0 * kPi * unif(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

// Brownian motion outside the sphere |y - c| = b, started at distance
// s > b, returns to the sphere with probability b/s. Conditioned on
// returning, the hit point's polar angle about the start direction has the
// exterior Poisson kernel law, invertible in closed form.
Vec sample_return_point(const Vec& c, double b, const Vec& y,
                        std::mt19937_64& rng) {
  const double s = norm(y - c);
  const double rho = b / s;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double t = 2.0 * rho * unif(rng) / (1.0 - rho * rho) + 1.0 / (1.0 + rho);
  double cos_th = (1.0 + rho * rho - 1.0 / (t * t)) / (2.0 * rho);
  cos_th = std::clamp(cos_th, -1.0, 1.0);
  const double sin_th = std::sqrt(std::max(0.0, 1.0 - cos_th * cos_th));
  const double phi = 2.0 * kPi * unif(rng);

  // orthonormal frame with e3 pointing from the center to the walker
  const Vec e3 = (1.0 / s) * (y - c);
  Vec e1 = std::fabs(e3[0]) < 0.9 ? cross(e3, Vec{1, 0, 0})
                                  : cross(e3, Vec{0, 1, 0});
  e1 = normalized(e1);
  const Vec e2 = cross(e3, e1);
  const Vec dir = cos_th * e3 +
                  sin_th * (std::cos(phi) * e1 + std::sin(phi) * e2);
  return c + b * dir;
}

}  // namespace

WosResult wos_capacity(const Polytope& P, std::size_t walks,
                       std::uint64_t seed) {
  if (P.dim != 3)
    throw ValidationError(
        "walk-on-spheres backend requires dimension 3 (harmonic case p = 2)");
  if (walks == 0) throw ValidationError("walk count must be positive");

  // bounding sphere about the vertex centroid
  Vec c = {0, 0, 0};
  for (const Vec& v : P.vertices) c = c + v;
  c = (1.0 / static_cast<double>(P.vertices.size())) * c;
  double b = 0.0;
  for (const Vec& v : P.vertices) b = std::max(b, norm(v - c));
  b *= 1.0 + 1e-12;
  const double diam = metrics(P).diameter;
  const double r_probe = 10.0 * diam;
  const double absorb = 1e-4 * diam;
  const int max_steps = 100000;

  // six antipodal probes: pairing cancels the dipole term of the far field
  const Vec probes[6] = {c + Vec{r_probe, 0, 0}, c - Vec{r_probe, 0, 0},
                         c + Vec{0, r_probe, 0}, c - Vec{0, r_probe, 0},
                         c + Vec{0, 0, r_probe}, c - Vec{0, 0, r_probe}};

  const int nd = P.num_directions();
  long long hits = 0;
  const long long w_total = static_cast<long long>(walks);
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (long long w = 0; w < w_total; ++w) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(w)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vec y = probes[w % 6];
    for (int step = 0; step < max_steps; ++step) {
      const double s = norm(y - c);
      if (s > b + absorb) {
        // outside the bounding sphere the body is unreachable this step
        if (unif(rng) >= b / s) break;  // escaped to infinity
        y = sample_return_point(c, b, y, rng);
        continue;
      }
      // max-plane gap: a lower bound on dist(y, P), nonpositive only inside
      double gap = -1e300;
      for (int i = 0; i < nd; ++i)
        gap = std::max(gap, dot(y, P.normals[i]) - P.support[i]);
      if (gap <= absorb) {
        ++hits;
        break;
      }
      y = y + gap * uniform_direction(rng);
    }
  }

  const double rate = static_cast<double>(hits) / static_cast<double>(walks);
  WosResult res;
  res.estimate = 4.0 * kPi * r_probe * rate;
  res.std_error = 4.0 * kPi * r_probe *
                  std::sqrt(std::max(0.0, rate * (1.0 - rate)) /
                            static_cast<double>(walks));
  return res;
}

}  // namespace capmink
