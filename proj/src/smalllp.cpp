#include "capmink/smalllp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace capmink {
namespace {

constexpr double kTinyCoef = 1e-13;  // coefficient treated as exactly zero
constexpr double kSlack = 1e-11;     // feasibility slack for accepted points

struct Lin {
  std::array<double, 4> a;
  double b;
};

void fisher_yates(std::vector<Lin>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// Recursive Seidel step: maximize c.x over cons plus the implicit box.
bool seidel(std::vector<Lin> cons, std::array<double, 4> c, int d, double box,
            std::mt19937_64& rng, std::array<double, 4>& x) {
  if (d == 1) {
    double lo = -box, hi = box;
    for (const Lin& l : cons) {
      if (l.a[0] > kTinyCoef) {
        hi = std::min(hi, l.b / l.a[0]);
      } else if (l.a[0] < -kTinyCoef) {
        lo = std::max(lo, l.b / l.a[0]);
      } else if (l.b < -kSlack) {
        return false;  // 0 <= b violated
      }
    }
    if (lo > hi + kSlack) return false;
    x[0] = (c[0] >= 0.0) ? hi : lo;
    return true;
  }

  fisher_yates(cons, rng);

  // Optimum over the box alone.
  for (int j = 0; j < d; ++j)
    x[j] = (c[j] > 0.0) ? box : (c[j] < 0.0 ? -box : 0.0);

  for (std::size_t i = 0; i < cons.size(); ++i) {
    const Lin& k = cons[i];
    double lhs = 0.0;
    for (int j = 0; j < d; ++j) lhs += k.a[j] * x[j];
    if (lhs <= k.b + kSlack) continue;

    // Current optimum violates constraint k, so the new optimum is tight on
    // it. Eliminate the coordinate with the largest coefficient.
    int piv = 0;
    for (int j = 1; j < d; ++j)
      if (std::abs(k.a[j]) > std::abs(k.a[piv])) piv = j;
    if (std::abs(k.a[piv]) <= kTinyCoef) return false;  // 0 <= b, violated

    const double inv = 1.0 / k.a[piv];
    auto reduce = [&](const std::array<double, 4>& a, double b, Lin& out) {
      // Substitute x[piv] = (k.b - sum_{j!=piv} k.a[j] x[j]) / k.a[piv].
      int t = 0;
      const double f = a[piv] * inv;
      for (int j = 0; j < d; ++j) {
        if (j == piv) continue;
        out.a[t++] = a[j] - f * k.a[j];
      }
      for (; t < 4; ++t) out.a[t] = 0.0;
      out.b = b - f * k.b;
    };

    std::vector<Lin> sub;
    sub.reserve(i + 2);
    for (std::size_t t = 0; t < i; ++t) {
      Lin r;
      reduce(cons[t].a, cons[t].b, r);
      sub.push_back(r);
    }
    // The eliminated coordinate still has to respect its own box bounds.
    {
      std::array<double, 4> e = {0, 0, 0, 0};
      e[piv] = 1.0;
      Lin r;
      reduce(e, box, r);
      sub.push_back(r);
      e[piv] = -1.0;
      reduce(e, box, r);
      sub.push_back(r);
    }

    std::array<double, 4> csub = {0, 0, 0, 0};
    {
      int t = 0;
      const double f = c[piv] * inv;
      for (int j = 0; j < d; ++j) {
        if (j == piv) continue;
        csub[t++] = c[j] - f * k.a[j];
      }
    }

    std::array<double, 4> xs = {0, 0, 0, 0};
    if (!seidel(std::move(sub), csub, d - 1, box, rng, xs)) return false;

    // Back-substitute.
    int t = 0;
    double acc = k.b;
    for (int j = 0; j < d; ++j) {
      if (j == piv) continue;
      x[j] = xs[t++];
      acc -= k.a[j] * x[j];
    }
    x[piv] = acc * inv;
  }
  return true;
}

}  // namespace

LpSolution lp_maximize(const LpProblem& p, std::uint64_t seed) {
  LpSolution s;
  std::vector<Lin> cons;
  cons.reserve(p.a.size());
  for (std::size_t i = 0; i < p.a.size(); ++i)
    cons.push_back({p.a[i], p.b[i]});
  std::mt19937_64 rng(seed);
  std::array<double, 4> x = {0, 0, 0, 0};
  if (!seidel(std::move(cons), p.c, p.dim, p.box, rng, x)) return s;
  s.feasible = true;
  s.x = x;
  for (int j = 0; j < p.dim; ++j) s.value += p.c[j] * x[j];
  return s;
}

}  // namespace capmink
