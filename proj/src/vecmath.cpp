#include "capmink/vecmath.hpp"

#include <algorithm>

namespace capmink {

bool solve_spd(const SymMat& a, const Vec& b, Vec& x) {
  const int n = a.dim;
  double l[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  // Scale-aware pivot floor: the matrix entries set the natural magnitude.
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.m[i][i]));
  const double floor = 1e-14 * std::max(scale, 1e-300);

  for (int j = 0; j < n; ++j) {
    double d = a.m[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (d <= floor) return false;
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a.m[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  // Forward then back substitution.
  double y[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
    y[i] = s / l[i][i];
  }
  x = {0, 0, 0};
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= l[k][i] * x[k];
    x[i] = s / l[i][i];
  }
  return true;
}

double min_eigenvalue(const SymMat& a) {
  if (a.dim == 2) {
    const double tr = a.m[0][0] + a.m[1][1];
    const double det = a.m[0][0] * a.m[1][1] - a.m[0][1] * a.m[1][0];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return tr / 2.0 - disc;
  }
  // Cyclic Jacobi on a copy; plenty for 3x3.
  double m[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = a.m[i][j];
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-30) break;
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(m[p][q]) < 1e-300) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (int k = 0; k < 3; ++k) {
          const double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }
  return std::min({m[0][0], m[1][1], m[2][2]});
}

}  // namespace capmink
