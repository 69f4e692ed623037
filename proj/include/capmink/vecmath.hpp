#ifndef CAPMINK_VECMATH_HPP
#define CAPMINK_VECMATH_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace capmink {

// Points and directions in R^2 or R^3. Two-dimensional data keeps z = 0 so
// that full three-component arithmetic stays valid in both cases.
using Vec = std::array<double, 3>;

inline constexpr Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline constexpr Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline Vec operator+(const Vec& a, const Vec& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator*(double s, const Vec& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }

inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec normalized(const Vec& a) {
  const double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Determinant of the dim x dim matrix whose rows are the given vectors
// (only the leading dim components are used).
inline double det_rows(const Vec& a, const Vec& b, int dim) {
  (void)dim;
  return a[0] * b[1] - a[1] * b[0];
}
inline double det_rows(const Vec& a, const Vec& b, const Vec& c) {
  return dot(a, cross(b, c));
}

// Small symmetric matrix used for Newton systems in R^2/R^3.
struct SymMat {
  int dim = 2;
  // Row-major upper storage of the full 3x3; unused entries stay zero.
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};

  void clear() {
    for (auto& row : m)
      for (double& v : row) v = 0.0;
  }
  void add_outer(const Vec& u, double w) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m[i][j] += w * u[i] * u[j];
  }
};

// Cholesky solve of A x = b for symmetric positive definite A.
// Returns false if a pivot drops below a curvature floor.
bool solve_spd(const SymMat& a, const Vec& b, Vec& x);

// Eigenvalue bounds of a SymMat via the characteristic polynomial (dim 2)
// or cyclic Jacobi (dim 3). Used by tests and definiteness checks.
double min_eigenvalue(const SymMat& a);

}  // namespace capmink

#endif
