#ifndef CAPMINK_SMALLLP_HPP
#define CAPMINK_SMALLLP_HPP

#include <array>
#include <cstdint>
#include <vector>

namespace capmink {

// Tiny dense linear programs in up to four variables:
//   maximize c.x  subject to  a[i].x <= b[i]  and  |x_j| <= box.
// The explicit box keeps every instance bounded; callers pick a box that
// comfortably contains the region of interest.
struct LpProblem {
  int dim = 2;                            // number of active variables (<= 4)
  std::vector<std::array<double, 4>> a;   // constraint normals
  std::vector<double> b;                  // constraint offsets
  std::array<double, 4> c = {0, 0, 0, 0}; // objective
  double box = 16.0;
};

struct LpSolution {
  bool feasible = false;
  std::array<double, 4> x = {0, 0, 0, 0};
  double value = 0.0;
};

// Seidel's randomized incremental algorithm. Expected O(d! * m) for m
// constraints, exact optimum up to roundoff. The shuffle uses a private
// Fisher-Yates driven by `seed`, so results are reproducible everywhere.
LpSolution lp_maximize(const LpProblem& p, std::uint64_t seed = 0x5eed11u);

}  // namespace capmink

#endif
