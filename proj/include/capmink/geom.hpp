#ifndef CAPMINK_GEOM_HPP
#define CAPMINK_GEOM_HPP

#include <string>
#include <vector>

#include "capmink/vecmath.hpp"

namespace capmink {

// A unit outward normal direction on the sphere S^{n-1}.
using Direction = Vec;

// Discrete weighted direction set: the measure sum_i gamma_i * delta_{u_i}.
struct WeightedDirections {
  int dim = 2;                       // ambient dimension n (2 or 3)
  std::vector<Direction> directions; // unit vectors u_i
  std::vector<double> weights;       // gamma_i > 0

  int size() const { return static_cast<int>(directions.size()); }
  double total_weight() const;
};

struct ValidationReport {
  bool unit_norm = false;
  bool general_position = false;
  bool positively_spanning = false;  // false <=> concentrated on a closed hemisphere
  std::string detail;                // names the first failing condition, empty if ok

  bool ok() const { return unit_norm && general_position && positively_spanning; }
};

// Checks the three admissibility conditions on a direction set:
// unit norms, general position (every n-subset linearly independent, tested
// as |det| >= tol after row normalization), and positive spanning (tested by
// the small LP  max s  s.t.  v.u_i >= s, |v|_inf <= 1; the set is
// concentrated on a closed hemisphere iff the optimum is > 0, which is exact
// under general position). Throws ValidationError on structural problems
// (N < n+1, nonpositive weights, nonfinite entries).
ValidationReport validate_directions(const WeightedDirections& U, double tol = 1e-9);

// One facet of a polytope.
struct FacetData {
  int normal_index = -1;           // which direction this facet belongs to
  double area = 0.0;               // (n-1)-volume
  Vec centroid = {0, 0, 0};
  std::vector<int> vertex_indices; // counterclockwise about the outward normal
};

// Convex polytope in H-representation with derived V-representation.
// Inactive directions (support set is a vertex or an edge, not a facet)
// keep their support number but have no FacetData entry.
struct Polytope {
  int dim = 2;
  std::vector<Direction> normals;
  std::vector<double> support;     // h_i: P = { x : x.u_i <= h_i }
  std::vector<Vec> vertices;       // derived, sorted lexicographically
  std::vector<FacetData> facets;   // derived, only directions with real facets
  std::vector<int> facet_index;    // per direction: index into facets, or -1
  Vec cheb_center = {0, 0, 0};     // a deepest interior point
  double cheb_radius = 0.0;        // its inradius

  int num_directions() const { return static_cast<int>(normals.size()); }
  bool is_facet(int i) const { return facet_index[i] >= 0; }
  // Strictly positive distance to every bounding plane?
  bool contains(const Vec& x, double tol = 0.0) const;
};

// Builds the polytope { x : x.u_i <= h_i } by enumerating all n-subsets of
// planes (general position makes each subsystem uniquely solvable), keeping
// feasible intersection points, deduplicating, and assembling oriented
// facets. Throws ValidationError when the intersection is unbounded or has
// empty interior.
Polytope intersect_halfspaces(const std::vector<Direction>& normals,
                              const std::vector<double>& h, int dim);

struct Metrics {
  double volume = 0.0;
  double surface_area = 0.0;
  double diameter = 0.0;
};

Metrics metrics(const Polytope& P);

// Euclidean distance from x to P (0 if x is inside).
double distance_to(const Polytope& P, const Vec& x);

// Hausdorff distance between two polytopes: exact via vertex-to-body
// projections, cross-checked against support-number gaps on any shared
// directions (a lower bound).
double hausdorff_distance(const Polytope& P, const Polytope& Q);

// Transformations. translate and scale update derived data in place (the
// combinatorics cannot change); clip lowers one support number and rebuilds.
Polytope translate(const Polytope& P, const Vec& t);
Polytope scale(const Polytope& P, double lambda);
Polytope clip(const Polytope& P, int i0, double t);

// Tangent polytope of the unit ball: all support numbers 1, directions on a
// near-uniform spherical design. dim 2: regular level-gon. dim 3: icosphere
// normals at the given subdivision level (12, 42, 162, 642, ... directions),
// with facet combinatorics taken from the mesh instead of subset
// enumeration. Satisfies B_1 subset P subset (1+eps) B_1.
Polytope make_ball_polytope(int dim, int level);

struct ChebyshevResult {
  Vec center = {0, 0, 0};
  double radius = 0.0;
};

// Deepest interior point (max-inradius), via a small linear program.
ChebyshevResult chebyshev_center(const std::vector<Direction>& normals,
                                 const std::vector<double>& h, int dim,
                                 double box_hint);

}  // namespace capmink

#endif
