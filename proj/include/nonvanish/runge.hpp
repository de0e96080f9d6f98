#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nonvanish/constraints.hpp"
#include "nonvanish/elliptic.hpp"

namespace nonvanish {

// Pointwise target with an analytic gradient; the canonical choices are
// constants and coordinate functions, which solve any constant-coefficient
// divergence-form equation.
struct LocalTarget {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
};

struct LocalFamily {
  Vec2 center{0.0, 0.0};
  double radius = 0.0;
  ConstraintKind constraint = ConstraintKind::kJacobian;
  std::vector<LocalTarget> targets;
};

// nodal -> (1); jacobian -> (x1, x2); augmented -> (1, x1, x2). The stacked
// zeta determinant at the center is exactly 1.
LocalFamily local_family(const ConstraintMap& constraint, const Vec2& center,
                         double radius = 0.0);

// One solved field per boundary basis element: the Fourier modes up to
// degree m/2 on the disk, or every boundary hat function on the square.
// Any datum in the span solves by superposition against one factorization.
struct BasisFields {
  std::shared_ptr<const Mesh> mesh;
  BasisKind kind = BasisKind::kFourier;
  int degree = 0;
  std::vector<SolutionField> fields;

  int size() const { return static_cast<int>(fields.size()); }
  BoundaryDatum datum_from(const Eigen::VectorXd& coeffs) const;
  SolutionField combine(const Eigen::VectorXd& coeffs) const;
};

BasisFields build_basis_fields(const AssembledSystem& system, int m);

struct RungeResult {
  BoundaryDatum datum;
  double achieved_c1_error = 0.0;   // max over ball samples of |u-t| + |grad u - grad t|
  double target_c1_scale = 0.0;     // max over ball samples of |t| + |grad t|
  double relative_c1_error = 0.0;
  double residual_norm = 0.0;       // least-squares misfit at the optimum
  int modes_used = 0;
  double delta = 0.0;               // absolute Tikhonov weight actually applied
  bool poor = false;                // achieved error above the requested tolerance

  nlohmann::json to_json() const;
};

// Tikhonov-regularized boundary control: minimize the discrete H1 misfit to
// the target over ball samples plus delta * |coefficients|^2, using one
// pre-solved field per basis element. The achieved C1 error is measured from
// a fresh solve of the returned datum and reported honestly; `poor` flags it
// when it exceeds the tolerance.
RungeResult runge_approximate(const AssembledSystem& system, const BasisFields& basis,
                              const LocalTarget& target, const Vec2& center, double r,
                              double delta_rel, double tolerance);

// Convenience overload matching the operation signature: builds the basis
// fields for size m first. m >= 1 required.
RungeResult runge_approximate(const AssembledSystem& system, const LocalTarget& target,
                              const Vec2& center, double r, int m, double delta_rel,
                              double tolerance = 0.05);

class CoveringFailure : public Error {
 public:
  CoveringFailure(const std::string& what, Vec2 point, double center_margin, int groups_built)
      : Error(what), point(point), center_margin(center_margin), groups_built(groups_built) {}
  Vec2 point;
  double center_margin;
  int groups_built;
};

struct CoveringGroup {
  Vec2 center{0.0, 0.0};
  double center_det = 0.0;        // |det| of the group's stacked rows at its center
  double max_c1_error = 0.0;      // worst achieved C1 error among the group's members
  double det_lower_bound = 0.0;   // Hadamard transfer bound 1 - n (1+delta)^(n-1) delta
  std::vector<int> member_indices;
};

struct RungeParams {
  double r = 0.15;          // ball radius
  int m = 32;               // boundary basis size
  double delta_rel = 1e-8;  // Tikhonov weight relative to the normal matrix diagonal
  double tolerance = 0.05;  // relative C1 error above which a result is flagged poor
};

struct Covering {
  SolutionFamily family;
  std::vector<CoveringGroup> groups;
  std::vector<RungeResult> member_results;
  double min_stacked_singular_value = 0.0;

  nlohmann::json to_json(const std::string& margin_file) const;
};

// Greedy covering: take the first uncovered sample as a center, approximate
// its local family, and mark covered every sample where the group's |det|
// stays above half its center value. Every center covers at least itself,
// so the loop terminates unless a group collapses at its own center.
Covering build_covering(const AssembledSystem& system, const BasisFields& basis,
                        const SampledRegion& region, const ConstraintMap& constraint,
                        const RungeParams& params);

struct CandidateReport {
  Eigen::VectorXd margins;  // candidate margin of the covering family per sample
  bool complete = false;    // all margins positive: the discrete candidate set is all of K
  int groups = 0;
  int members = 0;

  nlohmann::json to_json() const;
};

CandidateReport verify_candidate_set(const AssembledSystem& system, const BasisFields& basis,
                                     const SampledRegion& region,
                                     const ConstraintMap& constraint, const RungeParams& params);

}  // namespace nonvanish
