#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "json.hpp"

#include "nonvanish/elliptic.hpp"
#include "nonvanish/geometry.hpp"

namespace nonvanish {

enum class ConstraintKind { kNodal, kJacobian, kAugmented };

std::string to_string(ConstraintKind kind);
ConstraintKind constraint_from_string(const std::string& name);

// One of the three pointwise maps: value only (n=1), gradient (n=d), or
// value plus gradient (n=d+1). ell_required is the coefficient regularity
// the gradient entries rely on.
struct ConstraintMap {
  ConstraintKind kind = ConstraintKind::kJacobian;
  int n = kDim;
  int ell_required = 1;

  static ConstraintMap make(ConstraintKind kind);
};

class TooFewMembers : public Error {
 public:
  using Error::Error;
};

class RegularityMismatch : public Error {
 public:
  using Error::Error;
};

// Row of length n for one solution at one region sample.
Eigen::RowVectorXd zeta_row(const ConstraintMap& constraint, const SolutionField& sol,
                            const SampledRegion& region, int point);

// Ordered family of solutions over one region with the per-point stacked
// rows precomputed. Immutable after construction; reads are safe
// concurrently.
class SolutionFamily {
 public:
  SolutionFamily(SampledRegion region, ConstraintMap constraint,
                 std::vector<SolutionField> members, RegularityClass regularity);

  int member_count() const { return static_cast<int>(members_.size()); }
  int sample_count() const { return region_.size(); }
  int n() const { return constraint_.n; }
  const ConstraintMap& constraint() const { return constraint_; }
  const SampledRegion& region() const { return region_; }
  const std::vector<SolutionField>& members() const { return members_; }
  const RegularityClass& regularity() const { return regularity_; }
  bool regularity_warning() const { return regularity_warning_; }

  // k x n matrix of rows zeta(u_i) at sample point p.
  const Eigen::MatrixXd& zeta(int point) const { return zeta_[point]; }

  // family restricted to a subset of members (same region and tables)
  SolutionFamily subset(const std::vector<int>& indices) const;

  // used by the projection machinery to keep tables consistent by linearity
  static SolutionFamily from_tables(SampledRegion region, ConstraintMap constraint,
                                    std::vector<SolutionField> members,
                                    RegularityClass regularity,
                                    std::vector<Eigen::MatrixXd> tables);

 private:
  SolutionFamily() = default;

  SampledRegion region_;
  ConstraintMap constraint_;
  std::vector<SolutionField> members_;
  RegularityClass regularity_;
  std::vector<Eigen::MatrixXd> zeta_;  // per point, member_count x n
  bool regularity_warning_ = false;
};

// Determinant of the n x n matrix formed by the selected members' rows.
double tuple_det(const SolutionFamily& family, std::span<const int> indices, int point);

// Numerical rank of the stacked k x n matrix at the point: singular values
// above tol * sigma_max.
int family_rank(const SolutionFamily& family, int point, double tol = 1e-10);

// Smallest singular value of the stacked matrix at one point / minimized
// over all sample points (with the attaining point index).
double min_singular_value(const SolutionFamily& family, int point);
double stacked_margin(const SolutionFamily& family, int* argmin_point = nullptr);

struct AdmissibilityReport {
  double margin = 0.0;
  Vec2 argmin_point{0.0, 0.0};
  int argmin_index = -1;
  std::vector<int> best_tuple;  // largest |det| tuple at the argmin sample
  Eigen::VectorXd per_point_margins;
  int member_count = 0;
  int n = 0;
  int sample_count = 0;

  nlohmann::json to_json(const std::string& per_point_margins_file) const;
};

// Sum over ordered n-tuples (with repetition) of |det| at every sample;
// the margin is the minimum over samples.
AdmissibilityReport admissibility_margin(const SolutionFamily& family);

// Max over ordered n-tuples of |det| at the point.
double candidate_margin(const SolutionFamily& family, int point);

}  // namespace nonvanish
