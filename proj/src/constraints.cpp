#include "nonvanish/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace nonvanish {

namespace {

double det_n(const Eigen::MatrixXd& rows) {
  switch (rows.rows()) {
    case 1:
      return rows(0, 0);
    case 2:
      return rows(0, 0) * rows(1, 1) - rows(0, 1) * rows(1, 0);
    case 3:
      return rows(0, 0) * (rows(1, 1) * rows(2, 2) - rows(1, 2) * rows(2, 1)) -
             rows(0, 1) * (rows(1, 0) * rows(2, 2) - rows(1, 2) * rows(2, 0)) +
             rows(0, 2) * (rows(1, 0) * rows(2, 1) - rows(1, 1) * rows(2, 0));
    default:
      return rows.determinant();
  }
}

double det_rows(const Eigen::MatrixXd& zeta, std::span<const int> indices) {
  const int n = static_cast<int>(indices.size());
  Eigen::Matrix3d m;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = zeta(indices[i], j);
  switch (n) {
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    default:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  }
}

// Sum over ordered n-tuples with repetition of |det| of the selected rows.
double tuple_sum(const Eigen::MatrixXd& zeta) {
  const int k = static_cast<int>(zeta.rows());
  const int n = static_cast<int>(zeta.cols());
  double acc = 0.0;
  if (n == 1) {
    for (int i = 0; i < k; ++i) acc += std::abs(zeta(i, 0));
    return acc;
  }
  if (n == 2) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        acc += std::abs(zeta(i, 0) * zeta(j, 1) - zeta(i, 1) * zeta(j, 0));
    return acc;
  }
  int idx[3];
  for (idx[0] = 0; idx[0] < k; ++idx[0])
    for (idx[1] = 0; idx[1] < k; ++idx[1])
      for (idx[2] = 0; idx[2] < k; ++idx[2])
        acc += std::abs(det_rows(zeta, std::span<const int>(idx, 3)));
  return acc;
}

}  // namespace

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kNodal: return "nodal";
    case ConstraintKind::kJacobian: return "jacobian";
    case ConstraintKind::kAugmented: return "augmented";
  }
  return "?";
}

ConstraintKind constraint_from_string(const std::string& name) {
  if (name == "nodal") return ConstraintKind::kNodal;
  if (name == "jacobian") return ConstraintKind::kJacobian;
  if (name == "augmented") return ConstraintKind::kAugmented;
  throw ConfigError("unknown constraint kind '" + name + "'");
}

ConstraintMap ConstraintMap::make(ConstraintKind kind) {
  ConstraintMap c;
  c.kind = kind;
  switch (kind) {
    case ConstraintKind::kNodal:
      c.n = 1;
      c.ell_required = 0;
      break;
    case ConstraintKind::kJacobian:
      c.n = kDim;
      c.ell_required = 1;
      break;
    case ConstraintKind::kAugmented:
      c.n = kDim + 1;
      c.ell_required = 1;
      break;
  }
  return c;
}

Eigen::RowVectorXd zeta_row(const ConstraintMap& constraint, const SolutionField& sol,
                            const SampledRegion& region, int point) {
  if (sol.mesh != region.mesh)
    throw RegionMismatch("zeta_row: solution and region built over different meshes");
  const int t = region.containing_triangle[point];
  const double u = sol.value_at(t, region.points[point]);
  const Vec2& g = sol.element_gradients[t];
  Eigen::RowVectorXd row(constraint.n);
  switch (constraint.kind) {
    case ConstraintKind::kNodal:
      row << u;
      break;
    case ConstraintKind::kJacobian:
      row << g.x(), g.y();
      break;
    case ConstraintKind::kAugmented:
      row << u, g.x(), g.y();
      break;
  }
  return row;
}

SolutionFamily::SolutionFamily(SampledRegion region, ConstraintMap constraint,
                               std::vector<SolutionField> members, RegularityClass regularity)
    : region_(std::move(region)),
      constraint_(constraint),
      members_(std::move(members)),
      regularity_(regularity) {
  for (const auto& member : members_)
    if (member.mesh != region_.mesh)
      throw RegionMismatch("family member built over a different mesh than the region");

  // gradient constraints on ell=0 coefficients: flagged, not rejected
  regularity_warning_ = constraint_.ell_required > regularity_.ell;

  const int p = region_.size();
  const int k = member_count();
  zeta_.resize(p);
  std::vector<std::vector<PointSample>> samples(k);
  for (int i = 0; i < k; ++i) samples[i] = evaluate(members_[i], region_);
  for (int pt = 0; pt < p; ++pt) {
    Eigen::MatrixXd z(k, constraint_.n);
    for (int i = 0; i < k; ++i) {
      const PointSample& s = samples[i][pt];
      switch (constraint_.kind) {
        case ConstraintKind::kNodal:
          z(i, 0) = s.u;
          break;
        case ConstraintKind::kJacobian:
          z(i, 0) = s.grad.x();
          z(i, 1) = s.grad.y();
          break;
        case ConstraintKind::kAugmented:
          z(i, 0) = s.u;
          z(i, 1) = s.grad.x();
          z(i, 2) = s.grad.y();
          break;
      }
    }
    zeta_[pt] = std::move(z);
  }
}

SolutionFamily SolutionFamily::from_tables(SampledRegion region, ConstraintMap constraint,
                                           std::vector<SolutionField> members,
                                           RegularityClass regularity,
                                           std::vector<Eigen::MatrixXd> tables) {
  SolutionFamily f;
  f.region_ = std::move(region);
  f.constraint_ = constraint;
  f.members_ = std::move(members);
  f.regularity_ = regularity;
  f.zeta_ = std::move(tables);
  f.regularity_warning_ = constraint.ell_required > regularity.ell;
  return f;
}

SolutionFamily SolutionFamily::subset(const std::vector<int>& indices) const {
  std::vector<SolutionField> members;
  members.reserve(indices.size());
  for (int i : indices) members.push_back(members_[i]);
  std::vector<Eigen::MatrixXd> tables(zeta_.size());
  for (std::size_t p = 0; p < zeta_.size(); ++p) {
    Eigen::MatrixXd z(indices.size(), constraint_.n);
    for (std::size_t i = 0; i < indices.size(); ++i) z.row(i) = zeta_[p].row(indices[i]);
    tables[p] = std::move(z);
  }
  return from_tables(region_, constraint_, std::move(members), regularity_, std::move(tables));
}

double tuple_det(const SolutionFamily& family, std::span<const int> indices, int point) {
  if (static_cast<int>(indices.size()) != family.n())
    throw InvalidArgument("tuple_det: index tuple must have length n");
  for (int i : indices)
    if (i < 0 || i >= family.member_count())
      throw InvalidArgument("tuple_det: member index out of range");
  return det_rows(family.zeta(point), indices);
}

int family_rank(const SolutionFamily& family, int point, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("family_rank: tolerance must be positive");
  const Eigen::MatrixXd& z = family.zeta(point);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(z);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * sv[0]) ++rank;
  return rank;
}

double min_singular_value(const SolutionFamily& family, int point) {
  const Eigen::MatrixXd& z = family.zeta(point);
  const Eigen::MatrixXd gram = z.transpose() * z;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double lam = eig.eigenvalues().minCoeff();
  return lam > 0.0 ? std::sqrt(lam) : 0.0;
}

double stacked_margin(const SolutionFamily& family, int* argmin_point) {
  double mn = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int p = 0; p < family.sample_count(); ++p) {
    const double s = min_singular_value(family, p);
    if (s < mn) {
      mn = s;
      arg = p;
    }
  }
  if (argmin_point) *argmin_point = arg;
  return mn;
}

AdmissibilityReport admissibility_margin(const SolutionFamily& family) {
  const int k = family.member_count();
  const int n = family.n();
  if (k < n)
    throw TooFewMembers("admissibility_margin: " + std::to_string(k) + " members but n = " +
                        std::to_string(n));

  AdmissibilityReport report;
  report.member_count = k;
  report.n = n;
  report.sample_count = family.sample_count();
  report.per_point_margins.resize(family.sample_count());

  for (int p = 0; p < family.sample_count(); ++p)
    report.per_point_margins[p] = tuple_sum(family.zeta(p));

  report.margin = report.per_point_margins.minCoeff(&report.argmin_index);
  report.argmin_point = family.region().points[report.argmin_index];

  // largest single |det| tuple at the argmin sample, lexicographically first
  const Eigen::MatrixXd& z = family.zeta(report.argmin_index);
  std::vector<int> idx(n, 0);
  double best = -1.0;
  for (;;) {
    const double d = std::abs(det_rows(z, idx));
    if (d > best) {
      best = d;
      report.best_tuple = idx;
    }
    int pos = n - 1;
    while (pos >= 0 && ++idx[pos] == k) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return report;
}

double candidate_margin(const SolutionFamily& family, int point) {
  const int k = family.member_count();
  const int n = family.n();
  if (k < n)
    throw TooFewMembers("candidate_margin: " + std::to_string(k) + " members but n = " +
                        std::to_string(n));
  const Eigen::MatrixXd& z = family.zeta(point);
  std::vector<int> idx(n, 0);
  double best = 0.0;
  for (;;) {
    best = std::max(best, std::abs(det_rows(z, idx)));
    int pos = n - 1;
    while (pos >= 0 && ++idx[pos] == k) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return best;
}

nlohmann::json AdmissibilityReport::to_json(const std::string& per_point_margins_file) const {
  nlohmann::json j;
  j["margin"] = margin;
  j["argmin"] = {{"x", argmin_point.x()}, {"y", argmin_point.y()}};
  j["best_tuple"] = best_tuple;
  j["n"] = n;
  j["member_count"] = member_count;
  j["sample_count"] = sample_count;
  j["per_point_margins_file"] = per_point_margins_file;
  return j;
}

}  // namespace nonvanish
