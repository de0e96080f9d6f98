#include "nonvanish/runge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nonvanish {

namespace {

// a group whose |det| falls below this at its own center cannot cover anything
constexpr double kCenterDetFloor = 1e-6;

LocalTarget constant_target(double v) {
  return {[v](const Vec2&) { return v; }, [](const Vec2&) { return Vec2::Zero(); }};
}

LocalTarget coordinate_target(int axis) {
  return {[axis](const Vec2& p) { return p[axis]; },
          [axis](const Vec2&) { return axis == 0 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0); }};
}

}  // namespace

LocalFamily local_family(const ConstraintMap& constraint, const Vec2& center, double radius) {
  LocalFamily fam;
  fam.center = center;
  fam.radius = radius;
  fam.constraint = constraint.kind;
  switch (constraint.kind) {
    case ConstraintKind::kNodal:
      fam.targets.push_back(constant_target(1.0));
      break;
    case ConstraintKind::kJacobian:
      fam.targets.push_back(coordinate_target(0));
      fam.targets.push_back(coordinate_target(1));
      break;
    case ConstraintKind::kAugmented:
      fam.targets.push_back(constant_target(1.0));
      fam.targets.push_back(coordinate_target(0));
      fam.targets.push_back(coordinate_target(1));
      break;
  }
  return fam;
}

BoundaryDatum BasisFields::datum_from(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != size())
    throw InvalidArgument("basis datum: coefficient length does not match the basis");
  if (kind == BasisKind::kFourier) return BoundaryDatum::fourier(degree, coeffs);
  return BoundaryDatum::nodal(coeffs);
}

SolutionField BasisFields::combine(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() != size())
    throw InvalidArgument("basis combine: coefficient length does not match the basis");
  SolutionField out;
  out.mesh = mesh;
  out.datum = datum_from(coeffs);
  out.nodal_values = Eigen::VectorXd::Zero(mesh->vertex_count());
  out.element_gradients.assign(mesh->triangle_count(), Vec2::Zero());
  for (int e = 0; e < size(); ++e) {
    if (coeffs[e] == 0.0) continue;
    out.nodal_values += coeffs[e] * fields[e].nodal_values;
    for (int t = 0; t < mesh->triangle_count(); ++t)
      out.element_gradients[t] += coeffs[e] * fields[e].element_gradients[t];
  }
  return out;
}

BasisFields build_basis_fields(const AssembledSystem& system, int m) {
  if (m < 1) throw InvalidArgument("basis fields: m must be >= 1");
  BasisFields basis;
  basis.mesh = system.mesh();

  if (system.mesh()->domain_kind == DomainKind::kDisk) {
    basis.kind = BasisKind::kFourier;
    basis.degree = m / 2;
    const int count = 2 * basis.degree + 1;
    for (int e = 0; e < count; ++e) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(count);
      c[e] = 1.0;
      basis.fields.push_back(system.solve(BoundaryDatum::fourier(basis.degree, c)));
    }
  } else {
    // square: the nodal hat functions span the whole discrete trace space
    basis.kind = BasisKind::kNodal;
    basis.degree = 0;
    const int count = system.mesh()->boundary_count();
    for (int e = 0; e < count; ++e) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(count);
      c[e] = 1.0;
      basis.fields.push_back(system.solve(BoundaryDatum::nodal(c)));
    }
  }
  return basis;
}

RungeResult runge_approximate(const AssembledSystem& system, const BasisFields& basis,
                              const LocalTarget& target, const Vec2& center, double r,
                              double delta_rel, double tolerance) {
  if (!(r > 0.0)) throw InvalidArgument("runge_approximate: ball radius must be positive");
  if (!(delta_rel > 0.0)) throw InvalidArgument("runge_approximate: delta must be positive");
  const Mesh& mesh = *system.mesh();
  const std::vector<int> ball = triangles_in_ball(mesh, center, r);
  if (ball.empty())
    throw InvalidArgument("runge_approximate: no mesh barycenter falls inside the ball");

  const int nb = basis.size();
  const int rows = 3 * static_cast<int>(ball.size());
  Eigen::MatrixXd g(rows, nb);
  Eigen::VectorXd y(rows);
  for (std::size_t s = 0; s < ball.size(); ++s) {
    const int t = ball[s];
    const Vec2 bc = mesh.barycenter(t);
    for (int e = 0; e < nb; ++e) {
      const SolutionField& f = basis.fields[e];
      const auto& v = mesh.triangles[t];
      g(3 * s + 0, e) = (f.nodal_values[v[0]] + f.nodal_values[v[1]] + f.nodal_values[v[2]]) / 3.0;
      g(3 * s + 1, e) = f.element_gradients[t].x();
      g(3 * s + 2, e) = f.element_gradients[t].y();
    }
    const Vec2 tg = target.gradient(bc);
    y[3 * s + 0] = target.value(bc);
    y[3 * s + 1] = tg.x();
    y[3 * s + 2] = tg.y();
  }

  Eigen::MatrixXd normal = g.transpose() * g;
  const double diag_max = normal.diagonal().maxCoeff();
  const double delta = delta_rel * (diag_max > 0.0 ? diag_max : 1.0);
  normal.diagonal().array() += delta;
  const Eigen::VectorXd beta = Eigen::LDLT<Eigen::MatrixXd>(normal).solve(g.transpose() * y);

  RungeResult result;
  result.datum = basis.datum_from(beta);
  result.modes_used = nb;
  result.delta = delta;
  result.residual_norm = (g * beta - y).norm();

  // honesty check: measure the C1 error from a fresh solve of the datum
  const SolutionField achieved = system.solve(result.datum);
  double err = 0.0, scale = 0.0;
  for (int t : ball) {
    const Vec2 bc = mesh.barycenter(t);
    const auto& v = mesh.triangles[t];
    const double u =
        (achieved.nodal_values[v[0]] + achieved.nodal_values[v[1]] + achieved.nodal_values[v[2]]) /
        3.0;
    const Vec2 du = achieved.element_gradients[t];
    const double tv = target.value(bc);
    const Vec2 tg = target.gradient(bc);
    err = std::max(err, std::abs(u - tv) + (du - tg).norm());
    scale = std::max(scale, std::abs(tv) + tg.norm());
  }
  result.achieved_c1_error = err;
  result.target_c1_scale = scale;
  result.relative_c1_error = scale > 0.0 ? err / scale : err;
  result.poor = tolerance > 0.0 && result.relative_c1_error > tolerance;
  return result;
}

RungeResult runge_approximate(const AssembledSystem& system, const LocalTarget& target,
                              const Vec2& center, double r, int m, double delta_rel,
                              double tolerance) {
  if (m < 1) throw InvalidArgument("runge_approximate: basis size m must be >= 1");
  const BasisFields basis = build_basis_fields(system, m);
  return runge_approximate(system, basis, target, center, r, delta_rel, tolerance);
}

Covering build_covering(const AssembledSystem& system, const BasisFields& basis,
                        const SampledRegion& region, const ConstraintMap& constraint,
                        const RungeParams& params) {
  if (params.r > region.clearance)
    throw InvalidArgument("build_covering: ball radius " + std::to_string(params.r) +
                          " exceeds the region clearance " + std::to_string(region.clearance));

  const int p_count = region.size();
  const int n = constraint.n;
  std::vector<char> covered(p_count, 0);
  std::vector<SolutionField> members;
  std::vector<CoveringGroup> groups;
  std::vector<RungeResult> results;
  const RegularityClass reg = system.coefficients().regularity;

  for (;;) {
    int center_idx = -1;
    for (int p = 0; p < p_count; ++p) {
      if (!covered[p]) {
        center_idx = p;
        break;
      }
    }
    if (center_idx < 0) break;
    const Vec2 center = region.points[center_idx];

    const LocalFamily locals = local_family(constraint, center, params.r);
    std::vector<SolutionField> group_fields;
    CoveringGroup group;
    group.center = center;
    for (const LocalTarget& target : locals.targets) {
      RungeResult rr = runge_approximate(system, basis, target, center, params.r,
                                         params.delta_rel, params.tolerance);
      group.max_c1_error = std::max(group.max_c1_error, rr.achieved_c1_error);
      group_fields.push_back(system.solve(rr.datum));
      results.push_back(std::move(rr));
    }

    // dets of the group's stacked rows over all samples
    SolutionFamily probe(region, constraint, group_fields, reg);
    std::vector<int> identity(n);
    for (int i = 0; i < n; ++i) identity[i] = i;
    const double cdet = std::abs(tuple_det(probe, identity, center_idx));
    const double d = group.max_c1_error;
    group.center_det = cdet;
    group.det_lower_bound = 1.0 - n * std::pow(1.0 + d, n - 1) * d;

    if (cdet < kCenterDetFloor) {
      std::ostringstream os;
      os << "build_covering: group determinant " << cdet << " collapsed at its own center ("
         << center.x() << ", " << center.y() << "); the approximation step is too poor";
      throw CoveringFailure(os.str(), center, cdet, static_cast<int>(groups.size()));
    }

    for (int p = 0; p < p_count; ++p) {
      if (!covered[p] && std::abs(tuple_det(probe, identity, p)) >= 0.5 * cdet) covered[p] = 1;
    }

    const int base = static_cast<int>(members.size());
    for (int i = 0; i < n; ++i) group.member_indices.push_back(base + i);
    members.insert(members.end(), group_fields.begin(), group_fields.end());
    groups.push_back(std::move(group));
  }

  SolutionFamily family(region, constraint, std::move(members), reg);
  int worst = 0;
  const double min_sv = stacked_margin(family, &worst);
  if (family_rank(family, worst) < n)
    throw CoveringFailure("build_covering: covering family loses rank at a sample",
                          region.points[worst], min_sv, static_cast<int>(groups.size()));

  Covering cov{std::move(family), std::move(groups), std::move(results), min_sv};
  return cov;
}

CandidateReport verify_candidate_set(const AssembledSystem& system, const BasisFields& basis,
                                     const SampledRegion& region,
                                     const ConstraintMap& constraint, const RungeParams& params) {
  const Covering cov = build_covering(system, basis, region, constraint, params);
  CandidateReport report;
  report.groups = static_cast<int>(cov.groups.size());
  report.members = cov.family.member_count();
  report.margins.resize(region.size());
  bool all_positive = true;
  for (int p = 0; p < region.size(); ++p) {
    report.margins[p] = candidate_margin(cov.family, p);
    all_positive = all_positive && report.margins[p] > 0.0;
  }
  report.complete = all_positive;
  return report;
}

nlohmann::json RungeResult::to_json() const {
  nlohmann::json j;
  j["modes"] = modes_used;
  j["delta"] = delta;
  j["achieved_c1_error"] = achieved_c1_error;
  j["relative_c1_error"] = relative_c1_error;
  j["residual"] = residual_norm;
  j["poor"] = poor;
  return j;
}

nlohmann::json Covering::to_json(const std::string& margin_file) const {
  nlohmann::json j;
  j["centers"] = nlohmann::json::array();
  for (const auto& g : groups)
    j["centers"].push_back({{"x", g.center.x()}, {"y", g.center.y()}});
  j["groups"] = groups.size();
  j["members"] = family.member_count();
  j["min_stacked_singular_value"] = min_stacked_singular_value;
  j["per_point_candidate_margin_file"] = margin_file;
  return j;
}

nlohmann::json CandidateReport::to_json() const {
  nlohmann::json j;
  j["groups"] = groups;
  j["members"] = members;
  j["complete"] = complete;
  j["min_margin"] = margins.size() > 0 ? margins.minCoeff() : 0.0;
  j["samples"] = margins.size();
  return j;
}

}  // namespace nonvanish
