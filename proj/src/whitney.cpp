#include "nonvanish/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nonvanish {

namespace {

// below this fraction of the row scale a singular value counts as a rank loss
constexpr double kRankFloorRel = 1e-7;

double max_row_norm(const SolutionFamily& family, int member) {
  double mx = 0.0;
  for (int p = 0; p < family.sample_count(); ++p)
    mx = std::max(mx, family.zeta(p).row(member).norm());
  return mx;
}

double family_row_scale(const SolutionFamily& family) {
  double mx = 0.0;
  for (int i = 0; i < family.member_count(); ++i) mx = std::max(mx, max_row_norm(family, i));
  return mx;
}

// min over samples of the smallest singular value of the projected stack,
// evaluated without materializing the projected family
double projected_margin(const SolutionFamily& family, const Eigen::VectorXd& a,
                        int* argmin_point) {
  const int k = family.member_count();
  const int n = family.n();
  double mn = std::numeric_limits<double>::infinity();
  int arg = 0;
  Eigen::MatrixXd z(k - 1, n);
  for (int p = 0; p < family.sample_count(); ++p) {
    const Eigen::MatrixXd& full = family.zeta(p);
    z = full.topRows(k - 1) - a * full.row(k - 1);
    const Eigen::MatrixXd gram = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double lam = eig.eigenvalues().minCoeff();
    const double s = lam > 0.0 ? std::sqrt(lam) : 0.0;
    if (s < mn) {
      mn = s;
      arg = p;
    }
  }
  if (argmin_point) *argmin_point = arg;
  return mn;
}

}  // namespace

int target_count(int d, int n, double alpha) {
  if (d < 2) throw InvalidArgument("target_count: d must be >= 2");
  if (n < 1) throw InvalidArgument("target_count: n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidArgument("target_count: alpha must lie in (0,1)");
  return static_cast<int>(std::floor((d + n) / alpha + 1e-9));
}

WeightVector draw_weights(int k, double scale, CounterRng& rng) {
  if (k < 2) throw InvalidArgument("draw_weights: k must be >= 2");
  if (!(scale >= 0.0)) throw InvalidArgument("draw_weights: scale must be >= 0");
  WeightVector w;
  w.scale = scale;
  w.a.resize(k - 1);
  for (int i = 0; i < k - 1; ++i) w.a[i] = rng.uniform(-scale, scale);
  return w;
}

SolutionFamily project_family(const SolutionFamily& family, const WeightVector& weights) {
  const int k = family.member_count();
  if (k < 2) throw InvalidArgument("project_family: need at least two members");
  if (weights.a.size() != k - 1)
    throw InvalidArgument("project_family: weight vector must have length k-1");

  std::vector<SolutionField> members;
  members.reserve(k - 1);
  for (int i = 0; i < k - 1; ++i)
    members.push_back(field_axpy(family.members()[i], -weights.a[i], family.members()[k - 1]));

  std::vector<Eigen::MatrixXd> tables(family.sample_count());
  for (int p = 0; p < family.sample_count(); ++p) {
    const Eigen::MatrixXd& full = family.zeta(p);
    tables[p] = full.topRows(k - 1) - weights.a * full.row(k - 1);
  }
  return SolutionFamily::from_tables(family.region(), family.constraint(), std::move(members),
                                     family.regularity(), std::move(tables));
}

StepResult reduce_step(const SolutionFamily& family, double scale, int max_tries, double theta,
                       CounterRng& rng) {
  const int k = family.member_count();
  if (k <= family.n())
    throw InvalidArgument("reduce_step: member count must exceed n");
  if (max_tries < 1) throw InvalidArgument("reduce_step: max_tries must be >= 1");
  if (theta < 0.0) throw InvalidArgument("reduce_step: theta must be >= 0");

  const double row_scale = family_row_scale(family);
  const double floor = kRankFloorRel * std::max(row_scale, 1e-300);

  int arg = 0;
  const double margin = stacked_margin(family, &arg);
  if (margin <= floor)
    throw ReductionExhausted("reduce_step: input family is rank-deficient on the sample set",
                             family.region().points[arg], margin);

  double s = scale;
  double last_margin = 0.0;
  Vec2 last_point = family.region().points[arg];
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    const WeightVector w = draw_weights(k, s, rng);
    int wp = 0;
    const double m = projected_margin(family, w.a, &wp);
    if (m >= theta * margin && m > floor)
      return StepResult{project_family(family, w), w, attempt};
    last_margin = m;
    last_point = family.region().points[wp];
    s *= 0.5;
  }
  std::ostringstream os;
  os << "reduce_step: no acceptable weights after " << max_tries
     << " draws (target margin " << theta * margin << ", last " << last_margin << ")";
  throw ReductionExhausted(os.str(), last_point, last_margin);
}

std::pair<SolutionFamily, ReductionTrace> reduce_to_target(const SolutionFamily& family,
                                                           int target,
                                                           const ReductionParams& params,
                                                           std::uint64_t seed) {
  const int k0 = family.member_count();
  const int floor_count = target_count(kDim, family.n(), family.regularity().alpha);
  if (target > k0)
    throw InvalidArgument("reduce_to_target: target exceeds the member count");
  if (target < floor_count)
    throw InvalidArgument("reduce_to_target: target " + std::to_string(target) +
                          " below floor((d+n)/alpha) = " + std::to_string(floor_count));

  ReductionTrace trace;
  trace.seed = seed;
  trace.target = target;
  trace.initial_margin = stacked_margin(family, nullptr);
  trace.final_margin = trace.initial_margin;

  CounterRng rng(seed);
  SolutionFamily current = family;
  try {
    while (current.member_count() > target) {
      const int k = current.member_count();
      const double margin = stacked_margin(current, nullptr);
      const double row_norm = max_row_norm(current, k - 1);
      double scale = params.scale0_factor * margin / std::max(row_norm, 1e-300);
      scale = std::min(scale, params.scale_cap);
      StepResult step = reduce_step(current, scale, params.max_tries, params.theta, rng);
      trace.steps.push_back({k, step.weights, step.retries, 0.0});
      current = std::move(step.family);
      trace.steps.back().margin_after = stacked_margin(current, nullptr);
      trace.final_margin = trace.steps.back().margin_after;
    }
  } catch (ReductionExhausted& e) {
    e.partial_trace = trace;
    throw;
  }
  return {std::move(current), std::move(trace)};
}

PerturbResult perturb_toward_admissible(const SolutionFamily& h, const SolutionFamily& donors,
                                        double xi_scale, int max_tries, std::uint64_t seed) {
  if (!(xi_scale > 0.0))
    throw InvalidArgument("perturb_toward_admissible: xi_scale must be positive");
  if (h.constraint().kind != donors.constraint().kind ||
      h.region().mesh != donors.region().mesh ||
      h.sample_count() != donors.sample_count())
    throw InvalidArgument("perturb_toward_admissible: h and donors must share region and constraint");

  const int t_count = h.member_count();
  const int m_count = donors.member_count();
  const Mesh& mesh = *h.region().mesh;

  std::vector<SolutionField> stacked_members = h.members();
  stacked_members.insert(stacked_members.end(), donors.members().begin(), donors.members().end());
  SolutionFamily stacked(h.region(), h.constraint(), std::move(stacked_members), h.regularity());

  const double row_scale = family_row_scale(stacked);
  if (stacked_margin(stacked, nullptr) <= kRankFloorRel * std::max(row_scale, 1e-300))
    throw InvalidArgument(
        "perturb_toward_admissible: stacked family is rank-deficient on the sample set");

  // translate the relative weight budget into an absolute per-step scale cap
  double h_ref = std::numeric_limits<double>::infinity();
  double donor_ref = 0.0;
  for (const auto& f : h.members()) h_ref = std::min(h_ref, f.datum.boundary_norm(mesh));
  for (const auto& f : donors.members())
    donor_ref = std::max(donor_ref, f.datum.boundary_norm(mesh));
  if (!(donor_ref > 0.0)) donor_ref = 1.0;
  if (!(h_ref > 1e-12 * donor_ref)) h_ref = donor_ref;  // zero targets: absolute budget
  const double xi_cap = xi_scale * h_ref / donor_ref;

  ReductionParams params;
  params.theta = 0.0;
  params.max_tries = max_tries;
  params.scale_cap = xi_cap / (2.0 * m_count);

  auto [reduced, trace] = reduce_to_target(stacked, t_count, params, seed);

  // replay the weights to recover the members in terms of the originals
  Eigen::MatrixXd comb = Eigen::MatrixXd::Identity(t_count + m_count, t_count + m_count);
  for (const auto& step : trace.steps) {
    const int k = step.k_before;
    for (int i = 0; i < k - 1; ++i) comb.row(i) -= step.weights.a[i] * comb.row(k - 1);
  }

  PerturbResult out{std::move(reduced), Eigen::MatrixXd(), std::move(trace), 0.0, 0.0, 0.0};
  out.xi = -comb.block(0, t_count, t_count, m_count);
  out.max_abs_xi = out.xi.cwiseAbs().maxCoeff();
  for (int i = 0; i < t_count; ++i) {
    const double hn = std::max(h.members()[i].datum.boundary_norm(mesh), 1e-12 * donor_ref);
    for (int j = 0; j < m_count; ++j) {
      const double dn = donors.members()[j].datum.boundary_norm(mesh);
      out.max_rel_xi = std::max(out.max_rel_xi, std::abs(out.xi(i, j)) * dn / hn);
    }
  }
  out.final_margin = admissibility_margin(out.family).margin;
  return out;
}

Eigen::VectorXd bad_weight_at(const SolutionFamily& family, int point) {
  const int k = family.member_count();
  if (k < 2) throw InvalidArgument("bad_weight_at: need at least two members");
  const Eigen::MatrixXd& z = family.zeta(point);
  const Eigen::RowVectorXd last = z.row(k - 1);
  const double nrm2 = last.squaredNorm();
  if (!(nrm2 > 0.0))
    throw InvalidArgument("bad_weight_at: last member has a zero row at this point");
  const Eigen::VectorXd v = last.transpose() / nrm2;  // last * v = 1
  Eigen::VectorXd a(k - 1);
  for (int i = 0; i < k - 1; ++i) a[i] = z.row(i).dot(v);
  return a;
}

nlohmann::json ReductionTrace::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["target"] = target;
  j["initial_margin"] = initial_margin;
  j["final_margin"] = final_margin;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json js;
    js["k"] = s.k_before;
    js["a"] = std::vector<double>(s.weights.a.data(), s.weights.a.data() + s.weights.a.size());
    js["retries"] = s.retries_used;
    js["margin"] = s.margin_after;
    j["steps"].push_back(js);
  }
  return j;
}

}  // namespace nonvanish
