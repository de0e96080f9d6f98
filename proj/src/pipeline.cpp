#include "nonvanish/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "nonvanish/io.hpp"

namespace nonvanish {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what(), exit_code_for(e));
  }
}

// Basis elements appended when the covering has fewer members than the
// target family size. Gradient constraints skip the constant and the
// degree-1 modes (those are the coverings' canonical targets); the nodal
// constraint starts from the constant.
std::vector<int> enrichment_order(const BasisFields& basis, ConstraintKind kind) {
  std::vector<int> order;
  const int first = [&] {
    if (basis.kind == BasisKind::kNodal) return 0;
    switch (kind) {
      case ConstraintKind::kNodal: return 0;
      case ConstraintKind::kJacobian: return 3;   // skip 1, cos, sin
      case ConstraintKind::kAugmented: return 3;  // constant already a target
    }
    return 0;
  }();
  for (int e = first; e < basis.size(); ++e) order.push_back(e);
  return order;
}

Eigen::VectorXd random_unit_coeffs(int size, CounterRng& rng) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = rng.normal();
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Unit(size, 0);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PipelineError*>(&e)) return dynamic_cast<const PipelineError&>(e).exit_code;
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  return 3;
}

PipelineResult run_pipeline(const ScenarioConfig& config, const PipelineOptions& options) {
  PipelineResult result;
  result.config = config;
  nlohmann::json timings;
  const std::string out = config.output_dir;
  if (options.write_outputs) stage("io", [&] { ensure_directory(out); return 0; });

  if (regularity_incompatible(config))
    std::cerr << "warning: gradient constraint '" << to_string(config.constraint)
              << "' with ell = 0 coefficients; zeta rows are not Holder-controlled up to K\n";

  auto t0 = Clock::now();
  result.mesh = stage("mesh", [&] { return build_mesh(config.domain, config.h); });
  if (options.write_outputs) {
    stage("io", [&] {
      write_mesh_text(*result.mesh, out + "/mesh.txt");
      write_mesh_vtk(*result.mesh, out + "/mesh.vtk");
      return 0;
    });
  }
  timings["mesh_ms"] = ms_since(t0);

  t0 = Clock::now();
  const CoefficientField coeffs = stage("coefficients", [&] { return make_coefficients(config); });
  stage("ellipticity", [&]() -> int {
    const EllipticityReport rep = check_ellipticity(coeffs, *result.mesh);
    if (!rep.pass)
      throw InvalidArgument("ellipticity check failed: min eigenvalue " +
                            std::to_string(rep.min_eigenvalue) + " < lambda = " +
                            std::to_string(rep.lambda_claim) + " at (" +
                            std::to_string(rep.worst_point.x()) + ", " +
                            std::to_string(rep.worst_point.y()) + ")");
    return 0;
  });
  timings["coefficients_ms"] = ms_since(t0);

  t0 = Clock::now();
  result.system = stage("assemble", [&] {
    return std::make_shared<const AssembledSystem>(result.mesh, coeffs);
  });
  timings["assemble_ms"] = ms_since(t0);

  t0 = Clock::now();
  result.basis = stage("solve", [&] {
    return std::make_shared<const BasisFields>(build_basis_fields(*result.system, config.runge.m));
  });
  timings["solve_ms"] = ms_since(t0);

  t0 = Clock::now();
  result.region = stage("region", [&] { return sample_region(result.mesh, config.region); });
  timings["region_ms"] = ms_since(t0);

  const ConstraintMap constraint = ConstraintMap::make(config.constraint);
  result.target = target_count(kDim, constraint.n, config.regularity.alpha);

  t0 = Clock::now();
  result.covering = stage("cover", [&] {
    return build_covering(*result.system, *result.basis, result.region, constraint, config.runge);
  });
  if (options.write_outputs) {
    stage("io", [&] {
      Eigen::VectorXd margins(result.region.size());
      for (int p = 0; p < result.region.size(); ++p)
        margins[p] = candidate_margin(result.covering->family, p);
      write_margin_csv(out + "/candidate_margins.csv", result.region.points, margins);
      write_text_file(out + "/covering.json",
                      result.covering->to_json("candidate_margins.csv").dump(2) + "\n");
      return 0;
    });
  }
  timings["cover_ms"] = ms_since(t0);

  if (options.stop_after_cover) {
    result.report["scenario"] = config.to_json();
    result.report["target_count"] = result.target;
    result.report["covering"] = result.covering->to_json("candidate_margins.csv");
    if (options.with_timings) result.report["timings"] = timings;
    if (options.write_outputs)
      stage("io", [&] {
        write_text_file(out + "/report.json", result.report.dump(2) + "\n");
        return 0;
      });
    return result;
  }

  // enrich with extra basis solutions when the covering is smaller than the
  // target family size
  t0 = Clock::now();
  SolutionFamily working = result.covering->family;
  if (working.member_count() < result.target) {
    stage("enrich", [&]() -> int {
      std::vector<SolutionField> members = working.members();
      const std::vector<int> order = enrichment_order(*result.basis, config.constraint);
      for (int e : order) {
        if (static_cast<int>(members.size()) >= result.target) break;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(result.basis->size());
        c[e] = 1.0;
        members.push_back(result.basis->combine(c));
        result.enrichment_modes.push_back(e);
      }
      if (static_cast<int>(members.size()) < result.target)
        throw InvalidArgument("cannot reach the target family size with the available basis");
      working = SolutionFamily(result.region, constraint, std::move(members),
                               coeffs.regularity);
      return 0;
    });
  }
  timings["enrich_ms"] = ms_since(t0);

  t0 = Clock::now();
  auto reduced = stage("reduce", [&] {
    return reduce_to_target(working, result.target, config.reduction, config.seed);
  });
  result.final_family = std::move(reduced.first);
  result.trace = std::move(reduced.second);
  if (options.write_outputs)
    stage("io", [&] {
      write_text_file(out + "/trace.json", result.trace.to_json().dump(2) + "\n");
      return 0;
    });
  timings["reduce_ms"] = ms_since(t0);

  t0 = Clock::now();
  result.final_report = stage("verify", [&] {
    AdmissibilityReport rep = admissibility_margin(*result.final_family);
    if (!(rep.margin > 0.0))
      throw InvalidArgument("final family is not admissible: margin " +
                            std::to_string(rep.margin));
    return rep;
  });
  timings["verify_ms"] = ms_since(t0);

  result.report["scenario"] = config.to_json();
  result.report["target_count"] = result.target;
  result.report["covering"] = result.covering->to_json("candidate_margins.csv");
  result.report["enrichment_modes"] = result.enrichment_modes;
  result.report["reduction"] = result.trace.to_json();
  result.report["final"] = result.final_report.to_json("final_margins.csv");
  if (options.with_timings) result.report["timings"] = timings;

  if (options.write_outputs) {
    stage("io", [&] {
      write_margin_csv(out + "/final_margins.csv", result.region.points,
                       result.final_report.per_point_margins);
      write_text_file(out + "/report.json", result.report.dump(2) + "\n");
      return 0;
    });
  }
  return result;
}

OpennessStats openness_experiment(const PipelineResult& result, int trials, double delta_g) {
  if (trials < 1) throw InvalidArgument("openness_experiment: trials must be >= 1");
  if (delta_g < 0.0) throw InvalidArgument("openness_experiment: delta_g must be >= 0");
  const SolutionFamily& family = result.final_family.value();
  const BasisFields& basis = *result.basis;
  const ConstraintMap& constraint = family.constraint();

  CounterRng rng(result.config.seed ^ 0x6f70656e6e657373ull);
  OpennessStats stats;
  stats.trials = trials;
  stats.delta_g = delta_g;
  stats.margins.reserve(trials);

  int positive = 0;
  double mn = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<SolutionField> perturbed;
    perturbed.reserve(family.member_count());
    for (const SolutionField& member : family.members()) {
      const Eigen::VectorXd p = delta_g * random_unit_coeffs(basis.size(), rng);
      perturbed.push_back(basis.combine(member.datum.coefficients + p));
    }
    SolutionFamily pf(family.region(), constraint, std::move(perturbed), family.regularity());
    const double margin = admissibility_margin(pf).margin;
    stats.margins.push_back(margin);
    if (margin > 0.0) ++positive;
    mn = std::min(mn, margin);
    sum += margin;
  }
  stats.fraction_positive = static_cast<double>(positive) / trials;
  stats.min_margin = mn;
  stats.mean_margin = sum / trials;
  return stats;
}

DensityStats density_experiment(const PipelineResult& result, int families, double xi_scale) {
  if (families < 1) throw InvalidArgument("density_experiment: families must be >= 1");
  const SolutionFamily& donors = result.covering->family;
  const BasisFields& basis = *result.basis;
  const ConstraintMap constraint = donors.constraint();
  const Mesh& mesh = *result.mesh;

  CounterRng rng(result.config.seed ^ 0x64656e73697479ull);
  DensityStats stats;
  stats.families = families;
  stats.xi_scale = xi_scale;

  double abs_sum = 0.0, rel_sum = 0.0;
  int measured = 0;
  for (int trial = 0; trial < families; ++trial) {
    std::vector<SolutionField> h_members;
    h_members.reserve(result.target);
    for (int i = 0; i < result.target; ++i) {
      Eigen::VectorXd c = random_unit_coeffs(basis.size(), rng);
      SolutionField f = basis.combine(c);
      const double bn = f.datum.boundary_norm(mesh);
      if (bn > 0.0) f = basis.combine(Eigen::VectorXd(c / bn));
      h_members.push_back(std::move(f));
    }
    SolutionFamily h(donors.region(), constraint, std::move(h_members), donors.regularity());

    const std::uint64_t trial_seed = rng.next_u64();
    try {
      PerturbResult pr = perturb_toward_admissible(h, donors, xi_scale,
                                                   result.config.reduction.max_tries, trial_seed);
      const bool ok = pr.final_margin > 0.0 && pr.max_rel_xi <= xi_scale + 1e-12;
      if (ok) {
        ++stats.successes;
        abs_sum += pr.max_abs_xi;
        rel_sum += pr.max_rel_xi;
        ++measured;
      } else {
        nlohmann::json f;
        f["trial"] = trial;
        f["reason"] = pr.final_margin > 0.0 ? "weights above budget" : "margin not positive";
        f["max_rel_xi"] = pr.max_rel_xi;
        f["trace"] = pr.trace.to_json();
        stats.failure_traces.push_back(std::move(f));
      }
    } catch (const ReductionExhausted& e) {
      nlohmann::json f;
      f["trial"] = trial;
      f["reason"] = e.what();
      f["trace"] = e.partial_trace.to_json();
      stats.failure_traces.push_back(std::move(f));
    }
  }
  stats.success_fraction = static_cast<double>(stats.successes) / families;
  stats.mean_abs_xi = measured > 0 ? abs_sum / measured : 0.0;
  stats.mean_rel_xi = measured > 0 ? rel_sum / measured : 0.0;
  return stats;
}

std::vector<std::string> dump_fields(const PipelineResult& result,
                                     const std::vector<int>& members) {
  const SolutionFamily& family = result.final_family.value();
  const std::string out = result.config.output_dir;
  ensure_directory(out);
  std::vector<std::string> written;

  std::map<std::string, Eigen::VectorXd> point_data;
  for (int i : members) {
    if (i < 0 || i >= family.member_count())
      throw InvalidArgument("dump_fields: member index " + std::to_string(i) + " out of range");
    const SolutionField& f = family.members()[i];
    const std::string path = out + "/member_" + std::to_string(i) + ".csv";
    write_field_csv(path, family.region().points, evaluate(f, family.region()));
    written.push_back(path);
    point_data["u_" + std::to_string(i)] = f.nodal_values;
  }
  if (!members.empty()) {
    const std::string vtk = out + "/fields.vtk";
    write_mesh_vtk(*result.mesh, vtk, point_data);
    written.push_back(vtk);
  }
  const std::string margins = out + "/final_margins.csv";
  write_margin_csv(margins, family.region().points, result.final_report.per_point_margins);
  written.push_back(margins);
  return written;
}

nlohmann::json OpennessStats::to_json() const {
  nlohmann::json j;
  j["trials"] = trials;
  j["delta_g"] = delta_g;
  j["fraction_positive"] = fraction_positive;
  j["min_margin"] = min_margin;
  j["mean_margin"] = mean_margin;
  j["margins"] = margins;
  return j;
}

nlohmann::json DensityStats::to_json() const {
  nlohmann::json j;
  j["families"] = families;
  j["xi_scale"] = xi_scale;
  j["successes"] = successes;
  j["success_fraction"] = success_fraction;
  j["mean_abs_xi"] = mean_abs_xi;
  j["mean_rel_xi"] = mean_rel_xi;
  j["failures"] = failure_traces;
  return j;
}

}  // namespace nonvanish
