#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nonvanish/io.hpp"
#include "nonvanish/pipeline.hpp"

namespace {

using namespace nonvanish;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool no_timings = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario config file")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out, "override the output directory");
  cmd->add_flag("--no-timings", args.no_timings, "omit wall-clock timings from reports");
}

ScenarioConfig load(const CommonArgs& args) {
  ScenarioConfig config = load_config(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.out) config.output_dir = *args.out;
  return config;
}

PipelineOptions options_for(const CommonArgs& args) {
  PipelineOptions opt;
  opt.with_timings = !args.no_timings;
  return opt;
}

void write_report(const PipelineResult& result) {
  write_text_file(result.config.output_dir + "/report.json", result.report.dump(2) + "\n");
}

// solve the canonical local-family data at the region center and dump them
int cmd_solve(const CommonArgs& args) {
  const ScenarioConfig config = load(args);
  ensure_directory(config.output_dir);
  auto mesh = build_mesh(config.domain, config.h);
  write_mesh_text(*mesh, config.output_dir + "/mesh.txt");
  const CoefficientField coeffs = make_coefficients(config);
  const EllipticityReport ellip = check_ellipticity(coeffs, *mesh);
  if (!ellip.pass) {
    std::cerr << "error [ellipticity]: min eigenvalue " << ellip.min_eigenvalue
              << " below lambda = " << ellip.lambda_claim << "\n";
    return 3;
  }
  const AssembledSystem system(mesh, coeffs);
  const BasisFields basis = build_basis_fields(system, config.runge.m);
  const SampledRegion region = sample_region(mesh, config.region);
  const ConstraintMap constraint = ConstraintMap::make(config.constraint);

  const Vec2 center = config.region.kind == RegionDescriptor::Kind::kDisk
                          ? config.region.center
                          : region.points[0];
  const LocalFamily locals = local_family(constraint, center, config.runge.r);

  nlohmann::json report;
  report["scenario"] = config.to_json();
  report["ellipticity"] = {{"pass", true}, {"min_eigenvalue", ellip.min_eigenvalue}};
  report["condition_estimate"] = system.condition_estimate();
  report["fields"] = nlohmann::json::array();
  std::map<std::string, Eigen::VectorXd> point_data;
  for (std::size_t i = 0; i < locals.targets.size(); ++i) {
    const RungeResult rr = runge_approximate(system, basis, locals.targets[i], center,
                                             config.runge.r, config.runge.delta_rel,
                                             config.runge.tolerance);
    const SolutionField f = system.solve(rr.datum);
    const std::string csv = config.output_dir + "/member_" + std::to_string(i) + ".csv";
    write_field_csv(csv, region.points, evaluate(f, region));
    point_data["u_" + std::to_string(i)] = f.nodal_values;
    report["fields"].push_back(rr.to_json());
  }
  write_mesh_vtk(*mesh, config.output_dir + "/fields.vtk", point_data);
  write_text_file(config.output_dir + "/solve.json", report.dump(2) + "\n");
  std::cout << "solved " << locals.targets.size() << " canonical data on "
            << to_string(config.domain) << " (condition estimate "
            << system.condition_estimate() << ")\n";
  return 0;
}

int cmd_cover(const CommonArgs& args) {
  PipelineOptions opt = options_for(args);
  opt.stop_after_cover = true;
  const PipelineResult result = run_pipeline(load(args), opt);
  std::cout << "covering: " << result.covering->groups.size() << " groups, "
            << result.covering->family.member_count() << " members, min stacked sv "
            << result.covering->min_stacked_singular_value << "\n";
  return 0;
}

int cmd_reduce(const CommonArgs& args) {
  const PipelineResult result = run_pipeline(load(args), options_for(args));
  std::cout << "reduction: " << result.trace.steps.size() << " steps, final margin "
            << result.trace.final_margin << " (trace in " << result.config.output_dir
            << "/trace.json)\n";
  return 0;
}

int cmd_pipeline(const CommonArgs& args) {
  const PipelineResult result = run_pipeline(load(args), options_for(args));
  std::cout << "pipeline: " << result.target << " boundary data, final margin "
            << result.final_report.margin << " (report in " << result.config.output_dir
            << "/report.json)\n";
  return 0;
}

int cmd_openness(const CommonArgs& args, int trials, double delta_g) {
  PipelineResult result = run_pipeline(load(args), options_for(args));
  const OpennessStats stats = openness_experiment(result, trials, delta_g);
  result.report["openness"] = stats.to_json();
  write_report(result);
  std::cout << "openness: " << stats.fraction_positive * 100.0 << "% of " << trials
            << " perturbed families keep a positive margin (min " << stats.min_margin << ")\n";
  return 0;
}

int cmd_density(const CommonArgs& args, int families, double xi_scale) {
  PipelineResult result = run_pipeline(load(args), options_for(args));
  const DensityStats stats = density_experiment(result, families, xi_scale);
  result.report["density"] = stats.to_json();
  write_report(result);
  std::cout << "density: " << stats.successes << "/" << families
            << " random families made admissible (mean relative weight " << stats.mean_rel_xi
            << ")\n";
  return 0;
}

int cmd_dump(const CommonArgs& args, const std::string& which) {
  const PipelineResult result = run_pipeline(load(args), options_for(args));
  std::vector<int> members;
  if (which == "all") {
    for (int i = 0; i < result.final_family->member_count(); ++i) members.push_back(i);
  } else if (!which.empty() && which != "none") {
    std::istringstream is(which);
    std::string tok;
    while (std::getline(is, tok, ','))
      if (!tok.empty()) members.push_back(std::stoi(tok));
  }
  const std::vector<std::string> files = dump_fields(result, members);
  for (const std::string& f : files) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary-condition design for non-vanishing constraints on elliptic PDE solutions"};
  app.require_subcommand(1);

  CommonArgs args;
  int trials = 100;
  int families = 20;
  double delta_g = 1e-3;
  double xi_scale = 0.05;
  std::string which = "all";

  CLI::App* solve = app.add_subcommand("solve", "solve the canonical local data and dump fields");
  add_common(solve, args);
  CLI::App* cover = app.add_subcommand("cover", "build the covering family");
  add_common(cover, args);
  CLI::App* reduce = app.add_subcommand("reduce", "cover and reduce to the target family size");
  add_common(reduce, args);
  CLI::App* pipeline = app.add_subcommand("pipeline", "full run: mesh, cover, reduce, verify");
  add_common(pipeline, args);
  CLI::App* openness = app.add_subcommand("openness", "margin persistence under perturbations");
  add_common(openness, args);
  openness->add_option("--trials", trials, "number of perturbation trials");
  openness->add_option("--delta-g", delta_g, "perturbation coefficient norm");
  CLI::App* density = app.add_subcommand("density", "pull random families into the admissible set");
  add_common(density, args);
  density->add_option("--trials", families, "number of random families");
  density->add_option("--xi-scale", xi_scale, "relative weight budget");
  CLI::App* dump = app.add_subcommand("dump", "write member fields and margins");
  add_common(dump, args);
  dump->add_option("--members", which, "comma-separated member indices, 'all', or 'none'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (cover->parsed()) return cmd_cover(args);
    if (reduce->parsed()) return cmd_reduce(args);
    if (pipeline->parsed()) return cmd_pipeline(args);
    if (openness->parsed()) return cmd_openness(args, trials, delta_g);
    if (density->parsed()) return cmd_density(args, families, xi_scale);
    if (dump->parsed()) return cmd_dump(args, which);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nonvanish::exit_code_for(e);
  }
  return 0;
}
