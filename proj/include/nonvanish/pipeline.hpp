#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nonvanish/config.hpp"
#include "nonvanish/constraints.hpp"
#include "nonvanish/runge.hpp"
#include "nonvanish/whitney.hpp"

namespace nonvanish {

// A stage failure wraps the underlying error with the stage name and the
// CLI exit code for its category.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what, int exit_code)
      : Error("[" + stage + "] " + what), stage(std::move(stage)), exit_code(exit_code) {}
  std::string stage;
  int exit_code;
};

// CLI exit code for an exception: 2 configuration, 4 I/O, 3 numerical.
int exit_code_for(const std::exception& e);

struct PipelineOptions {
  bool with_timings = true;
  bool write_outputs = true;
  bool stop_after_cover = false;  // skip reduction and verification
};

struct PipelineResult {
  ScenarioConfig config;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const AssembledSystem> system;
  std::shared_ptr<const BasisFields> basis;
  SampledRegion region;
  std::optional<Covering> covering;
  std::vector<int> enrichment_modes;  // basis elements appended when the covering is small
  int target = 0;
  std::optional<SolutionFamily> final_family;
  ReductionTrace trace;
  AdmissibilityReport final_report;
  nlohmann::json report;
};

// mesh -> coefficients -> assemble -> solve (basis fields) -> region ->
// cover -> reduce -> verify. Writes per-stage outputs under
// config.output_dir as each stage completes, so a failing stage leaves the
// earlier artifacts on disk.
PipelineResult run_pipeline(const ScenarioConfig& config, const PipelineOptions& options = {});

struct OpennessStats {
  int trials = 0;
  double delta_g = 0.0;
  double fraction_positive = 0.0;
  double min_margin = 0.0;
  double mean_margin = 0.0;
  std::vector<double> margins;

  nlohmann::json to_json() const;
};

// Perturb each final boundary datum by a random coefficient vector of
// l2 norm delta_g, re-solve by superposition, and report the margins.
OpennessStats openness_experiment(const PipelineResult& result, int trials, double delta_g);

struct DensityStats {
  int families = 0;
  double xi_scale = 0.0;
  int successes = 0;
  double success_fraction = 0.0;
  double mean_abs_xi = 0.0;
  double mean_rel_xi = 0.0;
  std::vector<nlohmann::json> failure_traces;

  nlohmann::json to_json() const;
};

// Draw random normalized boundary families and pull them into the
// admissible set with donor members from the covering; failures ship their
// full reduction trace.
DensityStats density_experiment(const PipelineResult& result, int families, double xi_scale);

// Per-member field CSVs for the selected members plus one VTK bundle and
// the per-point margin CSV; an empty selector writes the margin CSV only.
std::vector<std::string> dump_fields(const PipelineResult& result,
                                     const std::vector<int>& members);

}  // namespace nonvanish
