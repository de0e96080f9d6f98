#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "nonvanish/constraints.hpp"
#include "nonvanish/elliptic.hpp"
#include "nonvanish/geometry.hpp"
#include "nonvanish/runge.hpp"
#include "nonvanish/whitney.hpp"

namespace nonvanish {

// A scenario parsed from the flat key-value config format (see the README
// for the grammar). Unknown keys are rejected; omitted keys take the
// documented defaults.
struct ScenarioConfig {
  DomainKind domain = DomainKind::kDisk;
  double h = 0.1;
  ConstraintKind constraint = ConstraintKind::kJacobian;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  // coefficients: either a preset name or expression strings
  std::string preset;  // empty when expressions are used
  std::string a11, a12, a22, b1, b2, c1, c2, q;
  double lambda = 1.0;
  bool lambda_set = false;

  RegularityClass regularity;
  bool ell_set = false;
  bool alpha_set = false;

  RegionDescriptor region;
  bool region_set = false;

  RungeParams runge;
  bool runge_r_set = false;

  ReductionParams reduction;

  bool operator==(const ScenarioConfig& other) const;

  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j);
};

// Parse and validate; both throw ConfigError on malformed input.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Materialize the coefficient field described by the config.
CoefficientField make_coefficients(const ScenarioConfig& config);

// True when the constraint needs more coefficient regularity than declared
// (gradient constraints with ell = 0); callers emit the warning.
bool regularity_incompatible(const ScenarioConfig& config);

}  // namespace nonvanish
