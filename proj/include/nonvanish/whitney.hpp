#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"

#include "nonvanish/constraints.hpp"
#include "nonvanish/rng.hpp"

namespace nonvanish {

// Largest integer N with N <= (d+n)/alpha.
int target_count(int d, int n, double alpha);

// Weights of the projection y -> (y_1 - a_1 y_k, ..., y_{k-1} - a_{k-1} y_k).
struct WeightVector {
  Eigen::VectorXd a;
  double scale = 0.0;
};

// Components i.i.d. uniform on [-scale, scale], reproducible from the rng.
WeightVector draw_weights(int k, double scale, CounterRng& rng);

struct ReductionStep {
  int k_before = 0;
  WeightVector weights;
  int retries_used = 0;
  double margin_after = 0.0;
};

struct ReductionTrace {
  std::uint64_t seed = 0;
  int target = 0;
  std::vector<ReductionStep> steps;
  double initial_margin = 0.0;
  double final_margin = 0.0;

  nlohmann::json to_json() const;
};

class ReductionExhausted : public Error {
 public:
  ReductionExhausted(const std::string& what, Vec2 worst_point, double margin)
      : Error(what), worst_point(worst_point), margin(margin) {}
  Vec2 worst_point;
  double margin;
  ReductionTrace partial_trace;  // filled by reduce_to_target before rethrow
};

struct ReductionParams {
  double theta = 0.25;        // per-step margin retention factor
  int max_tries = 50;         // weight draws per step before giving up
  double scale0_factor = 0.1; // initial scale = factor * margin / |zeta(u_k)| row norm
  double scale_cap = std::numeric_limits<double>::infinity();
};

// Family with boundary data g_i - a_i g_k for i < k; zeta tables and nodal
// values combine by linearity, no re-solve.
SolutionFamily project_family(const SolutionFamily& family, const WeightVector& weights);

struct StepResult {
  SolutionFamily family;
  WeightVector weights;
  int retries = 0;
};

// One elimination step: draw weights until the projected family keeps at
// least theta times the current min singular-value margin; the scale is
// halved after each failed draw.
StepResult reduce_step(const SolutionFamily& family, double scale, int max_tries, double theta,
                       CounterRng& rng);

// Eliminate members one at a time down to `target`, recording a full trace.
std::pair<SolutionFamily, ReductionTrace> reduce_to_target(const SolutionFamily& family,
                                                           int target,
                                                           const ReductionParams& params,
                                                           std::uint64_t seed);

struct PerturbResult {
  SolutionFamily family;       // h_i - xi_{i,j} u_j
  Eigen::MatrixXd xi;          // T x M weight matrix
  ReductionTrace trace;
  double max_abs_xi = 0.0;
  double max_rel_xi = 0.0;     // relative to boundary norms of h and donors
  double final_margin = 0.0;   // admissibility (sum of |det|) margin
};

// Stack h on top of the donors and reduce back to |h| members, eliminating
// donors last-to-first with small weights; theta is 0 here, any margin-
// preserving draw is accepted.
PerturbResult perturb_toward_admissible(const SolutionFamily& h, const SolutionFamily& donors,
                                        double xi_scale, int max_tries, std::uint64_t seed);

// A weight vector on the bad set at the given sample: (a, 1) lies in the
// range of the stacked matrix there, so the projection drops rank at that
// point. Requires a nonzero last row.
Eigen::VectorXd bad_weight_at(const SolutionFamily& family, int point);

}  // namespace nonvanish
