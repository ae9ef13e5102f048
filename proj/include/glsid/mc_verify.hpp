#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "glsid/fe_panel.hpp"
#include "glsid/model.hpp"

namespace glsid {

enum class Scenario {
  RegularGLS,
  SingularAddingUp,
  CollinearRestricted,
  FEPanelKronecker,
  FEPanelBlockDiagonal,
};

std::string_view to_string(Scenario scenario);
/// Accepts "regular-gls", "singular-adding-up", "collinear-restricted",
/// "fe-panel-kronecker", "fe-panel-block-diagonal".
Scenario parse_scenario(std::string_view name);

/// Zero entries select the scenario default.
struct SimulationDims {
  Index n = 0;
  Index m = 0;
  Index k = 0;
};

struct SimulationConfig {
  Scenario scenario = Scenario::RegularGLS;
  Index replications = 1000;
  std::uint64_t seed = 42;
  Vector true_beta;  // empty: scenario default
  double sigma2 = 1.0;
  SimulationDims dims;
  /// Added to every coefficient of the data-generating beta while the report
  /// still compares against `true_beta`. Negative control only.
  double injected_bias = 0.0;
  unsigned threads = 1;
};

/// Fills defaults and validates; throws InvalidConfig.
SimulationConfig resolve_config(SimulationConfig config);

/// Estimator used by run_study when the caller does not choose one.
EstimatorTag default_estimator(Scenario scenario);

struct SimulationInstance {
  std::optional<GaussMarkoffModel> model;  // non-panel scenarios
  std::optional<FEPanelModel> panel;       // panel scenarios
  LinearRestrictions restrictions;         // explicit restrictions (may be empty)
  Vector true_beta;
  Vector errors;                           // u, stacked like y
  Matrix null_directions;                  // A, T x (T - rank Omega)
};

/// Deterministic in (config.seed, replication). Designs are drawn once per
/// config from a dedicated stream; errors are sigma F Lambda^{1/2} z.
SimulationInstance generate_instance(const SimulationConfig& config, Index replication);

struct MCReport {
  Scenario scenario = Scenario::RegularGLS;
  EstimatorTag estimator_tag = EstimatorTag::GLS;
  Index replications = 0;
  std::uint64_t seed = 0;
  Vector true_beta;
  Vector mean_beta;
  Vector bias;
  Vector mc_standard_errors;       // sample sd / sqrt(replications)
  Matrix sample_covariance;
  Matrix covariance_standard_errors;  // jackknife
  Matrix theoretical_covariance;   // sigma^2 times the estimator's covariance factor
  double max_bias_ratio = 0.0;     // max_k |bias_k| / mc_se_k
  double max_covariance_ratio = 0.0;
  bool unbiased_pass = false;
  bool covariance_pass = false;

  bool pass() const { return unbiased_pass && covariance_pass; }
};

/// Full replication draws, kept for replication-wise comparisons.
struct StudyDraws {
  Matrix estimates;  // replications x K
  Matrix covariance_factor;
};

StudyDraws simulate_estimates(const SimulationConfig& config, EstimatorTag tag);

MCReport run_study(const SimulationConfig& config, std::optional<EstimatorTag> tag = std::nullopt);

/// Aggregates draws into a report (4-sigma checks).
MCReport summarize(const SimulationConfig& config, EstimatorTag tag, const StudyDraws& draws);

/// SplitMix64 finalizer; seeds the per-replication mt19937_64 streams.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace glsid
