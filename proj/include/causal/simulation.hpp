#pragma once

#include <functional>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/estimators.hpp"
#include "causal/random.hpp"
#include "causal/resampling.hpp"

namespace causal {

enum class ScenarioId { Covid = 1, Unmeasured = 2, Austin = 3 };

std::string_view to_string(ScenarioId id);
std::optional<ScenarioId> parse_scenario(std::string_view text);

// Data-generating parameters. Coefficient vectors hold the intercept
// followed by one entry per generated covariate column.
//
// covid:      x1 ~ Bern(.5); x2 = round(N(45, sd 15)); x3 ~ Bin(2, .5) coded
//             as dummies x3_1, x3_2; x4 = round(U[0, 10])
// unmeasured: covid plus x5 ~ N(0, 1), hidden from the estimators
// austin:     x1..x9 ~ Bern(prevalence)
struct ScenarioSpec {
  ScenarioId id = ScenarioId::Covid;
  Vector beta;
  Vector alpha;
  double beta_trt = 0.0;
  Index n_subjects = 0;
  std::vector<bool> analysis_mask;
  std::vector<std::string> column_names;
  std::vector<CovariateKind> kinds;
  double binary_prevalence = 0.5;

  static ScenarioSpec covid(Index n, double beta_trt, std::optional<double> beta0 = std::nullopt);
  static ScenarioSpec unmeasured(Index n, double beta_trt,
                                 std::optional<double> beta0 = std::nullopt);
  static ScenarioSpec austin(Index n, double beta_trt, std::optional<double> beta0 = std::nullopt);
  static ScenarioSpec make(ScenarioId id, Index n, double beta_trt,
                           std::optional<double> beta0 = std::nullopt);

  Index generated_columns() const noexcept { return beta.size() - 1; }
};

// Potential-outcome probabilities per subject, from the full generative
// model (hidden covariates included).
struct CounterfactualTruth {
  Vector treated_risk;
  Vector control_risk;
  Vector factual_risk;

  double marginal_rd() const { return treated_risk.mean() - control_risk.mean(); }
};

struct SimulatedStudy {
  Dataset data;
  CounterfactualTruth truth;
};

// Per subject, in order: covariate draws (scenario order above; a Bin(2,.5)
// is two Bernoulli draws, N(45,15) one Box-Muller normal), one uniform
// for treatment, one uniform for outcome.
SimulatedStudy generate_study(const ScenarioSpec& spec, Stream& rng);

SimulatedStudy generate_scenario1(Index n, double beta_trt, std::optional<double> beta0,
                                  Stream& rng);
SimulatedStudy generate_scenario2(Index n, double beta_trt, Stream& rng);
SimulatedStudy generate_scenario3(Index n, double beta_trt, std::optional<double> beta0,
                                  Stream& rng);

struct OracleSize {
  std::size_t datasets = 1000;
  Index size = 10000;
};

// Marginal effect from counterfactual probabilities under A = 1 and A = 0
// over datasets x size subjects; dataset m uses rng.substream(m).
// RD: mean(p1) - mean(p0). Log OR: logit(mean p1) - logit(mean p0).
double true_marginal_effect(const ScenarioSpec& spec, Estimand estimand, OracleSize size,
                            const Stream& rng);

inline double true_marginal_rd(const ScenarioSpec& spec, OracleSize size, const Stream& rng) {
  return true_marginal_effect(spec, Estimand::RiskDifference, size, rng);
}

class NotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationOptions {
  OracleSize oracle;
  double tolerance = 0.002;
  double lower = 0.0;
  double upper = 6.0;
};

struct CalibrationResult {
  double beta_trt = 0.0;
  // On the target's scale: RD, or marginal OR for the odds-ratio estimand.
  double achieved = 0.0;
  int evaluations = 0;
};

// Bisection on beta_trt with a fixed-seed oracle. Targets are RD values or
// marginal odds ratios; the tolerance applies to the RD, or to the log OR.
// Throws NotBracketed when the target is not reached on [lower, upper].
CalibrationResult calibrate_beta_trt(const ScenarioSpec& spec, Estimand estimand, double target,
                                     const Stream& rng, const CalibrationOptions& options = {});

struct ReplicateResult {
  std::size_t replicate_index = 0;
  std::vector<EffectEstimate> estimates;
  double true_effect = 0.0;
};

// Data stream: derive_substream(seed, scenario, index, Data);
// bootstrap stream: derive_substream(seed, scenario, index, Bootstrap).
ReplicateResult run_replicate(const ScenarioSpec& spec, std::span<const Method> methods,
                              Estimand estimand, const BootstrapConfig& bootstrap,
                              std::uint64_t master_seed, std::size_t replicate_index,
                              double true_effect);

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

// Replicates 0..count-1 on `workers` threads; output in index order and
// independent of the worker count.
std::vector<ReplicateResult> run_replicates(const ScenarioSpec& spec,
                                            std::span<const Method> methods, Estimand estimand,
                                            const BootstrapConfig& bootstrap,
                                            std::uint64_t master_seed, std::size_t count,
                                            unsigned workers, double true_effect,
                                            const ProgressCallback& progress = {});

struct MethodMetrics {
  Method method = Method::Crude;
  std::size_t n_replicates = 0;
  std::size_t n_failures = 0;
  // False when no replicate succeeded; the numeric fields are then NaN.
  bool available = false;
  double mean_bias = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double coverage = 0.0;
  double median_ci_length = 0.0;
};

struct MetricsSummary {
  std::vector<MethodMetrics> methods;

  const MethodMetrics* find(Method m) const;
};

MethodMetrics summarize_method(Method method, std::span<const EffectEstimate> estimates,
                               double true_effect);

// Methods reported in the order of the first replicate's estimates.
MetricsSummary summarize(std::span<const ReplicateResult> results, double true_effect);

}  // namespace causal
