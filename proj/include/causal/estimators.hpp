#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/failure.hpp"
#include "causal/model_core.hpp"
#include "causal/propensity.hpp"
#include "causal/random.hpp"
#include "causal/resampling.hpp"

namespace causal {

enum class Estimand { RiskDifference, LogOddsRatio };

std::string_view to_string(Estimand e);
std::optional<Estimand> parse_estimand(std::string_view text);

// Fixed method registry. The string ids are stable output keys.
enum class Method {
  Crude,
  CovAdjusted,
  PsCovariate,
  Matched,
  Iptw,
  Gcomp,
  GcompSimpleDr,
  GcompDrQuintiles,
  Aipw,
  MatchUnadjusted,
  MatchConditional,
};

std::string_view method_id(Method m);
std::optional<Method> parse_method(std::string_view id);

// Nine methods per estimand, in output order.
std::span<const Method> registry(Estimand e);
bool in_registry(Estimand e, Method m);
bool needs_propensity(Method m);

struct EffectEstimate {
  Estimand estimand = Estimand::RiskDifference;
  Method method = Method::Crude;
  std::optional<double> point;
  std::optional<double> se;
  std::optional<Interval> ci;
  std::optional<FailureReason> failure_reason;

  bool failed() const noexcept { return failure_reason.has_value(); }

  static EffectEstimate failure(Estimand e, Method m, FailureReason reason);
  static EffectEstimate success(Estimand e, Method m, double point, std::optional<double> se,
                                Interval ci);
};

struct MatchedCounts {
  // Treated event, control non-event.
  std::size_t b_discordant = 0;
  // Control event, treated non-event.
  std::size_t c_discordant = 0;
  std::size_t n_pairs = 0;
};

MatchedCounts matched_counts(const Dataset& data, const MatchedSample& matched);

// Risk-difference family. Data-dependent failures come back as failed
// estimates, never as exceptions.
EffectEstimate crude_rd(const Dataset& data);
EffectEstimate covariate_adjusted_rd(const Dataset& data);
EffectEstimate ps_covariate_rd(const Dataset& data, const PropensityScores& ps);
EffectEstimate matched_rd(const Dataset& data, const MatchedSample& matched);
EffectEstimate iptw_rd(const Dataset& data, const IptwWeights& weights);

// Outcome (Q-) model used by g-computation.
//   Plain:        logit P(Y) ~ 1 + A + L
//   SimpleDr:     Plain + z, z = w if A = 1 and -w otherwise
//   DrQuintiles:  Plain + four logit-PS quintile dummies
enum class QSpec { Plain, SimpleDr, DrQuintiles };

struct CounterfactualMeans {
  double treated = 0.0;
  double control = 0.0;

  double risk_difference() const noexcept { return treated - control; }
  double log_odds_ratio() const noexcept;
  double contrast(Estimand e) const noexcept {
    return e == Estimand::RiskDifference ? risk_difference() : log_odds_ratio();
  }
};

// Mean predicted risk under the two counterfactual designs for a fitted
// logistic coefficient vector.
CounterfactualMeans predict_counterfactual_means(const Matrix& design_treated,
                                                 const Matrix& design_control,
                                                 const Vector& coefficients);

// Fits the Q-model and averages predictions with A set to 1 and to 0 for
// every subject (z re-evaluated under the counterfactual arm for
// SimpleDr). ps is required for the DR variants. Throws ModelError.
CounterfactualMeans gcomp_means(const Dataset& data, QSpec spec, const PropensityScores* ps);

// Point estimate plus percentile-bootstrap CI. Each bootstrap replicate
// refits the propensity model (DR variants) and the Q-model.
EffectEstimate gcomp_effect(const Dataset& data, QSpec spec, const PropensityScores* ps,
                            Estimand estimand, const BootstrapConfig& bootstrap,
                            const Stream& rng);

inline EffectEstimate gcomp_rd(const Dataset& data, QSpec spec, const PropensityScores* ps,
                               const BootstrapConfig& bootstrap, const Stream& rng) {
  return gcomp_effect(data, spec, ps, Estimand::RiskDifference, bootstrap, rng);
}

struct AipwComponents {
  // Per-subject influence contributions; their mean is the point estimate.
  Vector contributions;
  double point = 0.0;
  double se = 0.0;
};

// AIPW risk difference for given propensity and arm-specific outcome
// predictions m1(L), m0(L).
AipwComponents aipw_components(const Dataset& data, const Vector& propensity,
                               const Vector& treated_risk, const Vector& control_risk);

// Arm-specific logistic outcome models Y ~ 1 + L, one per arm.
EffectEstimate aipw_rd(const Dataset& data, const PropensityScores& ps);

inline constexpr double kExtremeOddsRatio = 3000.0;

// Odds-ratio family; estimand LogOddsRatio. Estimates whose OR is
// >= kExtremeOddsRatio fail with ExtremeOR.
EffectEstimate or_estimate(const Dataset& data, Method method, const PropensityScores* ps,
                           const MatchedSample* matched, const BootstrapConfig& bootstrap,
                           const Stream& rng);

// Runs every requested method once on one dataset: the propensity
// model is fitted once and shared, matching is done once. Always returns one
// estimate per requested method, in request order.
std::vector<EffectEstimate> estimate_methods(const Dataset& data, Estimand estimand,
                                             std::span<const Method> methods,
                                             const BootstrapConfig& bootstrap,
                                             const Stream& rng);

}  // namespace causal
