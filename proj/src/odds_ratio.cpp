#include <cmath>
#include <stdexcept>

#include "causal/estimators.hpp"
#include "causal/failure.hpp"

namespace causal {

namespace {

constexpr Estimand kOR = Estimand::LogOddsRatio;

Matrix column(const Vector& v) { return Matrix(v); }

bool extreme(double log_or) { return !std::isfinite(log_or) || std::exp(log_or) >= kExtremeOddsRatio; }

EffectEstimate from_logistic(Method method, const DesignMatrix& X, const Vector& y,
                             const std::optional<Vector>& weights) {
  const LogisticFit fit = fit_logistic(X, y, weights);
  const double point = fit.coefficients[1];
  if (extreme(point)) return EffectEstimate::failure(kOR, method, FailureReason::ExtremeOR);
  const double var = fit.covariance(1, 1);
  if (!(var > 0.0) || !std::isfinite(var)) {
    return EffectEstimate::failure(kOR, method, FailureReason::DegenerateVariance);
  }
  const double se = std::sqrt(var);
  return EffectEstimate::success(kOR, method, point, se, wald_ci(point, se));
}

EffectEstimate match_conditional(const Dataset& data, const MatchedSample& matched) {
  const MatchedCounts k = matched_counts(data, matched);
  if (k.b_discordant == 0 || k.c_discordant == 0) {
    return EffectEstimate::failure(kOR, Method::MatchConditional, FailureReason::DegenerateVariance);
  }
  const auto b = static_cast<double>(k.b_discordant);
  const auto c = static_cast<double>(k.c_discordant);
  const double point = std::log(b / c);
  if (extreme(point)) return EffectEstimate::failure(kOR, Method::MatchConditional, FailureReason::ExtremeOR);
  const double se = std::sqrt(1.0 / b + 1.0 / c);
  return EffectEstimate::success(kOR, Method::MatchConditional, point, se, wald_ci(point, se));
}

Dataset matched_subjects(const Dataset& data, const MatchedSample& matched) {
  std::vector<Index> rows;
  rows.reserve(2 * matched.n_pairs());
  for (const auto& [t, c] : matched.pairs) {
    rows.push_back(t);
    rows.push_back(c);
  }
  return data.rows(rows);
}

}  // namespace

EffectEstimate or_estimate(const Dataset& data, Method method, const PropensityScores* ps,
                           const MatchedSample* matched, const BootstrapConfig& bootstrap,
                           const Stream& rng) {
  if (!in_registry(kOR, method)) {
    throw std::invalid_argument("method is not part of the odds-ratio family");
  }
  const bool is_matched = method == Method::MatchUnadjusted || method == Method::MatchConditional;
  // matched methods only need the pairs
  if (needs_propensity(method) && !is_matched && ps == nullptr) {
    throw std::invalid_argument("odds-ratio method needs propensity scores");
  }
  if (is_matched && matched == nullptr) {
    throw std::invalid_argument("odds-ratio method needs a matched sample");
  }

  try {
    const Matrix a = column(data.treatment());
    switch (method) {
      case Method::Crude:
        return from_logistic(method, DesignMatrix::with_intercept(a), data.outcome(), std::nullopt);
      case Method::CovAdjusted:
        return from_logistic(method, DesignMatrix::with_intercept(hstack({a, data.covariates()})),
                             data.outcome(), std::nullopt);
      case Method::PsCovariate:
        return from_logistic(method,
                             DesignMatrix::with_intercept(hstack({a, column(ps->probabilities)})),
                             data.outcome(), std::nullopt);
      case Method::Iptw:
        return from_logistic(method, DesignMatrix::with_intercept(a), data.outcome(),
                             iptw_weights(*ps, data.treatment()).weights);
      case Method::Gcomp:
        return gcomp_effect(data, QSpec::Plain, nullptr, kOR, bootstrap, rng);
      case Method::GcompSimpleDr:
        return gcomp_effect(data, QSpec::SimpleDr, ps, kOR, bootstrap, rng);
      case Method::GcompDrQuintiles:
        return gcomp_effect(data, QSpec::DrQuintiles, ps, kOR, bootstrap, rng);
      case Method::MatchUnadjusted: {
        const Dataset sub = matched_subjects(data, *matched);
        return from_logistic(method, DesignMatrix::with_intercept(column(sub.treatment())),
                             sub.outcome(), std::nullopt);
      }
      case Method::MatchConditional:
        return match_conditional(data, *matched);
      default:
        break;
    }
  } catch (const ModelError& e) {
    return EffectEstimate::failure(kOR, method, e.reason());
  }
  throw std::logic_error("unreachable odds-ratio method");
}

}  // namespace causal
