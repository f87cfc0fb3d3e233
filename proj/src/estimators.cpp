#include "causal/estimators.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "causal/failure.hpp"

namespace causal {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 11> kMethodIds{{
    {Method::Crude, "crude"},
    {Method::CovAdjusted, "cov_adjusted"},
    {Method::PsCovariate, "ps_covariate"},
    {Method::Matched, "matched"},
    {Method::Iptw, "iptw"},
    {Method::Gcomp, "gcomp"},
    {Method::GcompSimpleDr, "gcomp_simple_dr"},
    {Method::GcompDrQuintiles, "gcomp_dr_quintiles"},
    {Method::Aipw, "aipw"},
    {Method::MatchUnadjusted, "match_unadjusted"},
    {Method::MatchConditional, "match_conditional"},
}};

constexpr std::array kRdMethods{
    Method::Crude,         Method::CovAdjusted,      Method::PsCovariate,
    Method::Matched,       Method::Iptw,             Method::Gcomp,
    Method::GcompSimpleDr, Method::GcompDrQuintiles, Method::Aipw,
};

constexpr std::array kOrMethods{
    Method::Crude,         Method::CovAdjusted,      Method::PsCovariate,
    Method::Iptw,          Method::Gcomp,            Method::GcompSimpleDr,
    Method::GcompDrQuintiles, Method::MatchUnadjusted, Method::MatchConditional,
};

constexpr Estimand kRD = Estimand::RiskDifference;

Matrix column(const Vector& v) { return Matrix(v); }

// OLS of Y on the given design, treatment coefficient in column 1, HC3 CI.
EffectEstimate ols_treatment_effect(const Dataset& data, Method method, const Matrix& regressors) {
  try {
    const DesignMatrix X = DesignMatrix::with_intercept(regressors);
    const LinearFit fit = fit_ols(X, data.outcome());
    const Matrix cov = hc3_covariance(fit, X);
    const double point = fit.coefficients[1];
    const double se = std::sqrt(std::max(cov(1, 1), 0.0));
    return EffectEstimate::success(kRD, method, point, se, wald_ci(point, se));
  } catch (const ModelError& e) {
    return EffectEstimate::failure(kRD, method, e.reason());
  }
}

// Separation-flagged fits are kept (fitted risks pushed to 0 or 1), as
// standard GLM software does; rank deficiency and non-convergence fail.
LogisticFit fit_outcome_model(const DesignMatrix& X, const Vector& y) {
  return fit_logistic(X, y, std::nullopt, false);
}

Method gcomp_method(QSpec spec) {
  switch (spec) {
    case QSpec::Plain:
      return Method::Gcomp;
    case QSpec::SimpleDr:
      return Method::GcompSimpleDr;
    case QSpec::DrQuintiles:
      return Method::GcompDrQuintiles;
  }
  return Method::Gcomp;
}

std::vector<Index> arm_rows(const Dataset& data, double arm) {
  std::vector<Index> rows;
  for (Index i = 0; i < data.size(); ++i) {
    if (data.treatment()[i] == arm) rows.push_back(i);
  }
  return rows;
}

}  // namespace

std::string_view to_string(Estimand e) {
  return e == Estimand::RiskDifference ? "rd" : "or";
}

std::optional<Estimand> parse_estimand(std::string_view text) {
  if (text == "rd") return Estimand::RiskDifference;
  if (text == "or") return Estimand::LogOddsRatio;
  return std::nullopt;
}

std::string_view method_id(Method m) {
  for (const auto& [method, id] : kMethodIds) {
    if (method == m) return id;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view id) {
  for (const auto& [method, name] : kMethodIds) {
    if (name == id) return method;
  }
  return std::nullopt;
}

std::span<const Method> registry(Estimand e) {
  if (e == Estimand::RiskDifference) return kRdMethods;
  return kOrMethods;
}

bool in_registry(Estimand e, Method m) {
  for (const Method r : registry(e)) {
    if (r == m) return true;
  }
  return false;
}

bool needs_propensity(Method m) {
  switch (m) {
    case Method::Crude:
    case Method::CovAdjusted:
    case Method::Gcomp:
      return false;
    default:
      return true;
  }
}

EffectEstimate EffectEstimate::failure(Estimand e, Method m, FailureReason reason) {
  EffectEstimate est;
  est.estimand = e;
  est.method = m;
  est.failure_reason = reason;
  return est;
}

EffectEstimate EffectEstimate::success(Estimand e, Method m, double point,
                                       std::optional<double> se, Interval ci) {
  EffectEstimate est;
  est.estimand = e;
  est.method = m;
  est.point = point;
  est.se = se;
  est.ci = ci;
  return est;
}

double CounterfactualMeans::log_odds_ratio() const noexcept {
  return std::log(treated / (1.0 - treated)) - std::log(control / (1.0 - control));
}

MatchedCounts matched_counts(const Dataset& data, const MatchedSample& matched) {
  MatchedCounts counts;
  counts.n_pairs = matched.n_pairs();
  for (const auto& [t, c] : matched.pairs) {
    const double yt = data.outcome()[t];
    const double yc = data.outcome()[c];
    if (yt == 1.0 && yc == 0.0) ++counts.b_discordant;
    if (yt == 0.0 && yc == 1.0) ++counts.c_discordant;
  }
  return counts;
}

EffectEstimate crude_rd(const Dataset& data) {
  return ols_treatment_effect(data, Method::Crude, column(data.treatment()));
}

EffectEstimate covariate_adjusted_rd(const Dataset& data) {
  return ols_treatment_effect(data, Method::CovAdjusted,
                              hstack({column(data.treatment()), data.covariates()}));
}

EffectEstimate ps_covariate_rd(const Dataset& data, const PropensityScores& ps) {
  return ols_treatment_effect(data, Method::PsCovariate,
                              hstack({column(data.treatment()), column(ps.probabilities)}));
}

EffectEstimate matched_rd(const Dataset& data, const MatchedSample& matched) {
  if (matched.n_pairs() == 0) return EffectEstimate::failure(kRD, Method::Matched, FailureReason::NoPairs);
  const MatchedCounts k = matched_counts(data, matched);
  const auto n = static_cast<double>(k.n_pairs);
  const auto b = static_cast<double>(k.b_discordant);
  const auto c = static_cast<double>(k.c_discordant);
  const double point = (b - c) / n;
  const double variance = (b + c) / (n * n) - (b - c) * (b - c) / (n * n * n);
  if (!(variance > 0.0)) {
    return EffectEstimate::failure(kRD, Method::Matched, FailureReason::DegenerateVariance);
  }
  const double se = std::sqrt(variance);
  return EffectEstimate::success(kRD, Method::Matched, point, se, wald_ci(point, se));
}

EffectEstimate iptw_rd(const Dataset& data, const IptwWeights& weights) {
  try {
    const DesignMatrix X = DesignMatrix::with_intercept(column(data.treatment()));
    const LinearFit fit = fit_wls(X, data.outcome(), weights.weights);
    const double point = fit.coefficients[1];
    const double se = std::sqrt(std::max(fit.covariance(1, 1), 0.0));
    return EffectEstimate::success(kRD, Method::Iptw, point, se, wald_ci(point, se));
  } catch (const ModelError& e) {
    const FailureReason reason = e.reason() == FailureReason::RankDeficient
                                     ? FailureReason::DegenerateVariance
                                     : e.reason();
    return EffectEstimate::failure(kRD, Method::Iptw, reason);
  }
}

CounterfactualMeans predict_counterfactual_means(const Matrix& design_treated,
                                                 const Matrix& design_control,
                                                 const Vector& coefficients) {
  const Vector eta1 = design_treated * coefficients;
  const Vector eta0 = design_control * coefficients;
  CounterfactualMeans m;
  m.treated = eta1.unaryExpr([](double e) { return expit(e); }).mean();
  m.control = eta0.unaryExpr([](double e) { return expit(e); }).mean();
  return m;
}

CounterfactualMeans gcomp_means(const Dataset& data, QSpec spec, const PropensityScores* ps) {
  const Index n = data.size();
  const Vector& a = data.treatment();
  const Matrix& L = data.covariates();
  if (spec != QSpec::Plain && ps == nullptr) {
    throw std::invalid_argument("gcomp: doubly robust Q-model needs propensity scores");
  }

  Matrix extra_obs(n, 0);
  Matrix extra_treated(n, 0);
  Matrix extra_control(n, 0);
  if (spec == QSpec::SimpleDr) {
    const Vector& p = ps->probabilities;
    extra_obs.resize(n, 1);
    extra_treated.resize(n, 1);
    extra_control.resize(n, 1);
    for (Index i = 0; i < n; ++i) {
      extra_obs(i, 0) = a[i] == 1.0 ? 1.0 / p[i] : -1.0 / (1.0 - p[i]);
      extra_treated(i, 0) = 1.0 / p[i];
      extra_control(i, 0) = -1.0 / (1.0 - p[i]);
    }
  } else if (spec == QSpec::DrQuintiles) {
    const QuintileDummies q = ps_quintile_dummies(*ps);
    extra_obs = q.dummies;
    extra_treated = q.dummies;
    extra_control = q.dummies;
  }

  const DesignMatrix X = DesignMatrix::with_intercept(hstack({column(a), L, extra_obs}));
  const LogisticFit fit = fit_outcome_model(X, data.outcome());

  const Matrix ones = Matrix::Ones(n, 1);
  const Matrix zeros = Matrix::Zero(n, 1);
  return predict_counterfactual_means(hstack({ones, ones, L, extra_treated}),
                                      hstack({ones, zeros, L, extra_control}), fit.coefficients);
}

EffectEstimate gcomp_effect(const Dataset& data, QSpec spec, const PropensityScores* ps,
                            Estimand estimand, const BootstrapConfig& bootstrap,
                            const Stream& rng) {
  const Method method = gcomp_method(spec);
  try {
    const double point = gcomp_means(data, spec, ps).contrast(estimand);
    if (!std::isfinite(point)) throw ModelError(FailureReason::Separation, "non-finite contrast");
    if (estimand == Estimand::LogOddsRatio && std::exp(point) >= kExtremeOddsRatio) {
      return EffectEstimate::failure(estimand, method, FailureReason::ExtremeOR);
    }
    const PointEstimator replicate = [spec, estimand](const Dataset& d) -> std::optional<double> {
      if (spec == QSpec::Plain) return gcomp_means(d, spec, nullptr).contrast(estimand);
      const PropensityScores refit = estimate_ps(d);
      return gcomp_means(d, spec, &refit).contrast(estimand);
    };
    const Interval ci = bootstrap_percentile_ci(data, replicate, bootstrap, rng);
    return EffectEstimate::success(estimand, method, point, std::nullopt, ci);
  } catch (const ModelError& e) {
    return EffectEstimate::failure(estimand, method, e.reason());
  }
}

AipwComponents aipw_components(const Dataset& data, const Vector& propensity,
                               const Vector& treated_risk, const Vector& control_risk) {
  const Index n = data.size();
  const Vector& a = data.treatment();
  const Vector& y = data.outcome();
  AipwComponents out;
  out.contributions.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double p = propensity[i];
    const double treated_term = a[i] * y[i] / p - (a[i] - p) / p * treated_risk[i];
    const double control_term =
        (1.0 - a[i]) * y[i] / (1.0 - p) + (a[i] - p) / (1.0 - p) * control_risk[i];
    out.contributions[i] = treated_term - control_term;
  }
  out.point = out.contributions.mean();
  const double ss = (out.contributions.array() - out.point).square().sum();
  out.se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n))
                 : 0.0;
  return out;
}

EffectEstimate aipw_rd(const Dataset& data, const PropensityScores& ps) {
  try {
    const DesignMatrix full = DesignMatrix::with_intercept(data.covariates());
    Vector risk[2];
    for (int arm = 0; arm < 2; ++arm) {
      const auto rows = arm_rows(data, static_cast<double>(arm));
      const Dataset sub = data.rows(rows);
      if (sub.size() == 0) throw ModelError(FailureReason::Separation, "empty arm");
      const LogisticFit fit =
          fit_outcome_model(DesignMatrix::with_intercept(sub.covariates()), sub.outcome());
      risk[arm] = (full.values() * fit.coefficients).unaryExpr([](double e) { return expit(e); });
    }
    const AipwComponents c = aipw_components(data, ps.probabilities, risk[1], risk[0]);
    if (!(c.se > 0.0) || !std::isfinite(c.point)) {
      return EffectEstimate::failure(kRD, Method::Aipw, FailureReason::DegenerateVariance);
    }
    return EffectEstimate::success(kRD, Method::Aipw, c.point, c.se, wald_ci(c.point, c.se));
  } catch (const ModelError& e) {
    return EffectEstimate::failure(kRD, Method::Aipw, e.reason());
  }
}

std::vector<EffectEstimate> estimate_methods(const Dataset& data, Estimand estimand,
                                             std::span<const Method> methods,
                                             const BootstrapConfig& bootstrap,
                                             const Stream& rng) {
  for (const Method m : methods) {
    if (!in_registry(estimand, m)) {
      throw std::invalid_argument("method " + std::string(method_id(m)) +
                                  " is not available for estimand " +
                                  std::string(to_string(estimand)));
    }
  }

  bool want_ps = false;
  bool want_matching = false;
  for (const Method m : methods) {
    want_ps = want_ps || needs_propensity(m);
    want_matching = want_matching || m == Method::Matched || m == Method::MatchUnadjusted ||
                    m == Method::MatchConditional;
  }

  std::optional<PropensityScores> ps;
  std::optional<FailureReason> ps_failure;
  if (want_ps) {
    try {
      ps = estimate_ps(data);
    } catch (const ModelError& e) {
      ps_failure = e.reason();
    }
  }
  std::optional<MatchedSample> matched;
  std::optional<FailureReason> match_failure = ps_failure;
  if (want_matching && ps) {
    try {
      matched = match_caliper(*ps, data.treatment());
    } catch (const ModelError& e) {
      match_failure = e.reason();
    }
  }

  std::vector<EffectEstimate> out;
  out.reserve(methods.size());
  for (const Method m : methods) {
    const Stream method_rng = rng.substream(static_cast<std::uint64_t>(m) + 1);
    if (needs_propensity(m) && !ps) {
      out.push_back(EffectEstimate::failure(estimand, m, *ps_failure));
      continue;
    }
    const bool is_matched =
        m == Method::Matched || m == Method::MatchUnadjusted || m == Method::MatchConditional;
    if (is_matched && !matched) {
      out.push_back(EffectEstimate::failure(estimand, m, *match_failure));
      continue;
    }
    const PropensityScores* ps_ptr = ps ? &*ps : nullptr;
    if (estimand == Estimand::LogOddsRatio) {
      out.push_back(or_estimate(data, m, ps_ptr, matched ? &*matched : nullptr, bootstrap,
                                method_rng));
      continue;
    }
    switch (m) {
      case Method::Crude:
        out.push_back(crude_rd(data));
        break;
      case Method::CovAdjusted:
        out.push_back(covariate_adjusted_rd(data));
        break;
      case Method::PsCovariate:
        out.push_back(ps_covariate_rd(data, *ps));
        break;
      case Method::Matched:
        out.push_back(matched_rd(data, *matched));
        break;
      case Method::Iptw:
        out.push_back(iptw_rd(data, iptw_weights(*ps, data.treatment())));
        break;
      case Method::Gcomp:
        out.push_back(gcomp_rd(data, QSpec::Plain, nullptr, bootstrap, method_rng));
        break;
      case Method::GcompSimpleDr:
        out.push_back(gcomp_rd(data, QSpec::SimpleDr, ps_ptr, bootstrap, method_rng));
        break;
      case Method::GcompDrQuintiles:
        out.push_back(gcomp_rd(data, QSpec::DrQuintiles, ps_ptr, bootstrap, method_rng));
        break;
      case Method::Aipw:
        out.push_back(aipw_rd(data, *ps));
        break;
      default:
        throw std::logic_error("unreachable RD method");
    }
  }
  return out;
}

}  // namespace causal
