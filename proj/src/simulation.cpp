#include "causal/simulation.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "causal/quantile.hpp"

namespace causal {

namespace {

const double kLog5 = std::log(5.0);
const double kLog2 = std::log(2.0);

Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

// Fills the generated covariate row for one subject.
void draw_covariates(const ScenarioSpec& spec, Stream& rng, double* x) {
  switch (spec.id) {
    case ScenarioId::Covid:
    case ScenarioId::Unmeasured: {
      x[0] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      x[1] = std::round(rng.normal(45.0, 15.0));
      const int status = (rng.bernoulli(0.5) ? 1 : 0) + (rng.bernoulli(0.5) ? 1 : 0);
      x[2] = status == 1 ? 1.0 : 0.0;
      x[3] = status == 2 ? 1.0 : 0.0;
      x[4] = std::round(10.0 * rng.uniform());
      if (spec.id == ScenarioId::Unmeasured) x[5] = rng.normal(0.0, 1.0);
      break;
    }
    case ScenarioId::Austin:
      for (Index j = 0; j < spec.generated_columns(); ++j) {
        x[j] = rng.bernoulli(spec.binary_prevalence) ? 1.0 : 0.0;
      }
      break;
  }
}

double linear_predictor(const Vector& coef, const double* x) {
  double eta = coef[0];
  for (Index j = 1; j < coef.size(); ++j) eta += coef[j] * x[j - 1];
  return eta;
}

void validate(const ScenarioSpec& spec) {
  if (spec.alpha.size() != spec.beta.size() ||
      static_cast<Index>(spec.analysis_mask.size()) != spec.generated_columns() ||
      static_cast<Index>(spec.column_names.size()) != spec.generated_columns() ||
      static_cast<Index>(spec.kinds.size()) != spec.generated_columns()) {
    throw std::invalid_argument("scenario: inconsistent coefficient or column metadata");
  }
}

// Outcome linear predictors without the treatment term, for every oracle
// subject; draws match generate_study on rng.substream(m).
template <typename Visit>
void visit_oracle_subjects(const ScenarioSpec& spec, OracleSize size, const Stream& rng,
                           Visit&& visit) {
  validate(spec);
  std::vector<double> x(static_cast<std::size_t>(spec.generated_columns()));
  for (std::size_t m = 0; m < size.datasets; ++m) {
    Stream s = rng.substream(m);
    for (Index i = 0; i < size.size; ++i) {
      draw_covariates(spec, s, x.data());
      s.uniform();
      s.uniform();
      visit(linear_predictor(spec.alpha, x.data()));
    }
  }
}

double contrast(Estimand estimand, double mean1, double mean0) {
  if (estimand == Estimand::RiskDifference) return mean1 - mean0;
  return std::log(mean1 / (1.0 - mean1)) - std::log(mean0 / (1.0 - mean0));
}

}  // namespace

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::Covid:
      return "covid";
    case ScenarioId::Unmeasured:
      return "unmeasured";
    case ScenarioId::Austin:
      return "austin";
  }
  return "unknown";
}

std::optional<ScenarioId> parse_scenario(std::string_view text) {
  if (text == "covid") return ScenarioId::Covid;
  if (text == "unmeasured") return ScenarioId::Unmeasured;
  if (text == "austin") return ScenarioId::Austin;
  return std::nullopt;
}

ScenarioSpec ScenarioSpec::covid(Index n, double beta_trt, std::optional<double> beta0) {
  ScenarioSpec s;
  s.id = ScenarioId::Covid;
  s.beta = make_vector({-2.3, 0.31, 0.03, 1.099, -0.1054, 0.1031});
  s.alpha = make_vector({-1.06, 0.619, 0.0077, 0.9461, -1.3499, 0.0896});
  if (beta0) s.beta[0] = *beta0;
  s.beta_trt = beta_trt;
  s.n_subjects = n;
  s.analysis_mask.assign(5, true);
  s.column_names = {"x1", "x2", "x3_1", "x3_2", "x4"};
  s.kinds = {CovariateKind::Binary, CovariateKind::Continuous, CovariateKind::CategoricalDummy,
             CovariateKind::CategoricalDummy, CovariateKind::Continuous};
  return s;
}

ScenarioSpec ScenarioSpec::unmeasured(Index n, double beta_trt, std::optional<double> beta0) {
  ScenarioSpec s = covid(n, beta_trt, beta0);
  s.id = ScenarioId::Unmeasured;
  s.beta.conservativeResize(7);
  s.beta[6] = kLog5;
  s.alpha.conservativeResize(7);
  s.alpha[6] = kLog5;
  s.analysis_mask.push_back(false);
  s.column_names.push_back("x5");
  s.kinds.push_back(CovariateKind::Continuous);
  return s;
}

ScenarioSpec ScenarioSpec::austin(Index n, double beta_trt, std::optional<double> beta0) {
  ScenarioSpec s;
  s.id = ScenarioId::Austin;
  // Rows of the association grid: x1-x3 strong, x4-x6 moderate, x7-x9 no
  // outcome association; within a row strong, moderate, none for treatment.
  s.beta = make_vector({-3.5, kLog5, kLog2, 0.0, kLog5, kLog2, 0.0, kLog5, kLog2, 0.0});
  s.alpha = make_vector({-5.0, kLog5, kLog5, kLog5, kLog2, kLog2, kLog2, 0.0, 0.0, 0.0});
  if (beta0) s.beta[0] = *beta0;
  s.beta_trt = beta_trt;
  s.n_subjects = n;
  s.analysis_mask.assign(9, true);
  for (int j = 1; j <= 9; ++j) s.column_names.push_back("x" + std::to_string(j));
  s.kinds.assign(9, CovariateKind::Binary);
  return s;
}

ScenarioSpec ScenarioSpec::make(ScenarioId id, Index n, double beta_trt,
                                std::optional<double> beta0) {
  switch (id) {
    case ScenarioId::Covid:
      return covid(n, beta_trt, beta0);
    case ScenarioId::Unmeasured:
      return unmeasured(n, beta_trt, beta0);
    case ScenarioId::Austin:
      return austin(n, beta_trt, beta0);
  }
  throw std::invalid_argument("unknown scenario");
}

SimulatedStudy generate_study(const ScenarioSpec& spec, Stream& rng) {
  validate(spec);
  const Index n = spec.n_subjects;
  const Index k = spec.generated_columns();
  if (n < 2) throw std::invalid_argument("generate_study: need at least two subjects");

  std::vector<Index> visible;
  for (Index j = 0; j < k; ++j) {
    if (spec.analysis_mask[j]) visible.push_back(j);
  }

  Matrix covariates(n, static_cast<Index>(visible.size()));
  Vector a(n);
  Vector y(n);
  CounterfactualTruth truth;
  truth.treated_risk.resize(n);
  truth.control_risk.resize(n);
  truth.factual_risk.resize(n);

  std::vector<double> x(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) {
    draw_covariates(spec, rng, x.data());
    const double p_treat = expit(linear_predictor(spec.beta, x.data()));
    a[i] = rng.uniform() < p_treat ? 1.0 : 0.0;
    const double eta = linear_predictor(spec.alpha, x.data());
    truth.treated_risk[i] = expit(eta + spec.beta_trt);
    truth.control_risk[i] = expit(eta);
    truth.factual_risk[i] = a[i] == 1.0 ? truth.treated_risk[i] : truth.control_risk[i];
    y[i] = rng.uniform() < truth.factual_risk[i] ? 1.0 : 0.0;
    for (std::size_t c = 0; c < visible.size(); ++c) {
      covariates(i, static_cast<Index>(c)) = x[static_cast<std::size_t>(visible[c])];
    }
  }

  std::vector<CovariateKind> kinds;
  std::vector<std::string> names;
  for (const Index j : visible) {
    kinds.push_back(spec.kinds[j]);
    names.push_back(spec.column_names[j]);
  }
  return {Dataset(std::move(covariates), std::move(a), std::move(y), std::move(kinds),
                  std::move(names)),
          std::move(truth)};
}

SimulatedStudy generate_scenario1(Index n, double beta_trt, std::optional<double> beta0,
                                  Stream& rng) {
  return generate_study(ScenarioSpec::covid(n, beta_trt, beta0), rng);
}

SimulatedStudy generate_scenario2(Index n, double beta_trt, Stream& rng) {
  return generate_study(ScenarioSpec::unmeasured(n, beta_trt), rng);
}

SimulatedStudy generate_scenario3(Index n, double beta_trt, std::optional<double> beta0,
                                  Stream& rng) {
  return generate_study(ScenarioSpec::austin(n, beta_trt, beta0), rng);
}

double true_marginal_effect(const ScenarioSpec& spec, Estimand estimand, OracleSize size,
                            const Stream& rng) {
  double sum1 = 0.0;
  double sum0 = 0.0;
  visit_oracle_subjects(spec, size, rng, [&](double eta) {
    sum1 += expit(eta + spec.beta_trt);
    sum0 += expit(eta);
  });
  const double total = static_cast<double>(size.datasets) * static_cast<double>(size.size);
  return contrast(estimand, sum1 / total, sum0 / total);
}

CalibrationResult calibrate_beta_trt(const ScenarioSpec& spec, Estimand estimand, double target,
                                     const Stream& rng, const CalibrationOptions& options) {
  const double target_scaled = estimand == Estimand::RiskDifference ? target : std::log(target);
  if (estimand == Estimand::RiskDifference && !(target >= 0.0 && target < 0.9)) {
    throw std::invalid_argument("calibration target RD must lie in [0, 0.9)");
  }
  if (estimand == Estimand::LogOddsRatio && !(target >= 1.0)) {
    throw std::invalid_argument("calibration target OR must be >= 1");
  }
  if (target_scaled == 0.0) return {0.0, target, 0};

  std::vector<double> etas;
  etas.reserve(options.oracle.datasets * static_cast<std::size_t>(options.oracle.size));
  visit_oracle_subjects(spec, options.oracle, rng, [&](double eta) { etas.push_back(eta); });
  const auto total = static_cast<double>(etas.size());
  double sum0 = 0.0;
  for (const double eta : etas) sum0 += expit(eta);
  const double mean0 = sum0 / total;

  CalibrationResult result;
  auto effect = [&](double beta_trt) {
    ++result.evaluations;
    double sum1 = 0.0;
    for (const double eta : etas) sum1 += expit(eta + beta_trt);
    return contrast(estimand, sum1 / total, mean0);
  };
  auto natural = [&](double scaled) {
    return estimand == Estimand::RiskDifference ? scaled : std::exp(scaled);
  };

  double lo = options.lower;
  double hi = options.upper;
  const double at_hi = effect(hi);
  if (std::abs(at_hi - target_scaled) <= options.tolerance) {
    result.beta_trt = hi;
    result.achieved = natural(at_hi);
    return result;
  }
  if (at_hi < target_scaled) {
    throw NotBracketed("target " + std::to_string(target) + " not reachable with beta_trt in [" +
                       std::to_string(options.lower) + ", " + std::to_string(options.upper) +
                       "]");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = effect(mid);
    if (std::abs(value - target_scaled) <= options.tolerance) {
      result.beta_trt = mid;
      result.achieved = natural(value);
      return result;
    }
    if (value < target_scaled) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NotBracketed("bisection did not reach the tolerance");
}

ReplicateResult run_replicate(const ScenarioSpec& spec, std::span<const Method> methods,
                              Estimand estimand, const BootstrapConfig& bootstrap,
                              std::uint64_t master_seed, std::size_t replicate_index,
                              double true_effect) {
  const auto scenario = static_cast<std::uint64_t>(spec.id);
  Stream data_rng = derive_substream(master_seed, scenario, replicate_index, StreamPurpose::Data);
  const Stream boot_rng =
      derive_substream(master_seed, scenario, replicate_index, StreamPurpose::Bootstrap);
  const SimulatedStudy study = generate_study(spec, data_rng);

  ReplicateResult result;
  result.replicate_index = replicate_index;
  result.true_effect = true_effect;
  result.estimates = estimate_methods(study.data, estimand, methods, bootstrap, boot_rng);
  return result;
}

std::vector<ReplicateResult> run_replicates(const ScenarioSpec& spec,
                                            std::span<const Method> methods, Estimand estimand,
                                            const BootstrapConfig& bootstrap,
                                            std::uint64_t master_seed, std::size_t count,
                                            unsigned workers, double true_effect,
                                            const ProgressCallback& progress) {
  std::vector<ReplicateResult> results(count);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto work = [&] {
    for (std::size_t r = next++; r < count; r = next++) {
      results[r] = run_replicate(spec, methods, estimand, bootstrap, master_seed, r, true_effect);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, count);
      }
    }
  };
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  return results;
}

const MethodMetrics* MetricsSummary::find(Method m) const {
  for (const auto& mm : methods) {
    if (mm.method == m) return &mm;
  }
  return nullptr;
}

MethodMetrics summarize_method(Method method, std::span<const EffectEstimate> estimates,
                               double true_effect) {
  MethodMetrics out;
  out.method = method;
  out.n_replicates = estimates.size();
  std::vector<double> abs_errors;
  std::vector<double> lengths;
  double sum_error = 0.0;
  double sum_sq = 0.0;
  std::size_t covered = 0;
  std::size_t with_ci = 0;
  for (const auto& e : estimates) {
    if (e.failed() || !e.point) {
      ++out.n_failures;
      continue;
    }
    const double err = *e.point - true_effect;
    sum_error += err;
    sum_sq += err * err;
    abs_errors.push_back(std::abs(err));
    if (e.ci) {
      ++with_ci;
      if (e.ci->contains(true_effect)) ++covered;
      lengths.push_back(e.ci->length());
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (abs_errors.empty()) {
    out.mean_bias = out.rmse = out.mae = out.coverage = out.median_ci_length = nan;
    return out;
  }
  const auto m = static_cast<double>(abs_errors.size());
  out.available = true;
  out.mean_bias = sum_error / m;
  out.rmse = std::sqrt(sum_sq / m);
  out.mae = median(std::move(abs_errors));
  out.coverage = with_ci ? static_cast<double>(covered) / static_cast<double>(with_ci) : nan;
  out.median_ci_length = lengths.empty() ? nan : median(std::move(lengths));
  return out;
}

MetricsSummary summarize(std::span<const ReplicateResult> results, double true_effect) {
  MetricsSummary summary;
  if (results.empty()) return summary;
  for (std::size_t k = 0; k < results.front().estimates.size(); ++k) {
    const Method method = results.front().estimates[k].method;
    std::vector<EffectEstimate> column;
    column.reserve(results.size());
    for (const auto& r : results) {
      for (const auto& e : r.estimates) {
        if (e.method == method) {
          column.push_back(e);
          break;
        }
      }
    }
    summary.methods.push_back(summarize_method(method, column, true_effect));
  }
  return summary;
}

}  // namespace causal
