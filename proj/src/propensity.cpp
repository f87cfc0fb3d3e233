#include "causal/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include "causal/failure.hpp"
#include "causal/quantile.hpp"

namespace causal {

PropensityScores estimate_ps(const Dataset& data) {
  if (data.treated_count() == 0 || data.control_count() == 0) {
    throw ModelError(FailureReason::Separation, "propensity model: one arm is empty");
  }
  const DesignMatrix X = DesignMatrix::with_intercept(data.covariates());
  auto fit = std::make_shared<LogisticFit>(fit_logistic(X, data.treatment(), std::nullopt, false));
  PropensityScores ps;
  // Same cap as inside IRLS, so probabilities stay strictly inside (0, 1).
  ps.logits = (X.values() * fit->coefficients).cwiseMax(-kLogitCap).cwiseMin(kLogitCap);
  ps.probabilities = ps.logits.unaryExpr([](double e) { return expit(e); });
  ps.source_fit = std::move(fit);
  return ps;
}

MatchedSample match_caliper(const PropensityScores& ps, const Vector& treatment,
                            double caliper_sd_multiplier) {
  const Index n = ps.logits.size();
  if (treatment.size() != n) throw std::invalid_argument("match_caliper: length mismatch");

  const double mean = ps.logits.mean();
  const double sd =
      n > 1 ? std::sqrt((ps.logits.array() - mean).square().sum() / static_cast<double>(n - 1))
            : 0.0;

  MatchedSample out;
  out.caliper_width = caliper_sd_multiplier * sd;

  std::vector<Index> treated;
  std::set<std::pair<double, Index>> unused;
  for (Index i = 0; i < n; ++i) {
    if (treatment[i] == 1.0) {
      treated.push_back(i);
    } else {
      unused.emplace(ps.logits[i], i);
    }
  }
  std::stable_sort(treated.begin(), treated.end(), [&](Index a, Index b) {
    return ps.probabilities[a] > ps.probabilities[b];
  });

  for (const Index t : treated) {
    if (unused.empty()) break;
    const double lt = ps.logits[t];
    // The lowest-index member of a tied logit group is the first element of
    // that group in (logit, index) order.
    auto above = unused.lower_bound({lt, std::numeric_limits<Index>::min()});
    std::optional<std::set<std::pair<double, Index>>::iterator> best;
    if (above != unused.end()) best = above;
    if (above != unused.begin()) {
      auto below = std::prev(above);
      below = unused.lower_bound({below->first, std::numeric_limits<Index>::min()});
      if (!best) {
        best = below;
      } else {
        const double d_below = std::abs(below->first - lt);
        const double d_above = std::abs((*best)->first - lt);
        if (d_below < d_above || (d_below == d_above && below->second < (*best)->second)) {
          best = below;
        }
      }
    }
    const double distance = std::abs((*best)->first - lt);
    if (distance <= out.caliper_width) {
      out.pairs.emplace_back(t, (*best)->second);
      unused.erase(*best);
    }
  }

  if (out.pairs.empty()) throw ModelError(FailureReason::NoPairs, "no matched pairs within caliper");
  return out;
}

IptwWeights iptw_weights(const PropensityScores& ps, const Vector& treatment) {
  const Index n = ps.probabilities.size();
  if (treatment.size() != n) throw std::invalid_argument("iptw_weights: length mismatch");
  IptwWeights w;
  w.weights.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double p = ps.probabilities[i];
    w.weights[i] = treatment[i] == 1.0 ? 1.0 / p : 1.0 / (1.0 - p);
  }
  return w;
}

QuintileDummies ps_quintile_dummies(const PropensityScores& ps) {
  const Index n = ps.logits.size();
  std::vector<double> sorted(ps.logits.data(), ps.logits.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (n < 5 || distinct < 5) {
    throw ModelError(FailureReason::DegenerateStrata, "fewer than five distinct logit values");
  }
  sorted.assign(ps.logits.data(), ps.logits.data() + n);
  std::sort(sorted.begin(), sorted.end());

  QuintileDummies q;
  for (int k = 0; k < 4; ++k) q.cutpoints[k] = quantile_sorted(sorted, 0.2 * (k + 1));
  q.dummies = Matrix::Zero(n, 4);
  q.strata.resize(n);
  for (Index i = 0; i < n; ++i) {
    int s = 0;
    while (s < 4 && ps.logits[i] > q.cutpoints[s]) ++s;
    q.strata[i] = s;
    if (s > 0) q.dummies(i, s - 1) = 1.0;
  }
  return q;
}

}  // namespace causal
