#include "causal/resampling.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "causal/failure.hpp"
#include "causal/quantile.hpp"

namespace causal {

void BootstrapConfig::validate() const {
  if (replications < 2) throw std::invalid_argument("bootstrap: at least two replications");
  if (!(lower_percentile > 0.0 && lower_percentile < upper_percentile && upper_percentile < 1.0)) {
    throw std::invalid_argument("bootstrap: percentiles must satisfy 0 < lower < upper < 1");
  }
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    throw std::invalid_argument("bootstrap: max_failure_fraction outside [0,1]");
  }
}

std::vector<Index> resample_indices(Index n, Stream& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  return idx;
}

BootstrapDistribution bootstrap_distribution(const Dataset& data, const PointEstimator& estimator,
                                             const BootstrapConfig& config, const Stream& rng) {
  config.validate();
  const std::size_t B = config.replications;
  std::vector<std::optional<double>> results(B);

  auto evaluate = [&](std::size_t b) {
    Stream sub = rng.substream(b);
    const auto idx = resample_indices(data.size(), sub);
    try {
      auto value = estimator(data.rows(idx));
      if (value && std::isfinite(*value)) results[b] = *value;
    } catch (const ModelError&) {
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, B));
  if (workers == 1) {
    for (std::size_t b = 0; b < B; ++b) evaluate(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < B; b = next++) evaluate(b);
      });
    }
  }

  BootstrapDistribution dist;
  for (const auto& r : results) {
    if (r) {
      dist.estimates.push_back(*r);
    } else {
      ++dist.failures;
    }
  }
  return dist;
}

Interval bootstrap_percentile_ci(const Dataset& data, const PointEstimator& estimator,
                                 const BootstrapConfig& config, const Stream& rng) {
  auto dist = bootstrap_distribution(data, estimator, config, rng);
  if (static_cast<double>(dist.failures) >
          config.max_failure_fraction * static_cast<double>(config.replications) ||
      dist.estimates.empty()) {
    throw ModelError(FailureReason::BootstrapCollapse,
                     std::to_string(dist.failures) + " of " +
                         std::to_string(config.replications) + " bootstrap replicates failed");
  }
  std::sort(dist.estimates.begin(), dist.estimates.end());
  return {quantile_sorted(dist.estimates, config.lower_percentile),
          quantile_sorted(dist.estimates, config.upper_percentile)};
}

}  // namespace causal
