#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/model_core.hpp"
#include "causal/random.hpp"

namespace causal {

struct BootstrapConfig {
  std::size_t replications = 1000;
  double lower_percentile = 0.025;
  double upper_percentile = 0.975;
  double max_failure_fraction = 0.5;
  // Evaluation threads; results do not depend on this.
  unsigned workers = 1;

  // Throws std::invalid_argument unless B >= 2 and 0 < lower < upper < 1.
  void validate() const;
};

// Point estimator evaluated on each resample; nullopt, a thrown
// ModelError or a non-finite value all count as a failed evaluation.
using PointEstimator = std::function<std::optional<double>(const Dataset&)>;

struct BootstrapDistribution {
  std::vector<double> estimates;  // successful ones, in replicate order
  std::size_t failures = 0;
};

// N row indices drawn uniformly with replacement.
std::vector<Index> resample_indices(Index n, Stream& rng);

// Replicate b draws its indices from rng.substream(b).
BootstrapDistribution bootstrap_distribution(const Dataset& data, const PointEstimator& estimator,
                                             const BootstrapConfig& config, const Stream& rng);

// Percentile interval (type-7 interpolation) of the successful bootstrap
// estimates. Throws ModelError(BootstrapCollapse) when more than
// max_failure_fraction * B evaluations fail.
Interval bootstrap_percentile_ci(const Dataset& data, const PointEstimator& estimator,
                                 const BootstrapConfig& config, const Stream& rng);

}  // namespace causal
