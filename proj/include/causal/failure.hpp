#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace causal {

// Reasons an estimator can fail on a given dataset. Failed estimates are
// excluded from metric aggregation and counted separately.
enum class FailureReason {
  NotConverged,
  Separation,
  NoPairs,
  DegenerateVariance,
  ExtremeOR,
  BootstrapCollapse,
  LeverageOne,
  RankDeficient,
  DegenerateStrata,
};

std::string_view to_string(FailureReason reason);
std::optional<FailureReason> parse_failure_reason(std::string_view text);

// Thrown by model fitting and estimation code for data-dependent failures
// that the caller records rather than propagates.
class ModelError : public std::runtime_error {
 public:
  ModelError(FailureReason reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}

  FailureReason reason() const noexcept { return reason_; }

 private:
  FailureReason reason_;
};

}  // namespace causal
