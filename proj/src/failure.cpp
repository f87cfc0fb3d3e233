#include "causal/failure.hpp"

#include <array>
#include <utility>

namespace causal {

namespace {

constexpr std::array<std::pair<FailureReason, std::string_view>, 9> kNames{{
    {FailureReason::NotConverged, "NotConverged"},
    {FailureReason::Separation, "Separation"},
    {FailureReason::NoPairs, "NoPairs"},
    {FailureReason::DegenerateVariance, "DegenerateVariance"},
    {FailureReason::ExtremeOR, "ExtremeOR"},
    {FailureReason::BootstrapCollapse, "BootstrapCollapse"},
    {FailureReason::LeverageOne, "LeverageOne"},
    {FailureReason::RankDeficient, "RankDeficient"},
    {FailureReason::DegenerateStrata, "DegenerateStrata"},
}};

}  // namespace

std::string_view to_string(FailureReason reason) {
  for (const auto& [r, name] : kNames) {
    if (r == reason) return name;
  }
  return "Unknown";
}

std::optional<FailureReason> parse_failure_reason(std::string_view text) {
  for (const auto& [r, name] : kNames) {
    if (name == text) return r;
  }
  return std::nullopt;
}

}  // namespace causal
