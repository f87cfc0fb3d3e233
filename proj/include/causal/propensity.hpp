#pragma once

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/model_core.hpp"

namespace causal {

struct PropensityScores {
  Vector probabilities;
  Vector logits;
  std::shared_ptr<const LogisticFit> source_fit;
};

struct MatchedSample {
  // (treated index, control index)
  std::vector<std::pair<Index, Index>> pairs;
  // On the logit scale.
  double caliper_width = 0.0;

  std::size_t n_pairs() const noexcept { return pairs.size(); }
};

struct IptwWeights {
  Vector weights;
};

struct QuintileDummies {
  // N x 4; the lowest stratum is the omitted reference.
  Matrix dummies;
  std::array<double, 4> cutpoints{};
  // Stratum 0..4 per subject.
  std::vector<int> strata;
};

// Main-effects logistic model of A on intercept plus every covariate
// column. Separation-flagged fits are used as they are (logits capped at
// +/- kLogitCap). Throws ModelError on non-convergence or a singular
// design, and ModelError(Separation) if one arm is empty.
PropensityScores estimate_ps(const Dataset& data);

// Greedy 1:1 nearest-neighbour matching without replacement on the
// logit PS. Caliper = multiplier * SD(all logits, N - 1 denominator).
// Treated subjects are visited by descending PS (ties: lower index
// first); each takes the unused control at the smallest absolute logit
// distance (ties: lower control index) if that distance is within the
// caliper. Throws ModelError(NoPairs) when no pair forms.
MatchedSample match_caliper(const PropensityScores& ps, const Vector& treatment,
                            double caliper_sd_multiplier = 0.2);

// 1/p for treated, 1/(1-p) for controls. No trimming or stabilisation.
IptwWeights iptw_weights(const PropensityScores& ps, const Vector& treatment);

// Five strata from the type-7 20/40/60/80 percentiles of the logit PS; a
// subject belongs to the first stratum whose cutpoint is >= its logit.
// Throws ModelError(DegenerateStrata) for fewer than 5 distinct logits.
QuintileDummies ps_quintile_dummies(const PropensityScores& ps);

}  // namespace causal
