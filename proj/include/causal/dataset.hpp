#pragma once

#include <span>
#include <string>
#include <vector>

#include "causal/model_core.hpp"

namespace causal {

enum class CovariateKind { Continuous, Binary, CategoricalDummy };

// Analysis unit for every estimator: covariates L (N x k), binary
// treatment A and binary outcome Y.
class Dataset {
 public:
  // Throws std::invalid_argument on length mismatch, non-binary A/Y or
  // non-finite covariates. Missing kinds default to Continuous.
  Dataset(Matrix covariates, Vector treatment, Vector outcome,
          std::vector<CovariateKind> kinds = {}, std::vector<std::string> names = {});

  Index size() const noexcept { return treatment_.size(); }
  Index covariate_count() const noexcept { return covariates_.cols(); }
  Index treated_count() const noexcept { return treated_; }
  Index control_count() const noexcept { return size() - treated_; }

  const Matrix& covariates() const noexcept { return covariates_; }
  const Vector& treatment() const noexcept { return treatment_; }
  const Vector& outcome() const noexcept { return outcome_; }
  const std::vector<CovariateKind>& kinds() const noexcept { return kinds_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  // Rows in the given order; repeated indices allowed (bootstrap).
  Dataset rows(std::span<const Index> indices) const;

  // Y -> 1 - Y and A -> 1 - A, used by symmetry checks.
  Dataset with_flipped_outcome() const;
  Dataset with_flipped_treatment() const;

 private:
  Matrix covariates_;
  Vector treatment_;
  Vector outcome_;
  std::vector<CovariateKind> kinds_;
  std::vector<std::string> names_;
  Index treated_ = 0;
};

}  // namespace causal
