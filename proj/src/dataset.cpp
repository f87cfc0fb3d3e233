#include "causal/dataset.hpp"

#include <stdexcept>

namespace causal {

namespace {

bool is_binary(const Vector& v) {
  return ((v.array() == 0.0) || (v.array() == 1.0)).all();
}

}  // namespace

Dataset::Dataset(Matrix covariates, Vector treatment, Vector outcome,
                 std::vector<CovariateKind> kinds, std::vector<std::string> names)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      kinds_(std::move(kinds)),
      names_(std::move(names)) {
  if (treatment_.size() != outcome_.size() || covariates_.rows() != treatment_.size()) {
    throw std::invalid_argument("dataset: covariates, treatment and outcome lengths differ");
  }
  if (!is_binary(treatment_)) throw std::invalid_argument("dataset: treatment must be 0/1");
  if (!is_binary(outcome_)) throw std::invalid_argument("dataset: outcome must be 0/1");
  if (!covariates_.allFinite()) throw std::invalid_argument("dataset: non-finite covariate");
  if (kinds_.empty()) kinds_.assign(covariates_.cols(), CovariateKind::Continuous);
  if (static_cast<Index>(kinds_.size()) != covariates_.cols()) {
    throw std::invalid_argument("dataset: one kind per covariate column required");
  }
  if (names_.empty()) {
    for (Index j = 0; j < covariates_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Index>(names_.size()) != covariates_.cols()) {
    throw std::invalid_argument("dataset: one name per covariate column required");
  }
  treated_ = static_cast<Index>(treatment_.sum());
}

Dataset Dataset::rows(std::span<const Index> indices) const {
  const auto m = static_cast<Index>(indices.size());
  Matrix cov(m, covariates_.cols());
  Vector a(m);
  Vector y(m);
  for (Index r = 0; r < m; ++r) {
    const Index i = indices[r];
    cov.row(r) = covariates_.row(i);
    a[r] = treatment_[i];
    y[r] = outcome_[i];
  }
  return Dataset(std::move(cov), std::move(a), std::move(y), kinds_, names_);
}

Dataset Dataset::with_flipped_outcome() const {
  return Dataset(covariates_, treatment_, Vector::Ones(size()) - outcome_, kinds_, names_);
}

Dataset Dataset::with_flipped_treatment() const {
  return Dataset(covariates_, Vector::Ones(size()) - treatment_, outcome_, kinds_, names_);
}

}  // namespace causal
