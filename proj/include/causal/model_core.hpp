#pragma once

#include <optional>

#include <Eigen/Dense>

namespace causal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double length() const noexcept { return upper - lower; }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

// N x p regression design whose first column is the intercept.
class DesignMatrix {
 public:
  // Validates: first column all ones, finite entries, N >= p (RankDeficient
  // otherwise).
  explicit DesignMatrix(Matrix values);

  // Prepends an intercept column to the given regressors (may have zero
  // columns).
  static DesignMatrix with_intercept(const Matrix& regressors);

  const Matrix& values() const noexcept { return values_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
};

// Horizontal concatenation helper for assembling regressors.
Matrix hstack(std::initializer_list<Matrix> blocks);

enum class CovarianceKind { HC0, HC3, WeightedSandwich };

struct LinearFit {
  Vector coefficients;
  Vector residuals;
  Vector hat_diagonals;
  // (X'WX)^-1, W = diag(weights) or identity.
  Matrix bread;
  Matrix covariance;
  CovarianceKind covariance_kind = CovarianceKind::HC0;
};

struct LogisticFit {
  Vector coefficients;
  Vector fitted;
  // y - fitted
  Vector response_residuals;
  // Inverse observed information when unweighted, weighted sandwich otherwise.
  Matrix covariance;
  bool converged = false;
  int iterations = 0;
  double max_abs_score = 0.0;
  bool separation_flag = false;
};

inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kLeverageTolerance = 1e-12;
inline constexpr double kIrlsTolerance = 1e-8;
inline constexpr int kIrlsMaxIterations = 25;
inline constexpr double kSeparationCoefficient = 15.0;
inline constexpr double kSeparationProbability = 1e-10;
// Linear predictors are clamped to +/- kLogitCap whenever a probability is formed.
inline constexpr double kLogitCap = 30.0;

// Ordinary least squares; covariance is HC0. Throws ModelError(RankDeficient)
// when a QR pivot falls below kRankTolerance times the largest.
LinearFit fit_ols(const DesignMatrix& X, const Vector& y);

// Weighted least squares with the weighted sandwich covariance.
LinearFit fit_wls(const DesignMatrix& X, const Vector& y, const Vector& weights);

// (X'X)^-1 X' diag(e^2 / (1-h)^2) X (X'X)^-1. Throws ModelError(LeverageOne).
Matrix hc3_covariance(const LinearFit& fit, const DesignMatrix& X);
Matrix hc0_covariance(const LinearFit& fit, const DesignMatrix& X);

// IRLS from a zero start. A fit that diverges along a separating direction
// comes back with separation_flag set (and converged possibly false);
// callers decide whether that is a failure. Throws ModelError(NotConverged)
// at the iteration cap without separation, ModelError(RankDeficient) for a
// singular design. With
// with_covariance = false the covariance is left empty.
LogisticFit fit_logistic(const DesignMatrix& X, const Vector& y,
                         const std::optional<Vector>& weights = std::nullopt,
                         bool with_covariance = true);

// A^-1 B A^-1 with A = sum w d2l, B = sum w^2 s s'. Weights are fixed
// constants. Throws ModelError(RankDeficient) on singular bread.
Matrix weighted_sandwich_covariance(const LinearFit& fit, const DesignMatrix& X,
                                    const Vector& weights);
Matrix weighted_sandwich_covariance(const LogisticFit& fit, const DesignMatrix& X,
                                    const Vector& weights);

// point +/- z_{(1+level)/2} se.
Interval wald_ci(double point, double se, double level = 0.95);

double expit(double eta) noexcept;
double logit(double p) noexcept;

}  // namespace causal
