#include "causal/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "causal/failure.hpp"

namespace causal {

namespace {

void require_full_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr, FailureReason reason) {
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  const double largest = diag.size() > 0 ? diag.maxCoeff() : 0.0;
  if (diag.size() == 0 || !(largest > 0.0) ||
      diag.minCoeff() < kRankTolerance * largest) {
    throw ModelError(reason, "design is rank deficient");
  }
}

// (R'R)^-1 with column pivoting undone, i.e. (A'A)^-1 for A P = Q R.
Matrix inverse_gram(const Eigen::ColPivHouseholderQR<Matrix>& qr) {
  const Index p = qr.cols();
  const Matrix r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Matrix r_inv =
      r.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
  const Matrix unpermuted = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  return perm * unpermuted * perm.transpose();
}

Matrix inverse_gram(const Matrix& root, FailureReason reason) {
  Eigen::ColPivHouseholderQR<Matrix> qr(root);
  require_full_rank(qr, reason);
  return inverse_gram(qr);
}

// bread * (sum_i c_i x_i x_i') * bread
Matrix sandwich(const Matrix& bread, const Matrix& X, const Vector& meat_weights) {
  const Matrix meat = X.transpose() * meat_weights.asDiagonal() * X;
  Matrix cov = bread * meat * bread;
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

DesignMatrix::DesignMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.cols() == 0) {
    throw std::invalid_argument("design matrix needs an intercept column");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("design matrix has non-finite entries");
  }
  if ((values_.col(0).array() != 1.0).any()) {
    throw std::invalid_argument("first design column must be all ones");
  }
  if (values_.rows() < values_.cols()) {
    throw ModelError(FailureReason::RankDeficient,
                     "fewer rows (" + std::to_string(values_.rows()) +
                         ") than parameters (" + std::to_string(values_.cols()) + ")");
  }
}

DesignMatrix DesignMatrix::with_intercept(const Matrix& regressors) {
  Matrix values(regressors.rows(), regressors.cols() + 1);
  values.col(0).setOnes();
  values.rightCols(regressors.cols()) = regressors;
  return DesignMatrix(std::move(values));
}

Matrix hstack(std::initializer_list<Matrix> blocks) {
  Index rows = -1;
  Index cols = 0;
  for (const auto& b : blocks) {
    if (rows < 0) rows = b.rows();
    if (b.rows() != rows) throw std::invalid_argument("hstack: row count mismatch");
    cols += b.cols();
  }
  Matrix out(std::max<Index>(rows, 0), cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

LinearFit fit_ols(const DesignMatrix& design, const Vector& y) {
  const Matrix& X = design.values();
  if (y.size() != X.rows()) throw std::invalid_argument("fit_ols: length mismatch");

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  require_full_rank(qr, FailureReason::RankDeficient);

  LinearFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;
  fit.bread = inverse_gram(qr);
  fit.hat_diagonals = (X * fit.bread).cwiseProduct(X).rowwise().sum();
  fit.covariance = sandwich(fit.bread, X, fit.residuals.array().square().matrix());
  fit.covariance_kind = CovarianceKind::HC0;
  return fit;
}

LinearFit fit_wls(const DesignMatrix& design, const Vector& y, const Vector& weights) {
  const Matrix& X = design.values();
  if (y.size() != X.rows() || weights.size() != X.rows()) {
    throw std::invalid_argument("fit_wls: length mismatch");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw std::invalid_argument("fit_wls: weights must be finite and nonnegative");
  }

  const Vector root_w = weights.cwiseSqrt();
  const Matrix root_x = root_w.asDiagonal() * X;
  Eigen::ColPivHouseholderQR<Matrix> qr(root_x);
  require_full_rank(qr, FailureReason::RankDeficient);

  LinearFit fit;
  fit.coefficients = qr.solve(root_w.cwiseProduct(y));
  fit.residuals = y - X * fit.coefficients;
  fit.bread = inverse_gram(qr);
  fit.hat_diagonals =
      weights.cwiseProduct((X * fit.bread).cwiseProduct(X).rowwise().sum());
  fit.covariance = sandwich(
      fit.bread, X,
      (weights.array().square() * fit.residuals.array().square()).matrix());
  fit.covariance_kind = CovarianceKind::WeightedSandwich;
  return fit;
}

Matrix hc0_covariance(const LinearFit& fit, const DesignMatrix& X) {
  return sandwich(fit.bread, X.values(), fit.residuals.array().square().matrix());
}

Matrix hc3_covariance(const LinearFit& fit, const DesignMatrix& X) {
  if ((fit.hat_diagonals.array() >= 1.0 - kLeverageTolerance).any()) {
    throw ModelError(FailureReason::LeverageOne, "observation with leverage one");
  }
  const Vector inflated =
      (fit.residuals.array() / (1.0 - fit.hat_diagonals.array())).square().matrix();
  return sandwich(fit.bread, X.values(), inflated);
}

double expit(double eta) noexcept {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

LogisticFit fit_logistic(const DesignMatrix& design, const Vector& y,
                         const std::optional<Vector>& weights, bool with_covariance) {
  const Matrix& X = design.values();
  const Index n = X.rows();
  const Index p = X.cols();
  if (y.size() != n) throw std::invalid_argument("fit_logistic: length mismatch");
  if (((y.array() != 0.0) && (y.array() != 1.0)).any()) {
    throw std::invalid_argument("fit_logistic: response must be 0/1");
  }
  Vector w = weights ? *weights : Vector::Ones(n);
  if (w.size() != n) throw std::invalid_argument("fit_logistic: weight length mismatch");
  if ((w.array() < 0.0).any() || !w.allFinite()) {
    throw std::invalid_argument("fit_logistic: weights must be finite and nonnegative");
  }

  auto probabilities = [&](const Vector& beta) {
    Vector eta = X * beta;
    return eta.unaryExpr([](double e) { return expit(std::clamp(e, -kLogitCap, kLogitCap)); })
        .eval();
  };

  LogisticFit fit;
  Vector beta = Vector::Zero(p);
  Vector prob;
  bool stalled = false;
  for (int it = 1; it <= kIrlsMaxIterations; ++it) {
    prob = probabilities(beta);
    const Vector resid = y - prob;
    const Vector score = X.transpose() * w.cwiseProduct(resid);
    fit.max_abs_score = score.cwiseAbs().maxCoeff();
    // Score small enough: take this last Newton step as a polish, then stop.
    const bool score_met = fit.max_abs_score <= kIrlsTolerance;

    const Vector var = prob.cwiseProduct(Vector::Ones(n) - prob);
    const Vector iw = w.cwiseProduct(var);
    Vector step;
    if (it == 1) {
      // Pivoted QR once, on the design itself, for the rank decision.
      const Vector root_w = iw.cwiseSqrt();
      Vector rhs(n);
      for (Index i = 0; i < n; ++i) {
        rhs[i] = root_w[i] > 0.0 ? w[i] * resid[i] / root_w[i] : 0.0;
      }
      Eigen::ColPivHouseholderQR<Matrix> qr(root_w.asDiagonal() * X);
      require_full_rank(qr, FailureReason::RankDeficient);
      step = qr.solve(rhs);
    } else {
      Matrix info = Matrix::Zero(p, p);
      info.selfadjointView<Eigen::Lower>().rankUpdate((iw.cwiseSqrt().asDiagonal() * X).transpose());
      const Eigen::LDLT<Matrix> ldlt(info.selfadjointView<Eigen::Lower>());
      const Vector d = ldlt.vectorD().cwiseAbs();
      if (ldlt.info() != Eigen::Success || !(d.maxCoeff() > 0.0) ||
          d.minCoeff() < kRankTolerance * kRankTolerance * d.maxCoeff()) {
        // weights collapsed onto a separating direction
        stalled = !score_met;
        fit.converged = score_met;
        break;
      }
      step = ldlt.solve(score);
    }
    if (!step.allFinite()) {
      stalled = !score_met;
      fit.converged = score_met;
      break;
    }
    beta += step;
    fit.iterations = it;
    if (score_met || step.cwiseAbs().maxCoeff() <= kIrlsTolerance) {
      fit.converged = true;
      break;
    }
  }

  prob = probabilities(beta);
  fit.coefficients = beta;
  fit.fitted = prob;
  fit.response_residuals = y - prob;
  fit.max_abs_score =
      (X.transpose() * w.cwiseProduct(fit.response_residuals)).cwiseAbs().maxCoeff();

  bool extreme_probability = false;
  for (Index i = 0; i < n; ++i) {
    if (w[i] > 0.0 && (prob[i] < kSeparationProbability ||
                       prob[i] > 1.0 - kSeparationProbability)) {
      extreme_probability = true;
      break;
    }
  }
  fit.separation_flag =
      extreme_probability || beta.cwiseAbs().maxCoeff() > kSeparationCoefficient;

  // Divergence along a separating direction is reported through the flag;
  // anything else that stops short of convergence is an error.
  if (!fit.converged && !fit.separation_flag) {
    if (stalled) throw ModelError(FailureReason::Separation, "information matrix became singular");
    throw ModelError(FailureReason::NotConverged,
                     "IRLS did not converge in " + std::to_string(kIrlsMaxIterations) +
                         " iterations");
  }

  if (!with_covariance) return fit;
  try {
    if (weights) {
      fit.covariance = weighted_sandwich_covariance(fit, design, w);
    } else {
      const Vector root = fit.fitted.cwiseProduct(Vector::Ones(n) - fit.fitted).cwiseSqrt();
      fit.covariance = inverse_gram(root.asDiagonal() * X, FailureReason::Separation);
    }
  } catch (const ModelError&) {
    if (!fit.separation_flag) throw;
    fit.covariance = Matrix::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

Matrix weighted_sandwich_covariance(const LinearFit& fit, const DesignMatrix& design,
                                    const Vector& weights) {
  const Matrix& X = design.values();
  const Matrix bread =
      inverse_gram(weights.cwiseSqrt().asDiagonal() * X, FailureReason::RankDeficient);
  return sandwich(bread, X,
                  (weights.array().square() * fit.residuals.array().square()).matrix());
}

Matrix weighted_sandwich_covariance(const LogisticFit& fit, const DesignMatrix& design,
                                    const Vector& weights) {
  const Matrix& X = design.values();
  const Vector var = fit.fitted.cwiseProduct(Vector::Ones(X.rows()) - fit.fitted);
  const Matrix bread = inverse_gram(weights.cwiseProduct(var).cwiseSqrt().asDiagonal() * X,
                                    FailureReason::RankDeficient);
  return sandwich(
      bread, X,
      (weights.array().square() * fit.response_residuals.array().square()).matrix());
}

Interval wald_ci(double point, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wald_ci: level outside (0,1)");
  if (se < 0.0) throw std::invalid_argument("wald_ci: negative standard error");
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 0.5 * (1.0 + level));
  return {point - z * se, point + z * se};
}

}  // namespace causal
