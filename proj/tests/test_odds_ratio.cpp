#include <doctest.h>

#include <cmath>

#include "causal/estimators.hpp"
#include "causal/failure.hpp"
#include "test_util.hpp"

using namespace causal;
using testutil::vec;

namespace {

constexpr Estimand kOR = Estimand::LogOddsRatio;

BootstrapConfig boot(std::size_t b = 20) {
  BootstrapConfig c;
  c.replications = b;
  return c;
}

Dataset table(int treated, int treated_events, int controls, int control_events) {
  const int n = treated + controls;
  Vector a(n), y(n);
  for (int i = 0; i < n; ++i) {
    a[i] = i < treated ? 1.0 : 0.0;
    y[i] = i < treated ? (i < treated_events ? 1.0 : 0.0) : (i - treated < control_events ? 1.0 : 0.0);
  }
  return Dataset(Matrix(n, 0), a, y);
}

EffectEstimate crude_or(const Dataset& d) {
  return or_estimate(d, Method::Crude, nullptr, nullptr, boot(), Stream(1));
}

}  // namespace

TEST_CASE("crude odds ratio on the 2x2 table") {
  const auto e = crude_or(testutil::two_by_two());
  REQUIRE(e.point);
  CHECK(e.estimand == kOR);
  CHECK(std::abs(std::exp(*e.point) - 196.0 / 12.0) < 1e-7);
  CHECK(std::abs(*e.point - 2.793208009) < 1e-7);
  // Woolf standard error
  CHECK(std::abs(*e.se - std::sqrt(1.0 / 14 + 1.0 / 6 + 1.0 / 2 + 1.0 / 14)) < 1e-7);
}

TEST_CASE("extreme odds ratios fail") {
  // OR = 30 * 99 = 2970
  const auto below = crude_or(table(31, 30, 100, 1));
  REQUIRE_FALSE(below.failed());
  CHECK(std::abs(std::exp(*below.point) - 2970.0) < 1e-4);
  // OR = 31 * 99 = 3069
  CHECK(crude_or(table(32, 31, 100, 1)).failure_reason == FailureReason::ExtremeOR);
  // every treated subject has the event
  CHECK(crude_or(table(10, 10, 10, 3)).failure_reason == FailureReason::ExtremeOR);
}

TEST_CASE("conditional matched odds ratio") {
  Vector a(8), y(8);
  MatchedSample m;
  // pairs: (1,0) (0,1) (1,0) (1,1)
  const int yt[4] = {1, 0, 1, 1}, yc[4] = {0, 1, 0, 1};
  for (int k = 0; k < 4; ++k) {
    a[2 * k] = 1;
    a[2 * k + 1] = 0;
    y[2 * k] = yt[k];
    y[2 * k + 1] = yc[k];
    m.pairs.emplace_back(2 * k, 2 * k + 1);
  }
  const Dataset d(Matrix(8, 0), a, y);
  const auto e = or_estimate(d, Method::MatchConditional, nullptr, &m, boot(), Stream(1));
  CHECK(std::abs(*e.point - std::log(2.0)) < 1e-14);
  CHECK(std::abs(*e.se - std::sqrt(1.5)) < 1e-14);

  MatchedSample even;
  even.pairs = {{0, 1}, {2, 3}, {6, 7}};  // (1,0) (0,1) (1,1)
  CHECK(*or_estimate(d, Method::MatchConditional, nullptr, &even, boot(), Stream(1)).point == 0.0);

  MatchedSample one_sided;
  one_sided.pairs = {{0, 1}, {4, 5}};
  CHECK(or_estimate(d, Method::MatchConditional, nullptr, &one_sided, boot(), Stream(1)).failed());

  // unconditional logistic over the 8 matched subjects: 3/4 vs 2/4
  const auto u = or_estimate(d, Method::MatchUnadjusted, nullptr, &m, boot(), Stream(1));
  CHECK(std::abs(*u.point - std::log(3.0)) < 1e-8);
}

TEST_CASE("g-computation odds ratio collapses to the crude odds ratio") {
  const Dataset full = testutil::random_dataset(40, 2, 19);
  const Dataset bare(Matrix(40, 0), full.treatment(), full.outcome());
  const auto g = or_estimate(bare, Method::Gcomp, nullptr, nullptr, boot(), Stream(4));
  const auto c = crude_or(bare);
  CHECK(std::abs(*g.point - *c.point) < 1e-8);
  CHECK_FALSE(g.se);
  CHECK(g.ci->lower <= g.ci->upper);
}

TEST_CASE("adjusted and weighted logistic fits match an independent Newton fit") {
  const Dataset d = testutil::random_dataset(150, 2, 23);
  const Index n = d.size();
  Matrix x(n, 4);
  x << Vector::Ones(n), d.treatment(), d.covariates();
  const auto y = testutil::to_vec(d.outcome());
  const auto beta = oracle::logistic(testutil::to_rows(x), y, oracle::Vec(n, 1.0));
  const auto adj = or_estimate(d, Method::CovAdjusted, nullptr, nullptr, boot(), Stream(1));
  CHECK(std::abs(*adj.point - beta[1]) < 1e-8);

  const auto ps = estimate_ps(d);
  const auto w = iptw_weights(ps, d.treatment());
  Matrix xa(n, 2);
  xa << Vector::Ones(n), d.treatment();
  const auto rows = testutil::to_rows(xa);
  const auto wv = testutil::to_vec(w.weights);
  const auto bw = oracle::logistic(rows, y, wv);
  const auto iptw = or_estimate(d, Method::Iptw, &ps, nullptr, boot(), Stream(1));
  CHECK(std::abs(*iptw.point - bw[1]) < 1e-8);

  oracle::Vec info(n), meat(n);
  for (Index i = 0; i < n; ++i) {
    const double p = oracle::expit(oracle::dot(rows[i], bw));
    info[i] = wv[i] * p * (1 - p);
    meat[i] = wv[i] * wv[i] * (y[i] - p) * (y[i] - p);
  }
  const auto cov = oracle::sandwich(oracle::inverse(oracle::weighted_gram(rows, info)), rows, meat);
  CHECK(std::abs(*iptw.se - std::sqrt(cov[1][1])) < 1e-8);
}

TEST_CASE("odds-ratio inputs are checked") {
  const Dataset d = testutil::two_by_two();
  CHECK_THROWS_AS(or_estimate(d, Method::Aipw, nullptr, nullptr, boot(), Stream(1)), std::invalid_argument);
  CHECK_THROWS_AS(or_estimate(d, Method::Iptw, nullptr, nullptr, boot(), Stream(1)), std::invalid_argument);
  CHECK_FALSE(in_registry(kOR, Method::Matched));
  CHECK(in_registry(kOR, Method::MatchConditional));
}
