#include <doctest.h>

#include <cmath>

#include "causal/failure.hpp"
#include "causal/resampling.hpp"
#include "test_util.hpp"

using namespace causal;

namespace {

Dataset coin_flips(Index n, std::uint64_t seed) {
  Stream rng(seed);
  Vector a(n), y(n);
  for (Index i = 0; i < n; ++i) {
    a[i] = static_cast<double>(i % 2);
    y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  return Dataset(Matrix(n, 0), a, y);
}

std::optional<double> outcome_mean(const Dataset& d) { return d.outcome().mean(); }

BootstrapConfig config(std::size_t b, unsigned workers = 1) {
  BootstrapConfig c;
  c.replications = b;
  c.workers = workers;
  return c;
}

}  // namespace

TEST_CASE("constant estimator gives a degenerate interval") {
  const Dataset d = coin_flips(30, 1);
  const auto ci = bootstrap_percentile_ci(d, [](const Dataset&) { return std::optional(0.37); },
                                          config(50), Stream(2));
  CHECK(ci.lower == 0.37);
  CHECK(ci.upper == 0.37);
}

TEST_CASE("percentile width of a proportion") {
  const Dataset d = coin_flips(400, 3);
  const auto ci = bootstrap_percentile_ci(d, outcome_mean, config(2000), Stream(4));
  const double p = d.outcome().mean();
  const double normal = 2 * 1.959963984540054 * std::sqrt(p * (1 - p) / 400.0);
  CHECK(std::abs(ci.length() / normal - 1.0) < 0.15);
  CHECK(ci.lower <= p);
  CHECK(ci.upper >= p);
}

TEST_CASE("results do not depend on worker count") {
  const Dataset d = coin_flips(57, 5);
  for (std::size_t b : {4u, 97u}) {
    const auto one = bootstrap_distribution(d, outcome_mean, config(b, 1), Stream(6));
    const auto ci1 = bootstrap_percentile_ci(d, outcome_mean, config(b, 1), Stream(6));
    for (unsigned w : {2u, 3u, 8u}) {
      const auto many = bootstrap_distribution(d, outcome_mean, config(b, w), Stream(6));
      CHECK(many.estimates == one.estimates);
      const auto ci = bootstrap_percentile_ci(d, outcome_mean, config(b, w), Stream(6));
      CHECK(ci.lower == ci1.lower);
      CHECK(ci.upper == ci1.upper);
    }
  }
}

TEST_CASE("replicate b resamples from substream b") {
  const Dataset d = coin_flips(25, 7);
  const Stream rng(8);
  const auto dist = bootstrap_distribution(d, outcome_mean, config(6), rng);
  REQUIRE(dist.estimates.size() == 6);
  for (std::size_t b = 0; b < 6; ++b) {
    Stream sub = rng.substream(b);
    const auto idx = resample_indices(25, sub);
    CHECK(dist.estimates[b] == d.rows(idx).outcome().mean());
  }
}

TEST_CASE("failed evaluations are dropped until they exceed the limit") {
  const Dataset d = coin_flips(20, 9);
  int calls = 0;
  // fails on every other call: exactly half
  const PointEstimator half = [&calls](const Dataset& x) -> std::optional<double> {
    if (calls++ % 2 == 0) return std::nullopt;
    return x.outcome().mean();
  };
  const auto dist = bootstrap_distribution(d, half, config(10), Stream(1));
  CHECK(dist.failures == 5);
  CHECK(dist.estimates.size() == 5);
  calls = 0;
  CHECK_NOTHROW(bootstrap_percentile_ci(d, half, config(10), Stream(1)));

  const PointEstimator thrower = [](const Dataset& x) -> std::optional<double> {
    if (x.outcome().mean() < 2.0) throw ModelError(FailureReason::Separation, "x");
    return 0.0;
  };
  try {
    bootstrap_percentile_ci(d, thrower, config(10), Stream(1));
    FAIL("expected collapse");
  } catch (const ModelError& e) {
    CHECK(e.reason() == FailureReason::BootstrapCollapse);
  }
  const PointEstimator nan = [](const Dataset&) { return std::optional(std::nan("")); };
  CHECK(bootstrap_distribution(d, nan, config(4), Stream(1)).failures == 4);
}

TEST_CASE("bootstrap config validation") {
  CHECK_THROWS_AS(config(1).validate(), std::invalid_argument);
  BootstrapConfig c = config(10);
  c.lower_percentile = 0.9;
  c.upper_percentile = 0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(config(2).validate());
}

TEST_CASE("resample indices are uniform") {
  Stream rng(12);
  const Index n = 100;
  std::vector<double> counts(n, 0.0);
  for (int round = 0; round < 10000; ++round) {
    for (Index i : resample_indices(n, rng)) counts[static_cast<std::size_t>(i)] += 1;
  }
  double chi = 0;
  for (double c : counts) chi += (c - 10000.0) * (c - 10000.0) / 10000.0;
  // chi-square, 99 df, upper 0.001 point
  CHECK(chi < 148.23);
}

TEST_CASE("interval endpoints are ordered") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = coin_flips(15, seed);
    const auto ci = bootstrap_percentile_ci(d, outcome_mean, config(11), Stream(seed));
    CHECK(ci.lower <= ci.upper);
  }
}
