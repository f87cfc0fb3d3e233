#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "causal/failure.hpp"
#include "causal/propensity.hpp"
#include "causal/simulation.hpp"
#include "test_util.hpp"

using namespace causal;
using testutil::vec;

namespace {

PropensityScores from_logits(const Vector& logits) {
  PropensityScores ps;
  ps.logits = logits;
  ps.probabilities = logits.unaryExpr([](double e) { return expit(e); });
  return ps;
}

double sd(const Vector& v) {
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("twelve-subject propensity model matches a reference GLM") {
  Matrix l(12, 2);
  l.col(0) = vec({0.3, -1.2, 0.8, 1.5, -0.4, 0.0, 2.1, -0.9, 0.6, -1.7, 1.1, 0.2});
  l.col(1) = vec({1, 0, 1, 1, 0, 0, 1, 0, 1, 0, 0, 1});
  const Vector a = vec({1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 0});
  const Dataset d(l, a, Vector::Zero(12));
  const auto ps = estimate_ps(d);
  const double frozen[12] = {0.3546114365217737,  0.021453423207083676, 0.7728377098334801,
                             0.9776195416687686,  0.28843248015624506,  0.6354287927132917,
                             0.9974390520171302,  0.06144242839431249,  0.6213096327880865,
                             0.0035282511734075076, 0.9897146243556596, 0.27618262717076114};
  for (int i = 0; i < 12; ++i) CHECK(std::abs(ps.probabilities[i] - frozen[i]) < 1e-8);
  CHECK(std::abs(ps.probabilities.mean() - a.mean()) < 1e-6);
  for (int i = 0; i < 12; ++i) CHECK(std::abs(ps.logits[i] - logit(ps.probabilities[i])) < 1e-10);
}

TEST_CASE("propensity mean equals treated fraction on random data") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = testutil::random_dataset(150, 3, seed);
    const auto ps = estimate_ps(d);
    CHECK(std::abs(ps.probabilities.mean() - static_cast<double>(d.treated_count()) / 150.0) < 1e-6);
  }
}

TEST_CASE("null propensity model") {
  Stream rng(3);
  const Index n = 20000;
  Matrix l(n, 2);
  Vector a(n);
  for (Index i = 0; i < n; ++i) {
    l(i, 0) = rng.normal(0, 1);
    l(i, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    a[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  const auto ps = estimate_ps(Dataset(l, a, Vector::Zero(n)));
  CHECK((ps.probabilities.array() - a.mean()).abs().maxCoeff() < 0.05);
}

TEST_CASE("estimate_ps rejects a single-arm dataset") {
  const Dataset d(Matrix::Ones(5, 1) * 2.0, Vector::Ones(5), Vector::Zero(5));
  try {
    estimate_ps(d);
    FAIL("expected failure");
  } catch (const ModelError& e) {
    CHECK(e.reason() == FailureReason::Separation);
  }
}

TEST_CASE("caliper matching examples") {
  const Vector logits = vec({0.0, 0.05, 2.0});
  const Vector a = vec({1, 0, 0});
  const double mult = 0.5 / sd(logits);
  const auto m = match_caliper(from_logits(logits), a, mult);
  REQUIRE(m.n_pairs() == 1);
  CHECK(m.pairs[0] == std::pair<Index, Index>{0, 1});
  CHECK(std::abs(m.caliper_width - 0.5) < 1e-12);

  const Vector far = vec({0.0, 2.0});
  try {
    match_caliper(from_logits(far), vec({1, 0}), 0.5 / sd(far));
    FAIL("expected NoPairs");
  } catch (const ModelError& e) {
    CHECK(e.reason() == FailureReason::NoPairs);
  }
}

TEST_CASE("matching ties go to the lower control index") {
  // controls 1 and 2 are equidistant from the treated subject
  const Vector logits = vec({0.0, -0.1, 0.1, 5.0});
  const auto m = match_caliper(from_logits(logits), vec({1, 0, 0, 0}), 10.0);
  REQUIRE(m.n_pairs() == 1);
  CHECK(m.pairs[0].second == 1);
  // identical logits; lower index wins
  const Vector same = vec({0.3, 0.3, 0.3, 1.0});
  const auto s = match_caliper(from_logits(same), vec({0, 1, 0, 0}), 10.0);
  CHECK(s.pairs[0].second == 0);
}

TEST_CASE("greedy matching equals the brute-force oracle") {
  // 20 treated / 16 controls, then random sizes up to 60
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Stream rng(1000 + seed);
    const Index n = seed == 0 ? 36 : 2 + static_cast<Index>(rng.below(59));
    Vector logits(n), a(n);
    for (Index i = 0; i < n; ++i) {
      // coarse grid so distance ties actually happen
      logits[i] = std::round(rng.normal(0.0, 1.0) * 8.0) / 8.0;
      a[i] = seed == 0 ? (i < 20 ? 1.0 : 0.0) : (rng.bernoulli(0.5) ? 1.0 : 0.0);
    }
    a[0] = 1.0;
    a[n - 1] = 0.0;
    const double mult = seed % 3 == 0 ? 0.2 : 0.05 + rng.uniform();
    const auto expected = oracle::greedy_match(testutil::to_vec(logits), testutil::to_vec(a), mult);
    std::vector<std::pair<long, long>> got;
    try {
      const auto m = match_caliper(from_logits(logits), a, mult);
      for (auto [t, c] : m.pairs) got.emplace_back(t, c);

      std::set<Index> used;
      for (auto [t, c] : m.pairs) {
        CHECK(a[t] == 1.0);
        CHECK(a[c] == 0.0);
        CHECK(used.insert(t).second);
        CHECK(used.insert(c).second);
        CHECK(std::abs(logits[t] - logits[c]) <= m.caliper_width);
      }
      const auto again = match_caliper(from_logits(logits), a, mult);
      CHECK(again.pairs == m.pairs);
    } catch (const ModelError& e) {
      CHECK(e.reason() == FailureReason::NoPairs);
    }
    CHECK(got == expected);
  }
}

TEST_CASE("no caliper pairs min(treated, controls)") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = testutil::random_dataset(40, 2, seed + 50);
    const auto ps = estimate_ps(d);
    const auto m = match_caliper(ps, d.treatment(), std::numeric_limits<double>::infinity());
    CHECK(static_cast<Index>(m.n_pairs()) == std::min(d.treated_count(), d.control_count()));
  }
}

TEST_CASE("iptw weights") {
  const auto half = iptw_weights(from_logits(Vector::Zero(4)), vec({1, 0, 1, 0}));
  CHECK((half.weights.array() == 2.0).all());
  const auto w = iptw_weights(from_logits(vec({logit(0.8), logit(0.8)})), vec({1, 0}));
  CHECK(std::abs(w.weights[0] - 1.25) < 1e-12);
  CHECK(std::abs(w.weights[1] - 5.0) < 1e-12);
}

TEST_CASE("iptw large-sample properties under the covid scenario") {
  Stream rng = derive_substream(5, 1, 0, StreamPurpose::Data);
  const auto study = generate_study(ScenarioSpec::covid(100000, 0.0), rng);
  const Dataset& d = study.data;
  const auto ps = estimate_ps(d);
  const auto w = iptw_weights(ps, d.treatment());
  CHECK(w.weights.minCoeff() > 1.0);
  const double n = static_cast<double>(d.size());
  double sum_t = 0, sum_c = 0;
  for (Index i = 0; i < d.size(); ++i) (d.treatment()[i] == 1.0 ? sum_t : sum_c) += w.weights[i];
  CHECK(std::abs(sum_t / n - 1.0) < 0.05);
  CHECK(std::abs(sum_c / n - 1.0) < 0.05);
  // weighted treated covariate means against overall means, standardized
  for (Index j = 0; j < d.covariate_count(); ++j) {
    const Vector col = d.covariates().col(j);
    double num = 0, den = 0;
    for (Index i = 0; i < d.size(); ++i) {
      if (d.treatment()[i] == 1.0) {
        num += w.weights[i] * col[i];
        den += w.weights[i];
      }
    }
    CHECK(std::abs(num / den - col.mean()) / sd(col) < 0.02);
  }
}

TEST_CASE("quintile dummies") {
  Vector ten(10);
  for (int i = 0; i < 10; ++i) ten[i] = i + 1;
  const auto q = ps_quintile_dummies(from_logits(ten));
  std::vector<int> sizes(5, 0);
  for (int s : q.strata) ++sizes[s];
  CHECK(sizes == std::vector<int>{2, 2, 2, 2, 2});
  CHECK(q.dummies.cols() == 4);

  try {
    ps_quintile_dummies(from_logits(Vector::Constant(10, 0.3)));
    FAIL("expected DegenerateStrata");
  } catch (const ModelError& e) {
    CHECK(e.reason() == FailureReason::DegenerateStrata);
  }

  Stream rng(8);
  Vector logits(100);
  for (int i = 0; i < 100; ++i) logits[i] = rng.normal(0, 2);
  const auto r = ps_quintile_dummies(from_logits(logits));
  const auto v = testutil::to_vec(logits);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 100; ++i) {
    int s = 0;
    while (s < 4 && logits[i] > oracle::type7(v, 0.2 * (s + 1))) ++s;
    CHECK(r.strata[i] == s);
    ++counts[r.strata[i]];
    const double row = r.dummies.row(i).sum();
    CHECK((row == 0.0 || row == 1.0));
    CHECK(row == (s == 0 ? 0.0 : 1.0));
  }
  for (int s = 0; s < 4; ++s) CHECK(std::abs(r.cutpoints[s] - oracle::type7(v, 0.2 * (s + 1))) < 1e-12);
  for (int c : counts) CHECK(std::abs(c - 20) <= 1);
  CHECK(r.dummies.sum() == 100 - counts[0]);
}
