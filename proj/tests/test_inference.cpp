#include <doctest.h>

#include <cmath>
#include <random>

#include "spansel/errors.hpp"
#include "spansel/inference.hpp"
#include "test_util.hpp"

using namespace spansel;
using namespace spansel::testing;

namespace {

double max_marginal_gap(const MarginalTable& a, const MarginalTable& b) {
  double gap = 0.0;
  for (std::size_t c = 0; c < a.interest_values().size(); ++c) {
    gap = std::max(gap, std::abs(a.interest_values()[c] - b.interest_values()[c]));
    gap = std::max(gap, std::abs(a.non_interest_values()[c] - b.non_interest_values()[c]));
  }
  return gap;
}

ScoreTable cky_example_scores() {
  ScoreTable s(3);
  for (std::size_t i = 0; i < 3; ++i) s.set(i, i + 1, -1.0);
  s.set(0, 2, 1.0);
  s.set(1, 3, 0.5);
  return s;
}

}  // namespace

TEST_CASE("tree enumeration counts") {
  ScoreTable zero2(2), zero3(3), zero4(4);
  std::size_t count = 0;
  enumerate_trees(2, zero2, [&](const LabeledTree&, double) { ++count; });
  CHECK(count == 4);
  count = 0;
  enumerate_trees(3, zero3, [&](const LabeledTree&, double) { ++count; });
  CHECK(count == 32);
  count = 0;
  enumerate_trees(4, zero4, [&](const LabeledTree&, double) { ++count; });
  CHECK(count == 320);
  CHECK(count_trees(4) == 320);
  CHECK(count_trees(6) == 42 * 1024);
  ScoreTable big(9);
  CHECK_THROWS_AS(enumerate_trees(9, big, [](const LabeledTree&, double) {}), RangeError);
  ScoreTable one(1);
  CHECK_THROWS_AS(enumerate_trees(1, one, [](const LabeledTree&, double) {}), RangeError);
}

TEST_CASE("log partition on small sentences") {
  // Values confirmed by enumeration: 4 trees, 32 trees, and 8 of 32 doubled.
  CHECK(inside(ScoreTable(2)).log_z() == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(brute_force(ScoreTable(2)).log_z == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(inside(ScoreTable(3)).log_z() == doctest::Approx(std::log(32.0)).epsilon(1e-14));
  ScoreTable s(3);
  s.set(0, 2, std::log(2.0));
  CHECK(inside(s).log_z() == doctest::Approx(std::log(40.0)).epsilon(1e-14));
  CHECK(brute_force(s).log_z == doctest::Approx(std::log(40.0)).epsilon(1e-14));
}

TEST_CASE("inside rejects sentences without a parse") {
  CHECK_THROWS_AS(inside(ScoreTable(1)), UnsupportedLength);
  CHECK_THROWS_AS(cky(ScoreTable(1)), UnsupportedLength);
  CHECK_THROWS_AS(marginals(ScoreTable(0)), UnsupportedLength);
}

TEST_CASE("outside values") {
  SUBCASE("root") {
    ScoreTable s(4, 0.3);
    Chart c = inside(s);
    outside(c, s);
    CHECK(c.outside(0, 4, NonTerminal::Start) == 0.0);
    CHECK(std::isinf(c.outside(0, 4, NonTerminal::Interest)));
  }
  SUBCASE("n=3 zeros: (0,2) is a constituent in half the mass") {
    ScoreTable s(3);
    Chart c = inside(s);
    outside(c, s);
    double mass = 0.0;
    for (NonTerminal x : {I, N}) mass += std::exp(c.outside(0, 2, x) + c.inside(0, 2, x) - c.log_z());
    CHECK(mass == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("n=2: every tree has (0,1)") {
    ScoreTable s(2);
    s.set(0, 1, 0.7);
    Chart c = inside(s);
    outside(c, s);
    double mass = 0.0;
    for (NonTerminal x : {I, N}) mass += std::exp(c.outside(0, 1, x) + c.inside(0, 1, x) - c.log_z());
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("requires inside first") {
    Chart c = inside(ScoreTable(3));
    CHECK_THROWS_AS(c.outside(0, 1, I), ContractViolation);
  }
}

TEST_CASE("marginal examples") {
  CHECK(marginals(ScoreTable(2))(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(marginals(ScoreTable(3))(0, 2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(brute_force(ScoreTable(3)).marginals(1, 3) == doctest::Approx(0.25).epsilon(1e-14));
  ScoreTable s(3);
  s.set(0, 2, std::log(2.0));
  CHECK(marginals(s)(0, 2) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(brute_force(s).marginals(0, 2) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("whole-sentence span is structurally never Interest") {
  std::mt19937_64 rng(5);
  for (std::size_t n = 2; n <= 5; ++n) {
    const auto s = random_scores(n, rng);
    CHECK(marginals(s)(0, n) == 0.0);
    CHECK(brute_force(s).marginals(0, n) == 0.0);
    CHECK(brute_force(s).marginals.non_interest(0, n) == 0.0);
  }
}

TEST_CASE("cky examples") {
  SUBCASE("n=3 mixed scores") {
    const auto s = cky_example_scores();
    const auto v = cky(s);
    CHECK(v.best_log_score == 1.0);
    CHECK(v.interest_spans == std::vector<Span>{{0, 0, 2}});
    CHECK(brute_force(s).viterbi.best_log_score == 1.0);
  }
  SUBCASE("ties prefer NonInterest") {
    const auto v = cky(ScoreTable(2));
    CHECK(v.best_log_score == 0.0);
    CHECK(v.interest_spans.empty());
    CHECK(v.selection.size() == 2);
  }
  SUBCASE("ties prefer the smallest split") {
    const auto v = cky(ScoreTable(4));
    // Left-branching tree: (0,1),(0,2),(0,3) plus leaves.
    std::vector<Span> spans;
    for (const auto& ls : v.selection) spans.push_back(ls.span);
    CHECK(std::find(spans.begin(), spans.end(), Span{0, 1, 4}) != spans.end());
  }
  SUBCASE("all positive scores select 2n - 2 spans") {
    for (std::size_t n = 2; n <= 12; ++n) CHECK(cky(ScoreTable(n, 1.0)).interest_spans.size() == 2 * n - 2);
  }
}

TEST_CASE("dynamic programs agree with enumeration") {
  std::mt19937_64 rng(2024);
  for (std::size_t n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto s = random_scores(n, rng);
      const auto brute = brute_force(s);
      CHECK(std::abs(inside(s).log_z() - brute.log_z) <= 1e-9);
      CHECK(max_marginal_gap(marginals(s), brute.marginals) <= 1e-9);
      const auto v = cky(s);
      CHECK(std::abs(v.best_log_score - brute.viterbi.best_log_score) <= 1e-9);
      // Random continuous scores have a unique argmax.
      CHECK(v.interest_spans == brute.viterbi.interest_spans);
    }
  }
}

TEST_CASE("marginals are the derivative of log Z") {
  std::mt19937_64 rng(7);
  const double h = 1e-6;
  for (std::size_t n = 2; n <= 8; ++n) {
    auto s = random_scores(n, rng);
    const auto m = marginals(s);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k <= n; ++k) {
        const double orig = s(i, k);
        s.set(i, k, orig + h);
        const double up = inside(s).log_z();
        s.set(i, k, orig - h);
        const double down = inside(s).log_z();
        s.set(i, k, orig);
        CHECK(std::abs((up - down) / (2 * h) - m(i, k)) <= 1e-5);
      }
    }
  }
}

TEST_CASE("marginal normalization") {
  std::mt19937_64 rng(99);
  for (std::size_t n = 2; n <= 40; n += 3) {
    const auto s = random_scores(n, rng, -4.0, 4.0);
    const auto m = marginals(s);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(m.interest(i, i + 1) + m.non_interest(i, i + 1) - 1.0) <= 1e-9);
      for (std::size_t k = i + 1; k <= n; ++k) {
        CHECK(m(i, k) >= 0.0);
        CHECK(m(i, k) <= 1.0 + 1e-12);
        total += m.constituent(i, k);
      }
    }
    CHECK(std::abs(total - static_cast<double>(2 * n - 2)) <= 1e-9);
  }
}

TEST_CASE("raising a span score raises its marginal") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_scores(6, rng);
    std::uniform_int_distribution<std::size_t> start(0, 4);
    const std::size_t i = start(rng);
    std::uniform_int_distribution<std::size_t> end(i + 1, i == 0 ? 5 : 6);
    const std::size_t k = end(rng);
    const double before = marginals(s)(i, k);
    s.set(i, k, s(i, k) + 0.25);
    CHECK(marginals(s)(i, k) > before);
  }
}

TEST_CASE("log-space inference stays finite on long sentences with large scores") {
  std::mt19937_64 rng(1);
  const auto s = random_scores(150, rng, -30.0, 30.0);
  const auto c = inside(s);
  CHECK(std::isfinite(c.log_z()));
  const auto m = marginals(s);
  for (double p : m.interest_values()) CHECK(std::isfinite(p));
}
