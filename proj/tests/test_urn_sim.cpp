#include <cmath>
#include <numeric>

#include "doctest.h"
#include "urnfield/errors.hpp"
#include "urnfield/meanfield.hpp"
#include "urnfield/stats.hpp"
#include "urnfield/urn_sim.hpp"

using namespace urnfield;

namespace {

const ReinforcementSeq kSq = make_polynomial({0, 0, 1});

std::uint64_t total(const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), 0ULL); }

}  // namespace

TEST_CASE("black probability") {
  CHECK(black_probability(kSq, 3, 1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(black_probability(kSq, 0, 2) == 0.0);
  CHECK_THROWS_AS(black_probability(kSq, 0, 0), ConditionViolation);
  // Both weights beyond the linear cap: the log-space ratio takes over.
  const auto e = make_exponential(2.0);
  CHECK(black_probability(e, 2001, 2000) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(black_probability(e, 5000, 1) == 1.0);
}

TEST_CASE("interacting urn initialisation") {
  const auto s = init_ium(2, {1, 1}, {1, 1}, 0.3, kSq, 1);
  CHECK(proportions(s) == std::vector<double>{0.5, 0.5});
  CHECK_THROWS_AS(init_ium(2, {0, 0}, {1, 1}, 0.3, kSq, 1), InvalidArgument);
  CHECK_THROWS_AS(init_ium(2, {1}, {1, 1}, 0.3, kSq, 1), InvalidArgument);
  CHECK_THROWS_AS(init_ium(2, {1, 1}, {1, 1}, 1.3, kSq, 1), InvalidArgument);
  CHECK_THROWS_AS(init_ium(2, {1, 1}, {1, 1}, 0.3, make_table({1, 2}, std::nullopt), 1), InvalidArgument);
  const auto five = init_ium(5, {1, 2, 0, 4, 1}, {3, 0, 2, 1, 1}, 0.5, kSq, 2);
  CHECK(five.black_total() == 8);
  CHECK(five.red_total() == 7);
}

TEST_CASE("step probabilities follow the local or global pool") {
  auto s = init_ium(2, {3, 1}, {1, 5}, 0.0, kSq, 1);
  CHECK(ium_black_probability(s, 0, false) == doctest::Approx(0.9));
  CHECK(ium_black_probability(s, 1, false) == doctest::Approx(1.0 / 26.0));
  CHECK(ium_black_probability(s, 1, true) == doctest::Approx(16.0 / (16.0 + 36.0)));
  // With p = 1 every urn draws from the global ratio: one uniform just below it gives black everywhere.
  auto g = init_ium(2, {3, 1}, {1, 5}, 1.0, kSq, 1);
  const double q = 16.0 / 52.0;
  step_ium(g, {{true, q - 1e-9}, {true, q - 1e-9}});
  CHECK(g.B == std::vector<std::uint64_t>{4, 2});
  step_ium(g, {{true, 0.99}, {true, 0.99}});
  CHECK(g.R == std::vector<std::uint64_t>{2, 6});
}

TEST_CASE("forced draws and proportions") {
  auto s = init_ium(2, {1, 1}, {1, 1}, 0.5, kSq, 1);
  for (int k = 0; k < 10; ++k) step_ium(s, {{false, 0.0}, {false, 0.999999}});
  CHECK(proportions(s)[0] == doctest::Approx(11.0 / 12.0).epsilon(1e-15));
  // Urn 2 got only red.
  CHECK(proportions(s)[1] == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(s.R[0] == 1);
}

TEST_CASE("count conservation in every simulator") {
  auto s = init_ium(3, {1, 2, 1}, {2, 1, 1}, 0.4, kSq, 3);
  for (int k = 1; k <= 2000; ++k) {
    step_ium(s);
    for (int i = 0; i < 3; ++i) CHECK(s.B[i] + s.R[i] == s.B0[i] + s.R0[i] + k);
    CHECK(s.black_total() + s.red_total() == 3u * k + 8);
  }
  auto mc = init_multicolor(3, {1, 2, 3}, 4, kSq, 4);
  for (int k = 1; k <= 2000; ++k) {
    const auto before = mc.N;
    step_multicolor(mc);
    CHECK(total(mc.N) == 6u + 4u * k);
    for (int i = 0; i < 3; ++i) CHECK(mc.N[i] >= before[i]);
  }
  auto sq = init_sequential({1, 2}, {2, 1}, kSq, 5);
  for (int k = 1; k <= 2000; ++k) {
    step_sequential(sq);
    CHECK(sq.black_total() + sq.red_total() == 6u + k);
  }
}

TEST_CASE("run and determinism") {
  auto a = init_ium(2, {1, 1}, {1, 1}, 0.2, make_polynomial({0, 0, 0, 1}), 7);
  auto b = init_ium(2, {1, 1}, {1, 1}, 0.2, make_polynomial({0, 0, 0, 1}), 7);
  const auto ta = run(a, 10000, 100, 7);
  const auto tb = run(b, 10000, 100, 7);
  CHECK(ta.steps == tb.steps);
  CHECK(ta.proportions == tb.proportions);
  CHECK(ta.steps.size() == 101);
  for (std::size_t k = 1; k < ta.steps.size(); ++k) CHECK(ta.steps[k] > ta.steps[k - 1]);
  for (const auto& x : ta.proportions) {
    for (double v : x) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  auto z = init_ium(2, {1, 1}, {1, 1}, 0.2, kSq, 7);
  CHECK(run(z, 0, 10).steps.size() == 1);
}

TEST_CASE("urns are uncorrelated at p = 0") {
  auto s = init_ium(2, {1, 1}, {1, 1}, 0.0, make_polynomial({1, 1}), 11);
  std::vector<double> a, b;
  for (int k = 0; k < 100000; ++k) {
    step_ium(s);
    a.push_back(s.last_xi[0]);
    b.push_back(s.last_xi[1]);
  }
  // Under independence the sample correlation has standard error about 1/sqrt(n).
  CHECK(std::abs(stats::correlation(a, b)) < 3.0 / std::sqrt(100000.0));
}

TEST_CASE("colour swap with the complementary stream mirrors the path") {
  const auto seq = make_polynomial({0.5, 1, 1});
  auto s = init_ium(3, {1, 2, 3}, {4, 1, 2}, 0.35, seq, 99);
  auto m = init_ium(3, {4, 1, 2}, {1, 2, 3}, 0.35, seq, 99);
  m.complement_uniform = true;
  for (int k = 0; k < 5000; ++k) {
    step_ium(s);
    step_ium(m);
    REQUIRE(s.B == m.R);
    REQUIRE(s.R == m.B);
  }
}

TEST_CASE("monopoly detection") {
  Trajectory t;
  for (std::uint64_t k = 0; k <= 100; ++k) {
    t.steps.push_back(k);
    t.proportions.push_back({0.5, 0.5});
    t.color_totals.push_back({10 + k, k < 40 ? 10 + k : 50});
  }
  CHECK(detect_monopoly(t, 50) == 0);
  CHECK(detect_monopoly(t, 60) == 0);
  CHECK(detect_monopoly(t, 70) == kNoColor);
  CHECK_THROWS_AS(detect_monopoly(t, 101), InvalidArgument);
  CHECK_THROWS_AS(detect_monopoly(t, 0), InvalidArgument);
  // Monotone in the window on a simulated log.
  auto s = init_multicolor(2, {1, 1}, 1, make_polynomial({1, 2, 1}), 5);
  const auto tr = run(s, 20000, 10);
  int prev = detect_monopoly(tr, 19000);
  for (std::uint64_t w = 18000; w >= 1000; w -= 1000) {
    const int c = detect_monopoly(tr, w);
    if (prev != kNoColor) CHECK(c == prev);
    prev = c;
  }
}

TEST_CASE("limit classification") {
  Trajectory t;
  for (std::uint64_t k = 0; k < 40; ++k) {
    t.steps.push_back(k);
    t.proportions.push_back({0.999, 0.999});
  }
  const std::vector<std::vector<double>> targets{{0, 0}, {0.5, 0.5}, {1, 1}};
  CHECK(classify_limit(t, targets, 0.05) == 2);
  for (std::uint64_t k = 30; k < 40; ++k) t.proportions[k] = (k % 2) ? std::vector<double>{0.999, 0.999}
                                                                     : std::vector<double>{0.001, 0.001};
  CHECK(classify_limit(t, targets, 0.05) == kUnresolved);
  CHECK_THROWS_AS(classify_limit(t, std::vector<std::vector<double>>{}, 0.05), InvalidArgument);
  const auto eqs = meanfield::find_equilibria({2, 0.0}).points;
  t.proportions.assign(40, {0.01, 0.52});
  const int label = classify_limit(t, eqs, 0.05);
  REQUIRE(label >= 0);
  CHECK(eqs[label].x == 0.0);
  CHECK(eqs[label].y == 0.5);
}

TEST_CASE("multicolour urn") {
  CHECK_THROWS_AS(init_multicolor(2, {0, 1}, 1, kSq, 1), InvalidArgument);
  CHECK_THROWS_AS(init_multicolor(1, {1}, 1, kSq, 1), InvalidArgument);
  const auto s = init_multicolor(4, {3, 3, 3, 3}, 2, make_exponential(3.0), 1);
  for (double q : multicolor_probabilities(s)) CHECK(q == doctest::Approx(0.25).epsilon(1e-15));
  // Nc = 2, d = 1 is the single two-colour urn.
  auto mc = init_multicolor(2, {3, 1}, 1, kSq, 1);
  CHECK(multicolor_probabilities(mc)[0] == doctest::Approx(black_probability(kSq, 3, 1)).epsilon(1e-15));
}

TEST_CASE("sequential process") {
  auto s = init_sequential({1, 1}, {1, 1}, kSq, 1);
  CHECK(sequential_black_probability(s) == doctest::Approx(0.2).epsilon(1e-15));
  auto red_first = s;
  step_sequential(red_first, 0.99);
  CHECK(red_first.Rt[0] == 2);
  CHECK(sequential_black_probability(red_first) == doctest::Approx(0.1).epsilon(1e-15));  // W(1)/(W(1)+W(3))
  auto black_first = s;
  step_sequential(black_first, 0.0);
  CHECK(black_first.Bt[0] == 2);
  CHECK(sequential_black_probability(black_first) == doctest::Approx(0.2).epsilon(1e-15));
  // A forced all-black stream never touches the red pool.
  for (int k = 0; k < 100; ++k) step_sequential(black_first, 0.0);
  CHECK(black_first.red_total() == 2);
}

TEST_CASE("coupling holds pathwise") {
  for (double p : {0.0, 0.4, 1.0}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto run = run_coupled({1, 1}, {1, 1}, p, kSq, seed, 10000, 1000);
      CHECK(run.violations == 0);
      CHECK(run.cumulative_violations.back() == 0);
    }
  }
  const auto zero = run_coupled({2, 1}, {1, 3}, 0.4, kSq, 3, 0);
  CHECK(zero.violations == 0);
  CHECK(zero.ium.color_totals[0] == zero.sequential.color_totals[0]);
  CHECK_THROWS_AS(run_coupled({1, 1}, {1, 1}, 0.4, make_interleaved_quartic(), 1, 100), InvalidArgument);
  CHECK_THROWS_AS(run_coupled({1, 1}, {1, 1}, 0.4, make_table({5, 4, 3, 2, 1}, TailRule{1, {PolyPart{{1}}}}), 1, 10),
                  InvalidArgument);
}
