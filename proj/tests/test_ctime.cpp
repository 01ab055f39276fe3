#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "urnfield/ctime.hpp"
#include "urnfield/errors.hpp"

using namespace urnfield;

namespace {

const ReinforcementSeq kSq = make_polynomial({0, 0, 1});

}  // namespace

TEST_CASE("embedding initialisation") {
  const auto s = init_embedding(2, {1, 1}, 2, kSq, 1);
  CHECK(s.timers[0].rate == 1.0);
  CHECK(s.timers[1].rate == 1.0);
  const auto t = init_embedding(3, {2, 1, 1}, 2, kSq, 1);
  CHECK(t.timers[0].rate == 4.0);
  CHECK(t.timers[1].rate == 1.0);
  CHECK(t.timers[2].rate == 1.0);
  CHECK_THROWS_AS(init_embedding(2, {0, 1}, 2, kSq, 1), InvalidArgument);
  CHECK(extract_discrete(t, 0) == std::vector<std::uint64_t>{2, 1, 1});
  CHECK_THROWS_AS(extract_discrete(t, 1), InvalidArgument);
}

TEST_CASE("the smallest remaining time rings first") {
  auto s = init_embedding(2, {1, 1}, 2, kSq, 1);
  s.timers[0].anchor = 0.1;
  s.timers[1].anchor = 5.0;
  const auto ev = advance_to_next_jump(s);
  CHECK(ev.edge == 0);
  CHECK(ev.tau == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(remaining_time(s, 1) == doctest::Approx(4.9).epsilon(1e-15));
  CHECK_FALSE(ev.refresh);
}

TEST_CASE("jump log invariants") {
  for (int d : {1, 2, 3}) {
    auto s = init_embedding(3, {1, 2, 1}, d, make_polynomial({1, 1, 1}), 42);
    double prev = 0.0;
    for (int k = 1; k <= 300; ++k) {
      const auto ev = advance_to_next_jump(s);
      CHECK(ev.tau > prev);
      prev = ev.tau;
      std::uint64_t moved = 0;
      for (int i = 0; i < 3; ++i) moved += s.Z[i] - s.a[i];
      CHECK(moved == s.n);
      CHECK(ev.refresh == (s.n % d == 0));
    }
    CHECK(s.log.size() == 300);
  }
}

TEST_CASE("refresh rescales remaining time of edges whose count changed") {
  const auto seq = make_polynomial({1, 0, 1});
  auto s = init_embedding(3, {1, 1, 1}, 3, seq, 5);
  for (int jump = 0; jump < 600; ++jump) {
    std::vector<double> before(3);
    for (int i = 0; i < 3; ++i) before[i] = remaining_time(s, i);
    const auto zref_old = s.Zref;
    const auto ev = advance_to_next_jump(s);
    if (!ev.refresh) continue;
    const double dt = before[ev.edge];
    for (int i = 0; i < 3; ++i) {
      if (i == ev.edge) {
        // A timer launched on the boundary starts at the refreshed rate.
        CHECK(s.timers[i].rate == seq.weight(s.Z[i]));
        continue;
      }
      const double expect = (before[i] - dt) * seq.weight(zref_old[i]) / seq.weight(s.Z[i]);
      CHECK(remaining_time(s, i) == doctest::Approx(expect).epsilon(1e-10));
      CHECK(remaining_time(s, i) > 0.0);
    }
    // A second refresh with unchanged counts does nothing.
    std::vector<double> after(3);
    for (int i = 0; i < 3; ++i) after[i] = remaining_time(s, i);
    refresh_rates(s);
    for (int i = 0; i < 3; ++i) CHECK(remaining_time(s, i) == after[i]);
  }
}

TEST_CASE("sigma decomposition") {
  SUBCASE("d = 1 has a single term") {
    auto s = init_embedding(2, {1, 1}, 1, kSq, 3);
    for (int k = 0; k < 200; ++k) advance_to_next_jump(s);
    for (int e = 0; e < 2; ++e) {
      for (std::uint64_t v = s.a[e]; v < s.Z[e]; ++v) {
        const auto segs = sigma_decomposition(s, e, v);
        REQUIRE(segs.size() == 1);
        const auto& rec = s.records[s.records_by_edge[e][v - s.a[e]]];
        CHECK(segs[0].mass == doctest::Approx(rec.xi).epsilon(1e-12));
        CHECK(holding_time(s, e, v) == doctest::Approx(rec.xi / kSq.weight(v)).epsilon(1e-10));
      }
    }
  }
  SUBCASE("general d: masses, reconstruction and the sandwich") {
    // Linear weights keep all edges active, so many timers straddle a refresh.
    const auto seq = make_polynomial({1, 1});
    for (int d : {2, 3, 4}) {
      auto s = init_embedding(3, {1, 1, 2}, d, seq, 17 + d);
      for (int k = 0; k < 600; ++k) advance_to_next_jump(s);
      int multi = 0;
      for (int e = 0; e < 3; ++e) {
        for (std::uint64_t v = s.a[e]; v < s.Z[e]; ++v) {
          const auto segs = sigma_decomposition(s, e, v);
          const auto& rec = s.records[s.records_by_edge[e][v - s.a[e]]];
          double mass = 0.0, recon = 0.0, wmin = INFINITY, wmax = 0.0;
          for (const auto& g : segs) {
            CHECK(g.mass >= 0.0);
            mass += g.mass;
            recon += g.mass / seq.weight(g.w_arg);
          }
          CHECK(segs.size() <= static_cast<std::size_t>(d));
          multi += segs.size() > 1;
          CHECK(mass == doctest::Approx(rec.xi).epsilon(1e-10));
          const double hold = holding_time(s, e, v);
          CHECK(recon == doctest::Approx(hold).epsilon(1e-10));
          for (int l = 0; l < d; ++l) {
            if (v < static_cast<std::uint64_t>(l)) break;
            wmin = std::min(wmin, seq.weight(v - l));
            wmax = std::max(wmax, seq.weight(v - l));
          }
          CHECK(hold >= rec.xi / wmax * (1 - 1e-12));
          CHECK(hold <= rec.xi / wmin * (1 + 1e-12));
        }
      }
      CHECK(multi > 0);
    }
  }
  auto s = init_embedding(2, {1, 1}, 2, kSq, 3);
  CHECK_THROWS_AS(sigma_decomposition(s, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(sigma_decomposition(s, 5, 1), InvalidArgument);
}

TEST_CASE("exponential race probabilities") {
  const int n = 100000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    auto s = init_embedding(2, {2, 1}, 1, kSq, 1000 + i, {false, false, false});
    first += advance_to_next_jump(s).edge == 0;
  }
  const double q = 0.8;  // 4 / (4 + 1)
  CHECK(std::abs(first / double(n) - q) < 3 * std::sqrt(q * (1 - q) / n));

  int left = 0;
  for (int i = 0; i < n; ++i) {
    left += sample_embedding(2, {1, 1}, 1, kSq, 7000000 + i, 1)[0] == 2;
  }
  CHECK(std::abs(left / double(n) - 0.5) < 3 * std::sqrt(0.25 / n));
}

TEST_CASE("k = 0 sample is the initial composition") {
  CHECK(sample_embedding(3, {2, 1, 5}, 2, kSq, 1, 0) == std::vector<std::uint64_t>{2, 1, 5});
}
