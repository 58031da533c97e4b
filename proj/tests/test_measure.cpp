#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "pwclust/measure.hpp"
#include "support/reference.hpp"

using namespace pwclust;
using testsupport::constant_series;
using testsupport::dhat_reference;
using testsupport::series;
using Catch::Matchers::WithinAbs;

TEST_CASE("cube_index locates the containing dyadic cube") {
  std::vector<double> p0{0.0};
  CHECK(cube_index(p0, 3) == std::vector<std::uint32_t>{0});

  std::vector<double> p1{0.25, 0.75};
  CHECK(cube_index(p1, 1) == std::vector<std::uint32_t>{0, 1});

  // 0.5 sits on a boundary and belongs to the right half-open cube.
  std::vector<double> p2{0.49, 0.5};
  CHECK(cube_index(p2, 1) == std::vector<std::uint32_t>{0, 1});

  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(cube_index(bad, 1), std::domain_error);
  std::vector<double> neg{-0.1};
  CHECK_THROWS_AS(cube_index(neg, 1), std::domain_error);
}

TEST_CASE("empirical_frequency counts sliding windows") {
  TimeSeries x = series("x", {0.1, 0.6, 0.1, 0.6});
  CHECK(empirical_frequency(x, DyadicCube{1, 1, {0}}) == 0.5);

  TimeSeries shorter = series("s", {0.1, 0.2, 0.3});
  CHECK(empirical_frequency(shorter, DyadicCube{5, 1, {0, 0, 0, 0, 0}}) ==
        0.0);

  TimeSeries pairs = series("p", {0.1, 0.6, 0.1});
  CHECK(empirical_frequency(pairs, DyadicCube{2, 1, {0, 1}}) == 0.5);
}

TEST_CASE("frequency table counts partition the windows") {
  std::mt19937_64 rng(7);
  auto values = testsupport::random_unit_values(rng, 257);
  for (int u : {1, 2, 5}) {
    for (int v : {1, 3, 10}) {
      FrequencyTable table = frequency_table(values, u, v);
      CHECK(table.window_count == values.size() - u + 1);
      std::size_t total = 0;
      for (const auto& [idx, count] : table.counts) total += count;
      CHECK(total == table.window_count);
    }
  }
  FrequencyTable empty = frequency_table(std::vector<double>{0.5}, 4, 2);
  CHECK(empty.window_count == 0);
  CHECK(empty.counts.empty());
}

TEST_CASE("min_nonzero_gap over the value union") {
  TimeSeries a = series("a", {0.25});
  TimeSeries b = series("b", {0.75});
  CHECK(min_nonzero_gap(a, b) == 0.5);

  TimeSeries c = series("c", {0.1, 0.1});
  TimeSeries d = series("d", {0.1});
  CHECK_FALSE(min_nonzero_gap(c, d).has_value());

  TimeSeries e = series("e", {0.0, 0.5});
  TimeSeries f = series("f", {0.125});
  CHECK(min_nonzero_gap(e, f) == 0.125);
}

TEST_CASE("default_policy applies base-2 truncation") {
  TruncationPolicy p = default_policy(std::size_t{1024}, 0.5);
  CHECK(p.u_max == 10);
  CHECK(p.v_max == 1);

  p = default_policy(std::size_t{2}, 1.0);
  CHECK(p.u_max == 1);
  CHECK(p.v_max == 1);

  p = default_policy(std::size_t{1024}, 0x1.0p-30);
  CHECK(p.v_max == kResolutionCap);

  p = default_policy(std::size_t{1000}, 0.3);
  CHECK(p.u_max == 9);
  CHECK(p.v_max == 2);  // ceil(-log2 0.3)

  // Degenerate gap: a single level.
  p = default_policy(std::size_t{64}, std::optional<double>{});
  CHECK(p.u_max == 6);
  CHECK(p.v_max == 1);

  CHECK_THROWS_AS(default_policy(std::size_t{1}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(default_policy(std::size_t{16}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("dhat hand values for separated constants") {
  TimeSeries x = constant_series("x", 0.25, 8);
  TimeSeries y = constant_series("y", 0.75, 8);
  CHECK_THAT(dhat(x, y, 8, TruncationPolicy{1, 1}), WithinAbs(0.5, 1e-15));
  // u=2 adds w_2 * w_1 * 2 = 1/6.
  CHECK_THAT(dhat(x, y, 8, TruncationPolicy{2, 1}),
             WithinAbs(0.5 + 1.0 / 6.0, 1e-15));
}

TEST_CASE("dhat identity and symmetry are exact") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 20 + rng() % 200;
    auto va = trial % 2 ? testsupport::random_unit_values(rng, n)
                        : testsupport::random_dyadic_values(rng, n);
    auto vb = trial % 2 ? testsupport::random_unit_values(rng, n)
                        : testsupport::random_dyadic_values(rng, n);
    TruncationPolicy policy = default_policy(n, min_nonzero_gap(va, vb));
    CHECK(dhat(va, va, n, policy) == 0.0);
    CHECK(dhat(va, vb, n, policy) == dhat(vb, va, n, policy));
  }
}

TEST_CASE("dhat preconditions") {
  TimeSeries x = constant_series("x", 0.25, 4);
  TimeSeries y = constant_series("y", 0.75, 8);
  CHECK_THROWS_AS(dhat(x, y, 6, TruncationPolicy{1, 1}),
                  std::invalid_argument);
  TimeSeries raw = series("raw", {1.5, 2.0});
  CHECK_THROWS_AS(dhat(raw, raw, 2, TruncationPolicy{1, 1}),
                  std::domain_error);
}

TEST_CASE("dhat matches the direct per-scale reference") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 10 + rng() % 120;
    bool dyadic = trial % 3 != 0;
    auto va = dyadic ? testsupport::random_dyadic_values(rng, n)
                     : testsupport::random_unit_values(rng, n);
    auto vb = dyadic ? testsupport::random_dyadic_values(rng, n)
                     : testsupport::random_unit_values(rng, n);
    TruncationPolicy policy{1 + static_cast<int>(rng() % 5),
                            1 + static_cast<int>(rng() % 6)};
    std::size_t n_eff = 1 + rng() % n;
    double fast = dhat(va, vb, n_eff, policy);
    double slow = dhat_reference(va, vb, n_eff, policy);
    CHECK_THAT(fast, WithinAbs(slow, 1e-12));
  }
}

TEST_CASE("dhat triangle inequality and bound") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 16 + rng() % 64;
    auto a = testsupport::random_dyadic_values(rng, n);
    auto b = testsupport::random_dyadic_values(rng, n);
    auto c = testsupport::random_unit_values(rng, n);
    TruncationPolicy policy{1 + static_cast<int>(rng() % 4),
                            1 + static_cast<int>(rng() % 8)};
    double ab = dhat(a, b, n, policy);
    double bc = dhat(b, c, n, policy);
    double ac = dhat(a, c, n, policy);
    CHECK(ac <= ab + bc + 1e-12);
    double bound = 2.0 * TruncationPolicy::weight_sum(policy.u_max) *
                   TruncationPolicy::weight_sum(policy.v_max);
    CHECK(ab <= bound + 1e-12);
    CHECK(bound < 2.0);
  }
}

TEST_CASE("policy beyond the sample length contributes empty scales") {
  // Windows longer than the sample have zero measure everywhere, so both
  // sides vanish and those terms contribute nothing.
  TimeSeries x = constant_series("x", 0.25, 3);
  TimeSeries y = constant_series("y", 0.75, 3);
  double base = dhat(x, y, 3, TruncationPolicy{3, 1});
  double extended = dhat(x, y, 3, TruncationPolicy{8, 1});
  CHECK(base == extended);
}
