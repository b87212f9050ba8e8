#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "freshcache/coupon.hpp"
#include "freshcache/model.hpp"
#include "freshcache/rng.hpp"
#include "support/oracles.hpp"

using namespace freshcache;

TEST_CASE("waiting time summary statistics") {
  auto s = summarize_waiting_times(2, {1, 3, 5});
  CHECK(s.target_distinct == 2u);
  CHECK(s.values.size() == 3u);
  CHECK(s.mean == Catch::Approx(3.0).margin(1e-15));
  CHECK(s.stddev == Catch::Approx(2.0).margin(1e-12));
  CHECK(s.stderr_mean == Catch::Approx(2.0 / std::sqrt(3.0)).margin(1e-12));
  CHECK(s.cv == Catch::Approx(2.0 / 3.0).margin(1e-12));

  auto flat = summarize_waiting_times(1, {4, 4, 4, 4});
  CHECK(flat.stddev == 0.0);
  CHECK(flat.cv == 0.0);

  CHECK_THROWS_AS(summarize_waiting_times(1, {}), std::invalid_argument);
}

TEST_CASE("sampled waiting times") {
  auto model = build_zipf(6, 1.1);
  SplitMix64 rng{4};

  SECTION("one distinct content arrives on the first request") {
    for (int k = 0; k < 50; ++k) CHECK(sample_waiting_time(model, 1, rng) == 1u);
  }
  SECTION("never shorter than the target count") {
    for (int k = 0; k < 200; ++k) CHECK(sample_waiting_time(model, 4, rng) >= 4u);
  }
  SECTION("rejections") {
    CHECK_THROWS_AS(sample_waiting_time(model, 0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_waiting_time(model, 7, rng), std::invalid_argument);
    CHECK_THROWS_AS(collect_waiting_times(model, 2, 0, rng), std::invalid_argument);
  }
  SECTION("two uniform contents take three draws on average") {
    auto uniform = build_zipf(2, 0.0);
    auto s = collect_waiting_times(uniform, 2, 100000, rng);
    CHECK(s.values.size() == 100000u);
    CHECK(s.mean == Catch::Approx(3.0).margin(0.05));
  }
}

TEST_CASE("exact expected waiting time") {
  SECTION("single content") {
    CHECK(exact_expected_waiting_time(build_zipf(1, 0.0), 1) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("two contents with popularity 2/3 and 1/3") {
    CHECK(exact_expected_waiting_time(build_zipf(2, 1.0), 2) ==
          Catch::Approx(3.5).margin(1e-9));
  }
  SECTION("agrees with the uniform closed form for every n and m up to 12") {
    for (std::uint32_t n = 1; n <= 12; ++n) {
      auto model = build_zipf(n, 0.0);
      for (std::uint64_t m = 1; m <= n; ++m) {
        CHECK(exact_expected_waiting_time(model, m) ==
              Catch::Approx(uniform_expected_waiting_time(n, m)).margin(1e-9));
      }
    }
  }
  SECTION("agrees with an independent subset recursion") {
    SplitMix64 gen{31};
    const double betas[] = {0.0, 0.6, 1.0, 1.7};
    for (int k = 0; k < 8; ++k) {
      std::uint32_t n = 2 + static_cast<std::uint32_t>(gen.next_u64() % 9);
      double beta = betas[gen.next_u64() % 4];
      std::uint64_t m = 1 + gen.next_u64() % n;
      auto model = build_zipf(n, beta);
      CAPTURE(n, beta, m);
      CHECK(exact_expected_waiting_time(model, m) ==
            Catch::Approx(oracles::dp_waiting_time(model.pmf(), m)).margin(1e-9));
    }
  }
  SECTION("strictly increasing in the target count") {
    auto model = build_zipf(8, 0.9);
    double prev = 0.0;
    for (std::uint64_t m = 1; m <= 8; ++m) {
      double e = exact_expected_waiting_time(model, m);
      CHECK(e > prev);
      prev = e;
    }
  }
  SECTION("refuses large catalogs, pointing at the sampling path") {
    auto model = build_zipf(21, 0.5);
    CHECK_THROWS_WITH(exact_expected_waiting_time(model, 3),
                      Catch::Matchers::ContainsSubstring("collect_waiting_times"));
    CHECK_THROWS_AS(exact_expected_waiting_time(build_zipf(4, 0.5), 0), std::invalid_argument);
    CHECK_THROWS_AS(exact_expected_waiting_time(build_zipf(4, 0.5), 5), std::invalid_argument);
  }
}

TEST_CASE("uniform closed form") {
  CHECK(uniform_expected_waiting_time(2, 1) == Catch::Approx(1.0).margin(1e-12));
  CHECK(uniform_expected_waiting_time(2, 2) == Catch::Approx(3.0).margin(1e-12));
  CHECK(uniform_expected_waiting_time(3, 2) == Catch::Approx(2.5).margin(1e-12));
  CHECK(uniform_expected_waiting_time(3, 3) == Catch::Approx(5.5).margin(1e-12));
  CHECK_THROWS_AS(uniform_expected_waiting_time(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(uniform_expected_waiting_time(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(uniform_expected_waiting_time(3, 4), std::invalid_argument);
}

TEST_CASE("integral oracle reaches beyond the enumeration range") {
  SECTION("validates against the closed forms and the subset recursion") {
    std::vector<double> u40(40, 1.0 / 40.0);
    CHECK(oracles::poisson_waiting_time(u40, 10, 0.02) ==
          Catch::Approx(uniform_expected_waiting_time(40, 10)).margin(1e-6));
    auto small = build_zipf(12, 1.3);
    CHECK(oracles::poisson_waiting_time(small.pmf(), 5, 0.01) ==
          Catch::Approx(exact_expected_waiting_time(small, 5)).margin(1e-6));
    CHECK(oracles::poisson_characteristic_time(small.pmf(), 4, 2, 0.01) ==
          Catch::Approx(oracles::dp_characteristic_time(small.pmf(), 4, 2)).margin(1e-6));
  }
  SECTION("brackets the samplers at a catalog the recursion cannot handle") {
    auto model = build_zipf(200, 1.1);
    SplitMix64 rng{41};
    auto full = collect_waiting_times(model, 26, 40000, rng);
    CHECK(std::abs(full.mean - oracles::poisson_waiting_time(model.pmf(), 26, 0.1)) <=
          4.0 * full.stderr_mean);
    auto per = collect_characteristic_times(model, 25, 3, 40000, rng);
    CHECK(std::abs(per.mean - oracles::poisson_characteristic_time(model.pmf(), 25, 3, 0.1)) <=
          4.0 * per.stderr_mean);
  }
}

TEST_CASE("per-content eviction times") {
  SECTION("uniform two contents: one other arrival is geometric with mean two") {
    auto model = build_zipf(2, 0.0);
    SplitMix64 rng{12};
    auto s = collect_characteristic_times(model, 1, 1, 100000, rng);
    CHECK(s.mean == Catch::Approx(2.0).margin(0.03));
    for (auto v : s.values) REQUIRE(v >= 1u);
  }
  SECTION("matches the subset recursion") {
    auto model = build_zipf(6, 1.0);
    SplitMix64 rng{13};
    auto s = collect_characteristic_times(model, 3, 2, 30000, rng);
    double want = oracles::dp_characteristic_time(model.pmf(), 3, 2);
    CHECK(std::abs(s.mean - want) <= 4.0 * s.stderr_mean);
  }
  SECTION("rejections") {
    auto model = build_zipf(5, 0.5);
    SplitMix64 rng{14};
    CHECK_THROWS_AS(sample_per_content_characteristic_time(model, 5, 1, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_per_content_characteristic_time(model, 0, 1, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_per_content_characteristic_time(model, 2, 0, rng),
                    std::out_of_range);
    CHECK_THROWS_AS(sample_per_content_characteristic_time(model, 2, 6, rng),
                    std::out_of_range);
    CHECK_THROWS_AS(collect_characteristic_times(model, 2, 1, 0, rng), std::invalid_argument);
  }
}

TEST_CASE("cache-wide characteristic time") {
  SECTION("uniform small cases, exact") {
    CHECK(characteristic_time_tc_exact(build_zipf(3, 0.0), 1) ==
          Catch::Approx(1.5).margin(1e-9));
    CHECK(characteristic_time_tc_exact(build_zipf(2, 0.0), 1) ==
          Catch::Approx(2.0).margin(1e-9));
  }
  SECTION("uniform popularity makes every per-content time equal to it") {
    auto model = build_zipf(10, 0.0);
    double tc = characteristic_time_tc_exact(model, 3);
    for (ContentId i : {1u, 5u, 10u}) {
      CHECK(tc == Catch::Approx(oracles::dp_characteristic_time(model.pmf(), 3, i)).margin(1e-9));
    }
  }
  SECTION("sampled value brackets the exact one") {
    auto model = build_zipf(5, 1.2);
    SplitMix64 rng{15};
    auto s = collect_waiting_times(model, 3, 20000, rng);
    double exact = characteristic_time_tc_exact(model, 2);
    CHECK(std::abs((s.mean - 1.0) - exact) <= 4.0 * s.stderr_mean);
  }
  SECTION("rejections") {
    SplitMix64 rng{16};
    CHECK_THROWS_AS(characteristic_time_tc(build_zipf(4, 0.5), 4, 10, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(characteristic_time_tc_exact(build_zipf(4, 0.5), 4), std::invalid_argument);
  }
}

TEST_CASE("relative gap between per-content and cache-wide times") {
  // Uniform popularity makes the two times identical, so the estimate is
  // pure Monte Carlo noise.
  auto model = build_zipf(10, 0.0);
  SplitMix64 rng{17};
  double mu = approximation1_error(model, 3, 1, 20000, rng);
  CHECK(mu >= 0.0);
  CHECK(mu < 0.03);
}

TEST_CASE("coefficient of variation of eviction times") {
  SECTION("degenerate collection has zero spread") {
    auto model = build_zipf(3, 0.0);
    SplitMix64 rng{18};
    auto s = collect_waiting_times(model, 1, 500, rng);
    CHECK(s.mean == 1.0);
    CHECK(s.cv == 0.0);
  }
  SECTION("real collections have positive spread") {
    auto model = build_zipf(12, 0.8);
    SplitMix64 rng{19};
    CHECK(coefficient_of_variation(model, 4, 1, 5000, rng) > 0.0);
  }
}

TEST_CASE("concentration bounds for the uniform waiting time") {
  SECTION("closed forms") {
    auto r = tail_bounds(100, 8, 0.5);
    CHECK(r.lower_bound == Catch::Approx(std::exp(-1.0)).margin(1e-12));
    CHECK(r.expected == Catch::Approx(uniform_expected_waiting_time(100, 8)).margin(1e-12));

    auto s = tail_bounds(100, 4, 1.0);
    CHECK(s.upper_bound == Catch::Approx(std::exp(-5.0)).margin(1e-9));
  }
  SECTION("vanishing delta gives vacuous bounds") {
    auto r = tail_bounds(50, 10, 1e-12);
    CHECK(r.lower_bound >= 0.999999);
    CHECK(r.upper_bound >= 0.999999);
  }
  SECTION("rejections") {
    CHECK_THROWS_AS(tail_bounds(10, 10, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(tail_bounds(10, 0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(tail_bounds(10, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(tail_bounds(10, 3, -0.5), std::invalid_argument);
  }
  SECTION("empirical tail frequencies sit below the bounds") {
    SplitMix64 rng{20};
    auto r = empirical_tail_check(10000, 100, 0.5, 10000, rng);
    REQUIRE(r.empirical_lower.has_value());
    REQUIRE(r.empirical_upper.has_value());
    CHECK(r.samples == 10000u);
    double slack_lo = 3.0 * std::sqrt(r.lower_bound / static_cast<double>(r.samples));
    double slack_hi = 3.0 * std::sqrt(r.upper_bound / static_cast<double>(r.samples));
    CHECK(*r.empirical_lower <= r.lower_bound + slack_lo);
    CHECK(*r.empirical_upper <= r.upper_bound + slack_hi);
    CHECK(*r.empirical_lower < 0.02);
    CHECK(*r.empirical_upper < 0.02);
  }
}

TEST_CASE("power-law cache sizes snap before rounding up") {
  CHECK(power_law_cache_size(100000, 0.2) == 10u); // 10^5^0.2 is exactly 10
  CHECK(power_law_cache_size(1000, 0.2) == 4u);
  CHECK(power_law_cache_size(100, 0.5) == 10u);
  CHECK(power_law_cache_size(10, 0.4) == 3u);
  CHECK(power_law_cache_size(1, 0.3) == 1u);
}

TEST_CASE("probability that a small prefix is collision-free") {
  SECTION("a one-content catalog is trivially collision-free") {
    SplitMix64 rng{22};
    auto probs = zipf_convergence_check(0.0, {1}, 0.3, 100, rng);
    REQUIRE(probs.size() == 1u);
    CHECK(probs[0] == 1.0);
  }
  SECTION("uniform catalogs climb toward one along the grid") {
    SplitMix64 rng{23};
    auto probs = zipf_convergence_check(0.0, {100, 1000, 10000}, 0.3, 3000, rng);
    REQUIRE(probs.size() == 3u);
    CHECK(probs[0] <= probs[1]);
    CHECK(probs[1] <= probs[2]);
    CHECK(probs[2] >= 0.9);
  }
  SECTION("exponents at or past the threshold are rejected") {
    SplitMix64 rng{24};
    CHECK_THROWS_AS(zipf_convergence_check(0.5, {10}, 0.34, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(zipf_convergence_check(0.5, {10}, 0.5, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(zipf_convergence_check(1.0, {10}, 0.1, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(zipf_convergence_check(-0.2, {10}, 0.1, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(zipf_convergence_check(0.0, {10}, 0.0, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(zipf_convergence_check(0.0, {10}, 0.3, 0, rng), std::invalid_argument);
  }
}
