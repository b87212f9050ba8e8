#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "freshcache/model.hpp"
#include "freshcache/rng.hpp"

using freshcache::build_zipf;
using freshcache::FreshnessKind;
using freshcache::FreshnessProfile;
using freshcache::PopularityModel;
using freshcache::RequestStream;
using freshcache::sample_content;
using freshcache::SplitMix64;

TEST_CASE("zipf pmf matches hand-computed small cases") {
  auto m20 = build_zipf(2, 0.0);
  CHECK(m20.p(1) == Catch::Approx(0.5).margin(1e-15));
  CHECK(m20.p(2) == Catch::Approx(0.5).margin(1e-15));

  auto m21 = build_zipf(2, 1.0);
  CHECK(m21.p(1) == Catch::Approx(2.0 / 3.0).margin(1e-15));
  CHECK(m21.p(2) == Catch::Approx(1.0 / 3.0).margin(1e-15));

  auto m31 = build_zipf(3, 1.0);
  CHECK(m31.p(1) == Catch::Approx(6.0 / 11.0).margin(1e-15));
  CHECK(m31.p(2) == Catch::Approx(3.0 / 11.0).margin(1e-15));
  CHECK(m31.p(3) == Catch::Approx(2.0 / 11.0).margin(1e-15));
}

TEST_CASE("zipf rejects bad parameters") {
  CHECK_THROWS_AS(build_zipf(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_zipf(5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_zipf(5, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_zipf(5, std::nan("")), std::invalid_argument);
}

TEST_CASE("zipf pmf normalizes and is non-increasing") {
  const std::uint32_t sizes[] = {1, 10, 1000, 1000000};
  const double betas[] = {0.0, 0.5, 1.0, 2.0};
  for (auto n : sizes) {
    for (auto beta : betas) {
      auto model = build_zipf(n, beta);
      long double sum = 0.0L;
      double prev = 1.0;
      for (std::uint32_t i = 1; i <= n; ++i) {
        double p = model.p(i);
        REQUIRE(p > 0.0);
        REQUIRE(p <= prev);
        sum += p;
        prev = p;
      }
      CHECK(std::abs(static_cast<double>(sum) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("zipf pmf follows the power law exactly") {
  auto model = build_zipf(100, 0.7);
  for (std::uint32_t i = 1; i <= 100; ++i) {
    double scaled = model.p(i) * std::pow(static_cast<double>(i), 0.7);
    CHECK(scaled == Catch::Approx(model.p(1)).epsilon(1e-12));
  }
}

TEST_CASE("zipf cdf is monotone and ends at exactly one") {
  auto model = build_zipf(12345, 0.9);
  const auto& cdf = model.cdf();
  REQUIRE(cdf.size() == 12345);
  double prev = 0.0;
  for (double c : cdf) {
    REQUIRE(c >= prev);
    REQUIRE(c <= 1.0);
    prev = c;
  }
  CHECK(cdf.back() == 1.0);
}

TEST_CASE("p(i) is 1-based and range checked") {
  auto model = build_zipf(3, 1.0);
  CHECK_THROWS_AS(model.p(0), std::out_of_range);
  CHECK_THROWS_AS(model.p(4), std::out_of_range);
}

TEST_CASE("head_mass sums the most popular contents") {
  auto m31 = build_zipf(3, 1.0);
  CHECK(m31.head_mass(0) == 0.0);
  CHECK(m31.head_mass(1) == Catch::Approx(6.0 / 11.0).margin(1e-15));
  CHECK(m31.head_mass(3) == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(m31.head_mass(4), std::out_of_range);

  // 100 of 10^4 contents at beta = 0.5 carry on the order of 10% of the mass.
  auto big = build_zipf(10000, 0.5);
  double head = big.head_mass(100);
  CHECK(head >= 0.05);
  CHECK(head <= 0.2);

  double prev = 0.0;
  for (std::uint32_t m = 1; m <= 3; ++m) {
    double h = m31.head_mass(m);
    CHECK(h > prev);
    prev = h;
  }
}

TEST_CASE("sampling a single-content catalog always returns content 1") {
  auto model = build_zipf(1, 1.3);
  SplitMix64 rng{99};
  for (int k = 0; k < 100; ++k) CHECK(sample_content(model, rng) == 1u);
}

TEST_CASE("sampling frequencies match the pmf") {
  const std::uint64_t draws = 1000000;

  SECTION("two contents, uniform") {
    auto model = build_zipf(2, 0.0);
    SplitMix64 rng{42};
    std::uint64_t ones = 0;
    for (std::uint64_t k = 0; k < draws; ++k) {
      if (sample_content(model, rng) == 1u) ++ones;
    }
    double freq = static_cast<double>(ones) / static_cast<double>(draws);
    CHECK(freq >= 0.498);
    CHECK(freq <= 0.502);
  }

  SECTION("fifty contents, zipf") {
    auto model = build_zipf(50, 0.8);
    SplitMix64 rng{7};
    std::vector<std::uint64_t> counts(51, 0);
    for (std::uint64_t k = 0; k < draws; ++k) {
      ++counts[sample_content(model, rng)];
    }
    for (std::uint32_t i = 1; i <= 50; ++i) {
      double freq = static_cast<double>(counts[i]) / static_cast<double>(draws);
      double tol = 4.0 * std::sqrt(model.p(i) / static_cast<double>(draws));
      CHECK(std::abs(freq - model.p(i)) <= tol);
    }
  }
}

TEST_CASE("sampling is deterministic per seed") {
  auto model = build_zipf(20, 1.1);
  SplitMix64 a{123};
  SplitMix64 b{123};
  SplitMix64 c{124};
  bool all_equal = true;
  bool any_diff = false;
  for (int k = 0; k < 1000; ++k) {
    auto x = sample_content(model, a);
    auto y = sample_content(model, b);
    auto z = sample_content(model, c);
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("request stream tracks slots") {
  auto model = build_zipf(5, 1.0);
  RequestStream stream{17, model};
  CHECK(stream.slot() == 0u);
  auto first = stream.sample();
  CHECK(stream.slot() == 1u);
  CHECK(first >= 1u);
  CHECK(first <= 5u);
  for (int k = 0; k < 9; ++k) stream.sample();
  CHECK(stream.slot() == 10u);
  CHECK(stream.seed() == 17u);
}

TEST_CASE("freshness profiles") {
  SECTION("uniform") {
    auto f = FreshnessProfile::uniform(4, 10);
    CHECK(f.kind() == FreshnessKind::Uniform);
    CHECK(f.catalog_size() == 4u);
    for (std::uint32_t i = 1; i <= 4; ++i) CHECK(f.freshness(i) == 10u);
    CHECK(f.max_freshness() == 10u);
  }
  SECTION("linear grows by the slope per rank") {
    auto f = FreshnessProfile::linear(5, 1);
    std::vector<std::uint64_t> want = {2, 3, 4, 5, 6};
    for (std::uint32_t i = 1; i <= 5; ++i) CHECK(f.freshness(i) == want[i - 1]);
    CHECK(f.max_freshness() == 6u);

    auto g = FreshnessProfile::linear(3, 4);
    CHECK(g.freshness(1) == 5u);
    CHECK(g.freshness(3) == 13u);
  }
  SECTION("explicit values round-trip") {
    auto f = FreshnessProfile::explicit_values({3, 1, 7});
    CHECK(f.kind() == FreshnessKind::Explicit);
    CHECK(f.freshness(2) == 1u);
    CHECK(f.max_freshness() == 7u);
  }
  SECTION("rejections") {
    CHECK_THROWS_AS(FreshnessProfile::uniform(0, 5), std::invalid_argument);
    CHECK_THROWS_AS(FreshnessProfile::uniform(5, 0), std::invalid_argument);
    CHECK_THROWS_AS(FreshnessProfile::linear(5, 0), std::invalid_argument);
    CHECK_THROWS_AS(FreshnessProfile::explicit_values({2, 0, 3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(FreshnessProfile::explicit_values({}),
                    std::invalid_argument);
  }
  SECTION("bounds checks") {
    auto f = FreshnessProfile::uniform(3, 2);
    CHECK_THROWS_AS(f.freshness(0), std::out_of_range);
    CHECK_THROWS_AS(f.freshness(4), std::out_of_range);
  }
}

TEST_CASE("seed derivation separates streams") {
  auto a = freshcache::derive_seed(42, 0);
  auto b = freshcache::derive_seed(42, 1);
  auto c = freshcache::derive_seed(43, 0);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(freshcache::derive_seed(42, 0) == a);
}
