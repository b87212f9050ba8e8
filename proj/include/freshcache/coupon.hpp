#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "freshcache/model.hpp"
#include "freshcache/rng.hpp"

// Waiting times of the coupon-collector kind that drive cache eviction
// dynamics: T_m is the number of i.i.d. requests until m distinct
// contents have appeared, and T_c(i) the number until m distinct contents
// other than i have appeared (the slot at which an idle copy of i would
// fall off the end of an LRU list of size m).  The cache-wide
// characteristic time is t_c = E(T_{m+1}) - 1: one more distinct arrival
// than the cache holds, minus the slot of the copy's own fetch.

namespace freshcache {

namespace detail {

// Membership over 1..n with O(distinct) reset, so collecting many samples
// does not re-zero an n-sized array each time.
class DistinctTracker {
public:
  explicit DistinctTracker(ContentId n) : seen_(static_cast<std::size_t>(n) + 1, 0) {}

  bool insert(ContentId i) {
    if (seen_[i]) return false;
    seen_[i] = 1;
    touched_.push_back(i);
    return true;
  }

  void reset() {
    for (auto i : touched_) seen_[i] = 0;
    touched_.clear();
  }

private:
  std::vector<std::uint8_t> seen_;
  std::vector<ContentId> touched_;
};

inline std::uint64_t waiting_time_once(const PopularityModel& model, std::uint64_t m,
                                       SplitMix64& rng, DistinctTracker& tracker) {
  tracker.reset();
  std::uint64_t slots = 0, distinct = 0;
  while (distinct < m) {
    ++slots;
    if (tracker.insert(sample_content(model, rng))) ++distinct;
  }
  return slots;
}

inline std::uint64_t characteristic_time_once(const PopularityModel& model, std::uint64_t m,
                                              ContentId skip, SplitMix64& rng,
                                              DistinctTracker& tracker) {
  tracker.reset();
  std::uint64_t slots = 0, distinct = 0;
  while (distinct < m) {
    ++slots;
    ContentId c = sample_content(model, rng);
    if (c == skip) continue;
    if (tracker.insert(c)) ++distinct;
  }
  return slots;
}

inline long double binomial_ld(std::uint64_t a, std::uint64_t b) {
  if (b > a) return 0.0L;
  b = std::min(b, a - b);
  long double r = 1.0L;
  for (std::uint64_t k = 1; k <= b; ++k)
    r = r * static_cast<long double>(a - b + k) / static_cast<long double>(k);
  return r;
}

} // namespace detail

struct WaitingTimeSample {
  std::uint64_t target_distinct = 0;
  std::vector<std::uint64_t> values;
  double mean = 0.0;
  double stddev = 0.0;      // sample standard deviation
  double stderr_mean = 0.0; // stddev / sqrt(count)
  double cv = 0.0;          // stddev / mean; 0 exactly iff all values equal
};

inline WaitingTimeSample summarize_waiting_times(std::uint64_t target_distinct,
                                                 std::vector<std::uint64_t> values) {
  if (values.empty()) throw std::invalid_argument("waiting time summary needs at least one value");
  WaitingTimeSample s;
  s.target_distinct = target_distinct;
  s.values = std::move(values);
  long double sum = 0.0L;
  for (auto v : s.values) sum += static_cast<long double>(v);
  long double mean = sum / static_cast<long double>(s.values.size());
  long double ss = 0.0L;
  for (auto v : s.values) {
    long double d = static_cast<long double>(v) - mean;
    ss += d * d;
  }
  s.mean = static_cast<double>(mean);
  if (s.values.size() >= 2) {
    s.stddev = static_cast<double>(std::sqrt(ss / static_cast<long double>(s.values.size() - 1)));
    s.stderr_mean = s.stddev / std::sqrt(static_cast<double>(s.values.size()));
  }
  s.cv = s.mean > 0.0 ? s.stddev / s.mean : 0.0;
  return s;
}

// One sample of T_m.  Every request law with p(i) > 0 for all i terminates
// with probability 1; m above n can never terminate and is rejected.
inline std::uint64_t sample_waiting_time(const PopularityModel& model, std::uint64_t m,
                                         SplitMix64& rng) {
  if (m < 1 || m > model.catalog_size())
    throw std::invalid_argument("sample_waiting_time: m must lie in 1..n");
  detail::DistinctTracker tracker(model.catalog_size());
  return detail::waiting_time_once(model, m, rng, tracker);
}

// One sample of T_c(i): requests of i itself occupy slots but do not count
// toward the m distinct others.
inline std::uint64_t sample_per_content_characteristic_time(const PopularityModel& model,
                                                            std::uint64_t m, ContentId i,
                                                            SplitMix64& rng) {
  ContentId n = model.catalog_size();
  if (i < 1 || i > n)
    throw std::out_of_range("characteristic time: content index outside catalog");
  if (m < 1 || m > static_cast<std::uint64_t>(n) - 1)
    throw std::invalid_argument("characteristic time: m must lie in 1..n-1");
  detail::DistinctTracker tracker(n);
  return detail::characteristic_time_once(model, m, i, rng, tracker);
}

inline WaitingTimeSample collect_waiting_times(const PopularityModel& model, std::uint64_t m,
                                               std::uint64_t count, SplitMix64& rng) {
  if (m < 1 || m > model.catalog_size())
    throw std::invalid_argument("collect_waiting_times: m must lie in 1..n");
  if (count < 1) throw std::invalid_argument("collect_waiting_times: need at least one sample");
  detail::DistinctTracker tracker(model.catalog_size());
  std::vector<std::uint64_t> values;
  values.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k)
    values.push_back(detail::waiting_time_once(model, m, rng, tracker));
  return summarize_waiting_times(m, std::move(values));
}

inline WaitingTimeSample collect_characteristic_times(const PopularityModel& model,
                                                      std::uint64_t m, ContentId i,
                                                      std::uint64_t count, SplitMix64& rng) {
  ContentId n = model.catalog_size();
  if (i < 1 || i > n)
    throw std::out_of_range("characteristic time: content index outside catalog");
  if (m < 1 || m > static_cast<std::uint64_t>(n) - 1)
    throw std::invalid_argument("characteristic time: m must lie in 1..n-1");
  if (count < 1) throw std::invalid_argument("need at least one sample");
  detail::DistinctTracker tracker(n);
  std::vector<std::uint64_t> values;
  values.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k)
    values.push_back(detail::characteristic_time_once(model, m, i, rng, tracker));
  return summarize_waiting_times(m, std::move(values));
}

// E(T_m) by inclusion-exclusion over subsets J of the catalog:
//
//   E(T_m) = sum_{q=0}^{m-1} (-1)^(m-1-q) C(n-q-1, n-m)
//            sum_{|J|=q} 1 / (1 - P_J),
//
// with P_J the total popularity of J.  Exponential in n, so refused above
// n = 20; the alternating sum is accumulated in long double because the
// terms cancel heavily.
inline double exact_expected_waiting_time(const PopularityModel& model, std::uint64_t m) {
  ContentId n = model.catalog_size();
  if (n > 20)
    throw std::invalid_argument(
        "exact waiting time enumerates subsets and is limited to n <= 20; "
        "use collect_waiting_times for larger catalogs");
  if (m < 1 || m > n) throw std::invalid_argument("exact waiting time: m must lie in 1..n");
  const auto& p = model.pmf();
  const std::uint32_t full = 1u << n;
  std::vector<double> mass(full);
  mass[0] = 0.0;
  for (std::uint32_t s = 1; s < full; ++s)
    mass[s] = mass[s & (s - 1)] + p[static_cast<std::uint32_t>(std::countr_zero(s))];
  std::vector<long double> per_size(m, 0.0L);
  for (std::uint32_t s = 0; s < full; ++s) {
    unsigned q = static_cast<unsigned>(std::popcount(s));
    if (q < m) per_size[q] += 1.0L / (1.0L - static_cast<long double>(mass[s]));
  }
  long double total = 0.0L;
  for (std::uint64_t q = 0; q < m; ++q) {
    long double term = detail::binomial_ld(n - q - 1, n - m) * per_size[q];
    if ((m - 1 - q) & 1)
      total -= term;
    else
      total += term;
  }
  return static_cast<double>(total);
}

// Uniform popularity collapses E(T_m) to n (H_n - H_{n-m}).
inline double uniform_expected_waiting_time(std::uint64_t n, std::uint64_t m) {
  if (n < 1) throw std::invalid_argument("uniform waiting time: n must be at least 1");
  if (m < 1 || m > n) throw std::invalid_argument("uniform waiting time: m must lie in 1..n");
  long double acc = 0.0L;
  for (std::uint64_t k = n - m + 1; k <= n; ++k) acc += 1.0L / static_cast<long double>(k);
  return static_cast<double>(static_cast<long double>(n) * acc);
}

// Monte Carlo t_c = E(T_{m+1}) - 1.  Needs m + 1 <= n, hence m < n.
inline double characteristic_time_tc(const PopularityModel& model, std::uint64_t m,
                                     std::uint64_t samples, SplitMix64& rng) {
  if (m < 1 || m >= model.catalog_size())
    throw std::invalid_argument("characteristic time t_c: m must lie in 1..n-1");
  return collect_waiting_times(model, m + 1, samples, rng).mean - 1.0;
}

inline double characteristic_time_tc_exact(const PopularityModel& model, std::uint64_t m) {
  if (m < 1 || m >= model.catalog_size())
    throw std::invalid_argument("characteristic time t_c: m must lie in 1..n-1");
  return exact_expected_waiting_time(model, m + 1) - 1.0;
}

// Relative gap between the per-content eviction time and the cache-wide
// characteristic time: |E(T_c(i)) - t_c| / E(T_c(i)).  Small gaps justify
// replacing the per-content time with t_c in the hit rate approximation.
inline double approximation1_error(const PopularityModel& model, std::uint64_t m, ContentId i,
                                   std::uint64_t samples, SplitMix64& rng) {
  double per_content = collect_characteristic_times(model, m, i, samples, rng).mean;
  double tc = characteristic_time_tc(model, m, samples, rng);
  return std::abs(per_content - tc) / per_content;
}

inline double coefficient_of_variation(const PopularityModel& model, std::uint64_t m, ContentId i,
                                       std::uint64_t samples, SplitMix64& rng) {
  return collect_characteristic_times(model, m, i, samples, rng).cv;
}

struct TailBoundReport {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  double delta = 0.0;
  double expected = 0.0;    // E(T_m) under uniform popularity
  double lower_bound = 0.0; // bound on P(T_m <= (1 - delta) E)
  double upper_bound = 0.0; // bound on P(T_m >= (1 + delta) E)
  std::uint64_t samples = 0;
  std::optional<double> empirical_lower;
  std::optional<double> empirical_upper;
};

// Concentration bounds for T_m under uniform popularity:
//   P(T_m <= (1 - delta) E)  <=  exp(-m delta^2 / 2)
//   P(T_m >= (1 + delta) E)  <=  exp(-sqrt(n/m) delta^(3/2))
inline TailBoundReport tail_bounds(std::uint64_t n, std::uint64_t m, double delta) {
  if (m < 1 || m >= n) throw std::invalid_argument("tail bounds: need 1 <= m < n");
  if (!(delta > 0.0)) throw std::invalid_argument("tail bounds: delta must be positive");
  TailBoundReport r;
  r.n = n;
  r.m = m;
  r.delta = delta;
  r.expected = uniform_expected_waiting_time(n, m);
  r.lower_bound = std::exp(-static_cast<double>(m) * delta * delta / 2.0);
  r.upper_bound =
      std::exp(-std::sqrt(static_cast<double>(n) / static_cast<double>(m)) * std::pow(delta, 1.5));
  return r;
}

inline TailBoundReport empirical_tail_check(std::uint64_t n, std::uint64_t m, double delta,
                                            std::uint64_t samples, SplitMix64& rng) {
  TailBoundReport r = tail_bounds(n, m, delta);
  if (samples < 1) throw std::invalid_argument("empirical tail check: need at least one sample");
  const double lo = (1.0 - delta) * r.expected;
  const double hi = (1.0 + delta) * r.expected;
  detail::DistinctTracker tracker(static_cast<ContentId>(n));
  std::uint64_t below = 0, above = 0;
  for (std::uint64_t k = 0; k < samples; ++k) {
    tracker.reset();
    std::uint64_t slots = 0, distinct = 0;
    while (distinct < m) {
      ++slots;
      // Uniform law: draw the content id directly, no cdf needed.
      auto c = static_cast<ContentId>(rng.next_double() * static_cast<double>(n));
      c = std::min<ContentId>(c, static_cast<ContentId>(n - 1)) + 1;
      if (tracker.insert(c)) ++distinct;
    }
    if (static_cast<double>(slots) <= lo) ++below;
    if (static_cast<double>(slots) >= hi) ++above;
  }
  r.samples = samples;
  r.empirical_lower = static_cast<double>(below) / static_cast<double>(samples);
  r.empirical_upper = static_cast<double>(above) / static_cast<double>(samples);
  return r;
}

// ceil(n^e), with the power snapped to the nearest integer first so an
// n^e that is an integer mathematically is not pushed up by a one-ulp
// overshoot of pow.
inline std::uint64_t power_law_cache_size(std::uint64_t n, double e) {
  long double x = std::pow(static_cast<long double>(n), static_cast<long double>(e));
  std::uint64_t m;
  if (std::fabs(static_cast<double>(x - std::roundl(x))) < 1e-9)
    m = static_cast<std::uint64_t>(std::roundl(x));
  else
    m = static_cast<std::uint64_t>(std::ceil(x));
  return std::max<std::uint64_t>(m, 1);
}

// P(T_m = m) for m = ceil(n^e) along a grid of catalog sizes: the chance
// that the first m requests are all distinct.  For beta in [0, 1) this
// tends to 1 whenever e < (1 - beta) / (2 - beta), so the estimates along
// an increasing n grid should climb toward 1.
inline std::vector<double> zipf_convergence_check(double beta,
                                                  const std::vector<ContentId>& n_grid,
                                                  double m_exponent, std::uint64_t samples,
                                                  SplitMix64& rng) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw std::invalid_argument("zipf convergence: beta must lie in [0, 1)");
  double limit = (1.0 - beta) / (2.0 - beta);
  if (!(m_exponent > 0.0 && m_exponent < limit))
    throw std::invalid_argument("zipf convergence: exponent must lie in (0, " +
                                std::to_string(limit) + ") for beta = " + std::to_string(beta));
  if (samples < 1) throw std::invalid_argument("zipf convergence: need at least one sample");
  std::vector<double> out;
  out.reserve(n_grid.size());
  for (ContentId n : n_grid) {
    if (n < 1) throw std::invalid_argument("zipf convergence: catalog sizes must be at least 1");
    std::uint64_t m = power_law_cache_size(n, m_exponent);
    PopularityModel model = build_zipf(n, beta);
    detail::DistinctTracker tracker(n);
    std::uint64_t ok = 0;
    for (std::uint64_t k = 0; k < samples; ++k) {
      tracker.reset();
      bool distinct_run = true;
      for (std::uint64_t d = 0; d < m; ++d) {
        if (!tracker.insert(sample_content(model, rng))) {
          distinct_run = false;
          break;
        }
      }
      if (distinct_run) ++ok;
    }
    out.push_back(static_cast<double>(ok) / static_cast<double>(samples));
  }
  return out;
}

} // namespace freshcache
