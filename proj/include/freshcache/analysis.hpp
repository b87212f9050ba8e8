#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "freshcache/model.hpp"

// Closed forms and approximations for steady-state hit rates.
//
// The load-bearing identity: with i.i.d. requests, a copy of content i is
// useful for the F(i) - 1 slots after the fetch slot, so its hit rate
// under an infinite cache satisfies h = (F - 1) p (1 - h), giving
//
//   h_ub(i) = (F(i) - 1) p(i) / (1 + (F(i) - 1) p(i)).
//
// No policy with any cache size can beat h_ub(i) per content, because the
// freshness demand alone caps how often a cached copy can serve.

namespace freshcache {

enum class HitRateProvenance { UpperBound, LPExact, LRUApprox };

// Per-content hit rates, 1-based like content ids, tagged with how they
// were obtained so downstream tables can label series correctly.
struct HitRateVector {
  HitRateProvenance provenance = HitRateProvenance::UpperBound;
  std::vector<double> values;

  double at(ContentId i) const {
    if (i < 1 || i > values.size())
      throw std::out_of_range("hit rate index " + std::to_string(i) + " outside 1.." +
                              std::to_string(values.size()));
    return values[i - 1];
  }
  ContentId size() const { return static_cast<ContentId>(values.size()); }
};

// Freshness-capped hit rate for one content.  F = 1 gives 0: such a copy
// is stale by its first serve opportunity.
inline double upper_bound_hit_rate(double p, std::uint64_t f) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("upper_bound_hit_rate: p must lie in [0, 1]");
  if (f < 1) throw std::invalid_argument("upper_bound_hit_rate: F must be at least 1");
  double fp = static_cast<double>(f - 1) * p;
  return fp / (1.0 + fp);
}

inline HitRateVector upper_bound_hit_rates(const PopularityModel& model,
                                           const FreshnessProfile& profile) {
  if (profile.catalog_size() != model.catalog_size())
    throw std::invalid_argument("catalog size mismatch between popularity and freshness");
  HitRateVector v;
  v.provenance = HitRateProvenance::UpperBound;
  ContentId n = model.catalog_size();
  v.values.resize(n);
  for (ContentId i = 1; i <= n; ++i)
    v.values[i - 1] = upper_bound_hit_rate(model.p(i), profile.freshness(i));
  return v;
}

// Aggregate ceiling on the hit probability: sum of p(i) h_ub(i).
inline double upper_bound_hit_prob(const PopularityModel& model,
                                   const FreshnessProfile& profile) {
  HitRateVector v = upper_bound_hit_rates(model, profile);
  long double acc = 0.0L;
  for (ContentId i = 1; i <= model.catalog_size(); ++i) acc += model.p(i) * v.at(i);
  return static_cast<double>(acc);
}

// LP pins the m most popular contents and never admits anything else, so
// each pinned content reaches its freshness cap and the rest get nothing.
inline HitRateVector lp_hit_rates(const PopularityModel& model, const FreshnessProfile& profile,
                                  std::uint64_t m) {
  if (profile.catalog_size() != model.catalog_size())
    throw std::invalid_argument("catalog size mismatch between popularity and freshness");
  if (m < 1) throw std::invalid_argument("lp_hit_rates: cache size must be at least 1");
  if (m >= model.catalog_size())
    throw std::invalid_argument("lp_hit_rates: cache size must be smaller than the catalog");
  HitRateVector v;
  v.provenance = HitRateProvenance::LPExact;
  ContentId n = model.catalog_size();
  v.values.assign(n, 0.0);
  for (ContentId i = 1; i <= static_cast<ContentId>(m); ++i)
    v.values[i - 1] = upper_bound_hit_rate(model.p(i), profile.freshness(i));
  return v;
}

inline double lp_hit_prob(const PopularityModel& model, const FreshnessProfile& profile,
                          std::uint64_t m) {
  HitRateVector v = lp_hit_rates(model, profile, m);
  long double acc = 0.0L;
  for (ContentId i = 1; i <= model.catalog_size(); ++i) acc += model.p(i) * v.at(i);
  return static_cast<double>(acc);
}

// LRU approximation for one content: the freshness cap, intersected with
// the classic characteristic-time estimate that the copy is still cached
// t_c - 1 slots after its last use unless evicted, and an interarrival
// within that window keeps it alive.
inline double lru_single_hit_rate_approx(double p, std::uint64_t f, double t_c) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("lru_single_hit_rate_approx: p must lie in [0, 1]");
  if (f < 1) throw std::invalid_argument("lru_single_hit_rate_approx: F must be at least 1");
  if (!(t_c > 1.0))
    throw std::invalid_argument("lru_single_hit_rate_approx: characteristic time must exceed 1");
  double cap = upper_bound_hit_rate(p, f);
  // 1 - (1-p)^(t_c - 1), computed via log1p so tiny p does not lose digits.
  double survive;
  if (p >= 1.0) {
    survive = 1.0;
  } else {
    survive = 1.0 - std::exp((t_c - 1.0) * std::log1p(-p));
  }
  return std::min(cap, survive);
}

inline HitRateVector lru_hit_rate_approx(const PopularityModel& model,
                                         const FreshnessProfile& profile, double t_c) {
  if (profile.catalog_size() != model.catalog_size())
    throw std::invalid_argument("catalog size mismatch between popularity and freshness");
  HitRateVector v;
  v.provenance = HitRateProvenance::LRUApprox;
  ContentId n = model.catalog_size();
  v.values.resize(n);
  for (ContentId i = 1; i <= n; ++i)
    v.values[i - 1] = lru_single_hit_rate_approx(model.p(i), profile.freshness(i), t_c);
  return v;
}

// Envelope for M-LP, which serves the m most popular contents at their
// freshness cap and everything else at some rate strictly between 0 and
// the cap (stale purges keep opening slots that tail contents can borrow).
struct MlpHitRateBounds {
  HitRateVector lower; // exact for i <= m, 0 beyond
  HitRateVector upper; // freshness cap for every content
  // True where the steady-state rate is provably > 0, i.e. wherever the
  // content can be requested and stay fresh for at least one slot.
  std::vector<bool> strictly_positive;
};

inline MlpHitRateBounds mlp_hit_rate_bounds(const PopularityModel& model,
                                            const FreshnessProfile& profile, std::uint64_t m) {
  MlpHitRateBounds b;
  b.lower = lp_hit_rates(model, profile, m);
  b.upper = upper_bound_hit_rates(model, profile);
  ContentId n = model.catalog_size();
  b.strictly_positive.resize(n);
  for (ContentId i = 1; i <= n; ++i)
    b.strictly_positive[i - 1] = model.p(i) > 0.0 && profile.freshness(i) >= 2;
  return b;
}

} // namespace freshcache
