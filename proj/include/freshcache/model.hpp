#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "freshcache/rng.hpp"

// Request model: an i.i.d. stream over a fixed catalog 1..n with Zipf(beta)
// popularity, plus a per-content freshness demand F(i).  A cached copy of
// content i fetched j slots ago satisfies a request only while its age is
// at most F(i).  Content indices are 1-based throughout; index 0 is never
// a valid content.

namespace freshcache {

using ContentId = std::uint32_t;

class PopularityModel {
public:
  // p(i) proportional to i^-beta, normalized by direct summation.
  // Accumulation runs in long double so the pmf sums to 1 within 1e-12
  // even at n = 10^6.
  static PopularityModel zipf(ContentId n, double beta) {
    if (n < 1) throw std::invalid_argument("zipf: catalog size must be at least 1");
    if (!std::isfinite(beta) || beta < 0.0)
      throw std::invalid_argument("zipf: beta must be a finite real >= 0");
    PopularityModel m;
    m.n_ = n;
    m.beta_ = beta;
    std::vector<long double> w(n);
    long double z = 0.0L;
    for (ContentId i = 1; i <= n; ++i) {
      w[i - 1] = std::pow(static_cast<long double>(i), -static_cast<long double>(beta));
      z += w[i - 1];
    }
    m.pmf_.resize(n);
    m.cdf_.resize(n);
    long double acc = 0.0L;
    for (ContentId i = 0; i < n; ++i) {
      m.pmf_[i] = static_cast<double>(w[i] / z);
      acc += w[i] / z;
      m.cdf_[i] = std::min(1.0, static_cast<double>(acc));
    }
    // Pin the last cdf entry so inverse-transform sampling can never walk
    // off the end, whatever rounding did above.
    m.cdf_[n - 1] = 1.0;
    return m;
  }

  ContentId catalog_size() const { return n_; }
  double zipf_parameter() const { return beta_; }

  double p(ContentId i) const {
    check_index(i);
    return pmf_[i - 1];
  }

  // Total popularity of the m most popular contents; head_mass(0) = 0,
  // head_mass(n) = 1 exactly.
  double head_mass(ContentId m) const {
    if (m > n_) throw std::out_of_range("head_mass: m exceeds catalog size");
    if (m == 0) return 0.0;
    return cdf_[m - 1];
  }

  const std::vector<double>& pmf() const { return pmf_; }
  const std::vector<double>& cdf() const { return cdf_; }

private:
  PopularityModel() = default;

  void check_index(ContentId i) const {
    if (i < 1 || i > n_)
      throw std::out_of_range("content index " + std::to_string(i) + " outside 1.." +
                              std::to_string(n_));
  }

  ContentId n_ = 0;
  double beta_ = 0.0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

inline PopularityModel build_zipf(ContentId n, double beta) {
  return PopularityModel::zipf(n, beta);
}

enum class FreshnessKind { Uniform, Linear, Explicit };

// F(i) >= 1 for every content.  F(i) = 1 means a copy is already too old
// by the slot after it was fetched, so such content can never be served
// from cache.
class FreshnessProfile {
public:
  FreshnessProfile() : FreshnessProfile(Uniform{}, {1}) {}

  static FreshnessProfile uniform(ContentId n, std::uint64_t f) {
    if (n < 1) throw std::invalid_argument("freshness: catalog size must be at least 1");
    if (f < 1) throw std::invalid_argument("freshness: uniform F must be at least 1");
    return FreshnessProfile(Uniform{}, std::vector<std::uint64_t>(n, f));
  }

  // F(i) = 1 + slope * i: the most popular contents expire fastest.
  static FreshnessProfile linear(ContentId n, std::uint64_t slope = 1) {
    if (n < 1) throw std::invalid_argument("freshness: catalog size must be at least 1");
    if (slope < 1) throw std::invalid_argument("freshness: linear slope must be at least 1");
    std::vector<std::uint64_t> v(n);
    for (ContentId i = 1; i <= n; ++i) v[i - 1] = 1 + slope * i;
    return FreshnessProfile(Linear{}, std::move(v));
  }

  static FreshnessProfile explicit_values(std::vector<std::uint64_t> values) {
    if (values.empty()) throw std::invalid_argument("freshness: explicit profile must be non-empty");
    for (auto f : values)
      if (f < 1) throw std::invalid_argument("freshness: every F(i) must be at least 1");
    return FreshnessProfile(Explicit{}, std::move(values));
  }

  std::uint64_t freshness(ContentId i) const {
    if (i < 1 || i > values_.size())
      throw std::out_of_range("content index " + std::to_string(i) + " outside 1.." +
                              std::to_string(values_.size()));
    return values_[i - 1];
  }

  ContentId catalog_size() const { return static_cast<ContentId>(values_.size()); }
  FreshnessKind kind() const { return kind_; }

  std::uint64_t max_freshness() const {
    return *std::max_element(values_.begin(), values_.end());
  }

private:
  struct Uniform {};
  struct Linear {};
  struct Explicit {};

  FreshnessProfile(Uniform, std::vector<std::uint64_t> v)
      : kind_(FreshnessKind::Uniform), values_(std::move(v)) {}
  FreshnessProfile(Linear, std::vector<std::uint64_t> v)
      : kind_(FreshnessKind::Linear), values_(std::move(v)) {}
  FreshnessProfile(Explicit, std::vector<std::uint64_t> v)
      : kind_(FreshnessKind::Explicit), values_(std::move(v)) {}

  FreshnessKind kind_;
  std::vector<std::uint64_t> values_;
};

// One draw from the popularity law: inverse transform via binary search
// on the precomputed cdf.
inline ContentId sample_content(const PopularityModel& model, SplitMix64& rng) {
  const auto& cdf = model.cdf();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.next_double());
  return static_cast<ContentId>(it - cdf.begin()) + 1;
}

// Deterministic request source: the whole stream is a function of the seed
// and the model.  The model must outlive the stream.
class RequestStream {
public:
  RequestStream(std::uint64_t seed, const PopularityModel& model)
      : seed_(seed), rng_(seed), model_(&model) {}

  ContentId sample() {
    ++slot_;
    return sample_content(*model_, rng_);
  }

  std::uint64_t slot() const { return slot_; }
  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  SplitMix64 rng_;
  const PopularityModel* model_;
  std::uint64_t slot_ = 0;
};

} // namespace freshcache
