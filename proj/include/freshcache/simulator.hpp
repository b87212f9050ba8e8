#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "freshcache/model.hpp"
#include "freshcache/policy.hpp"
#include "freshcache/rng.hpp"

// Replicated steady-state hit rate estimation.  Each replication is an
// independent request stream whose seed is derived from the master seed
// and the replication index, so results are identical whatever the thread
// count, and any single replication can be rerun in isolation.

namespace freshcache {

// Slots to discard before counting: long enough for the cache to cycle
// its contents through several freshness lifetimes, but never more than
// half the run.
inline std::uint64_t default_warmup_slots(std::uint64_t m, std::uint64_t max_freshness,
                                          std::uint64_t slots) {
  std::uint64_t cap = slots / 2;
  unsigned __int128 want = static_cast<unsigned __int128>(10) * m * max_freshness;
  if (want > cap) return cap;
  return static_cast<std::uint64_t>(want);
}

struct SimConfig {
  ContentId n = 1;
  std::uint64_t m = 1;
  double beta = 0.0;
  FreshnessProfile profile{};
  PolicyKind kind = PolicyKind::LRU;
  std::uint64_t slots = 1'000'000;
  std::optional<std::uint64_t> warmup_slots; // empty: derived from m and max F
  std::uint32_t replications = 10;
  std::uint64_t master_seed = 42;
  StepOptions step_options{};
};

inline std::uint64_t resolved_warmup(const SimConfig& cfg) {
  if (cfg.warmup_slots) return *cfg.warmup_slots;
  return default_warmup_slots(cfg.m, cfg.profile.max_freshness(), cfg.slots);
}

inline void validate(const SimConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("sim config: n must be at least 1");
  if (cfg.m < 1) throw std::invalid_argument("sim config: m must be at least 1");
  if (cfg.m > cfg.n) throw std::invalid_argument("sim config: m must not exceed n");
  if (!(cfg.beta >= 0.0)) throw std::invalid_argument("sim config: beta must be >= 0");
  if (cfg.profile.catalog_size() != cfg.n)
    throw std::invalid_argument("sim config: freshness profile size must equal n");
  if (cfg.slots < 1) throw std::invalid_argument("sim config: slots must be at least 1");
  if (cfg.replications < 1)
    throw std::invalid_argument("sim config: replications must be at least 1");
  if (resolved_warmup(cfg) >= cfg.slots)
    throw std::invalid_argument("sim config: warmup must leave at least one counted slot");
}

// Counts from one replication, after warmup.  Indices are content id - 1.
struct RunCounts {
  std::vector<std::uint64_t> requests;
  std::vector<std::uint64_t> hits;
  std::uint64_t total_requests = 0;
  std::uint64_t total_hits = 0;
};

inline RunCounts run_single(const PopularityModel& model, const FreshnessProfile& profile,
                            PolicyKind kind, std::uint64_t m, std::uint64_t slots,
                            std::uint64_t warmup, std::uint64_t seed,
                            const StepOptions& opts = {}) {
  if (warmup >= slots)
    throw std::invalid_argument("run_single: warmup must leave at least one counted slot");
  ContentId n = model.catalog_size();
  RunCounts rc;
  rc.requests.assign(n, 0);
  rc.hits.assign(n, 0);
  RequestStream stream(seed, model);
  CacheState cache(m);
  for (std::uint64_t slot = 1; slot <= slots; ++slot) {
    ContentId x = stream.sample();
    SlotOutcome out = step(cache, kind, x, slot, model, profile, opts);
    if (slot > warmup) {
      ++rc.requests[x - 1];
      ++rc.total_requests;
      if (out.result == SlotResult::Hit) {
        ++rc.hits[x - 1];
        ++rc.total_hits;
      }
    }
  }
  return rc;
}

struct ReplicationSummary {
  std::uint64_t seed = 0;
  double hit_prob = 0.0;
};

struct SimulationMetrics {
  ContentId n = 0;
  std::uint64_t counted_slots_per_replication = 0;
  std::uint64_t warmup_slots = 0;
  std::vector<std::uint64_t> requests; // pooled over replications, index = content - 1
  std::vector<std::uint64_t> hits;
  std::vector<ReplicationSummary> replications;
  double hit_prob = 0.0;
  double hit_prob_stderr = 0.0;

  // Per-content hit rate; empty when the content was never requested
  // after warmup, which the caller must handle rather than read a 0/0.
  std::optional<double> hit_rate(ContentId i) const {
    if (i < 1 || i > n) throw std::out_of_range("hit_rate: content index outside catalog");
    if (requests[i - 1] == 0) return std::nullopt;
    return static_cast<double>(hits[i - 1]) / static_cast<double>(requests[i - 1]);
  }
};

inline std::optional<double> hit_rate(const SimulationMetrics& metrics, ContentId i) {
  return metrics.hit_rate(i);
}

// Run all replications and pool.  Replication r always uses seed
// derive_seed(master_seed, r); threads only change who executes which
// replication, never the arithmetic.
inline SimulationMetrics run(const SimConfig& cfg, unsigned threads = 1) {
  validate(cfg);
  PopularityModel model = build_zipf(cfg.n, cfg.beta);
  std::uint64_t warmup = resolved_warmup(cfg);
  std::uint32_t reps = cfg.replications;

  std::vector<RunCounts> per_rep(reps);
  auto work = [&](unsigned worker, unsigned stride) {
    for (std::uint32_t r = worker; r < reps; r += stride) {
      per_rep[r] = run_single(model, cfg.profile, cfg.kind, cfg.m, cfg.slots, warmup,
                              derive_seed(cfg.master_seed, r), cfg.step_options);
    }
  };
  if (threads <= 1 || reps <= 1) {
    work(0, 1);
  } else {
    unsigned k = std::min<unsigned>(threads, reps);
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (unsigned w = 0; w < k; ++w) pool.emplace_back(work, w, k);
    for (auto& t : pool) t.join();
  }

  SimulationMetrics out;
  out.n = cfg.n;
  out.counted_slots_per_replication = cfg.slots - warmup;
  out.warmup_slots = warmup;
  out.requests.assign(cfg.n, 0);
  out.hits.assign(cfg.n, 0);
  out.replications.reserve(reps);
  std::uint64_t total_requests = 0, total_hits = 0;
  for (std::uint32_t r = 0; r < reps; ++r) {
    const RunCounts& rc = per_rep[r];
    for (ContentId i = 0; i < cfg.n; ++i) {
      out.requests[i] += rc.requests[i];
      out.hits[i] += rc.hits[i];
    }
    total_requests += rc.total_requests;
    total_hits += rc.total_hits;
    double p = static_cast<double>(rc.total_hits) / static_cast<double>(rc.total_requests);
    out.replications.push_back({derive_seed(cfg.master_seed, r), p});
  }
  out.hit_prob = static_cast<double>(total_hits) / static_cast<double>(total_requests);

  if (reps >= 2) {
    // Replication-level spread; replications are i.i.d. so this is an
    // honest standard error even though slots within a run are not.
    double mean = 0.0;
    for (const auto& r : out.replications) mean += r.hit_prob;
    mean /= reps;
    double ss = 0.0;
    for (const auto& r : out.replications) ss += (r.hit_prob - mean) * (r.hit_prob - mean);
    out.hit_prob_stderr = std::sqrt(ss / (reps - 1)) / std::sqrt(static_cast<double>(reps));
  } else {
    out.hit_prob_stderr =
        std::sqrt(out.hit_prob * (1.0 - out.hit_prob) / static_cast<double>(total_requests));
  }
  return out;
}

} // namespace freshcache
