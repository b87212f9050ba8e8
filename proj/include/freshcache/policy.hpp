#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "freshcache/model.hpp"

// Cache policies over slotted time.  Two serving disciplines:
//
//   - freshness-agnostic (LP, LRU): stale copies stay cached; a request
//     that finds a stale copy is a miss and refreshes the copy in place.
//   - freshness-aware (M-LP, M-LRU, LEH): every cached copy past its
//     freshness demand is dropped at the start of the slot, before the
//     request is served, so the cache only ever holds fresh content.
//
// Slot ordering is fixed: purge (aware kinds only), serve, replacement
// decision, then every cached copy ages by one.  A copy fetched in this
// slot therefore ends it with age 2 and can be served while its age is
// still <= F.  Ties in replacement decisions always evict the candidate
// with the higher content index, so runs are bit-for-bit reproducible.

namespace freshcache {

enum class PolicyKind { LP, LRU, MLP, MLRU, LEH };

inline const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::LP: return "LP";
    case PolicyKind::LRU: return "LRU";
    case PolicyKind::MLP: return "MLP";
    case PolicyKind::MLRU: return "MLRU";
    case PolicyKind::LEH: return "LEH";
  }
  return "?";
}

// True for kinds that purge stale copies before serving.
inline bool freshness_aware(PolicyKind k) {
  return k == PolicyKind::MLP || k == PolicyKind::MLRU || k == PolicyKind::LEH;
}

struct CacheEntry {
  ContentId content = 0;
  std::uint64_t age = 0;           // slots since fetch, counting the fetch slot
  std::uint64_t last_use_slot = 0; // most recent slot this entry served or was fetched
};

class CacheState {
public:
  explicit CacheState(std::uint64_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("cache capacity must be at least 1");
    entries_.reserve(static_cast<std::size_t>(capacity));
  }

  std::uint64_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() == capacity_; }
  const std::vector<CacheEntry>& entries() const { return entries_; }

  CacheEntry* find(ContentId c) {
    for (auto& e : entries_)
      if (e.content == c) return &e;
    return nullptr;
  }
  const CacheEntry* find(ContentId c) const {
    return const_cast<CacheState*>(this)->find(c);
  }

  void insert(CacheEntry e) {
    if (full()) throw std::logic_error("insert into full cache");
    if (find(e.content)) throw std::logic_error("duplicate cache entry");
    entries_.push_back(e);
  }

  bool erase(ContentId c) {
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (it->content == c) {
        entries_.erase(it);
        return true;
      }
    }
    return false;
  }

  void age_all() {
    for (auto& e : entries_) ++e.age;
  }

private:
  std::uint64_t capacity_;
  std::vector<CacheEntry> entries_;
};

enum class SlotResult { Hit, MissNotPresent, MissStale };

struct SlotOutcome {
  ContentId requested = 0;
  SlotResult result = SlotResult::MissNotPresent;
  std::optional<ContentId> evicted;
  bool inserted = false; // covers both fresh fetches and in-place refreshes
};

struct StepOptions {
  // Under LP/LRU a request that refreshes a stale copy also counts as a
  // use for recency.  Turn off to measure how much that choice matters.
  bool stale_refresh_updates_recency = true;
  // LP normally ranks by true popularity; with a counter attached it can
  // rank by observed request counts instead.
  bool lp_use_frequency_counts = false;
};

// Observed request counts, for running LP without oracle popularity.
class FrequencyCounter {
public:
  explicit FrequencyCounter(ContentId n) : counts_(static_cast<std::size_t>(n) + 1, 0) {}

  void record(ContentId i) {
    if (i < 1 || i >= counts_.size()) throw std::out_of_range("frequency counter: bad content index");
    ++counts_[i];
  }
  std::uint64_t count(ContentId i) const {
    if (i < 1 || i >= counts_.size()) throw std::out_of_range("frequency counter: bad content index");
    return counts_[i];
  }

private:
  std::vector<std::uint64_t> counts_;
};

// Drop every cached copy whose age exceeds its freshness demand.  Returns
// how many copies were dropped.  Freshness-aware kinds call this at the
// start of each slot; it is public so state invariants can be checked
// directly.
inline std::size_t purge_stale(CacheState& state, const FreshnessProfile& profile) {
  std::size_t dropped = 0;
  // Walk a copy of the ids first: erase() shifts entries.
  std::vector<ContentId> stale;
  for (const auto& e : state.entries())
    if (e.age > profile.freshness(e.content)) stale.push_back(e.content);
  for (auto c : stale) {
    state.erase(c);
    ++dropped;
  }
  return dropped;
}

// Least popular cached content; ties go to the higher index.
inline ContentId select_victim_lp(const CacheState& state, const PopularityModel& model) {
  if (state.size() == 0) throw std::logic_error("victim selection on empty cache");
  ContentId victim = 0;
  double worst = 2.0;
  for (const auto& e : state.entries()) {
    double p = model.p(e.content);
    if (p < worst || (p == worst && e.content > victim)) {
      worst = p;
      victim = e.content;
    }
  }
  return victim;
}

// Least recently used cached content; ties go to the higher index.
inline ContentId select_victim_lru(const CacheState& state) {
  if (state.size() == 0) throw std::logic_error("victim selection on empty cache");
  ContentId victim = 0;
  std::uint64_t oldest = UINT64_MAX;
  for (const auto& e : state.entries()) {
    if (e.last_use_slot < oldest || (e.last_use_slot == oldest && e.content > victim)) {
      oldest = e.last_use_slot;
      victim = e.content;
    }
  }
  return victim;
}

// Expected number of future serves a copy of `content` can still provide:
// it has F(i) - age slots of remaining freshness (F(i) - 1 for a copy
// about to be fetched, which enters at age 1), and each of those slots
// requests it independently with probability p(i).
inline double expected_future_hits(ContentId content, std::optional<std::uint64_t> age_if_cached,
                                   const PopularityModel& model, const FreshnessProfile& profile) {
  std::uint64_t f = profile.freshness(content);
  std::uint64_t age = age_if_cached.value_or(1);
  if (age > f)
    throw std::invalid_argument("expected_future_hits: copy of content " +
                                std::to_string(content) + " is already stale");
  return static_cast<double>(f - age) * model.p(content);
}

// Cached copy with the fewest expected future serves, if the arriving
// content would beat it; otherwise no eviction.  Ties among cached copies
// go to the higher index; a tie with the arriving content keeps the cache
// unchanged.
inline std::optional<ContentId> select_victim_leh(const CacheState& state, ContentId arriving,
                                                  const PopularityModel& model,
                                                  const FreshnessProfile& profile) {
  if (state.size() == 0) throw std::logic_error("victim selection on empty cache");
  ContentId victim = 0;
  double fewest = -1.0;
  bool first = true;
  for (const auto& e : state.entries()) {
    double v = expected_future_hits(e.content, e.age, model, profile);
    if (first || v < fewest || (v == fewest && e.content > victim)) {
      fewest = v;
      victim = e.content;
      first = false;
    }
  }
  double gain = expected_future_hits(arriving, std::nullopt, model, profile);
  if (gain > fewest) return victim;
  return std::nullopt;
}

// Advance one slot: serve `request`, apply the replacement rule for
// `kind`, age the cache.  `slot` is the caller's clock and only feeds
// recency bookkeeping.  The counter, when given, records the request
// before any decision so counts reflect the full observed stream.
inline SlotOutcome step(CacheState& state, PolicyKind kind, ContentId request, std::uint64_t slot,
                        const PopularityModel& model, const FreshnessProfile& profile,
                        const StepOptions& opts = {}, FrequencyCounter* counter = nullptr) {
  if (request < 1 || request > model.catalog_size())
    throw std::out_of_range("step: request index " + std::to_string(request) + " outside 1.." +
                            std::to_string(model.catalog_size()));
  if (profile.catalog_size() != model.catalog_size())
    throw std::invalid_argument("step: freshness profile and popularity model disagree on catalog size");

  if (counter) counter->record(request);

  SlotOutcome out;
  out.requested = request;

  const bool aware = freshness_aware(kind);
  if (aware) purge_stale(state, profile);

  if (CacheEntry* e = state.find(request)) {
    if (aware || e->age <= profile.freshness(request)) {
      out.result = SlotResult::Hit;
      e->last_use_slot = slot;
    } else {
      // Stale copy under a freshness-agnostic kind: miss, refresh in place.
      out.result = SlotResult::MissStale;
      e->age = 1; // ends the slot at age 2, same as a fresh fetch
      out.inserted = true;
      if (opts.stale_refresh_updates_recency) e->last_use_slot = slot;
    }
    state.age_all();
    return out;
  }

  out.result = SlotResult::MissNotPresent;
  if (!state.full()) {
    state.insert({request, 1, slot});
    out.inserted = true;
    state.age_all();
    return out;
  }

  switch (kind) {
    case PolicyKind::LP:
    case PolicyKind::MLP: {
      ContentId victim;
      bool arriving_wins;
      if (opts.lp_use_frequency_counts && counter) {
        victim = 0;
        std::uint64_t fewest = UINT64_MAX;
        for (const auto& e : state.entries()) {
          std::uint64_t c = counter->count(e.content);
          if (c < fewest || (c == fewest && e.content > victim)) {
            fewest = c;
            victim = e.content;
          }
        }
        arriving_wins = counter->count(request) > fewest;
      } else {
        victim = select_victim_lp(state, model);
        arriving_wins = model.p(request) > model.p(victim);
      }
      if (arriving_wins) {
        state.erase(victim);
        state.insert({request, 1, slot});
        out.evicted = victim;
        out.inserted = true;
      }
      break;
    }
    case PolicyKind::LRU:
    case PolicyKind::MLRU: {
      ContentId victim = select_victim_lru(state);
      state.erase(victim);
      state.insert({request, 1, slot});
      out.evicted = victim;
      out.inserted = true;
      break;
    }
    case PolicyKind::LEH: {
      if (auto victim = select_victim_leh(state, request, model, profile)) {
        state.erase(*victim);
        state.insert({request, 1, slot});
        out.evicted = *victim;
        out.inserted = true;
      }
      break;
    }
  }

  state.age_all();
  return out;
}

} // namespace freshcache
