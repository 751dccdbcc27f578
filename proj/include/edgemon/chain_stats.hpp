#pragma once

// Tracked-dyad sampling, window layout, and per-window two-state Markov
// chain transition counts. Everything here is O(k) or O(k * s) in memory,
// independent of the node count and of the number of edges per snapshot.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "edgemon/random.hpp"
#include "edgemon/types.hpp"

namespace edgemon {

struct WindowConfig {
  std::int64_t size = 20;  ///< snapshots per window (s)
  std::int64_t step = 20;  ///< step between window ends (eta)

  void validate() const {
    detail::require(size >= 2, "window size must be at least 2");
    detail::require(step >= 1 && step <= size, "window step must lie in [1, window size]");
  }
  bool overlapping() const { return step < size; }
};

/// Transition counts of one dyad's chain within one window.
struct TransitionCounts {
  std::uint32_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;
  std::uint32_t n1 = 0;  ///< snapshots in which the dyad is an edge

  std::uint32_t from0() const { return n00 + n01; }
  std::uint32_t from1() const { return n10 + n11; }
  std::uint32_t transitions() const { return n00 + n01 + n10 + n11; }

  friend bool operator==(const TransitionCounts&, const TransitionCounts&) = default;
};

/// Counts for all tracked dyads over one window of `length` snapshots.
struct ChainCounts {
  std::vector<TransitionCounts> dyads;
  std::uint32_t length = 0;

  std::size_t size() const { return dyads.size(); }
  const TransitionCounts& operator[](std::size_t j) const { return dyads[j]; }
  friend bool operator==(const ChainCounts&, const ChainCounts&) = default;
};

/// Counts of a single binary trace.
inline TransitionCounts count_trace(std::span<const std::uint8_t> trace) {
  TransitionCounts c;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    c.n1 += trace[i];
    if (i == 0) continue;
    switch (trace[i - 1] * 2 + trace[i]) {
      case 0: ++c.n00; break;
      case 1: ++c.n01; break;
      case 2: ++c.n10; break;
      default: ++c.n11; break;
    }
  }
  return c;
}

enum class SamplingStrategy { kUniformDyads, kObservedDyads };

inline std::string to_string(SamplingStrategy s) {
  return s == SamplingStrategy::kUniformDyads ? "uniform-dyads" : "observed-dyads";
}

struct DyadSample {
  std::vector<DyadId> dyads;
  SamplingStrategy strategy = SamplingStrategy::kUniformDyads;
  std::uint64_t seed = 0;

  std::size_t size() const { return dyads.size(); }
};

/// Draws k distinct dyads once per run. Uniform sampling picks among all
/// N(N-1)/2 pairs; observed sampling picks among pairs that are an edge in at
/// least one of the priming snapshots. Order is the draw order.
inline DyadSample sample_dyads(std::uint32_t nodes, std::size_t k, SamplingStrategy strategy,
                               std::span<const Snapshot> priming, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kDyadSample);
  DyadSample out;
  out.strategy = strategy;
  out.seed = seed;
  out.dyads.reserve(k);

  if (strategy == SamplingStrategy::kUniformDyads) {
    const DyadIndex pool = dyad_count(nodes);
    detail::require(k <= pool, "sample size exceeds the number of dyads");
    if (k * 2 > pool) {
      std::vector<DyadIndex> all(pool);
      std::iota(all.begin(), all.end(), DyadIndex{0});
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<DyadIndex> pick(i, pool - 1);
        std::swap(all[i], all[pick(rng)]);
        out.dyads.push_back(dyad_from_rank(all[i], nodes));
      }
    } else {
      std::unordered_set<DyadIndex> seen;
      std::uniform_int_distribution<DyadIndex> pick(0, pool - 1);
      while (out.dyads.size() < k) {
        const DyadIndex r = pick(rng);
        if (seen.insert(r).second) out.dyads.push_back(dyad_from_rank(r, nodes));
      }
    }
    return out;
  }

  detail::require(!priming.empty(), "observed-dyad sampling needs priming snapshots");
  std::vector<DyadId> pool;
  for (const auto& s : priming)
    for (const auto& e : s.edges) {
      detail::require(e.u < e.v && e.v < nodes, "priming edge out of range");
      pool.push_back(e);
    }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  detail::require(k <= pool.size(), "sample size exceeds the number of observed dyads");
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.dyads.push_back(pool[i]);
  }
  return out;
}

/// End indices (1-based) s, s + eta, ... not exceeding T.
inline std::vector<std::int64_t> window_index_sequence(std::int64_t length, const WindowConfig& cfg) {
  cfg.validate();
  if (length < cfg.size)
    throw InvalidArgument("sequence of " + std::to_string(length) + " snapshots is shorter than one window");
  std::vector<std::int64_t> ends;
  for (std::int64_t t = cfg.size; t <= length; t += cfg.step) ends.push_back(t);
  return ends;
}

/// Maps a snapshot's edge list onto the tracked dyads via a hash index, at
/// cost linear in the number of edges.
class DyadProjector {
 public:
  explicit DyadProjector(const DyadSample& sample) : k_(sample.size()) {
    tracked_.reserve(sample.size());
    for (std::size_t j = 0; j < sample.size(); ++j) tracked_.push_back({sample.dyads[j], static_cast<std::uint32_t>(j)});
    std::sort(tracked_.begin(), tracked_.end());
  }

  std::size_t size() const { return k_; }

  /// Sorted edge lists are probed once per tracked dyad; unsorted ones fall
  /// back to one lookup per edge.
  void project(const Snapshot& s, std::vector<std::uint8_t>& row) const {
    row.assign(k_, 0);
    if (s.edges.size() > tracked_.size() && std::is_sorted(s.edges.begin(), s.edges.end())) {
      auto from = s.edges.begin();
      for (const auto& [d, j] : tracked_) {
        from = std::lower_bound(from, s.edges.end(), d);
        if (from == s.edges.end()) break;
        if (*from == d) row[j] = 1;
      }
      return;
    }
    for (const auto& e : s.edges) {
      auto it = std::lower_bound(tracked_.begin(), tracked_.end(), Entry{e, 0});
      if (it != tracked_.end() && it->dyad == e) row[it->index] = 1;
    }
  }

  std::vector<std::uint8_t> project(const Snapshot& s) const {
    std::vector<std::uint8_t> row;
    project(s, row);
    return row;
  }

  std::size_t memory_bytes() const { return tracked_.capacity() * sizeof(Entry); }

 private:
  struct Entry {
    DyadId dyad;
    std::uint32_t index;
    friend auto operator<=>(const Entry& a, const Entry& b) { return a.dyad <=> b.dyad; }
    friend bool operator==(const Entry& a, const Entry& b) { return a.dyad == b.dyad; }
  };

  std::size_t k_;
  std::vector<Entry> tracked_;
};

/// Running counts over a stream of projected rows; the window is whatever has
/// been pushed since the last reset.
class ChainAccumulator {
 public:
  explicit ChainAccumulator(std::size_t k) : counts_{std::vector<TransitionCounts>(k), 0}, last_(k, 0) {}

  void push(std::span<const std::uint8_t> row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      auto& c = counts_.dyads[j];
      c.n1 += row[j];
      if (counts_.length > 0) {
        switch (last_[j] * 2 + row[j]) {
          case 0: ++c.n00; break;
          case 1: ++c.n01; break;
          case 2: ++c.n10; break;
          default: ++c.n11; break;
        }
      }
      last_[j] = row[j];
    }
    ++counts_.length;
  }

  const ChainCounts& counts() const { return counts_; }
  std::uint32_t length() const { return counts_.length; }

  void reset() {
    std::fill(counts_.dyads.begin(), counts_.dyads.end(), TransitionCounts{});
    counts_.length = 0;
  }

  std::size_t memory_bytes() const {
    return counts_.dyads.capacity() * sizeof(TransitionCounts) + last_.capacity();
  }

 private:
  ChainCounts counts_;
  std::vector<std::uint8_t> last_;
};

/// Keeps the last `s` projected rows (k * s bytes) for overlapping windows.
class ChainRing {
 public:
  ChainRing(std::size_t k, std::size_t s) : k_(k), s_(s), rows_(k * s, 0) {}

  void push(std::span<const std::uint8_t> row) {
    std::copy(row.begin(), row.end(), rows_.begin() + static_cast<std::ptrdiff_t>(head_ * k_));
    head_ = (head_ + 1) % s_;
    filled_ = std::min(filled_ + 1, s_);
  }

  bool full() const { return filled_ == s_; }

  ChainCounts counts() const {
    ChainCounts c{std::vector<TransitionCounts>(k_), static_cast<std::uint32_t>(filled_)};
    const std::size_t oldest = (head_ + s_ - filled_) % s_;
    std::vector<std::uint8_t> trace(filled_);
    for (std::size_t j = 0; j < k_; ++j) {
      for (std::size_t i = 0; i < filled_; ++i) trace[i] = rows_[((oldest + i) % s_) * k_ + j];
      c.dyads[j] = count_trace(trace);
    }
    return c;
  }

  std::size_t memory_bytes() const { return rows_.capacity(); }

 private:
  std::size_t k_, s_;
  std::vector<std::uint8_t> rows_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
};

/// Counts for one complete window given its snapshots in time order.
inline ChainCounts accumulate_counts(std::span<const Snapshot> window, const DyadSample& sample,
                                     std::uint32_t nodes, std::int64_t expected_size) {
  if (static_cast<std::int64_t>(window.size()) != expected_size)
    throw InvalidArgument("window has " + std::to_string(window.size()) + " snapshots, expected " +
                          std::to_string(expected_size));
  for (const auto& d : sample.dyads) detail::require(d.u < d.v && d.v < nodes, "tracked dyad out of node range");
  const DyadProjector projector(sample);
  ChainAccumulator acc(sample.size());
  std::vector<std::uint8_t> row;
  for (const auto& s : window) {
    projector.project(s, row);
    acc.push(row);
  }
  return acc.counts();
}

}  // namespace edgemon
