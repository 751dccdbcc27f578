#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgemon {

using NodeIndex = std::uint32_t;
using DyadIndex = std::uint64_t;

/// Thrown when a caller passes parameters outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for malformed or inconsistent input data (files, streams).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}
}  // namespace detail

/// Unordered node pair in canonical form (u < v).
struct DyadId {
  NodeIndex u = 0;
  NodeIndex v = 1;

  constexpr DyadId() = default;
  constexpr DyadId(NodeIndex a, NodeIndex b) : u(a < b ? a : b), v(a < b ? b : a) {}

  friend constexpr bool operator==(const DyadId&, const DyadId&) = default;
  friend constexpr auto operator<=>(const DyadId&, const DyadId&) = default;
};

/// Number of unordered pairs on n nodes.
constexpr DyadIndex dyad_count(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Row-major rank of (u, v), u < v, among all pairs of an n-node graph.
constexpr DyadIndex dyad_rank(DyadId d, std::uint64_t n) {
  const std::uint64_t u = d.u;
  return u * n - u * (u + 1) / 2 + (d.v - u - 1);
}

/// Offset of the first pair with first endpoint u.
constexpr DyadIndex row_start(std::uint64_t u, std::uint64_t n) { return u * n - u * (u + 1) / 2; }

inline DyadId dyad_from_rank(DyadIndex r, std::uint64_t n) {
  std::uint64_t lo = 0, hi = n - 2;
  while (lo < hi) {
    const std::uint64_t mid = (lo + hi + 1) / 2;
    if (row_start(mid, n) <= r) lo = mid; else hi = mid - 1;
  }
  return {static_cast<NodeIndex>(lo), static_cast<NodeIndex>(lo + 1 + (r - row_start(lo, n)))};
}

/// Walks pair ranks in increasing order, keeping the (u, v) decoding incremental.
class RankCursor {
 public:
  explicit RankCursor(std::uint64_t n) : n_(n), row_end_(n > 1 ? n - 1 : 0) {}

  DyadId seek(DyadIndex r) {
    while (r >= row_end_) {
      ++u_;
      row_begin_ = row_end_;
      row_end_ += n_ - u_ - 1;
    }
    return {static_cast<NodeIndex>(u_), static_cast<NodeIndex>(u_ + 1 + (r - row_begin_))};
  }

 private:
  std::uint64_t n_;
  std::uint64_t u_ = 0;
  DyadIndex row_begin_ = 0;
  DyadIndex row_end_;
};

/// One observed graph. Edges are canonical, unique and sorted.
struct Snapshot {
  std::int64_t t = 0;
  std::vector<DyadId> edges;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// Sorts, deduplicates and range-checks an edge list in place.
inline void normalize_edges(std::vector<DyadId>& edges, std::uint64_t n) {
  for (const auto& e : edges) {
    if (e.u == e.v) throw InvalidArgument("self-loop on node " + std::to_string(e.u));
    if (e.v >= n) throw InvalidArgument("node index " + std::to_string(e.v) + " out of range");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace edgemon
