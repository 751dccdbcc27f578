#pragma once

// Dissimilarity between the estimates of two consecutive windows. Dyads are
// split into g contiguous groups (in sampled order); KL and KS are scored per
// group and reduced by the median, Euclidean is a single global distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edgemon/estimators.hpp"
#include "edgemon/parallel.hpp"
#include "edgemon/random.hpp"
#include "edgemon/types.hpp"

namespace edgemon {

enum class Measure { kKl, kKs, kEuclidean, kEuclideanGrouped };

inline std::string to_string(Measure m) {
  switch (m) {
    case Measure::kKl: return "kl";
    case Measure::kKs: return "ks";
    case Measure::kEuclidean: return "euclidean";
    case Measure::kEuclideanGrouped: return "euclidean-grouped";
  }
  return "?";
}

enum class KlDirection { kPreviousToCurrent, kCurrentToPrevious };

/// Contiguous, near-equal blocks over the k sampled dyads.
class GroupPartition {
 public:
  GroupPartition(std::size_t k, std::size_t groups) : k_(k) {
    detail::require(groups >= 1, "group count must be positive");
    detail::require(groups <= k, "more groups than tracked dyads");
    bounds_.reserve(groups + 1);
    for (std::size_t i = 0; i <= groups; ++i) bounds_.push_back(i * k / groups);
  }

  std::size_t groups() const { return bounds_.size() - 1; }
  std::size_t dyads() const { return k_; }
  std::size_t begin(std::size_t g) const { return bounds_[g]; }
  std::size_t end(std::size_t g) const { return bounds_[g + 1]; }
  std::size_t group_size(std::size_t g) const { return end(g) - begin(g); }

  std::size_t group_of(std::size_t j) const {
    return static_cast<std::size_t>(std::upper_bound(bounds_.begin(), bounds_.end(), j) - bounds_.begin()) - 1;
  }

  template <class T>
  std::span<const T> slice(const std::vector<T>& v, std::size_t g) const {
    return std::span<const T>(v).subspan(begin(g), group_size(g));
  }

 private:
  std::size_t k_;
  std::vector<std::size_t> bounds_;
};

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// KL(P_prev || P_curr) between two products of Bernoullis, after clamping
/// every probability to [eps, 1 - eps].
inline double kl_group(std::span<const double> prev, std::span<const double> curr, double eps = 0.0) {
  detail::require(prev.size() == curr.size(), "KL inputs differ in length");
  detail::require(eps >= 0.0 && eps < 0.5, "KL clamp must lie in [0, 0.5)");
  double kl = 0.0;
  for (std::size_t j = 0; j < prev.size(); ++j) {
    const double p = std::clamp(prev[j], eps, 1.0 - eps);
    const double q = std::clamp(curr[j], eps, 1.0 - eps);
    if (p > 0.0) kl += p * std::log(p / q);
    if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  }
  return std::max(0.0, kl);
}

inline constexpr std::size_t kMaxKsGroup = 30;

namespace detail {

// Probability of every joint state, dyad j contributing bit j.
inline std::vector<double> state_masses(std::span<const double> p) {
  std::vector<double> mass(std::size_t{1} << p.size(), 1.0);
  for (std::size_t x = 0; x < mass.size(); ++x)
    for (std::size_t j = 0; j < p.size(); ++j) mass[x] *= (x >> j & 1) ? p[j] : 1.0 - p[j];
  return mass;
}

// Counts of each state among `draws` independent joint draws (multinomial via
// sequential conditional binomials).
inline std::vector<std::int64_t> draw_state_counts(const std::vector<double>& mass, std::int64_t draws, Rng& rng) {
  std::vector<std::int64_t> counts(mass.size(), 0);
  double remaining = 1.0;
  std::int64_t left = draws;
  for (std::size_t x = 0; x < mass.size() && left > 0; ++x) {
    if (x + 1 == mass.size() || remaining <= 0.0) {
      counts[x] = left;
      break;
    }
    const double q = std::clamp(mass[x] / remaining, 0.0, 1.0);
    const std::int64_t c = q >= 1.0 ? left : std::binomial_distribution<std::int64_t>(left, q)(rng);
    counts[x] = c;
    left -= c;
    remaining -= mass[x];
  }
  return counts;
}

inline std::vector<std::uint32_t> draw_states(std::span<const double> p, std::int64_t draws, Rng& rng) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(draws));
  for (auto& x : out) {
    std::uint32_t code = 0;
    for (std::size_t j = 0; j < p.size(); ++j)
      if (uniform01(rng) < p[j]) code |= std::uint32_t{1} << j;
    x = code;
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double ks_from_sorted(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    std::uint32_t x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) x = a[i];
    else x = b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace detail

enum class KsSampling { kStateCounts, kDirect };

/// Two-sample KS statistic between B joint draws from each product
/// distribution, with each draw encoded as the integer whose bit j is dyad
/// j. Groups of up to 16 dyads draw state counts over the 2^m support in one
/// multinomial pass; larger groups draw vectors one at a time.
inline double ks_group(std::span<const double> prev, std::span<const double> curr, std::int64_t draws, Rng& rng,
                       KsSampling sampling = KsSampling::kStateCounts) {
  detail::require(prev.size() == curr.size(), "KS inputs differ in length");
  detail::require(prev.size() <= kMaxKsGroup, "KS group too large to encode as an integer");
  detail::require(draws >= 1, "KS needs at least one bootstrap draw");
  if (sampling == KsSampling::kStateCounts && prev.size() <= 16) {
    const auto a = detail::draw_state_counts(detail::state_masses(prev), draws, rng);
    const auto b = detail::draw_state_counts(detail::state_masses(curr), draws, rng);
    std::int64_t ca = 0, cb = 0, d = 0;
    for (std::size_t x = 0; x < a.size(); ++x) {
      ca += a[x];
      cb += b[x];
      d = std::max(d, ca > cb ? ca - cb : cb - ca);
    }
    return static_cast<double>(d) / static_cast<double>(draws);
  }
  const auto a = detail::draw_states(prev, draws, rng);
  const auto b = detail::draw_states(curr, draws, rng);
  return detail::ks_from_sorted(a, b);
}

inline double euclidean(std::span<const double> prev, std::span<const double> curr) {
  detail::require(prev.size() == curr.size(), "Euclidean inputs differ in length");
  double s = 0.0;
  for (std::size_t j = 0; j < prev.size(); ++j) s += (prev[j] - curr[j]) * (prev[j] - curr[j]);
  return std::sqrt(s);
}

struct ScoreOptions {
  Measure measure = Measure::kKl;
  KlDirection direction = KlDirection::kPreviousToCurrent;
  double kl_epsilon = -1.0;  ///< negative: 1 / (2 s) with s the shorter window
  std::int64_t ks_draws = 100000;
  std::size_t threads = 1;
};

inline double default_kl_epsilon(std::uint32_t window_length) {
  return window_length > 0 ? 0.5 / window_length : 0.0;
}

/// Dissimilarity of two consecutive windows. `pair_index` keys the
/// per-group random streams so results do not depend on thread scheduling.
inline double score_pair(const WindowEstimate& prev, const WindowEstimate& curr, const GroupPartition& partition,
                         const ScoreOptions& opt, std::uint64_t seed, std::uint64_t pair_index) {
  detail::require(prev.size() == curr.size(), "window estimates cover different dyad samples");
  detail::require(partition.dyads() == prev.size(), "group partition does not match the dyad sample");
  if (opt.measure == Measure::kEuclidean) return euclidean(prev.p, curr.p);

  const double eps = opt.kl_epsilon >= 0.0 ? opt.kl_epsilon
                                           : default_kl_epsilon(std::min(prev.length, curr.length));
  std::vector<double> per_group(partition.groups());
  parallel_for(partition.groups(), opt.threads, [&](std::size_t g) {
    const auto a = partition.slice(prev.p, g);
    const auto b = partition.slice(curr.p, g);
    switch (opt.measure) {
      case Measure::kKl:
        per_group[g] = opt.direction == KlDirection::kPreviousToCurrent ? kl_group(a, b, eps) : kl_group(b, a, eps);
        break;
      case Measure::kKs: {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::kDissimilarity), pair_index, g}));
        per_group[g] = ks_group(a, b, opt.ks_draws, rng);
        break;
      }
      default:
        per_group[g] = euclidean(a, b);
        break;
    }
  });
  return median(std::move(per_group));
}

}  // namespace edgemon
