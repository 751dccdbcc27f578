#pragma once

// Streaming change-point detector: project each snapshot onto the tracked
// dyads, close windows, estimate, score consecutive windows, and flag pairs
// whose score exceeds an upper-quantile threshold of the score series.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "edgemon/chain_stats.hpp"
#include "edgemon/dissimilarity.hpp"
#include "edgemon/estimators.hpp"
#include "edgemon/random.hpp"
#include "edgemon/types.hpp"

namespace edgemon {

/// Scores for consecutive window pairs; scores[i] compares windows i+1 and
/// i+2 (1-based) and is labelled by the later window.
struct ScoreSeries {
  std::vector<double> scores;
  Measure measure = Measure::kKl;

  std::size_t size() const { return scores.size(); }
  static std::int64_t window_of(std::size_t i) { return static_cast<std::int64_t>(i) + 2; }
};

/// 1-based rank of the upper-`alpha_s` order statistic among n values.
inline std::size_t quantile_rank(std::size_t n, double alpha_s) {
  // the tolerance keeps products like 0.95 * 100 from rounding up to 96
  const double x = (1.0 - alpha_s) * static_cast<double>(n);
  const auto r = static_cast<std::size_t>(std::ceil(x - 1e-9));
  return std::clamp<std::size_t>(r, 1, n);
}

inline double upper_quantile(std::vector<double> v, double alpha_s) {
  const std::size_t r = quantile_rank(v.size(), alpha_s) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(r), v.end());
  return v[r];
}

/// Mean over `replicates` bootstrap resamples of the upper-alpha_s quantile;
/// with zero replicates, the plain empirical quantile of `scores`.
inline double compute_threshold(std::span<const double> scores, double alpha_s, std::size_t replicates,
                                std::uint64_t seed) {
  detail::require(scores.size() >= 2, "threshold needs at least two scores");
  detail::require(alpha_s > 0.0 && alpha_s < 1.0, "significance level must lie in (0, 1)");
  std::vector<double> v(scores.begin(), scores.end());
  if (replicates == 0) return upper_quantile(std::move(v), alpha_s);
  Rng rng = make_rng(seed, Stream::kThreshold);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> resample(v.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < replicates; ++r) {
    for (auto& x : resample) x = v[pick(rng)];
    sum += upper_quantile(resample, alpha_s);
  }
  return sum / static_cast<double>(replicates);
}

/// Windows (1-based) whose score against the previous window is strictly above tau.
inline std::vector<std::int64_t> flag_changes(std::span<const double> scores, double tau) {
  detail::require(!std::isnan(tau), "threshold must not be NaN");
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] > tau) out.push_back(ScoreSeries::window_of(i));
  return out;
}

/// Rolling variant (not part of the retrospective procedure): score i is
/// flagged when it exceeds the quantile of the `history` scores before it.
/// Returns the per-score thresholds; NaN until two prior scores exist.
inline std::vector<double> online_thresholds(std::span<const double> scores, double alpha_s, std::size_t history) {
  detail::require(history >= 2, "online threshold needs a history of at least two scores");
  std::vector<double> tau(scores.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 2; i < scores.size(); ++i) {
    const std::size_t from = i > history ? i - history : 0;
    tau[i] = upper_quantile(std::vector<double>(scores.begin() + static_cast<std::ptrdiff_t>(from),
                                                scores.begin() + static_cast<std::ptrdiff_t>(i)),
                            alpha_s);
  }
  return tau;
}

struct DetectorConfig {
  WindowConfig window;
  bool explicit_windows = false;  ///< windows delimited by a key instead of a fixed size
  std::size_t dyads = 250;
  SamplingStrategy strategy = SamplingStrategy::kUniformDyads;
  std::size_t priming = 0;  ///< snapshots used by observed-dyad sampling (0: one window)
  Estimator estimator = Estimator::kFrequency;
  double weight_exponent = kInfiniteExponent;
  ScoreOptions score;
  std::size_t groups = 25;
  double quantile = 0.05;
  std::size_t bootstrap = 0;
  std::size_t online_history = 0;  ///< > 0 enables the rolling threshold
  std::uint64_t seed = 1;

  void validate() const {
    if (!explicit_windows) window.validate();
    detail::require(dyads >= 1, "dyad sample size must be positive");
    detail::require(groups >= 1 && groups <= dyads, "group count must lie in [1, k]");
    detail::require(quantile > 0.0 && quantile < 1.0, "significance level must lie in (0, 1)");
    detail::require(weight_exponent >= 0.0, "weight exponent must be non-negative");
    detail::require(score.ks_draws >= 1, "KS bootstrap size must be positive");
    detail::require(score.threads >= 1, "thread count must be positive");
    if (score.measure == Measure::kKs)
      detail::require((dyads + groups - 1) / groups <= kMaxKsGroup, "KS groups would exceed 30 dyads");
    detail::require(online_history == 0 || online_history >= 2, "online history must be 0 or at least 2");
  }
};

struct DetectionResult {
  ScoreSeries scores;
  double threshold = 0.0;
  std::vector<std::int64_t> flagged;
  std::vector<double> online_threshold;  ///< filled only in online mode
  std::vector<std::int64_t> window_ends;  ///< last snapshot ordinal of each window
  std::vector<std::optional<double>> alpha;  ///< per-window alpha estimate (MLE only)
  DyadSample sample;
  DetectorConfig config;
  std::int64_t snapshots = 0;
  double wall_seconds = 0.0;
  std::size_t state_bytes = 0;  ///< peak detector state, excluding the input snapshot
};

/// Single-pass detector. Feed snapshots in time order, then call finish().
/// Memory is O(k * s) for the window state plus O(w) for the score series.
class StreamingDetector {
 public:
  StreamingDetector(const DetectorConfig& cfg, std::uint32_t nodes)
      : cfg_(cfg), nodes_(nodes), partition_(cfg.dyads, cfg.groups), started_(Clock::now()) {
    cfg_.validate();
    if (cfg_.priming == 0) cfg_.priming = static_cast<std::size_t>(cfg_.window.size);
    if (cfg_.strategy == SamplingStrategy::kUniformDyads) set_sample(sample_dyads(nodes_, cfg_.dyads, cfg_.strategy, {}, cfg_.seed));
  }

  /// Fixed-size windows.
  void push(const Snapshot& s) {
    detail::require(!cfg_.explicit_windows, "detector expects keyed snapshots");
    if (!ready()) return prime(s, std::nullopt);
    consume(s);
  }

  /// Explicit windows: a change of `key` closes the current window.
  void push(const Snapshot& s, std::int64_t key) {
    detail::require(cfg_.explicit_windows, "detector expects fixed-size windows");
    if (!ready()) return prime(s, key);
    if (current_key_ && *current_key_ != key) close_window();
    current_key_ = key;
    consume(s);
  }

  const DyadSample& sample() const { return sample_; }
  std::size_t windows() const { return window_ends_.size(); }

  DetectionResult finish() {
    if (!ready()) {
      if (buffered_.empty()) throw DataError("no snapshots were supplied");
      sample_from_buffer();
    }
    if (cfg_.explicit_windows && accumulator_ && accumulator_->length() > 0) close_window();
    if (seen_ == 0) throw DataError("no snapshots were supplied");
    if (window_ends_.empty()) throw DataError("input is shorter than one window");
    if (result_scores_.size() < 2) throw DataError("at least three windows are needed to set a threshold");

    DetectionResult r;
    r.scores.scores = result_scores_;
    r.scores.measure = cfg_.score.measure;
    r.threshold = compute_threshold(result_scores_, cfg_.quantile, cfg_.bootstrap, cfg_.seed);
    if (cfg_.online_history > 0) {
      r.online_threshold = online_thresholds(result_scores_, cfg_.quantile, cfg_.online_history);
      for (std::size_t i = 0; i < result_scores_.size(); ++i)
        if (!std::isnan(r.online_threshold[i]) && result_scores_[i] > r.online_threshold[i])
          r.flagged.push_back(ScoreSeries::window_of(i));
    } else {
      r.flagged = flag_changes(result_scores_, r.threshold);
    }
    r.window_ends = window_ends_;
    r.alpha = alphas_;
    r.sample = sample_;
    r.config = cfg_;
    r.snapshots = seen_;
    r.state_bytes = std::max(peak_bytes_, state_bytes());
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - started_).count();
    return r;
  }

  /// Bytes held by window state, estimates and scores.
  std::size_t state_bytes() const {
    std::size_t b = row_.capacity() + result_scores_.capacity() * sizeof(double) +
                    window_ends_.capacity() * sizeof(std::int64_t) + alphas_.capacity() * sizeof(std::optional<double>);
    if (projector_) b += projector_->memory_bytes();
    if (accumulator_) b += accumulator_->memory_bytes();
    if (ring_) b += ring_->memory_bytes();
    if (previous_) b += previous_->p.capacity() * sizeof(double) + previous_->degenerate.capacity();
    b += sample_.dyads.capacity() * sizeof(DyadId);
    return b;
  }

 private:
  using Clock = std::chrono::steady_clock;

  bool ready() const { return projector_.has_value(); }

  void set_sample(DyadSample s) {
    sample_ = std::move(s);
    projector_.emplace(sample_);
    if (cfg_.explicit_windows || !cfg_.window.overlapping()) accumulator_.emplace(sample_.size());
    else ring_.emplace(sample_.size(), static_cast<std::size_t>(cfg_.window.size));
  }

  void prime(const Snapshot& s, std::optional<std::int64_t> key) {
    buffered_.push_back(s);
    keys_.push_back(key.value_or(0));
    if (buffered_.size() >= cfg_.priming) sample_from_buffer();
  }

  void sample_from_buffer() {
    set_sample(sample_dyads(nodes_, cfg_.dyads, cfg_.strategy, buffered_, cfg_.seed));
    auto snaps = std::move(buffered_);
    auto keys = std::move(keys_);
    buffered_.clear();
    keys_.clear();
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      if (cfg_.explicit_windows) push(snaps[i], keys[i]);
      else consume(snaps[i]);
    }
  }

  void consume(const Snapshot& s) {
    ++seen_;
    projector_->project(s, row_);
    if (ring_) {
      ring_->push(row_);
      const auto size = cfg_.window.size;
      if (seen_ >= size && (seen_ - size) % cfg_.window.step == 0) emit(ring_->counts());
    } else {
      accumulator_->push(row_);
      if (!cfg_.explicit_windows && accumulator_->length() == static_cast<std::uint32_t>(cfg_.window.size))
        close_window();
    }
    peak_bytes_ = std::max(peak_bytes_, state_bytes());
  }

  void close_window() {
    if (accumulator_->length() < 2)
      throw DataError("window ending at snapshot " + std::to_string(seen_) + " has fewer than two snapshots");
    emit(accumulator_->counts());
    accumulator_->reset();
  }

  void emit(const ChainCounts& counts) {
    WindowEstimate est = estimate_window(counts, cfg_.estimator, cfg_.weight_exponent);
    window_ends_.push_back(seen_);
    alphas_.push_back(est.alpha);
    if (previous_) {
      const auto pair = static_cast<std::uint64_t>(result_scores_.size());
      result_scores_.push_back(score_pair(*previous_, est, partition_, cfg_.score, cfg_.seed, pair));
    }
    previous_ = std::move(est);  // the older window is dropped once compared
  }

  DetectorConfig cfg_;
  std::uint32_t nodes_;
  GroupPartition partition_;
  Clock::time_point started_;
  DyadSample sample_;
  std::optional<DyadProjector> projector_;
  std::optional<ChainAccumulator> accumulator_;
  std::optional<ChainRing> ring_;
  std::optional<WindowEstimate> previous_;
  std::optional<std::int64_t> current_key_;
  std::vector<std::uint8_t> row_;
  std::vector<Snapshot> buffered_;
  std::vector<std::int64_t> keys_;
  std::vector<double> result_scores_;
  std::vector<std::int64_t> window_ends_;
  std::vector<std::optional<double>> alphas_;
  std::int64_t seen_ = 0;
  std::size_t peak_bytes_ = 0;
};

/// Drains `source` (a callable returning std::optional<Snapshot>) through a
/// fixed-window detector.
template <class Source>
DetectionResult run_pipeline(Source&& source, std::uint32_t nodes, const DetectorConfig& cfg) {
  StreamingDetector det(cfg, nodes);
  while (auto s = source()) det.push(*s);
  return det.finish();
}

}  // namespace edgemon
