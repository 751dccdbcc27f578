#pragma once

// Synthetic evaluation: scripted SBM-CL scenarios, precision/recall against
// injected changes, ground-truth likelihood curves, and scaling benchmarks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "edgemon/detector.hpp"
#include "edgemon/generator.hpp"
#include "edgemon/parallel.hpp"

namespace edgemon {

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t true_positives = 0;
};

/// Greedy nearest matching: candidate (flagged, truth) pairs within
/// `tolerance` windows are taken in order of distance, each side used once.
inline PrecisionRecall precision_recall(std::span<const std::int64_t> flagged, std::span<const std::int64_t> truth,
                                        std::int64_t tolerance) {
  detail::require(tolerance >= 0, "matching tolerance must be non-negative");
  std::vector<std::tuple<std::int64_t, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < flagged.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const auto d = std::abs(flagged[i] - truth[j]);
      if (d <= tolerance) pairs.emplace_back(d, i, j);
    }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> used_f(flagged.size()), used_t(truth.size());
  PrecisionRecall pr;
  for (auto [d, i, j] : pairs) {
    if (used_f[i] || used_t[j]) continue;
    used_f[i] = used_t[j] = true;
    ++pr.true_positives;
  }
  const auto tp = static_cast<double>(pr.true_positives);
  pr.precision = flagged.empty() ? 1.0 : tp / static_cast<double>(flagged.size());
  pr.recall = truth.empty() ? 1.0 : tp / static_cast<double>(truth.size());
  return pr;
}

/// Window (1-based) whose range first covers snapshot t.
inline std::int64_t window_containing(std::int64_t t, const WindowConfig& w) {
  if (t <= w.size) return 1;
  return (t - w.size + w.step - 1) / w.step + 1;
}

inline std::vector<std::int64_t> truth_windows(std::span<const std::int64_t> change_points, const WindowConfig& w) {
  std::vector<std::int64_t> out;
  for (auto t : change_points) out.push_back(window_containing(t, w));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Scripted SBM-CL scenario

/// The seven-change SBM-CL scenario: weight regeneration for 1/3 and 2/3 of
/// the nodes, density-preserving rate changes for half and all communities,
/// density-changing rate changes for half and all communities, and a full
/// community reassignment.
///
/// Weights follow a two-point law so that regenerated nodes move between
/// hub-like and peripheral; block rates are dense inside communities and
/// moderate across them.
struct SbmClScenario {
  std::uint32_t nodes = 1000;
  std::uint32_t communities = 4;
  std::int64_t length = 3000;
  std::int64_t window = 20;
  double alpha = 0.49;  ///< continuity rate 1 - alpha = 0.51
  WeightLaw weights = WeightLaw::two_point(0.1, 1.0, 0.7);
  double intra_low = 0.9, intra_high = 1.0;
  double inter_low = 0.2, inter_high = 0.5;
  double half_retained_change = 0.7;  ///< magnitude, half the communities, density kept
  double all_retained_change = 0.6;   ///< magnitude, all communities, density kept
  double half_density_change = 0.6;   ///< magnitude, half the communities, density changed
  double all_density_change = 0.95;   ///< magnitude, all communities, density changed
  double half_density_factor = 1.35;
  double all_density_factor = 0.4;
  std::vector<std::int64_t> change_windows{15, 30, 60, 75, 90, 105, 135};
};

inline BlockChungLu make_initial_model(const SbmClScenario& sc, Rng& rng) {
  sc.weights.validate();
  detail::require(sc.communities >= 1, "scenario needs at least one community");
  BlockChungLu m;
  m.community.resize(sc.nodes);
  m.weights.resize(sc.nodes);
  std::uniform_int_distribution<std::uint32_t> comm(0, sc.communities - 1);
  for (std::uint32_t i = 0; i < sc.nodes; ++i) {
    m.community[i] = comm(rng);
    m.weights[i] = sc.weights(rng);
  }
  m.rates = BlockMatrix(sc.communities);
  std::uniform_real_distribution<double> intra(sc.intra_low, sc.intra_high), inter(sc.inter_low, sc.inter_high);
  for (std::uint32_t r = 0; r < sc.communities; ++r)
    for (std::uint32_t s = r; s < sc.communities; ++s) m.rates.set(r, s, r == s ? intra(rng) : inter(rng));
  return m;
}

inline ModelSchedule make_table3_schedule(const SbmClScenario& sc, std::uint64_t seed) {
  detail::require(sc.change_windows.size() == 7, "the scripted scenario has exactly seven changes");
  Rng rng = make_rng(seed, Stream::kSchedule);
  ModelSchedule sched;
  sched.initial = make_initial_model(sc, rng);
  sched.alpha = sc.alpha;
  const std::vector<Mutation> kinds{
      RegenerateWeights{1.0 / 3.0, sc.weights},
      RegenerateWeights{2.0 / 3.0, sc.weights},
      ChangeBlockRates{0.5, sc.half_retained_change, 1.0},
      ChangeBlockRates{1.0, sc.all_retained_change, 1.0},
      ChangeBlockRates{0.5, sc.half_density_change, sc.half_density_factor},
      ChangeBlockRates{1.0, sc.all_density_change, sc.all_density_factor},
      ReassignCommunities{1.0},
  };
  for (std::size_t i = 0; i < kinds.size(); ++i)
    sched.mutations.push_back({sc.change_windows[i] * sc.window, kinds[i], std::nullopt});
  return sched;
}

/// A constant-model ER schedule (no changes).
inline ModelSchedule make_null_schedule(std::uint32_t nodes, double p, double alpha) {
  ModelSchedule s;
  s.initial = ErdosRenyi{nodes, p};
  s.alpha = alpha;
  return s;
}

struct Variant {
  std::string name;
  Estimator estimator = Estimator::kFrequency;
  Measure measure = Measure::kKl;
};

inline std::vector<Variant> table3_variants() {
  return {{"frequency+kl", Estimator::kFrequency, Measure::kKl},
          {"frequency+euclidean", Estimator::kFrequency, Measure::kEuclidean},
          {"frequency+ks", Estimator::kFrequency, Measure::kKs},
          {"mle+kl", Estimator::kMleApprox, Measure::kKl}};
}

struct RunOutcome {
  std::string variant;
  std::uint64_t seed = 0;
  DetectionResult detection;
  std::vector<std::int64_t> truth;
  PrecisionRecall pr;
  double off_change_sd = 0.0;  ///< score spread away from true changes
};

struct EvalReport {
  std::vector<RunOutcome> runs;
  std::vector<std::vector<double>> likelihood;  ///< per seed, when requested
  double wall_seconds = 0.0;

  std::vector<const RunOutcome*> of(const std::string& variant) const {
    std::vector<const RunOutcome*> out;
    for (const auto& r : runs)
      if (r.variant == variant) out.push_back(&r);
    return out;
  }
};

inline double off_change_sd(const ScoreSeries& s, std::span<const std::int64_t> truth, std::int64_t tol) {
  std::vector<double> v;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto w = ScoreSeries::window_of(i);
    const bool near = std::any_of(truth.begin(), truth.end(), [&](auto t) { return std::abs(w - t) <= tol + 1; });
    if (!near) v.push_back(s.scores[i]);
  }
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

struct ScenarioOptions {
  DetectorConfig base;  ///< estimator and measure are overridden per variant
  std::vector<Variant> variants = table3_variants();
  std::int64_t tolerance = 1;
  bool likelihood = false;
  std::size_t seed_threads = 1;
};

/// Generates one sequence per seed and feeds every variant's detector in the
/// same pass over the snapshots.
inline EvalReport run_scenario(const std::function<ModelSchedule(std::uint64_t)>& make_schedule,
                               std::uint32_t nodes, std::int64_t length, std::span<const std::uint64_t> seeds,
                               const ScenarioOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  std::vector<std::vector<RunOutcome>> per_seed(seeds.size());
  std::vector<std::vector<double>> curves(seeds.size());
  parallel_for(seeds.size(), opt.seed_threads, [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    const ModelSchedule sched = make_schedule(seed);
    SequenceGenerator gen(sched, length, seed);
    detail::require(gen.nodes() == nodes, "scenario node count mismatch");
    std::vector<StreamingDetector> dets;
    for (const auto& v : opt.variants) {
      DetectorConfig cfg = opt.base;
      cfg.estimator = v.estimator;
      cfg.score.measure = v.measure;
      cfg.seed = seed;
      dets.emplace_back(cfg, nodes);
    }
    std::optional<TransitionLikelihood> lik;
    std::vector<DyadIndex> prev;
    while (!gen.done()) {
      const bool changed = gen.advance();
      if (opt.likelihood) {
        if (!lik || changed) lik.emplace(gen.active_model(), gen.active_alpha());
        if (gen.produced() > 1) curves[si].push_back((*lik)(prev, gen.state().edge_ranks()));
        prev = gen.state().edge_ranks();
      }
      const Snapshot snap = gen.state().snapshot(gen.produced());
      for (auto& d : dets) d.push(snap);
    }
    const auto truth = truth_windows(gen.change_points(), opt.base.window);
    for (std::size_t v = 0; v < dets.size(); ++v) {
      RunOutcome r;
      r.variant = opt.variants[v].name;
      r.seed = seed;
      r.detection = dets[v].finish();
      r.truth = truth;
      r.pr = precision_recall(r.detection.flagged, truth, opt.tolerance);
      r.off_change_sd = off_change_sd(r.detection.scores, truth, opt.tolerance);
      per_seed[si].push_back(std::move(r));
    }
  });
  EvalReport rep;
  for (auto& v : per_seed)
    for (auto& r : v) rep.runs.push_back(std::move(r));
  if (opt.likelihood) rep.likelihood = std::move(curves);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

/// Default detector settings: s = 20 non-overlapping, k = 250, g = 25, 5% quantile.
inline DetectorConfig default_detector_config() { return DetectorConfig{}; }

inline EvalReport run_scenario_table3(std::span<const std::uint64_t> seeds, const SbmClScenario& sc = {},
                                      ScenarioOptions opt = {}) {
  opt.base.window.size = sc.window;
  if (opt.base.window.step > sc.window) opt.base.window.step = sc.window;
  return run_scenario([&](std::uint64_t seed) { return make_table3_schedule(sc, seed); }, sc.nodes, sc.length, seeds,
                      opt);
}

/// Ground-truth log-likelihood of each transition (t-1 -> t), t = 2..T.
inline std::vector<double> likelihood_curve(const ModelSchedule& schedule, std::int64_t length, std::uint64_t seed) {
  SequenceGenerator gen(schedule, length, seed);
  std::vector<double> out;
  std::optional<TransitionLikelihood> lik;
  std::vector<DyadIndex> prev;
  while (!gen.done()) {
    const bool changed = gen.advance();
    if (!lik || changed) lik.emplace(gen.active_model(), gen.active_alpha());
    if (gen.produced() > 1) out.push_back((*lik)(prev, gen.state().edge_ranks()));
    prev = gen.state().edge_ranks();
  }
  return out;
}

/// Same, for an already materialized sequence whose schedule is known.
inline std::vector<double> likelihood_curve(std::span<const Snapshot> snapshots, const ModelSchedule& schedule,
                                            std::uint64_t seed) {
  // Replays the mutations with the generator's mutation stream so the
  // active model at each t matches the one that produced the data.
  GenerativeModel model = schedule.initial;
  double alpha = schedule.alpha;
  Rng mutation_rng = make_rng(seed, Stream::kSchedule);
  std::optional<TransitionLikelihood> lik;
  std::size_t next = 0;
  std::vector<double> out;
  const auto n = node_count(model);
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    const auto t = static_cast<std::int64_t>(i) + 1;
    bool changed = false;
    while (next < schedule.mutations.size() && schedule.mutations[next].t == t) {
      apply_mutation(schedule.mutations[next].mutation, model, mutation_rng);
      if (schedule.mutations[next].alpha) alpha = *schedule.mutations[next].alpha;
      ++next;
      changed = true;
    }
    if (!lik || changed) lik.emplace(model, alpha);
    out.push_back((*lik)(detail::ranks_of(snapshots[i - 1], n), detail::ranks_of(snapshots[i], n)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling benchmark

struct BenchCell {
  std::uint32_t nodes = 0;
  std::int64_t length = 0;
  double generate_seconds = 0.0;  ///< time spent producing snapshots
  double detect_seconds = 0.0;    ///< time spent inside the detector
  std::size_t state_bytes = 0;
  double mean_edges = 0.0;
};

/// Runs the detector over generated sequences for each (N, T) cell. The
/// source is an ER model with expected degree `degree` so edges per snapshot
/// scale with N.
inline std::vector<BenchCell> bench_scaling(std::span<const std::uint32_t> node_counts,
                                            std::span<const std::int64_t> lengths, const DetectorConfig& cfg,
                                            double degree = 10.0, double alpha = 0.49, std::uint64_t seed = 1) {
  using Clock = std::chrono::steady_clock;
  std::vector<BenchCell> out;
  for (auto n : node_counts)
    for (auto t : lengths) {
      BenchCell cell;
      cell.nodes = n;
      cell.length = t;
      const double p = std::min(1.0, degree / std::max<double>(1.0, n - 1));
      SequenceGenerator gen(make_null_schedule(n, p, alpha), t, seed);
      StreamingDetector det(cfg, n);
      double edges = 0.0;
      while (!gen.done()) {
        auto t0 = Clock::now();
        gen.advance();
        const Snapshot s = gen.state().snapshot(gen.produced());
        auto t1 = Clock::now();
        det.push(s);
        auto t2 = Clock::now();
        cell.generate_seconds += std::chrono::duration<double>(t1 - t0).count();
        cell.detect_seconds += std::chrono::duration<double>(t2 - t1).count();
        edges += static_cast<double>(s.edges.size());
      }
      const auto t0 = Clock::now();
      const auto res = det.finish();
      cell.detect_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
      cell.state_bytes = res.state_bytes;
      cell.mean_edges = edges / static_cast<double>(t);
      out.push_back(cell);
    }
  return out;
}

}  // namespace edgemon
