#pragma once

// Result files: score series, flagged windows, run manifests and
// evaluation tables. Doubles are printed in shortest round-trip form so
// repeated runs produce byte-identical files.

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "edgemon/detector.hpp"
#include "edgemon/eval.hpp"
#include "edgemon/io.hpp"

namespace edgemon {

inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string join(const std::vector<std::int64_t>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

inline void write_scores(std::ostream& out, const ScoreSeries& s) {
  for (std::size_t i = 0; i < s.size(); ++i) out << ScoreSeries::window_of(i) << '\t' << format_double(s.scores[i]) << '\n';
}

inline Meta manifest(const DetectionResult& r) {
  const auto& c = r.config;
  Meta m;
  m["estimator"] = to_string(c.estimator);
  m["measure"] = to_string(c.score.measure);
  m["kl_direction"] = c.score.direction == KlDirection::kPreviousToCurrent ? "prev-curr" : "curr-prev";
  m["windows"] = c.explicit_windows ? "explicit" : "fixed";
  if (!c.explicit_windows) {
    m["s"] = std::to_string(c.window.size);
    m["step"] = std::to_string(c.window.step);
  }
  m["k"] = std::to_string(c.dyads);
  m["g"] = std::to_string(c.groups);
  m["strategy"] = to_string(c.strategy);
  m["quantile"] = format_double(c.quantile);
  m["bootstrap"] = std::to_string(c.bootstrap);
  m["weight_exponent"] = format_double(c.weight_exponent);
  m["ks_draws"] = std::to_string(c.score.ks_draws);
  m["threads"] = std::to_string(c.score.threads);
  m["seed"] = std::to_string(c.seed);
  m["threshold"] = format_double(r.threshold);
  m["window_count"] = std::to_string(r.window_ends.size());
  m["snapshots"] = std::to_string(r.snapshots);
  m["flagged"] = join(r.flagged);
  m["wall_seconds"] = format_double(r.wall_seconds);
  m["peak_state_bytes"] = std::to_string(r.state_bytes);
  if (c.online_history) m["online_history"] = std::to_string(c.online_history);
  return m;
}

/// Writes scores.tsv, flagged.txt and manifest.txt into `dir`.
inline void write_detection(const fs::path& dir, const DetectionResult& r, const Meta& extra = {}) {
  fs::create_directories(dir);
  std::ofstream scores(dir / "scores.tsv");
  if (!scores) throw DataError("cannot write " + (dir / "scores.tsv").string());
  write_scores(scores, r.scores);
  write_index_list(dir / "flagged.txt", r.flagged);
  Meta m = manifest(r);
  for (const auto& [k, v] : extra) m[k] = v;
  write_meta(dir / "manifest.txt", m);
}

/// runs.tsv: one row per (variant, seed).
inline void write_runs(std::ostream& out, const EvalReport& rep) {
  out << "variant\tseed\tprecision\trecall\ttrue_positives\tthreshold\toff_change_sd\tflagged\ttruth\n";
  for (const auto& r : rep.runs)
    out << r.variant << '\t' << r.seed << '\t' << format_double(r.pr.precision) << '\t' << format_double(r.pr.recall)
        << '\t' << r.pr.true_positives << '\t' << format_double(r.detection.threshold) << '\t'
        << format_double(r.off_change_sd) << '\t' << join(r.detection.flagged) << '\t' << join(r.truth) << '\n';
}

struct VariantSummary {
  std::string variant;
  std::size_t runs = 0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  std::size_t perfect = 0;  ///< runs with precision = recall = 1
};

inline std::vector<VariantSummary> summarize(const EvalReport& rep) {
  std::vector<VariantSummary> out;
  for (const auto& r : rep.runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.variant == r.variant; });
    if (it == out.end()) it = out.insert(out.end(), VariantSummary{r.variant});
    ++it->runs;
    it->mean_precision += r.pr.precision;
    it->mean_recall += r.pr.recall;
    if (r.pr.precision == 1.0 && r.pr.recall == 1.0) ++it->perfect;
  }
  for (auto& s : out) {
    s.mean_precision /= static_cast<double>(s.runs);
    s.mean_recall /= static_cast<double>(s.runs);
  }
  return out;
}

inline void write_summary(std::ostream& out, const EvalReport& rep) {
  out << "variant\truns\tmean_precision\tmean_recall\tperfect_runs\n";
  for (const auto& s : summarize(rep))
    out << s.variant << '\t' << s.runs << '\t' << format_double(s.mean_precision) << '\t'
        << format_double(s.mean_recall) << '\t' << s.perfect << '\n';
}

/// Plot data for one seed: window index, then each variant's score divided
/// by its own threshold (so every threshold sits at 1).
inline void write_plot_data(std::ostream& out, const EvalReport& rep, std::uint64_t seed) {
  std::vector<const RunOutcome*> runs;
  for (const auto& r : rep.runs)
    if (r.seed == seed) runs.push_back(&r);
  if (runs.empty()) return;
  out << "window";
  for (const auto* r : runs) out << '\t' << r->variant;
  out << '\n';
  const std::size_t n = runs.front()->detection.scores.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << ScoreSeries::window_of(i);
    for (const auto* r : runs) {
      const double tau = r->detection.threshold;
      const double x = r->detection.scores.scores[i];
      out << '\t' << format_double(tau > 0.0 ? x / tau : x);
    }
    out << '\n';
  }
}

}  // namespace edgemon
