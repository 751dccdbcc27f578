// edgemon: generate synthetic snapshot corpora, run the detector over a
// snapshot stream, and run evaluation scenarios and scaling benchmarks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgemon/edgemon.hpp"

namespace {

using namespace edgemon;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

std::uint64_t default_seed() {
  if (const char* s = std::getenv("EDGEMON_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("EDGEMON_SEED is not an unsigned integer: ") + s);
    }
  }
  return 1;
}

double parse_exponent(const std::string& s) {
  if (s == "inf" || s == "infinity") return kInfiniteExponent;
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("weight exponent must be a number or 'inf', got '" + s + "'");
  }
}

const std::map<std::string, Estimator> kEstimators{{"frequency", Estimator::kFrequency},
                                                   {"mle", Estimator::kMleApprox}};
const std::map<std::string, Measure> kMeasures{{"kl", Measure::kKl},
                                               {"ks", Measure::kKs},
                                               {"euclidean", Measure::kEuclidean},
                                               {"euclidean-grouped", Measure::kEuclideanGrouped}};
const std::map<std::string, SamplingStrategy> kStrategies{{"uniform", SamplingStrategy::kUniformDyads},
                                                          {"observed", SamplingStrategy::kObservedDyads}};
const std::map<std::string, KlDirection> kDirections{{"prev-curr", KlDirection::kPreviousToCurrent},
                                                     {"curr-prev", KlDirection::kCurrentToPrevious}};

template <class M>
std::vector<std::string> keys(const M& m) {
  std::vector<std::string> out;
  for (const auto& [k, v] : m) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string model = "sbm-cl";
  std::string schedule = "table3";
  std::uint32_t n = 1000;
  std::int64_t t = 3000;
  std::int64_t window = 20;
  double alpha = 0.49;
  double p = 0.05;
  double beta = 0.0;
  std::uint32_t communities = 4;
  std::uint64_t seed = 1;
  std::string out;
};

ModelSchedule build_schedule(const GenerateArgs& a) {
  SbmClScenario sc;
  sc.nodes = a.n;
  sc.length = a.t;
  sc.window = a.window;
  sc.alpha = a.alpha;
  sc.communities = a.communities;
  if (a.schedule == "table3") {
    if (a.model != "sbm-cl") throw InvalidArgument("the table3 schedule needs --model sbm-cl");
    for (auto w : sc.change_windows)
      detail::require(w * sc.window <= a.t, "--t is too short for the table3 change at window " + std::to_string(w));
    return make_table3_schedule(sc, a.seed);
  }
  Rng rng = make_rng(a.seed, Stream::kSchedule);
  const BlockChungLu base = make_initial_model(sc, rng);
  ModelSchedule s;
  s.alpha = a.alpha;
  auto max_beta = [](const std::vector<double>& w) {
    double sum = 0.0;
    for (double x : w) sum += x;
    return sum / detail::max_pair_product(w);
  };
  if (a.model == "er") {
    s.initial = ErdosRenyi{a.n, a.p};
  } else if (a.model == "cl") {
    s.initial = ChungLu{base.weights, a.beta > 0.0 ? a.beta : max_beta(base.weights)};
  } else if (a.model == "sbm") {
    s.initial = BlockModel{base.community, base.rates};
  } else if (a.model == "sbm-cl") {
    s.initial = base;
  } else {
    s.initial = Bter{base.community, a.p, base.weights, a.beta > 0.0 ? a.beta : max_beta(base.weights)};
  }
  return s;
}

int run_generate(const GenerateArgs& a) {
  const fs::path out(a.out);
  const ModelSchedule sched = build_schedule(a);
  validate(sched, a.t);
  fs::create_directories(out);
  SequenceGenerator gen(sched, a.t, a.seed);
  EdgeListWriter writer(out / kEdgesFile);
  std::size_t edges = 0;
  while (!gen.done()) {
    gen.advance();
    const Snapshot s = gen.state().snapshot(gen.produced());
    edges += s.edges.size();
    writer.write(s);
  }
  Meta meta{{"n", std::to_string(a.n)},
            {"t", std::to_string(a.t)},
            {"seed", std::to_string(a.seed)},
            {"alpha", format_double(a.alpha)},
            {"model", a.model},
            {"schedule", a.schedule},
            {"window", std::to_string(a.window)},
            {"change_points", join(gen.change_points())},
            {"mean_edges", format_double(static_cast<double>(edges) / static_cast<double>(a.t))}};
  write_meta(out / kMetaFile, meta);
  write_index_list(out / kTruthFile, gen.change_points());
  std::cout << "wrote " << a.t << " snapshots on " << a.n << " nodes to " << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
  std::string in;
  std::string out = "detect-output";
  std::string estimator = "frequency";
  std::string measure = "kl";
  std::string direction = "prev-curr";
  std::string strategy = "uniform";
  std::string exponent = "inf";
  std::int64_t s = 20;
  std::int64_t step = 0;
  std::size_t k = 250;
  std::size_t g = 25;
  double quantile = 0.05;
  std::size_t bootstrap = 0;
  std::size_t priming = 0;
  std::int64_t ks_draws = 100000;
  std::size_t threads = 1;
  std::size_t online_history = 0;
  std::int64_t tolerance = 1;
  bool window_column = false;
  std::string node_map;
  std::string truth;
  std::uint64_t seed = 1;
};

DetectorConfig detector_config(const DetectArgs& a) {
  DetectorConfig c;
  c.window.size = a.s;
  c.window.step = a.step > 0 ? a.step : a.s;
  c.explicit_windows = a.window_column;
  c.dyads = a.k;
  c.groups = a.g;
  c.strategy = kStrategies.at(a.strategy);
  c.priming = a.priming;
  c.estimator = kEstimators.at(a.estimator);
  c.weight_exponent = parse_exponent(a.exponent);
  c.score.measure = kMeasures.at(a.measure);
  c.score.direction = kDirections.at(a.direction);
  c.score.ks_draws = a.ks_draws;
  c.score.threads = a.threads;
  c.quantile = a.quantile;
  c.bootstrap = a.bootstrap;
  c.online_history = a.online_history;
  c.seed = a.seed;
  c.validate();
  return c;
}

int run_detect(const DetectArgs& a) {
  const DetectorConfig cfg = detector_config(a);
  const fs::path in(a.in);
  if (!fs::exists(in)) throw DataError("input not found: " + in.string());

  IngestOptions opt;
  opt.grouping = a.window_column ? Grouping::kWindowColumn : Grouping::kFixed;
  if (!a.node_map.empty()) opt.node_map = fs::path(a.node_map);
  std::optional<fs::path> truth_path;
  if (!a.truth.empty()) truth_path = fs::path(a.truth);

  Meta extra{{"input", in.string()}};
  std::optional<DetectionResult> result;
  auto drive = [&](auto& reader) {
    StreamingDetector det(cfg, reader.nodes());
    extra["nodes"] = std::to_string(reader.nodes());
    while (auto ks = reader.next()) {
      if (cfg.explicit_windows) det.push(ks->snapshot, *ks->window);
      else det.push(ks->snapshot);
    }
    result = det.finish();
  };

  if (fs::is_directory(in) && fs::exists(in / kEdgesFile)) {
    // generated corpus: identity node labels, dense times 1..T
    if (fs::exists(in / kMetaFile) && !opt.node_map) {
      const Meta meta = read_meta(in / kMetaFile);
      auto get = [&](const char* key) -> std::optional<std::int64_t> {
        auto it = meta.find(key);
        if (it == meta.end()) return std::nullopt;
        return detail::parse_int<std::int64_t>(it->second, (in / kMetaFile).string() + ": " + key);
      };
      if (auto n = get("n")) {
        if (*n < 2 || *n > std::numeric_limits<std::uint32_t>::max()) throw DataError("meta.txt: bad node count");
        opt.identity_nodes = static_cast<std::uint32_t>(*n);
      }
      if (!a.window_column) opt.length = get("t");
    }
    if (!truth_path && fs::exists(in / kTruthFile)) truth_path = in / kTruthFile;
    SnapshotReader reader(in / kEdgesFile, opt);
    drive(reader);
  } else if (fs::is_directory(in)) {
    if (a.window_column) throw InvalidArgument("--window-column needs an edge-list file, not a snapshot directory");
    SnapshotDirectoryReader reader(in, opt);
    drive(reader);
  } else {
    SnapshotReader reader(in, opt);
    drive(reader);
  }

  if (truth_path) {
    if (cfg.explicit_windows) throw InvalidArgument("truth scoring needs fixed windows");
    const auto changes = read_index_list(*truth_path);
    const auto truth = truth_windows(changes, cfg.window);
    const auto pr = precision_recall(result->flagged, truth, a.tolerance);
    extra["truth_windows"] = join(truth);
    extra["tolerance"] = std::to_string(a.tolerance);
    extra["precision"] = format_double(pr.precision);
    extra["recall"] = format_double(pr.recall);
    std::cerr << "precision " << format_double(pr.precision) << "  recall " << format_double(pr.recall) << '\n';
  }
  write_detection(a.out, *result, extra);
  for (auto w : result->flagged) std::cout << w << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string scenario = "table3";
  std::size_t seeds = 5;
  std::uint64_t first_seed = 1;
  std::vector<std::string> variants;
  std::string out = "eval-output";
  std::uint32_t n = 1000;
  std::int64_t t = 3000;
  std::int64_t s = 20;
  double p = 0.05;
  std::int64_t tolerance = 1;
  std::size_t threads = 1;
  bool likelihood = false;
};

int run_eval(const EvalArgs& a) {
  detail::require(a.seeds >= 1, "--seeds must be positive");
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(a.first_seed + i);

  ScenarioOptions opt;
  opt.tolerance = a.tolerance;
  opt.likelihood = a.likelihood;
  opt.seed_threads = a.threads;
  opt.base.window.size = a.s;
  opt.base.window.step = a.s;
  if (!a.variants.empty()) {
    const auto all = table3_variants();
    opt.variants.clear();
    for (const auto& name : a.variants) {
      auto it = std::find_if(all.begin(), all.end(), [&](const auto& v) { return v.name == name; });
      if (it == all.end()) throw InvalidArgument("unknown variant '" + name + "'");
      opt.variants.push_back(*it);
    }
  }

  EvalReport rep;
  if (a.scenario == "table3") {
    SbmClScenario sc;
    sc.nodes = a.n;
    sc.length = a.t;
    sc.window = a.s;
    rep = run_scenario_table3(seeds, sc, opt);
  } else {
    rep = run_scenario([&](std::uint64_t) { return make_null_schedule(a.n, a.p, 0.49); }, a.n, a.t, seeds, opt);
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  {
    std::ofstream f(out / "runs.tsv");
    write_runs(f, rep);
  }
  {
    std::ofstream f(out / "summary.tsv");
    write_summary(f, rep);
  }
  for (auto seed : seeds) {
    std::ofstream f(out / ("plot_seed" + std::to_string(seed) + ".tsv"));
    write_plot_data(f, rep, seed);
  }
  if (a.likelihood) {
    std::ofstream f(out / "likelihood.tsv");
    f << "seed\tt\tlog_likelihood\n";
    for (std::size_t i = 0; i < seeds.size(); ++i)
      for (std::size_t j = 0; j < rep.likelihood[i].size(); ++j)
        f << seeds[i] << '\t' << j + 2 << '\t' << format_double(rep.likelihood[i][j]) << '\n';
  }
  write_summary(std::cout, rep);
  std::cout << "wall_seconds\t" << format_double(rep.wall_seconds) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::vector<std::uint32_t> nodes{1000};
  std::vector<std::int64_t> lengths{1250, 2500, 5000};
  std::size_t k = 250;
  double degree = 10.0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  DetectorConfig cfg;
  cfg.dyads = a.k;
  cfg.seed = a.seed;
  const auto cells = bench_scaling(a.nodes, a.lengths, cfg, a.degree, 0.49, a.seed);
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw DataError("cannot write " + a.out);
  }
  auto emit = [&](std::ostream& os) {
    os << "nodes\tlength\tgenerate_seconds\tdetect_seconds\tstate_bytes\tmean_edges\n";
    for (const auto& c : cells)
      os << c.nodes << '\t' << c.length << '\t' << format_double(c.generate_seconds) << '\t'
         << format_double(c.detect_seconds) << '\t' << c.state_bytes << '\t' << format_double(c.mean_edges) << '\n';
  };
  emit(std::cout);
  if (file.is_open()) emit(file);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming change-point detection for dynamic networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "edgemon 1.0");

  std::uint64_t seed = 1;
  try {
    seed = default_seed();
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  GenerateArgs gen;
  gen.seed = seed;
  auto* g = app.add_subcommand("generate", "Write a synthetic snapshot corpus with its change points");
  g->add_option("--model", gen.model, "Edge-probability model")->check(CLI::IsMember({"er", "cl", "sbm", "sbm-cl", "bter"}))->capture_default_str();
  g->add_option("--schedule", gen.schedule, "Scripted model changes")->check(CLI::IsMember({"table3", "none"}))->capture_default_str();
  g->add_option("--n", gen.n, "Node count")->check(CLI::Range(2u, 1u << 30))->capture_default_str();
  g->add_option("--t", gen.t, "Number of snapshots")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--window", gen.window, "Window size used to place scripted changes")->check(CLI::Range(2, 1 << 30))->capture_default_str();
  g->add_option("--alpha", gen.alpha, "Per-step redraw probability (continuity is 1 - alpha)")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  g->add_option("--p", gen.p, "ER edge probability, or BTER intra-community probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  g->add_option("--beta", gen.beta, "CL/BTER density (0: largest valid value)")->check(CLI::NonNegativeNumber)->capture_default_str();
  g->add_option("--communities", gen.communities, "Community count for block models")->check(CLI::Range(1u, 1u << 16))->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed (default: EDGEMON_SEED or 1)");
  g->add_option("--out", gen.out, "Output corpus directory")->required();

  DetectArgs det;
  det.seed = seed;
  auto* d = app.add_subcommand("detect", "Run the detector over a snapshot stream");
  d->add_option("--in", det.in, "Edge-list file, corpus directory, or directory of snapshot files")->required();
  d->add_option("--out", det.out, "Directory for scores.tsv, flagged.txt and manifest.txt")->capture_default_str();
  d->add_option("--estimator", det.estimator, "Window estimator")->check(CLI::IsMember(keys(kEstimators)))->capture_default_str();
  d->add_option("--measure", det.measure, "Dissimilarity measure")->check(CLI::IsMember(keys(kMeasures)))->capture_default_str();
  d->add_option("--kl-direction", det.direction, "KL argument order")->check(CLI::IsMember(keys(kDirections)))->capture_default_str();
  auto* opt_s = d->add_option("--s", det.s, "Window size in snapshots")->check(CLI::Range(2, 1 << 30))->capture_default_str();
  auto* opt_step = d->add_option("--step", det.step, "Window step (default: s, non-overlapping)")->check(CLI::PositiveNumber);
  d->add_option("--k", det.k, "Tracked dyads")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--g", det.g, "Dyad groups")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--quantile", det.quantile, "Significance level of the threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  d->add_option("--bootstrap", det.bootstrap, "Bootstrap replicates for the threshold (0: plain quantile)")->capture_default_str();
  d->add_option("--exponent", det.exponent, "MLE chain-weight exponent (number or inf)")->capture_default_str();
  d->add_option("--strategy", det.strategy, "Dyad sampling")->check(CLI::IsMember(keys(kStrategies)))->capture_default_str();
  d->add_option("--priming", det.priming, "Snapshots used by observed-dyad sampling (0: one window)");
  d->add_option("--ks-draws", det.ks_draws, "KS draws per distribution")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--threads", det.threads, "Worker threads for per-group scoring")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--online-history", det.online_history, "Use a rolling threshold over this many past scores");
  d->add_option("--truth", det.truth, "Change-point file (snapshot indices) for precision/recall");
  d->add_option("--tolerance", det.tolerance, "Matching tolerance in windows")->check(CLI::NonNegativeNumber)->capture_default_str();
  d->add_option("--node-map", det.node_map, "Node-label file; enables single-pass streaming");
  auto* opt_wc = d->add_flag("--window-column", det.window_column, "Fourth column of the edge list delimits windows");
  opt_wc->excludes(opt_s)->excludes(opt_step);
  d->add_option("--seed", det.seed, "Random seed (default: EDGEMON_SEED or 1)");

  EvalArgs ev;
  ev.first_seed = seed;
  auto* e = app.add_subcommand("eval", "Run a synthetic evaluation scenario over several seeds");
  e->add_option("--scenario", ev.scenario, "Scenario")->check(CLI::IsMember({"table3", "null"}))->capture_default_str();
  e->add_option("--seeds", ev.seeds, "Number of seeds")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--first-seed", ev.first_seed, "First seed (default: EDGEMON_SEED or 1)");
  e->add_option("--variants", ev.variants, "Subset of frequency+kl, frequency+euclidean, frequency+ks, mle+kl");
  e->add_option("--out", ev.out, "Report directory")->capture_default_str();
  e->add_option("--n", ev.n, "Node count")->check(CLI::Range(2u, 1u << 30))->capture_default_str();
  e->add_option("--t", ev.t, "Snapshots per sequence")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--s", ev.s, "Window size")->check(CLI::Range(2, 1 << 30))->capture_default_str();
  e->add_option("--p", ev.p, "ER edge probability for the null scenario")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  e->add_option("--tolerance", ev.tolerance, "Matching tolerance in windows")->check(CLI::NonNegativeNumber)->capture_default_str();
  e->add_option("--threads", ev.threads, "Seeds processed in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  e->add_flag("--likelihood", ev.likelihood, "Also write the ground-truth log-likelihood curves");

  BenchArgs be;
  be.seed = seed;
  auto* b = app.add_subcommand("bench", "Time the detector on generated ER streams");
  b->add_option("--nodes", be.nodes, "Node counts")->capture_default_str();
  b->add_option("--lengths", be.lengths, "Sequence lengths")->capture_default_str();
  b->add_option("--k", be.k, "Tracked dyads")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--degree", be.degree, "Expected degree of the ER source")->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--seed", be.seed, "Random seed (default: EDGEMON_SEED or 1)");
  b->add_option("--out", be.out, "Also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*d) return run_detect(det);
    if (*e) return run_eval(ev);
    if (*b) return run_bench(be);
  } catch (const InvalidArgument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
