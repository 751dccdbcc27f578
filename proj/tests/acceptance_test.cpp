// End-to-end acceptance checks. Each test prints one line
// "criterion N: PASS|FAIL ..." and fails the test on FAIL.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <new>
#include <sstream>

#include <gtest/gtest.h>

#include "edgemon/edgemon.hpp"
#include "support/oracles.hpp"

// ---------------------------------------------------------------------------
// Allocation accounting: every allocation carries a small header recording
// its size and whether it was made while tracking was on.

namespace alloc {

std::atomic<bool> tracking{false};
std::atomic<std::int64_t> live{0};
std::atomic<std::int64_t> peak{0};

constexpr std::size_t kHeader = 16;

void* allocate(std::size_t n) {
  auto* base = static_cast<unsigned char*>(std::malloc(n + kHeader));
  if (!base) throw std::bad_alloc();
  const bool counted = tracking.load(std::memory_order_relaxed);
  *reinterpret_cast<std::size_t*>(base) = n;
  base[sizeof(std::size_t)] = counted;
  if (counted) {
    const auto now = live.fetch_add(static_cast<std::int64_t>(n)) + static_cast<std::int64_t>(n);
    auto seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
  }
  return base + kHeader;
}

void release(void* p) noexcept {
  if (!p) return;
  auto* base = static_cast<unsigned char*>(p) - kHeader;
  if (base[sizeof(std::size_t)]) live.fetch_sub(static_cast<std::int64_t>(*reinterpret_cast<std::size_t*>(base)));
  std::free(base);
}

void start() {
  live = 0;
  peak = 0;
  tracking = true;
}

}  // namespace alloc

void* operator new(std::size_t n) { return alloc::allocate(n); }
void* operator new[](std::size_t n) { return alloc::allocate(n); }
void operator delete(void* p) noexcept { alloc::release(p); }
void operator delete[](void* p) noexcept { alloc::release(p); }
void operator delete(void* p, std::size_t) noexcept { alloc::release(p); }
void operator delete[](void* p, std::size_t) noexcept { alloc::release(p); }

using namespace edgemon;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  EXPECT_TRUE(pass) << "criterion " << criterion << ": " << detail;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string join(const std::vector<std::int64_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s.empty() ? "-" : s;
}

std::vector<std::int64_t> split_ints(const std::string& s) {
  std::vector<std::int64_t> out;
  if (s == "-") return out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) out.push_back(std::stoll(item));
  return out;
}

// ---------------------------------------------------------------------------
// SBM-CL scripted scenario, seeds 1..5, shared by criteria 1 and 2

const std::vector<std::uint64_t> kTable3Seeds{1, 2, 3, 4, 5};

struct Table3Run {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> flagged, truth;
  double seed_seconds = 0.0;
};

fs::path table3_cache() { return fs::current_path() / "acceptance_table3_runs.tsv"; }

std::vector<Table3Run> run_table3() {
  ScenarioOptions opt;
  opt.variants = {{"frequency+kl", Estimator::kFrequency, Measure::kKl}, {"mle+kl", Estimator::kMleApprox, Measure::kKl}};
  std::vector<Table3Run> out;
  for (auto seed : kTable3Seeds) {
    const std::vector<std::uint64_t> one{seed};
    const auto rep = run_scenario_table3(one, SbmClScenario{}, opt);
    for (const auto& r : rep.runs) out.push_back({r.variant, r.seed, r.detection.flagged, r.truth, rep.wall_seconds});
  }
  std::ofstream f(table3_cache());
  for (const auto& r : out)
    f << r.variant << '\t' << r.seed << '\t' << join(r.flagged) << '\t' << join(r.truth) << '\t' << r.seed_seconds << '\n';
  return out;
}

// Reuses the runs written by criterion 1 when they are newer than this binary.
std::vector<Table3Run> table3_runs() {
  const auto cache = table3_cache();
  std::error_code ec;
  const auto exe = fs::read_symlink("/proc/self/exe", ec);
  if (!ec && fs::exists(cache) && fs::last_write_time(cache) > fs::last_write_time(exe)) {
    std::ifstream f(cache);
    std::vector<Table3Run> out;
    std::string flagged, truth;
    Table3Run r;
    while (f >> r.variant >> r.seed >> flagged >> truth >> r.seed_seconds) {
      r.flagged = split_ints(flagged);
      r.truth = split_ints(truth);
      out.push_back(r);
    }
    if (out.size() == 2 * kTable3Seeds.size()) return out;
  }
  return run_table3();
}

bool matched(const std::vector<std::int64_t>& flagged, std::int64_t truth) {
  const std::vector<std::int64_t> one{truth};
  return precision_recall(flagged, one, 1).true_positives == 1;
}

}  // namespace

TEST(Acceptance, Criterion01_Table3FrequencyKl) {
  const auto runs = run_table3();
  bool pass = true;
  int perfect = 0;
  std::string detail;
  for (const auto& r : runs) {
    if (r.variant != "frequency+kl") continue;
    const auto pr = precision_recall(r.flagged, r.truth, 1);
    const auto tp = pr.true_positives;
    const auto fp = r.flagged.size() - tp;
    pass = pass && tp >= 6 && fp <= 2 && r.seed_seconds < 60.0;
    perfect += tp == 7;
    detail += fmt("[seed %llu recall %zu/7 fp %zu %.1fs]", static_cast<unsigned long long>(r.seed), tp, fp,
                  r.seed_seconds);
  }
  pass = pass && perfect >= 4;
  report(1, pass, fmt("perfect recall in %d/5 seeds; ", perfect) + detail + " (seconds cover both estimators)");
}

TEST(Acceptance, Criterion02_MleMissesMidScenarioChanges) {
  const auto runs = table3_runs();
  int mle_misses = 0, freq_at_least = 0;
  std::string detail;
  for (auto seed : kTable3Seeds) {
    const Table3Run *f = nullptr, *m = nullptr;
    for (const auto& r : runs)
      if (r.seed == seed) (r.variant == "mle+kl" ? m : f) = &r;
    ASSERT_TRUE(f && m);
    bool missed = false;
    for (std::int64_t w : {60, 75, 90}) missed = missed || !matched(m->flagged, w);
    const auto rf = precision_recall(f->flagged, f->truth, 1).true_positives;
    const auto rm = precision_recall(m->flagged, m->truth, 1).true_positives;
    mle_misses += missed;
    freq_at_least += rf >= rm;
    detail += fmt("[seed %llu mle %s freq %zu/7 mle %zu/7]", static_cast<unsigned long long>(seed),
                  missed ? "misses" : "hits all", rf, rm);
  }
  report(2, mle_misses >= 3 && freq_at_least >= 4,
         fmt("mle misses one of windows 60/75/90 in %d/5 seeds, frequency recall >= mle in %d/5; ", mle_misses,
             freq_at_least) +
             detail);
}

TEST(Acceptance, Criterion03_FrequencyEstimatorUnbiasedAtEquilibrium) {
  const auto t0 = Clock::now();
  const std::uint32_t n = 142;  // 10011 dyads
  const std::size_t reps = 10000;
  int cells = 0, good = 0;
  double worst = 0.0;
  std::string failures;
  std::uint64_t seed = 100;
  for (double p : {0.1, 0.3, 0.5})
    for (double a : {0.1, 0.5, 0.9})
      for (std::int64_t s : {10, 20, 50}) {
        ++seed;
        const auto seq = generate_sequence(make_null_schedule(n, p, a), s, n, seed);
        const auto sample = sample_dyads(n, reps, SamplingStrategy::kUniformDyads, {}, seed);
        const auto est = frequency_estimate(accumulate_counts(seq.snapshots, sample, n, s), static_cast<std::uint32_t>(s));
        double mean = 0.0, ss = 0.0;
        for (double x : est.p) mean += x;
        mean /= reps;
        for (double x : est.p) ss += (x - mean) * (x - mean);
        const double se = std::sqrt(ss / (reps - 1) / reps);
        const double z = std::abs(mean - p) / se;
        worst = std::max(worst, z);
        ++cells;
        if (z <= 3.0) {
          ++good;
        } else {
          failures += fmt(" (p=%.1f alpha=%.1f s=%lld z=%.2f)", p, a, static_cast<long long>(s), z);
        }
      }
  const double secs = seconds_since(t0);
  report(3, good == cells && secs < 30.0,
         fmt("%d/%d cells within 3 SE, largest |z| %.2f, %.1fs", good, cells, worst, secs) + failures);
}

TEST(Acceptance, Criterion04_FrequencyEstimatorConsistency) {
  const std::vector<std::int64_t> lengths{10, 40, 160, 640};
  const std::uint32_t n = 300;
  int decreasing = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    // heterogeneous dyad probabilities from a Chung-Lu model
    Rng rng = make_rng(seed, Stream::kSchedule);
    ChungLu model;
    model.weights.resize(n);
    for (auto& w : model.weights) w = 0.2 + 0.8 * uniform01(rng);
    model.beta = 0.9 * std::accumulate(model.weights.begin(), model.weights.end(), 0.0) /
                 (*std::max_element(model.weights.begin(), model.weights.end()) *
                  *std::max_element(model.weights.begin(), model.weights.end()));
    ModelSchedule sched;
    sched.initial = model;
    sched.alpha = 0.49;
    const EdgeProbability prob(sched.initial);
    const auto seq = generate_sequence(sched, lengths.back(), n, seed);
    const auto sample = sample_dyads(n, 250, SamplingStrategy::kUniformDyads, {}, seed);
    std::vector<double> mae;
    for (auto s : lengths) {
      const std::span<const Snapshot> window(seq.snapshots.data(), static_cast<std::size_t>(s));
      const auto est = frequency_estimate(accumulate_counts(window, sample, n, s), static_cast<std::uint32_t>(s));
      double e = 0.0;
      for (std::size_t j = 0; j < sample.size(); ++j) e += std::abs(est.p[j] - prob(sample.dyads[j]));
      mae.push_back(e / static_cast<double>(sample.size()));
    }
    const bool ok = mae[0] > mae[1] && mae[1] > mae[2] && mae[2] > mae[3];
    decreasing += ok;
    detail += fmt("[seed %llu %.3f %.3f %.3f %.3f]", static_cast<unsigned long long>(seed), mae[0], mae[1], mae[2], mae[3]);
  }
  report(4, decreasing >= 9, fmt("MAE strictly decreasing in %d/10 seeds; ", decreasing) + detail);
}

TEST(Acceptance, Criterion05_ClosedFormMatchesGridSearch) {
  std::mt19937_64 rng(5);
  int checked = 0, agree = 0, dominates = 0, boundary = 0;
  double worst_alpha = 0.0, worst_p = 0.0;
  while (checked < 200) {
    const double p = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double a = 0.05 + 0.95 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto s = static_cast<std::size_t>(std::uniform_int_distribution<int>(5, 200)(rng));
    const auto trace = oracle::stationary_trace(p, a, s, rng);
    const std::vector<std::uint8_t> bits(trace.begin(), trace.end());
    const auto est = mle_single_chain(count_trace(bits));
    if (est.degenerate) continue;
    ++checked;
    const auto c = oracle::recount(trace);
    const auto g = oracle::grid_search_tabulated(c);
    const double da = std::abs(est.alpha - g.alpha), dp = std::abs(est.p - g.p);
    worst_alpha = std::max(worst_alpha, da);
    worst_p = std::max(worst_p, dp);
    const bool close = da <= 1e-3 + 1e-12 && dp <= 1e-3 + 1e-12;
    agree += close;
    dominates += oracle::chain_loglik(est.alpha, est.p, c) >= g.loglik - 1e-9;
    boundary += !close && (c.n00 == 0 || c.n11 == 0);
  }
  // The log-likelihood comparison and the boundary count are diagnostics;
  // the criterion is the coordinate distance.
  report(5, agree == checked,
         fmt("%d/%d chains within 1e-3 of the grid maximizer (largest |d alpha| %.2e, |d p| %.2e; %d of the misses "
             "have the optimum on the alpha*p <= 1 or alpha*(1-p) <= 1 boundary); closed form log-likelihood >= grid "
             "maximum in %d/%d",
             agree, checked, worst_alpha, worst_p, boundary, dominates, checked));
}

TEST(Acceptance, Criterion06_ApproximateAlphaMatchesJointMle) {
  // windows of k chains with heterogeneous p_j and a shared alpha
  std::mt19937_64 rng(6);
  const std::size_t windows = 100, k = 250, s = 20;
  const double alpha = 0.49;
  std::vector<double> approx, joint;
  while (approx.size() < windows) {
    ChainCounts counts;
    counts.length = s;
    std::vector<oracle::Counts> chains;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = 0.05 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
      const auto trace = oracle::stationary_trace(p, alpha, s, rng);
      const std::vector<std::uint8_t> bits(trace.begin(), trace.end());
      counts.dyads.push_back(count_trace(bits));
      chains.push_back(oracle::recount(trace));
    }
    const auto est = mle_approx_multi(counts, kInfiniteExponent);
    if (!est.alpha) continue;
    approx.push_back(*est.alpha);
    joint.push_back(oracle::joint_mle_alpha(chains));
  }
  const double pv = oracle::welch_p_value(approx, joint);
  const double ma = std::accumulate(approx.begin(), approx.end(), 0.0) / windows;
  const double mj = std::accumulate(joint.begin(), joint.end(), 0.0) / windows;
  report(6, pv > 0.05, fmt("Welch p = %.3f (mean approx %.4f, mean joint %.4f, true %.2f)", pv, ma, mj, alpha));
}

TEST(Acceptance, Criterion07_FactorizedKlMatchesEnumeration) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng() % 10;
    std::vector<double> p(m), q(m);
    for (std::size_t j = 0; j < m; ++j) p[j] = u(rng), q[j] = u(rng);
    const double eps = 0.025;
    std::vector<double> pc(m), qc(m);
    for (std::size_t j = 0; j < m; ++j) pc[j] = std::clamp(p[j], eps, 1 - eps), qc[j] = std::clamp(q[j], eps, 1 - eps);
    worst = std::max(worst, std::abs(kl_group(p, q, eps) - oracle::kl_enumerate(pc, qc)));
  }
  report(7, worst <= 1e-10, fmt("largest difference over 100 groups %.2e", worst));
}

TEST(Acceptance, Criterion08_KsSanity) {
  Rng rng(8);
  const std::int64_t b = 100000;
  const std::vector<double> zero{0.0}, one{1.0}, lo{0.2}, hi{0.8};
  const double disjoint = ks_group(zero, one, b, rng);
  std::mt19937_64 gen(8);
  int small = 0;
  double largest = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(10);
    for (auto& x : p) x = std::uniform_real_distribution<double>(0, 1)(gen);
    const double d = ks_group(p, p, b, rng);
    small += d < 0.01;
    largest = std::max(largest, d);
  }
  const double gap = ks_group(lo, hi, b, rng);
  report(8, disjoint == 1.0 && small >= 99 && std::abs(gap - 0.6) <= 0.01,
         fmt("disjoint D = %.3f, null D < 0.01 in %d/100 (max %.4f), 0.2 vs 0.8 D = %.4f", disjoint, small, largest,
             gap));
}

TEST(Acceptance, Criterion09_NullFalsePositiveControl) {
  std::vector<std::uint64_t> seeds(20);
  std::iota(seeds.begin(), seeds.end(), 1);
  ScenarioOptions opt;
  opt.variants = {{"frequency+kl", Estimator::kFrequency, Measure::kKl}};
  const std::uint32_t n = 1000;
  const auto rep = run_scenario([&](std::uint64_t) { return make_null_schedule(n, 0.02, 0.49); }, n, 3000, seeds, opt);
  double total = 0.0, worst = 0.0;
  for (const auto& r : rep.runs) {
    const double frac = static_cast<double>(r.detection.flagged.size()) / static_cast<double>(r.detection.scores.size());
    total += frac;
    worst = std::max(worst, frac);
  }
  const double mean = total / static_cast<double>(rep.runs.size());
  report(9, mean <= 3 * 0.05, fmt("mean flagged fraction %.4f over %zu seeds (max %.4f), bound 0.15", mean,
                                   rep.runs.size(), worst));
}

TEST(Acceptance, Criterion10_LinearTimeConstantMemory) {
  DetectorConfig cfg;

  // detector time per doubling of T, best of five repeats per cell
  const std::vector<std::uint32_t> thousand{1000};
  const std::vector<std::int64_t> lengths{1250, 2500, 5000};
  std::vector<double> best(lengths.size(), std::numeric_limits<double>::infinity());
  for (int rep = 0; rep < 5; ++rep) {
    const auto cells = bench_scaling(thousand, lengths, cfg, 10.0, 0.49, 1);
    for (std::size_t i = 0; i < cells.size(); ++i) best[i] = std::min(best[i], cells[i].detect_seconds);
  }
  const double r1 = best[1] / best[0], r2 = best[2] / best[1];
  const bool time_ok = r1 >= 1.6 && r1 <= 2.6 && r2 >= 1.6 && r2 <= 2.6;

  // peak heap allocated by the detector while consuming a stream
  auto peak_bytes = [&](std::uint32_t n) {
    SequenceGenerator gen(make_null_schedule(n, 10.0 / (n - 1), 0.49), 5000, 1);
    alloc::start();
    StreamingDetector det(cfg, n);
    alloc::tracking = false;
    while (!gen.done()) {
      const auto s = gen.next();
      alloc::tracking = true;
      det.push(s);
      alloc::tracking = false;
    }
    alloc::tracking = true;
    const auto res = det.finish();
    alloc::tracking = false;
    return static_cast<double>(alloc::peak.load());
  };
  const double m1 = peak_bytes(1000), m10 = peak_bytes(10000);
  const bool memory_ok = std::max(m1, m10) <= 2.0 * std::min(m1, m10);

  // SBM-CL stream, N = 1000, s = 20, T = 5000
  SbmClScenario sc;
  sc.length = 5000;
  const auto t0 = Clock::now();
  SequenceGenerator gen(make_table3_schedule(sc, 1), sc.length, 1);
  StreamingDetector det(cfg, sc.nodes);
  double detect = 0.0;
  while (!gen.done()) {
    const auto s = gen.next();
    const auto t1 = Clock::now();
    det.push(s);
    detect += seconds_since(t1);
  }
  const auto t1 = Clock::now();
  det.finish();
  detect += seconds_since(t1);
  const double total = seconds_since(t0);
  const bool sbm_ok = detect < 60.0;

  report(10, time_ok && memory_ok && sbm_ok,
         fmt("detector seconds at T=1250/2500/5000: %.3f %.3f %.3f (ratios %.2f, %.2f); peak detector heap N=1k %.0f "
             "bytes, N=10k %.0f bytes; SBM-CL T=5000 detector %.1fs, with generation %.1fs",
             best[0], best[1], best[2], r1, r2, m1, m10, detect, total));
}

TEST(Acceptance, Criterion11_DeterministicAcrossRunsAndThreads) {
  SbmClScenario sc;
  sc.nodes = 300;
  sc.length = 800;
  sc.change_windows = {5, 10, 15, 20, 25, 30, 35};
  const auto seq = generate_sequence(make_table3_schedule(sc, 11), sc.length, sc.nodes, 11);
  const auto dir = fs::temp_directory_path() / "edgemon_acceptance_determinism";
  fs::remove_all(dir);

  auto run = [&](DetectorConfig cfg, const std::string& tag) {
    std::size_t i = 0;
    const auto r = run_pipeline([&]() -> std::optional<Snapshot> {
      if (i == seq.snapshots.size()) return std::nullopt;
      return seq.snapshots[i++];
    }, sc.nodes, cfg);
    write_detection(dir / tag, r);
    std::ifstream a(dir / tag / "scores.tsv"), b(dir / tag / "flagged.txt");
    return std::string(std::istreambuf_iterator<char>(a), {}) + "|" + std::string(std::istreambuf_iterator<char>(b), {});
  };

  struct Case {
    const char* name;
    Estimator estimator;
    Measure measure;
  };
  const std::vector<Case> cases{{"frequency+kl", Estimator::kFrequency, Measure::kKl},
                                {"mle+kl", Estimator::kMleApprox, Measure::kKl},
                                {"frequency+ks", Estimator::kFrequency, Measure::kKs},
                                {"frequency+euclidean-grouped", Estimator::kFrequency, Measure::kEuclideanGrouped}};
  int identical = 0;
  std::string detail;
  for (const auto& c : cases) {
    DetectorConfig cfg;
    cfg.estimator = c.estimator;
    cfg.score.measure = c.measure;
    cfg.seed = 11;
    const auto first = run(cfg, std::string(c.name) + "_1a");
    const auto second = run(cfg, std::string(c.name) + "_1b");
    cfg.score.threads = 8;
    const auto eight = run(cfg, std::string(c.name) + "_8");
    const bool same = first == second && first == eight;
    identical += same;
    detail += fmt(" %s %s", c.name, same ? "identical" : "DIFFERENT");
  }
  fs::remove_all(dir);
  report(11, identical == static_cast<int>(cases.size()),
         fmt("%d/%zu configurations bit-identical across two runs at 1 thread and one at 8:", identical, cases.size()) +
             detail);
}
