#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "edgemon/eval.hpp"
#include "edgemon/generator.hpp"
#include "edgemon/graph_model.hpp"

using namespace edgemon;

namespace {

double binomial_sigma(double n, double p) { return std::sqrt(n * p * (1 - p)); }

GenerativeModel random_model(Rng& rng, int kind) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::uint32_t n = 5 + static_cast<std::uint32_t>(rng() % 20);
  const std::size_t k = 1 + rng() % 4;
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng) * 3;
  w[0] = 1.0;  // keep the weight sum positive
  w[1] = 0.5;
  std::vector<std::uint32_t> c(n);
  for (auto& x : c) x = static_cast<std::uint32_t>(rng() % k);
  BlockMatrix b(k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t s = r; s < k; ++s) b.set(r, s, u(rng));
  double sum = 0;
  for (double x : w) sum += x;
  const double beta = u(rng) * sum / detail::max_pair_product(w);
  switch (kind) {
    case 0: return ErdosRenyi{n, u(rng)};
    case 1: return ChungLu{w, beta};
    case 2: return BlockModel{c, b};
    case 3: return BlockChungLu{c, b, w, 0.0};
    default: return Bter{c, u(rng), w, beta};
  }
}

}  // namespace

TEST(EdgeProbability, ErdosRenyiIsConstant) {
  const GenerativeModel m = ErdosRenyi{10, 0.4};
  EXPECT_DOUBLE_EQ(edge_probability(m, {0, 1}), 0.4);
  EXPECT_DOUBLE_EQ(edge_probability(m, {3, 9}), 0.4);
}

TEST(EdgeProbability, ChungLuHandValue) {
  const GenerativeModel m = ChungLu{{1, 2, 3}, 1.0};
  EXPECT_NEAR(edge_probability(m, {0, 1}), 1.0 * 2.0 / 6.0, 1e-15);
}

TEST(EdgeProbability, BlockModelLooksUpBlock) {
  const GenerativeModel m = BlockModel{{0, 0, 1}, BlockMatrix{{0.5, 0.1}, {0.1, 0.5}}};
  EXPECT_DOUBLE_EQ(edge_probability(m, {0, 2}), 0.1);
  EXPECT_DOUBLE_EQ(edge_probability(m, {0, 1}), 0.5);
}

TEST(EdgeProbability, BterUsesErInsideCommunity) {
  const GenerativeModel m = Bter{{0, 0, 1}, 0.7, {1, 1, 2}, 1.0};
  EXPECT_DOUBLE_EQ(edge_probability(m, {0, 1}), 0.7);
  EXPECT_NEAR(edge_probability(m, {0, 2}), 1.0 * 2.0 / 4.0, 1e-15);
}

TEST(EdgeProbability, BlockChungLuNormalizesByLargestPair) {
  const GenerativeModel m = BlockChungLu{{0, 0, 1}, BlockMatrix{{1.0, 0.5}, {0.5, 1.0}}, {1, 2, 4}, 0.0};
  // largest product over distinct pairs is 2 * 4 = 8
  EXPECT_NEAR(edge_probability(m, {1, 2}), 0.5 * 8 / 8, 1e-15);
  EXPECT_NEAR(edge_probability(m, {0, 1}), 1.0 * 2 / 8, 1e-15);
  EXPECT_NEAR(edge_probability(m, {0, 2}), 0.5 * 4 / 8, 1e-15);
}

TEST(EdgeProbability, RejectsInvalidModels) {
  EXPECT_THROW(validate(GenerativeModel{ErdosRenyi{5, 1.5}}), InvalidArgument);
  EXPECT_THROW(validate(GenerativeModel{ChungLu{{1, 2, 3}, 10.0}}), InvalidArgument);
  EXPECT_THROW(validate(GenerativeModel{ChungLu{{0, 0}, 1.0}}), InvalidArgument);
  EXPECT_THROW(validate(GenerativeModel{BlockModel{{0, 1}, BlockMatrix{{0.5, 0.1}, {0.2, 0.5}}}}), InvalidArgument);
  EXPECT_THROW(validate(GenerativeModel{BlockModel{{0, 2}, BlockMatrix{{0.5, 0.1}, {0.1, 0.5}}}}), InvalidArgument);
  // explicit normalization too small for the heaviest pair
  EXPECT_THROW(validate(GenerativeModel{BlockChungLu{{0, 0}, BlockMatrix{{1.0}}, {2, 2}, 1.0}}), InvalidArgument);
}

TEST(EdgeProbability, OutOfRangeDyadThrows) {
  const GenerativeModel m = ErdosRenyi{4, 0.4};
  EXPECT_THROW(edge_probability(m, {1, 4}), InvalidArgument);
}

TEST(EdgeProbability, PropertyAlwaysAProbability) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_model(rng, trial % 5);
    const EdgeProbability prob(m);
    const auto n = node_count(m);
    for (NodeIndex u = 0; u < n; ++u)
      for (NodeIndex v = u + 1; v < n; ++v) {
        const double p = prob(u, v);
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 1.0);
        ASSERT_LE(p, prob.row_upper_bound(u) + 1e-15);
        ASSERT_LE(p, prob.row_upper_bound(v) + 1e-15);
        ASSERT_LE(p, prob.upper_bound() + 1e-15);
      }
  }
}

TEST(SampleInitial, ExtremeProbabilities) {
  Rng rng(1);
  EXPECT_TRUE(sample_initial_snapshot(ErdosRenyi{50, 0.0}, rng).edges.empty());
  const auto full = sample_initial_snapshot(ErdosRenyi{4, 1.0}, rng);
  EXPECT_EQ(full.edges.size(), 6u);
}

TEST(SampleInitial, EdgeCountWithinFourSigma) {
  Rng rng(2);
  const auto s = sample_initial_snapshot(ErdosRenyi{1000, 0.3}, rng);
  const double n = 499500;
  EXPECT_NEAR(static_cast<double>(s.edges.size()), 0.3 * n, 4 * binomial_sigma(n, 0.3));
}

TEST(SampleInitial, EdgesCanonicalAndSorted) {
  Rng rng(3);
  const auto s = sample_initial_snapshot(ChungLu{std::vector<double>(60, 1.0), 20.0}, rng);
  EXPECT_TRUE(std::is_sorted(s.edges.begin(), s.edges.end()));
  for (const auto& e : s.edges) {
    EXPECT_LT(e.u, e.v);
    EXPECT_LT(e.v, 60u);
  }
}

TEST(SampleInitial, DeterministicGivenSeed) {
  const GenerativeModel m = ErdosRenyi{200, 0.1};
  Rng a(9), b(9);
  EXPECT_EQ(sample_initial_snapshot(m, a), sample_initial_snapshot(m, b));
}

TEST(SampleInitial, PerDyadMarginalsMatchModel) {
  // heterogeneous model mixing dense (scanned) and sparse (skipped) rows
  const GenerativeModel m = BlockChungLu{{0, 0, 0, 1, 1, 1, 1, 0}, BlockMatrix{{0.9, 0.05}, {0.05, 0.6}},
                                         {1, 0.2, 0.5, 1, 0.1, 0.7, 0.3, 0.05}, 0.0};
  const EdgeProbability prob(m);
  Rng rng(4);
  const int reps = 20000;
  std::vector<int> hits(dyad_count(8));
  for (int r = 0; r < reps; ++r)
    for (const auto& e : sample_initial_snapshot(m, rng).edges) ++hits[dyad_rank(e, 8)];
  for (NodeIndex u = 0; u < 8; ++u)
    for (NodeIndex v = u + 1; v < 8; ++v) {
      const double p = prob(u, v);
      EXPECT_NEAR(hits[dyad_rank({u, v}, 8)] / double(reps), p, 4 * binomial_sigma(reps, p) / reps + 1e-12)
          << u << "," << v;
    }
}

TEST(Evolve, ZeroAlphaIsIdentity) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, trial % 5);
    const auto prev = sample_initial_snapshot(m, rng);
    auto next = evolve_snapshot(prev, m, 0.0, rng);
    next.t = prev.t;
    EXPECT_EQ(next, prev);
  }
}

TEST(Evolve, AlphaOutOfRangeThrows) {
  Rng rng(5);
  const GenerativeModel m = ErdosRenyi{10, 0.5};
  const auto prev = sample_initial_snapshot(m, rng);
  EXPECT_THROW(evolve_snapshot(prev, m, 1.5, rng), InvalidArgument);
  EXPECT_THROW(evolve_snapshot(prev, m, -0.1, rng), InvalidArgument);
}

TEST(Evolve, FullResampleIgnoresPrevious) {
  // with alpha = 1 a complete previous graph must not leak into the next
  const GenerativeModel m = ErdosRenyi{300, 0.2};
  Rng rng(6);
  Snapshot full;
  for (NodeIndex u = 0; u < 300; ++u)
    for (NodeIndex v = u + 1; v < 300; ++v) full.edges.push_back({u, v});
  const auto next = evolve_snapshot(full, m, 1.0, rng);
  const double n = dyad_count(300);
  EXPECT_NEAR(static_cast<double>(next.edges.size()), 0.2 * n, 4 * binomial_sigma(n, 0.2));
}

TEST(Evolve, AgreementMatchesTransitionProbability) {
  // ER(0.5), alpha 0.5: P(same status) = 1 - alpha + alpha * 0.5 = 0.75
  const GenerativeModel m = ErdosRenyi{1000, 0.5};
  Rng rng(7);
  auto prev = sample_initial_snapshot(m, rng);
  const double n = dyad_count(1000);
  double agree = 0, steps = 0;
  for (int step = 0; step < 3; ++step) {
    const auto next = evolve_snapshot(prev, m, 0.5, rng);
    std::vector<DyadId> diff;
    std::set_symmetric_difference(prev.edges.begin(), prev.edges.end(), next.edges.begin(), next.edges.end(),
                                  std::back_inserter(diff));
    agree += n - static_cast<double>(diff.size());
    steps += n;
    prev = next;
  }
  EXPECT_NEAR(agree / steps, 0.75, 4 * binomial_sigma(steps, 0.75) / steps);
}

TEST(Evolve, StationaryMarginalsPreserved) {
  const GenerativeModel m = BlockModel{{0, 0, 1, 1, 1, 0}, BlockMatrix{{0.8, 0.1}, {0.1, 0.3}}};
  const EdgeProbability prob(m);
  Rng rng(8);
  auto cur = sample_initial_snapshot(m, rng);
  const int steps = 40000;
  std::vector<int> hits(dyad_count(6));
  for (int t = 0; t < steps; ++t) {
    cur = evolve_snapshot(cur, m, 0.9, rng);  // alpha 0.9 keeps successive steps nearly independent
    for (const auto& e : cur.edges) ++hits[dyad_rank(e, 6)];
  }
  for (NodeIndex u = 0; u < 6; ++u)
    for (NodeIndex v = u + 1; v < 6; ++v) {
      const double p = prob(u, v);
      // lag correlation (1 - alpha) inflates the variance by (2 - alpha) / alpha
      const double sd = binomial_sigma(steps, p) * std::sqrt((2 - 0.9) / 0.9) / steps;
      EXPECT_NEAR(hits[dyad_rank({u, v}, 6)] / double(steps), p, 4 * sd) << u << "," << v;
    }
}

TEST(Sequence, NoMutationsMeansNoChanges) {
  ModelSchedule s;
  s.initial = ErdosRenyi{20, 0.2};
  s.alpha = 0.3;
  const auto seq = generate_sequence(s, 50, 20, 1);
  EXPECT_EQ(seq.snapshots.size(), 50u);
  EXPECT_TRUE(seq.change_points.empty());
  for (std::size_t i = 0; i < seq.snapshots.size(); ++i) EXPECT_EQ(seq.snapshots[i].t, static_cast<std::int64_t>(i + 1));
}

TEST(Sequence, ScriptedScheduleAlignsWithWindows) {
  SbmClScenario sc;
  sc.nodes = 100;
  const auto sched = make_table3_schedule(sc, 3);
  std::vector<std::int64_t> at;
  for (const auto& m : sched.mutations) at.push_back(m.t);
  EXPECT_EQ(at, (std::vector<std::int64_t>{300, 600, 1200, 1500, 1800, 2100, 2700}));
  SequenceGenerator gen(sched, 3000, 3);
  EXPECT_EQ(gen.change_points(), at);
}

TEST(Sequence, ReturnsExactlyTSnapshotsAndChangeSet) {
  ModelSchedule s;
  s.initial = BlockModel{{0, 1, 0, 1, 0, 1}, BlockMatrix{{0.5, 0.2}, {0.2, 0.5}}};
  s.alpha = 0.5;
  s.mutations.push_back({5, ReassignCommunities{1.0}, std::nullopt});
  s.mutations.push_back({9, ChangeBlockRates{1.0, 0.3, 1.0}, 0.2});
  const auto seq = generate_sequence(s, 12, 6, 4);
  EXPECT_EQ(seq.snapshots.size(), 12u);
  EXPECT_EQ(seq.change_points, (std::vector<std::int64_t>{5, 9}));
}

TEST(Sequence, InvalidSchedulesRejected) {
  ModelSchedule s;
  s.initial = ErdosRenyi{10, 0.2};
  s.alpha = 0.5;
  s.mutations.push_back({20, ReassignCommunities{}, std::nullopt});
  EXPECT_THROW(generate_sequence(s, 10, 10, 1), InvalidArgument);
  s.mutations = {{5, ReplaceModel{ErdosRenyi{10, 0.3}}, std::nullopt}, {5, ReplaceModel{ErdosRenyi{10, 0.4}}, std::nullopt}};
  EXPECT_THROW(generate_sequence(s, 10, 10, 1), InvalidArgument);
  s.mutations = {{1, ReplaceModel{ErdosRenyi{10, 0.3}}, std::nullopt}};
  EXPECT_THROW(generate_sequence(s, 10, 10, 1), InvalidArgument);
  s.mutations.clear();
  s.alpha = 0.0;
  EXPECT_THROW(generate_sequence(s, 10, 10, 1), InvalidArgument);
  s.alpha = 0.5;
  EXPECT_THROW(generate_sequence(s, 1, 10, 1), InvalidArgument);
}

TEST(Sequence, DeterministicGivenSeed) {
  SbmClScenario sc;
  sc.nodes = 80;
  sc.window = 2;  // changes at 30 .. 270
  const auto sched = make_table3_schedule(sc, 5);
  const auto a = generate_sequence(sched, 400, 80, 5);
  const auto b = generate_sequence(sched, 400, 80, 5);
  EXPECT_EQ(a.snapshots, b.snapshots);
}

TEST(Mutations, DensityRetainedWithinHalfPercent) {
  SbmClScenario sc;
  sc.nodes = 400;
  Rng rng(12);
  for (double fraction : {0.5, 1.0}) {
    for (int rep = 0; rep < 5; ++rep) {
      GenerativeModel m = make_initial_model(sc, rng);
      const double before = expected_edge_count(m);
      apply_mutation(ChangeBlockRates{fraction, 0.6, 1.0}, m, rng);
      EXPECT_NEAR(expected_edge_count(m) / before, 1.0, 0.005);
    }
  }
}

TEST(Mutations, DensityFactorReached) {
  SbmClScenario sc;
  sc.nodes = 400;
  Rng rng(13);
  GenerativeModel m = make_initial_model(sc, rng);
  const double before = expected_edge_count(m);
  apply_mutation(ChangeBlockRates{1.0, 0.5, 0.4}, m, rng);
  EXPECT_NEAR(expected_edge_count(m) / before, 0.4, 0.002);
}

TEST(Mutations, UnreachableDensityThrows) {
  GenerativeModel m = BlockModel{{0, 1}, BlockMatrix{{1.0, 1.0}, {1.0, 1.0}}};
  Rng rng(1);
  EXPECT_THROW(apply_mutation(ChangeBlockRates{1.0, 0.5, 2.0}, m, rng), InvalidArgument);
}

TEST(Mutations, ExpectedEdgeCountMatchesPairSum) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_model(rng, trial % 5);
    const EdgeProbability prob(m);
    double direct = 0;
    const auto n = node_count(m);
    for (NodeIndex u = 0; u < n; ++u)
      for (NodeIndex v = u + 1; v < n; ++v) direct += prob(u, v);
    EXPECT_NEAR(expected_edge_count(m), direct, 1e-9 * std::max(1.0, direct));
  }
}

TEST(Mutations, RegenerateWeightsTouchesFraction) {
  std::vector<double> w(30, 5.0);
  GenerativeModel m = ChungLu{w, 1.0};
  Rng rng(15);
  apply_mutation(RegenerateWeights{1.0 / 3.0, WeightLaw::uniform(0.1, 1.0)}, m, rng);
  const auto& after = std::get<ChungLu>(m).weights;
  EXPECT_EQ(std::count_if(after.begin(), after.end(), [](double x) { return x != 5.0; }), 10);
}

TEST(Mutations, WrongModelKindRejected) {
  GenerativeModel m = ErdosRenyi{10, 0.2};
  Rng rng(1);
  EXPECT_THROW(apply_mutation(ReassignCommunities{}, m, rng), InvalidArgument);
  EXPECT_THROW(apply_mutation(ChangeBlockRates{}, m, rng), InvalidArgument);
  EXPECT_THROW(apply_mutation(RegenerateWeights{}, m, rng), InvalidArgument);
}

TEST(LogLikelihood, IdentityTransitionsHaveProbabilityOne) {
  const GenerativeModel m = ErdosRenyi{30, 0.3};
  Rng rng(1);
  const auto s = sample_initial_snapshot(m, rng);
  EXPECT_DOUBLE_EQ(snapshot_log_likelihood(s, s, m, 0.0), 0.0);
}

TEST(LogLikelihood, SingleDyadHalf) {
  const GenerativeModel m = ErdosRenyi{2, 0.5};
  const Snapshot empty{1, {}}, edge{2, {{0, 1}}};
  for (const auto& a : {empty, edge})
    for (const auto& b : {empty, edge}) EXPECT_NEAR(snapshot_log_likelihood(a, b, m, 1.0), std::log(0.5), 1e-15);
}

TEST(LogLikelihood, ImpossibleTransitionIsNegativeInfinity) {
  const GenerativeModel m = ErdosRenyi{5, 0.3};
  const Snapshot a{1, {}}, b{2, {{0, 1}}};
  EXPECT_EQ(snapshot_log_likelihood(a, b, m, 0.0), -std::numeric_limits<double>::infinity());
}

TEST(LogLikelihood, MatchesDirectSumOverDyads) {
  Rng rng(16);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_model(rng, trial % 5);
    const EdgeProbability prob(m);
    const double alpha = 0.2 + 0.6 * uniform01(rng);
    const auto a = sample_initial_snapshot(m, rng);
    const auto b = evolve_snapshot(a, m, alpha, rng);
    const auto n = node_count(m);
    std::set<DyadId> ea(a.edges.begin(), a.edges.end()), eb(b.edges.begin(), b.edges.end());
    double direct = 0;
    for (NodeIndex u = 0; u < n; ++u)
      for (NodeIndex v = u + 1; v < n; ++v) {
        const double p = prob(u, v);
        const bool was = ea.count({u, v}), now = eb.count({u, v});
        const double t = !was && now   ? alpha * p
                         : was && !now ? alpha * (1 - p)
                         : was         ? 1 - alpha * (1 - p)
                                       : 1 - alpha * p;
        direct += std::log(t);
      }
    EXPECT_NEAR(snapshot_log_likelihood(a, b, m, alpha), direct, 1e-9 * std::abs(direct) + 1e-12);
  }
}
