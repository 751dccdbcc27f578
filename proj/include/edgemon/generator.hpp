#pragma once

// Temporally correlated snapshot sequences. Each step keeps a dyad's status
// with probability 1 - alpha and otherwise redraws it from the active model.
// The evolver works on sorted pair ranks and skips over non-edges with
// geometric jumps, so one step costs O(edges + alpha * p_max * pairs).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "edgemon/graph_model.hpp"
#include "edgemon/random.hpp"
#include "edgemon/types.hpp"

namespace edgemon {

// ---------------------------------------------------------------------------
// Mutations

/// Node weight distribution: U[low, high], or the two-point law that puts
/// mass `high_share` on `high` and the rest on `low`.
struct WeightLaw {
  enum class Kind { kUniform, kTwoPoint };
  Kind kind = Kind::kUniform;
  double low = 0.1;
  double high = 1.0;
  double high_share = 0.5;

  static WeightLaw uniform(double low, double high) { return {Kind::kUniform, low, high, 0.5}; }
  static WeightLaw two_point(double low, double high, double high_share) {
    return {Kind::kTwoPoint, low, high, high_share};
  }

  void validate() const {
    detail::require(low >= 0.0 && high >= low, "weight law must satisfy 0 <= low <= high");
    detail::require(high > 0.0, "weight law must allow a positive weight");
    detail::require(high_share >= 0.0 && high_share <= 1.0, "two-point share must lie in [0, 1]");
  }

  double operator()(Rng& rng) const {
    if (kind == Kind::kTwoPoint) return uniform01(rng) < high_share ? high : low;
    return std::uniform_real_distribution<double>(low, high)(rng);
  }
};

/// Redraws the weights of a random `fraction` of nodes from `law`.
struct RegenerateWeights {
  double fraction = 1.0 / 3.0;
  WeightLaw law;
};

/// Perturbs every block rate touching a random `fraction` of communities by a
/// factor (1 +/- magnitude), then rescales the perturbed entries so that the
/// expected edge count equals `density_factor` times its previous value
/// (1 retains the overall density). Signs are split as evenly as possible
/// between increases and decreases and assigned in random order.
struct ChangeBlockRates {
  double fraction = 0.5;
  double magnitude = 0.5;
  double density_factor = 1.0;
};

/// Moves a random `fraction` of nodes to uniformly drawn communities.
struct ReassignCommunities {
  double fraction = 1.0;
};

/// Swaps in an arbitrary model, e.g. ER(0.4) -> ER(0.6) or SBM -> ER.
struct ReplaceModel {
  GenerativeModel model;
};

using Mutation = std::variant<RegenerateWeights, ChangeBlockRates, ReassignCommunities, ReplaceModel>;

struct ScheduledMutation {
  std::int64_t t = 0;  ///< first snapshot (1-based) generated by the new model
  Mutation mutation;
  std::optional<double> alpha;  ///< continuity override from t onward
};

struct ModelSchedule {
  GenerativeModel initial;
  double alpha = 0.49;
  std::vector<ScheduledMutation> mutations;
};

namespace detail {

inline std::vector<std::uint32_t> pick_subset(std::size_t n, double fraction, Rng& rng) {
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::size_t i = 0; i < std::min(m, n); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(std::min(m, n));
  return idx;
}

inline std::vector<double>* weights_of(GenerativeModel& m) {
  if (auto* x = std::get_if<ChungLu>(&m)) return &x->weights;
  if (auto* x = std::get_if<BlockChungLu>(&m)) return &x->weights;
  if (auto* x = std::get_if<Bter>(&m)) return &x->weights;
  return nullptr;
}

inline std::vector<std::uint32_t>* communities_of(GenerativeModel& m) {
  if (auto* x = std::get_if<BlockModel>(&m)) return &x->community;
  if (auto* x = std::get_if<BlockChungLu>(&m)) return &x->community;
  if (auto* x = std::get_if<Bter>(&m)) return &x->community;
  return nullptr;
}

inline BlockMatrix* rates_of(GenerativeModel& m) {
  if (auto* x = std::get_if<BlockModel>(&m)) return &x->rates;
  if (auto* x = std::get_if<BlockChungLu>(&m)) return &x->rates;
  return nullptr;
}

inline std::size_t community_count(GenerativeModel& m) {
  if (auto* r = rates_of(m)) return r->size();
  const auto* c = communities_of(m);
  return c->empty() ? 1 : *std::max_element(c->begin(), c->end()) + 1;
}

inline void apply(const RegenerateWeights& mut, GenerativeModel& model, Rng& rng) {
  auto* w = weights_of(model);
  require(w != nullptr, "weight regeneration needs a weighted model");
  mut.law.validate();
  for (auto i : pick_subset(w->size(), mut.fraction, rng)) (*w)[i] = mut.law(rng);
  // Chung-Lu style models keep their density parameter, which may need to
  // shrink so the largest weight pair stays a probability.
  auto cap_beta = [](auto& m) {
    const double sum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    m.beta = std::min(m.beta, sum / max_pair_product(m.weights));
  };
  if (auto* cl = std::get_if<ChungLu>(&model)) cap_beta(*cl);
  if (auto* bt = std::get_if<Bter>(&model)) cap_beta(*bt);
}

inline void apply(const ChangeBlockRates& mut, GenerativeModel& model, Rng& rng) {
  auto* rates = rates_of(model);
  require(rates != nullptr, "block-rate change needs a block model");
  require(mut.magnitude >= 0.0 && mut.magnitude < 1.0, "rate change magnitude must lie in [0, 1)");
  require(mut.density_factor > 0.0, "density factor must be positive");
  const std::size_t k = rates->size();
  const double before = expected_edge_count(model);

  std::vector<bool> chosen(k, false);
  for (auto r : pick_subset(k, mut.fraction, rng)) chosen[r] = true;
  std::vector<std::pair<std::size_t, std::size_t>> touched;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t s = r; s < k; ++s)
      if (chosen[r] || chosen[s]) touched.emplace_back(r, s);
  if (touched.empty()) return;

  std::vector<int> sign(touched.size());
  for (std::size_t i = 0; i < sign.size(); ++i) sign[i] = i % 2 == 0 ? 1 : -1;
  std::shuffle(sign.begin(), sign.end(), rng);
  BlockMatrix perturbed = *rates;
  for (std::size_t i = 0; i < touched.size(); ++i) {
    const auto [r, s] = touched[i];
    perturbed.set(r, s, std::min(1.0, (*rates)(r, s) * (1.0 + sign[i] * mut.magnitude)));
  }

  const double target = before * mut.density_factor;
  auto with_scale = [&](double lambda) {
    BlockMatrix m = perturbed;
    for (auto [r, s] : touched) m.set(r, s, std::min(1.0, perturbed(r, s) * lambda));
    return m;
  };
  auto density = [&](double lambda) {
    GenerativeModel trial = model;
    *rates_of(trial) = with_scale(lambda);
    return expected_edge_count(trial);
  };
  // expected edges are continuous and non-decreasing in lambda
  double lo = 0.0, hi = 1.0;
  while (density(hi) < target) {
    hi *= 2.0;
    if (hi > 1e9) throw InvalidArgument("block-rate change cannot reach the requested density");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (density(mid) < target ? lo : hi) = mid;
  }
  *rates = with_scale(hi);
}

inline void apply(const ReassignCommunities& mut, GenerativeModel& model, Rng& rng) {
  auto* c = communities_of(model);
  require(c != nullptr, "community reassignment needs a community model");
  const std::size_t k = community_count(model);
  std::uniform_int_distribution<std::uint32_t> law(0, static_cast<std::uint32_t>(k - 1));
  for (auto i : pick_subset(c->size(), mut.fraction, rng)) (*c)[i] = law(rng);
}

inline void apply(const ReplaceModel& mut, GenerativeModel& model, Rng&) {
  require(node_count(mut.model) == node_count(model), "replacement model must keep the node count");
  model = mut.model;
}

}  // namespace detail

/// Applies one mutation in place; the result is validated.
inline void apply_mutation(const Mutation& mutation, GenerativeModel& model, Rng& rng) {
  std::visit([&](const auto& m) { detail::apply(m, model, rng); }, mutation);
  validate(model);
}

inline void validate(const ModelSchedule& schedule, std::int64_t length) {
  validate(schedule.initial);
  detail::require(schedule.alpha > 0.0 && schedule.alpha <= 1.0, "continuity alpha must lie in (0, 1]");
  std::int64_t last = 1;
  for (const auto& m : schedule.mutations) {
    detail::require(m.t > last, "mutation indices must be strictly increasing and greater than 1");
    detail::require(m.t <= length, "mutation index exceeds the sequence length");
    if (m.alpha) detail::require(*m.alpha > 0.0 && *m.alpha <= 1.0, "alpha override must lie in (0, 1]");
    last = m.t;
  }
}

// ---------------------------------------------------------------------------
// Snapshot evolution

/// Holds the current snapshot as sorted pair ranks and advances it in place.
class SnapshotEvolver {
 public:
  explicit SnapshotEvolver(std::uint32_t nodes) : n_(nodes) {}

  std::uint32_t nodes() const { return n_; }
  const std::vector<DyadIndex>& edge_ranks() const { return edges_; }

  void reset(std::vector<DyadIndex> ranks) { edges_ = std::move(ranks); }

  /// Fresh draw: every dyad independently an edge with its model probability.
  void sample(const EdgeProbability& prob, Rng& rng) {
    check_nodes(prob);
    edges_.clear();
    SplitUniform uniform(rng);
    prob.with_kernel([&](auto p) {
      for_each_candidate(prob, 1.0, rng, [&](DyadIndex r, NodeIndex u, NodeIndex v, double bound) {
        if (uniform() * bound < p(u, v)) edges_.push_back(r);
      });
    });
  }

  /// One continuity step: edges are dropped with probability alpha*(1-p),
  /// non-edges appear with probability alpha*p.
  void evolve(const EdgeProbability& prob, double alpha, Rng& rng) {
    check_nodes(prob);
    detail::require(alpha >= 0.0 && alpha <= 1.0, "continuity alpha must lie in [0, 1]");
    if (alpha == 0.0) return;
    next_.clear();
    next_.reserve(edges_.size() + edges_.size() / 8);
    SplitUniform uniform(rng);
    prob.with_kernel([&](auto p) {
      RankCursor cursor(n_);
      auto it = edges_.begin();
      const auto end = edges_.end();
      auto flush_edges_below = [&](DyadIndex limit) {
        for (; it != end && *it < limit; ++it) {
          const DyadId d = cursor.seek(*it);
          if (uniform() >= alpha * (1.0 - p(d.u, d.v))) next_.push_back(*it);
        }
      };
      for_each_candidate(prob, alpha, rng, [&](DyadIndex r, NodeIndex u, NodeIndex v, double bound) {
        flush_edges_below(r);
        if (it != end && *it == r) return;  // existing edge, handled by the flush
        if (uniform() * bound < alpha * p(u, v)) next_.push_back(r);
      });
      flush_edges_below(std::numeric_limits<DyadIndex>::max());
    });
    edges_.swap(next_);
  }

  Snapshot snapshot(std::int64_t t) const {
    Snapshot s;
    s.t = t;
    s.edges.reserve(edges_.size());
    RankCursor cursor(n_);
    for (auto r : edges_) s.edges.push_back(cursor.seek(r));
    return s;
  }

 private:
  void check_nodes(const EdgeProbability& prob) const {
    detail::require(prob.nodes() == n_, "model node count differs from the snapshot node count");
  }

  // Visits ranks in increasing order; each dyad of row u is visited
  // independently with probability q, and visit(r, u, v, q) thins the
  // candidate down to its own probability. Rows with a small bound
  // scale * row_upper_bound(u) are skipped through geometrically; dense rows
  // are scanned in full (q = 1), which is cheaper than a logarithm per gap.
  template <class F>
  void for_each_candidate(const EdgeProbability& prob, double scale, Rng& rng, F&& visit) const {
    constexpr double kScanAbove = 0.15;
    DyadIndex start = 0;
    for (NodeIndex u = 0; u + 1 < n_; ++u) {
      const DyadIndex len = n_ - u - 1;
      const double q = std::min(1.0, scale * prob.row_upper_bound(u));
      if (q >= kScanAbove) {
        for (DyadIndex j = 0; j < len; ++j) visit(start + j, u, static_cast<NodeIndex>(u + 1 + j), 1.0);
      } else if (q > 0.0) {
        const double log_miss = std::log1p(-q);
        for (DyadIndex j = geometric_gap(rng, log_miss); j < len; j += 1 + geometric_gap(rng, log_miss))
          visit(start + j, u, static_cast<NodeIndex>(u + 1 + j), q);
      }
      start += len;
    }
  }

  std::uint32_t n_;
  std::vector<DyadIndex> edges_;
  std::vector<DyadIndex> next_;
};

namespace detail {
inline std::vector<DyadIndex> ranks_of(const Snapshot& s, std::uint32_t n) {
  std::vector<DyadIndex> r;
  r.reserve(s.edges.size());
  for (const auto& e : s.edges) {
    require(e.u < e.v && e.v < n, "snapshot edge out of range");
    r.push_back(dyad_rank(e, n));
  }
  std::sort(r.begin(), r.end());
  return r;
}
}  // namespace detail

inline Snapshot sample_initial_snapshot(const GenerativeModel& model, Rng& rng, std::int64_t t = 1) {
  const EdgeProbability prob(model);
  SnapshotEvolver ev(prob.nodes());
  ev.sample(prob, rng);
  return ev.snapshot(t);
}

inline Snapshot evolve_snapshot(const Snapshot& prev, const GenerativeModel& model, double alpha, Rng& rng) {
  const EdgeProbability prob(model);
  SnapshotEvolver ev(prob.nodes());
  ev.reset(detail::ranks_of(prev, prob.nodes()));
  ev.evolve(prob, alpha, rng);
  return ev.snapshot(prev.t + 1);
}

// ---------------------------------------------------------------------------
// Sequences

/// Streams a scheduled sequence one snapshot at a time (O(edges) memory).
class SequenceGenerator {
 public:
  SequenceGenerator(ModelSchedule schedule, std::int64_t length, std::uint64_t seed)
      : schedule_(std::move(schedule)),
        length_(length),
        model_(schedule_.initial),
        alpha_(schedule_.alpha),
        prob_(model_),
        evolver_(node_count(model_)),
        rng_(make_rng(seed, Stream::kGenerator)),
        mutation_rng_(make_rng(seed, Stream::kSchedule)) {
    detail::require(length >= 2, "a sequence needs at least two snapshots");
    validate(schedule_, length_);
  }

  std::int64_t length() const { return length_; }
  std::int64_t produced() const { return t_; }
  bool done() const { return t_ >= length_; }
  std::uint32_t nodes() const { return evolver_.nodes(); }

  /// Model and alpha that generated the most recent snapshot.
  const GenerativeModel& active_model() const { return model_; }
  const EdgeProbability& active_probabilities() const { return prob_; }
  double active_alpha() const { return alpha_; }
  const SnapshotEvolver& state() const { return evolver_; }

  /// Snapshot indices where the model changes.
  std::vector<std::int64_t> change_points() const {
    std::vector<std::int64_t> s;
    for (const auto& m : schedule_.mutations) s.push_back(m.t);
    return s;
  }

  /// Advances one step; returns true if the model changed at this step.
  bool advance() {
    detail::require(!done(), "sequence exhausted");
    ++t_;
    bool changed = false;
    if (t_ == 1) {
      evolver_.sample(prob_, rng_);
      return false;
    }
    while (next_mutation_ < schedule_.mutations.size() && schedule_.mutations[next_mutation_].t == t_) {
      const auto& m = schedule_.mutations[next_mutation_++];
      apply_mutation(m.mutation, model_, mutation_rng_);
      if (m.alpha) alpha_ = *m.alpha;
      prob_ = EdgeProbability(model_);
      changed = true;
    }
    evolver_.evolve(prob_, alpha_, rng_);
    return changed;
  }

  Snapshot next() {
    advance();
    return evolver_.snapshot(t_);
  }

 private:
  ModelSchedule schedule_;
  std::int64_t length_;
  GenerativeModel model_;
  double alpha_;
  EdgeProbability prob_;
  SnapshotEvolver evolver_;
  Rng rng_;
  Rng mutation_rng_;
  std::int64_t t_ = 0;
  std::size_t next_mutation_ = 0;
};

struct GeneratedSequence {
  std::vector<Snapshot> snapshots;
  std::vector<std::int64_t> change_points;
};

/// Materializes a full sequence. Prefer SequenceGenerator for long runs.
inline GeneratedSequence generate_sequence(const ModelSchedule& schedule, std::int64_t length, std::uint32_t nodes,
                                           std::uint64_t seed) {
  detail::require(node_count(schedule.initial) == nodes, "schedule model node count differs from N");
  SequenceGenerator gen(schedule, length, seed);
  GeneratedSequence out;
  out.change_points = gen.change_points();
  out.snapshots.reserve(static_cast<std::size_t>(length));
  while (!gen.done()) out.snapshots.push_back(gen.next());
  return out;
}

// ---------------------------------------------------------------------------
// Likelihood

/// Per-step log-likelihood of a transition under a fixed model and alpha.
/// The all-zero baseline sum over every pair is computed once, so each call
/// costs O(edges in prev + edges in curr).
class TransitionLikelihood {
 public:
  TransitionLikelihood(const GenerativeModel& model, double alpha) : prob_(model), alpha_(alpha) {
    detail::require(alpha >= 0.0 && alpha <= 1.0, "continuity alpha must lie in [0, 1]");
    const std::uint64_t n = prob_.nodes();
    for (std::uint64_t u = 0; u + 1 < n; ++u)
      for (std::uint64_t v = u + 1; v < n; ++v) {
        const double stay = 1.0 - alpha_ * prob_(static_cast<NodeIndex>(u), static_cast<NodeIndex>(v));
        if (stay <= 0.0) ++forced_flips_;
        else baseline_ += std::log(stay);
      }
  }

  double operator()(const std::vector<DyadIndex>& prev, const std::vector<DyadIndex>& curr) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    double ll = baseline_;
    std::int64_t forced = forced_flips_;
    RankCursor cursor(prob_.nodes());
    auto a = prev.begin(), b = curr.begin();
    while (a != prev.end() || b != curr.end()) {
      DyadIndex r;
      bool was, now;
      if (b == curr.end() || (a != prev.end() && *a < *b)) { r = *a++; was = true; now = false; }
      else if (a == prev.end() || *b < *a) { r = *b++; was = false; now = true; }
      else { r = *a++; ++b; was = now = true; }
      const DyadId d = cursor.seek(r);
      const double p = prob_(d.u, d.v);
      const double stay0 = 1.0 - alpha_ * p;
      if (stay0 > 0.0) ll -= std::log(stay0);
      else --forced;
      double trans;
      if (!was && now) trans = alpha_ * p;
      else if (was && !now) trans = alpha_ * (1.0 - p);
      else trans = 1.0 - alpha_ * (1.0 - p);
      if (trans <= 0.0) return kNegInf;
      ll += std::log(trans);
    }
    return forced > 0 ? kNegInf : ll;
  }

 private:
  EdgeProbability prob_;
  double alpha_;
  double baseline_ = 0.0;
  std::int64_t forced_flips_ = 0;  // non-edge pairs that cannot stay non-edges
};

/// Log-probability of `curr` given `prev` under the continuity process.
/// Returns -infinity when a realized transition has probability zero.
inline double snapshot_log_likelihood(const Snapshot& prev, const Snapshot& curr, const GenerativeModel& model,
                                      double alpha) {
  const auto n = node_count(model);
  return TransitionLikelihood(model, alpha)(detail::ranks_of(prev, n), detail::ranks_of(curr, n));
}

}  // namespace edgemon
