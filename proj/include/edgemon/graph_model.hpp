#pragma once

// Edge-probability models for the snapshot generator: Erdos-Renyi, Chung-Lu,
// stochastic block model, block model with Chung-Lu degree weights, and BTER.
// Every model assigns each dyad an independent edge probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "edgemon/types.hpp"

namespace edgemon {

/// Symmetric K x K matrix of between-community edge rates.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  explicit BlockMatrix(std::size_t k, double fill = 0.0) : k_(k), v_(k * k, fill) {}
  BlockMatrix(std::initializer_list<std::initializer_list<double>> rows) : k_(rows.size()) {
    for (const auto& r : rows) {
      detail::require(r.size() == k_, "block matrix must be square");
      v_.insert(v_.end(), r.begin(), r.end());
    }
  }

  std::size_t size() const { return k_; }
  double operator()(std::size_t r, std::size_t s) const { return v_[r * k_ + s]; }
  void set(std::size_t r, std::size_t s, double x) {
    v_[r * k_ + s] = x;
    v_[s * k_ + r] = x;
  }
  const std::vector<double>& data() const { return v_; }

  friend bool operator==(const BlockMatrix&, const BlockMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<double> v_;
};

struct ErdosRenyi {
  std::uint32_t nodes = 0;
  double p = 0.0;
};

struct ChungLu {
  std::vector<double> weights;
  double beta = 1.0;
};

struct BlockModel {
  std::vector<std::uint32_t> community;
  BlockMatrix rates;
};

/// p(i,j) = rates(c_i, c_j) * w_i * w_j / normalization. A normalization of 0
/// means "use the largest weight product over distinct node pairs".
struct BlockChungLu {
  std::vector<std::uint32_t> community;
  BlockMatrix rates;
  std::vector<double> weights;
  double normalization = 0.0;
};

/// ER inside communities, Chung-Lu (weights, beta) across them.
struct Bter {
  std::vector<std::uint32_t> community;
  double intra_p = 0.0;
  std::vector<double> weights;
  double beta = 1.0;
};

using GenerativeModel = std::variant<ErdosRenyi, ChungLu, BlockModel, BlockChungLu, Bter>;

enum class ModelKind { kErdosRenyi, kChungLu, kBlockModel, kBlockChungLu, kBter };

inline ModelKind kind_of(const GenerativeModel& m) { return static_cast<ModelKind>(m.index()); }

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kErdosRenyi: return "er";
    case ModelKind::kChungLu: return "cl";
    case ModelKind::kBlockModel: return "sbm";
    case ModelKind::kBlockChungLu: return "sbm-cl";
    case ModelKind::kBter: return "bter";
  }
  return "?";
}

inline std::uint32_t node_count(const GenerativeModel& m) {
  return std::visit(
      [](const auto& x) -> std::uint32_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ErdosRenyi>) return x.nodes;
        else if constexpr (std::is_same_v<T, ChungLu>) return static_cast<std::uint32_t>(x.weights.size());
        else return static_cast<std::uint32_t>(x.community.size());
      },
      m);
}

namespace detail {

inline bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

inline void check_weights(const std::vector<double>& w) {
  double sum = 0.0;
  for (double x : w) {
    require(std::isfinite(x) && x >= 0.0, "weights must be finite and non-negative");
    sum += x;
  }
  require(sum > 0.0, "weights must have a positive sum");
}

/// Largest w_a * w_b over distinct a != b.
inline double max_pair_product(const std::vector<double>& w) {
  double a = 0.0, b = 0.0;
  for (double x : w) {
    if (x > a) { b = a; a = x; }
    else if (x > b) b = x;
  }
  return a * b;
}

inline void check_communities(const std::vector<std::uint32_t>& c, const BlockMatrix& rates) {
  const std::size_t k = rates.size();
  require(k > 0, "block matrix is empty");
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t s = 0; s < k; ++s) {
      require(is_probability(rates(r, s)), "block rates must lie in [0, 1]");
      require(rates(r, s) == rates(s, r), "block matrix must be symmetric");
    }
  for (auto x : c) require(x < k, "community index exceeds block matrix size");
}

/// Largest weight product between a node of community r and a distinct node of s.
inline BlockMatrix max_pair_by_block(const std::vector<std::uint32_t>& c, const std::vector<double>& w,
                                     std::size_t k) {
  std::vector<double> top1(k, 0.0), top2(k, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto r = c[i];
    if (w[i] > top1[r]) { top2[r] = top1[r]; top1[r] = w[i]; }
    else if (w[i] > top2[r]) top2[r] = w[i];
  }
  BlockMatrix out(k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t s = r; s < k; ++s) out.set(r, s, r == s ? top1[r] * top2[r] : top1[r] * top1[s]);
  return out;
}

}  // namespace detail

/// Throws InvalidArgument if the model's parameters are not a valid
/// edge-probability assignment.
inline void validate(const GenerativeModel& model) {
  using namespace detail;
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ErdosRenyi>) {
          require(is_probability(m.p), "ER edge probability must lie in [0, 1]");
        } else if constexpr (std::is_same_v<T, ChungLu>) {
          check_weights(m.weights);
          require(m.beta >= 0.0, "CL density must be non-negative");
          const double sum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
          require(m.beta * max_pair_product(m.weights) / sum <= 1.0,
                  "CL parameterization gives an edge probability above 1");
        } else if constexpr (std::is_same_v<T, BlockModel>) {
          check_communities(m.community, m.rates);
        } else if constexpr (std::is_same_v<T, BlockChungLu>) {
          check_communities(m.community, m.rates);
          require(m.weights.size() == m.community.size(), "SBM-CL needs one weight per node");
          check_weights(m.weights);
          require(m.normalization >= 0.0, "SBM-CL normalization must be non-negative");
          if (m.normalization > 0.0) {
            const auto top = max_pair_by_block(m.community, m.weights, m.rates.size());
            for (std::size_t r = 0; r < top.size(); ++r)
              for (std::size_t s = r; s < top.size(); ++s)
                require(m.rates(r, s) * top(r, s) / m.normalization <= 1.0,
                        "SBM-CL normalization gives an edge probability above 1");
          } else {
            require(max_pair_product(m.weights) > 0.0, "SBM-CL needs two nodes with positive weight");
          }
        } else {
          require(is_probability(m.intra_p), "BTER intra-community probability must lie in [0, 1]");
          require(m.weights.size() == m.community.size(), "BTER needs one weight per node");
          check_weights(m.weights);
          require(m.beta >= 0.0, "BTER density must be non-negative");
          const double sum = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
          require(m.beta * max_pair_product(m.weights) / sum <= 1.0,
                  "BTER inter-community part gives an edge probability above 1");
        }
      },
      model);
}

/// Flattened, O(1)-per-dyad evaluator of a model's edge probabilities.
class EdgeProbability {
 public:
  explicit EdgeProbability(const GenerativeModel& model) : kind_(kind_of(model)), n_(node_count(model)) {
    validate(model);
    std::visit([this](const auto& m) { load(m); }, model);
  }

  std::uint32_t nodes() const { return n_; }
  ModelKind kind() const { return kind_; }

  double operator()(NodeIndex u, NodeIndex v) const {
    switch (kind_) {
      case ModelKind::kErdosRenyi: return constant_;
      case ModelKind::kChungLu: return scale_ * w_[u] * w_[v];
      case ModelKind::kBlockModel: return block_[c_[u] * k_ + c_[v]];
      case ModelKind::kBlockChungLu: return std::min(1.0, block_[c_[u] * k_ + c_[v]] * w_[u] * w_[v]);
      case ModelKind::kBter: return c_[u] == c_[v] ? constant_ : scale_ * w_[u] * w_[v];
    }
    return 0.0;
  }

  /// Calls f once with a (u, v) -> probability callable specialized to the
  /// model kind, so hot loops skip the per-dyad dispatch. Same values as
  /// operator().
  template <class F>
  void with_kernel(F&& f) const {
    const double* b = block_.data();
    const double* w = w_.data();
    const std::uint32_t* c = c_.data();
    const std::size_t k = k_;
    const double constant = constant_, scale = scale_;
    switch (kind_) {
      case ModelKind::kErdosRenyi: return f([constant](NodeIndex, NodeIndex) { return constant; });
      case ModelKind::kChungLu: return f([scale, w](NodeIndex u, NodeIndex v) { return scale * w[u] * w[v]; });
      case ModelKind::kBlockModel: return f([b, c, k](NodeIndex u, NodeIndex v) { return b[c[u] * k + c[v]]; });
      case ModelKind::kBlockChungLu:
        return f([b, c, k, w](NodeIndex u, NodeIndex v) { return std::min(1.0, b[c[u] * k + c[v]] * w[u] * w[v]); });
      case ModelKind::kBter:
        return f([constant, scale, c, w](NodeIndex u, NodeIndex v) { return c[u] == c[v] ? constant : scale * w[u] * w[v]; });
    }
  }

  double operator()(DyadId d) const {
    if (d.u == d.v || d.v >= n_) throw InvalidArgument("dyad out of range for this model");
    return (*this)(d.u, d.v);
  }

  /// An upper bound on every dyad's probability (tight for all built-in kinds).
  double upper_bound() const { return upper_; }

  /// An upper bound on the probability of any dyad touching node u.
  double row_upper_bound(NodeIndex u) const { return row_upper_.empty() ? upper_ : row_upper_[u]; }

 private:
  void load(const ErdosRenyi& m) {
    constant_ = m.p;
    upper_ = m.p;
  }
  void load(const ChungLu& m) {
    w_ = m.weights;
    scale_ = m.beta / std::accumulate(w_.begin(), w_.end(), 0.0);
    upper_ = scale_ * detail::max_pair_product(w_);
    const double top = *std::max_element(w_.begin(), w_.end());
    row_upper_.resize(n_);
    for (std::uint32_t u = 0; u < n_; ++u) row_upper_[u] = std::min(upper_, scale_ * w_[u] * top);
  }
  void load(const BlockModel& m) {
    c_ = m.community;
    k_ = m.rates.size();
    block_ = m.rates.data();
    upper_ = 0.0;
    const auto present = communities_present(m.community, k_);
    for (std::size_t r = 0; r < k_; ++r)
      for (std::size_t s = 0; s < k_; ++s)
        if (present[r] >= 1 && present[s] >= (r == s ? 2u : 1u)) upper_ = std::max(upper_, m.rates(r, s));
    row_upper_.resize(n_);
    for (std::uint32_t u = 0; u < n_; ++u)
      row_upper_[u] = std::min(upper_, *std::max_element(block_.begin() + c_[u] * k_, block_.begin() + (c_[u] + 1) * k_));
  }
  void load(const BlockChungLu& m) {
    c_ = m.community;
    k_ = m.rates.size();
    w_ = m.weights;
    const double z = m.normalization > 0.0 ? m.normalization : detail::max_pair_product(w_);
    block_ = m.rates.data();
    for (auto& x : block_) x /= z;
    const auto top = detail::max_pair_by_block(c_, w_, k_);
    upper_ = 0.0;
    for (std::size_t r = 0; r < k_; ++r)
      for (std::size_t s = 0; s < k_; ++s) upper_ = std::max(upper_, std::min(1.0, block_[r * k_ + s] * top(r, s)));
    std::vector<double> heaviest(k_, 0.0);
    for (std::uint32_t u = 0; u < n_; ++u) heaviest[c_[u]] = std::max(heaviest[c_[u]], w_[u]);
    std::vector<double> reach(k_, 0.0);  // max over s of rate(r, s) * heaviest weight in s
    for (std::size_t r = 0; r < k_; ++r)
      for (std::size_t s = 0; s < k_; ++s) reach[r] = std::max(reach[r], block_[r * k_ + s] * heaviest[s]);
    row_upper_.resize(n_);
    for (std::uint32_t u = 0; u < n_; ++u) row_upper_[u] = std::min(upper_, reach[c_[u]] * w_[u]);
  }
  void load(const Bter& m) {
    c_ = m.community;
    w_ = m.weights;
    constant_ = m.intra_p;
    scale_ = m.beta / std::accumulate(w_.begin(), w_.end(), 0.0);
    upper_ = std::max(m.intra_p, scale_ * detail::max_pair_product(w_));
    const double top = *std::max_element(w_.begin(), w_.end());
    row_upper_.resize(n_);
    for (std::uint32_t u = 0; u < n_; ++u) row_upper_[u] = std::min(upper_, std::max(m.intra_p, scale_ * w_[u] * top));
  }

  static std::vector<std::uint32_t> communities_present(const std::vector<std::uint32_t>& c, std::size_t k) {
    std::vector<std::uint32_t> n(k, 0);
    for (auto x : c) ++n[x];
    return n;
  }

  ModelKind kind_;
  std::uint32_t n_;
  double constant_ = 0.0;
  double scale_ = 1.0;
  double upper_ = 0.0;
  std::size_t k_ = 1;
  std::vector<double> w_;
  std::vector<std::uint32_t> c_;
  std::vector<double> block_;
  std::vector<double> row_upper_;
};

/// Probability that `dyad` is an edge under `model`. Builds an evaluator per
/// call; construct EdgeProbability once for repeated queries.
inline double edge_probability(const GenerativeModel& model, DyadId dyad) {
  return EdgeProbability(model)(dyad);
}

/// Expected number of edges in one snapshot drawn from `model`, summed
/// in closed form over community and weight aggregates.
inline double expected_edge_count(const GenerativeModel& model) {
  validate(model);
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ErdosRenyi>) {
          return m.p * static_cast<double>(dyad_count(m.nodes));
        } else if constexpr (std::is_same_v<T, ChungLu>) {
          double s = 0.0, q = 0.0;
          for (double w : m.weights) { s += w; q += w * w; }
          return m.beta / s * (s * s - q) / 2.0;
        } else {
          std::size_t k = 1;
          if constexpr (!std::is_same_v<T, Bter>) k = m.rates.size();
          else k = *std::max_element(m.community.begin(), m.community.end()) + 1;
          std::vector<double> count(k, 0.0), wsum(k, 0.0), wsq(k, 0.0);
          for (std::size_t i = 0; i < m.community.size(); ++i) {
            const auto r = m.community[i];
            count[r] += 1.0;
            if constexpr (!std::is_same_v<T, BlockModel>) {
              wsum[r] += m.weights[i];
              wsq[r] += m.weights[i] * m.weights[i];
            }
          }
          double total = 0.0;
          if constexpr (std::is_same_v<T, BlockModel>) {
            for (std::size_t r = 0; r < k; ++r)
              for (std::size_t s = r; s < k; ++s)
                total += m.rates(r, s) * (r == s ? count[r] * (count[r] - 1) / 2 : count[r] * count[s]);
          } else if constexpr (std::is_same_v<T, BlockChungLu>) {
            const double z = m.normalization > 0.0 ? m.normalization : detail::max_pair_product(m.weights);
            for (std::size_t r = 0; r < k; ++r)
              for (std::size_t s = r; s < k; ++s)
                total += m.rates(r, s) * (r == s ? (wsum[r] * wsum[r] - wsq[r]) / 2 : wsum[r] * wsum[s]);
            total /= z;
          } else {
            const double all = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
            for (std::size_t r = 0; r < k; ++r) {
              total += m.intra_p * count[r] * (count[r] - 1) / 2;
              for (std::size_t s = r + 1; s < k; ++s) total += m.beta / all * wsum[r] * wsum[s];
            }
          }
          return total;
        }
      },
      model);
}

}  // namespace edgemon
