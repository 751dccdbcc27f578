#pragma once

// Per-window edge-probability estimates from chain counts.
//
// For one chain with transition counts N00, N01, N10, N11 the likelihood
// factors into two binomials in a = alpha*p and b = alpha*(1-p), giving
//   alpha = N01/N0* + N10/N1*,   p = (N01/N0*) / alpha.
// Several chains share alpha; its estimate is a weighted mean of the
// per-chain estimates with weights (N0* N1*)^e. The frequency estimator
// N1/s ignores the transitions entirely.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgemon/chain_stats.hpp"
#include "edgemon/types.hpp"

namespace edgemon {

inline constexpr double kInfiniteExponent = std::numeric_limits<double>::infinity();
inline constexpr double kProbabilitySlack = 1e-12;

enum class Estimator { kMleApprox, kFrequency };

inline std::string to_string(Estimator e) { return e == Estimator::kFrequency ? "frequency" : "mle"; }

struct ChainEstimate {
  double alpha = 0.0;
  double p = 0.0;
  bool degenerate = true;
};

struct WindowEstimate {
  std::vector<double> p;
  std::optional<double> alpha;
  Estimator method = Estimator::kFrequency;
  std::vector<std::uint8_t> degenerate;  ///< per dyad, MLE only
  std::uint32_t length = 0;              ///< snapshots in the window

  std::size_t size() const { return p.size(); }
};

namespace detail {
inline double clamp_probability(double p) {
  if (p < -kProbabilitySlack || p > 1.0 + kProbabilitySlack || std::isnan(p))
    throw std::logic_error("estimated probability outside [0, 1]");
  return std::clamp(p, 0.0, 1.0);
}
}  // namespace detail

/// Closed-form maximum-likelihood (alpha, p) of a single chain. Chains that
/// never leave one state (N0* = 0, N1* = 0, or no flips) are flagged
/// degenerate and carry no estimate.
inline ChainEstimate mle_single_chain(const TransitionCounts& c) {
  const double from0 = c.from0(), from1 = c.from1();
  if (c.from0() == 0 || c.from1() == 0 || c.n01 + c.n10 == 0) return {};
  const double a = c.n01 * from1, b = c.n10 * from0;
  ChainEstimate e;
  e.alpha = (a + b) / (from0 * from1);
  e.p = detail::clamp_probability(a / (a + b));
  e.degenerate = false;
  return e;
}

/// Multi-chain estimate that tolerates windows where every chain is
/// degenerate: alpha is left unset and every p falls back to N1/s.
inline WindowEstimate mle_window_estimate(const ChainCounts& counts, double weight_exponent = kInfiniteExponent) {
  detail::require(weight_exponent >= 0.0, "weight exponent must be non-negative");
  WindowEstimate out;
  out.method = Estimator::kMleApprox;
  out.length = counts.length;
  out.p.resize(counts.size());
  out.degenerate.resize(counts.size());

  std::vector<ChainEstimate> chains(counts.size());
  double best = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    chains[j] = mle_single_chain(counts[j]);
    out.degenerate[j] = chains[j].degenerate;
    if (chains[j].degenerate) {
      out.p[j] = counts.length ? static_cast<double>(counts[j].n1) / counts.length : 0.0;
    } else {
      out.p[j] = chains[j].p;
      best = std::max(best, static_cast<double>(counts[j].from0()) * counts[j].from1());
    }
  }
  if (best == 0.0) return out;

  double weighted = 0.0, total = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (chains[j].degenerate) continue;
    const double info = static_cast<double>(counts[j].from0()) * counts[j].from1();
    double w;
    if (std::isinf(weight_exponent)) w = info == best ? 1.0 : 0.0;  // ties all kept
    else w = std::exp(weight_exponent * (std::log(info) - std::log(best)));
    weighted += w * chains[j].alpha;
    total += w;
  }
  out.alpha = weighted / total;
  return out;
}

/// Approximate joint MLE: alpha is the weighted mean of per-chain MLEs,
/// each p_j its own chain's MLE. Throws when every chain is degenerate.
inline WindowEstimate mle_approx_multi(const ChainCounts& counts, double weight_exponent = kInfiniteExponent) {
  auto est = mle_window_estimate(counts, weight_exponent);
  if (!est.alpha) throw InvalidArgument("every chain in the window is degenerate");
  return est;
}

/// Edge frequency N1/s for every dyad.
inline WindowEstimate frequency_estimate(const ChainCounts& counts, std::uint32_t window_size) {
  detail::require(window_size >= 1, "window size must be positive");
  WindowEstimate out;
  out.method = Estimator::kFrequency;
  out.length = window_size;
  out.p.reserve(counts.size());
  for (const auto& c : counts.dyads) out.p.push_back(detail::clamp_probability(static_cast<double>(c.n1) / window_size));
  return out;
}

inline WindowEstimate estimate_window(const ChainCounts& counts, Estimator method,
                                      double weight_exponent = kInfiniteExponent) {
  return method == Estimator::kFrequency ? frequency_estimate(counts, counts.length)
                                         : mle_window_estimate(counts, weight_exponent);
}

}  // namespace edgemon
