#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "affwords/bayes_net.hpp"
#include "affwords/inference.hpp"
#include "affwords/schema.hpp"
#include "affwords/soft_evidence.hpp"

namespace affwords {

struct QuerySpec {
  std::vector<std::size_t> infer;
  Evidence obs;
};

struct FusedResult {
  Distribution dist;
  // Mass of the unnormalized product, i.e. how consistent the gesture
  // evidence is with the BN posterior.
  double normalizer = 0.0;
};

inline std::size_t action_variable(const BayesNet& net) {
  return net.schema().index_of(names::action);
}

// Combines the BN with soft action evidence.
//  Action inferred: P(X_inf | obs) * P_hmm(A), renormalized.
//  Action latent:   sum_A P_hmm(A) * P(X_inf, A | obs), renormalized.
inline FusedResult fuse_query(const BayesNet& net, const SoftActionEvidence& soft,
                              const QuerySpec& spec) {
  const auto action = action_variable(net);
  const auto& schema = net.schema();
  if (spec.obs.count(action))
    fail(ErrorKind::invalid_argument,
         "Action must not be observed when fusing gesture evidence");
  if (soft.size() != schema.arity(action))
    fail(ErrorKind::mismatch, "soft evidence has " + std::to_string(soft.size()) +
                                  " entries, Action has " +
                                  std::to_string(schema.arity(action)));

  const auto pos = std::find(spec.infer.begin(), spec.infer.end(), action);
  FusedResult out;
  if (pos != spec.infer.end()) {
    out.dist = query(net, std::span<const std::size_t>(spec.infer), spec.obs);
    const auto k = std::size_t(pos - spec.infer.begin());
    for (std::size_t i = 0; i < out.dist.probs.size(); ++i)
      out.dist.probs[i] *= soft[out.dist.values_of(i)[k]];
  } else {
    auto with_action = spec.infer;
    with_action.push_back(action);
    const auto joint = query(net, std::span<const std::size_t>(with_action), spec.obs);
    out.dist.vars = spec.infer;
    out.dist.card.assign(joint.card.begin(), joint.card.end() - 1);
    const auto na = joint.card.back();
    out.dist.probs.assign(joint.probs.size() / na, 0.0);
    for (std::size_t i = 0; i < out.dist.probs.size(); ++i)
      for (std::size_t a = 0; a < na; ++a)
        out.dist.probs[i] += soft[a] * joint.probs[i * na + a];
  }
  out.normalizer = out.dist.sum();
  if (!(out.normalizer > 0.0))
    fail(ErrorKind::impossible_evidence,
         "gesture evidence puts all mass on actions the BN rules out");
  for (double& p : out.dist.probs) p /= out.normalizer;
  return out;
}

// ---------------------------------------------------------------------------
// Experiment drivers

struct SweepPoint {
  double confidence = 0.0;
  Distribution posterior;
};

inline std::vector<double> confidence_grid(std::size_t points, double lo = 1.0 / 3.0,
                                           double hi = 1.0) {
  if (points < 2) fail(ErrorKind::invalid_argument, "sweep needs at least two points");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * double(i) / double(points - 1);
  grid.back() = hi;
  return grid;
}

// For each p in `grid`, fuses soft evidence with p on `target_action` and the
// rest split equally over the other actions, and returns the fused
// posterior of `infer` (Action by default).
inline std::vector<SweepPoint> confidence_sweep(const BayesNet& net, const Evidence& obs,
                                                std::size_t target_action,
                                                const std::vector<double>& grid,
                                                std::vector<std::size_t> infer = {}) {
  const auto action = action_variable(net);
  const auto na = net.schema().arity(action);
  if (target_action >= na) fail(ErrorKind::invalid_argument, "target action out of range");
  const double lo = 1.0 / double(na);
  for (double p : grid)
    if (!(p >= lo - 1e-12 && p <= 1.0))
      fail(ErrorKind::invalid_argument, "sweep grid value " + format_double(p) +
                                            " outside [1/" + std::to_string(na) + ", 1]");
  if (infer.empty()) infer = {action};
  std::vector<SweepPoint> out;
  for (double p : grid) {
    const auto soft = SoftActionEvidence::confidence(na, target_action, std::max(p, lo));
    out.push_back({p, fuse_query(net, soft, {infer, obs}).dist});
  }
  return out;
}

struct WordDelta {
  std::string word;
  double bn = 0.0;     // P_BN(w = true | obs)
  double fused = 0.0;  // P_comb(w = true | obs, soft)
  double delta() const { return fused - bn; }
};

// Change in P(w = true) for every word not in `obs` when soft action
// evidence is added.
inline std::vector<WordDelta> word_delta(const BayesNet& net, const Evidence& obs,
                                         const SoftActionEvidence& soft) {
  const auto& schema = net.schema();
  std::vector<WordDelta> out;
  for (auto w : word_variables(schema)) {
    if (obs.count(w)) continue;
    const std::vector<std::size_t> infer{w};
    const auto bn = query(net, std::span<const std::size_t>(infer), obs);
    const auto fused = fuse_query(net, soft, {infer, obs});
    out.push_back({schema.var(w).name, bn.probs[word_true], fused.dist.probs[word_true]});
  }
  return out;
}

}  // namespace affwords
