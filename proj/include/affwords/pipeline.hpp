#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affwords/bayes_net.hpp"
#include "affwords/fusion.hpp"
#include "affwords/gesture_hmm.hpp"
#include "affwords/grammar.hpp"
#include "affwords/inference.hpp"
#include "affwords/structure.hpp"
#include "affwords/synthworld.hpp"

namespace affwords {

struct BnTrainOptions {
  double alpha = 1.0;
  std::size_t max_parents = 3;
};

// Greedy BIC structure over the layered candidate sets, then smoothed CPTs.
inline BayesNet train_affordance_net(const Dataset& data, const WorldSchema& schema,
                                     const BnTrainOptions& opt = {}) {
  auto parents = greedy_structure_fit(data, schema, opt.max_parents, layered_candidates(schema));
  return fit_parameters(BayesNet::build(schema, std::move(parents)), data, opt.alpha);
}

// Trains one model per action label, in the given order. Model k is seeded
// with mix_seed(seed, k).
inline GestureBank train_gesture_bank(const std::map<std::string, std::vector<Trajectory>>& by_action,
                                      const std::vector<std::string>& actions,
                                      HmmTrainOptions opt, std::uint64_t seed) {
  GestureBank bank;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    auto it = by_action.find(actions[k]);
    if (it == by_action.end() || it->second.empty())
      fail(ErrorKind::invalid_argument, "no training trajectories for action '" + actions[k] + "'");
    opt.seed = mix_seed(seed, k);
    bank.models.push_back(train_hmm(std::span<const Trajectory>(it->second), actions[k], opt));
  }
  return bank;
}

// P(w = true | obs [, soft]) for every vocabulary word. Observed words get
// probability 0 or 1.
inline WordProbs word_probabilities(const BayesNet& net, const Evidence& obs,
                                    const SoftActionEvidence* soft = nullptr) {
  const auto& schema = net.schema();
  WordProbs probs;
  for (auto w : word_variables(schema)) {
    const auto& name = schema.var(w).name;
    if (auto it = obs.find(w); it != obs.end()) {
      probs[name] = it->second == word_true ? 1.0 : 0.0;
      continue;
    }
    const std::vector<std::size_t> infer{w};
    const auto d = soft ? fuse_query(net, *soft, {infer, obs}).dist
                        : query(net, std::span<const std::size_t>(infer), obs);
    probs[name] = d.probs[word_true];
  }
  return probs;
}

}  // namespace affwords
