#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "affwords/bayes_net.hpp"
#include "affwords/common.hpp"
#include "affwords/schema.hpp"

namespace affwords {

// Allowed parents per variable following the action/feature/effect/word
// layering: Action and features are roots, effects may depend on Action and
// features, words on any affordance variable.
inline ParentLists layered_candidates(const WorldSchema& schema) {
  ParentLists out(schema.size());
  std::vector<std::size_t> roots, affordance;
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const auto r = role_of(schema, v);
    if (r == VariableRole::action || r == VariableRole::feature) roots.push_back(v);
    if (r != VariableRole::word) affordance.push_back(v);
  }
  for (std::size_t v = 0; v < schema.size(); ++v) {
    switch (role_of(schema, v)) {
      case VariableRole::effect: out[v] = roots; break;
      case VariableRole::word: out[v] = affordance; break;
      default: break;
    }
  }
  return out;
}

// BIC of one family: maximized log-likelihood minus (log N / 2) * free
// parameters.
inline double family_bic(const WorldSchema& schema, const Dataset& data,
                         std::size_t child, const std::vector<std::size_t>& parents) {
  const auto k = schema.arity(child);
  std::size_t configs = 1;
  for (auto p : parents) configs *= schema.arity(p);
  std::vector<double> counts(configs * k, 0.0);
  for (const auto& row : data.rows) {
    std::size_t c = 0;
    for (auto p : parents) c = c * schema.arity(p) + row[p];
    counts[c * k + row[child]] += 1.0;
  }
  double ll = 0.0;
  for (std::size_t c = 0; c < configs; ++c) {
    double total = 0.0;
    for (std::size_t x = 0; x < k; ++x) total += counts[c * k + x];
    for (std::size_t x = 0; x < k; ++x) {
      const double n = counts[c * k + x];
      if (n > 0.0) ll += n * std::log(n / total);
    }
  }
  const double params = double(configs) * double(k - 1);
  return ll - 0.5 * std::log(double(std::max<std::size_t>(data.rows.size(), 1))) * params;
}

// Per-node greedy forward selection of parents by BIC. A candidate is added
// only when it strictly improves the family score; among equal improvements
// the earliest schema variable wins.
inline ParentLists greedy_structure_fit(const Dataset& data, const WorldSchema& schema,
                                        std::size_t max_parents,
                                        const ParentLists& candidates) {
  if (candidates.size() != schema.size())
    fail(ErrorKind::invalid_argument, "candidate list size does not match schema");
  validate_dataset(schema, data);
  for (std::size_t v = 0; v < schema.size(); ++v)
    for (auto c : candidates[v])
      if (c >= schema.size() || c == v)
        fail(ErrorKind::invalid_argument,
             "invalid candidate parent for '" + schema.var(v).name + "'");

  ParentLists parents(schema.size());
  for (std::size_t v = 0; v < schema.size(); ++v) {
    auto& chosen = parents[v];
    auto pool = candidates[v];
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    double score = family_bic(schema, data, v, chosen);
    while (chosen.size() < max_parents) {
      std::size_t best = SIZE_MAX;
      double best_score = score;
      for (auto c : pool) {
        if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
        auto trial = chosen;
        trial.push_back(c);
        std::sort(trial.begin(), trial.end());
        const double s = family_bic(schema, data, v, trial);
        if (s > best_score) {
          best = c;
          best_score = s;
        }
      }
      if (best == SIZE_MAX) break;
      chosen.push_back(best);
      std::sort(chosen.begin(), chosen.end());
      score = best_score;
    }
  }
  // Rejects candidate sets that produced a cycle.
  BayesNet::topological_order(schema, parents);
  return parents;
}

}  // namespace affwords
