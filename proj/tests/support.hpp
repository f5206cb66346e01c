#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "affwords/pipeline.hpp"

namespace affwords::testing {

// Random DAG over `n` variables with the given arity range; parents are
// drawn from lower indices so the order is topological, then the schema
// order is shuffled by the caller if needed.
inline BayesNet random_net(std::uint64_t seed, std::size_t n, std::size_t max_parents = 3,
                           std::size_t min_arity = 2, std::size_t max_arity = 2,
                           bool allow_zeros = false, bool action_first = false) {
  std::mt19937_64 rng(seed);
  std::vector<Variable> vars;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = std::uniform_int_distribution<std::size_t>(min_arity, max_arity)(rng);
    Variable v{"V" + std::to_string(i), {}};
    for (std::size_t x = 0; x < k; ++x) v.labels.push_back("v" + std::to_string(x));
    if (i == 0 && action_first) v = {names::action, {"grasp", "tap", "touch"}};
    vars.push_back(v);
  }
  ParentLists parents(n);
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<std::size_t> pool(i);
    for (std::size_t j = 0; j < i; ++j) pool[j] = j;
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto np = std::uniform_int_distribution<std::size_t>(0, std::min(i, max_parents))(rng);
    parents[i].assign(pool.begin(), pool.begin() + std::ptrdiff_t(np));
    std::sort(parents[i].begin(), parents[i].end());
  }
  auto net = BayesNet::build(WorldSchema(vars), parents);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t c = 0; c < net.parent_configs(v); ++c) {
      std::vector<double> row(net.schema().arity(v));
      double s = 0.0;
      for (auto& p : row) {
        p = allow_zeros && std::bernoulli_distribution(0.15)(rng) ? 0.0 : u(rng);
        s += p;
      }
      if (s == 0.0) row[0] = s = 1.0;
      for (auto& p : row) p /= s;
      net.set_row(v, c, std::span<const double>(row));
    }
  }
  return net;
}

// Naive oracle: walks every complete assignment of every variable, no
// pruning, then marginalizes. Only for small nets.
inline std::vector<double> naive_posterior(const BayesNet& net, const std::vector<std::size_t>& infer,
                                           const Evidence& obs) {
  const auto& schema = net.schema();
  const std::size_t n = schema.size();
  std::size_t out_size = 1;
  for (auto v : infer) out_size *= schema.arity(v);
  std::vector<double> out(out_size, 0.0);
  std::vector<std::size_t> x(n, 0);
  for (;;) {
    bool consistent = true;
    for (const auto& [v, val] : obs) consistent = consistent && x[v] == val;
    if (consistent) {
      double p = 1.0;
      for (std::size_t v = 0; v < n; ++v) p *= net.prob(v, net.config_of(v, x), x[v]);
      std::size_t idx = 0;
      for (auto v : infer) idx = idx * schema.arity(v) + x[v];
      out[idx] += p;
    }
    std::size_t i = n;
    while (i > 0 && ++x[i - 1] == schema.arity(i - 1)) x[--i] = 0;
    if (i == 0) break;
  }
  double s = 0.0;
  for (double p : out) s += p;
  for (auto& p : out) p /= s;
  return out;
}

// Direct sum over all left-to-right state paths of a model, in probability
// space (entry at state 0).
inline double path_enumeration_likelihood(const HmmModel& m, const Trajectory& traj) {
  const std::size_t q = m.states, t_len = traj.size();
  std::vector<std::size_t> path(t_len, 0);
  double total = 0.0;
  for (;;) {
    double p = std::exp(m.emissions[path[0]].log_density(traj.frames[0]));
    if (path[0] != 0) p = 0.0;
    for (std::size_t t = 1; t < t_len && p > 0.0; ++t)
      p *= std::exp(m.log_transition(path[t - 1], path[t])) *
           std::exp(m.emissions[path[t]].log_density(traj.frames[t]));
    total += p;
    std::size_t i = t_len;
    while (i > 0 && ++path[i - 1] == q) path[--i] = 0;
    if (i == 0) break;
  }
  return total;
}

// Random left-to-right GMM-HMM with moderate parameters.
inline HmmModel random_hmm(std::uint64_t seed, std::size_t q, std::size_t m) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HmmModel h;
  h.action_label = "x";
  h.states = q;
  h.log_transitions.assign(q * q, neg_inf);
  for (std::size_t i = 0; i < q; ++i) {
    if (i + 1 < q) {
      const double stay = 0.2 + 0.7 * u(rng);
      h.log_transitions[i * q + i] = std::log(stay);
      h.log_transitions[i * q + i + 1] = std::log1p(-stay);
    } else {
      h.log_transitions[i * q + i] = 0.0;
    }
  }
  for (std::size_t s = 0; s < q; ++s) {
    GaussianMixture g;
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      g.weights.push_back(0.2 + u(rng));
      total += g.weights.back();
      Frame mean, var;
      for (std::size_t d = 0; d < feature_dim; ++d) {
        mean[d] = 2.0 * u(rng) - 1.0;
        var[d] = 0.05 + u(rng);
      }
      g.means.push_back(mean);
      g.variances.push_back(var);
    }
    for (auto& w : g.weights) w /= total;
    h.emissions.push_back(g);
  }
  return h;
}

inline Trajectory random_trajectory(std::uint64_t seed, std::size_t len) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.6);
  Trajectory t;
  for (std::size_t i = 0; i < len; ++i) t.frames.push_back({g(rng), g(rng), g(rng)});
  return t;
}

inline constexpr std::uint64_t default_seed = 2018;

// The default synthetic world, 10,000 trials, BIC structure + Laplace CPTs.
inline const BayesNet& default_net() {
  static const BayesNet net = [] {
    const auto schema = affordance_schema();
    const auto trials =
        sample_trials(default_world_config(), schema, default_grammar(), 10000, default_seed);
    return train_affordance_net(to_dataset(trials, "tests"), schema);
  }();
  return net;
}

inline const std::vector<std::string>& action_labels() {
  static const std::vector<std::string> labels{"grasp", "tap", "touch"};
  return labels;
}

// Bank trained on 50 synthetic trajectories per action.
inline const GestureBank& default_bank() {
  static const GestureBank bank = [] {
    const auto params = default_world_config().trajectory;
    std::map<std::string, std::vector<Trajectory>> by_action;
    for (std::size_t k = 0; k < 3; ++k)
      by_action[action_labels()[k]] = sample_trajectories(action_labels()[k], params, 50, mix_seed(11, k));
    return train_gesture_bank(by_action, action_labels(), {}, default_seed);
  }();
  return bank;
}

// Held-out trajectories, disjoint seeds from training.
inline std::vector<Trajectory> held_out(std::size_t action, std::size_t count) {
  return sample_trajectories(action_labels()[action], default_world_config().trajectory, count,
                             mix_seed(9001, action));
}

// Reference descriptions the shipped grammar must derive.
inline const std::vector<std::string>& reference_sentences() {
  static const std::vector<std::string> s = {
      "the robot pushed the ball and the ball moves",
      "the robot tapped the sphere and the sphere moves",
      "he is pushing the sphere and the sphere moves",
      "the robot is tapping the yellow ball and the big yellow sphere is moving",
      "he pushed the yellow ball and the sphere is rolling",
      "the robot is poking the ball and the sphere is rolling",
      "he is pushing the ball and the yellow ball moves",
      "he pushes the sphere and the ball is moving",
      "he is tapping the yellow ball and the ball is moving",
      "the robot pokes the sphere and the ball is rolling",
      "the robot is picking the sphere and the sphere is moving",
      "the robot grasps the sphere and the ball is moving",
      "the robot is picking the sphere and the sphere is rising",
      "the robot grasped the sphere and the sphere is rising",
      "the robot picked the ball and the ball is rising",
      "baltazar grasps the sphere and the sphere is moving",
      "the robot has grasped the ball and the ball is rising",
      "the robot picked the ball and the green ball is moving",
      "baltazar grasped the sphere and the ball is moving",
      "baltazar is grasping the ball and the sphere is rising",
      "the robot is picking the cube but the square is still",
      "the robot is grasping the sphere but the box is inert",
      "the robot is grasping the square but the sphere is still",
      "the robot grasped the square but the cube is inert",
      "baltazar is grasping the square but the square is inert",
      "the robot is grasping the cube but the ball is inert",
      "the robot picks the box but the square is inert",
      "baltazar is picking the square but the square is still",
      "he is grasping the square but the cube is inert",
      "the robot grasps the square but the sphere is inert",
      "the robot is grasping the box and the green box is moving",
      "the robot is poking the green square and the cube is inert",
      "the robot picked the ball and the green ball is moving",
      "baltazar is poking the green sphere and the sphere is still",
      "the robot is pushing the big square but the box is inert",
  };
  return s;
}

}  // namespace affwords::testing
