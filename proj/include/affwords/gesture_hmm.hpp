#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "affwords/common.hpp"
#include "affwords/soft_evidence.hpp"

namespace affwords {

inline constexpr std::size_t feature_dim = 3;
using Frame = std::array<double, feature_dim>;

// Hand positions, one frame per sampling period.
struct Trajectory {
  std::vector<Frame> frames;
  double frame_period = 1.0 / 30.0;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

inline double norm(const Frame& f) {
  return std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
}

// Centers each frame on the torso and divides by the largest resulting
// norm. A sequence that is all zeros after centering is returned as is.
inline Trajectory preprocess(const Trajectory& raw, std::span<const Frame> torso) {
  if (raw.empty()) fail(ErrorKind::invalid_argument, "empty trajectory");
  if (torso.size() != raw.size())
    fail(ErrorKind::invalid_argument, "trajectory and torso lengths differ");
  Trajectory out{raw.frames, raw.frame_period};
  double hi = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t d = 0; d < feature_dim; ++d) {
      if (!std::isfinite(raw.frames[t][d]) || !std::isfinite(torso[t][d]))
        fail(ErrorKind::invalid_argument, "non-finite coordinate in trajectory");
      out.frames[t][d] -= torso[t][d];
    }
    hi = std::max(hi, norm(out.frames[t]));
  }
  if (hi > 0.0)
    for (auto& f : out.frames)
      for (auto& x : f) x /= hi;
  return out;
}

inline Trajectory preprocess(const Trajectory& raw) {
  const std::vector<Frame> origin(raw.size(), Frame{0.0, 0.0, 0.0});
  return preprocess(raw, origin);
}

inline double diag_gaussian_log_density(const Frame& x, const Frame& mean,
                                        const Frame& var) {
  double acc = 0.0;
  for (std::size_t d = 0; d < feature_dim; ++d) {
    const double diff = x[d] - mean[d];
    acc += std::log(2.0 * std::numbers::pi * var[d]) + diff * diff / var[d];
  }
  return -0.5 * acc;
}

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Frame> means;
  std::vector<Frame> variances;

  std::size_t components() const { return weights.size(); }

  // log(w_m) + log N(x; mean_m, var_m) for every component.
  void component_terms(const Frame& x, std::vector<double>& out) const {
    out.resize(weights.size());
    for (std::size_t m = 0; m < weights.size(); ++m)
      out[m] = weights[m] > 0.0
                   ? std::log(weights[m]) + diag_gaussian_log_density(x, means[m], variances[m])
                   : neg_inf;
  }

  double log_density(const Frame& x) const {
    std::vector<double> terms;
    component_terms(x, terms);
    return log_sum_exp(terms);
  }
};

inline constexpr double default_variance_floor = 1e-6;

// Left-to-right HMM: state 0 is the entry state and each state may only
// stay or advance by one.
struct HmmModel {
  std::string action_label;
  std::size_t states = 0;
  std::vector<double> log_transitions;  // states x states, row-major
  std::vector<GaussianMixture> emissions;

  double log_transition(std::size_t i, std::size_t j) const {
    return log_transitions[i * states + j];
  }

  void validate(double variance_floor = default_variance_floor) const {
    if (states == 0) fail(ErrorKind::invalid_argument, "HMM with no states");
    if (log_transitions.size() != states * states || emissions.size() != states)
      fail(ErrorKind::invalid_argument, "HMM '" + action_label + "' has inconsistent sizes");
    for (std::size_t i = 0; i < states; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < states; ++j) {
        const double lp = log_transition(i, j);
        const bool allowed = j == i || j == i + 1;
        if (!allowed && lp != neg_inf)
          fail(ErrorKind::invalid_argument, "HMM '" + action_label +
                                                "' violates the left-to-right structure");
        if (std::isnan(lp) || lp > 0.0)
          fail(ErrorKind::invalid_argument, "HMM '" + action_label + "' has invalid transition");
        sum += std::exp(lp);
      }
      if (std::abs(sum - 1.0) > 1e-12)
        fail(ErrorKind::invalid_argument,
             "HMM '" + action_label + "' transition row does not sum to one");
      const auto& g = emissions[i];
      if (g.components() == 0 || g.means.size() != g.components() ||
          g.variances.size() != g.components())
        fail(ErrorKind::invalid_argument, "HMM '" + action_label + "' has a bad mixture");
      double wsum = 0.0;
      for (std::size_t m = 0; m < g.components(); ++m) {
        if (!(g.weights[m] >= 0.0))
          fail(ErrorKind::invalid_argument, "negative mixture weight");
        wsum += g.weights[m];
        for (std::size_t d = 0; d < feature_dim; ++d)
          if (!(g.variances[m][d] >= variance_floor) || !std::isfinite(g.means[m][d]))
            fail(ErrorKind::invalid_argument,
                 "HMM '" + action_label + "' variance below floor or non-finite mean");
      }
      if (std::abs(wsum - 1.0) > 1e-12)
        fail(ErrorKind::invalid_argument, "HMM '" + action_label + "' mixture weights do not sum to one");
    }
  }
};

namespace detail {

inline std::vector<std::vector<double>> emission_table(const HmmModel& model,
                                                       const Trajectory& traj) {
  std::vector<std::vector<double>> out(traj.size(), std::vector<double>(model.states));
  for (std::size_t t = 0; t < traj.size(); ++t)
    for (std::size_t i = 0; i < model.states; ++i)
      out[t][i] = model.emissions[i].log_density(traj.frames[t]);
  return out;
}

// log alpha_t(i) for all t, i.
inline std::vector<std::vector<double>> forward_table(
    const HmmModel& model, const std::vector<std::vector<double>>& log_b) {
  const auto q = model.states;
  const auto len = log_b.size();
  std::vector<std::vector<double>> alpha(len, std::vector<double>(q, neg_inf));
  alpha[0][0] = log_b[0][0];
  for (std::size_t t = 1; t < len; ++t)
    for (std::size_t j = 0; j < q; ++j) {
      double acc = alpha[t - 1][j] + model.log_transition(j, j);
      if (j > 0) acc = log_add(acc, alpha[t - 1][j - 1] + model.log_transition(j - 1, j));
      alpha[t][j] = acc + log_b[t][j];
    }
  return alpha;
}

inline std::vector<std::vector<double>> backward_table(
    const HmmModel& model, const std::vector<std::vector<double>>& log_b) {
  const auto q = model.states;
  const auto len = log_b.size();
  std::vector<std::vector<double>> beta(len, std::vector<double>(q, neg_inf));
  for (std::size_t i = 0; i < q; ++i) beta[len - 1][i] = 0.0;
  for (std::size_t t = len - 1; t-- > 0;)
    for (std::size_t i = 0; i < q; ++i) {
      double acc = model.log_transition(i, i) + log_b[t + 1][i] + beta[t + 1][i];
      if (i + 1 < q)
        acc = log_add(acc, model.log_transition(i, i + 1) + log_b[t + 1][i + 1] +
                               beta[t + 1][i + 1]);
      beta[t][i] = acc;
    }
  return beta;
}

}  // namespace detail

// log L(frames_1..t | model) for every prefix length t = 1..T.
inline std::vector<double> prefix_logliks(const HmmModel& model, const Trajectory& traj) {
  if (traj.empty()) fail(ErrorKind::invalid_argument, "empty trajectory");
  const auto alpha = detail::forward_table(model, detail::emission_table(model, traj));
  std::vector<double> out(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) out[t] = log_sum_exp(alpha[t]);
  return out;
}

inline double forward_loglik(const HmmModel& model, const Trajectory& traj) {
  if (traj.empty()) fail(ErrorKind::invalid_argument, "empty trajectory");
  const auto alpha = detail::forward_table(model, detail::emission_table(model, traj));
  return log_sum_exp(alpha.back());
}

struct HmmTrainOptions {
  std::size_t states = 4;
  std::size_t mixtures = 2;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // relative log-likelihood gain
  double variance_floor = default_variance_floor;
  std::size_t kmeans_iterations = 25;
  std::uint64_t seed = 0;
};

namespace detail {

inline Frame mean_of(const std::vector<Frame>& xs) {
  Frame m{0, 0, 0};
  for (const auto& x : xs)
    for (std::size_t d = 0; d < feature_dim; ++d) m[d] += x[d];
  for (auto& v : m) v /= double(xs.size());
  return m;
}

inline Frame variance_of(const std::vector<Frame>& xs, const Frame& mean, double floor) {
  Frame v{0, 0, 0};
  for (const auto& x : xs)
    for (std::size_t d = 0; d < feature_dim; ++d) v[d] += (x[d] - mean[d]) * (x[d] - mean[d]);
  for (auto& s : v) s = std::max(xs.empty() ? floor : s / double(xs.size()), floor);
  return v;
}

inline double sq_dist(const Frame& a, const Frame& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < feature_dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Seeded k-means++ followed by Lloyd iterations.
inline GaussianMixture kmeans_mixture(const std::vector<Frame>& xs, std::size_t k,
                                      std::size_t iterations, double floor,
                                      std::mt19937_64& rng) {
  const Frame pooled_mean = mean_of(xs);
  const Frame pooled_var = variance_of(xs, pooled_mean, floor);

  std::vector<Frame> centers;
  centers.push_back(xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)]);
  std::vector<double> d2(xs.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      d2[i] = std::numeric_limits<double>::max();
      for (const auto& c : centers) d2[i] = std::min(d2[i], sq_dist(xs[i], c));
      total += d2[i];
    }
    if (total <= 0.0) {
      centers.push_back(centers.front());
      continue;
    }
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = xs.size() - 1;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(xs[pick]);
  }

  std::vector<std::size_t> assign(xs.size(), 0);
  for (std::size_t it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (sq_dist(xs[i], centers[c]) < sq_dist(xs[i], centers[best])) best = c;
      if (best != assign[i]) changed = true;
      assign[i] = best;
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<Frame> members;
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (assign[i] == c) members.push_back(xs[i]);
      if (!members.empty()) centers[c] = mean_of(members);
    }
    if (!changed && it > 0) break;
  }

  GaussianMixture g;
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<Frame> members;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (assign[i] == c) members.push_back(xs[i]);
    const double w = double(std::max<std::size_t>(members.size(), 1));
    g.weights.push_back(w);
    total += w;
    if (members.size() < 2) {
      g.means.push_back(members.empty() ? pooled_mean : members.front());
      g.variances.push_back(pooled_var);
    } else {
      const auto m = mean_of(members);
      g.means.push_back(m);
      g.variances.push_back(variance_of(members, m, floor));
    }
  }
  for (auto& w : g.weights) w /= total;
  return g;
}

inline void set_transitions(HmmModel& model, const std::vector<double>& stay) {
  const auto q = model.states;
  model.log_transitions.assign(q * q, neg_inf);
  for (std::size_t i = 0; i < q; ++i) {
    if (i + 1 == q) {
      model.log_transitions[i * q + i] = 0.0;
    } else {
      model.log_transitions[i * q + i] = std::log(stay[i]);
      model.log_transitions[i * q + i + 1] = std::log1p(-stay[i]);
    }
  }
}

inline HmmModel initial_model(std::span<const Trajectory> trajs, const std::string& label,
                              const HmmTrainOptions& opt) {
  const auto q = opt.states;
  std::vector<std::vector<Frame>> pools(q);
  std::vector<double> block_len(q, 0.0);
  for (const auto& tr : trajs) {
    const auto len = tr.size();
    for (std::size_t t = 0; t < len; ++t) pools[t * q / len].push_back(tr.frames[t]);
    for (std::size_t i = 0; i < q; ++i)
      block_len[i] += double((i + 1) * len / q - i * len / q);
  }

  HmmModel model;
  model.action_label = label;
  model.states = q;
  std::mt19937_64 rng(opt.seed);
  for (std::size_t i = 0; i < q; ++i)
    model.emissions.push_back(
        kmeans_mixture(pools[i], opt.mixtures, opt.kmeans_iterations, opt.variance_floor, rng));

  std::vector<double> stay(q, 0.0);
  for (std::size_t i = 0; i < q; ++i) {
    const double avg = block_len[i] / double(trajs.size());
    stay[i] = std::clamp(1.0 - 1.0 / avg, 0.5, 0.95);
  }
  set_transitions(model, stay);
  return model;
}

struct EmAccumulators {
  std::vector<double> stay_num, leave_num, trans_den;
  std::vector<std::vector<double>> occ;                 // [state][component]
  std::vector<std::vector<Frame>> first, second;        // sums of x and x^2
  double loglik = 0.0;

  explicit EmAccumulators(std::size_t q, std::size_t m)
      : stay_num(q, 0.0), leave_num(q, 0.0), trans_den(q, 0.0),
        occ(q, std::vector<double>(m, 0.0)),
        first(q, std::vector<Frame>(m, Frame{0, 0, 0})),
        second(q, std::vector<Frame>(m, Frame{0, 0, 0})) {}
};

inline void accumulate(const HmmModel& model, const Trajectory& tr, EmAccumulators& acc) {
  const auto q = model.states;
  const auto len = tr.size();
  const auto log_b = emission_table(model, tr);
  const auto alpha = forward_table(model, log_b);
  const auto beta = backward_table(model, log_b);
  const double ll = log_sum_exp(alpha.back());
  acc.loglik += ll;

  std::vector<double> terms;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < q; ++i) {
      const double gamma = std::exp(alpha[t][i] + beta[t][i] - ll);
      if (gamma == 0.0) continue;
      if (t + 1 < len) {
        acc.trans_den[i] += gamma;
        acc.stay_num[i] += std::exp(alpha[t][i] + model.log_transition(i, i) +
                                    log_b[t + 1][i] + beta[t + 1][i] - ll);
        if (i + 1 < q)
          acc.leave_num[i] += std::exp(alpha[t][i] + model.log_transition(i, i + 1) +
                                       log_b[t + 1][i + 1] + beta[t + 1][i + 1] - ll);
      }
      model.emissions[i].component_terms(tr.frames[t], terms);
      for (std::size_t m = 0; m < terms.size(); ++m) {
        const double r = gamma * std::exp(terms[m] - log_b[t][i]);
        if (r == 0.0) continue;
        acc.occ[i][m] += r;
        for (std::size_t d = 0; d < feature_dim; ++d) {
          acc.first[i][m][d] += r * tr.frames[t][d];
          acc.second[i][m][d] += r * tr.frames[t][d] * tr.frames[t][d];
        }
      }
    }
  }
}

inline void maximize(HmmModel& model, const EmAccumulators& acc, double floor) {
  const auto q = model.states;
  std::vector<double> stay(q, 1.0);
  for (std::size_t i = 0; i + 1 < q; ++i) {
    const double total = acc.stay_num[i] + acc.leave_num[i];
    stay[i] = total > 0.0 ? acc.stay_num[i] / total : std::exp(model.log_transition(i, i));
  }
  // Rows ending in probability exactly one or zero are legal; log handles both.
  set_transitions(model, stay);

  for (std::size_t i = 0; i < q; ++i) {
    auto& g = model.emissions[i];
    double state_occ = 0.0;
    for (double o : acc.occ[i]) state_occ += o;
    if (!(state_occ > 0.0)) continue;
    for (std::size_t m = 0; m < g.components(); ++m) {
      const double o = acc.occ[i][m];
      g.weights[m] = o / state_occ;
      if (o < 1e-10) continue;
      for (std::size_t d = 0; d < feature_dim; ++d) {
        const double mean = acc.first[i][m][d] / o;
        const double var = acc.second[i][m][d] / o - mean * mean;
        g.means[m][d] = mean;
        g.variances[m][d] = std::max(var, floor);
      }
    }
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    for (double& w : g.weights) w /= wsum;
  }
}

}  // namespace detail

// Baum-Welch training of one left-to-right GMM-HMM. Initialization segments
// every sequence uniformly into `states` blocks and runs seeded k-means per
// block. When `trace` is given it receives the total training
// log-likelihood evaluated before each re-estimation, plus the final one.
inline HmmModel train_hmm(std::span<const Trajectory> trajs, const std::string& label,
                          const HmmTrainOptions& opt = {},
                          std::vector<double>* trace = nullptr) {
  if (trajs.empty()) fail(ErrorKind::invalid_argument, "empty training set for '" + label + "'");
  if (opt.states == 0 || opt.mixtures == 0)
    fail(ErrorKind::invalid_argument, "HMM needs at least one state and one component");
  for (const auto& tr : trajs)
    if (tr.size() < opt.states)
      fail(ErrorKind::invalid_argument,
           "training trajectory of length " + std::to_string(tr.size()) +
               " is shorter than the state count " + std::to_string(opt.states));

  HmmModel model = detail::initial_model(trajs, label, opt);
  if (trace) trace->clear();
  double previous = neg_inf;
  for (std::size_t iter = 0;; ++iter) {
    detail::EmAccumulators acc(opt.states, opt.mixtures);
    for (const auto& tr : trajs) detail::accumulate(model, tr, acc);
    if (trace) trace->push_back(acc.loglik);
    if (iter > 0 && acc.loglik - previous < opt.tolerance * std::abs(previous)) break;
    if (iter == opt.max_iterations) break;
    previous = acc.loglik;
    detail::maximize(model, acc, opt.variance_floor);
  }
  model.validate(opt.variance_floor);
  return model;
}

// One model per action, in the same order as the Action variable's values.
struct GestureBank {
  std::vector<HmmModel> models;

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& m : models) out.push_back(m.action_label);
    return out;
  }

  void check_labels(const std::vector<std::string>& action_labels) const {
    if (labels() != action_labels)
      fail(ErrorKind::mismatch, "gesture bank actions {" + join(labels(), ",") +
                                    "} do not match Action values {" +
                                    join(action_labels, ",") + "}");
  }
};

inline std::vector<double> bank_logliks(const GestureBank& bank, const Trajectory& traj) {
  std::vector<double> out;
  for (const auto& m : bank.models) out.push_back(forward_loglik(m, traj));
  return out;
}

// P(A = a_k | G) = L_k / sum_h L_h, uniform prior over actions.
inline SoftActionEvidence action_posterior(const GestureBank& bank, const Trajectory& traj) {
  if (bank.models.empty()) fail(ErrorKind::invalid_argument, "empty gesture bank");
  return posterior_from_loglik(bank_logliks(bank, traj));
}

struct PrefixCurve {
  std::vector<std::string> actions;
  // [t][k] = log L(frames_1..t+1 | action k) / (t + 1)
  std::vector<std::vector<double>> normalized;
  std::vector<SoftActionEvidence> posterior;

  std::size_t argmax(std::size_t t) const {
    const auto& row = normalized.at(t);
    return std::size_t(std::max_element(row.begin(), row.end()) - row.begin());
  }
};

inline PrefixCurve prefix_curve(const GestureBank& bank, const Trajectory& traj) {
  if (bank.models.empty()) fail(ErrorKind::invalid_argument, "empty gesture bank");
  if (traj.empty()) fail(ErrorKind::invalid_argument, "empty trajectory");
  PrefixCurve curve;
  curve.actions = bank.labels();
  std::vector<std::vector<double>> per_model;
  for (const auto& m : bank.models) per_model.push_back(prefix_logliks(m, traj));
  for (std::size_t t = 0; t < traj.size(); ++t) {
    std::vector<double> raw, norm_row;
    for (const auto& p : per_model) {
      raw.push_back(p[t]);
      norm_row.push_back(p[t] / double(t + 1));
    }
    curve.normalized.push_back(std::move(norm_row));
    curve.posterior.push_back(posterior_from_loglik(raw));
  }
  return curve;
}

// Length-normalized prefix scores after the first `t` frames (1-based).
inline std::vector<double> prefix_scores(const GestureBank& bank, const Trajectory& traj,
                                         std::size_t t) {
  if (t == 0 || t > traj.size())
    fail(ErrorKind::invalid_argument,
         "prefix length must be in 1.." + std::to_string(traj.size()));
  Trajectory prefix{{traj.frames.begin(), traj.frames.begin() + std::ptrdiff_t(t)},
                    traj.frame_period};
  std::vector<double> out;
  for (const auto& m : bank.models) out.push_back(forward_loglik(m, prefix) / double(t));
  return out;
}

}  // namespace affwords
