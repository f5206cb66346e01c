#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "affwords/common.hpp"
#include "affwords/gesture_hmm.hpp"
#include "affwords/grammar.hpp"
#include "affwords/schema.hpp"

namespace affwords {

// P(effect | parents) where parents are features or Action. Rows follow the
// mixed-radix order of `parents`, last parent fastest.
struct EffectModel {
  std::string variable;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> rows;
};

using WeightedWords = std::vector<std::pair<std::string, double>>;

// Effect phrase chosen by the first rule whose action/shape/ObjVel match;
// "*" matches anything.
struct EffectPhraseRule {
  std::string action = "*";
  std::string shape = "*";
  std::string obj_vel = "*";
  WeightedWords phrases;
};

struct DescriptionRules {
  std::map<std::string, std::vector<std::string>> verb_families;  // action -> nonterminals
  std::map<std::string, WeightedWords> shape_words;
  std::map<std::string, std::string> color_words;  // "" means never mentioned
  std::map<std::string, std::string> size_words;
  double p_size_word = 0.5;
  double p_color_word = 0.5;
  // (action, ObjVel) outcomes described with "and"; everything else "but".
  std::vector<std::pair<std::string, std::string>> congruent;
  std::vector<EffectPhraseRule> effect_phrases;
};

struct TrajectoryTemplate {
  std::vector<Frame> waypoints;
  std::vector<double> segment_weights;  // relative duration of each leg
};

struct TrajectoryParams {
  std::map<std::string, TrajectoryTemplate> templates;
  double noise_std = 0.05;
  std::size_t t_min = 20;
  std::size_t t_max = 60;
  double waypoint_jitter = 0.03;
  double timing_jitter = 0.2;
  double amplitude_min = 0.7;
  double amplitude_max = 1.3;
  double frame_period = 1.0 / 30.0;
};

struct WorldConfig {
  std::vector<EffectModel> effects;
  DescriptionRules description;
  TrajectoryParams trajectory;
};

inline WorldConfig default_world_config() {
  WorldConfig c;
  // Rows for parents (Action, Shape): grasp/sphere, grasp/box, tap/sphere,
  // tap/box, touch/sphere, touch/box.
  c.effects = {
      {names::obj_vel,
       {names::action, names::shape},
       {{0.3, 0.7, 0.0}, {0.3, 0.7, 0.0}, {0.1, 0.2, 0.7}, {0.6, 0.3, 0.1}, {0.9, 0.1, 0.0},
        {0.9, 0.1, 0.0}}},
      {names::hand_vel, {names::action}, {{0.8, 0.2}, {0.2, 0.8}, {0.7, 0.3}}},
      {names::obj_hand_vel,
       {names::action, names::shape},
       {{0.7, 0.25, 0.05}, {0.7, 0.25, 0.05}, {0.1, 0.3, 0.6}, {0.3, 0.5, 0.2},
        {0.8, 0.15, 0.05}, {0.8, 0.15, 0.05}}},
      {names::contact, {names::action}, {{0.1, 0.9}, {0.9, 0.1}, {0.6, 0.4}}},
  };

  auto& d = c.description;
  d.verb_families = {{"grasp", {"grasp", "pick"}}, {"tap", {"tap", "push"}},
                     {"touch", {"touch", "poke"}}};
  d.shape_words = {{"sphere", {{"sphere", 1.0}, {"ball", 1.0}}},
                   {"box", {{"box", 1.0}, {"cube", 1.0}, {"square", 1.0}}}};
  d.color_words = {{"blue", "blue"}, {"yellow", "yellow"}, {"green1", "green"}, {"green2", "green"}};
  d.size_words = {{"small", "small"}, {"medium", ""}, {"big", "big"}};
  d.congruent = {{"grasp", "medium"}, {"tap", "medium"}, {"tap", "fast"}, {"touch", "slow"}};
  d.effect_phrases = {
      {"grasp", "*", "slow", {{"is inert", 2}, {"is still", 2}, {"falls", 1}, {"is falling", 1}}},
      {"*", "*", "slow", {{"is inert", 1}, {"is still", 1}}},
      {"grasp", "*", "*", {{"rises", 1}, {"is rising", 1}, {"moves", 1}, {"is moving", 1}}},
      {"tap", "sphere", "*", {{"rolls", 1}, {"is rolling", 1}, {"moves", 1}, {"is moving", 1}}},
      {"tap", "box", "*", {{"slides", 1}, {"is sliding", 1}, {"moves", 1}, {"is moving", 1}}},
      {"*", "*", "*", {{"moves", 1}, {"is moving", 1}}},
  };

  // Hand path relative to the torso: x lateral, y forward, z up.
  auto& t = c.trajectory;
  t.templates["grasp"] = {
      {{0.1, 0.2, -0.2}, {0.1, 0.7, 0.5}, {0.1, 0.75, 0.05}, {0.1, 0.75, 0.05}, {0.1, 0.7, 0.55}},
      {3.0, 2.0, 1.5, 2.5}};
  t.templates["tap"] = {
      {{-0.5, 0.45, 0.0}, {-0.35, 0.72, 0.05}, {0.1, 0.75, 0.05}, {0.5, 0.75, 0.08}},
      {2.5, 2.0, 2.5}};
  t.templates["touch"] = {
      {{0.1, 0.2, -0.2}, {0.1, 0.72, 0.15}, {0.1, 0.76, 0.05}, {0.1, 0.76, 0.05}, {0.1, 0.45, 0.3}},
      {3.0, 1.0, 2.0, 2.0}};
  return c;
}

inline void validate_world_config(const WorldConfig& c, const WorldSchema& schema,
                                  const Grammar& grammar) {
  auto bad = [](const std::string& what) { fail(ErrorKind::invalid_argument, "world config: " + what); };
  for (const auto& e : c.effects) {
    const auto v = schema.index_of(e.variable);
    if (role_of(schema, v) != VariableRole::effect) bad("'" + e.variable + "' is not an effect");
    std::size_t configs = 1;
    for (const auto& p : e.parents) {
      const auto pv = schema.index_of(p);
      const auto r = role_of(schema, pv);
      if (r != VariableRole::action && r != VariableRole::feature)
        bad("effect parent '" + p + "' must be Action or a feature");
      configs *= schema.arity(pv);
    }
    if (e.rows.size() != configs) bad("'" + e.variable + "' needs " + std::to_string(configs) + " rows");
    for (const auto& row : e.rows) {
      if (row.size() != schema.arity(v)) bad("'" + e.variable + "' row has wrong width");
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) bad("negative probability for '" + e.variable + "'");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) bad("row for '" + e.variable + "' does not sum to 1");
    }
  }
  for (std::size_t v = 0; v < schema.size(); ++v)
    if (role_of(schema, v) == VariableRole::effect &&
        std::none_of(c.effects.begin(), c.effects.end(),
                     [&](const EffectModel& e) { return e.variable == schema.var(v).name; }))
      bad("no table for effect '" + schema.var(v).name + "'");

  auto check_words = [&](const std::string& phrase) {
    for (const auto& w : to_sentence(phrase))
      if (!grammar.in_vocabulary(w)) bad("word '" + w + "' is not in the grammar vocabulary");
  };
  const auto& d = c.description;
  const auto& action = schema.var(schema.index_of(names::action));
  for (const auto& a : action.labels) {
    auto it = d.verb_families.find(a);
    if (it == d.verb_families.end() || it->second.empty()) bad("no verb family for '" + a + "'");
    for (const auto& nt : it->second)
      if (!grammar.rules.count(nt)) bad("verb family <" + nt + "> not in grammar");
  }
  for (const auto& s : schema.var(schema.index_of(names::shape)).labels) {
    auto it = d.shape_words.find(s);
    if (it == d.shape_words.end() || it->second.empty()) bad("no words for shape '" + s + "'");
    for (const auto& [w, weight] : it->second) check_words(w);
  }
  for (const auto& col : schema.var(schema.index_of(names::color)).labels) {
    if (!d.color_words.count(col)) bad("no word for color '" + col + "'");
    check_words(d.color_words.at(col));
  }
  for (const auto& sz : schema.var(schema.index_of(names::size)).labels) {
    if (!d.size_words.count(sz)) bad("no word for size '" + sz + "'");
    check_words(d.size_words.at(sz));
  }
  for (const auto& r : d.effect_phrases) {
    if (r.phrases.empty()) bad("effect phrase rule without phrases");
    for (const auto& [p, w] : r.phrases) check_words(p);
  }
  for (const char* w : {"and", "but", "the"})
    if (!grammar.in_vocabulary(w)) bad(std::string("grammar lacks '") + w + "'");
  for (const char* nt : {"agent"})
    if (!grammar.rules.count(nt)) bad(std::string("grammar lacks <") + nt + ">");

  const auto& t = c.trajectory;
  if (t.t_min < 1 || t.t_min > t.t_max) bad("invalid duration range");
  if (!(t.noise_std >= 0.0)) bad("negative noise std");
  if (!(t.amplitude_min > 0.0 && t.amplitude_min <= t.amplitude_max)) bad("invalid amplitude range");
  for (const auto& a : action.labels) {
    auto it = t.templates.find(a);
    if (it == t.templates.end()) bad("no trajectory template for '" + a + "'");
    if (it->second.waypoints.size() < 2 ||
        it->second.segment_weights.size() + 1 != it->second.waypoints.size())
      bad("trajectory template for '" + a + "' needs n waypoints and n-1 weights");
  }
}

// One synthetic experiment: affordance values in schema order (the first
// eight variables), the spoken description, and its word bag.
struct Trial {
  Assignment affordances;
  Sentence description;
  std::vector<std::uint8_t> words;  // aligned with the schema's word variables
  std::optional<Trajectory> trajectory;

  Assignment row() const {
    Assignment r = affordances;
    for (auto w : words) r.push_back(w);
    return r;
  }
};

namespace detail {

template <class Rng>
std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    if (r < probs[i]) return i;
    r -= probs[i];
  }
  return last;
}

template <class Rng>
const std::string& sample_weighted(const WeightedWords& options, Rng& rng) {
  std::vector<double> w;
  double total = 0.0;
  for (const auto& [s, weight] : options) total += weight;
  for (const auto& [s, weight] : options) w.push_back(weight / total);
  return options[sample_index(std::span<const double>(w), rng)].first;
}

inline bool rule_matches(const std::string& pattern, const std::string& value) {
  return pattern == "*" || pattern == value;
}

}  // namespace detail

// Draws a description congruent with the trial's affordances from the
// grammar: agent and verb tense are expanded from their grammar rules, the
// object and effect phrases follow the description rules.
template <class Rng>
Sentence sample_description(const Assignment& affordances, const WorldSchema& schema,
                            const Grammar& grammar, const DescriptionRules& rules, Rng& rng) {
  auto label = [&](const char* var) {
    const auto v = schema.index_of(var);
    return schema.var(v).labels.at(affordances.at(v));
  };
  const auto action = label(names::action);
  const auto shape = label(names::shape);
  const auto obj_vel = label(names::obj_vel);

  Sentence s = expand(grammar, "agent", rng);

  const auto& families = rules.verb_families.at(action);
  const auto& family =
      families[std::uniform_int_distribution<std::size_t>(0, families.size() - 1)(rng)];
  for (auto& w : expand(grammar, family, rng)) s.push_back(std::move(w));

  auto object_phrase = [&] {
    s.push_back("the");
    const auto& size_word = rules.size_words.at(label(names::size));
    if (!size_word.empty() && std::bernoulli_distribution(rules.p_size_word)(rng))
      s.push_back(size_word);
    const auto& color_word = rules.color_words.at(label(names::color));
    if (!color_word.empty() && std::bernoulli_distribution(rules.p_color_word)(rng))
      s.push_back(color_word);
    s.push_back(detail::sample_weighted(rules.shape_words.at(shape), rng));
  };
  object_phrase();

  const bool congruent = std::find(rules.congruent.begin(), rules.congruent.end(),
                                   std::make_pair(action, obj_vel)) != rules.congruent.end();
  s.push_back(congruent ? "and" : "but");
  object_phrase();

  for (const auto& r : rules.effect_phrases) {
    if (detail::rule_matches(r.action, action) && detail::rule_matches(r.shape, shape) &&
        detail::rule_matches(r.obj_vel, obj_vel)) {
      for (auto& w : to_sentence(detail::sample_weighted(r.phrases, rng))) s.push_back(std::move(w));
      return s;
    }
  }
  fail(ErrorKind::invalid_argument, "no effect phrase rule for " + action + "/" + shape + "/" + obj_vel);
}

inline std::vector<std::uint8_t> word_bag(const WorldSchema& schema, const Sentence& s) {
  std::vector<std::uint8_t> bag;
  for (auto w : word_variables(schema))
    bag.push_back(std::find(s.begin(), s.end(), schema.var(w).name) != s.end() ? 1 : 0);
  return bag;
}

// Piecewise-linear hand path for `action`, resampled to a random length,
// with waypoint/timing jitter, a random amplitude, Gaussian noise and a
// random torso position; returned after preprocessing.
inline Trajectory sample_trajectory(const std::string& action, const TrajectoryParams& params,
                                    std::uint64_t seed) {
  auto it = params.templates.find(action);
  if (it == params.templates.end()) fail(ErrorKind::invalid_argument, "unknown action '" + action + "'");
  const auto& tpl = it->second;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const auto len = std::uniform_int_distribution<std::size_t>(params.t_min, params.t_max)(rng);

  auto points = tpl.waypoints;
  for (auto& p : points)
    for (auto& x : p) x += params.waypoint_jitter * gauss(rng);
  // Repeated template waypoints are dwells and must stay repeated.
  for (std::size_t i = 1; i < points.size(); ++i)
    if (tpl.waypoints[i] == tpl.waypoints[i - 1]) points[i] = points[i - 1];

  std::vector<double> knots{0.0};
  for (double w : tpl.segment_weights)
    knots.push_back(knots.back() + w * (1.0 + uniform(-params.timing_jitter, params.timing_jitter)));
  for (auto& k : knots) k /= knots.back();

  const double amplitude = uniform(params.amplitude_min, params.amplitude_max);
  const Frame torso{0.3 * gauss(rng), 2.0 + 0.2 * gauss(rng), 0.9 + 0.1 * gauss(rng)};

  Trajectory raw;
  raw.frame_period = params.frame_period;
  std::vector<Frame> torso_track;
  for (std::size_t t = 0; t < len; ++t) {
    const double u = len == 1 ? 0.0 : double(t) / double(len - 1);
    std::size_t seg = 0;
    while (seg + 2 < knots.size() && u > knots[seg + 1]) ++seg;
    const double span = knots[seg + 1] - knots[seg];
    const double a = span > 0.0 ? std::clamp((u - knots[seg]) / span, 0.0, 1.0) : 1.0;
    Frame f;
    for (std::size_t d = 0; d < feature_dim; ++d) {
      const double path = points[seg][d] + a * (points[seg + 1][d] - points[seg][d]);
      f[d] = torso[d] + amplitude * (path + params.noise_std * gauss(rng));
    }
    raw.frames.push_back(f);
    torso_track.push_back(torso);
  }
  return preprocess(raw, torso_track);
}

// Samples one trial: Action and features uniformly, effects from the
// configured tables, then a matching description.
inline Trial sample_trial(const WorldConfig& config, const WorldSchema& schema,
                          const Grammar& grammar, std::uint64_t seed,
                          bool with_trajectory = false) {
  std::mt19937_64 rng(seed);
  Trial trial;
  trial.affordances.assign(affordance_variable_count, 0);
  for (const char* var : {names::action, names::color, names::size, names::shape}) {
    const auto v = schema.index_of(var);
    trial.affordances[v] =
        std::uniform_int_distribution<std::size_t>(0, schema.arity(v) - 1)(rng);
  }
  for (const auto& e : config.effects) {
    std::size_t cfg = 0;
    for (const auto& p : e.parents) {
      const auto pv = schema.index_of(p);
      cfg = cfg * schema.arity(pv) + trial.affordances[pv];
    }
    trial.affordances[schema.index_of(e.variable)] =
        detail::sample_index(std::span<const double>(e.rows.at(cfg)), rng);
  }
  trial.description = sample_description(trial.affordances, schema, grammar, config.description, rng);
  trial.words = word_bag(schema, trial.description);
  if (with_trajectory) {
    const auto a = schema.index_of(names::action);
    trial.trajectory = sample_trajectory(schema.var(a).labels[trial.affordances[a]],
                                         config.trajectory, mix_seed(seed, 1));
  }
  return trial;
}

// Trial i is drawn from mix_seed(seed, i); the first `with_trajectories`
// trials also get a hand trajectory.
inline std::vector<Trial> sample_trials(const WorldConfig& config, const WorldSchema& schema,
                                        const Grammar& grammar, std::size_t count,
                                        std::uint64_t seed, std::size_t with_trajectories = 0) {
  validate_world_config(config, schema, grammar);
  std::vector<Trial> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(sample_trial(config, schema, grammar, mix_seed(seed, i), i < with_trajectories));
  return out;
}

inline Dataset to_dataset(const std::vector<Trial>& trials, std::string provenance) {
  Dataset d;
  d.provenance = std::move(provenance);
  for (const auto& t : trials) d.rows.push_back(t.row());
  return d;
}

// `count` trajectories of one action, for gesture model training and tests.
inline std::vector<Trajectory> sample_trajectories(const std::string& action,
                                                   const TrajectoryParams& params, std::size_t count,
                                                   std::uint64_t seed) {
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_trajectory(action, params, mix_seed(seed, i)));
  return out;
}

}  // namespace affwords
