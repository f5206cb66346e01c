#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "affwords/bayes_net.hpp"
#include "affwords/common.hpp"
#include "affwords/gesture_hmm.hpp"
#include "affwords/schema.hpp"
#include "affwords/synthworld.hpp"

namespace affwords {

using json = nlohmann::ordered_json;

inline constexpr int model_format_version = 1;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, what + ": " + e.what());
  }
}

inline void check_header(const json& j, const std::string& format) {
  if (!j.is_object() || j.value("format", "") != format)
    fail(ErrorKind::parse, "expected a '" + format + "' document");
  if (j.value("version", 0) != model_format_version)
    fail(ErrorKind::parse, "unsupported " + format + " version " + j.value("version", json()).dump());
}

// ---------------------------------------------------------------------------
// Bayesian network

inline json schema_to_json(const WorldSchema& schema) {
  json vars = json::array();
  for (const auto& v : schema.variables()) vars.push_back({{"name", v.name}, {"values", v.labels}});
  return vars;
}

inline WorldSchema schema_from_json(const json& j) {
  std::vector<Variable> vars;
  for (const auto& v : j) vars.push_back({v.at("name").get<std::string>(), v.at("values").get<std::vector<std::string>>()});
  return WorldSchema(std::move(vars));
}

// Doubles are written in shortest round-trip form, so reading a model back
// reproduces every CPT entry bit for bit.
inline json bayes_net_to_json(const BayesNet& net) {
  const auto& schema = net.schema();
  json vars = json::array();
  for (std::size_t v = 0; v < schema.size(); ++v) {
    json parents = json::array();
    for (auto p : net.parents(v)) parents.push_back(schema.var(p).name);
    json rows = json::array();
    for (std::size_t c = 0; c < net.parent_configs(v); ++c) {
      const auto r = net.row(v, c);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    vars.push_back({{"name", schema.var(v).name},
                    {"values", schema.var(v).labels},
                    {"parents", parents},
                    {"cpt", rows}});
  }
  return {{"format", "affwords.bayesnet"}, {"version", model_format_version}, {"variables", vars}};
}

inline BayesNet bayes_net_from_json(const json& j) {
  check_header(j, "affwords.bayesnet");
  try {
    const auto& vars = j.at("variables");
    const auto schema = schema_from_json(vars);
    ParentLists parents(schema.size());
    for (std::size_t v = 0; v < schema.size(); ++v)
      for (const auto& p : vars[v].at("parents")) parents[v].push_back(schema.index_of(p.get<std::string>()));
    auto net = BayesNet::build(schema, parents);
    for (std::size_t v = 0; v < schema.size(); ++v) {
      const auto& rows = vars[v].at("cpt");
      if (rows.size() != net.parent_configs(v))
        fail(ErrorKind::parse, "CPT of '" + schema.var(v).name + "' has the wrong number of rows");
      std::vector<double> table;
      for (const auto& r : rows)
        for (const auto& x : r) table.push_back(x.get<double>());
      net.set_cpt(v, std::move(table));
    }
    return net;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed bayesnet document: ") + e.what());
  }
}

inline void save_bayes_net(const std::filesystem::path& path, const BayesNet& net) {
  write_text_file(path, bayes_net_to_json(net).dump(1) + "\n");
}

inline BayesNet load_bayes_net(const std::filesystem::path& path) {
  return bayes_net_from_json(parse_json(read_text_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Gesture bank

inline json frame_json(const Frame& f) { return json::array({f[0], f[1], f[2]}); }

inline Frame frame_from_json(const json& j) {
  if (!j.is_array() || j.size() != feature_dim) fail(ErrorKind::parse, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json gesture_bank_to_json(const GestureBank& bank) {
  json models = json::array();
  for (const auto& m : bank.models) {
    json trans = json::array();
    for (std::size_t i = 0; i < m.states; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < m.states; ++j) row.push_back(std::exp(m.log_transition(i, j)));
      trans.push_back(row);
    }
    json emissions = json::array();
    for (const auto& g : m.emissions) {
      json comps = json::array();
      for (std::size_t c = 0; c < g.components(); ++c)
        comps.push_back({{"weight", g.weights[c]},
                         {"mean", frame_json(g.means[c])},
                         {"variance", frame_json(g.variances[c])}});
      emissions.push_back(comps);
    }
    models.push_back({{"action", m.action_label},
                      {"states", m.states},
                      {"transitions", trans},
                      {"emissions", emissions}});
  }
  return {{"format", "affwords.gesturebank"}, {"version", model_format_version}, {"models", models}};
}

inline GestureBank gesture_bank_from_json(const json& j) {
  check_header(j, "affwords.gesturebank");
  GestureBank bank;
  try {
    for (const auto& mj : j.at("models")) {
      HmmModel m;
      m.action_label = mj.at("action").get<std::string>();
      m.states = mj.at("states").get<std::size_t>();
      const auto& trans = mj.at("transitions");
      if (trans.size() != m.states) fail(ErrorKind::parse, "transition matrix has the wrong size");
      for (const auto& row : trans) {
        if (row.size() != m.states) fail(ErrorKind::parse, "transition matrix has the wrong size");
        for (const auto& p : row) {
          const double x = p.get<double>();
          m.log_transitions.push_back(x > 0.0 ? std::log(x) : neg_inf);
        }
      }
      for (const auto& comps : mj.at("emissions")) {
        GaussianMixture g;
        for (const auto& c : comps) {
          g.weights.push_back(c.at("weight").get<double>());
          g.means.push_back(frame_from_json(c.at("mean")));
          g.variances.push_back(frame_from_json(c.at("variance")));
        }
        m.emissions.push_back(std::move(g));
      }
      m.validate();
      bank.models.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed gesture bank document: ") + e.what());
  }
  return bank;
}

inline void save_gesture_bank(const std::filesystem::path& path, const GestureBank& bank) {
  write_text_file(path, gesture_bank_to_json(bank).dump(1) + "\n");
}

inline GestureBank load_gesture_bank(const std::filesystem::path& path) {
  return gesture_bank_from_json(parse_json(read_text_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header "t,x,y,z", then one frame per line.

inline std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "t,x,y,z\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& f = traj.frames[i];
    out += format_double(double(i) * traj.frame_period, 17) + "," + format_double(f[0], 17) + "," +
           format_double(f[1], 17) + "," + format_double(f[2], 17) + "\n";
  }
  return out;
}

inline Trajectory trajectory_from_csv(const std::string& text, const std::string& origin = "trajectory") {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  Trajectory traj;
  std::vector<double> times;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      header = true;
      if (t != "t,x,y,z") fail(ErrorKind::parse, origin + ": expected header 't,x,y,z'");
      continue;
    }
    const auto cells = split(t, ',');
    if (cells.size() != 4)
      fail(ErrorKind::parse, origin + " line " + std::to_string(lineno) + ": expected 4 fields");
    double vals[4];
    for (std::size_t i = 0; i < 4; ++i) {
      try {
        std::size_t used = 0;
        vals[i] = std::stod(cells[i], &used);
        if (!trim(cells[i].substr(used)).empty()) throw std::invalid_argument("trailing");
        if (!std::isfinite(vals[i])) throw std::invalid_argument("non-finite");
      } catch (const std::exception&) {
        fail(ErrorKind::parse, origin + " line " + std::to_string(lineno) + ": bad number '" + cells[i] + "'");
      }
    }
    times.push_back(vals[0]);
    traj.frames.push_back({vals[1], vals[2], vals[3]});
  }
  if (traj.empty()) fail(ErrorKind::parse, origin + ": no frames");
  if (times.size() > 1) traj.frame_period = (times.back() - times.front()) / double(times.size() - 1);
  return traj;
}

inline Trajectory load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_csv(read_text_file(path), path.string());
}

// ---------------------------------------------------------------------------
// World configuration

inline json weighted_json(const WeightedWords& w) {
  json out = json::array();
  for (const auto& [s, weight] : w) out.push_back({{"text", s}, {"weight", weight}});
  return out;
}

inline WeightedWords weighted_from_json(const json& j) {
  WeightedWords out;
  for (const auto& e : j) out.emplace_back(e.at("text").get<std::string>(), e.at("weight").get<double>());
  return out;
}

inline json world_config_to_json(const WorldConfig& c) {
  json effects = json::array();
  for (const auto& e : c.effects)
    effects.push_back({{"variable", e.variable}, {"parents", e.parents}, {"rows", e.rows}});
  const auto& d = c.description;
  json shapes = json::object();
  for (const auto& [k, v] : d.shape_words) shapes[k] = weighted_json(v);
  json congruent = json::array();
  for (const auto& [a, o] : d.congruent) congruent.push_back({a, o});
  json phrases = json::array();
  for (const auto& r : d.effect_phrases)
    phrases.push_back({{"action", r.action}, {"shape", r.shape}, {"obj_vel", r.obj_vel},
                       {"phrases", weighted_json(r.phrases)}});
  json templates = json::object();
  for (const auto& [a, t] : c.trajectory.templates) {
    json wps = json::array();
    for (const auto& f : t.waypoints) wps.push_back(frame_json(f));
    templates[a] = {{"waypoints", wps}, {"segment_weights", t.segment_weights}};
  }
  const auto& t = c.trajectory;
  return {{"effects", effects},
          {"description",
           {{"verb_families", d.verb_families},
            {"shape_words", shapes},
            {"color_words", d.color_words},
            {"size_words", d.size_words},
            {"p_size_word", d.p_size_word},
            {"p_color_word", d.p_color_word},
            {"congruent", congruent},
            {"effect_phrases", phrases}}},
          {"trajectory",
           {{"templates", templates},
            {"noise_std", t.noise_std},
            {"t_min", t.t_min},
            {"t_max", t.t_max},
            {"waypoint_jitter", t.waypoint_jitter},
            {"timing_jitter", t.timing_jitter},
            {"amplitude_min", t.amplitude_min},
            {"amplitude_max", t.amplitude_max},
            {"frame_period", t.frame_period}}}};
}

// Keys missing from `j` keep their default values.
inline WorldConfig world_config_from_json(const json& j) {
  WorldConfig c = default_world_config();
  try {
    if (j.contains("effects")) {
      c.effects.clear();
      for (const auto& e : j.at("effects"))
        c.effects.push_back({e.at("variable").get<std::string>(),
                             e.at("parents").get<std::vector<std::string>>(),
                             e.at("rows").get<std::vector<std::vector<double>>>()});
    }
    if (j.contains("description")) {
      const auto& dj = j.at("description");
      auto& d = c.description;
      if (dj.contains("verb_families"))
        d.verb_families = dj.at("verb_families").get<std::map<std::string, std::vector<std::string>>>();
      if (dj.contains("shape_words")) {
        d.shape_words.clear();
        for (const auto& [k, v] : dj.at("shape_words").items()) d.shape_words[k] = weighted_from_json(v);
      }
      if (dj.contains("color_words")) d.color_words = dj.at("color_words").get<std::map<std::string, std::string>>();
      if (dj.contains("size_words")) d.size_words = dj.at("size_words").get<std::map<std::string, std::string>>();
      d.p_size_word = dj.value("p_size_word", d.p_size_word);
      d.p_color_word = dj.value("p_color_word", d.p_color_word);
      if (dj.contains("congruent")) {
        d.congruent.clear();
        for (const auto& p : dj.at("congruent"))
          d.congruent.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
      }
      if (dj.contains("effect_phrases")) {
        d.effect_phrases.clear();
        for (const auto& r : dj.at("effect_phrases"))
          d.effect_phrases.push_back({r.value("action", "*"), r.value("shape", "*"), r.value("obj_vel", "*"),
                                      weighted_from_json(r.at("phrases"))});
      }
    }
    if (j.contains("trajectory")) {
      const auto& tj = j.at("trajectory");
      auto& t = c.trajectory;
      if (tj.contains("templates")) {
        t.templates.clear();
        for (const auto& [a, v] : tj.at("templates").items()) {
          TrajectoryTemplate tpl;
          for (const auto& f : v.at("waypoints")) tpl.waypoints.push_back(frame_from_json(f));
          tpl.segment_weights = v.at("segment_weights").get<std::vector<double>>();
          t.templates[a] = std::move(tpl);
        }
      }
      t.noise_std = tj.value("noise_std", t.noise_std);
      t.t_min = tj.value("t_min", t.t_min);
      t.t_max = tj.value("t_max", t.t_max);
      t.waypoint_jitter = tj.value("waypoint_jitter", t.waypoint_jitter);
      t.timing_jitter = tj.value("timing_jitter", t.timing_jitter);
      t.amplitude_min = tj.value("amplitude_min", t.amplitude_min);
      t.amplitude_max = tj.value("amplitude_max", t.amplitude_max);
      t.frame_period = tj.value("frame_period", t.frame_period);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed world config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) fail(ErrorKind::invalid_argument, "CSV row width mismatch");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(cells[i]);
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace affwords
