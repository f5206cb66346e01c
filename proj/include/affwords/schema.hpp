#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "affwords/common.hpp"

namespace affwords {

struct Variable {
  std::string name;
  std::vector<std::string> labels;

  std::size_t arity() const { return labels.size(); }

  std::optional<std::size_t> label_index(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return i;
    return std::nullopt;
  }
};

// Ordered list of discrete variables. Indices into this list are the
// variable ids used everywhere else.
class WorldSchema {
 public:
  WorldSchema() = default;

  explicit WorldSchema(std::vector<Variable> vars) : vars_(std::move(vars)) {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const auto& v = vars_[i];
      if (v.name.empty())
        fail(ErrorKind::invalid_argument, "variable with empty name");
      if (v.arity() < 2)
        fail(ErrorKind::invalid_argument,
             "variable '" + v.name + "' needs at least two values");
      std::unordered_set<std::string> seen(v.labels.begin(), v.labels.end());
      if (seen.size() != v.labels.size())
        fail(ErrorKind::invalid_argument,
             "variable '" + v.name + "' has duplicate value labels");
      if (!index_.emplace(v.name, i).second)
        fail(ErrorKind::invalid_argument,
             "duplicate variable name '" + v.name + "'");
    }
  }

  std::size_t size() const { return vars_.size(); }
  const Variable& var(std::size_t i) const { return vars_.at(i); }
  const std::vector<Variable>& variables() const { return vars_; }
  std::size_t arity(std::size_t i) const { return vars_.at(i).arity(); }

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& name) const {
    auto i = find(name);
    if (!i) fail(ErrorKind::invalid_argument, "unknown variable '" + name + "'");
    return *i;
  }

  std::size_t value_of(std::size_t var, const std::string& label) const {
    auto v = vars_.at(var).label_index(label);
    if (!v)
      fail(ErrorKind::invalid_argument, "unknown value '" + label +
                                            "' for variable '" +
                                            vars_[var].name + "'");
    return *v;
  }

  bool operator==(const WorldSchema& other) const {
    if (vars_.size() != other.vars_.size()) return false;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].name != other.vars_[i].name ||
          vars_[i].labels != other.vars_[i].labels)
        return false;
    return true;
  }

 private:
  std::vector<Variable> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Hard evidence: variable index -> value index.
using Evidence = std::map<std::size_t, std::size_t>;

inline void validate_evidence(const WorldSchema& schema, const Evidence& ev) {
  for (auto [var, value] : ev) {
    if (var >= schema.size())
      fail(ErrorKind::invalid_argument, "evidence on unknown variable index");
    if (value >= schema.arity(var))
      fail(ErrorKind::invalid_argument,
           "evidence value out of range for '" + schema.var(var).name + "'");
  }
}

// Parses "Var=value" items (separated by commas or given as a list).
inline Evidence parse_evidence(const WorldSchema& schema,
                               const std::vector<std::string>& items) {
  Evidence ev;
  for (const auto& raw : items) {
    for (const auto& piece : split(raw, ',')) {
      const auto item = trim(piece);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
        fail(ErrorKind::invalid_argument,
             "malformed evidence item '" + item + "' (expected Var=value)");
      const auto var = schema.index_of(trim(item.substr(0, eq)));
      const auto value = schema.value_of(var, trim(item.substr(eq + 1)));
      if (!ev.emplace(var, value).second)
        fail(ErrorKind::invalid_argument,
             "variable '" + schema.var(var).name + "' given twice");
    }
  }
  return ev;
}

inline Evidence parse_evidence(const WorldSchema& schema,
                               const std::string& spec) {
  return parse_evidence(schema, std::vector<std::string>{spec});
}

inline std::string format_evidence(const WorldSchema& schema,
                                   const Evidence& ev) {
  std::vector<std::string> parts;
  for (auto [var, value] : ev)
    parts.push_back(schema.var(var).name + "=" +
                    schema.var(var).labels.at(value));
  return join(parts, ",");
}

namespace names {
inline constexpr const char* action = "Action";
inline constexpr const char* color = "Color";
inline constexpr const char* size = "Size";
inline constexpr const char* shape = "Shape";
inline constexpr const char* obj_vel = "ObjVel";
inline constexpr const char* hand_vel = "HandVel";
inline constexpr const char* obj_hand_vel = "ObjHandVel";
inline constexpr const char* contact = "Contact";
}  // namespace names

// The 49 description words in the order they first occur in the shipped
// grammar.
inline const std::vector<std::string>& default_vocabulary() {
  static const std::vector<std::string> words = {
      "the",      "robot",   "he",      "baltazar", "touches",  "has",
      "just",     "touched", "is",      "touching", "pokes",    "poked",
      "poking",   "taps",    "tapped",  "tapping",  "pushes",   "pushed",
      "pushing",  "grasps",  "grasped", "grasping", "picks",    "picked",
      "picking",  "big",     "small",   "green",    "yellow",   "blue",
      "sphere",   "ball",    "cube",    "box",      "square",   "and",
      "but",      "inert",   "still",   "moves",    "moving",   "slides",
      "sliding",  "rolls",   "rolling", "rises",    "rising",   "falls",
      "falling"};
  return words;
}

inline constexpr std::size_t word_false = 0;
inline constexpr std::size_t word_true = 1;

// Affordance variables (action, object features, effects) followed by one
// boolean variable per word, named after the word itself.
inline WorldSchema affordance_schema(
    const std::vector<std::string>& words = default_vocabulary()) {
  std::vector<Variable> vars = {
      {names::action, {"grasp", "tap", "touch"}},
      {names::color, {"blue", "yellow", "green1", "green2"}},
      {names::size, {"small", "medium", "big"}},
      {names::shape, {"sphere", "box"}},
      {names::obj_vel, {"slow", "medium", "fast"}},
      {names::hand_vel, {"slow", "fast"}},
      {names::obj_hand_vel, {"slow", "medium", "fast"}},
      {names::contact, {"short", "long"}},
  };
  for (const auto& w : words) vars.push_back({w, {"false", "true"}});
  return WorldSchema(std::move(vars));
}

inline constexpr std::size_t affordance_variable_count = 8;

enum class VariableRole { action, feature, effect, word };

inline VariableRole role_of(const WorldSchema& schema, std::size_t var) {
  const auto& n = schema.var(var).name;
  if (n == names::action) return VariableRole::action;
  if (n == names::color || n == names::size || n == names::shape)
    return VariableRole::feature;
  if (n == names::obj_vel || n == names::hand_vel || n == names::obj_hand_vel ||
      n == names::contact)
    return VariableRole::effect;
  return VariableRole::word;
}

inline std::vector<std::size_t> word_variables(const WorldSchema& schema) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (role_of(schema, i) == VariableRole::word) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

using Assignment = std::vector<std::size_t>;

struct Dataset {
  std::vector<Assignment> rows;
  std::string provenance;
};

inline void validate_dataset(const WorldSchema& schema, const Dataset& data) {
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    if (row.size() != schema.size())
      fail(ErrorKind::invalid_argument,
           "dataset row " + std::to_string(r) + " is incomplete");
    for (std::size_t v = 0; v < row.size(); ++v)
      if (row[v] >= schema.arity(v))
        fail(ErrorKind::invalid_argument,
             "dataset row " + std::to_string(r) + " has invalid value for '" +
                 schema.var(v).name + "'");
  }
}

inline constexpr const char* dataset_magic = "# affwords-dataset v1";

// One record per line: space separated Var=label fields.
inline void write_dataset(std::ostream& os, const WorldSchema& schema,
                          const Dataset& data) {
  os << dataset_magic << " provenance=" << data.provenance << "\n";
  for (const auto& row : data.rows) {
    for (std::size_t v = 0; v < row.size(); ++v) {
      if (v) os << ' ';
      os << schema.var(v).name << '=' << schema.var(v).labels[row[v]];
    }
    os << '\n';
  }
}

inline Dataset read_dataset(std::istream& is, const WorldSchema& schema) {
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (line.rfind("#", 0) == 0) {
      if (line.rfind(dataset_magic, 0) == 0) {
        header = true;
        const auto p = line.find("provenance=");
        if (p != std::string::npos) data.provenance = trim(line.substr(p + 11));
      }
      continue;
    }
    if (!header)
      fail(ErrorKind::parse, "dataset: missing '" + std::string(dataset_magic) +
                                 "' header");
    Assignment row(schema.size(), schema.size() == 0 ? 0 : SIZE_MAX);
    std::istringstream fields(line);
    std::string field;
    while (fields >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::parse,
             "dataset line " + std::to_string(lineno) + ": bad field '" +
                 field + "'");
      const auto var = schema.find(field.substr(0, eq));
      if (!var)
        fail(ErrorKind::mismatch, "dataset line " + std::to_string(lineno) +
                                      ": unknown variable '" +
                                      field.substr(0, eq) + "'");
      const auto value = schema.var(*var).label_index(field.substr(eq + 1));
      if (!value)
        fail(ErrorKind::parse, "dataset line " + std::to_string(lineno) +
                                   ": unknown value in '" + field + "'");
      row[*var] = *value;
    }
    for (std::size_t v = 0; v < row.size(); ++v)
      if (row[v] == SIZE_MAX)
        fail(ErrorKind::parse, "dataset line " + std::to_string(lineno) +
                                   ": missing variable '" + schema.var(v).name +
                                   "'");
    data.rows.push_back(std::move(row));
  }
  if (!header) fail(ErrorKind::parse, "dataset: empty or missing header");
  return data;
}

}  // namespace affwords
