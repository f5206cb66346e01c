#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "affwords/common.hpp"

namespace affwords {

// Grammar used to render word probabilities as descriptions.
inline constexpr std::string_view default_grammar_text =
    R"(<sentence> ::= <agent> <action> <object> <conjunction> <object> <effect>
<agent> ::= the robot | he | baltazar
<action> ::= <touch> | <poke> | <tap> | <push> | <grasp> | <pick>
<touch> ::= touches | [has] [just] touched | is touching
<poke> ::= pokes | [has] [just] poked | is poking
<tap> ::= taps | [has] [just] tapped | is tapping
<push> ::= pushes | [has] [just] pushed | is pushing
<grasp> ::= grasps | [has] [just] grasped | is grasping
<pick> ::= picks | [has] [just] picked | is picking
<object> ::= the [<size>] [<color>] <shape>
<size> ::= big | small
<color> ::= green | yellow | blue
<shape> ::= sphere | ball | cube | box | square
<conjunction> ::= and | but
<effect> ::= <inertmove> | <slideroll> | <fallrise>
<inertmove> ::= is inert | is still | moves | is moving
<slideroll> ::= slides | is sliding | rolls | is rolling
<fallrise> ::= rises | is rising | falls | is falling
)";

struct GrammarItem {
  enum class Kind { terminal, nonterminal, optional };
  Kind kind = Kind::terminal;
  std::string symbol;              // word or nonterminal name (without <>)
  std::vector<GrammarItem> group;  // contents of an optional group
};

using Alternative = std::vector<GrammarItem>;
using Sentence = std::vector<std::string>;

struct Grammar {
  std::string start;
  std::map<std::string, std::vector<Alternative>> rules;
  std::vector<std::string> rule_order;
  std::vector<std::string> vocabulary;  // in order of first occurrence

  const std::vector<Alternative>& alternatives(const std::string& nt) const {
    auto it = rules.find(nt);
    if (it == rules.end()) fail(ErrorKind::invalid_argument, "undefined nonterminal <" + nt + ">");
    return it->second;
  }

  bool in_vocabulary(const std::string& w) const {
    return std::find(vocabulary.begin(), vocabulary.end(), w) != vocabulary.end();
  }
};

inline std::string to_text(const Sentence& s) { return join(s, " "); }

inline Sentence to_sentence(const std::string& text) {
  Sentence out;
  std::istringstream is(text);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

namespace detail {

class GrammarParser {
 public:
  GrammarParser(const std::string& line, std::size_t lineno) : line_(line), lineno_(lineno) {}

  // Parses "<lhs> ::= alt | alt ...".
  std::pair<std::string, std::vector<Alternative>> rule() {
    skip_space();
    auto lhs = nonterminal();
    skip_space();
    if (line_.compare(pos_, 3, "::=") != 0) error("expected '::='");
    pos_ += 3;
    auto alts = alternatives();
    skip_space();
    if (pos_ != line_.size()) error("unexpected '" + std::string(1, line_[pos_]) + "'");
    return {lhs, alts};
  }

  std::vector<Alternative> alternatives() {
    std::vector<Alternative> alts{sequence(false)};
    skip_space();
    while (pos_ < line_.size() && line_[pos_] == '|') {
      ++pos_;
      alts.push_back(sequence(false));
      skip_space();
    }
    return alts;
  }

 private:
  Alternative sequence(bool in_group) {
    Alternative items;
    for (;;) {
      skip_space();
      if (pos_ >= line_.size()) break;
      const char c = line_[pos_];
      if (c == '|') {
        if (in_group) error("'|' inside an optional group is not supported");
        break;
      }
      if (c == ']') {
        if (!in_group) error("unmatched ']'");
        break;
      }
      if (c == '[') {
        ++pos_;
        GrammarItem opt{GrammarItem::Kind::optional, {}, sequence(true)};
        skip_space();
        if (pos_ >= line_.size() || line_[pos_] != ']') error("missing ']'");
        ++pos_;
        if (opt.group.empty()) error("empty optional group");
        items.push_back(std::move(opt));
      } else if (c == '<') {
        items.push_back({GrammarItem::Kind::nonterminal, nonterminal(), {}});
      } else {
        std::size_t end = pos_;
        while (end < line_.size() && !std::isspace(static_cast<unsigned char>(line_[end])) &&
               line_[end] != '[' && line_[end] != ']' && line_[end] != '|' && line_[end] != '<')
          ++end;
        const auto word = line_.substr(pos_, end - pos_);
        if (word.find_first_of(">:=") != std::string::npos)
          error("unexpected token '" + word + "'");
        items.push_back({GrammarItem::Kind::terminal, word, {}});
        pos_ = end;
      }
    }
    if (items.empty()) error("empty alternative");
    return items;
  }

  std::string nonterminal() {
    if (pos_ >= line_.size() || line_[pos_] != '<') error("expected '<nonterminal>'");
    const auto close = line_.find('>', pos_);
    if (close == std::string::npos) error("missing '>'");
    auto name = line_.substr(pos_ + 1, close - pos_ - 1);
    if (name.empty() || name.find_first_of(" \t<") != std::string::npos)
      error("malformed nonterminal name");
    pos_ = close + 1;
    return name;
  }

  void skip_space() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::parse, "grammar line " + std::to_string(lineno_) + ": " + what);
  }

  std::string line_;
  std::size_t lineno_;
  std::size_t pos_ = 0;
};

inline void collect(const std::vector<GrammarItem>& items, std::vector<std::string>& words,
                    std::vector<std::string>& refs) {
  for (const auto& it : items) {
    switch (it.kind) {
      case GrammarItem::Kind::terminal:
        if (std::find(words.begin(), words.end(), it.symbol) == words.end())
          words.push_back(it.symbol);
        break;
      case GrammarItem::Kind::nonterminal: refs.push_back(it.symbol); break;
      case GrammarItem::Kind::optional: collect(it.group, words, refs); break;
    }
  }
}

}  // namespace detail

// Reads BNF-style rules, one per line: `<nt> ::= a b | [opt] <other>`.
// A line starting with '|' continues the previous rule; '#' starts a
// comment line. The first rule's left-hand side is the start symbol.
inline Grammar load_grammar(std::string_view text) {
  Grammar g;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> defined_at;
  std::string last;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '|') {
      if (last.empty())
        fail(ErrorKind::parse, "grammar line " + std::to_string(lineno) +
                                   ": continuation without a rule");
      detail::GrammarParser p(t.substr(1), lineno);
      for (auto& alt : p.alternatives()) g.rules[last].push_back(std::move(alt));
      continue;
    }
    detail::GrammarParser p(t, lineno);
    auto [lhs, alts] = p.rule();
    if (defined_at.count(lhs))
      fail(ErrorKind::parse, "grammar line " + std::to_string(lineno) + ": <" + lhs +
                                 "> already defined on line " +
                                 std::to_string(defined_at[lhs]));
    defined_at[lhs] = lineno;
    if (g.start.empty()) g.start = lhs;
    g.rule_order.push_back(lhs);
    g.rules[lhs] = std::move(alts);
    last = lhs;
  }
  if (g.start.empty()) fail(ErrorKind::parse, "grammar has no rules");

  std::map<std::string, std::vector<std::string>> edges;
  for (const auto& nt : g.rule_order) {
    std::vector<std::string> refs;
    for (const auto& alt : g.rules[nt]) detail::collect(alt, g.vocabulary, refs);
    for (const auto& r : refs)
      if (!g.rules.count(r))
        fail(ErrorKind::parse, "undefined nonterminal <" + r + "> referenced by <" + nt +
                                   "> (line " + std::to_string(defined_at[nt]) + ")");
    edges[nt] = refs;
  }

  // The language must be finite: no nonterminal may reach itself.
  std::map<std::string, int> state;
  std::vector<std::string> path;
  auto visit = [&](auto&& self, const std::string& nt) -> void {
    state[nt] = 1;
    path.push_back(nt);
    for (const auto& r : edges[nt]) {
      if (state[r] == 1)
        fail(ErrorKind::parse, "recursive rule through <" + r + "> is not supported");
      if (state[r] == 0) self(self, r);
    }
    path.pop_back();
    state[nt] = 2;
  };
  for (const auto& nt : g.rule_order)
    if (state[nt] == 0) visit(visit, nt);
  return g;
}

inline const Grammar& default_grammar() {
  static const Grammar g = load_grammar(default_grammar_text);
  return g;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

template <class Rng>
void expand_items(const Grammar& g, const std::vector<GrammarItem>& items, Rng& rng,
                  Sentence& out);

template <class Rng>
void expand_symbol(const Grammar& g, const std::string& nt, Rng& rng, Sentence& out) {
  const auto& alts = g.alternatives(nt);
  std::uniform_int_distribution<std::size_t> pick(0, alts.size() - 1);
  expand_items(g, alts[pick(rng)], rng, out);
}

template <class Rng>
void expand_items(const Grammar& g, const std::vector<GrammarItem>& items, Rng& rng,
                  Sentence& out) {
  for (const auto& it : items) {
    switch (it.kind) {
      case GrammarItem::Kind::terminal: out.push_back(it.symbol); break;
      case GrammarItem::Kind::nonterminal: expand_symbol(g, it.symbol, rng, out); break;
      case GrammarItem::Kind::optional:
        if (std::bernoulli_distribution(0.5)(rng)) expand_items(g, it.group, rng, out);
        break;
    }
  }
}

}  // namespace detail

// Top-down random expansion of one nonterminal: alternatives are chosen
// uniformly and each optional group is kept with probability 1/2.
template <class Rng>
Sentence expand(const Grammar& g, const std::string& nonterminal, Rng& rng) {
  Sentence out;
  detail::expand_symbol(g, nonterminal, rng, out);
  return out;
}

inline std::vector<Sentence> generate_sentences(const Grammar& g, std::size_t n,
                                                std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::invalid_argument, "N must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(expand(g, g.start, rng));
  return out;
}

// ---------------------------------------------------------------------------
// Membership

class Recognizer {
 public:
  Recognizer(const Grammar& g, const Sentence& s) : g_(g), s_(s) {}

  bool accepts() {
    if (s_.empty()) return false;
    const auto ends = symbol_ends(g_.start, 0);
    return ends.count(s_.size()) > 0;
  }

 private:
  std::set<std::size_t> symbol_ends(const std::string& nt, std::size_t pos) {
    const auto key = std::make_pair(nt, pos);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::set<std::size_t> out;
    for (const auto& alt : g_.alternatives(nt)) {
      auto e = sequence_ends(alt, 0, pos);
      out.insert(e.begin(), e.end());
    }
    memo_[key] = out;
    return out;
  }

  std::set<std::size_t> sequence_ends(const std::vector<GrammarItem>& items, std::size_t idx,
                                      std::size_t pos) {
    if (idx == items.size()) return {pos};
    std::set<std::size_t> out;
    for (auto mid : item_ends(items[idx], pos)) {
      auto e = sequence_ends(items, idx + 1, mid);
      out.insert(e.begin(), e.end());
    }
    return out;
  }

  std::set<std::size_t> item_ends(const GrammarItem& it, std::size_t pos) {
    switch (it.kind) {
      case GrammarItem::Kind::terminal:
        if (pos < s_.size() && s_[pos] == it.symbol) return {pos + 1};
        return {};
      case GrammarItem::Kind::nonterminal: return symbol_ends(it.symbol, pos);
      case GrammarItem::Kind::optional: {
        auto out = sequence_ends(it.group, 0, pos);
        out.insert(pos);
        return out;
      }
    }
    return {};
  }

  const Grammar& g_;
  const Sentence& s_;
  std::map<std::pair<std::string, std::size_t>, std::set<std::size_t>> memo_;
};

inline bool derivable(const Grammar& g, const Sentence& s) { return Recognizer(g, s).accepts(); }

inline bool derivable(const Grammar& g, const std::string& text) {
  return derivable(g, to_sentence(text));
}

// Every string of a (small) grammar's language, sorted. Throws when the
// language has more than `limit` strings.
inline std::vector<Sentence> enumerate_language(const Grammar& g, std::size_t limit = 100000) {
  auto check = [&](std::size_t n) {
    if (n > limit) fail(ErrorKind::invalid_argument, "language larger than enumeration limit");
  };
  std::map<std::string, std::vector<Sentence>> cache;
  auto items_lang = [&](auto&& self_items, auto&& self_sym,
                        const std::vector<GrammarItem>& items) -> std::vector<Sentence> {
    std::vector<Sentence> acc{Sentence{}};
    for (const auto& it : items) {
      std::vector<Sentence> options;
      if (it.kind == GrammarItem::Kind::terminal) {
        options = {Sentence{it.symbol}};
      } else if (it.kind == GrammarItem::Kind::nonterminal) {
        options = self_sym(self_items, self_sym, it.symbol);
      } else {
        options = self_items(self_items, self_sym, it.group);
        options.push_back(Sentence{});
      }
      check(acc.size() * options.size());
      std::vector<Sentence> next;
      for (const auto& a : acc)
        for (const auto& o : options) {
          Sentence s = a;
          s.insert(s.end(), o.begin(), o.end());
          next.push_back(std::move(s));
        }
      acc = std::move(next);
    }
    return acc;
  };
  auto sym_lang = [&](auto&& self_items, auto&& self_sym,
                      const std::string& nt) -> std::vector<Sentence> {
    if (auto it = cache.find(nt); it != cache.end()) return it->second;
    std::vector<Sentence> out;
    for (const auto& alt : g.alternatives(nt)) {
      auto part = self_items(self_items, self_sym, alt);
      out.insert(out.end(), part.begin(), part.end());
      check(out.size());
    }
    cache[nt] = out;
    return out;
  };
  auto all = sym_lang(items_lang, sym_lang, g.start);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

// ---------------------------------------------------------------------------
// Scoring

using WordProbs = std::unordered_map<std::string, double>;

inline constexpr double probability_floor = 1e-12;

// Mean log-probability of the sentence's words, each probability floored at
// 1e-12.
inline double score_sentence(const Sentence& s, const WordProbs& probs) {
  if (s.empty()) fail(ErrorKind::invalid_argument, "cannot score an empty sentence");
  double total = 0.0;
  for (const auto& w : s) {
    auto it = probs.find(w);
    if (it == probs.end()) fail(ErrorKind::invalid_argument, "word '" + w + "' not in vocabulary");
    total += std::log(std::max(it->second, probability_floor));
  }
  return total / double(s.size());
}

struct NBestEntry {
  Sentence sentence;
  double score = 0.0;
};

struct NBestList {
  std::vector<NBestEntry> entries;
  std::size_t generated = 0;  // N
  std::size_t distinct = 0;
  std::size_t kept = 0;       // K requested
};

// Generates N sentences, drops duplicates, scores, sorts by descending score
// (ties by sentence text) and keeps the first K.
inline NBestList nbest(const Grammar& g, const WordProbs& probs, std::size_t n, std::size_t k,
                       std::uint64_t seed) {
  if (k == 0 || n < k) fail(ErrorKind::invalid_argument, "need N >= K >= 1");
  for (const auto& w : g.vocabulary)
    if (!probs.count(w)) fail(ErrorKind::invalid_argument, "no probability for word '" + w + "'");
  NBestList out;
  out.generated = n;
  out.kept = k;
  std::set<Sentence> seen;
  for (auto& s : generate_sentences(g, n, seed)) {
    if (!seen.insert(s).second) continue;
    const double sc = score_sentence(s, probs);
    out.entries.push_back({std::move(s), sc});
  }
  out.distinct = out.entries.size();
  std::sort(out.entries.begin(), out.entries.end(), [](const NBestEntry& a, const NBestEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return to_text(a.sentence) < to_text(b.sentence);
  });
  if (out.entries.size() > k) out.entries.resize(k);
  return out;
}

}  // namespace affwords
