#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace affwords;
namespace t = affwords::testing;

namespace {

WordProbs all_probs(double p) {
  WordProbs probs;
  for (const auto& w : default_grammar().vocabulary) probs[w] = p;
  return probs;
}

}  // namespace

TEST(LoadGrammar, ShippedGrammarHas49Terminals) {
  const auto& g = default_grammar();
  EXPECT_EQ(g.vocabulary.size(), 49u);
  std::set<std::string> distinct(g.vocabulary.begin(), g.vocabulary.end());
  EXPECT_EQ(distinct.size(), 49u);
  EXPECT_EQ(g.vocabulary, default_vocabulary());
  EXPECT_EQ(g.start, "sentence");
}

TEST(LoadGrammar, VocabularyMatchesEnumeratedTerminals) {
  const auto& g = default_grammar();
  std::set<std::string> seen;
  for (const auto& s : generate_sentences(g, 50000, 1))
    for (const auto& w : s) seen.insert(w);
  EXPECT_EQ(seen, std::set<std::string>(g.vocabulary.begin(), g.vocabulary.end()));
}

TEST(LoadGrammar, ShippedFileMatchesBuiltIn) {
  std::ifstream in(AFFWORDS_SOURCE_DIR "/data/grammar.txt");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), std::string(default_grammar_text));
}

TEST(LoadGrammar, UndefinedNonterminalIsNamed) {
  try {
    load_grammar("<s> ::= a <missing>\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}

TEST(LoadGrammar, SyntaxErrorsCarryLineNumbers) {
  for (const char* text : {"<s> ::= a\n<t> = b\n", "<s> ::= a\n<t> ::= [b\n", "<s> ::= a\n<t> ::= b |\n"}) {
    try {
      load_grammar(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::parse);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(load_grammar(""), Error);
  EXPECT_THROW(load_grammar("<s> ::= a <s>\n"), Error);
  EXPECT_THROW(load_grammar("<s> ::= a\n<s> ::= b\n"), Error);
}

TEST(LoadGrammar, OptionalGroupExpansion) {
  const auto g = load_grammar("<x> ::= [a] b\n");
  const auto lang = enumerate_language(g);
  EXPECT_EQ(std::set<Sentence>(lang.begin(), lang.end()),
            (std::set<Sentence>{{"b"}, {"a", "b"}}));
  EXPECT_TRUE(derivable(g, "b"));
  EXPECT_TRUE(derivable(g, "a b"));
  EXPECT_FALSE(derivable(g, "a"));
  EXPECT_FALSE(derivable(g, "b a"));
}

TEST(LoadGrammar, CommentsAndContinuations) {
  const auto g = load_grammar("# header\n<s> ::= a <t>\n<t> ::= b\n  | c [d e]\n");
  EXPECT_TRUE(derivable(g, "a b"));
  EXPECT_TRUE(derivable(g, "a c d e"));
  EXPECT_FALSE(derivable(g, "a c e"));
  EXPECT_THROW(load_grammar("<s> ::= a [b | c]\n"), Error);
  EXPECT_TRUE(derivable(g, "a c"));
  EXPECT_EQ(g.vocabulary.size(), 5u);
}

TEST(GenerateSentences, SoundAndDeterministic) {
  const auto& g = default_grammar();
  const auto a = generate_sentences(g, 3000, 7);
  const auto b = generate_sentences(g, 3000, 7);
  const auto c = generate_sentences(g, 3000, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& s : a) {
    ASSERT_FALSE(s.empty());
    EXPECT_TRUE(derivable(g, s)) << to_text(s);
  }
}

TEST(GenerateSentences, OptionalGroupsAreFair) {
  const auto g = load_grammar("<x> ::= [a] b\n");
  const auto out = generate_sentences(g, 20000, 1);
  const auto with_a = std::count_if(out.begin(), out.end(), [](const Sentence& s) { return s.size() == 2; });
  EXPECT_NEAR(double(with_a) / 20000.0, 0.5, 0.02);
}

TEST(Derivable, ReferenceSentences) {
  const auto& g = default_grammar();
  for (const auto& s : t::reference_sentences()) EXPECT_TRUE(derivable(g, s)) << s;
}

TEST(Derivable, Negatives) {
  const auto& g = default_grammar();
  EXPECT_FALSE(derivable(g, "ball the robot the"));
  EXPECT_FALSE(derivable(g, Sentence{}));
  EXPECT_FALSE(derivable(g, ""));
  EXPECT_FALSE(derivable(g, "the robot pushed the ball and the ball"));
  EXPECT_FALSE(derivable(g, "the robot pushed the ball and the ball moves moves"));
  EXPECT_FALSE(derivable(g, "the robot kicked the ball and the ball moves"));
}

TEST(ScoreSentence, HandValues) {
  EXPECT_EQ(score_sentence(to_sentence("the robot"), all_probs(1.0)), 0.0);
  EXPECT_NEAR(score_sentence(to_sentence("the robot"), all_probs(0.5)), std::log(0.5), 1e-15);
  EXPECT_NEAR(score_sentence(to_sentence("the robot"), all_probs(0.5)), -0.69315, 5e-6);
  auto probs = all_probs(1.0);
  probs["robot"] = 0.0;
  EXPECT_NEAR(score_sentence(to_sentence("the robot"), probs), std::log(1e-12) / 2.0, 1e-12);
  EXPECT_THROW(score_sentence(to_sentence("the dog"), probs), Error);
}

TEST(ScoreSentence, StrictlyDecreasesWithAnyWordProbability) {
  const auto& g = default_grammar();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  WordProbs probs;
  for (const auto& w : g.vocabulary) probs[w] = u(rng);
  for (const auto& s : generate_sentences(g, 200, 3)) {
    const double base = score_sentence(s, probs);
    auto lowered = probs;
    lowered[s[rng() % s.size()]] *= 0.9;
    EXPECT_LT(score_sentence(s, lowered), base);
  }
}

TEST(NBest, SortedDistinctAndBounded) {
  const auto& g = default_grammar();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WordProbs probs;
  for (const auto& w : g.vocabulary) probs[w] = u(rng);
  const auto list = nbest(g, probs, 2000, 25, 11);
  ASSERT_EQ(list.entries.size(), 25u);
  EXPECT_EQ(list.generated, 2000u);
  EXPECT_LE(list.distinct, 2000u);
  std::set<Sentence> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    EXPECT_TRUE(seen.insert(list.entries[i].sentence).second);
    EXPECT_NEAR(list.entries[i].score, score_sentence(list.entries[i].sentence, probs), 1e-15);
    if (i) { EXPECT_GE(list.entries[i - 1].score, list.entries[i].score); }
  }
  // Top entry is the best among everything generated with that seed.
  double best = -1e300;
  for (const auto& s : generate_sentences(g, 2000, 11)) best = std::max(best, score_sentence(s, probs));
  EXPECT_EQ(list.entries[0].score, best);
}

TEST(NBest, TiesBrokenByText) {
  const auto g = load_grammar("<s> ::= <x> <y>\n<x> ::= a | b | c\n<y> ::= d | e\n");
  WordProbs probs{{"a", 0.5}, {"b", 0.5}, {"c", 0.5}, {"d", 0.5}, {"e", 0.5}};
  const auto list = nbest(g, probs, 500, 400, 1);
  ASSERT_EQ(list.distinct, 6u);
  ASSERT_EQ(list.entries.size(), 6u);  // K beyond the distinct count returns them all
  std::vector<std::string> texts;
  for (const auto& e : list.entries) texts.push_back(to_text(e.sentence));
  EXPECT_TRUE(std::is_sorted(texts.begin(), texts.end()));
}

TEST(NBest, Errors) {
  EXPECT_THROW(nbest(default_grammar(), all_probs(0.5), 5, 10, 1), Error);
  EXPECT_THROW(nbest(default_grammar(), all_probs(0.5), 5, 0, 1), Error);
  EXPECT_THROW(nbest(default_grammar(), WordProbs{{"the", 1.0}}, 10, 5, 1), Error);
}

TEST(NBest, ConjunctionFollowsGraspOutcome) {
  const auto& net = t::default_net();
  const auto& g = default_grammar();
  auto top = [&](const char* ev) {
    const auto probs = word_probabilities(net, parse_evidence(net.schema(), ev));
    return nbest(g, probs, 10000, 10, t::default_seed).entries.at(0).sentence;
  };
  const auto ok = top("Action=grasp,ObjVel=medium");
  const auto failed = top("Action=grasp,ObjVel=slow");
  EXPECT_NE(std::find(ok.begin(), ok.end(), "and"), ok.end()) << to_text(ok);
  EXPECT_NE(std::find(failed.begin(), failed.end(), "but"), failed.end()) << to_text(failed);
}
