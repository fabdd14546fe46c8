// harness_test.cpp — membership oracles, the built-in corpus against those
// oracles, word generators, differential-report determinism, and the
// exact-rational shadow on compiled models.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ktc/compile.hpp"
#include "ktc/harness.hpp"
#include "ktc/interp.hpp"
#include "ktc/oracles.hpp"
#include "ktc/parse.hpp"
#include "ktc/passes.hpp"

namespace ktc {
namespace {

Alphabet ab() {
  Alphabet a;
  a.letters = {'a', 'b'};
  return a;
}

bool end_true(const FormulaPtr &f, const std::string &w) {
  return eval_formula(f, w, static_cast<int>(w.size()));
}

FormulaPtr norm(const FormulaPtr &sugared) { return normalize_comparison(desugar(sugared)); }

TEST(Oracles, FrozenMemberships) {
  EXPECT_TRUE(oracle_astar_bstar("aab"));
  EXPECT_TRUE(oracle_astar_bstar("a"));
  EXPECT_FALSE(oracle_astar_bstar("aba"));

  EXPECT_TRUE(oracle_astar_bstar_astar("aba"));
  EXPECT_TRUE(oracle_astar_bstar_astar("abba"));
  EXPECT_FALSE(oracle_astar_bstar_astar("bab"));

  EXPECT_TRUE(oracle_anbncn("abc"));
  EXPECT_TRUE(oracle_anbncn("aabbcc"));
  EXPECT_FALSE(oracle_anbncn("aabbc"));
  EXPECT_FALSE(oracle_anbncn("acb"));

  EXPECT_TRUE(oracle_dyck1("()"));
  EXPECT_TRUE(oracle_dyck1("(()())"));
  EXPECT_FALSE(oracle_dyck1(")("));
  EXPECT_FALSE(oracle_dyck1("(()"));

  EXPECT_TRUE(oracle_hello("hello"));
  EXPECT_FALSE(oracle_hello("helo"));
  EXPECT_FALSE(oracle_hello("helloo"));

  EXPECT_TRUE(oracle_subsequence("ab", "axb") || oracle_subsequence("ab", "aab"));
  EXPECT_TRUE(oracle_subsequence("ll", "hello"));
  EXPECT_FALSE(oracle_subsequence("ll", "helo"));
  EXPECT_FALSE(oracle_subsequence("ab", "ba"));
  EXPECT_TRUE(oracle_subsequence("", "anything"));
}

TEST(Oracles, LookupById) {
  EXPECT_TRUE(oracle_membership("dyck1", "()"));
  EXPECT_FALSE(oracle_membership("anbncn", "cba"));
  EXPECT_THROW(oracle_membership("no_such_language", "x"), Error);
}

TEST(Corpus, FormulasMatchOracles) {
  struct Row {
    std::string id;
    FormulaPtr f;
  };
  std::vector<Row> rows = {{"astar_bstar", corpus_astar_bstar()},
                           {"astar_bstar_astar", corpus_astar_bstar_astar()},
                           {"anbncn", corpus_anbncn()},
                           {"dyck1", corpus_dyck1()},
                           {"hello", corpus_hello()}};
  for (const Row &row : rows) {
    Alphabet a = corpus_alphabet(row.id);
    for (const std::string &w : enumerate_words(a, 6))
      ASSERT_EQ(end_true(row.f, w), oracle_membership(row.id, w)) << row.id << " on " << w;
  }
}

TEST(Corpus, ProgramsMatchFormulas) {
  struct Row {
    std::string id;
    FormulaPtr f;
    CraspProgram p;
  };
  std::vector<Row> rows = {{"astar_bstar", corpus_astar_bstar(), corpus_astar_bstar_program()},
                           {"dyck1", corpus_dyck1(), corpus_dyck1_program()},
                           {"hello", corpus_hello(), corpus_hello_program()}};
  for (const Row &row : rows) {
    Alphabet a = corpus_alphabet(row.id);
    for (const std::string &w : enumerate_words(a, 5)) {
      ASSERT_EQ(crasp_accepts(row.p, w), end_true(row.f, w)) << row.id << " on " << w;
    }
  }
}

TEST(Subsequence, PinnedConstruction) {
  FormulaPtr expect_ab = mk_leq(
      mk_one(), mk_count(mk_and(mk_atom("b"), mk_leq(mk_one(), mk_count(mk_atom("a"))))));
  EXPECT_EQ(pretty_print(subsequence_formula("ab")), pretty_print(expect_ab));

  // Repeated letters need the ≥2 threshold: two 'a's, not the same one twice.
  FormulaPtr expect_aa = mk_leq(
      mk_one(), mk_count(mk_and(mk_atom("a"), mk_leq(mk_nat(2), mk_count(mk_atom("a"))))));
  EXPECT_EQ(pretty_print(subsequence_formula("aa")), pretty_print(expect_aa));

  EXPECT_THROW(subsequence_formula(""), Error);
}

TEST(Subsequence, MatchesTwoPointerOracle) {
  std::vector<std::string> patterns = {"a", "b", "ab", "ba", "aa", "aab", "aba", "bbb"};
  std::vector<std::string> words = enumerate_words(ab(), 7);
  for (const std::string &s : patterns) {
    FormulaPtr f = subsequence_formula(s);
    EXPECT_EQ(modal_depth(desugar(f)), static_cast<int>(s.size())) << s;
    for (const std::string &w : words)
      ASSERT_EQ(end_true(f, w), oracle_subsequence(s, w)) << s << " on " << w;
  }
}

TEST(Words, EnumerationIsShortlex) {
  std::vector<std::string> got = enumerate_words(ab(), 3);
  ASSERT_EQ(got.size(), 2u + 4u + 8u);
  std::vector<std::string> head = {"a", "b", "aa", "ab", "ba", "bb", "aaa", "aab"};
  for (size_t k = 0; k < head.size(); ++k) EXPECT_EQ(got[k], head[k]);
  std::set<std::string> uniq(got.begin(), got.end());
  EXPECT_EQ(uniq.size(), got.size());
}

TEST(Words, GeneratorsStayInBounds) {
  std::mt19937_64 rng(7);
  Alphabet a = corpus_alphabet("dyck1");
  for (int k = 0; k < 200; ++k) {
    std::string w = random_word(a, 9, rng);
    EXPECT_GE(w.size(), 1u);
    EXPECT_LE(w.size(), 9u);
    for (char c : w) EXPECT_TRUE(a.contains(c));
    std::string b = biased_word(a, 9, rng);
    EXPECT_GE(b.size(), 1u);
    EXPECT_LE(b.size(), 9u);
    for (char c : b) EXPECT_TRUE(a.contains(c));
  }
}

TEST(Diff, SameSeedSameReport) {
  FormulaPtr f = normalize_comparison(parse_kt("#[Q_a] >= 1", ab()));
  TransformerModel m = compile(f, ab());
  EnumerationSpec spec;
  spec.random_count = 50;
  spec.random_max_len = 12;
  spec.seed = 99;
  DiffReport r1 = diff_test(f, m, spec, "probe");
  DiffReport r2 = diff_test(f, m, spec, "probe");
  EXPECT_EQ(to_json(r1), to_json(r2));
  EXPECT_EQ(r1.strings_tested, 50);
}

TEST(Diff, ReportCountsAndJsonShape) {
  FormulaPtr f = normalize_comparison(parse_kt("Q_a", ab()));
  TransformerModel m = compile(f, ab());
  EnumerationSpec spec;
  spec.exhaustive_max_len = 3;
  DiffReport r = diff_test(f, m, spec, "atom");
  EXPECT_TRUE(r.agreed());
  EXPECT_EQ(r.strings_tested, 14);  // 2 + 4 + 8
  EXPECT_GT(r.checks, r.strings_tested);

  std::string j = to_json(r);
  EXPECT_NE(j.find("\"program_id\""), std::string::npos);
  EXPECT_NE(j.find("\"strings_tested\""), std::string::npos);
  EXPECT_NE(j.find("\"agreed\""), std::string::npos);
  EXPECT_EQ(j.find("\"counterexample\""), std::string::npos);
}

TEST(Shadow, CertifiesCompiledCorpusModel) {
  FormulaPtr f = norm(corpus_astar_bstar());
  Alphabet a = corpus_alphabet("astar_bstar");
  TransformerModel m = compile(f, a);
  for (const std::string &w : {std::string("aabb"), std::string("ba"), std::string("abab")}) {
    ShadowCertificate cert = rational_shadow_forward(m, w, f);
    EXPECT_TRUE(cert.count_ratios_exact) << w;
    EXPECT_TRUE(cert.halfstep_exact) << w;
    EXPECT_TRUE(cert.final_pm_one_exact) << w;
    EXPECT_LE(cert.max_float_dev_pre_ln, 1e-9) << w;
  }
}

TEST(Shadow, RejectsNonUniformAttention) {
  FormulaPtr f = norm(corpus_astar_bstar());
  TransformerModel m = compile(f, corpus_alphabet("astar_bstar"));
  ASSERT_FALSE(m.blocks.empty());
  m.blocks[0].w_q.at(0, 0) = 0.5;
  EXPECT_THROW(rational_shadow_forward(m, "ab", f), NonUniformAttentionError);
}

TEST(Shadow, RejectsFfnBias) {
  FormulaPtr f = norm(corpus_astar_bstar());
  TransformerModel m = compile(f, corpus_alphabet("astar_bstar"));
  ASSERT_FALSE(m.blocks.empty());
  ASSERT_FALSE(m.blocks[0].ffn.empty());
  ASSERT_FALSE(m.blocks[0].ffn[0].b.empty());
  m.blocks[0].ffn[0].b[0] = 0.25;
  EXPECT_THROW(rational_shadow_forward(m, "ab", f), Error);
}

}  // namespace
}  // namespace ktc
