// translator_test.cpp — program ↔ formula translations, binary-count
// flattening, and the counting-normal-form embedding. Acceptance is
// preserved exactly; shapes of a few small translations are pinned.

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ktc/harness.hpp"
#include "ktc/interp.hpp"
#include "ktc/oracles.hpp"
#include "ktc/parse.hpp"
#include "ktc/passes.hpp"
#include "ktc/translate.hpp"

namespace ktc {
namespace {

Alphabet ab() {
  Alphabet a;
  a.letters = {'a', 'b'};
  return a;
}

int count_ops(const CraspProgram &p, OpKind kind) {
  int n = 0;
  for (const auto &[name, op] : p.ops) n += op.kind == kind;
  return n;
}

TEST(ToCrasp, BalancePinnedShape) {
  Alphabet paren = corpus_alphabet("dyck1");
  FormulaPtr f = parse_kt("#[Q_(] = #[Q_)]", paren);
  CraspProgram p = kt_to_crasp(f, paren);
  // the desugared equality folds back into one program-level comparison
  EXPECT_EQ(count_ops(p, OpKind::Counting), 2);
  EXPECT_EQ(count_ops(p, OpKind::Compare), 1);
  EXPECT_EQ(p.ops.size(), 3u);
  EXPECT_EQ(p.ops.back().second.rel, Rel::Eq);
}

TEST(ToCrasp, SharedSubtermsTranslateOnce) {
  FormulaPtr f = parse_kt("#[Q_a] <= #[Q_b] & #[Q_b] <= #[Q_a]", ab());
  CraspProgram p = kt_to_crasp(f, ab());
  EXPECT_EQ(count_ops(p, OpKind::Counting), 2);  // #[Q_a], #[Q_b] reused
}

TEST(ToKt, DyckProgramStaysDepthTwo) {
  FormulaPtr f = crasp_to_kt(corpus_dyck1_program());
  EXPECT_EQ(modal_depth(desugar(f)), 2);
}

TEST(RoundTrip, DyckBothDirections) {
  CraspProgram p = corpus_dyck1_program();
  FormulaPtr f = crasp_to_kt(p);
  CraspProgram p2 = kt_to_crasp(desugar(f), p.alphabet);
  Alphabet paren = corpus_alphabet("dyck1");
  for (const std::string &w : enumerate_words(paren, 8)) {
    bool want = oracle_dyck1(w);
    ASSERT_EQ(crasp_accepts(p, w), want) << w;
    ASSERT_EQ(end_satisfies(f, w), want) << w;
    ASSERT_EQ(crasp_accepts(p2, w), want) << w;
  }
}

TEST(RoundTrip, FuzzedProgramsPreserveAcceptance) {
  std::mt19937_64 rng(31);
  std::vector<std::string> words = enumerate_words(ab(), 5);
  for (int k = 0; k < 60; ++k) {
    CraspProgram p = fuzz_crasp(ab(), 7, rng);
    FormulaPtr f = crasp_to_kt(p);
    for (const std::string &w : words)
      ASSERT_EQ(crasp_accepts(p, w), end_satisfies(f, w)) << pretty_print(p) << " on " << w;
  }
}

TEST(RoundTrip, FuzzedFormulasPreserveAcceptance) {
  std::mt19937_64 rng(32);
  std::vector<std::string> words = enumerate_words(ab(), 5);
  for (int k = 0; k < 60; ++k) {
    FormulaPtr f = fuzz_formula(ab(), 3, rng);
    CraspProgram p = kt_to_crasp(f, ab());
    for (const std::string &w : words)
      ASSERT_EQ(end_satisfies(f, w), crasp_accepts(p, w)) << pretty_print(f) << " on " << w;
  }
}

TEST(RoundTrip, ConditionalAndMinMaxGuardedCases) {
  // ops with case-split translations, checked against the interpreter
  const char *text =
      "Ca(i) := #[j<=i] Q_a(j)\n"
      "Cb(i) := #[j<=i] Q_b(j)\n"
      "P(i) := Q_a(i)\n"
      "G(i) := if P(i) then Ca(i) else Cb(i)\n"
      "Lo(i) := min(G(i), Cb(i))\n"
      "Hi(i) := max(Ca(i), G(i))\n"
      "Y(i) := Lo(i) <= Hi(i)\n";
  CraspProgram p = parse_crasp(text, ab());
  FormulaPtr f = crasp_to_kt(p);
  for (const std::string &w : enumerate_words(ab(), 6))
    ASSERT_EQ(crasp_accepts(p, w), end_satisfies(f, w)) << w;
}

TEST(BinaryCount, PureJBodyIsAPlainCount) {
  BinCountProgram p;
  p.base.alphabet = ab();
  p.name = "bc";
  p.body = bin_ref(BoolRef{"", 'b'}, 'j');
  CraspProgram flat = desugar_binary_count(p);
  ASSERT_EQ(flat.ops.size(), 1u);
  EXPECT_EQ(flat.ops[0].first, "bc");
  EXPECT_EQ(flat.ops[0].second.kind, OpKind::Counting);
}

TEST(BinaryCount, GatedBodyBecomesConditional) {
  BinCountProgram p;
  p.base.alphabet = ab();
  CraspOp init;
  init.kind = OpKind::Initial;
  init.b1 = BoolRef{"", 'a'};
  p.base.ops.emplace_back("P", init);
  p.name = "bc";
  p.body = bin_and(bin_ref(BoolRef{"P", 0}, 'i'), bin_ref(BoolRef{"", 'b'}, 'j'));
  CraspProgram flat = desugar_binary_count(p);
  EXPECT_EQ(flat.ops.back().first, "bc");
  EXPECT_EQ(flat.ops.back().second.kind, OpKind::Conditional);
}

TEST(BinaryCount, DisjunctionByInclusionExclusion) {
  BinCountProgram p;
  p.base.alphabet = ab();
  p.name = "bc";
  p.body = bin_or(bin_ref(BoolRef{"", 'a'}, 'j'), bin_ref(BoolRef{"", 'b'}, 'j'));
  CraspProgram flat = desugar_binary_count(p);
  EXPECT_EQ(flat.ops.back().first, "bc");
  EXPECT_EQ(flat.ops.back().second.kind, OpKind::SubOp);
  // a or b covers every position, so the count is i
  CraspTrace t = run_crasp(flat, "abba");
  EXPECT_EQ(t.ints.at("bc"), (std::vector<long long>{1, 2, 3, 4}));
}

TEST(BinaryCount, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(33);
  std::vector<std::string> words = enumerate_words(ab(), 5);
  for (int k = 0; k < 60; ++k) {
    BinCountProgram p = fuzz_bincount(ab(), 4, rng);
    CraspProgram flat = desugar_binary_count(p);
    for (const std::string &w : words) {
      CraspTrace base = run_crasp(p.base, w);
      CraspTrace full = run_crasp(flat, w);
      const std::vector<long long> &got = full.ints.at(p.name);
      for (int i = 1; i <= static_cast<int>(w.size()); ++i) {
        long long want = 0;
        for (int j = 1; j <= i; ++j) {
          // direct evaluation of the two-position body
          struct Rec {
            static bool eval(const BinExprPtr &e, const std::string &w, int i, int j,
                             const CraspTrace &t) {
              switch (e->kind) {
                case BinExpr::Ref: {
                  int pos = e->pos == 'i' ? i : j;
                  if (e->ref.is_atom()) return w[pos - 1] == e->ref.atom;
                  return t.bools.at(e->ref.name)[pos - 1];
                }
                case BinExpr::Not:
                  return !eval(e->a, w, i, j, t);
                case BinExpr::And:
                  return eval(e->a, w, i, j, t) && eval(e->b, w, i, j, t);
                case BinExpr::Or:
                  return eval(e->a, w, i, j, t) || eval(e->b, w, i, j, t);
              }
              return false;
            }
          };
          want += Rec::eval(p.body, w, i, j, base) ? 1 : 0;
        }
        ASSERT_EQ(got[i - 1], want) << "word " << w << " position " << i;
      }
    }
  }
}

TEST(BinaryCount, ParsesFromFile) {
  const char *text =
      "alphabet: a b\n"
      "P(i) := Q_a(i)\n"
      "bc(i) := #2[j<=i] P(i) & Q_b(j)\n";
  BinCountProgram p = parse_bincount_file(text);
  EXPECT_EQ(p.name, "bc");
  CraspProgram flat = desugar_binary_count(p);
  CraspTrace t = run_crasp(flat, "abba");
  // positions where a holds: 1, 4; count of earlier b's there: 0 and 2
  EXPECT_EQ(t.ints.at("bc"), (std::vector<long long>{0, 0, 0, 2}));
}

TEST(NormalForm, DepthOneAndBruteForce) {
  std::mt19937_64 rng(34);
  std::vector<std::string> words = enumerate_words(ab(), 5);
  for (int k = 0; k < 30; ++k) {
    FocNormalForm nf = fuzz_foc_nf(ab(), 3, rng);
    FormulaPtr f = foc_nf_to_kt(nf);
    EXPECT_EQ(modal_depth(f), 1);
    for (const std::string &w : words) {
      bool want = true;
      for (const LinearComparison &cons : nf.constraints) {
        long long acc = cons.constant;
        for (const auto &[coef, var] : cons.terms) {
          long long cnt = 0;
          for (int j = 1; j <= static_cast<int>(w.size()); ++j) {
            for (const auto &[v, body] : nf.counted)
              if (v == var->atom && eval_formula(body, w, j)) ++cnt;
          }
          acc += coef * cnt;
        }
        want = want && acc >= 0;
      }
      ASSERT_EQ(end_satisfies(f, w), want) << w;
    }
  }
}

TEST(NormalForm, MajorityFromFile) {
  FocNormalForm nf = parse_foc_file(read_file("corpus/majority.foc"));
  FormulaPtr f = foc_nf_to_kt(nf);
  EXPECT_EQ(modal_depth(f), 1);
  for (const std::string &w : enumerate_words(ab(), 6)) {
    long long a = 0, b = 0;
    for (char c : w) (c == 'a' ? a : b)++;
    ASSERT_EQ(end_satisfies(f, w), a >= b) << w;
  }
}

TEST(Corpus, ProgramFilesMatchBuilders) {
  const struct {
    const char *file;
    CraspProgram program;
  } items[] = {
      {"corpus/dyck1.crasp", corpus_dyck1_program()},
      {"corpus/astar_bstar.crasp", corpus_astar_bstar_program()},
      {"corpus/astar_bstar_astar.crasp", corpus_astar_bstar_astar_program()},
      {"corpus/anbncn.crasp", corpus_anbncn_program()},
      {"corpus/hello.crasp", corpus_hello_program()},
  };
  for (const auto &item : items) {
    CraspProgram parsed = parse_crasp_file(read_file(item.file));
    EXPECT_EQ(pretty_print(parsed), pretty_print(item.program)) << item.file;
  }
  LmProgram lm = parse_lm_file(read_file("corpus/dyck1.lm"));
  LmProgram built = corpus_dyck1_lm();
  EXPECT_EQ(pretty_print(lm.base), pretty_print(built.base));
  EXPECT_EQ(lm.next, built.next);
}

TEST(Corpus, ProgramsMatchOracles) {
  const struct {
    const char *id;
    CraspProgram program;
  } items[] = {
      {"dyck1", corpus_dyck1_program()},
      {"astar_bstar", corpus_astar_bstar_program()},
      {"astar_bstar_astar", corpus_astar_bstar_astar_program()},
      {"anbncn", corpus_anbncn_program()},
      {"hello", corpus_hello_program()},
  };
  for (const auto &item : items)
    for (const std::string &w : enumerate_words(item.program.alphabet, 6))
      ASSERT_EQ(crasp_accepts(item.program, w), oracle_membership(item.id, w))
          << item.id << " on " << w;
}

}  // namespace
}  // namespace ktc
