// interpreter_test.cpp — reference semantics against a second, naive
// evaluator plus frozen hand-worked values; program traces and their
// invariants; language-model support and greedy decoding.

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

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

// Naive second evaluator: direct transcription of the semantic clauses with
// no sharing or caching. Deliberately slow and simple.
long long slow_count(const CountPtr &c, const std::string &w, int i);

bool slow_eval(const FormulaPtr &f, const std::string &w, int i) {
  switch (f->kind) {
    case FKind::Atom:
      return f->atom.size() == 1 && w[i - 1] == f->atom[0];
    case FKind::True:
      return true;
    case FKind::Not:
      return !slow_eval(f->f1, w, i);
    case FKind::And:
      return slow_eval(f->f1, w, i) && slow_eval(f->f2, w, i);
    case FKind::Or:
      return slow_eval(f->f1, w, i) || slow_eval(f->f2, w, i);
    case FKind::Leq:
      return slow_count(f->c1, w, i) <= slow_count(f->c2, w, i);
    case FKind::Lt:
      return slow_count(f->c1, w, i) < slow_count(f->c2, w, i);
    case FKind::Eq:
      return slow_count(f->c1, w, i) == slow_count(f->c2, w, i);
    case FKind::Linear: {
      long long acc = f->lin.constant;
      for (const auto &[coef, body] : f->lin.terms) {
        long long cnt = 0;
        for (int j = 1; j <= i; ++j) cnt += slow_eval(body, w, j) ? 1 : 0;
        acc += coef * cnt;
      }
      return acc >= 0;
    }
  }
  return false;
}

long long slow_count(const CountPtr &c, const std::string &w, int i) {
  switch (c->kind) {
    case CKind::Count: {
      long long n = 0;
      for (int j = 1; j <= i; ++j) n += slow_eval(c->body, w, j) ? 1 : 0;
      return n;
    }
    case CKind::Add:
      return slow_count(c->t1, w, i) + slow_count(c->t2, w, i);
    case CKind::Sub:
      return slow_count(c->t1, w, i) - slow_count(c->t2, w, i);
    case CKind::One:
      return 1;
    case CKind::Nat:
      return c->nat;
    case CKind::PosI:
      return i;
  }
  return 0;
}

TEST(Eval, FrozenAtoms) {
  FormulaPtr a = mk_atom("a");
  EXPECT_TRUE(eval_formula(a, "aba", 1));
  EXPECT_FALSE(eval_formula(a, "aba", 2));
  EXPECT_TRUE(eval_formula(a, "aba", 3));
  for (int i = 1; i <= 3; ++i) EXPECT_TRUE(eval_formula(mk_true(), "aba", i));
}

TEST(Eval, FrozenCounts) {
  EXPECT_EQ(eval_count(mk_count(mk_atom("a")), "aba", 3), 2);
  for (int i = 1; i <= 4; ++i) {
    EXPECT_EQ(eval_count(mk_count(mk_true()), "abab", i), i);
    EXPECT_EQ(eval_count(mk_count(mk_not(mk_true())), "abab", i), 0);
  }
}

TEST(Eval, DyckFormulaFrozen) {
  FormulaPtr dyck = corpus_dyck1();
  EXPECT_FALSE(eval_formula(dyck, "(()", 3));
  EXPECT_TRUE(end_satisfies(dyck, "()"));
  EXPECT_FALSE(end_satisfies(dyck, ")("));
  EXPECT_TRUE(end_satisfies(dyck, "(()())"));
}

TEST(Eval, HelloFormulaFrozen) {
  FormulaPtr hello = corpus_hello();
  EXPECT_TRUE(end_satisfies(hello, "hello"));
  EXPECT_FALSE(end_satisfies(hello, "helo"));
  EXPECT_FALSE(end_satisfies(hello, "olleh"));
  EXPECT_FALSE(end_satisfies(hello, "helloo"));
}

TEST(Eval, EmptyWordIsAnError) {
  EXPECT_THROW(end_satisfies(mk_true(), ""), EmptyWordError);
  EXPECT_THROW(crasp_accepts(corpus_dyck1_program(), ""), EmptyWordError);
}

TEST(Eval, PositionRange) {
  FormulaPtr a = mk_atom("a");
  EXPECT_THROW(eval_formula(a, "a", 2), PositionError);
  EXPECT_THROW(eval_formula(a, "a", 0), PositionError);
  EXPECT_THROW(eval_count(mk_count(a), "a", 5), PositionError);
}

TEST(Eval, MatchesNaiveEvaluator) {
  std::mt19937_64 rng(21);
  std::vector<std::string> words = enumerate_words(ab(), 4);
  for (int k = 0; k < 200; ++k) {
    FormulaPtr f = fuzz_formula(ab(), 3, rng);
    for (const std::string &w : words)
      for (int i = 1; i <= static_cast<int>(w.size()); ++i)
        ASSERT_EQ(eval_formula(f, w, i), slow_eval(f, w, i))
            << pretty_print(f) << " on " << w << "@" << i;
  }
}

TEST(Eval, SugarEvaluatesLikeItsExpansion) {
  const char *texts[] = {"#[Q_a] = 3", "#[Q_a] < i", "Q_a | Q_b", "#[Q_a | Q_b] >= 2"};
  for (const char *text : texts) {
    FormulaPtr sugared = parse_kt_sugared(text, ab());
    FormulaPtr core = parse_kt(text, ab());
    for (const std::string &w : enumerate_words(ab(), 4))
      for (int i = 1; i <= static_cast<int>(w.size()); ++i)
        ASSERT_EQ(eval_formula(sugared, w, i), eval_formula(core, w, i)) << text;
  }
}

TEST(Trace, DyckProgramFrozen) {
  CraspProgram p = corpus_dyck1_program();
  EXPECT_TRUE(crasp_accepts(p, "(()())"));
  EXPECT_FALSE(crasp_accepts(p, "(()"));

  CraspTrace t = run_crasp(p, "(()");
  EXPECT_EQ(t.ints.at("Copen"), (std::vector<long long>{1, 2, 2}));

  CraspTrace t2 = run_crasp(p, "())(");
  EXPECT_EQ(t2.bools.at("V"), (std::vector<bool>{false, false, true, false}));
}

TEST(Trace, AllOpKindsAgainstHand) {
  // one program touching every op kind, on a fixed word
  const char *text =
      "Ca(i) := #[j<=i] Q_a(j)\n"
      "Cb(i) := #[j<=i] Q_b(j)\n"
      "S(i) := Ca(i) + Cb(i)\n"
      "Dd(i) := Ca(i) - Cb(i)\n"
      "Lo(i) := min(Ca(i), Cb(i))\n"
      "Hi(i) := max(Ca(i), Cb(i))\n"
      "P(i) := Q_a(i)\n"
      "NP(i) := !P(i)\n"
      "G(i) := if P(i) then Ca(i) else Cb(i)\n"
      "K(i) := 2\n"
      "LE(i) := Dd(i) <= K(i)\n"
      "Y(i) := NP(i) & LE(i)\n";
  CraspProgram p = parse_crasp(text, ab());
  CraspTrace t = run_crasp(p, "aabab");
  EXPECT_EQ(t.ints.at("Ca"), (std::vector<long long>{1, 2, 2, 3, 3}));
  EXPECT_EQ(t.ints.at("Cb"), (std::vector<long long>{0, 0, 1, 1, 2}));
  EXPECT_EQ(t.ints.at("S"), (std::vector<long long>{1, 2, 3, 4, 5}));
  EXPECT_EQ(t.ints.at("Dd"), (std::vector<long long>{1, 2, 1, 2, 1}));
  EXPECT_EQ(t.ints.at("Lo"), (std::vector<long long>{0, 0, 1, 1, 2}));
  EXPECT_EQ(t.ints.at("Hi"), (std::vector<long long>{1, 2, 2, 3, 3}));
  EXPECT_EQ(t.ints.at("G"), (std::vector<long long>{1, 2, 1, 3, 2}));
  EXPECT_EQ(t.ints.at("K"), (std::vector<long long>{2, 2, 2, 2, 2}));
  EXPECT_EQ(t.bools.at("P"), (std::vector<bool>{true, true, false, true, false}));
  EXPECT_EQ(t.bools.at("LE"), (std::vector<bool>{true, true, true, true, true}));
  EXPECT_EQ(t.bools.at("Y"), (std::vector<bool>{false, false, true, false, true}));
}

TEST(Trace, CountingInvariants) {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 100; ++k) {
    CraspProgram p = fuzz_crasp(ab(), 8, rng);
    std::string w = random_word(ab(), 12, rng);
    CraspTrace t = run_crasp(p, w);
    for (const auto &[name, op] : p.ops) {
      if (op.kind != OpKind::Counting) continue;
      const std::vector<long long> &v = t.ints.at(name);
      ASSERT_EQ(v.size(), w.size());
      for (size_t i = 0; i < v.size(); ++i) {
        ASSERT_GE(v[i], 0);
        ASSERT_LE(v[i], static_cast<long long>(i) + 1);
        if (i > 0) ASSERT_GE(v[i], v[i - 1]);
      }
    }
  }
}

TEST(Validate, RejectsIllFormedPrograms) {
  CraspProgram p;
  p.alphabet = ab();
  CraspOp init;
  init.kind = OpKind::Initial;
  init.b1 = BoolRef{"", 'a'};
  p.ops.emplace_back("P", init);
  p.ops.emplace_back("P", init);  // duplicate name
  EXPECT_THROW(validate(p), Error);

  CraspProgram q;
  q.alphabet = ab();
  CraspOp cmp;
  cmp.kind = OpKind::Compare;
  cmp.rel = Rel::Leq;
  cmp.c1 = "missing";
  cmp.c2 = "missing";
  q.ops.emplace_back("Y", cmp);
  EXPECT_THROW(validate(q), Error);
}

TEST(Lm, SupportEqualsMembership) {
  LmProgram lm = corpus_dyck1_lm();
  Alphabet paren = corpus_alphabet("dyck1");
  for (const std::string &w : enumerate_words(paren, 8))
    ASSERT_EQ(lm_assigns_nonzero(lm, w), oracle_dyck1(w)) << w;
}

TEST(Lm, PredicateLookup) {
  LmProgram lm = corpus_dyck1_lm();
  EXPECT_EQ(lm.predicate_for("("), "T");
  EXPECT_EQ(lm.predicate_for("EOS"), "D");
  EXPECT_THROW(lm.predicate_for("x"), Error);
}

TEST(Lm, GreedyDecodeClosesParens) {
  LmProgram lm = corpus_dyck1_lm();
  DecodeResult r = lm_greedy_decode(lm, "((", 64, {"EOS", ")", "("});
  EXPECT_EQ(r.text, "(())");
  EXPECT_EQ(r.outcome, DecodeOutcome::Eos);
}

TEST(Lm, DefaultTieBreakPrefersDeclarationOrder) {
  LmProgram lm = corpus_dyck1_lm();
  Alphabet paren = corpus_alphabet("dyck1");
  EXPECT_EQ(default_tie_break(paren), (std::vector<std::string>{"(", ")", "EOS"}));
  // ( always admissible, so declaration-order greedy never terminates
  DecodeResult r = lm_greedy_decode(lm, "(", 10, default_tie_break(paren));
  EXPECT_EQ(r.outcome, DecodeOutcome::MaxSteps);
  EXPECT_EQ(r.text, std::string(10, '('));
}

TEST(Lm, StuckWhenNothingFollows) {
  LmProgram lm;
  lm.base.alphabet = ab();
  CraspOp truth;
  truth.kind = OpKind::BoolConst;
  lm.base.ops.emplace_back("T", truth);
  CraspOp no;
  no.kind = OpKind::BoolNot;
  no.b1 = BoolRef{"T", 0};
  lm.base.ops.emplace_back("F", no);
  lm.next.emplace_back("a", "F");
  lm.next.emplace_back("b", "F");
  lm.next.emplace_back("EOS", "F");
  validate(lm);
  DecodeResult r = lm_greedy_decode(lm, "a", 8, {"a", "b", "EOS"});
  EXPECT_EQ(r.outcome, DecodeOutcome::Stuck);
  EXPECT_EQ(r.text, "a");
}

}  // namespace
}  // namespace ktc
