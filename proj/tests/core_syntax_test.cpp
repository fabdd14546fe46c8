// core_syntax_test.cpp — grammar, desugaring, modal depth, comparison
// normalization, canonical DNF, and print/parse round trips.

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ktc/ast.hpp"
#include "ktc/harness.hpp"
#include "ktc/interp.hpp"
#include "ktc/parse.hpp"
#include "ktc/passes.hpp"

namespace ktc {
namespace {

Alphabet ab() {
  Alphabet a;
  a.letters = {'a', 'b'};
  return a;
}

FormulaPtr qa() { return mk_atom("a"); }
FormulaPtr qb() { return mk_atom("b"); }

TEST(Parse, LeqShape) {
  FormulaPtr f = parse_kt_sugared("#[Q_a] <= #[Q_b]", ab());
  ASSERT_EQ(f->kind, FKind::Leq);
  EXPECT_TRUE(equal(f, mk_leq(mk_count(qa()), mk_count(qb()))));
  EXPECT_EQ(pretty_print(f), "#[Q_a] <= #[Q_b]");
}

TEST(Parse, CountOfNotTrue) {
  FormulaPtr f = parse_kt_sugared("#[!T] <= #[Q_a]", ab());
  ASSERT_EQ(f->kind, FKind::Leq);
  EXPECT_TRUE(equal(f->c1, mk_count(mk_not(mk_true()))));
  // the defined zero really is zero everywhere
  for (int i = 1; i <= 4; ++i) EXPECT_EQ(eval_count(f->c1, "abab", i), 0);
}

TEST(Parse, EqualityExpandsToTwoLeq) {
  FormulaPtr f = parse_kt("#[Q_a] = 3", ab());
  EXPECT_TRUE(equal(f, desugar(mk_eq(mk_count(qa()), mk_nat(3)))));
  ASSERT_EQ(f->kind, FKind::And);
  EXPECT_EQ(f->f1->kind, FKind::Leq);
  EXPECT_EQ(f->f2->kind, FKind::Leq);
}

TEST(Parse, ChainedRelopsArePairwise) {
  FormulaPtr f = parse_kt_sugared("#[Q_a] <= #[Q_b] <= #[Q_a]", ab());
  FormulaPtr want = mk_and(mk_leq(mk_count(qa()), mk_count(qb())),
                           mk_leq(mk_count(qb()), mk_count(qa())));
  EXPECT_TRUE(equal(f, want));
}

TEST(Parse, ReversedRelopsSwapOperands) {
  EXPECT_TRUE(equal(parse_kt_sugared("#[Q_a] >= #[Q_b]", ab()),
                    mk_leq(mk_count(qb()), mk_count(qa()))));
  EXPECT_TRUE(equal(parse_kt_sugared("#[Q_a] > #[Q_b]", ab()),
                    mk_lt(mk_count(qb()), mk_count(qa()))));
}

TEST(Parse, Precedence) {
  EXPECT_TRUE(equal(parse_kt_sugared("Q_a | Q_b & Q_a", ab()),
                    mk_or(qa(), mk_and(qb(), qa()))));
  EXPECT_TRUE(equal(parse_kt_sugared("!Q_a & Q_b", ab()), mk_and(mk_not(qa()), qb())));
  EXPECT_TRUE(equal(parse_kt_sugared("!(Q_a & Q_b)", ab()), mk_not(mk_and(qa(), qb()))));
}

TEST(Parse, PositionTermIsCountOfTrue) {
  FormulaPtr f = parse_kt("i <= #[Q_a]", ab());
  ASSERT_EQ(f->kind, FKind::Leq);
  EXPECT_TRUE(equal(f->c1, mk_count(mk_true())));
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse_kt("Q_c", ab()), ParseError);
  EXPECT_THROW(parse_kt("#[Q_a", ab()), ParseError);
  EXPECT_THROW(parse_kt("#[Q_a] <= Q_b", ab()), ParseError);  // sort mismatch
  EXPECT_THROW(parse_kt("", ab()), ParseError);
}

TEST(ParseProgram, ScopingAndSorts) {
  Alphabet a = ab();
  EXPECT_THROW(parse_crasp("P(i) := C1(i) <= C2(i)\n", a), Error);  // use before define
  EXPECT_THROW(parse_crasp("C(i) := #[j<=i] Q_a(j)\n", a), Error);  // final op not Boolean
  EXPECT_THROW(parse_crasp("P(i) := Q_a(i)\nS(i) := P(i) + P(i)\nY(i) := Q_a(i)\n", a),
               Error);  // Boolean used as count
}

TEST(ParseProgram, BareOneResolvesBySort) {
  Alphabet a = ab();
  // used as a count operand → the constant count 1
  CraspProgram p1 = parse_crasp(
      "ONE(i) := 1\nCa(i) := #[j<=i] Q_a(j)\nY(i) := ONE(i) <= Ca(i)\n", a);
  EXPECT_EQ(p1.ops[0].second.kind, OpKind::ConstCount);
  EXPECT_EQ(p1.ops[0].second.nat, 1);
  // used as a Boolean (counting body) → the truth constant
  CraspProgram p2 = parse_crasp("T(i) := 1\nC(i) := #[j<=i] T(j)\nY(i) := T(i) & T(i)\n", a);
  EXPECT_EQ(p2.ops[0].second.kind, OpKind::BoolConst);
}

TEST(Desugar, NaturalConstants) {
  EXPECT_TRUE(equal(desugar(mk_nat(3)), mk_add(mk_add(mk_one(), mk_one()), mk_one())));
  EXPECT_TRUE(equal(desugar(mk_nat(0)), mk_count(mk_not(mk_true()))));
  EXPECT_TRUE(equal(desugar(mk_pos_i()), mk_count(mk_true())));
}

TEST(Desugar, DerivedConnectives) {
  FormulaPtr f = desugar(mk_or(qa(), qb()));
  EXPECT_TRUE(equal(f, mk_not(mk_and(mk_not(qa()), mk_not(qb())))));
  CountPtr c1 = mk_count(qa()), c2 = mk_count(qb());
  EXPECT_TRUE(equal(desugar(mk_lt(c1, c2)), mk_not(mk_leq(c2, c1))));
  EXPECT_TRUE(equal(desugar(mk_eq(c1, c2)), mk_and(mk_leq(c1, c2), mk_leq(c2, c1))));
}

TEST(Desugar, Idempotent) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    FormulaPtr f = fuzz_formula(ab(), 2, rng);  // already desugared
    EXPECT_TRUE(is_desugared(f));
    EXPECT_TRUE(equal(desugar(f), f));
  }
}

TEST(ModalDepth, Table) {
  EXPECT_EQ(modal_depth(qa()), 0);
  EXPECT_EQ(modal_depth(parse_kt("#[Q_a] <= #[Q_b]", ab())), 1);
  EXPECT_EQ(modal_depth(desugar(corpus_astar_bstar())), 2);
  EXPECT_EQ(modal_depth(desugar(corpus_astar_bstar_astar())), 3);
  EXPECT_EQ(modal_depth(desugar(corpus_anbncn())), 2);
  EXPECT_EQ(modal_depth(desugar(corpus_dyck1())), 2);
  EXPECT_EQ(modal_depth(desugar(corpus_hello())), 3);
}

TEST(Normalize, LeqBecomesLinear) {
  FormulaPtr f = normalize_comparison(parse_kt("#[Q_a] <= #[Q_b]", ab()));
  ASSERT_EQ(f->kind, FKind::Linear);
  EXPECT_EQ(f->lin.constant, 0);
  ASSERT_EQ(f->lin.terms.size(), 2u);
  for (const auto &[coef, body] : f->lin.terms) {
    if (pretty_print(body) == "Q_a")
      EXPECT_EQ(coef, -1);
    else if (pretty_print(body) == "Q_b")
      EXPECT_EQ(coef, 1);
    else
      FAIL() << "unexpected term " << pretty_print(body);
  }
}

TEST(Normalize, ConstantsFold) {
  FormulaPtr f = normalize_comparison(parse_kt("#[Q_a] + 1 <= #[Q_b]", ab()));
  ASSERT_EQ(f->kind, FKind::Linear);
  EXPECT_EQ(f->lin.constant, -1);
  EXPECT_EQ(f->lin.terms.size(), 2u);
}

TEST(Normalize, EqualTermsCancel) {
  FormulaPtr f = normalize_comparison(parse_kt("#[Q_a] - #[Q_a] <= 1", ab()));
  ASSERT_EQ(f->kind, FKind::Linear);
  EXPECT_TRUE(f->lin.terms.empty());
  EXPECT_EQ(f->lin.constant, 1);
}

TEST(Normalize, EquivalentEverywhere) {
  std::mt19937_64 rng(12);
  std::vector<std::string> words = enumerate_words(ab(), 5);
  for (int k = 0; k < 50; ++k) {
    FormulaPtr f = fuzz_formula(ab(), 2, rng);
    FormulaPtr n = normalize_comparison(f);
    EXPECT_TRUE(is_normalized(n));
    for (const std::string &w : words)
      for (int i = 1; i <= static_cast<int>(w.size()); ++i)
        ASSERT_EQ(eval_formula(n, w, i), eval_formula(f, w, i))
            << pretty_print(f) << " vs " << pretty_print(n) << " on " << w << "@" << i;
  }
}

TEST(Dnf, PinnedShapes) {
  DnfSkeleton conj = to_canonical_dnf(bx_and(bx_var(0), bx_var(1)));
  EXPECT_EQ(conj.num_vars, 2);
  ASSERT_EQ(conj.clauses.size(), 1u);
  EXPECT_EQ(conj.clauses[0].size(), 2u);

  DnfSkeleton disj = to_canonical_dnf(bx_or(bx_var(0), bx_var(1)));
  EXPECT_EQ(disj.clauses.size(), 3u);

  DnfSkeleton neg = to_canonical_dnf(bx_not(bx_var(0)));
  ASSERT_EQ(neg.clauses.size(), 1u);
  EXPECT_EQ(neg.clauses[0][0].var, 0);
  EXPECT_TRUE(neg.clauses[0][0].negated);
}

TEST(Dnf, ExclusiveAndEquivalent) {
  std::mt19937_64 rng(13);
  auto gen = [&](auto &&self, int depth) -> BoolExprPtr {
    int pick = depth <= 0 ? 0 : static_cast<int>(rng() % 5);
    switch (pick) {
      case 1:
        return bx_not(self(self, depth - 1));
      case 2:
        return bx_and(self(self, depth - 1), self(self, depth - 1));
      case 3:
        return bx_or(self(self, depth - 1), self(self, depth - 1));
      case 4:
        return bx_const(rng() % 2 == 0);
      default:
        return bx_var(static_cast<int>(rng() % 4));
    }
  };
  for (int k = 0; k < 100; ++k) {
    BoolExprPtr e = gen(gen, 3);
    DnfSkeleton dnf = to_canonical_dnf(e);
    int nv = dnf.num_vars;
    for (int bits = 0; bits < (1 << nv); ++bits) {
      std::vector<bool> assign(nv);
      for (int v = 0; v < nv; ++v) assign[v] = (bits >> v) & 1;
      int sat = 0;
      for (const auto &clause : dnf.clauses) {
        bool all = true;
        for (const DnfLiteral &lit : clause)
          if (assign[lit.var] == lit.negated) all = false;
        sat += all;
      }
      ASSERT_LE(sat, 1) << "clauses overlap";
      ASSERT_EQ(sat == 1, bx_eval(e, assign));
    }
  }
}

TEST(Dnf, LiteralCap) {
  BoolExprPtr e = bx_var(0);
  for (int v = 1; v < 17; ++v) e = bx_or(e, bx_var(v));
  EXPECT_THROW(to_canonical_dnf(e), Error);
  EXPECT_NO_THROW(to_canonical_dnf(e, 20));
}

TEST(RoundTrip, CorpusFormulas) {
  const struct {
    FormulaPtr f;
    const char *alphabet_id;
  } items[] = {
      {corpus_astar_bstar(), "astar_bstar"},
      {corpus_astar_bstar_astar(), "astar_bstar_astar"},
      {corpus_anbncn(), "anbncn"},
      {corpus_dyck1(), "dyck1"},
      {corpus_hello(), "hello"},
  };
  for (const auto &item : items) {
    Alphabet a = corpus_alphabet(item.alphabet_id);
    FormulaPtr again = parse_kt_sugared(pretty_print(item.f), a);
    EXPECT_TRUE(equal(again, item.f)) << pretty_print(item.f);
  }
}

TEST(RoundTrip, RandomFormulas) {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 1000; ++k) {
    FormulaPtr f = fuzz_formula(ab(), 3, rng);
    FormulaPtr again = parse_kt_sugared(pretty_print(f), ab());
    ASSERT_TRUE(equal(again, f)) << pretty_print(f);
  }
}

TEST(RoundTrip, Programs) {
  std::vector<CraspProgram> programs = {
      corpus_dyck1_program(), corpus_astar_bstar_program(), corpus_astar_bstar_astar_program(),
      corpus_anbncn_program(), corpus_hello_program()};
  std::mt19937_64 rng(15);
  Alphabet a = ab();
  for (int k = 0; k < 200; ++k) programs.push_back(fuzz_crasp(a, 8, rng));
  for (const CraspProgram &p : programs) {
    CraspProgram again = parse_crasp_file(pretty_print(p));
    ASSERT_EQ(pretty_print(again), pretty_print(p));
  }
}

}  // namespace
}  // namespace ktc
