// translate.hpp — exact translations between the program and formula views,
// the binary-count elimination, and the counting-normal-form embedding.
//
// crasp_to_kt uses guarded term sets: every count-valued op translates to a
// list of (guard formula, pure count term) cases whose guards cover every
// position and whose terms agree wherever guards overlap (min/max use the
// overlapping <=/>= guard pair; conditionals prefix P̂/¬P̂; add/sub take guard
// cross products; constants are single ⊤-guarded cases).  A comparison op
// disjoins guard pairs: ∨ (g1 ∧ g2 ∧ t1 <= t2).  This reproduces every cell
// of the comparison-shape case table and extends it to arbitrary nesting.
// Term sets are memoized per op name.

#pragma once

#include <string>
#include <vector>

#include "ktc/ast.hpp"
#include "ktc/interp.hpp"

namespace ktc {

// One op per distinct subformula/subterm, dependency ordered; final op is the
// formula's own Boolean. Input must be desugared (Linear nodes allowed).
CraspProgram kt_to_crasp(const FormulaPtr &f, const Alphabet &alphabet);

// End-satisfied by exactly the strings the program accepts.
FormulaPtr crasp_to_kt(const CraspProgram &p);

// ── binary counting ─────────────────────────────────────────────────────────

// Boolean combination over earlier ops/atoms evaluated at i or at j.
struct BinExpr;
using BinExprPtr = std::shared_ptr<const BinExpr>;
struct BinExpr {
  enum Kind : uint8_t { Ref, Not, And, Or } kind;
  BoolRef ref;        // Ref
  char pos = 0;       // Ref: 'i' or 'j'
  BinExprPtr a, b;
};
BinExprPtr bin_ref(BoolRef r, char pos);
BinExprPtr bin_not(BinExprPtr a);
BinExprPtr bin_and(BinExprPtr a, BinExprPtr b);
BinExprPtr bin_or(BinExprPtr a, BinExprPtr b);

// A program whose last declaration is `name(i) := #2[j<=i] F(i,j)`.
struct BinCountProgram {
  CraspProgram base;      // ops preceding the binary count
  std::string name;       // the binary-count op's name
  BinExprPtr body;        // F(i,j)
};

// Lemma-style elimination: DNF-split F, apply inclusion–exclusion on ∨
// (count(F1∨R) = count(F1) + count(R) − count(F1∧R)), then factor each
// conjunctive clause into a count over its j-literals gated by an
// if-then-else on its i-literals. Output is an ordinary program whose op
// `name` has the same count vector at every position.
CraspProgram desugar_binary_count(const BinCountProgram &p);

// ── counting normal form ────────────────────────────────────────────────────

// counted: variable → quantifier-free body (modal depth 0);
// constraints: Σ a_k·x_k + c >= 0 with x_k encoded as Atom(variable) bodies.
struct FocNormalForm {
  Alphabet alphabet;
  std::vector<std::pair<std::string, FormulaPtr>> counted;
  std::vector<LinearComparison> constraints;
};

// Substitutes #[ψ_k] for x_k in the constraint conjunction; emits core-syntax
// comparisons (positive terms vs negative terms). Modal depth is always 1.
FormulaPtr foc_nf_to_kt(const FocNormalForm &nf);

}  // namespace ktc
