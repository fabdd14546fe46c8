// passes.hpp — desugaring, modal depth, comparison normalization, canonical DNF.

#pragma once

#include <memory>

#include "ktc/ast.hpp"

namespace ktc {

// Expands sugar to core constructors: Nat(n) → One+…+One (n≥1, left-assoc),
// Nat(0) → #[!T], PosI → #[T], C1<C2 → !(C2<=C1), C1=C2 → (C1<=C2)&(C2<=C1),
// A|B → !(!A & !B).  Core nodes pass through (Linear included).
FormulaPtr desugar(const FormulaPtr &f);
CountPtr desugar(const CountPtr &c);
bool is_desugared(const FormulaPtr &f);

// Maximum #[·] nesting. Linear nodes count as one level over their deepest
// term body (zero if no terms). Inputs must be desugared.
int modal_depth(const FormulaPtr &f);
int modal_depth(const CountPtr &c);

// Replaces every Leq with a Linear node: C1 <= C2 becomes the merged,
// constant-folded Σ a_k·#[ψ_k] + c >= 0 over C2 − C1. Term bodies are
// normalized recursively. Input must be desugared.
FormulaPtr normalize_comparison(const FormulaPtr &f);
bool is_normalized(const FormulaPtr &f);

// ── Boolean expressions over dimension literals ─────────────────────────────

struct BoolExpr;
using BoolExprPtr = std::shared_ptr<const BoolExpr>;
struct BoolExpr {
  enum Kind : uint8_t { Var, Not, And, Or, Const } kind;
  int var = 0;  // Var: literal index
  bool cval = false;
  BoolExprPtr a, b;
};
BoolExprPtr bx_var(int v);
BoolExprPtr bx_not(BoolExprPtr a);
BoolExprPtr bx_and(BoolExprPtr a, BoolExprPtr b);
BoolExprPtr bx_or(BoolExprPtr a, BoolExprPtr b);
BoolExprPtr bx_const(bool v);
bool bx_eval(const BoolExprPtr &e, const std::vector<bool> &assignment);
int bx_max_var(const BoolExprPtr &e);  // -1 if none

// Canonical (minterm) DNF over variables 0..num_vars-1 where
// num_vars = bx_max_var+1. Throws Error when num_vars exceeds the cap.
DnfSkeleton to_canonical_dnf(const BoolExprPtr &e, int literal_cap = 16);

}  // namespace ktc
