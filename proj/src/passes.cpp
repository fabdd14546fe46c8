// passes.cpp — sugar expansion, modal depth, comparison normalization into
// linear form, and canonical DNF over dimension literals.

#include "ktc/passes.hpp"

#include <map>

namespace ktc {

// ── desugar ─────────────────────────────────────────────────────────────────

CountPtr desugar(const CountPtr &c) {
  switch (c->kind) {
    case CKind::Count:
      return mk_count(desugar(c->body));
    case CKind::Add:
      return mk_add(desugar(c->t1), desugar(c->t2));
    case CKind::Sub:
      return mk_sub(desugar(c->t1), desugar(c->t2));
    case CKind::One:
      return c;
    case CKind::Nat: {
      if (c->nat == 0) return mk_count(mk_not(mk_true()));
      CountPtr acc = mk_one();
      for (long long k = 1; k < c->nat; ++k) acc = mk_add(acc, mk_one());
      return acc;
    }
    case CKind::PosI:
      return mk_count(mk_true());
  }
  throw Error("desugar: unreachable");
}

FormulaPtr desugar(const FormulaPtr &f) {
  switch (f->kind) {
    case FKind::Atom:
    case FKind::True:
      return f;
    case FKind::Not:
      return mk_not(desugar(f->f1));
    case FKind::And:
      return mk_and(desugar(f->f1), desugar(f->f2));
    case FKind::Or:
      return mk_not(mk_and(mk_not(desugar(f->f1)), mk_not(desugar(f->f2))));
    case FKind::Leq:
      return mk_leq(desugar(f->c1), desugar(f->c2));
    case FKind::Lt:
      return mk_not(mk_leq(desugar(f->c2), desugar(f->c1)));
    case FKind::Eq: {
      CountPtr a = desugar(f->c1), b = desugar(f->c2);
      return mk_and(mk_leq(a, b), mk_leq(b, a));
    }
    case FKind::Linear: {
      LinearComparison lin = f->lin;
      for (auto &t : lin.terms) t.second = desugar(t.second);
      return mk_linear(linear_comparison(lin.terms, lin.constant));
    }
  }
  throw Error("desugar: unreachable");
}

static bool is_desugared_count(const CountPtr &c) {
  switch (c->kind) {
    case CKind::Count:
      return is_desugared(c->body);
    case CKind::Add:
    case CKind::Sub:
      return is_desugared_count(c->t1) && is_desugared_count(c->t2);
    case CKind::One:
      return true;
    default:
      return false;
  }
}

bool is_desugared(const FormulaPtr &f) {
  switch (f->kind) {
    case FKind::Atom:
    case FKind::True:
      return true;
    case FKind::Not:
      return is_desugared(f->f1);
    case FKind::And:
      return is_desugared(f->f1) && is_desugared(f->f2);
    case FKind::Leq:
      return is_desugared_count(f->c1) && is_desugared_count(f->c2);
    case FKind::Linear:
      for (const auto &t : f->lin.terms)
        if (!is_desugared(t.second)) return false;
      return true;
    default:
      return false;
  }
}

// ── modal depth ─────────────────────────────────────────────────────────────

int modal_depth(const CountPtr &c) {
  switch (c->kind) {
    case CKind::Count:
      return 1 + modal_depth(c->body);
    case CKind::Add:
    case CKind::Sub:
      return std::max(modal_depth(c->t1), modal_depth(c->t2));
    case CKind::One:
      return 0;
    default:
      throw Error("modal_depth: input must be desugared");
  }
}

int modal_depth(const FormulaPtr &f) {
  switch (f->kind) {
    case FKind::Atom:
    case FKind::True:
      return 0;
    case FKind::Not:
      return modal_depth(f->f1);
    case FKind::And:
      return std::max(modal_depth(f->f1), modal_depth(f->f2));
    case FKind::Leq:
      return std::max(modal_depth(f->c1), modal_depth(f->c2));
    case FKind::Linear: {
      int d = 0;
      for (const auto &t : f->lin.terms) d = std::max(d, modal_depth(t.second));
      return 1 + d;
    }
    default:
      throw Error("modal_depth: input must be desugared");
  }
}

// ── comparison normalization ────────────────────────────────────────────────

namespace {

// Accumulates sign · c into (terms, constant) form.
void accumulate(const CountPtr &c, long long sign,
                std::vector<std::pair<long long, FormulaPtr>> &terms, long long &constant) {
  switch (c->kind) {
    case CKind::Count:
      terms.emplace_back(sign, normalize_comparison(c->body));
      break;
    case CKind::Add:
      accumulate(c->t1, sign, terms, constant);
      accumulate(c->t2, sign, terms, constant);
      break;
    case CKind::Sub:
      accumulate(c->t1, sign, terms, constant);
      accumulate(c->t2, -sign, terms, constant);
      break;
    case CKind::One:
      constant += sign;
      break;
    default:
      throw Error("normalize_comparison: input must be desugared");
  }
}

}  // namespace

FormulaPtr normalize_comparison(const FormulaPtr &f) {
  switch (f->kind) {
    case FKind::Atom:
    case FKind::True:
      return f;
    case FKind::Not:
      return mk_not(normalize_comparison(f->f1));
    case FKind::And:
      return mk_and(normalize_comparison(f->f1), normalize_comparison(f->f2));
    case FKind::Leq: {
      // C1 <= C2  ⇔  C2 − C1 >= 0
      std::vector<std::pair<long long, FormulaPtr>> terms;
      long long constant = 0;
      accumulate(f->c2, +1, terms, constant);
      accumulate(f->c1, -1, terms, constant);
      return mk_linear(linear_comparison(std::move(terms), constant));
    }
    case FKind::Linear: {
      LinearComparison lin = f->lin;
      for (auto &t : lin.terms) t.second = normalize_comparison(t.second);
      return mk_linear(linear_comparison(lin.terms, lin.constant));
    }
    default:
      throw Error("normalize_comparison: input must be desugared");
  }
}

bool is_normalized(const FormulaPtr &f) {
  switch (f->kind) {
    case FKind::Atom:
    case FKind::True:
      return true;
    case FKind::Not:
      return is_normalized(f->f1);
    case FKind::And:
      return is_normalized(f->f1) && is_normalized(f->f2);
    case FKind::Linear:
      for (const auto &t : f->lin.terms)
        if (!is_normalized(t.second)) return false;
      return true;
    default:
      return false;
  }
}

// ── Boolean expressions / canonical DNF ─────────────────────────────────────

BoolExprPtr bx_var(int v) {
  auto e = std::make_shared<BoolExpr>();
  e->kind = BoolExpr::Var;
  e->var = v;
  return e;
}
BoolExprPtr bx_not(BoolExprPtr a) {
  auto e = std::make_shared<BoolExpr>();
  e->kind = BoolExpr::Not;
  e->a = std::move(a);
  return e;
}
BoolExprPtr bx_and(BoolExprPtr a, BoolExprPtr b) {
  auto e = std::make_shared<BoolExpr>();
  e->kind = BoolExpr::And;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
BoolExprPtr bx_or(BoolExprPtr a, BoolExprPtr b) {
  auto e = std::make_shared<BoolExpr>();
  e->kind = BoolExpr::Or;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
BoolExprPtr bx_const(bool v) {
  auto e = std::make_shared<BoolExpr>();
  e->kind = BoolExpr::Const;
  e->cval = v;
  return e;
}

bool bx_eval(const BoolExprPtr &e, const std::vector<bool> &assignment) {
  switch (e->kind) {
    case BoolExpr::Var:
      if (e->var < 0 || e->var >= static_cast<int>(assignment.size()))
        throw Error("bx_eval: literal index out of range");
      return assignment[e->var];
    case BoolExpr::Not:
      return !bx_eval(e->a, assignment);
    case BoolExpr::And:
      return bx_eval(e->a, assignment) && bx_eval(e->b, assignment);
    case BoolExpr::Or:
      return bx_eval(e->a, assignment) || bx_eval(e->b, assignment);
    case BoolExpr::Const:
      return e->cval;
  }
  throw Error("bx_eval: unreachable");
}

int bx_max_var(const BoolExprPtr &e) {
  switch (e->kind) {
    case BoolExpr::Var:
      return e->var;
    case BoolExpr::Not:
      return bx_max_var(e->a);
    case BoolExpr::And:
    case BoolExpr::Or:
      return std::max(bx_max_var(e->a), bx_max_var(e->b));
    case BoolExpr::Const:
      return -1;
  }
  return -1;
}

DnfSkeleton to_canonical_dnf(const BoolExprPtr &e, int literal_cap) {
  int num_vars = bx_max_var(e) + 1;
  if (num_vars > literal_cap)
    throw Error("canonical DNF over " + std::to_string(num_vars) +
                " literals exceeds the cap of " + std::to_string(literal_cap));
  DnfSkeleton dnf;
  dnf.num_vars = num_vars;
  std::vector<bool> assignment(num_vars);
  for (uint64_t mask = 0; mask < (uint64_t{1} << num_vars); ++mask) {
    for (int v = 0; v < num_vars; ++v) assignment[v] = (mask >> v) & 1;
    if (!bx_eval(e, assignment)) continue;
    std::vector<DnfLiteral> clause;
    clause.reserve(num_vars);
    for (int v = 0; v < num_vars; ++v) clause.push_back({v, !assignment[v]});
    dnf.clauses.push_back(std::move(clause));
  }
  return dnf;
}

}  // namespace ktc
