// translate.cpp — program↔formula translations, binary-count elimination,
// and the counting-normal-form embedding.

#include "ktc/translate.hpp"

#include <map>
#include <set>

#include "ktc/passes.hpp"

namespace ktc {

// ── formula → program ───────────────────────────────────────────────────────

namespace {

bool is_true(const FormulaPtr &f) { return f->kind == FKind::True; }
bool is_zero_count(const CountPtr &c) {
  return c->kind == CKind::Count && c->body->kind == FKind::Not && is_true(c->body->f1);
}

// Recognizers for the desugared shapes of = and <, so translated programs use
// single comparison ops the way hand-written ones do.
bool match_eq(const FormulaPtr &f, CountPtr &a, CountPtr &b) {
  if (f->kind != FKind::And || f->f1->kind != FKind::Leq || f->f2->kind != FKind::Leq) return false;
  if (!equal(f->f1->c1, f->f2->c2) || !equal(f->f1->c2, f->f2->c1)) return false;
  a = f->f1->c1;
  b = f->f1->c2;
  return true;
}
bool match_lt(const FormulaPtr &f, CountPtr &a, CountPtr &b) {
  if (f->kind != FKind::Not || f->f1->kind != FKind::Leq) return false;
  // !(x <= y)  ⇔  y < x
  a = f->f1->c2;
  b = f->f1->c1;
  return true;
}

class ToCrasp {
 public:
  explicit ToCrasp(const Alphabet &alphabet) { program_.alphabet = alphabet; }

  CraspProgram run(const FormulaPtr &f) {
    std::string root = boolean(f);
    if (program_.ops.empty() || program_.ops.back().first != root) {
      // root deduplicated into an earlier op: re-expose it as the final op
      CraspOp alias;
      alias.kind = OpKind::BoolAnd;
      alias.b1 = BoolRef{root, 0};
      alias.b2 = BoolRef{root, 0};
      add(alias);
    }
    validate(program_);
    return program_;
  }

 private:
  std::string fresh() { return "t" + std::to_string(++counter_); }

  std::string add(CraspOp op) {
    std::string name = fresh();
    program_.ops.emplace_back(name, std::move(op));
    return name;
  }

  BoolRef ref_for(const FormulaPtr &f) {
    if (f->kind == FKind::Atom && f->atom.size() == 1) return BoolRef{"", f->atom[0]};
    return BoolRef{boolean(f), 0};
  }

  std::string boolean(const FormulaPtr &f) {
    std::string key = pretty_print(f);
    if (auto it = bool_memo_.find(key); it != bool_memo_.end()) return it->second;
    CraspOp op;
    CountPtr a, b;
    if (match_eq(f, a, b)) {
      op.kind = OpKind::Compare;
      op.rel = Rel::Eq;
      op.c1 = count(a);
      op.c2 = count(b);
    } else if (match_lt(f, a, b)) {
      op.kind = OpKind::Compare;
      op.rel = Rel::Lt;
      op.c1 = count(a);
      op.c2 = count(b);
    } else {
      switch (f->kind) {
        case FKind::Atom:
          if (f->atom.size() != 1) throw Error("atom symbol must be a single letter: " + f->atom);
          op.kind = OpKind::Initial;
          op.b1 = BoolRef{"", f->atom[0]};
          break;
        case FKind::True:
          op.kind = OpKind::BoolConst;
          break;
        case FKind::Not:
          op.kind = OpKind::BoolNot;
          op.b1 = ref_for(f->f1);
          break;
        case FKind::And:
          op.kind = OpKind::BoolAnd;
          op.b1 = ref_for(f->f1);
          op.b2 = ref_for(f->f2);
          break;
        case FKind::Leq:
          op.kind = OpKind::Compare;
          op.rel = Rel::Leq;
          op.c1 = count(f->c1);
          op.c2 = count(f->c2);
          break;
        case FKind::Linear:
          return linear(f, key);
        default:
          throw Error("kt_to_crasp requires a desugared formula");
      }
    }
    std::string name = add(std::move(op));
    bool_memo_[key] = name;
    return name;
  }

  std::string count(const CountPtr &c) {
    std::string key = pretty_print(c);
    if (auto it = count_memo_.find(key); it != count_memo_.end()) return it->second;
    CraspOp op;
    if (is_zero_count(c)) {
      op.kind = OpKind::ConstCount;
      op.nat = 0;
    } else {
      switch (c->kind) {
        case CKind::Count:
          op.kind = OpKind::Counting;
          op.b1 = ref_for(c->body);
          break;
        case CKind::One:
          op.kind = OpKind::ConstCount;
          op.nat = 1;
          break;
        case CKind::Add:
          op.kind = OpKind::AddOp;
          op.c1 = count(c->t1);
          op.c2 = count(c->t2);
          break;
        case CKind::Sub:
          op.kind = OpKind::SubOp;
          op.c1 = count(c->t1);
          op.c2 = count(c->t2);
          break;
        default:
          throw Error("kt_to_crasp requires a desugared formula");
      }
    }
    std::string name = add(std::move(op));
    count_memo_[key] = name;
    return name;
  }

  // Σ a_k·#[ψ_k] + c >= 0  ⇔  negative side <= positive side, coefficients
  // expanded through repeated addition.
  std::string linear(const FormulaPtr &f, const std::string &key) {
    CountPtr pos, neg;
    auto accumulate = [](CountPtr &side, const CountPtr &unit, long long copies) {
      for (long long k = 0; k < copies; ++k) side = side ? mk_add(side, unit) : unit;
    };
    for (const auto &[coef, body] : f->lin.terms) {
      CountPtr unit = mk_count(body);
      if (coef > 0)
        accumulate(pos, unit, coef);
      else
        accumulate(neg, unit, -coef);
    }
    if (f->lin.constant > 0) accumulate(pos, mk_one(), f->lin.constant);
    if (f->lin.constant < 0) accumulate(neg, mk_one(), -f->lin.constant);
    if (!pos) pos = mk_count(mk_not(mk_true()));
    if (!neg) neg = mk_count(mk_not(mk_true()));
    CraspOp op;
    op.kind = OpKind::Compare;
    op.rel = Rel::Leq;
    op.c1 = count(neg);
    op.c2 = count(pos);
    std::string name = add(std::move(op));
    bool_memo_[key] = name;
    return name;
  }

  CraspProgram program_;
  int counter_ = 0;
  std::map<std::string, std::string> bool_memo_, count_memo_;
};

}  // namespace

CraspProgram kt_to_crasp(const FormulaPtr &f, const Alphabet &alphabet) {
  return ToCrasp(alphabet).run(f);
}

// ── program → formula ───────────────────────────────────────────────────────

namespace {

// Conjunction that drops redundant ⊤ operands, so translated guards match the
// case-table shapes.
FormulaPtr build_and(const FormulaPtr &a, const FormulaPtr &b) {
  if (is_true(a)) return b;
  if (is_true(b)) return a;
  return mk_and(a, b);
}

// A count-valued op translates to guarded cases: the guards cover every
// position, and wherever two guards overlap the terms agree.
struct GuardedTerm {
  FormulaPtr guard;
  CountPtr term;
};
using GuardedSet = std::vector<GuardedTerm>;

class ToKt {
 public:
  explicit ToKt(const CraspProgram &p) : p_(p) {}

  FormulaPtr run() {
    validate(p_);
    return boolean(p_.ops.back().first);
  }

 private:
  FormulaPtr ref(const BoolRef &r) {
    if (r.is_atom()) return mk_atom(std::string(1, r.atom));
    return boolean(r.name);
  }

  FormulaPtr boolean(const std::string &name) {
    if (auto it = bool_memo_.find(name); it != bool_memo_.end()) return it->second;
    const CraspOp &op = p_.op(name);
    FormulaPtr out;
    switch (op.kind) {
      case OpKind::Initial:
        out = mk_atom(std::string(1, op.b1.atom));
        break;
      case OpKind::BoolNot:
        out = mk_not(ref(op.b1));
        break;
      case OpKind::BoolAnd:
        out = mk_and(ref(op.b1), ref(op.b2));
        break;
      case OpKind::BoolConst:
        out = mk_true();
        break;
      case OpKind::Compare: {
        const GuardedSet &s1 = cases(op.c1);
        const GuardedSet &s2 = cases(op.c2);
        for (const auto &g1 : s1)
          for (const auto &g2 : s2) {
            FormulaPtr cmp;
            switch (op.rel) {
              case Rel::Leq: cmp = mk_leq(g1.term, g2.term); break;
              case Rel::Lt: cmp = mk_lt(g1.term, g2.term); break;
              case Rel::Eq: cmp = mk_eq(g1.term, g2.term); break;
            }
            FormulaPtr cell = build_and(build_and(g1.guard, g2.guard), cmp);
            out = out ? mk_or(out, cell) : cell;
          }
        break;
      }
      default:
        throw Error("operand " + name + " is not Boolean-valued");
    }
    bool_memo_[name] = out;
    return out;
  }

  const GuardedSet &cases(const std::string &name) {
    if (auto it = count_memo_.find(name); it != count_memo_.end()) return it->second;
    const CraspOp &op = p_.op(name);
    GuardedSet out;
    switch (op.kind) {
      case OpKind::Counting:
        out.push_back({mk_true(), mk_count(ref(op.b1))});
        break;
      case OpKind::Conditional: {
        FormulaPtr cond = ref(op.b1);
        for (const auto &g : cases(op.c1)) out.push_back({build_and(cond, g.guard), g.term});
        FormulaPtr ncond = mk_not(cond);
        for (const auto &g : cases(op.c2)) out.push_back({build_and(ncond, g.guard), g.term});
        break;
      }
      case OpKind::AddOp:
      case OpKind::SubOp: {
        for (const auto &g1 : cases(op.c1))
          for (const auto &g2 : cases(op.c2)) {
            CountPtr t = op.kind == OpKind::AddOp ? mk_add(g1.term, g2.term)
                                                  : mk_sub(g1.term, g2.term);
            out.push_back({build_and(g1.guard, g2.guard), t});
          }
        break;
      }
      case OpKind::MinOp:
      case OpKind::MaxOp: {
        // overlapping guards: at t1 = t2 both cases emit the same value
        bool is_min = op.kind == OpKind::MinOp;
        for (const auto &g1 : cases(op.c1))
          for (const auto &g2 : cases(op.c2)) {
            FormulaPtr gg = build_and(g1.guard, g2.guard);
            out.push_back({build_and(gg, mk_leq(g1.term, g2.term)), is_min ? g1.term : g2.term});
            out.push_back({build_and(gg, mk_leq(g2.term, g1.term)), is_min ? g2.term : g1.term});
          }
        break;
      }
      case OpKind::ConstCount:
        out.push_back({mk_true(), mk_nat(op.nat)});
        break;
      default:
        throw Error("operand " + name + " is not count-valued");
    }
    return count_memo_[name] = std::move(out);
  }

  const CraspProgram &p_;
  std::map<std::string, FormulaPtr> bool_memo_;
  std::map<std::string, GuardedSet> count_memo_;
};

}  // namespace

FormulaPtr crasp_to_kt(const CraspProgram &p) { return ToKt(p).run(); }

// ── binary counting ─────────────────────────────────────────────────────────

BinExprPtr bin_ref(BoolRef r, char pos) {
  auto e = std::make_shared<BinExpr>();
  e->kind = BinExpr::Ref;
  e->ref = std::move(r);
  e->pos = pos;
  return e;
}
BinExprPtr bin_not(BinExprPtr a) {
  auto e = std::make_shared<BinExpr>();
  e->kind = BinExpr::Not;
  e->a = std::move(a);
  return e;
}
BinExprPtr bin_and(BinExprPtr a, BinExprPtr b) {
  auto e = std::make_shared<BinExpr>();
  e->kind = BinExpr::And;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
BinExprPtr bin_or(BinExprPtr a, BinExprPtr b) {
  auto e = std::make_shared<BinExpr>();
  e->kind = BinExpr::Or;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

namespace {

// one literal of a conjunctive clause: a reference at i or j, possibly negated
struct BinLit {
  BoolRef ref;
  char pos;
  bool negated;

  std::string key() const {
    return std::string(negated ? "!" : "") + (ref.is_atom() ? "Q_" + std::string(1, ref.atom) : ref.name) +
           "(" + pos + ")";
  }
};
using Clause = std::vector<BinLit>;

std::string clause_key(const Clause &cl) {
  std::string k;
  for (const auto &l : cl) {
    k += l.key();
    k += "&";
  }
  return k;
}

// negation normal form → list of clauses (syntactic distribution, preserving
// the shape the rewrite steps expect — no minterm expansion)
std::vector<Clause> to_dnf(const BinExprPtr &e, bool negated) {
  switch (e->kind) {
    case BinExpr::Ref:
      return {{BinLit{e->ref, e->pos, negated}}};
    case BinExpr::Not:
      return to_dnf(e->a, !negated);
    case BinExpr::And:
    case BinExpr::Or: {
      bool conj = (e->kind == BinExpr::And) != negated;  // De Morgan under negation
      auto da = to_dnf(e->a, negated);
      auto db = to_dnf(e->b, negated);
      if (!conj) {
        for (auto &c : db) da.push_back(std::move(c));
        return da;
      }
      std::vector<Clause> cross;
      for (const auto &ca : da)
        for (const auto &cb : db) {
          Clause merged = ca;
          for (const auto &l : cb) {
            bool dup = false;
            for (const auto &m : merged)
              if (m.key() == l.key()) dup = true;
            if (!dup) merged.push_back(l);
          }
          cross.push_back(std::move(merged));
        }
      return cross;
    }
  }
  throw Error("to_dnf: unreachable");
}

class BinDesugar {
 public:
  explicit BinDesugar(const BinCountProgram &p) : p_(p), out_(p.base) { validate_ops(out_); }

  CraspProgram run() {
    check_refs(p_.body);
    std::vector<Clause> clauses = to_dnf(p_.body, false);
    std::string result = disjunction(clauses);
    // the final op must carry the declared name
    rename_last(result);
    validate_ops(out_);
    return out_;
  }

 private:
  void check_refs(const BinExprPtr &e) {
    switch (e->kind) {
      case BinExpr::Ref:
        if (e->ref.is_atom()) {
          if (!out_.alphabet.contains(e->ref.atom))
            throw Error(std::string("unknown letter Q_") + e->ref.atom + " in binary count");
        } else {
          int k = p_.base.index_of(e->ref.name);
          if (k < 0) throw Error("use-before-define: " + e->ref.name + " in binary count");
          if (op_sort(p_.base.ops[k].second.kind) != OpSort::Boolean)
            throw Error("sort mismatch: " + e->ref.name + " used as Boolean in binary count");
        }
        return;
      case BinExpr::Not:
        check_refs(e->a);
        return;
      default:
        check_refs(e->a);
        check_refs(e->b);
        return;
    }
  }

  std::string fresh() { return p_.name + "$" + std::to_string(++counter_); }

  std::string add(CraspOp op) {
    std::string name = fresh();
    out_.ops.emplace_back(name, std::move(op));
    return name;
  }

  void rename_last(const std::string &current) {
    // `current` names the op computing the binary count; it is always the most
    // recently added one (every path through disjunction/factor ends by adding it)
    if (out_.ops.empty() || out_.ops.back().first != current)
      throw Error("internal: binary-count result is not the final op");
    out_.ops.back().first = p_.name;
    for (auto &[n, op] : out_.ops) {
      (void)n;
      if (op.c1 == current) op.c1 = p_.name;
      if (op.c2 == current) op.c2 = p_.name;
      if (op.b1.name == current) op.b1.name = p_.name;
      if (op.b2.name == current) op.b2.name = p_.name;
    }
  }

  // Boolean op computing the conjunction of literals at one position.
  // Single positive named/atom literal: reuse the reference directly.
  BoolRef lit_conj(const std::vector<BinLit> &lits) {
    if (lits.size() == 1 && !lits[0].negated) return lits[0].ref;
    BoolRef acc;
    for (const auto &l : lits) {
      BoolRef cur = l.ref;
      if (l.negated) {
        CraspOp neg;
        neg.kind = OpKind::BoolNot;
        neg.b1 = cur;
        cur = BoolRef{add(std::move(neg)), 0};
      }
      if (acc.name.empty() && acc.atom == 0) {
        acc = cur;
      } else {
        CraspOp conj;
        conj.kind = OpKind::BoolAnd;
        conj.b1 = acc;
        conj.b2 = cur;
        acc = BoolRef{add(std::move(conj)), 0};
      }
    }
    return acc;
  }

  // count over one conjunctive clause: #[j-literals] gated by i-literals
  std::string factor_clause(const Clause &cl) {
    std::string key = clause_key(cl);
    if (auto it = clause_memo_.find(key); it != clause_memo_.end()) return it->second;
    std::vector<BinLit> at_i, at_j;
    for (const auto &l : cl) (l.pos == 'i' ? at_i : at_j).push_back(l);

    std::string cnt;
    if (at_j.empty()) {
      // no j-dependence: every prefix position qualifies, the count is i
      CraspOp truth;
      truth.kind = OpKind::BoolConst;
      BoolRef all{add(std::move(truth)), 0};
      CraspOp counting;
      counting.kind = OpKind::Counting;
      counting.b1 = all;
      cnt = add(std::move(counting));
    } else {
      CraspOp counting;
      counting.kind = OpKind::Counting;
      counting.b1 = lit_conj(at_j);
      cnt = add(std::move(counting));
    }
    if (!at_i.empty()) {
      CraspOp zero;
      zero.kind = OpKind::ConstCount;
      zero.nat = 0;
      std::string z = add(std::move(zero));
      CraspOp gate;
      gate.kind = OpKind::Conditional;
      gate.b1 = lit_conj(at_i);
      gate.c1 = cnt;
      gate.c2 = z;
      cnt = add(std::move(gate));
    }
    return clause_memo_[key] = cnt;
  }

  // count over a disjunction of clauses via inclusion–exclusion:
  // C(F1 ∨ R) = C(F1) + C(R) − C(F1 ∧ R)
  std::string disjunction(const std::vector<Clause> &clauses) {
    if (clauses.size() == 1) {
      std::string inner = factor_clause(clauses[0]);
      if (out_.ops.empty() || out_.ops.back().first != inner) {
        // memo hit: materialize a fresh final op (count + 0) so renaming works
        CraspOp zero;
        zero.kind = OpKind::ConstCount;
        zero.nat = 0;
        std::string z = add(std::move(zero));
        CraspOp addop;
        addop.kind = OpKind::AddOp;
        addop.c1 = inner;
        addop.c2 = z;
        return add(std::move(addop));
      }
      return inner;
    }
    Clause first = clauses[0];
    std::vector<Clause> rest(clauses.begin() + 1, clauses.end());
    std::string c1 = factor_clause(first);
    std::string c2 = disjunction(rest);
    std::vector<Clause> overlap;
    for (const auto &r : rest) {
      Clause merged = first;
      for (const auto &l : r) {
        bool dup = false;
        for (const auto &m : merged)
          if (m.key() == l.key()) dup = true;
        if (!dup) merged.push_back(l);
      }
      overlap.push_back(std::move(merged));
    }
    std::string c3 = disjunction(overlap);
    CraspOp sum;
    sum.kind = OpKind::AddOp;
    sum.c1 = c1;
    sum.c2 = c2;
    std::string s = add(std::move(sum));
    CraspOp diff;
    diff.kind = OpKind::SubOp;
    diff.c1 = s;
    diff.c2 = c3;
    return add(std::move(diff));
  }

  const BinCountProgram &p_;
  CraspProgram out_;
  int counter_ = 0;
  std::map<std::string, std::string> clause_memo_;
};

}  // namespace

CraspProgram desugar_binary_count(const BinCountProgram &p) { return BinDesugar(p).run(); }

// ── counting normal form ────────────────────────────────────────────────────

FormulaPtr foc_nf_to_kt(const FocNormalForm &nf) {
  if (nf.constraints.empty()) throw Error("normal form needs at least one constraint");
  auto body_of = [&](const std::string &var) -> FormulaPtr {
    for (const auto &[v, f] : nf.counted)
      if (v == var) return f;
    throw Error("constraint references unknown variable " + var);
  };
  FormulaPtr out;
  for (const LinearComparison &con : nf.constraints) {
    CountPtr pos, neg;
    auto extend = [](CountPtr &side, const CountPtr &unit, long long copies) {
      for (long long k = 0; k < copies; ++k) side = side ? mk_add(side, unit) : unit;
    };
    for (const auto &[coef, vf] : con.terms) {
      if (vf->kind != FKind::Atom) throw Error("constraint terms must reference count variables");
      CountPtr unit = mk_count(body_of(vf->atom));
      if (coef > 0)
        extend(pos, unit, coef);
      else
        extend(neg, unit, -coef);
    }
    if (con.constant > 0) extend(pos, mk_one(), con.constant);
    if (con.constant < 0) extend(neg, mk_one(), -con.constant);
    if (!pos) pos = mk_count(mk_not(mk_true()));
    if (!neg) neg = mk_count(mk_not(mk_true()));
    FormulaPtr cmp = mk_leq(neg, pos);
    out = out ? mk_and(out, cmp) : cmp;
  }
  return desugar(out);
}

}  // namespace ktc
