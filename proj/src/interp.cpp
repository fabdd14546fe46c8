// interp.cpp — reference semantics for formulas, programs, and greedy LMs.
//
// These evaluators are the ground truth the rest of the project is tested
// against, so they favor direct transcription of the definitions over speed:
// eval_formula recomputes subcounts instead of memoizing.

#include "ktc/interp.hpp"

#include <algorithm>

namespace ktc {

bool eval_formula(const FormulaPtr &f, const std::string &w, int i) {
  if (i < 1 || i > static_cast<int>(w.size())) throw PositionError(i, static_cast<int>(w.size()));
  switch (f->kind) {
    case FKind::Atom:
      return f->atom.size() == 1 && w[i - 1] == f->atom[0];
    case FKind::True:
      return true;
    case FKind::Not:
      return !eval_formula(f->f1, w, i);
    case FKind::And:
      return eval_formula(f->f1, w, i) && eval_formula(f->f2, w, i);
    case FKind::Or:
      return eval_formula(f->f1, w, i) || eval_formula(f->f2, w, i);
    case FKind::Leq:
      return eval_count(f->c1, w, i) <= eval_count(f->c2, w, i);
    case FKind::Lt:
      return eval_count(f->c1, w, i) < eval_count(f->c2, w, i);
    case FKind::Eq:
      return eval_count(f->c1, w, i) == eval_count(f->c2, w, i);
    case FKind::Linear: {
      long long acc = f->lin.constant;
      for (const auto &[coef, body] : f->lin.terms) {
        long long n = 0;
        for (int j = 1; j <= i; ++j)
          if (eval_formula(body, w, j)) ++n;
        acc += coef * n;
      }
      return acc >= 0;
    }
  }
  throw Error("eval_formula: unreachable");
}

long long eval_count(const CountPtr &c, const std::string &w, int i) {
  if (i < 1 || i > static_cast<int>(w.size())) throw PositionError(i, static_cast<int>(w.size()));
  switch (c->kind) {
    case CKind::Count: {
      long long n = 0;
      for (int j = 1; j <= i; ++j)
        if (eval_formula(c->body, w, j)) ++n;
      return n;
    }
    case CKind::Add:
      return eval_count(c->t1, w, i) + eval_count(c->t2, w, i);
    case CKind::Sub:
      return eval_count(c->t1, w, i) - eval_count(c->t2, w, i);
    case CKind::One:
      return 1;
    case CKind::Nat:
      return c->nat;
    case CKind::PosI:
      return i;
  }
  throw Error("eval_count: unreachable");
}

bool end_satisfies(const FormulaPtr &f, const std::string &w) {
  if (w.empty()) throw EmptyWordError();
  return eval_formula(f, w, static_cast<int>(w.size()));
}

// ── program execution ───────────────────────────────────────────────────────

namespace {

const std::vector<bool> &bool_operand(const CraspTrace &tr, const CraspProgram &p,
                                      const std::string &w, const BoolRef &r,
                                      std::vector<bool> &scratch) {
  if (r.is_atom()) {
    scratch.assign(w.size(), false);
    for (size_t k = 0; k < w.size(); ++k) scratch[k] = (w[k] == r.atom);
    return scratch;
  }
  auto it = tr.bools.find(r.name);
  if (it == tr.bools.end()) throw Error("operand " + r.name + " is not Boolean-valued");
  (void)p;
  return it->second;
}

const std::vector<long long> &count_operand(const CraspTrace &tr, const std::string &name) {
  auto it = tr.ints.find(name);
  if (it == tr.ints.end()) throw Error("operand " + name + " is not count-valued");
  return it->second;
}

}  // namespace

CraspTrace run_crasp(const CraspProgram &p, const std::string &w) {
  validate_ops(p);
  CraspTrace tr;
  const size_t n = w.size();
  std::vector<bool> scratch;
  for (const auto &[name, op] : p.ops) {
    switch (op.kind) {
      case OpKind::Initial: {
        std::vector<bool> v(n);
        for (size_t k = 0; k < n; ++k) v[k] = (w[k] == op.b1.atom);
        tr.bools[name] = std::move(v);
        break;
      }
      case OpKind::BoolNot: {
        const auto &a = bool_operand(tr, p, w, op.b1, scratch);
        std::vector<bool> v(n);
        for (size_t k = 0; k < n; ++k) v[k] = !a[k];
        tr.bools[name] = std::move(v);
        break;
      }
      case OpKind::BoolAnd: {
        std::vector<bool> a = bool_operand(tr, p, w, op.b1, scratch);
        const auto &b = bool_operand(tr, p, w, op.b2, scratch);
        std::vector<bool> v(n);
        for (size_t k = 0; k < n; ++k) v[k] = a[k] && b[k];
        tr.bools[name] = std::move(v);
        break;
      }
      case OpKind::Compare: {
        const auto &a = count_operand(tr, op.c1);
        const auto &b = count_operand(tr, op.c2);
        std::vector<bool> v(n);
        for (size_t k = 0; k < n; ++k)
          v[k] = op.rel == Rel::Leq ? a[k] <= b[k] : op.rel == Rel::Lt ? a[k] < b[k] : a[k] == b[k];
        tr.bools[name] = std::move(v);
        break;
      }
      case OpKind::BoolConst:
        tr.bools[name] = std::vector<bool>(n, true);
        break;
      case OpKind::Counting: {
        const auto &a = bool_operand(tr, p, w, op.b1, scratch);
        std::vector<long long> v(n);
        long long acc = 0;
        for (size_t k = 0; k < n; ++k) {
          if (a[k]) ++acc;
          v[k] = acc;
        }
        tr.ints[name] = std::move(v);
        break;
      }
      case OpKind::Conditional: {
        const auto &cond = bool_operand(tr, p, w, op.b1, scratch);
        const auto &a = count_operand(tr, op.c1);
        const auto &b = count_operand(tr, op.c2);
        std::vector<long long> v(n);
        for (size_t k = 0; k < n; ++k) v[k] = cond[k] ? a[k] : b[k];
        tr.ints[name] = std::move(v);
        break;
      }
      case OpKind::AddOp:
      case OpKind::SubOp:
      case OpKind::MinOp:
      case OpKind::MaxOp: {
        const auto &a = count_operand(tr, op.c1);
        const auto &b = count_operand(tr, op.c2);
        std::vector<long long> v(n);
        for (size_t k = 0; k < n; ++k) {
          switch (op.kind) {
            case OpKind::AddOp: v[k] = a[k] + b[k]; break;
            case OpKind::SubOp: v[k] = a[k] - b[k]; break;
            case OpKind::MinOp: v[k] = std::min(a[k], b[k]); break;
            default: v[k] = std::max(a[k], b[k]); break;
          }
        }
        tr.ints[name] = std::move(v);
        break;
      }
      case OpKind::ConstCount:
        tr.ints[name] = std::vector<long long>(n, op.nat);
        break;
    }
  }
  return tr;
}

bool crasp_accepts(const CraspProgram &p, const std::string &w) {
  if (w.empty()) throw EmptyWordError();
  validate(p);
  CraspTrace tr = run_crasp(p, w);
  return tr.bools.at(p.ops.back().first).back();
}

// ── language models ─────────────────────────────────────────────────────────

const std::string &LmProgram::predicate_for(const std::string &symbol) const {
  for (const auto &[sym, op] : next)
    if (sym == symbol) return op;
  throw Error("no next-symbol predicate for " + symbol);
}

void validate(const LmProgram &lm) {
  validate_ops(lm.base);
  std::vector<std::string> expected;
  for (char c : lm.base.alphabet.letters) expected.emplace_back(1, c);
  expected.emplace_back("EOS");
  for (const auto &sym : expected) {
    int found = 0;
    for (const auto &[s, op] : lm.next)
      if (s == sym) ++found;
    if (found != 1)
      throw Error("LM must declare exactly one next-predicate for " + sym + ", found " +
                  std::to_string(found));
  }
  if (lm.next.size() != expected.size())
    throw Error("LM declares a next-predicate for a symbol outside the alphabet");
  for (const auto &[sym, opname] : lm.next) {
    int k = lm.base.index_of(opname);
    if (k < 0) throw Error("next " + sym + " references unknown operation " + opname);
    if (op_sort(lm.base.ops[k].second.kind) != OpSort::Boolean)
      throw Error("next " + sym + " references a count-valued operation");
  }
}

bool lm_assigns_nonzero(const LmProgram &lm, const std::string &w) {
  if (w.empty()) throw EmptyWordError();
  CraspTrace tr = run_crasp(lm.base, w);
  auto holds = [&](const std::string &opname, size_t pos0) {
    auto it = tr.bools.find(opname);
    if (it == tr.bools.end()) throw Error("operand " + opname + " is not Boolean-valued");
    return it->second[pos0];
  };
  for (size_t i = 0; i + 1 < w.size(); ++i)
    if (!holds(lm.predicate_for(std::string(1, w[i + 1])), i)) return false;
  return holds(lm.predicate_for("EOS"), w.size() - 1);
}

DecodeResult lm_greedy_decode(const LmProgram &lm, const std::string &prompt, int max_steps,
                              const std::vector<std::string> &tie_break) {
  if (prompt.empty()) throw EmptyWordError();
  // tie_break must mention every letter and EOS exactly once
  {
    std::vector<std::string> expected;
    for (char c : lm.base.alphabet.letters) expected.emplace_back(1, c);
    expected.emplace_back("EOS");
    if (tie_break.size() != expected.size())
      throw Error("tie-break order must list every letter plus EOS");
    for (const auto &sym : expected) {
      if (std::count(tie_break.begin(), tie_break.end(), sym) != 1)
        throw Error("tie-break order must mention " + sym + " exactly once");
    }
  }
  DecodeResult res;
  res.text = prompt;
  for (;;) {
    if (static_cast<int>(res.text.size()) >= max_steps) {
      res.outcome = DecodeOutcome::MaxSteps;
      return res;
    }
    CraspTrace tr = run_crasp(lm.base, res.text);
    const std::string *chosen = nullptr;
    for (const auto &sym : tie_break) {
      const std::string &opname = lm.predicate_for(sym);
      if (tr.bools.at(opname).back()) {
        chosen = &sym;
        break;
      }
    }
    if (!chosen) {
      res.outcome = DecodeOutcome::Stuck;
      return res;
    }
    if (*chosen == "EOS") {
      res.outcome = DecodeOutcome::Eos;
      return res;
    }
    res.text += (*chosen)[0];
  }
}

std::vector<std::string> default_tie_break(const Alphabet &alphabet) {
  std::vector<std::string> order;
  for (char c : alphabet.letters) order.emplace_back(1, c);
  order.emplace_back("EOS");
  return order;
}

}  // namespace ktc
