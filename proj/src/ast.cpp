// ast.cpp — constructors, structural equality, program validation,
// pretty-printing.
//
// Printing uses minimal parentheses per the precedence grammar in parse.hpp;
// binary operators are left-associative, so only right operands of equal
// precedence are parenthesized. parse ∘ pretty_print is the identity on
// trees (covered by fuzz tests).

#include "ktc/ast.hpp"

#include <algorithm>
#include <sstream>

namespace ktc {

FormulaPtr mk_atom(std::string symbol) {
  auto n = std::make_shared<Formula>();
  n->kind = FKind::Atom;
  n->atom = std::move(symbol);
  return n;
}
FormulaPtr mk_not(FormulaPtr f) {
  auto n = std::make_shared<Formula>();
  n->kind = FKind::Not;
  n->f1 = std::move(f);
  return n;
}
static FormulaPtr binf(FKind k, FormulaPtr a, FormulaPtr b) {
  auto n = std::make_shared<Formula>();
  n->kind = k;
  n->f1 = std::move(a);
  n->f2 = std::move(b);
  return n;
}
FormulaPtr mk_and(FormulaPtr a, FormulaPtr b) { return binf(FKind::And, std::move(a), std::move(b)); }
FormulaPtr mk_or(FormulaPtr a, FormulaPtr b) { return binf(FKind::Or, std::move(a), std::move(b)); }
FormulaPtr mk_true() {
  auto n = std::make_shared<Formula>();
  n->kind = FKind::True;
  return n;
}
static FormulaPtr cmpf(FKind k, CountPtr a, CountPtr b) {
  auto n = std::make_shared<Formula>();
  n->kind = k;
  n->c1 = std::move(a);
  n->c2 = std::move(b);
  return n;
}
FormulaPtr mk_leq(CountPtr a, CountPtr b) { return cmpf(FKind::Leq, std::move(a), std::move(b)); }
FormulaPtr mk_lt(CountPtr a, CountPtr b) { return cmpf(FKind::Lt, std::move(a), std::move(b)); }
FormulaPtr mk_eq(CountPtr a, CountPtr b) { return cmpf(FKind::Eq, std::move(a), std::move(b)); }
FormulaPtr mk_linear(LinearComparison lin) {
  auto n = std::make_shared<Formula>();
  n->kind = FKind::Linear;
  n->lin = std::move(lin);
  return n;
}

CountPtr mk_count(FormulaPtr body) {
  auto n = std::make_shared<CountTerm>();
  n->kind = CKind::Count;
  n->body = std::move(body);
  return n;
}
static CountPtr binc(CKind k, CountPtr a, CountPtr b) {
  auto n = std::make_shared<CountTerm>();
  n->kind = k;
  n->t1 = std::move(a);
  n->t2 = std::move(b);
  return n;
}
CountPtr mk_add(CountPtr a, CountPtr b) { return binc(CKind::Add, std::move(a), std::move(b)); }
CountPtr mk_sub(CountPtr a, CountPtr b) { return binc(CKind::Sub, std::move(a), std::move(b)); }
CountPtr mk_one() {
  auto n = std::make_shared<CountTerm>();
  n->kind = CKind::One;
  return n;
}
CountPtr mk_nat(long long n) {
  if (n < 0) throw Error("natural constant expected, got " + std::to_string(n));
  if (n == 1) return mk_one();
  auto t = std::make_shared<CountTerm>();
  t->kind = CKind::Nat;
  t->nat = n;
  return t;
}
CountPtr mk_pos_i() {
  auto n = std::make_shared<CountTerm>();
  n->kind = CKind::PosI;
  return n;
}

LinearComparison linear_comparison(std::vector<std::pair<long long, FormulaPtr>> terms,
                                   long long constant) {
  // merge structurally equal bodies, drop zero coefficients, sort by print
  std::vector<std::pair<long long, FormulaPtr>> merged;
  for (auto &t : terms) {
    bool found = false;
    for (auto &m : merged)
      if (equal(m.second, t.second)) {
        m.first += t.first;
        found = true;
        break;
      }
    if (!found) merged.push_back(t);
  }
  std::erase_if(merged, [](const auto &m) { return m.first == 0; });
  std::sort(merged.begin(), merged.end(), [](const auto &x, const auto &y) {
    return pretty_print(x.second) < pretty_print(y.second);
  });
  LinearComparison lin;
  lin.terms = std::move(merged);
  lin.constant = constant;
  return lin;
}

// ── equality ────────────────────────────────────────────────────────────────

bool equal(const CountPtr &a, const CountPtr &b);

bool equal(const FormulaPtr &a, const FormulaPtr &b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case FKind::Atom:
      return a->atom == b->atom;
    case FKind::True:
      return true;
    case FKind::Not:
      return equal(a->f1, b->f1);
    case FKind::And:
    case FKind::Or:
      return equal(a->f1, b->f1) && equal(a->f2, b->f2);
    case FKind::Leq:
    case FKind::Lt:
    case FKind::Eq:
      return equal(a->c1, b->c1) && equal(a->c2, b->c2);
    case FKind::Linear: {
      if (a->lin.constant != b->lin.constant || a->lin.terms.size() != b->lin.terms.size())
        return false;
      for (size_t k = 0; k < a->lin.terms.size(); ++k)
        if (a->lin.terms[k].first != b->lin.terms[k].first ||
            !equal(a->lin.terms[k].second, b->lin.terms[k].second))
          return false;
      return true;
    }
  }
  return false;
}

bool equal(const CountPtr &a, const CountPtr &b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case CKind::Count:
      return equal(a->body, b->body);
    case CKind::Add:
    case CKind::Sub:
      return equal(a->t1, b->t1) && equal(a->t2, b->t2);
    case CKind::One:
    case CKind::PosI:
      return true;
    case CKind::Nat:
      return a->nat == b->nat;
  }
  return false;
}

// ── programs ────────────────────────────────────────────────────────────────

OpSort op_sort(OpKind k) {
  switch (k) {
    case OpKind::Initial:
    case OpKind::BoolNot:
    case OpKind::BoolAnd:
    case OpKind::Compare:
    case OpKind::BoolConst:
      return OpSort::Boolean;
    default:
      return OpSort::Count;
  }
}

static void check_bool_ref(const CraspProgram &p, size_t upto, const BoolRef &r,
                           const std::string &at) {
  if (r.is_atom()) {
    if (!p.alphabet.contains(r.atom))
      throw Error("unknown letter Q_" + std::string(1, r.atom) + " in " + at);
    return;
  }
  for (size_t k = 0; k < upto; ++k)
    if (p.ops[k].first == r.name) {
      if (op_sort(p.ops[k].second.kind) != OpSort::Boolean)
        throw Error("sort mismatch: " + r.name + " used as Boolean in " + at);
      return;
    }
  throw Error("use-before-define: " + r.name + " in " + at);
}

static void check_count_ref(const CraspProgram &p, size_t upto, const std::string &name,
                            const std::string &at) {
  for (size_t k = 0; k < upto; ++k)
    if (p.ops[k].first == name) {
      if (op_sort(p.ops[k].second.kind) != OpSort::Count)
        throw Error("sort mismatch: " + name + " used as count in " + at);
      return;
    }
  throw Error("use-before-define: " + name + " in " + at);
}

void validate_ops(const CraspProgram &p) {
  for (size_t k = 0; k < p.ops.size(); ++k) {
    const auto &[name, op] = p.ops[k];
    for (size_t j = 0; j < k; ++j)
      if (p.ops[j].first == name) throw Error("duplicate operation name: " + name);
    switch (op.kind) {
      case OpKind::Initial:
        if (!p.alphabet.contains(op.b1.atom))
          throw Error("unknown letter Q_" + std::string(1, op.b1.atom) + " in " + name);
        break;
      case OpKind::BoolNot:
      case OpKind::Counting:
        check_bool_ref(p, k, op.b1, name);
        break;
      case OpKind::BoolAnd:
        check_bool_ref(p, k, op.b1, name);
        check_bool_ref(p, k, op.b2, name);
        break;
      case OpKind::Compare:
        check_count_ref(p, k, op.c1, name);
        check_count_ref(p, k, op.c2, name);
        break;
      case OpKind::BoolConst:
        break;
      case OpKind::Conditional:
        check_bool_ref(p, k, op.b1, name);
        check_count_ref(p, k, op.c1, name);
        check_count_ref(p, k, op.c2, name);
        break;
      case OpKind::AddOp:
      case OpKind::SubOp:
      case OpKind::MinOp:
      case OpKind::MaxOp:
        check_count_ref(p, k, op.c1, name);
        check_count_ref(p, k, op.c2, name);
        break;
      case OpKind::ConstCount:
        if (op.nat < 0) throw Error("negative count constant in " + name);
        break;
    }
  }
}

void validate(const CraspProgram &p) {
  if (p.ops.empty()) throw Error("program has no operations");
  validate_ops(p);
  if (op_sort(p.ops.back().second.kind) != OpSort::Boolean)
    throw Error("final operation " + p.ops.back().first + " is not Boolean-valued");
}

// ── pretty printing ─────────────────────────────────────────────────────────

namespace {

// formula levels: 0 disj, 1 conj, 2 unary, 3 cmp; count levels: 0 sum, 1 primary
void pf(std::ostream &os, const FormulaPtr &f, int level);

void pc(std::ostream &os, const CountPtr &c, int level) {
  switch (c->kind) {
    case CKind::Count:
      os << "#[";
      pf(os, c->body, 0);
      os << "]";
      break;
    case CKind::Add:
    case CKind::Sub: {
      bool paren = level > 0;
      if (paren) os << "(";
      pc(os, c->t1, 0);
      os << (c->kind == CKind::Add ? " + " : " - ");
      pc(os, c->t2, 1);
      if (paren) os << ")";
      break;
    }
    case CKind::One:
      os << "1";
      break;
    case CKind::Nat:
      os << c->nat;
      break;
    case CKind::PosI:
      os << "i";
      break;
  }
}

void print_lincomb(std::ostream &os, const LinearComparison &lin) {
  bool first = true;
  for (const auto &[coef, body] : lin.terms) {
    long long mag = coef < 0 ? -coef : coef;
    if (first)
      os << (coef < 0 ? "-" : "");
    else
      os << (coef < 0 ? " - " : " + ");
    if (mag != 1) os << mag << "*";
    os << "#[";
    pf(os, body, 0);
    os << "]";
    first = false;
  }
  if (lin.constant != 0 || first) {
    long long c = lin.constant;
    if (first)
      os << c;
    else
      os << (c < 0 ? " - " : " + ") << (c < 0 ? -c : c);
  }
}

void pf(std::ostream &os, const FormulaPtr &f, int level) {
  switch (f->kind) {
    case FKind::Or: {
      bool paren = level > 0;
      if (paren) os << "(";
      pf(os, f->f1, 0);
      os << " | ";
      pf(os, f->f2, 1);
      if (paren) os << ")";
      break;
    }
    case FKind::And: {
      bool paren = level > 1;
      if (paren) os << "(";
      pf(os, f->f1, 1);
      os << " & ";
      pf(os, f->f2, 2);
      if (paren) os << ")";
      break;
    }
    case FKind::Not:
      os << "!";
      pf(os, f->f1, 2);
      break;
    case FKind::Leq:
    case FKind::Lt:
    case FKind::Eq: {
      bool paren = level > 3;
      if (paren) os << "(";
      pc(os, f->c1, 0);
      os << (f->kind == FKind::Leq ? " <= " : f->kind == FKind::Lt ? " < " : " = ");
      pc(os, f->c2, 0);
      if (paren) os << ")";
      break;
    }
    case FKind::Linear:
      os << "lin(";
      print_lincomb(os, f->lin);
      os << ")";
      break;
    case FKind::Atom:
      os << "Q_" << f->atom;
      break;
    case FKind::True:
      os << "T";
      break;
  }
}

void print_bool_ref(std::ostream &os, const BoolRef &r, char pos) {
  if (r.is_atom())
    os << "Q_" << r.atom;
  else
    os << r.name;
  os << "(" << pos << ")";
}

}  // namespace

std::string pretty_print(const FormulaPtr &f) {
  std::ostringstream os;
  pf(os, f, 0);
  return os.str();
}

std::string pretty_print(const CountPtr &c) {
  std::ostringstream os;
  pc(os, c, 0);
  return os.str();
}

std::string pretty_print(const CraspProgram &p) {
  std::ostringstream os;
  os << "alphabet:";
  for (char l : p.alphabet.letters) os << " " << l;
  os << "\n";
  for (const auto &[name, op] : p.ops) {
    os << name << "(i) := ";
    switch (op.kind) {
      case OpKind::Initial:
        os << "Q_" << op.b1.atom << "(i)";
        break;
      case OpKind::BoolNot:
        os << "!";
        print_bool_ref(os, op.b1, 'i');
        break;
      case OpKind::BoolAnd:
        print_bool_ref(os, op.b1, 'i');
        os << " & ";
        print_bool_ref(os, op.b2, 'i');
        break;
      case OpKind::Compare:
        os << op.c1 << "(i) " << (op.rel == Rel::Leq ? "<=" : op.rel == Rel::Lt ? "<" : "=")
           << " " << op.c2 << "(i)";
        break;
      case OpKind::BoolConst:
        os << "1";
        break;
      case OpKind::Counting:
        os << "#[j<=i] ";
        print_bool_ref(os, op.b1, 'j');
        break;
      case OpKind::Conditional:
        os << "if ";
        print_bool_ref(os, op.b1, 'i');
        os << " then " << op.c1 << "(i) else " << op.c2 << "(i)";
        break;
      case OpKind::AddOp:
        os << op.c1 << "(i) + " << op.c2 << "(i)";
        break;
      case OpKind::SubOp:
        os << op.c1 << "(i) - " << op.c2 << "(i)";
        break;
      case OpKind::MinOp:
        os << "min(" << op.c1 << "(i), " << op.c2 << "(i))";
        break;
      case OpKind::MaxOp:
        os << "max(" << op.c1 << "(i), " << op.c2 << "(i))";
        break;
      case OpKind::ConstCount:
        os << op.nat;
        break;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace ktc
