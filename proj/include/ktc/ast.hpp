// ast.hpp — syntax trees for counting formulas and C-RASP programs.
//
// Design notes:
//
//   Formula / CountTerm are immutable trees held by shared_ptr<const ...>.
//   Two layers of constructors coexist in one node type:
//     - core:   Atom, Not, And, Leq, True  /  Count, Add, Sub, One
//     - sugar:  Or, Lt, Eq                 /  Nat(n), PosI           (removed by desugar)
//     - Linear: comparison in Σ a_k·#[ψ_k] + c >= 0 form            (introduced by
//               normalize_comparison; the compiler consumes only this shape)
//   Equality is structural; dedup maps key on pretty_print output, which is
//   canonical for these trees (parse ∘ pretty_print = identity).
//
//   CraspProgram is an ordered list of named operations, each one row of the
//   operation tables: Boolean-valued {Initial, Not, And, Compare, Const-true}
//   and count-valued {Counting, Conditional, Add, Sub, Min, Max, Const}.
//   Operands reference earlier ops by name; Boolean operands may also be
//   implicit atoms Q_a. Compare carries its relation (<=, <, =); < and = are
//   derived from <= where the core table is needed.

#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ktc {

// ── errors ──────────────────────────────────────────────────────────────────

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse failure with 1-indexed source position.
struct ParseError : Error {
  int line, col;
  ParseError(const std::string &msg, int line_, int col_)
      : Error(msg + " (line " + std::to_string(line_) + ", col " + std::to_string(col_) + ")"),
        line(line_), col(col_) {}
};

// Acceptance and end-satisfaction are undefined at the empty word.
struct EmptyWordError : Error {
  EmptyWordError() : Error("empty word: acceptance is defined only for |w| >= 1") {}
};

// ── alphabet ────────────────────────────────────────────────────────────────

struct Alphabet {
  std::vector<char> letters;  // declaration order; single-character symbols

  bool contains(char c) const {
    for (char l : letters)
      if (l == c) return true;
    return false;
  }
  int index(char c) const {
    for (size_t k = 0; k < letters.size(); ++k)
      if (letters[k] == c) return static_cast<int>(k);
    return -1;
  }
  bool operator==(const Alphabet &o) const { return letters == o.letters; }
};

// ── formulas and count terms ────────────────────────────────────────────────

struct Formula;
struct CountTerm;
using FormulaPtr = std::shared_ptr<const Formula>;
using CountPtr = std::shared_ptr<const CountTerm>;

enum class FKind : uint8_t { Atom, Not, And, Leq, True, Or, Lt, Eq, Linear };
enum class CKind : uint8_t { Count, Add, Sub, One, Nat, PosI };

// Σ terms[k].first · #[terms[k].second] + constant >= 0.
// Bodies pairwise structurally distinct, coefficients nonzero, terms sorted by
// pretty-printed body (see linear_comparison() builder).
struct LinearComparison {
  std::vector<std::pair<long long, FormulaPtr>> terms;
  long long constant = 0;
};

struct Formula {
  FKind kind;
  std::string atom;     // Atom: symbol (alphabet letter; FOC variables in constraint context)
  FormulaPtr f1, f2;    // Not: f1;  And/Or: f1,f2
  CountPtr c1, c2;      // Leq/Lt/Eq
  LinearComparison lin; // Linear
};

struct CountTerm {
  CKind kind;
  FormulaPtr body;   // Count
  CountPtr t1, t2;   // Add/Sub
  long long nat = 0; // Nat
};

FormulaPtr mk_atom(std::string symbol);
FormulaPtr mk_not(FormulaPtr f);
FormulaPtr mk_and(FormulaPtr a, FormulaPtr b);
FormulaPtr mk_or(FormulaPtr a, FormulaPtr b);
FormulaPtr mk_true();
FormulaPtr mk_leq(CountPtr a, CountPtr b);
FormulaPtr mk_lt(CountPtr a, CountPtr b);
FormulaPtr mk_eq(CountPtr a, CountPtr b);
FormulaPtr mk_linear(LinearComparison lin);

CountPtr mk_count(FormulaPtr body);
CountPtr mk_add(CountPtr a, CountPtr b);
CountPtr mk_sub(CountPtr a, CountPtr b);
CountPtr mk_one();
CountPtr mk_nat(long long n);
CountPtr mk_pos_i();

// Merges duplicate bodies, drops zero coefficients, sorts terms by printed body.
LinearComparison linear_comparison(std::vector<std::pair<long long, FormulaPtr>> terms,
                                   long long constant);

bool equal(const FormulaPtr &a, const FormulaPtr &b);
bool equal(const CountPtr &a, const CountPtr &b);

// ── C-RASP programs ─────────────────────────────────────────────────────────

enum class OpKind : uint8_t {
  Initial,      // Q_a(i)
  BoolNot,      // !B(i)
  BoolAnd,      // B1(i) & B2(i)
  Compare,      // C1(i) rel C2(i)
  BoolConst,    // 1  (true)
  Counting,     // #[j<=i] B(j)
  Conditional,  // if B(i) then C1(i) else C2(i)
  AddOp,        // C1(i) + C2(i)
  SubOp,        // C1(i) - C2(i)
  MinOp,        // min(C1(i), C2(i))
  MaxOp,        // max(C1(i), C2(i))
  ConstCount,   // c
};

enum class Rel : uint8_t { Leq, Lt, Eq };
enum class OpSort : uint8_t { Boolean, Count };

// Boolean operand: a named earlier op, or an implicit atom Q_a.
struct BoolRef {
  std::string name;  // empty iff atom reference
  char atom = 0;
  bool is_atom() const { return name.empty(); }
};

struct CraspOp {
  OpKind kind;
  BoolRef b1, b2;      // BoolNot/Counting: b1; BoolAnd: b1,b2; Conditional condition: b1
  std::string c1, c2;  // count operand names
  Rel rel = Rel::Leq;  // Compare
  long long nat = 0;   // ConstCount
};

OpSort op_sort(OpKind k);

struct CraspProgram {
  Alphabet alphabet;
  std::vector<std::pair<std::string, CraspOp>> ops;

  int index_of(const std::string &name) const {
    for (size_t k = 0; k < ops.size(); ++k)
      if (ops[k].first == name) return static_cast<int>(k);
    return -1;
  }
  const CraspOp &op(const std::string &name) const {
    int k = index_of(name);
    if (k < 0) throw Error("unknown operation: " + name);
    return ops[k].second;
  }
};

// Checks the program invariants: unique names, use-before-define, operand
// sorts, atoms in alphabet, final op Boolean-valued. Throws Error.
void validate(const CraspProgram &p);

// Same row-level checks, but the program may be empty and its last op may be
// count-valued (contexts where the program is not itself an acceptor: the base
// of a binary-count definition, or the result of eliminating one).
void validate_ops(const CraspProgram &p);

// ── DNF skeletons ───────────────────────────────────────────────────────────

// Canonical (minterm) DNF over a fixed literal universe 0..num_vars-1: every
// clause mentions every variable, so at most one clause is true per assignment.
struct DnfLiteral {
  int var;
  bool negated;
};
struct DnfSkeleton {
  int num_vars = 0;
  std::vector<std::vector<DnfLiteral>> clauses;
};

// ── pretty printing ─────────────────────────────────────────────────────────

std::string pretty_print(const FormulaPtr &f);
std::string pretty_print(const CountPtr &c);
std::string pretty_print(const CraspProgram &p);  // includes the alphabet header line

}  // namespace ktc
