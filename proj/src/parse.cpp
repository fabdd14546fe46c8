// parse.cpp — lexer and recursive-descent parsers for the surface syntaxes
// described in parse.hpp.
//
// Formulas are parsed into an untyped expression tree first; sorts are
// resolved afterwards (relops/+/- force count operands, &,|,! force Boolean).
// Program, LM, and normal-form files are line-oriented.

#include "ktc/parse.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "ktc/passes.hpp"

namespace ktc {

namespace {

// ── lexer ───────────────────────────────────────────────────────────────────

enum class Tok : uint8_t {
  Ident, Atom, Nat, Hash, Hash2, LParen, RParen, RBracket, Bang, Amp, Pipe,
  Plus, Minus, Star, Comma, Assign, Leq, Lt, Geq, Gt, Eq, End,
};

struct Token {
  Tok kind;
  std::string text;   // Ident name / Atom symbol
  long long nat = 0;  // Nat
  int line = 1, col = 1;
};

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9') || c == '$'; }
bool alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

std::vector<Token> tokenize(const std::string &src, int first_line) {
  std::vector<Token> out;
  size_t p = 0;
  int line = first_line, col = 1;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[p] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++p;
    }
  };
  auto push = [&](Tok k, std::string text, int l, int c) {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.line = l;
    t.col = c;
    out.push_back(std::move(t));
  };
  while (p < src.size()) {
    char c = src[p];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    int tl = line, tc = col;
    if (c == '#') {
      if (p + 1 < src.size() && src[p + 1] == '[') {
        push(Tok::Hash, "#[", tl, tc);
        advance(2);
        continue;
      }
      if (p + 2 < src.size() && src[p + 1] == '2' && src[p + 2] == '[') {
        push(Tok::Hash2, "#2[", tl, tc);
        advance(3);
        continue;
      }
      while (p < src.size() && src[p] != '\n') advance(1);
      continue;
    }
    if (c == 'Q' && p + 1 < src.size() && src[p + 1] == '_') {
      advance(2);
      if (p >= src.size() || src[p] == ' ' || src[p] == '\t' || src[p] == '\r' || src[p] == '\n')
        throw ParseError("symbol expected after Q_", tl, tc);
      std::string sym;
      if (alnum(src[p])) {
        while (p < src.size() && alnum(src[p])) {
          sym += src[p];
          advance(1);
        }
      } else {
        sym += src[p];
        advance(1);
      }
      push(Tok::Atom, sym, tl, tc);
      continue;
    }
    if (ident_start(c)) {
      std::string name;
      while (p < src.size() && ident_char(src[p])) {
        name += src[p];
        advance(1);
      }
      push(Tok::Ident, std::move(name), tl, tc);
      continue;
    }
    if (c >= '0' && c <= '9') {
      long long v = 0;
      while (p < src.size() && src[p] >= '0' && src[p] <= '9') {
        v = v * 10 + (src[p] - '0');
        if (v > 1000000000) throw ParseError("numeric constant too large", tl, tc);
        advance(1);
      }
      Token t;
      t.kind = Tok::Nat;
      t.nat = v;
      t.line = tl;
      t.col = tc;
      out.push_back(t);
      continue;
    }
    auto two = [&](char second) { return p + 1 < src.size() && src[p + 1] == second; };
    switch (c) {
      case '(': push(Tok::LParen, "(", tl, tc); advance(1); continue;
      case ')': push(Tok::RParen, ")", tl, tc); advance(1); continue;
      case ']': push(Tok::RBracket, "]", tl, tc); advance(1); continue;
      case '=': push(Tok::Eq, "=", tl, tc); advance(1); continue;
      case '!': push(Tok::Bang, "!", tl, tc); advance(1); continue;
      case '&': push(Tok::Amp, "&", tl, tc); advance(1); continue;
      case '|': push(Tok::Pipe, "|", tl, tc); advance(1); continue;
      case '+': push(Tok::Plus, "+", tl, tc); advance(1); continue;
      case '-': push(Tok::Minus, "-", tl, tc); advance(1); continue;
      case '*': push(Tok::Star, "*", tl, tc); advance(1); continue;
      case ',': push(Tok::Comma, ",", tl, tc); advance(1); continue;
      case ':':
        if (!two('=')) throw ParseError("':' must begin ':='", tl, tc);
        push(Tok::Assign, ":=", tl, tc);
        advance(2);
        continue;
      case '<':
        if (two('=')) {
          push(Tok::Leq, "<=", tl, tc);
          advance(2);
        } else {
          push(Tok::Lt, "<", tl, tc);
          advance(1);
        }
        continue;
      case '>':
        if (two('=')) {
          push(Tok::Geq, ">=", tl, tc);
          advance(2);
        } else {
          push(Tok::Gt, ">", tl, tc);
          advance(1);
        }
        continue;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", tl, tc);
    }
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

struct TokenStream {
  std::vector<Token> toks;
  size_t k = 0;

  const Token &peek(size_t ahead = 0) const {
    size_t idx = std::min(k + ahead, toks.size() - 1);
    return toks[idx];
  }
  const Token &take() {
    const Token &t = toks[k];
    if (t.kind != Tok::End) ++k;
    return t;
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool eat(Tok kind) {
    if (!at(kind)) return false;
    take();
    return true;
  }
  const Token &expect(Tok kind, const char *what) {
    if (!at(kind)) {
      const Token &t = peek();
      throw ParseError(std::string("expected ") + what, t.line, t.col);
    }
    return take();
  }
  [[noreturn]] void fail(const std::string &msg) const {
    const Token &t = peek();
    throw ParseError(msg, t.line, t.col);
  }
};

bool is_relop(Tok k) {
  return k == Tok::Leq || k == Tok::Lt || k == Tok::Geq || k == Tok::Gt || k == Tok::Eq;
}

// ── untyped expression tree (sorts resolved after parsing) ──────────────────

struct UExpr;
using UPtr = std::shared_ptr<UExpr>;
struct UExpr {
  enum K : uint8_t { Or, And, Not, Rel, Add, Sub, TrueK, AtomK, CountK, NatK, PosIK, LinK } k;
  int line = 1, col = 1;
  UPtr a, b;                    // Or/And/Not/Add/Sub
  std::vector<UPtr> operands;   // Rel chain
  std::vector<Tok> rels;        // Rel chain operators
  std::string sym;              // AtomK
  long long nat = 0;            // NatK
  UPtr body;                    // CountK
  std::vector<std::pair<long long, UPtr>> lterms;  // LinK
  long long lconst = 0;                            // LinK
};

UPtr unode(UExpr::K k, const Token &at) {
  auto u = std::make_shared<UExpr>();
  u->k = k;
  u->line = at.line;
  u->col = at.col;
  return u;
}

class FormulaParser {
 public:
  FormulaParser(TokenStream &ts, const Alphabet &alphabet) : ts_(ts), alphabet_(alphabet) {}

  UPtr disj() {
    UPtr lhs = conj();
    while (ts_.at(Tok::Pipe)) {
      const Token &t = ts_.take();
      UPtr n = unode(UExpr::Or, t);
      n->a = lhs;
      n->b = conj();
      lhs = n;
    }
    return lhs;
  }

  FormulaPtr to_formula(const UPtr &u) {
    switch (u->k) {
      case UExpr::Or:
        return mk_or(to_formula(u->a), to_formula(u->b));
      case UExpr::And:
        return mk_and(to_formula(u->a), to_formula(u->b));
      case UExpr::Not:
        return mk_not(to_formula(u->a));
      case UExpr::Rel: {
        FormulaPtr acc;
        for (size_t r = 0; r < u->rels.size(); ++r) {
          CountPtr lhs = to_count(u->operands[r]);
          CountPtr rhs = to_count(u->operands[r + 1]);
          FormulaPtr cmp;
          switch (u->rels[r]) {
            case Tok::Leq: cmp = mk_leq(lhs, rhs); break;
            case Tok::Lt: cmp = mk_lt(lhs, rhs); break;
            case Tok::Eq: cmp = mk_eq(lhs, rhs); break;
            case Tok::Geq: cmp = mk_leq(rhs, lhs); break;
            default: cmp = mk_lt(rhs, lhs); break;  // Gt
          }
          acc = acc ? mk_and(acc, cmp) : cmp;
        }
        return acc;
      }
      case UExpr::TrueK:
        return mk_true();
      case UExpr::AtomK: {
        if (u->sym.size() != 1 || !alphabet_.contains(u->sym[0]))
          throw ParseError("unknown letter Q_" + u->sym, u->line, u->col);
        return mk_atom(u->sym);
      }
      case UExpr::LinK: {
        std::vector<std::pair<long long, FormulaPtr>> terms;
        for (const auto &[coef, b] : u->lterms) terms.emplace_back(coef, to_formula(b));
        return mk_linear(linear_comparison(std::move(terms), u->lconst));
      }
      default:
        throw ParseError("count expression where a formula is required", u->line, u->col);
    }
  }

  CountPtr to_count(const UPtr &u) {
    switch (u->k) {
      case UExpr::Add:
        return mk_add(to_count(u->a), to_count(u->b));
      case UExpr::Sub:
        return mk_sub(to_count(u->a), to_count(u->b));
      case UExpr::CountK:
        return mk_count(to_formula(u->body));
      case UExpr::NatK:
        return mk_nat(u->nat);
      case UExpr::PosIK:
        return mk_pos_i();
      default:
        throw ParseError("Boolean expression where a count is required", u->line, u->col);
    }
  }

 private:
  UPtr conj() {
    UPtr lhs = unary();
    while (ts_.at(Tok::Amp)) {
      const Token &t = ts_.take();
      UPtr n = unode(UExpr::And, t);
      n->a = lhs;
      n->b = unary();
      lhs = n;
    }
    return lhs;
  }

  UPtr unary() {
    if (ts_.at(Tok::Bang)) {
      const Token &t = ts_.take();
      UPtr n = unode(UExpr::Not, t);
      n->a = unary();
      return n;
    }
    return cmp();
  }

  UPtr cmp() {
    UPtr first = sum();
    if (!is_relop(ts_.peek().kind)) return first;
    UPtr n = unode(UExpr::Rel, ts_.peek());
    n->operands.push_back(first);
    while (is_relop(ts_.peek().kind)) {
      n->rels.push_back(ts_.take().kind);
      n->operands.push_back(sum());
    }
    return n;
  }

  UPtr sum() {
    UPtr lhs = primary();
    while (ts_.at(Tok::Plus) || ts_.at(Tok::Minus)) {
      const Token &t = ts_.take();
      UPtr n = unode(t.kind == Tok::Plus ? UExpr::Add : UExpr::Sub, t);
      n->a = lhs;
      n->b = primary();
      lhs = n;
    }
    return lhs;
  }

  UPtr primary() {
    const Token &t = ts_.peek();
    switch (t.kind) {
      case Tok::Ident: {
        if (t.text == "T") {
          ts_.take();
          return unode(UExpr::TrueK, t);
        }
        if (t.text == "i") {
          ts_.take();
          return unode(UExpr::PosIK, t);
        }
        if (t.text == "lin") {
          ts_.take();
          return lin_form(t);
        }
        ts_.fail("unexpected identifier '" + t.text + "' in formula");
      }
      case Tok::Atom: {
        ts_.take();
        UPtr n = unode(UExpr::AtomK, t);
        n->sym = t.text;
        return n;
      }
      case Tok::Hash: {
        ts_.take();
        UPtr n = unode(UExpr::CountK, t);
        n->body = disj();
        ts_.expect(Tok::RBracket, "']' closing #[");
        return n;
      }
      case Tok::Nat: {
        ts_.take();
        UPtr n = unode(UExpr::NatK, t);
        n->nat = t.nat;
        return n;
      }
      case Tok::LParen: {
        ts_.take();
        UPtr inner = disj();
        ts_.expect(Tok::RParen, "')'");
        return inner;
      }
      default:
        ts_.fail("expected a formula or count term");
    }
  }

  // lin( ['-'] sterm (('+'|'-') sterm)* ) with sterm ::= NAT '*' '#['f']' | '#['f']' | NAT
  UPtr lin_form(const Token &at) {
    ts_.expect(Tok::LParen, "'(' after lin");
    UPtr n = unode(UExpr::LinK, at);
    long long sign = 1;
    if (ts_.eat(Tok::Minus)) sign = -1;
    for (;;) {
      if (ts_.at(Tok::Nat)) {
        long long v = ts_.take().nat;
        if (ts_.eat(Tok::Star)) {
          ts_.expect(Tok::Hash, "'#[' after coefficient");
          UPtr body = disj();
          ts_.expect(Tok::RBracket, "']'");
          n->lterms.emplace_back(sign * v, body);
        } else {
          n->lconst += sign * v;
        }
      } else if (ts_.at(Tok::Hash)) {
        ts_.take();
        UPtr body = disj();
        ts_.expect(Tok::RBracket, "']'");
        n->lterms.emplace_back(sign, body);
      } else {
        ts_.fail("expected a linear term");
      }
      if (ts_.eat(Tok::Plus)) {
        sign = 1;
      } else if (ts_.eat(Tok::Minus)) {
        sign = -1;
      } else {
        break;
      }
    }
    ts_.expect(Tok::RParen, "')' closing lin");
    return n;
  }

  TokenStream &ts_;
  const Alphabet &alphabet_;
};

// ── line utilities ──────────────────────────────────────────────────────────

// '#' starts a comment unless it begins '#[' or '#2['.
std::string strip_comment(const std::string &line) {
  for (size_t p = 0; p < line.size(); ++p) {
    if (line[p] != '#') continue;
    if (p + 1 < line.size() && line[p + 1] == '[') continue;
    if (p + 2 < line.size() && line[p + 1] == '2' && line[p + 2] == '[') continue;
    return line.substr(0, p);
  }
  return line;
}

std::string trim(const std::string &s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Line {
  int number;
  std::string text;  // comment-stripped, trimmed, nonempty
};

std::vector<Line> logical_lines(const std::string &text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  int num = 0;
  while (std::getline(in, raw)) {
    ++num;
    std::string t = trim(strip_comment(raw));
    if (!t.empty()) out.push_back({num, std::move(t)});
  }
  return out;
}

std::vector<std::string> split_ws(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Alphabet parse_alphabet_line(const Line &line) {
  auto parts = split_ws(line.text);
  if (parts.empty() || parts[0] != "alphabet:") {
    if (parts.size() >= 2 && parts[0] == "alphabet" && parts[1] == ":")
      parts.erase(parts.begin());  // tolerate "alphabet :"
    else
      throw ParseError("expected 'alphabet:' header", line.number, 1);
  }
  Alphabet a;
  for (size_t k = 1; k < parts.size(); ++k) {
    if (parts[k].size() != 1)
      throw ParseError("alphabet symbols are single characters, got '" + parts[k] + "'",
                       line.number, 1);
    char c = parts[k][0];
    if (a.contains(c))
      throw ParseError(std::string("duplicate alphabet symbol '") + c + "'", line.number, 1);
    a.letters.push_back(c);
  }
  if (a.letters.empty()) throw ParseError("alphabet must list at least one symbol", line.number, 1);
  return a;
}

// ── program line parsing ────────────────────────────────────────────────────

BoolRef parse_bool_ref(TokenStream &ts, char pos) {
  BoolRef r;
  if (ts.at(Tok::Atom)) {
    const Token &t = ts.take();
    if (t.text.size() != 1) throw ParseError("unknown letter Q_" + t.text, t.line, t.col);
    r.atom = t.text[0];
  } else {
    const Token &t = ts.expect(Tok::Ident, "operation name or Q_ letter");
    r.name = t.text;
  }
  ts.expect(Tok::LParen, "'('");
  const Token &p = ts.expect(Tok::Ident, "position variable");
  if (p.text != std::string(1, pos))
    throw ParseError(std::string("expected position (") + pos + ")", p.line, p.col);
  ts.expect(Tok::RParen, "')'");
  return r;
}

std::string parse_count_operand(TokenStream &ts) {
  if (ts.at(Tok::Atom)) ts.fail("count operand must be a named operation");
  const Token &t = ts.expect(Tok::Ident, "operation name");
  ts.expect(Tok::LParen, "'(i)'");
  const Token &p = ts.expect(Tok::Ident, "position variable");
  if (p.text != "i") throw ParseError("expected position (i)", p.line, p.col);
  ts.expect(Tok::RParen, "')'");
  return t.text;
}

struct ProgramBuilder {
  CraspProgram program;
  std::set<std::string> ambiguous_one;  // names defined by a bare `1`

  void add(const std::string &name, CraspOp op) { program.ops.emplace_back(name, std::move(op)); }

  void finish() {
    // A bare `1` is Boolean truth unless the name is used as a count operand.
    for (auto &[name, op] : program.ops) {
      if (op.kind != OpKind::BoolConst || !ambiguous_one.count(name)) continue;
      bool used_as_count = false;
      for (const auto &[n2, o2] : program.ops)
        if (o2.c1 == name || o2.c2 == name) used_as_count = true;
      if (used_as_count) {
        op.kind = OpKind::ConstCount;
        op.nat = 1;
      }
    }
  }
};

// One definition line: `name(i) := rhs`. Returns false if the line is a
// binary-count definition (caller decides whether those are allowed).
bool parse_program_line(const Line &line, ProgramBuilder &b) {
  TokenStream ts{tokenize(line.text, line.number)};
  const Token &nt = ts.expect(Tok::Ident, "operation name");
  std::string name = nt.text;
  ts.expect(Tok::LParen, "'(i)' after operation name");
  const Token &pv = ts.expect(Tok::Ident, "position variable");
  if (pv.text != "i") throw ParseError("operation definitions bind position (i)", pv.line, pv.col);
  ts.expect(Tok::RParen, "')'");
  ts.expect(Tok::Assign, "':='");

  CraspOp op;
  const Token &t = ts.peek();
  switch (t.kind) {
    case Tok::Hash: {
      ts.take();
      const Token &j = ts.expect(Tok::Ident, "'j'");
      if (j.text != "j") throw ParseError("counting binds j<=i", j.line, j.col);
      ts.expect(Tok::Leq, "'<='");
      const Token &iv = ts.expect(Tok::Ident, "'i'");
      if (iv.text != "i") throw ParseError("counting binds j<=i", iv.line, iv.col);
      ts.expect(Tok::RBracket, "']'");
      op.kind = OpKind::Counting;
      op.b1 = parse_bool_ref(ts, 'j');
      break;
    }
    case Tok::Hash2:
      return false;
    case Tok::Bang: {
      ts.take();
      op.kind = OpKind::BoolNot;
      op.b1 = parse_bool_ref(ts, 'i');
      break;
    }
    case Tok::Nat: {
      ts.take();
      if (t.nat == 1) {
        op.kind = OpKind::BoolConst;
        b.ambiguous_one.insert(name);
      } else {
        op.kind = OpKind::ConstCount;
        op.nat = t.nat;
      }
      break;
    }
    case Tok::Ident:
    case Tok::Atom: {
      if (t.kind == Tok::Ident && (t.text == "min" || t.text == "max")) {
        bool is_min = t.text == "min";
        ts.take();
        ts.expect(Tok::LParen, "'('");
        op.kind = is_min ? OpKind::MinOp : OpKind::MaxOp;
        op.c1 = parse_count_operand(ts);
        ts.expect(Tok::Comma, "','");
        op.c2 = parse_count_operand(ts);
        ts.expect(Tok::RParen, "')'");
        break;
      }
      if (t.kind == Tok::Ident && t.text == "if") {
        ts.take();
        op.kind = OpKind::Conditional;
        op.b1 = parse_bool_ref(ts, 'i');
        const Token &th = ts.expect(Tok::Ident, "'then'");
        if (th.text != "then") throw ParseError("expected 'then'", th.line, th.col);
        op.c1 = parse_count_operand(ts);
        const Token &el = ts.expect(Tok::Ident, "'else'");
        if (el.text != "else") throw ParseError("expected 'else'", el.line, el.col);
        op.c2 = parse_count_operand(ts);
        break;
      }
      // first operand reference, shape decided by the following operator
      size_t mark = ts.k;
      BoolRef first = parse_bool_ref(ts, 'i');
      const Token &next = ts.peek();
      if (next.kind == Tok::End) {
        if (!first.is_atom())
          throw ParseError("an operation cannot be a bare alias of another", next.line, next.col);
        op.kind = OpKind::Initial;
        op.b1 = first;
        break;
      }
      if (next.kind == Tok::Amp) {
        ts.take();
        op.kind = OpKind::BoolAnd;
        op.b1 = first;
        op.b2 = parse_bool_ref(ts, 'i');
        break;
      }
      if (next.kind == Tok::Pipe) {
        ts.take();
        BoolRef second = parse_bool_ref(ts, 'i');
        ts.expect(Tok::End, "end of line");
        // B1 | B2 expands through De Morgan into auxiliary operations.
        CraspOp n1, n2, a3, o4;
        n1.kind = OpKind::BoolNot;
        n1.b1 = first;
        n2.kind = OpKind::BoolNot;
        n2.b1 = second;
        a3.kind = OpKind::BoolAnd;
        a3.b1 = BoolRef{name + "$1", 0};
        a3.b2 = BoolRef{name + "$2", 0};
        o4.kind = OpKind::BoolNot;
        o4.b1 = BoolRef{name + "$3", 0};
        b.add(name + "$1", n1);
        b.add(name + "$2", n2);
        b.add(name + "$3", a3);
        b.add(name, o4);
        return true;
      }
      if (next.kind == Tok::Plus || next.kind == Tok::Minus || is_relop(next.kind)) {
        // count operands: reparse the first reference as a name
        ts.k = mark;
        std::string c1 = parse_count_operand(ts);
        const Token &o = ts.take();
        std::string c2 = parse_count_operand(ts);
        if (o.kind == Tok::Plus) {
          op.kind = OpKind::AddOp;
          op.c1 = c1;
          op.c2 = c2;
        } else if (o.kind == Tok::Minus) {
          op.kind = OpKind::SubOp;
          op.c1 = c1;
          op.c2 = c2;
        } else {
          op.kind = OpKind::Compare;
          switch (o.kind) {
            case Tok::Leq: op.rel = Rel::Leq; op.c1 = c1; op.c2 = c2; break;
            case Tok::Lt: op.rel = Rel::Lt; op.c1 = c1; op.c2 = c2; break;
            case Tok::Eq: op.rel = Rel::Eq; op.c1 = c1; op.c2 = c2; break;
            case Tok::Geq: op.rel = Rel::Leq; op.c1 = c2; op.c2 = c1; break;
            default: op.rel = Rel::Lt; op.c1 = c2; op.c2 = c1; break;  // Gt
          }
        }
        break;
      }
      throw ParseError("expected an operator after the first operand", next.line, next.col);
    }
    default:
      ts.fail("unrecognized operation form");
  }
  ts.expect(Tok::End, "end of line");
  b.add(name, op);
  return true;
}

// ── binary-count expression ─────────────────────────────────────────────────

class BinParser {
 public:
  explicit BinParser(TokenStream &ts) : ts_(ts) {}

  BinExprPtr bor() {
    BinExprPtr lhs = band();
    while (ts_.eat(Tok::Pipe)) lhs = bin_or(lhs, band());
    return lhs;
  }

 private:
  BinExprPtr band() {
    BinExprPtr lhs = bunary();
    while (ts_.eat(Tok::Amp)) lhs = bin_and(lhs, bunary());
    return lhs;
  }
  BinExprPtr bunary() {
    if (ts_.eat(Tok::Bang)) return bin_not(bunary());
    return bprimary();
  }
  BinExprPtr bprimary() {
    if (ts_.eat(Tok::LParen)) {
      BinExprPtr inner = bor();
      ts_.expect(Tok::RParen, "')'");
      return inner;
    }
    BoolRef r;
    if (ts_.at(Tok::Atom)) {
      const Token &t = ts_.take();
      if (t.text.size() != 1) throw ParseError("unknown letter Q_" + t.text, t.line, t.col);
      r.atom = t.text[0];
    } else {
      const Token &t = ts_.expect(Tok::Ident, "operation name or Q_ letter");
      r.name = t.text;
    }
    ts_.expect(Tok::LParen, "'('");
    const Token &p = ts_.expect(Tok::Ident, "position variable i or j");
    if (p.text != "i" && p.text != "j")
      throw ParseError("position must be i or j", p.line, p.col);
    ts_.expect(Tok::RParen, "')'");
    return bin_ref(r, p.text[0]);
  }

  TokenStream &ts_;
};

void check_bin_refs(const BinExprPtr &e, const CraspProgram &base) {
  switch (e->kind) {
    case BinExpr::Ref:
      if (e->ref.is_atom()) {
        if (!base.alphabet.contains(e->ref.atom))
          throw Error(std::string("unknown letter Q_") + e->ref.atom + " in binary count");
      } else {
        int k = base.index_of(e->ref.name);
        if (k < 0) throw Error("use-before-define: " + e->ref.name + " in binary count");
        if (op_sort(base.ops[k].second.kind) != OpSort::Boolean)
          throw Error("sort mismatch: " + e->ref.name + " used as Boolean in binary count");
      }
      return;
    case BinExpr::Not:
      check_bin_refs(e->a, base);
      return;
    case BinExpr::And:
    case BinExpr::Or:
      check_bin_refs(e->a, base);
      check_bin_refs(e->b, base);
      return;
  }
}

}  // namespace

// ── public entry points ─────────────────────────────────────────────────────

FormulaPtr parse_kt_sugared(const std::string &text, const Alphabet &alphabet) {
  TokenStream ts{tokenize(text, 1)};
  FormulaParser p(ts, alphabet);
  UPtr u = p.disj();
  ts.expect(Tok::End, "end of formula");
  return p.to_formula(u);
}

FormulaPtr parse_kt(const std::string &text, const Alphabet &alphabet) {
  return desugar(parse_kt_sugared(text, alphabet));
}

CraspProgram parse_crasp(const std::string &text, const Alphabet &alphabet) {
  ProgramBuilder b;
  b.program.alphabet = alphabet;
  for (const Line &line : logical_lines(text)) {
    if (!parse_program_line(line, b))
      throw ParseError("#2 counting is only allowed as the final definition of a binary-count file",
                       line.number, 1);
  }
  b.finish();
  validate(b.program);
  return b.program;
}

KtFile parse_kt_file(const std::string &text) {
  auto lines = logical_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1, 1);
  KtFile out;
  out.alphabet = parse_alphabet_line(lines[0]);
  std::string rest;
  for (size_t k = 1; k < lines.size(); ++k) {
    rest += lines[k].text;
    rest += "\n";
  }
  if (trim(rest).empty()) throw ParseError("expected a formula after the alphabet header", 1, 1);
  out.formula = parse_kt(rest, out.alphabet);
  return out;
}

CraspProgram parse_crasp_file(const std::string &text) {
  auto lines = logical_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1, 1);
  Alphabet a = parse_alphabet_line(lines[0]);
  ProgramBuilder b;
  b.program.alphabet = a;
  for (size_t k = 1; k < lines.size(); ++k) {
    if (!parse_program_line(lines[k], b))
      throw ParseError("#2 counting is only allowed as the final definition of a binary-count file",
                       lines[k].number, 1);
  }
  b.finish();
  validate(b.program);
  return b.program;
}

LmProgram parse_lm_file(const std::string &text) {
  auto lines = logical_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1, 1);
  LmProgram lm;
  lm.base.alphabet = parse_alphabet_line(lines[0]);
  ProgramBuilder b;
  b.program.alphabet = lm.base.alphabet;
  for (size_t k = 1; k < lines.size(); ++k) {
    auto parts = split_ws(lines[k].text);
    if (!parts.empty() && parts[0] == "next") {
      if (parts.size() != 4 || parts[2] != ":=")
        throw ParseError("expected 'next <symbol> := <operation>'", lines[k].number, 1);
      if (parts[1] != "EOS" && parts[1].size() != 1)
        throw ParseError("next-symbol must be a single letter or EOS", lines[k].number, 1);
      lm.next.emplace_back(parts[1], parts[3]);
      continue;
    }
    if (!parse_program_line(lines[k], b))
      throw ParseError("#2 counting is not allowed in LM files", lines[k].number, 1);
  }
  b.finish();
  validate_ops(b.program);
  lm.base = b.program;
  validate(lm);
  return lm;
}

FocNormalForm parse_foc_file(const std::string &text) {
  auto lines = logical_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1, 1);
  FocNormalForm nf;
  nf.alphabet = parse_alphabet_line(lines[0]);
  for (size_t k = 1; k < lines.size(); ++k) {
    const Line &line = lines[k];
    auto parts = split_ws(line.text);
    if (parts.empty()) continue;
    if (parts[0] == "count") {
      size_t at = line.text.find(":=");
      if (at == std::string::npos) throw ParseError("expected 'count <x> := <formula>'", line.number, 1);
      auto head = split_ws(line.text.substr(0, at));
      if (head.size() != 2) throw ParseError("expected 'count <x> := <formula>'", line.number, 1);
      const std::string &var = head[1];
      for (const auto &[v, f] : nf.counted)
        if (v == var) throw ParseError("duplicate count variable " + var, line.number, 1);
      FormulaPtr body = parse_kt(line.text.substr(at + 2), nf.alphabet);
      if (modal_depth(body) != 0)
        throw ParseError("count body must be quantifier-free", line.number, 1);
      nf.counted.emplace_back(var, body);
      continue;
    }
    if (parts[0] == "constraint") {
      TokenStream ts{tokenize(line.text.substr(line.text.find("constraint") + 10), line.number)};
      std::vector<std::pair<long long, FormulaPtr>> terms;
      long long constant = 0;
      long long sign = ts.eat(Tok::Minus) ? -1 : 1;
      for (;;) {
        if (ts.at(Tok::Nat)) {
          long long v = ts.take().nat;
          if (ts.eat(Tok::Star)) {
            const Token &vt = ts.expect(Tok::Ident, "count variable");
            terms.emplace_back(sign * v, mk_atom(vt.text));
          } else {
            constant += sign * v;
          }
        } else if (ts.at(Tok::Ident)) {
          const Token &vt = ts.take();
          terms.emplace_back(sign, mk_atom(vt.text));
        } else {
          ts.fail("expected a linear term");
        }
        if (ts.eat(Tok::Plus)) {
          sign = 1;
        } else if (ts.eat(Tok::Minus)) {
          sign = -1;
        } else {
          break;
        }
      }
      ts.expect(Tok::Geq, "'>= 0'");
      const Token &z = ts.expect(Tok::Nat, "'0'");
      if (z.nat != 0) throw ParseError("constraints compare against 0", z.line, z.col);
      ts.expect(Tok::End, "end of line");
      for (const auto &[coef, body] : terms) {
        bool declared = false;
        for (const auto &[v, f] : nf.counted)
          if (v == body->atom) declared = true;
        if (!declared)
          throw ParseError("constraint uses undeclared variable " + body->atom, line.number, 1);
      }
      nf.constraints.push_back(linear_comparison(std::move(terms), constant));
      continue;
    }
    throw ParseError("expected a 'count' or 'constraint' line", line.number, 1);
  }
  if (nf.constraints.empty())
    throw ParseError("normal-form file needs at least one constraint", 1, 1);
  return nf;
}

BinCountProgram parse_bincount_file(const std::string &text) {
  auto lines = logical_lines(text);
  if (lines.empty()) throw ParseError("empty file", 1, 1);
  Alphabet a = parse_alphabet_line(lines[0]);
  ProgramBuilder b;
  b.program.alphabet = a;
  BinCountProgram out;
  bool found = false;
  for (size_t k = 1; k < lines.size(); ++k) {
    const Line &line = lines[k];
    if (found)
      throw ParseError("the binary count must be the final definition", line.number, 1);
    if (parse_program_line(line, b)) continue;
    // re-parse the `name(i) := #2[j<=i] expr` line in full
    TokenStream ts{tokenize(line.text, line.number)};
    out.name = ts.expect(Tok::Ident, "operation name").text;
    ts.expect(Tok::LParen, "'(i)'");
    const Token &pv = ts.expect(Tok::Ident, "'i'");
    if (pv.text != "i") throw ParseError("operation definitions bind position (i)", pv.line, pv.col);
    ts.expect(Tok::RParen, "')'");
    ts.expect(Tok::Assign, "':='");
    ts.expect(Tok::Hash2, "'#2['");
    const Token &j = ts.expect(Tok::Ident, "'j'");
    if (j.text != "j") throw ParseError("binary counting binds j<=i", j.line, j.col);
    ts.expect(Tok::Leq, "'<='");
    const Token &iv = ts.expect(Tok::Ident, "'i'");
    if (iv.text != "i") throw ParseError("binary counting binds j<=i", iv.line, iv.col);
    ts.expect(Tok::RBracket, "']'");
    BinParser bp(ts);
    out.body = bp.bor();
    ts.expect(Tok::End, "end of line");
    found = true;
  }
  if (!found) throw ParseError("no #2[j<=i] definition found", 1, 1);
  b.finish();
  validate_ops(b.program);
  out.base = b.program;
  if (out.base.index_of(out.name) >= 0) throw Error("duplicate operation name: " + out.name);
  check_bin_refs(out.body, out.base);
  return out;
}

FileKind classify_path(const std::string &path) {
  size_t dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "kt") return FileKind::Kt;
  if (ext == "crasp") return FileKind::Crasp;
  if (ext == "lm") return FileKind::Lm;
  if (ext == "foc") return FileKind::Foc;
  throw Error("unrecognized file extension on " + path + " (expected .kt, .crasp, .lm, or .foc)");
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ktc
