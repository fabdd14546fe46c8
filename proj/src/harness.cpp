// harness.cpp — built-in corpus, differential testing, the exact-rational
// shadow, fuzzers, and the acceptance suite.

#include "ktc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <nlohmann/json.hpp>

#include "ktc/compile.hpp"
#include "ktc/oracles.hpp"
#include "ktc/parse.hpp"
#include "ktc/passes.hpp"
#include "ktc/translate.hpp"

namespace ktc {

namespace {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

Alphabet make_alphabet(std::initializer_list<char> letters) {
  Alphabet a;
  a.letters.assign(letters);
  return a;
}

FormulaPtr atm(char c) { return mk_atom(std::string(1, c)); }

// ── fast memoized evaluation ────────────────────────────────────────────────
//
// Translated formulas share subterms heavily: the printed tree can be
// exponential while the pointer DAG stays small. Evaluate every node once per
// position, keyed by node identity.

class DpEval {
 public:
  explicit DpEval(std::string w) : w_(std::move(w)), n_(static_cast<int>(w_.size())) {}

  bool val(const FormulaPtr &f, int i) {
    if (i < 1 || i > n_) throw PositionError(i, n_);
    return frow(f)[i - 1] != 0;
  }
  long long cnt(const CountPtr &c, int i) {
    if (i < 1 || i > n_) throw PositionError(i, n_);
    return crow(c)[i - 1];
  }
  int length() const { return n_; }

 private:
  const std::vector<char> &frow(const FormulaPtr &f) {
    auto it = fv_.find(f.get());
    if (it != fv_.end()) return it->second;
    std::vector<char> row(n_, 0);
    switch (f->kind) {
      case FKind::Atom:
        for (int i = 0; i < n_; ++i) row[i] = f->atom.size() == 1 && w_[i] == f->atom[0];
        break;
      case FKind::True:
        row.assign(n_, 1);
        break;
      case FKind::Not: {
        const auto &a = frow(f->f1);
        for (int i = 0; i < n_; ++i) row[i] = !a[i];
        break;
      }
      case FKind::And: {
        const auto &a = frow(f->f1);
        const auto &b = frow(f->f2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] && b[i];
        break;
      }
      case FKind::Or: {
        const auto &a = frow(f->f1);
        const auto &b = frow(f->f2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] || b[i];
        break;
      }
      case FKind::Leq: {
        const auto &a = crow(f->c1);
        const auto &b = crow(f->c2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] <= b[i];
        break;
      }
      case FKind::Lt: {
        const auto &a = crow(f->c1);
        const auto &b = crow(f->c2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] < b[i];
        break;
      }
      case FKind::Eq: {
        const auto &a = crow(f->c1);
        const auto &b = crow(f->c2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] == b[i];
        break;
      }
      case FKind::Linear: {
        std::vector<long long> acc(n_, f->lin.constant);
        for (const auto &[coef, body] : f->lin.terms) {
          const auto &b = frow(body);
          long long run = 0;
          for (int i = 0; i < n_; ++i) {
            run += b[i];
            acc[i] += coef * run;
          }
        }
        for (int i = 0; i < n_; ++i) row[i] = acc[i] >= 0;
        break;
      }
    }
    return fv_.emplace(f.get(), std::move(row)).first->second;
  }

  const std::vector<long long> &crow(const CountPtr &c) {
    auto it = cv_.find(c.get());
    if (it != cv_.end()) return it->second;
    std::vector<long long> row(n_, 0);
    switch (c->kind) {
      case CKind::Count: {
        const auto &b = frow(c->body);
        long long run = 0;
        for (int i = 0; i < n_; ++i) row[i] = (run += b[i]);
        break;
      }
      case CKind::Add: {
        const auto &a = crow(c->t1);
        const auto &b = crow(c->t2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] + b[i];
        break;
      }
      case CKind::Sub: {
        const auto &a = crow(c->t1);
        const auto &b = crow(c->t2);
        for (int i = 0; i < n_; ++i) row[i] = a[i] - b[i];
        break;
      }
      case CKind::One:
        row.assign(n_, 1);
        break;
      case CKind::Nat:
        row.assign(n_, c->nat);
        break;
      case CKind::PosI:
        for (int i = 0; i < n_; ++i) row[i] = i + 1;
        break;
    }
    return cv_.emplace(c.get(), std::move(row)).first->second;
  }

  std::string w_;
  int n_;
  std::unordered_map<const Formula *, std::vector<char>> fv_;
  std::unordered_map<const CountTerm *, std::vector<long long>> cv_;
};

bool end_eval(const FormulaPtr &f, const std::string &w) {
  if (w.empty()) throw EmptyWordError();
  DpEval dp(w);
  return dp.val(f, dp.length());
}

// ── corpus helpers ──────────────────────────────────────────────────────────

FormulaPtr eq_zero(const FormulaPtr &body) {
  return mk_eq(mk_count(body), mk_nat(0));
}
FormulaPtr geq(const CountPtr &a, const CountPtr &b) {  // a >= b, as the parser reads it
  return mk_leq(b, a);
}

}  // namespace

FormulaPtr corpus_astar_bstar() {
  // #[Q_a & #[Q_b] >= 1] = 0
  FormulaPtr bad = mk_and(atm('a'), geq(mk_count(atm('b')), mk_nat(1)));
  return eq_zero(bad);
}

FormulaPtr corpus_astar_bstar_astar() {
  // #[Q_b & #[Q_a & #[Q_b] >= 1] >= 1] = 0
  FormulaPtr ba = mk_and(atm('a'), geq(mk_count(atm('b')), mk_nat(1)));
  FormulaPtr bab = mk_and(atm('b'), geq(mk_count(ba), mk_nat(1)));
  return eq_zero(bab);
}

FormulaPtr corpus_anbncn() {
  // #[Q_b & #[Q_c] = 0] = #[Q_b]  &  #[Q_a & #[Q_b | Q_c] = 0] = #[Q_a]
  //   &  #[Q_a] = #[Q_b]  &  #[Q_b] = #[Q_c]  &  #[Q_c] = #[Q_a]
  FormulaPtr good_b = mk_and(atm('b'), eq_zero(atm('c')));
  FormulaPtr e1 = mk_eq(mk_count(good_b), mk_count(atm('b')));
  FormulaPtr good_a = mk_and(atm('a'), eq_zero(mk_or(atm('b'), atm('c'))));
  FormulaPtr e2 = mk_eq(mk_count(good_a), mk_count(atm('a')));
  FormulaPtr eab = mk_eq(mk_count(atm('a')), mk_count(atm('b')));
  FormulaPtr ebc = mk_eq(mk_count(atm('b')), mk_count(atm('c')));
  FormulaPtr eca = mk_eq(mk_count(atm('c')), mk_count(atm('a')));
  return mk_and(mk_and(mk_and(mk_and(e1, e2), eab), ebc), eca);
}

FormulaPtr corpus_dyck1() {
  // (#[Q_(] = #[Q_)]) & (#[#[Q_)] > #[Q_(]] = 0)
  FormulaPtr balanced = mk_eq(mk_count(atm('(')), mk_count(atm(')')));
  FormulaPtr violation = mk_lt(mk_count(atm('(')), mk_count(atm(')')));  // ) > (
  return mk_and(balanced, eq_zero(violation));
}

FormulaPtr corpus_hello() {
  // #[T] = 5 & Q_o & #[Q_l & #[Q_e & #[Q_h] = 1] = 1] = 2
  FormulaPtr len5 = mk_eq(mk_count(mk_true()), mk_nat(5));
  FormulaPtr he = mk_and(atm('e'), mk_eq(mk_count(atm('h')), mk_nat(1)));
  FormulaPtr hel = mk_and(atm('l'), mk_eq(mk_count(he), mk_nat(1)));
  FormulaPtr hello = mk_eq(mk_count(hel), mk_nat(2));
  return mk_and(mk_and(len5, atm('o')), hello);
}

Alphabet corpus_alphabet(const std::string &id) {
  if (id == "astar_bstar" || id == "astar_bstar_astar") return make_alphabet({'a', 'b'});
  if (id == "anbncn") return make_alphabet({'a', 'b', 'c'});
  if (id == "dyck1") return make_alphabet({'(', ')'});
  if (id == "hello") return make_alphabet({'e', 'h', 'l', 'o'});
  throw Error("unknown corpus id: " + id);
}

// ── corpus programs ─────────────────────────────────────────────────────────

namespace {

CraspOp op_initial(char a) {
  CraspOp op;
  op.kind = OpKind::Initial;
  op.b1 = BoolRef{"", a};
  return op;
}
CraspOp op_counting(const std::string &name) {
  CraspOp op;
  op.kind = OpKind::Counting;
  op.b1 = BoolRef{name, 0};
  return op;
}
CraspOp op_counting_atom(char a) {
  CraspOp op;
  op.kind = OpKind::Counting;
  op.b1 = BoolRef{"", a};
  return op;
}
CraspOp op_compare(Rel rel, const std::string &c1, const std::string &c2) {
  CraspOp op;
  op.kind = OpKind::Compare;
  op.rel = rel;
  op.c1 = c1;
  op.c2 = c2;
  return op;
}
CraspOp op_and(const std::string &b1, const std::string &b2) {
  CraspOp op;
  op.kind = OpKind::BoolAnd;
  op.b1 = BoolRef{b1, 0};
  op.b2 = BoolRef{b2, 0};
  return op;
}
CraspOp op_and_atom(char a, const std::string &b2) {
  CraspOp op;
  op.kind = OpKind::BoolAnd;
  op.b1 = BoolRef{"", a};
  op.b2 = BoolRef{b2, 0};
  return op;
}
CraspOp op_const_count(long long v) {
  CraspOp op;
  op.kind = OpKind::ConstCount;
  op.nat = v;
  return op;
}
CraspOp op_bool_const() {
  CraspOp op;
  op.kind = OpKind::BoolConst;
  return op;
}
CraspOp op_add(const std::string &c1, const std::string &c2) {
  CraspOp op;
  op.kind = OpKind::AddOp;
  op.c1 = c1;
  op.c2 = c2;
  return op;
}

}  // namespace

CraspProgram corpus_dyck1_program() {
  CraspProgram p;
  p.alphabet = corpus_alphabet("dyck1");
  p.ops.emplace_back("Copen", op_counting_atom('('));
  p.ops.emplace_back("Cclose", op_counting_atom(')'));
  p.ops.emplace_back("V", op_compare(Rel::Lt, "Copen", "Cclose"));
  p.ops.emplace_back("CV", op_counting("V"));
  p.ops.emplace_back("Z", op_const_count(0));
  p.ops.emplace_back("M", op_compare(Rel::Eq, "CV", "Z"));
  p.ops.emplace_back("B", op_compare(Rel::Eq, "Copen", "Cclose"));
  p.ops.emplace_back("D", op_and("M", "B"));
  validate(p);
  return p;
}

CraspProgram corpus_astar_bstar_program() {
  CraspProgram p;
  p.alphabet = corpus_alphabet("astar_bstar");
  p.ops.emplace_back("Ca", op_counting_atom('a'));
  p.ops.emplace_back("Cb", op_counting_atom('b'));
  p.ops.emplace_back("ONE", op_const_count(1));
  p.ops.emplace_back("GB", op_compare(Rel::Leq, "ONE", "Cb"));  // Cb >= 1
  p.ops.emplace_back("V", op_and_atom('a', "GB"));
  p.ops.emplace_back("CV", op_counting("V"));
  p.ops.emplace_back("Z", op_const_count(0));
  p.ops.emplace_back("Y", op_compare(Rel::Eq, "CV", "Z"));
  validate(p);
  return p;
}

CraspProgram corpus_astar_bstar_astar_program() {
  CraspProgram p;
  p.alphabet = corpus_alphabet("astar_bstar_astar");
  p.ops.emplace_back("Ca", op_counting_atom('a'));
  p.ops.emplace_back("Cb", op_counting_atom('b'));
  p.ops.emplace_back("ONE", op_const_count(1));
  p.ops.emplace_back("G1", op_compare(Rel::Leq, "ONE", "Cb"));
  p.ops.emplace_back("BA", op_and_atom('a', "G1"));
  p.ops.emplace_back("Cba", op_counting("BA"));
  p.ops.emplace_back("G2", op_compare(Rel::Leq, "ONE", "Cba"));
  p.ops.emplace_back("BAB", op_and_atom('b', "G2"));
  p.ops.emplace_back("Cbab", op_counting("BAB"));
  p.ops.emplace_back("Z", op_const_count(0));
  p.ops.emplace_back("Y", op_compare(Rel::Eq, "Cbab", "Z"));
  validate(p);
  return p;
}

CraspProgram corpus_anbncn_program() {
  CraspProgram p;
  p.alphabet = corpus_alphabet("anbncn");
  p.ops.emplace_back("Ca", op_counting_atom('a'));
  p.ops.emplace_back("Cb", op_counting_atom('b'));
  p.ops.emplace_back("Cc", op_counting_atom('c'));
  p.ops.emplace_back("S", op_add("Cb", "Cc"));
  p.ops.emplace_back("Z", op_const_count(0));
  p.ops.emplace_back("A", op_compare(Rel::Eq, "S", "Z"));
  p.ops.emplace_back("B", op_compare(Rel::Eq, "Cc", "Z"));
  p.ops.emplace_back("AA", op_and_atom('a', "A"));
  p.ops.emplace_back("BB", op_and_atom('b', "B"));
  p.ops.emplace_back("CA", op_counting("AA"));
  p.ops.emplace_back("CB", op_counting("BB"));
  p.ops.emplace_back("Ga", op_compare(Rel::Eq, "CA", "Ca"));
  p.ops.emplace_back("Gb", op_compare(Rel::Eq, "CB", "Cb"));
  p.ops.emplace_back("G1", op_compare(Rel::Eq, "Ca", "Cb"));
  p.ops.emplace_back("G2", op_compare(Rel::Eq, "Cb", "Cc"));
  p.ops.emplace_back("Gabc", op_and("G1", "G2"));
  p.ops.emplace_back("Y1", op_and("Ga", "Gb"));
  p.ops.emplace_back("Y", op_and("Y1", "Gabc"));
  validate(p);
  return p;
}

CraspProgram corpus_hello_program() {
  CraspProgram p;
  p.alphabet = corpus_alphabet("hello");
  p.ops.emplace_back("Ce", op_counting_atom('e'));
  p.ops.emplace_back("Ch", op_counting_atom('h'));
  p.ops.emplace_back("Cl", op_counting_atom('l'));
  p.ops.emplace_back("Co", op_counting_atom('o'));
  p.ops.emplace_back("TT", op_bool_const());
  p.ops.emplace_back("CS", op_counting("TT"));
  p.ops.emplace_back("ONE", op_const_count(1));
  p.ops.emplace_back("E1", op_compare(Rel::Eq, "Ch", "ONE"));
  p.ops.emplace_back("HE", op_and_atom('e', "E1"));
  p.ops.emplace_back("CHE", op_counting("HE"));
  p.ops.emplace_back("E2", op_compare(Rel::Eq, "CHE", "ONE"));
  p.ops.emplace_back("HEL", op_and_atom('l', "E2"));
  p.ops.emplace_back("CHEL", op_counting("HEL"));
  p.ops.emplace_back("TWO", op_const_count(2));
  p.ops.emplace_back("E3", op_compare(Rel::Eq, "CHEL", "TWO"));
  p.ops.emplace_back("HELLO", op_and_atom('o', "E3"));
  p.ops.emplace_back("FIVE", op_const_count(5));
  p.ops.emplace_back("E5", op_compare(Rel::Eq, "CS", "FIVE"));
  p.ops.emplace_back("Y", op_and("HELLO", "E5"));
  validate(p);
  return p;
}

LmProgram corpus_dyck1_lm() {
  LmProgram lm;
  lm.base = corpus_dyck1_program();
  lm.base.ops.emplace_back("T", op_bool_const());
  lm.base.ops.emplace_back("W", op_compare(Rel::Lt, "Cclose", "Copen"));
  lm.next.emplace_back("(", "T");
  lm.next.emplace_back(")", "W");
  lm.next.emplace_back("EOS", "D");
  validate(lm);
  return lm;
}

FormulaPtr subsequence_formula(const std::string &s) {
  if (s.empty()) throw Error("subsequence formula needs a nonempty pattern");
  CountPtr tau = mk_count(atm(s[0]));
  for (size_t k = 1; k < s.size(); ++k) {
    long long threshold = s[k] == s[k - 1] ? 2 : 1;
    FormulaPtr step = mk_and(atm(s[k]), geq(tau, mk_nat(threshold)));
    tau = mk_count(step);
  }
  return geq(tau, mk_nat(1));
}

// ── word generation ─────────────────────────────────────────────────────────

std::vector<std::string> enumerate_words(const Alphabet &alphabet, int max_len) {
  std::vector<std::string> out;
  const int k = static_cast<int>(alphabet.letters.size());
  for (int len = 1; len <= max_len; ++len) {
    std::vector<int> idx(len, 0);
    while (true) {
      std::string w(len, ' ');
      for (int p = 0; p < len; ++p) w[p] = alphabet.letters[idx[p]];
      out.push_back(std::move(w));
      int p = len - 1;
      while (p >= 0 && ++idx[p] == k) idx[p--] = 0;
      if (p < 0) break;
    }
  }
  return out;
}

std::string random_word(const Alphabet &alphabet, int max_len, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> len_d(1, max_len);
  std::uniform_int_distribution<int> let_d(0, static_cast<int>(alphabet.letters.size()) - 1);
  std::string w(len_d(rng), ' ');
  for (char &c : w) c = alphabet.letters[let_d(rng)];
  return w;
}

std::string biased_word(const Alphabet &alphabet, int max_len, std::mt19937_64 &rng) {
  const int k = static_cast<int>(alphabet.letters.size());
  std::uniform_int_distribution<int> len_d(1, std::max(1, max_len / k));
  int block = len_d(rng);
  std::string w;
  for (char c : alphabet.letters) w.append(block, c);
  std::uniform_int_distribution<int> mut_d(0, 2);
  std::uniform_int_distribution<int> let_d(0, k - 1);
  for (int m = mut_d(rng); m > 0; --m) {
    std::uniform_int_distribution<int> pos_d(0, static_cast<int>(w.size()) - 1);
    w[pos_d(rng)] = alphabet.letters[let_d(rng)];
  }
  return w;
}

// ── differential testing ────────────────────────────────────────────────────

namespace {

void collect_nodes(const FormulaPtr &f, std::map<std::string, FormulaPtr> &out) {
  std::string key = pretty_print(f);
  if (out.count(key)) return;
  out[key] = f;
  switch (f->kind) {
    case FKind::Not:
      collect_nodes(f->f1, out);
      break;
    case FKind::And:
      collect_nodes(f->f1, out);
      collect_nodes(f->f2, out);
      break;
    case FKind::Linear:
      for (const auto &[coef, body] : f->lin.terms) collect_nodes(body, out);
      break;
    default:
      break;
  }
}

}  // namespace

DiffReport diff_test(const FormulaPtr &f, const TransformerModel &model,
                     const EnumerationSpec &spec, const std::string &program_id) {
  DiffReport report;
  report.program_id = program_id;

  std::map<std::string, FormulaPtr> nodes;
  collect_nodes(f, nodes);
  std::vector<std::pair<FormulaPtr, DimPair>> checks;
  for (const auto &[key, pair] : model.dim_map) {
    if (pair.role != DimRole::Boolean) continue;
    auto it = nodes.find(key);
    if (it == nodes.end()) throw Error("model dimension has no matching subformula: " + key);
    checks.emplace_back(it->second, pair);
  }

  auto run_word = [&](const std::string &w) -> bool {
    Mat out = model_forward(model, w);
    DpEval dp(w);
    ++report.strings_tested;
    for (const auto &[node, pair] : checks) {
      for (int i = 1; i <= static_cast<int>(w.size()); ++i) {
        double even = out.at(pair.even, i);
        double odd = out.at(pair.odd, i);
        bool truth = dp.val(node, i);
        report.max_abszero_dev = std::max(report.max_abszero_dev, std::abs(std::abs(even) - 1));
        report.max_abszero_dev = std::max(report.max_abszero_dev, std::abs(std::abs(odd) - 1));
        ++report.checks;
        if ((even > 0) != truth || (odd < 0) != truth) {
          if (!report.first_counterexample)
            report.first_counterexample = Disagreement{w, pretty_print(node), i};
          return false;
        }
      }
    }
    return true;
  };

  if (spec.exhaustive_max_len > 0)
    for (const std::string &w : enumerate_words(model.alphabet, spec.exhaustive_max_len))
      if (!run_word(w)) return report;
  if (spec.random_count > 0) {
    std::mt19937_64 rng(spec.seed);
    for (int k = 0; k < spec.random_count; ++k)
      if (!run_word(random_word(model.alphabet, spec.random_max_len, rng))) return report;
  }
  return report;
}

std::string to_json(const DiffReport &r) {
  nlohmann::json j;
  j["program_id"] = r.program_id;
  j["strings_tested"] = r.strings_tested;
  j["checks"] = r.checks;
  j["max_abszero_dev"] = r.max_abszero_dev;
  j["agreed"] = r.agreed();
  if (r.first_counterexample) {
    j["counterexample"] = {{"word", r.first_counterexample->word},
                           {"subformula", r.first_counterexample->subformula},
                           {"position", r.first_counterexample->position}};
  }
  return j.dump(1);
}

// ── exact-rational shadow ───────────────────────────────────────────────────

namespace {

Rational rat(double v) { return Rational(v); }

BigFloat shadow_actual(const Rational &m, const Rational &q) {
  return BigFloat(m) / sqrt(BigFloat(q));
}

}  // namespace

ShadowCertificate rational_shadow_forward(const TransformerModel &model, const std::string &w,
                                          const FormulaPtr &f) {
  for (const Block &b : model.blocks) {
    for (int c = 0; c < b.w_q.cols; ++c)
      if (b.w_q.at(0, c) != 0.0 || b.w_k.at(0, c) != 0.0) throw NonUniformAttentionError();
    for (const FfnLayer &l : b.ffn)
      for (double v : l.b)
        if (v != 0.0) throw Error("rational shadow requires bias-free FFNs");
  }
  CompilationPlan plan = plan_compilation(f, model.alphabet);
  if (plan.d != model.d || plan.strata.size() != model.blocks.size())
    throw Error("rational shadow: model does not match the formula's plan");

  const int n = static_cast<int>(w.size());
  const int d = model.d;
  ShadowCertificate cert;
  DpEval dp(w);

  ShadowStream s;
  s.m.assign(d, std::vector<Rational>(n + 1, Rational(0)));
  s.q.assign(n + 1, Rational(1));
  for (int i = 0; i <= n; ++i) {
    const Mat &col = model.we.at(i == 0 ? std::string("BOS") : std::string(1, w[i - 1]));
    for (int r = 0; r < d; ++r) s.m[r][i] = rat(col.at(r, 0));
  }
  Rational unit = 1;  // block-input live magnitude in m-units

  std::vector<BlockIntermediates> trace = model_forward_trace(model, w);

  const DimPair ss = plan.dim_map.at("@ss");
  const DimPair ref = plan.dim_map.at("@ref");
  auto track_dev = [&](const Mat &flt) {
    for (int r = 0; r < d; ++r)
      for (int i = 0; i <= n; ++i) {
        BigFloat dev = abs(BigFloat(flt.at(r, i)) - shadow_actual(s.m[r][i], s.q[i]));
        double devd = dev.convert_to<double>();
        cert.max_float_dev_pre_ln = std::max(cert.max_float_dev_pre_ln, devd);
      }
  };

  // live pairs after block k (plan order mirrors the compiler)
  std::vector<std::vector<DimPair>> live_after(model.blocks.size() + 1);
  {
    std::vector<DimPair> live;
    for (const FormulaPtr &node : plan.depth0) live.push_back(plan.dim_map.at(pretty_print(node)));
    live.push_back(ss);
    live_after[0] = live;
    for (size_t k = 0; k < plan.strata.size(); ++k) {
      const Stratum &st = plan.strata[k];
      for (const FormulaPtr &body : st.count_bodies)
        live.push_back(
            plan.dim_map.at("#[" + pretty_print(body) + "]@" + std::to_string(st.depth)));
      for (const FormulaPtr &node : st.comparisons)
        live.push_back(plan.dim_map.at(pretty_print(node)));
      for (const FormulaPtr &node : st.booleans)
        live.push_back(plan.dim_map.at(pretty_print(node)));
      live_after[k + 1] = live;  // @ref joins only after the final block
    }
    live_after.back().push_back(ref);
  }

  for (size_t k = 0; k < model.blocks.size(); ++k) {
    const Block &b = model.blocks[k];
    const Stratum &st = plan.strata[k];

    // attention: uniform prefix mean of W_V · column, added to the residual
    std::vector<std::vector<Rational>> prefix(d, std::vector<Rational>(n + 1, Rational(0)));
    for (int r = 0; r < d; ++r) {
      std::vector<Rational> vrow(n + 1, Rational(0));
      bool nonzero = false;
      for (int c = 0; c < d; ++c) {
        double coef = b.w_v.at(r, c);
        if (coef == 0.0) continue;
        nonzero = true;
        for (int i = 0; i <= n; ++i) vrow[i] += rat(coef) * s.m[c][i];
      }
      if (!nonzero) continue;
      Rational run = 0;
      for (int i = 0; i <= n; ++i) {
        run += vrow[i];
        prefix[r][i] = run / (i + 1);
      }
    }
    for (int r = 0; r < d; ++r)
      for (int i = 0; i <= n; ++i) s.m[r][i] += prefix[r][i];

    // pre-LN1: float deviation + exact count ratios per stratum body
    track_dev(trace[k].pre_ln1);
    for (const FormulaPtr &body : st.count_bodies) {
      DimPair cnt = plan.dim_map.at("#[" + pretty_print(body) + "]@" + std::to_string(st.depth));
      long long c_true = 0;
      for (int i = 0; i <= n; ++i) {
        if (i > 0) c_true += dp.val(body, i) ? 1 : 0;
        Rational num = s.m[cnt.even][i] + unit;
        Rational den = s.m[ref.even][i] + unit;
        if (den == 0 || num != den * c_true) cert.count_ratios_exact = false;
      }
    }

    // LN1 drops the incoming scale: keep m, set the column scale² to the
    // column variance (the mean is exactly zero by the pairing invariant).
    for (int i = 0; i <= n; ++i) {
      Rational mean = 0, var = 0;
      for (int r = 0; r < d; ++r) mean += s.m[r][i];
      if (mean != 0) cert.halfstep_exact = false;
      for (int r = 0; r < d; ++r) var += s.m[r][i] * s.m[r][i];
      var /= d;
      if (var == 0) throw ZeroVarianceError(i);
      s.q[i] = var;
    }

    // FFN on post-LN1 values: ReLU decisions depend only on sign(m)
    std::vector<std::vector<Rational>> act = s.m;
    for (size_t li = 0; li < b.ffn.size(); ++li) {
      const Mat &wm = b.ffn[li].w;
      std::vector<std::vector<Rational>> next(wm.rows, std::vector<Rational>(n + 1, Rational(0)));
      for (int r = 0; r < wm.rows; ++r)
        for (int c = 0; c < wm.cols; ++c) {
          double coef = wm.at(r, c);
          if (coef == 0.0) continue;
          for (int i = 0; i <= n; ++i) next[r][i] += rat(coef) * act[c][i];
        }
      if (li + 1 < b.ffn.size())
        for (auto &row : next)
          for (auto &v : row)
            if (v < 0) v = 0;
      act = std::move(next);
    }
    for (int r = 0; r < d; ++r)
      for (int i = 0; i <= n; ++i) s.m[r][i] += act[r][i];

    // pre-LN2 float deviation (scale² still the LN1 variance)
    track_dev(trace[k].pre_ln2);

    // LN2 + canonicalization: live dims must share one magnitude per column;
    // rewrite each column as ±d / sqrt(d·L) so the scale² is shared again
    const std::vector<DimPair> &live = live_after[k + 1];
    std::vector<char> is_live(d, 0);
    for (DimPair p : live) is_live[p.odd] = is_live[p.even] = 1;
    const long long L = 2 * static_cast<long long>(live.size());
    for (int i = 0; i <= n; ++i) {
      Rational mean = 0, var = 0;
      for (int r = 0; r < d; ++r) mean += s.m[r][i];
      if (mean != 0) cert.halfstep_exact = false;
      for (int r = 0; r < d; ++r) var += s.m[r][i] * s.m[r][i];
      var /= d;
      if (var == 0) throw ZeroVarianceError(i);
      for (int r = 0; r < d; ++r) {
        if (!is_live[r]) {
          if (s.m[r][i] != 0) cert.halfstep_exact = false;
          continue;
        }
        // |post-LN value| must be exactly sqrt(d/L): m² == var·d/L
        if (s.m[r][i] * s.m[r][i] * L != var * d) cert.halfstep_exact = false;
        s.m[r][i] = s.m[r][i] > 0 ? Rational(d) : Rational(-d);
      }
      s.q[i] = Rational(d) * L;
    }
    unit = d;
  }

  // final stream: every dimension live at exactly ±1
  if (!model.blocks.empty() &&
      2 * static_cast<long long>(live_after.back().size()) != static_cast<long long>(d))
    cert.final_pm_one_exact = false;
  for (int r = 0; r < d; ++r)
    for (int i = 0; i <= n; ++i)
      if (s.m[r][i] * s.m[r][i] != s.q[i]) cert.final_pm_one_exact = false;
  return cert;
}

// ── fuzzers ─────────────────────────────────────────────────────────────────

namespace {

int roll(std::mt19937_64 &rng, int n) {
  return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
}
char rletter(const Alphabet &a, std::mt19937_64 &rng) {
  return a.letters[roll(rng, static_cast<int>(a.letters.size()))];
}

FormulaPtr gen_formula(const Alphabet &a, int depth, int &budget, std::mt19937_64 &rng);

CountPtr gen_count(const Alphabet &a, int depth, int &budget, std::mt19937_64 &rng) {
  --budget;
  int pick = roll(rng, budget <= 0 ? 4 : (depth > 0 ? 7 : 6));
  if (depth <= 0 && (pick == 2 || pick == 3)) pick = roll(rng, 2);  // i is #[T] in disguise
  switch (pick) {
    case 0:
      return mk_one();
    case 1:
      // 0 desugars to #[!T]; keep depth-0 terms genuinely count-free
      return mk_nat(depth > 0 ? roll(rng, 4) : 1 + roll(rng, 3));
    case 2:
    case 3:
      return mk_pos_i();
    case 4:
      return mk_add(gen_count(a, depth, budget, rng), gen_count(a, depth, budget, rng));
    case 5:
      return mk_sub(gen_count(a, depth, budget, rng), gen_count(a, depth, budget, rng));
    default:
      return mk_count(gen_formula(a, depth - 1, budget, rng));
  }
}

FormulaPtr gen_formula(const Alphabet &a, int depth, int &budget, std::mt19937_64 &rng) {
  --budget;
  int pick = roll(rng, budget <= 0 ? 2 : 8);
  switch (pick) {
    case 0:
      return atm(rletter(a, rng));
    case 1:
      return roll(rng, 4) == 0 ? mk_true() : atm(rletter(a, rng));
    case 2:
      return mk_not(gen_formula(a, depth, budget, rng));
    case 3:
      return mk_and(gen_formula(a, depth, budget, rng), gen_formula(a, depth, budget, rng));
    case 4:
      return mk_or(gen_formula(a, depth, budget, rng), gen_formula(a, depth, budget, rng));
    case 5:
      return mk_leq(gen_count(a, depth, budget, rng), gen_count(a, depth, budget, rng));
    case 6:
      return mk_lt(gen_count(a, depth, budget, rng), gen_count(a, depth, budget, rng));
    default:
      return mk_eq(gen_count(a, depth, budget, rng), gen_count(a, depth, budget, rng));
  }
}

}  // namespace

FormulaPtr fuzz_formula(const Alphabet &alphabet, int max_depth, std::mt19937_64 &rng) {
  int budget = 10;
  return desugar(gen_formula(alphabet, max_depth, budget, rng));
}

namespace {

// rough bound on the guarded-case blowup a count op causes under translation
struct FuzzCraspState {
  std::vector<std::string> bools;
  std::vector<std::pair<std::string, int>> counts;  // name → case estimate
  int next_id = 1;

  std::string fresh() { return "p" + std::to_string(next_id++); }
  int cases_of(const std::string &name) const {
    for (const auto &[n, c] : counts)
      if (n == name) return c;
    return 1;
  }
};

BoolRef random_bool_ref(const Alphabet &a, const FuzzCraspState &st, std::mt19937_64 &rng) {
  if (st.bools.empty() || roll(rng, 3) == 0) return BoolRef{"", rletter(a, rng)};
  return BoolRef{st.bools[roll(rng, static_cast<int>(st.bools.size()))], 0};
}

}  // namespace

CraspProgram fuzz_crasp(const Alphabet &alphabet, int max_ops, std::mt19937_64 &rng) {
  CraspProgram p;
  p.alphabet = alphabet;
  FuzzCraspState st;
  int nops = 1 + roll(rng, std::max(1, max_ops - 1));

  for (int k = 0; k < nops; ++k) {
    std::string name = st.fresh();
    CraspOp op = op_initial(rletter(alphabet, rng));
    for (int attempt = 0; attempt < 12; ++attempt) {
      int pick = roll(rng, 10);
      if (pick <= 1) {
        op = op_initial(rletter(alphabet, rng));
      } else if (pick == 2) {
        op = op_bool_const();
      } else if (pick == 3) {
        op = CraspOp{};
        op.kind = OpKind::BoolNot;
        op.b1 = random_bool_ref(alphabet, st, rng);
      } else if (pick == 4) {
        op = CraspOp{};
        op.kind = OpKind::BoolAnd;
        op.b1 = random_bool_ref(alphabet, st, rng);
        op.b2 = random_bool_ref(alphabet, st, rng);
      } else if (pick == 5) {
        op = op_const_count(roll(rng, 4));
      } else if (pick == 6) {
        op = CraspOp{};
        op.kind = OpKind::Counting;
        op.b1 = random_bool_ref(alphabet, st, rng);
      } else if (st.counts.size() >= 2) {
        int i1 = roll(rng, static_cast<int>(st.counts.size()));
        int i2 = roll(rng, static_cast<int>(st.counts.size()));
        const std::string &n1 = st.counts[i1].first;
        const std::string &n2 = st.counts[i2].first;
        int e1 = st.counts[i1].second, e2 = st.counts[i2].second;
        if (pick == 7) {
          op = op_compare(roll(rng, 2) ? Rel::Leq : (roll(rng, 2) ? Rel::Lt : Rel::Eq), n1, n2);
        } else if (pick == 8) {
          if (e1 + e2 > 24 || e1 * e2 > 24) continue;
          int kind = roll(rng, 4);
          op = CraspOp{};
          op.kind = kind == 0   ? OpKind::AddOp
                    : kind == 1 ? OpKind::SubOp
                    : kind == 2 ? OpKind::MinOp
                                : OpKind::MaxOp;
          op.c1 = n1;
          op.c2 = n2;
        } else {
          if (e1 + e2 > 24) continue;
          op = CraspOp{};
          op.kind = OpKind::Conditional;
          op.b1 = random_bool_ref(alphabet, st, rng);
          op.c1 = n1;
          op.c2 = n2;
        }
      } else {
        continue;
      }
      break;
    }
    if (op_sort(op.kind) == OpSort::Boolean) {
      st.bools.push_back(name);
    } else {
      int est = 1;
      if (op.kind == OpKind::AddOp || op.kind == OpKind::SubOp)
        est = std::max(1, st.cases_of(op.c1) * st.cases_of(op.c2));
      else if (op.kind == OpKind::MinOp || op.kind == OpKind::MaxOp ||
               op.kind == OpKind::Conditional)
        est = st.cases_of(op.c1) + st.cases_of(op.c2);
      st.counts.emplace_back(name, est);
    }
    p.ops.emplace_back(name, std::move(op));
  }

  // acceptance reads the last op, which must be Boolean
  std::string final_name = st.fresh();
  CraspOp fin = op_initial(rletter(alphabet, rng));
  if (st.counts.size() >= 2 && roll(rng, 2)) {
    fin = op_compare(roll(rng, 2) ? Rel::Leq : Rel::Eq,
                     st.counts[roll(rng, static_cast<int>(st.counts.size()))].first,
                     st.counts[roll(rng, static_cast<int>(st.counts.size()))].first);
  } else if (!st.bools.empty() && roll(rng, 2)) {
    fin = CraspOp{};
    fin.kind = OpKind::BoolAnd;
    fin.b1 = random_bool_ref(alphabet, st, rng);
    fin.b2 = random_bool_ref(alphabet, st, rng);
  }
  p.ops.emplace_back(final_name, std::move(fin));
  validate(p);
  return p;
}

namespace {

BinExprPtr gen_binexpr(const Alphabet &a, const std::vector<std::string> &bools, int depth,
                       std::mt19937_64 &rng) {
  int pick = depth <= 0 ? 0 : roll(rng, 4);
  switch (pick) {
    case 1:
      return bin_not(gen_binexpr(a, bools, depth - 1, rng));
    case 2:
      return bin_and(gen_binexpr(a, bools, depth - 1, rng), gen_binexpr(a, bools, depth - 1, rng));
    case 3:
      return bin_or(gen_binexpr(a, bools, depth - 1, rng), gen_binexpr(a, bools, depth - 1, rng));
    default: {
      BoolRef ref = bools.empty() || roll(rng, 2)
                        ? BoolRef{"", rletter(a, rng)}
                        : BoolRef{bools[roll(rng, static_cast<int>(bools.size()))], 0};
      return bin_ref(ref, roll(rng, 2) ? 'i' : 'j');
    }
  }
}

}  // namespace

BinCountProgram fuzz_bincount(const Alphabet &alphabet, int max_ops, std::mt19937_64 &rng) {
  BinCountProgram p;
  p.base.alphabet = alphabet;
  std::vector<std::string> bools;
  int nops = roll(rng, std::max(1, max_ops));
  for (int k = 0; k < nops; ++k) {
    std::string name = "q" + std::to_string(k + 1);
    CraspOp op = op_initial(rletter(alphabet, rng));
    int pick = roll(rng, 4);
    if (pick == 0 && !bools.empty()) {
      op = CraspOp{};
      op.kind = OpKind::BoolNot;
      op.b1 = BoolRef{bools[roll(rng, static_cast<int>(bools.size()))], 0};
    } else if (pick == 1 && bools.size() >= 2) {
      op = CraspOp{};
      op.kind = OpKind::BoolAnd;
      op.b1 = BoolRef{bools[roll(rng, static_cast<int>(bools.size()))], 0};
      op.b2 = BoolRef{bools[roll(rng, static_cast<int>(bools.size()))], 0};
    } else if (pick == 2) {
      op = op_bool_const();
    }
    bools.push_back(name);
    p.base.ops.emplace_back(name, std::move(op));
  }
  p.name = "bc";
  p.body = gen_binexpr(alphabet, bools, 3, rng);
  return p;
}

FocNormalForm fuzz_foc_nf(const Alphabet &alphabet, int max_counted, std::mt19937_64 &rng) {
  FocNormalForm nf;
  nf.alphabet = alphabet;
  int nvars = 1 + roll(rng, std::max(1, max_counted));
  for (int k = 0; k < nvars; ++k) {
    int budget = 5;
    FormulaPtr body = gen_formula(alphabet, 0, budget, rng);  // quantifier-free
    nf.counted.emplace_back("x" + std::to_string(k + 1), body);
  }
  int ncons = 1 + roll(rng, 3);
  for (int c = 0; c < ncons; ++c) {
    std::vector<std::pair<long long, FormulaPtr>> terms;
    for (int k = 0; k < nvars; ++k) {
      long long coef = roll(rng, 7) - 3;
      if (coef != 0) terms.emplace_back(coef, mk_atom(nf.counted[k].first));
    }
    long long constant = roll(rng, 9) - 4;
    nf.constraints.push_back(linear_comparison(std::move(terms), constant));
  }
  return nf;
}

// ── acceptance suite ────────────────────────────────────────────────────────

namespace {

struct CorpusItem {
  std::string id;
  Alphabet alphabet;
  FormulaPtr formula;
};

std::vector<CorpusItem> corpus_items() {
  return {
      {"astar_bstar", corpus_alphabet("astar_bstar"), corpus_astar_bstar()},
      {"astar_bstar_astar", corpus_alphabet("astar_bstar_astar"), corpus_astar_bstar_astar()},
      {"anbncn", corpus_alphabet("anbncn"), corpus_anbncn()},
      {"dyck1", corpus_alphabet("dyck1"), corpus_dyck1()},
      {"hello", corpus_alphabet("hello"), corpus_hello()},
  };
}

struct Criterion {
  bool pass = true;
  std::ostringstream detail;
  void fail(const std::string &msg) {
    if (pass) detail << msg;
    pass = false;
  }
};

long long foc_count(const FormulaPtr &body, DpEval &dp) {
  long long c = 0;
  for (int x = 1; x <= dp.length(); ++x) c += dp.val(body, x) ? 1 : 0;
  return c;
}

bool foc_brute_force(const FocNormalForm &nf, const std::string &w) {
  DpEval dp(w);
  std::map<std::string, long long> counts;
  for (const auto &[var, body] : nf.counted) counts[var] = foc_count(body, dp);
  for (const LinearComparison &cons : nf.constraints) {
    long long acc = cons.constant;
    for (const auto &[coef, var] : cons.terms) acc += coef * counts.at(var->atom);
    if (acc < 0) return false;
  }
  return true;
}

bool bin_eval(const BinExprPtr &e, const std::string &w, int i, int j, const CraspTrace &base) {
  switch (e->kind) {
    case BinExpr::Ref: {
      int pos = e->pos == 'i' ? i : j;
      if (e->ref.is_atom()) return w[pos - 1] == e->ref.atom;
      return base.bools.at(e->ref.name)[pos - 1];
    }
    case BinExpr::Not:
      return !bin_eval(e->a, w, i, j, base);
    case BinExpr::And:
      return bin_eval(e->a, w, i, j, base) && bin_eval(e->b, w, i, j, base);
    case BinExpr::Or:
      return bin_eval(e->a, w, i, j, base) || bin_eval(e->b, w, i, j, base);
  }
  throw Error("internal: unhandled binary expression");
}

}  // namespace

bool run_acceptance_suite(std::ostream &out, const std::string &corpus_dir) {
  bool all_pass = true;
  auto report = [&](int index, const std::string &title, Criterion &c, double secs) {
    out << (c.pass ? "PASS" : "FAIL") << " criterion-" << index << ": " << title;
    if (!c.pass) out << " — " << c.detail.str();
    char buf[32];
    std::snprintf(buf, sizeof buf, " (%.1fs)", secs);
    out << buf << "\n";
    all_pass = all_pass && c.pass;
  };
  auto timed = [&](int index, const std::string &title,
                   const std::function<void(Criterion &)> &fn) {
    Criterion c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception &e) {
      c.fail(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(index, title, c, secs);
  };

  // 1. table formulas vs independent oracles
  timed(1, "table formulas match the language oracles (|w| <= 8, Dyck-1 <= 10)",
        [&](Criterion &c) {
          for (const CorpusItem &item : corpus_items()) {
            KtFile file = parse_kt_file(read_file(corpus_dir + "/" + item.id + ".kt"));
            if (!(file.alphabet == item.alphabet) ||
                !equal(file.formula, desugar(item.formula))) {
              c.fail(item.id + ": corpus file diverges from the built-in formula");
              return;
            }
            int max_len = item.id == "dyck1" ? 10 : 8;
            for (const std::string &w : enumerate_words(item.alphabet, max_len)) {
              if (end_eval(item.formula, w) != oracle_membership(item.id, w)) {
                c.fail(item.id + ": disagrees with oracle on \"" + w + "\"");
                return;
              }
            }
          }
        });

  // shared compiled models for criteria 2, 3, 9
  struct CompiledItem {
    std::string id;
    Alphabet alphabet;
    FormulaPtr normalized;
    TransformerModel model;
  };
  std::vector<CompiledItem> compiled;
  try {
    for (const CorpusItem &item : corpus_items()) {
      FormulaPtr norm = normalize_comparison(desugar(item.formula));
      compiled.push_back({item.id, item.alphabet, norm, compile(norm, item.alphabet)});
    }
    FormulaPtr translated = crasp_to_kt(corpus_dyck1_program());
    FormulaPtr norm = normalize_comparison(desugar(translated));
    compiled.push_back({"dyck1_translated", corpus_alphabet("dyck1"), norm,
                        compile(norm, corpus_alphabet("dyck1"))});
  } catch (const std::exception &e) {
    Criterion c;
    c.fail(std::string("compilation failed: ") + e.what());
    report(2, "compiled models match the interpreter", c, 0.0);
    report(3, "block count equals modal depth", c, 0.0);
    report(9, "exact-rational shadow certifies the numerics", c, 0.0);
    return false;
  }

  // 2. compilation soundness
  timed(2, "compiled models match the interpreter at every position (1e-6)",
        [&](Criterion &c) {
          uint64_t seed = 0xC0FFEE;
          for (const CompiledItem &item : compiled) {
            EnumerationSpec spec;
            spec.exhaustive_max_len = 8;
            spec.random_count = 1000;
            spec.random_max_len = 64;
            spec.seed = seed++;
            DiffReport r = diff_test(item.normalized, item.model, spec, item.id);
            if (!r.agreed()) {
              c.fail(item.id + ": sign mismatch on \"" + r.first_counterexample->word +
                     "\" at position " + std::to_string(r.first_counterexample->position) +
                     " for " + r.first_counterexample->subformula);
              return;
            }
            if (r.max_abszero_dev > 1e-6) {
              c.fail(item.id + ": Boolean activation drifted " +
                     std::to_string(r.max_abszero_dev) + " from ±1");
              return;
            }
          }
        });

  // 3. block count = modal depth
  timed(3, "compiled block count equals modal depth (corpus + 200 fuzzed)",
        [&](Criterion &c) {
          for (const CompiledItem &item : compiled) {
            if (static_cast<int>(item.model.blocks.size()) != modal_depth(item.normalized)) {
              c.fail(item.id + ": blocks != modal depth");
              return;
            }
          }
          Alphabet ab = make_alphabet({'a', 'b'});
          std::mt19937_64 rng(2024);
          for (int k = 0; k < 200; ++k) {
            FormulaPtr f = normalize_comparison(fuzz_formula(ab, 3, rng));
            TransformerModel m = compile(f, ab);
            if (static_cast<int>(m.blocks.size()) != modal_depth(f)) {
              c.fail("fuzzed formula " + std::to_string(k) + ": blocks != modal depth for " +
                     pretty_print(f));
              return;
            }
          }
        });

  // 4. program/formula round trips
  timed(4, "translation round trips preserve acceptance (500+500, |w| <= 6)",
        [&](Criterion &c) {
          Alphabet ab = make_alphabet({'a', 'b'});
          std::vector<std::string> words = enumerate_words(ab, 6);
          std::mt19937_64 rng(7);
          for (int k = 0; k < 500; ++k) {
            CraspProgram p = fuzz_crasp(ab, 8, rng);
            FormulaPtr f = crasp_to_kt(p);
            for (const std::string &w : words) {
              if (crasp_accepts(p, w) != end_eval(f, w)) {
                c.fail("program->formula mismatch on \"" + w + "\" for program:\n" +
                       pretty_print(p));
                return;
              }
            }
          }
          std::mt19937_64 rng2(8);
          for (int k = 0; k < 500; ++k) {
            FormulaPtr f = fuzz_formula(ab, 3, rng2);
            CraspProgram p = kt_to_crasp(f, ab);
            for (const std::string &w : words) {
              if (end_eval(f, w) != crasp_accepts(p, w)) {
                c.fail("formula->program mismatch on \"" + w + "\" for " + pretty_print(f));
                return;
              }
            }
          }
        });

  // 5. subsequence formulas
  timed(5, "subsequence formulas match the subsequence oracle (|s| <= 4, |w| <= 10)",
        [&](Criterion &c) {
          Alphabet ab = make_alphabet({'a', 'b'});
          std::vector<std::string> patterns = enumerate_words(ab, 4);
          std::vector<std::string> words = enumerate_words(ab, 10);
          for (const std::string &s : patterns) {
            FormulaPtr f = subsequence_formula(s);
            if (modal_depth(desugar(f)) != static_cast<int>(s.size())) {
              c.fail("modal depth != |s| for s=\"" + s + "\"");
              return;
            }
            for (const std::string &w : words) {
              if (end_eval(f, w) != oracle_subsequence(s, w)) {
                c.fail("s=\"" + s + "\" disagrees with oracle on \"" + w + "\"");
                return;
              }
            }
          }
        });

  // 6. binary-count elimination
  timed(6, "binary-count elimination matches the O(n^2) oracle (200 fuzzed)",
        [&](Criterion &c) {
          Alphabet ab = make_alphabet({'a', 'b'});
          std::vector<std::string> words = enumerate_words(ab, 5);
          std::mt19937_64 rng(99);
          for (int k = 0; k < 200; ++k) {
            BinCountProgram p = fuzz_bincount(ab, 4, rng);
            CraspProgram flat = desugar_binary_count(p);
            for (const std::string &w : words) {
              CraspTrace base = run_crasp(p.base, w);
              CraspTrace full = run_crasp(flat, w);
              const std::vector<long long> &got = full.ints.at(p.name);
              for (int i = 1; i <= static_cast<int>(w.size()); ++i) {
                long long want = 0;
                for (int j = 1; j <= i; ++j) want += bin_eval(p.body, w, i, j, base) ? 1 : 0;
                if (got[i - 1] != want) {
                  c.fail("fuzzed pair-count program " + std::to_string(k) + " wrong at \"" + w +
                         "\" position " + std::to_string(i));
                  return;
                }
              }
            }
          }
        });

  // 7. counting normal form
  timed(7, "normal-form embedding has depth 1 and matches brute force (50 fuzzed)",
        [&](Criterion &c) {
          Alphabet ab = make_alphabet({'a', 'b'});
          std::vector<std::string> words = enumerate_words(ab, 6);
          std::mt19937_64 rng(4242);
          for (int k = 0; k < 50; ++k) {
            FocNormalForm nf = fuzz_foc_nf(ab, 3, rng);
            FormulaPtr f = foc_nf_to_kt(nf);
            if (modal_depth(f) != 1) {
              c.fail("instance " + std::to_string(k) + ": modal depth != 1");
              return;
            }
            for (const std::string &w : words) {
              if (end_eval(f, w) != foc_brute_force(nf, w)) {
                c.fail("instance " + std::to_string(k) + " disagrees on \"" + w + "\"");
                return;
              }
            }
          }
        });

  // 8. language model
  timed(8, "Dyck-1 LM support equals membership; greedy decode closes and stops",
        [&](Criterion &c) {
          LmProgram lm = corpus_dyck1_lm();
          {
            LmProgram from_file = parse_lm_file(read_file(corpus_dir + "/dyck1.lm"));
            if (pretty_print(from_file.base) != pretty_print(lm.base) ||
                from_file.next != lm.next) {
              c.fail("corpus dyck1.lm diverges from the built-in program");
              return;
            }
          }
          Alphabet paren = corpus_alphabet("dyck1");
          for (const std::string &w : enumerate_words(paren, 10)) {
            if (lm_assigns_nonzero(lm, w) != oracle_dyck1(w)) {
              c.fail("LM support disagrees with membership on \"" + w + "\"");
              return;
            }
          }
          DecodeResult r = lm_greedy_decode(lm, "(", 64, {"EOS", ")", "("});
          if (r.outcome != DecodeOutcome::Eos) {
            c.fail("greedy decode did not reach EOS (got \"" + r.text + "\")");
            return;
          }
          if (!oracle_dyck1(r.text)) {
            c.fail("greedy decode ended outside the language: \"" + r.text + "\"");
            return;
          }
        });

  // 9. rational shadow
  timed(9, "exact-rational shadow: ratios exact, float drift <= 1e-9 (n <= 512)",
        [&](Criterion &c) {
          std::mt19937_64 rng(31337);
          for (const CompiledItem &item : compiled) {
            std::vector<std::string> words;
            // one structured long word near n = 512, plus short random ones
            std::string longw;
            if (item.id == "astar_bstar")
              longw = std::string(256, 'a') + std::string(256, 'b');
            else if (item.id == "astar_bstar_astar")
              longw = std::string(170, 'a') + std::string(171, 'b') + std::string(171, 'a');
            else if (item.id == "anbncn")
              longw = std::string(170, 'a') + std::string(170, 'b') + std::string(170, 'c');
            else if (item.id == "hello") {
              longw.reserve(515);
              while (longw.size() < 512) longw += "hello";
              longw.resize(512);
            } else {
              longw = std::string(256, '(') + std::string(256, ')');
            }
            words.push_back(longw);
            words.push_back(random_word(item.alphabet, 48, rng));
            words.push_back(biased_word(item.alphabet, 24, rng));
            for (const std::string &w : words) {
              ShadowCertificate cert = rational_shadow_forward(item.model, w, item.normalized);
              if (!cert.count_ratios_exact) {
                c.fail(item.id + ": count/reference ratio not exact on a word of length " +
                       std::to_string(w.size()));
                return;
              }
              if (!cert.halfstep_exact || !cert.final_pm_one_exact) {
                c.fail(item.id + ": magnitude certificate failed on a word of length " +
                       std::to_string(w.size()));
                return;
              }
              if (cert.max_float_dev_pre_ln > 1e-9) {
                c.fail(item.id + ": float drift " + std::to_string(cert.max_float_dev_pre_ln));
                return;
              }
            }
          }
        });

  return all_pass;
}

}  // namespace ktc
