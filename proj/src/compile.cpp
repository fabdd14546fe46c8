// compile.cpp — formula → transformer weights.
//
// The construction works in per-column units. Entering block m every live
// dimension is ±u (u uniform per column); after LN1 write β := u/σ and
//
//   x_k  = β(2·C_k/(i+1) − 1)   count pair evens (attention output)
//   ρ    = β(2/(i+1) − 1)       reference even
//   ss   = −β at real columns, +β at BOS
//   τ    = ρ − ss = 2β/(i+1) at real columns, 0 at BOS
//
// which gives the exact identities x_k − ss = τ·C_k and, for a pure line
// L = Σ a_k C_k,  Λ := Σ a_k x_k − (Σ a_k)·ss = τ·L.  Integer-interval
// membership on L is decided by ReLU brackets on Λ with offsets in multiples
// of τ; conjunctions with ±1 literals are gated by a penalty that is 0 when
// all literals hold and ≤ −2β otherwise.  Every ramp is built to vanish at
// BOS (τ = 0 collapses the brackets), and a final mechanical pass pins each
// BOS output through the ReLU(ss) unit, which is β at BOS and 0 elsewhere.
//
// All FFNs are bias-free, so the whole block is positively homogeneous per
// column — LayerNorm scaling never changes a decision, which is what the
// rational shadow in the harness verifies exactly.

#include "ktc/compile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

#include "ktc/passes.hpp"

namespace ktc {

namespace {

constexpr long long kNoBound = std::numeric_limits<long long>::min();

bool is_truth(const FormulaPtr &f) { return f->kind == FKind::True; }
bool is_falsity(const FormulaPtr &f) { return f->kind == FKind::Not && is_truth(f->f1); }

// C_A ≤ C_B for all words whenever A entails B (syntactic check: B is ⊤ or a
// conjunct of A).
bool entails(const FormulaPtr &a, const FormulaPtr &b) {
  if (is_truth(b)) return true;
  if (equal(a, b)) return true;
  if (a->kind == FKind::And) return entails(a->f1, b) || entails(a->f2, b);
  return false;
}

// ── linear functionals over stream rows ─────────────────────────────────────

struct LinExpr {
  std::map<int, double> c;  // row → coefficient

  LinExpr &add(int row, double v) {
    double nv = c[row] + v;
    if (nv == 0.0)
      c.erase(row);
    else
      c[row] = nv;
    return *this;
  }
  LinExpr &add(const LinExpr &o, double s) {
    for (const auto &[r, v] : o.c) add(r, v * s);
    return *this;
  }
  LinExpr negated() const {
    LinExpr out;
    for (const auto &[r, v] : c) out.c[r] = -v;
    return out;
  }
  std::string key() const {
    std::string k;
    char buf[48];
    for (const auto &[r, v] : c) {
      std::snprintf(buf, sizeof buf, "%d:%.17g;", r, v);
      k += buf;
    }
    return k;
  }
  double eval(const std::vector<double> &vals) const {
    double acc = 0;
    for (const auto &[r, v] : c) acc += v * vals[r];
    return acc;
  }
};

LinExpr even_of(DimPair p) {
  LinExpr e;
  e.add(p.even, 1.0);
  return e;
}

// ── subformula collection ───────────────────────────────────────────────────

struct Collected {
  std::vector<FormulaPtr> order;        // discovery order, children first
  std::map<std::string, int> depth;     // pp → modal depth
};

void collect(const FormulaPtr &f, Collected &out) {
  std::string key = pretty_print(f);
  if (out.depth.count(key)) return;
  switch (f->kind) {
    case FKind::Atom:
    case FKind::True:
      break;
    case FKind::Not:
      collect(f->f1, out);
      break;
    case FKind::And:
      collect(f->f1, out);
      collect(f->f2, out);
      break;
    case FKind::Linear:
      for (const auto &[coef, body] : f->lin.terms) collect(body, out);
      break;
    default:
      throw Error("compile requires a desugared, comparison-normalized formula");
  }
  out.depth[key] = modal_depth(f);
  out.order.push_back(f);
}

// ── margin analysis ─────────────────────────────────────────────────────────

struct MarginInfo {
  std::vector<std::pair<long long, FormulaPtr>> terms;  // ⊥ bodies already dropped
  long long c = 0;
};

MarginInfo margin_of(const FormulaPtr &lin) {
  MarginInfo m;
  for (const auto &[coef, body] : lin->lin.terms)
    if (!is_falsity(body)) m.terms.emplace_back(coef, body);
  m.c = lin->lin.constant;
  return m;
}

MarginInfo negated_margin(const MarginInfo &m) {
  MarginInfo out;
  for (const auto &[coef, body] : m.terms) out.terms.emplace_back(-coef, body);
  out.c = -m.c;
  return out;
}

// True when the margin provably never exceeds `bound`: every positive
// coefficient unit is absorbed by an entailed negative term (C_A ≤ C_B), and
// the constant is within bound.
bool margin_at_most(const MarginInfo &m, long long bound) {
  if (m.c > bound) return false;
  std::vector<std::pair<FormulaPtr, long long>> caps;
  for (const auto &[coef, body] : m.terms)
    if (coef < 0) caps.emplace_back(body, -coef);
  for (const auto &[coef, body] : m.terms) {
    if (coef <= 0) continue;
    long long need = coef;
    for (auto &[cb, cap] : caps) {
      if (cap == 0 || !entails(body, cb)) continue;
      long long take = std::min(need, cap);
      need -= take;
      cap -= take;
      if (need == 0) break;
    }
    if (need > 0) return false;
  }
  return true;
}

bool margin_tautology(const MarginInfo &m) { return margin_at_most(negated_margin(m), 0); }
bool margin_unsatisfiable(const MarginInfo &m) { return margin_at_most(m, -1); }
bool margin_foldable(const MarginInfo &m) { return margin_at_most(m, 0); }

// ── clause intermediate form ────────────────────────────────────────────────

// integer interval on a pure line L = Σ a_k·C_k (count pairs of this stratum)
struct LineObj {
  std::vector<std::pair<long long, int>> coefs;  // count-pair even row → a_k (sorted)
  long long lo = kNoBound, hi = kNoBound;        // kNoBound = unbounded side
  long long omega = 0;                           // Σ|a_k|
};

struct ClauseIR {
  std::vector<std::pair<DimPair, bool>> lits;  // live literal pair, negated?
  std::vector<LineObj> objs;
};

struct SkeletonIR {
  DimPair target;
  std::vector<ClauseIR> clauses;
};

// ── block assembly ──────────────────────────────────────────────────────────

class BlockBuilder {
 public:
  BlockBuilder(int d, DimPair ss, DimPair ref) : d_(d), ss_(ss), ref_(ref) {}

  LinExpr tau() const {  // ρ − ss
    LinExpr e;
    e.add(ref_.even, 1.0);
    e.add(ss_.even, -1.0);
    return e;
  }
  LinExpr ss_even() const { return even_of(ss_); }

  // keep a live ±β pair, clamped to the ± half-step
  void clamp_job(DimPair p, double bos_target) {
    LinExpr x = even_of(p);
    LinExpr half = tau();
    LinExpr a1 = x;            // x − τ/2
    a1.add(half, -0.5);
    LinExpr a2 = x.negated();  // −x − τ/2
    a2.add(half, -0.5);
    add_unit(p.even, a1, -1.0);
    add_unit(p.even, a2, +1.0);
    bos_target_[p.even] = bos_target;
  }

  // overwrite a pair (whatever it holds) with constant True at ±τ/2
  void overwrite_true_job(DimPair p, double bos_target) {
    add_unit(p.even, tau(), 0.5);  // τ ≥ 0 always, so ReLU(τ) = τ
    add_pass(p.even, even_of(p), -1.0);
    bos_target_[p.even] = bos_target;
  }

  void reset_job(DimPair p) {  // overwrite with 0
    add_pass(p.even, even_of(p), -1.0);
    bos_target_[p.even] = 0.0;
  }

  void skeleton_job(const SkeletonIR &sk) {
    add_unit(sk.target.even, tau(), -0.5);  // fresh pair: even = Σ clauses − τ/2
    for (const ClauseIR &cl : sk.clauses) emit_clause(sk.target.even, cl);
    bos_target_[sk.target.even] = -1.0;
  }

  bool needs_three_layers() const { return !cubes_.empty(); }

  // bos_vals: post-LN1 BOS column in β = 1 units (row → value)
  std::vector<FfnLayer> emit(const std::vector<double> &bos_vals) {
    // the BOS fix rides on ReLU(ss), which is 0 at every real column; create
    // it before cube outputs are resolved so the unit count is final
    int uss = unit(ss_even());
    const int h1_final = static_cast<int>(units_.size());
    for (const auto &[row, cix] : pending_cubes_)
      out_[row].emplace_back(h1_final + cix, 1.0);
    pending_cubes_.clear();
    std::vector<double> l1_bos(units_.size());
    for (size_t k = 0; k < units_.size(); ++k)
      l1_bos[k] = std::max(0.0, units_[k].eval(bos_vals));

    const int h1 = static_cast<int>(units_.size());
    FfnLayer l1;
    l1.w = Mat(h1, d_);
    l1.b.assign(h1, 0.0);
    for (int k = 0; k < h1; ++k)
      for (const auto &[r, v] : units_[k].c) l1.w.at(k, r) = v;

    if (!needs_three_layers()) {
      for (auto &[row, terms] : out_) {
        double computed = bos_vals[row];
        for (const auto &[u, coef] : terms) computed += coef * l1_bos[u];
        double kappa = bos_target_.count(row) ? bos_target_.at(row) - computed : 0.0;
        if (kappa != 0.0) terms.emplace_back(uss, kappa);
      }
      FfnLayer l2;
      l2.w = Mat(d_, h1);
      l2.b.assign(d_, 0.0);
      for (const auto &[row, terms] : out_)
        for (const auto &[u, coef] : terms) {
          l2.w.at(row, u) += coef;
          l2.w.at(row - 1, u) -= coef;  // odd row mirrors the even row
        }
      return {std::move(l1), std::move(l2)};
    }

    // three layers: every first-layer unit passes through (its output is ≥ 0,
    // so a single identity unit suffices), cubes occupy the extra slots
    const int ncubes = static_cast<int>(cubes_.size());
    const int h2 = h1 + ncubes;
    FfnLayer l2;
    l2.w = Mat(h2, h1);
    l2.b.assign(h2, 0.0);
    for (int k = 0; k < h1; ++k) l2.w.at(k, k) = 1.0;
    for (int cix = 0; cix < ncubes; ++cix)
      for (const auto &[u, coef] : cubes_[cix]) l2.w.at(h1 + cix, u) += coef;

    std::vector<double> l2_bos(h2);
    for (int k = 0; k < h1; ++k) l2_bos[k] = l1_bos[k];
    for (int cix = 0; cix < ncubes; ++cix) {
      double acc = 0;
      for (const auto &[u, coef] : cubes_[cix]) acc += coef * l1_bos[u];
      l2_bos[h1 + cix] = std::max(0.0, acc);
    }

    for (auto &[row, terms] : out_) {
      double computed = bos_vals[row];
      for (const auto &[u, coef] : terms) computed += coef * l2_bos[u];
      double kappa = bos_target_.count(row) ? bos_target_.at(row) - computed : 0.0;
      if (kappa != 0.0) terms.emplace_back(uss, kappa);  // pass-through index = uss
    }
    FfnLayer l3;
    l3.w = Mat(d_, h2);
    l3.b.assign(d_, 0.0);
    for (const auto &[row, terms] : out_)
      for (const auto &[u, coef] : terms) {
        l3.w.at(row, u) += coef;
        l3.w.at(row - 1, u) -= coef;
      }
    return {std::move(l1), std::move(l2), std::move(l3)};
  }

 private:
  int unit(const LinExpr &e) {
    std::string k = e.key();
    if (auto it = unit_ids_.find(k); it != unit_ids_.end()) return it->second;
    int id = static_cast<int>(units_.size());
    units_.push_back(e);
    unit_ids_[k] = id;
    return id;
  }
  void add_unit(int row, const LinExpr &arg, double coef) {
    out_[row].emplace_back(unit(arg), coef);
  }
  void add_pass(int row, const LinExpr &e, double coef) {
    add_unit(row, e, coef);
    add_unit(row, e.negated(), -coef);
  }

  // bracket unit list for one gated line object; returns (unit, ±1) pairs
  std::vector<std::pair<int, double>> bracket_units(const LineObj &obj, const LinExpr &gate) {
    LinExpr lam;
    for (const auto &[coef, row] : obj.coefs) {
      LinExpr x;
      x.add(row, 1.0);
      x.add(ss_.even, -1.0);  // x_k − ss = τ·C_k
      lam.add(x, static_cast<double>(coef));
    }
    std::vector<std::pair<int, double>> out;
    LinExpr t = tau();
    auto push = [&](double tau_mult, double sign) {
      LinExpr arg = lam;
      arg.add(t, tau_mult);
      arg.add(gate, 1.0);
      out.emplace_back(unit(arg), sign);
    };
    if (obj.lo != kNoBound) {
      push(static_cast<double>(1 - obj.lo), +1.0);
      push(static_cast<double>(-obj.lo), -1.0);
    } else {
      LinExpr arg = t;
      arg.add(gate, 1.0);
      out.emplace_back(unit(arg), +1.0);
    }
    if (obj.hi != kNoBound) {
      push(static_cast<double>(-obj.hi), -1.0);
      push(static_cast<double>(-(obj.hi + 1)), +1.0);
    }
    return out;
  }

  void emit_clause(int target_row, const ClauseIR &cl) {
    // penalty: 0 when all literals hold, ≤ −2β otherwise
    LinExpr penalty;
    for (const auto &[p, neg] : cl.lits) penalty.add(p.even, neg ? -1.0 : 1.0);
    penalty.add(ss_.even, static_cast<double>(cl.lits.size()));

    long long w = 1;
    for (const LineObj &obj : cl.objs) {
      long long kmax = 0;
      if (obj.lo != kNoBound) kmax = std::max({kmax, std::llabs(1 - obj.lo), std::llabs(obj.lo)});
      if (obj.hi != kNoBound) kmax = std::max({kmax, std::llabs(obj.hi), std::llabs(obj.hi + 1)});
      w = std::max(w, obj.omega + kmax + 2);
    }
    LinExpr gate = penalty;
    for (auto &[r, v] : gate.c) v *= static_cast<double>(w);

    if (cl.objs.empty()) {
      LinExpr arg = tau();
      arg.add(gate, 1.0);
      add_unit(target_row, arg, 1.0);
      return;
    }
    if (cl.objs.size() == 1) {
      for (const auto &[u, sign] : bracket_units(cl.objs[0], gate))
        out_[target_row].emplace_back(u, sign);
      return;
    }
    // several independent lines: a second ReLU stage conjoins their gated
    // indicators — ReLU(Σ R_obj − (q−1)τ) is τ iff every R_obj is τ
    std::vector<std::pair<int, double>> cube;
    for (const LineObj &obj : cl.objs)
      for (const auto &[u, sign] : bracket_units(obj, gate)) cube.emplace_back(u, sign);
    cube.emplace_back(unit(tau()), -static_cast<double>(cl.objs.size() - 1));
    cubes_.push_back(std::move(cube));
    out_cube(target_row, static_cast<int>(cubes_.size()) - 1);
  }

  void out_cube(int row, int cube_id) {
    // cube terms live at layer-2 indices h1+cix; resolved in emit() once the
    // layer-1 unit count is final
    pending_cubes_.emplace_back(row, cube_id);
  }

  int d_;
  DimPair ss_, ref_;
  std::vector<LinExpr> units_;
  std::map<std::string, int> unit_ids_;
  std::map<int, std::vector<std::pair<int, double>>> out_;  // even row → (unit id, coef)
  std::vector<std::vector<std::pair<int, double>>> cubes_;
  std::vector<std::pair<int, int>> pending_cubes_;
  std::map<int, double> bos_target_;
};

}  // namespace

// ── planning ────────────────────────────────────────────────────────────────

CompilationPlan plan_compilation(const FormulaPtr &f, const Alphabet &alphabet, int dim_cap) {
  if (!is_normalized(f))
    throw Error("compile requires a desugared, comparison-normalized formula");
  CompilationPlan plan;
  plan.root = f;
  plan.alphabet = alphabet;

  Collected nodes;
  collect(f, nodes);
  const int md = modal_depth(f);
  plan.strata.resize(md);
  for (int m = 1; m <= md; ++m) plan.strata[m - 1].depth = m;

  for (const FormulaPtr &node : nodes.order) {
    int depth = nodes.depth.at(pretty_print(node));
    if (depth == 0) {
      plan.depth0.push_back(node);
      continue;
    }
    Stratum &st = plan.strata[depth - 1];
    if (node->kind == FKind::Linear) {
      st.comparisons.push_back(node);
      for (const auto &[coef, body] : node->lin.terms) {
        if (is_falsity(body)) continue;  // #[⊥] = 0 contributes nothing
        bool seen = false;
        for (const auto &b : st.count_bodies)
          if (equal(b, body)) seen = true;
        if (!seen) st.count_bodies.push_back(body);
      }
    } else {
      st.booleans.push_back(node);
    }
  }

  // first-fit pair allocation: depth 0, then per stratum counts → comparisons
  // → booleans, then the two special pairs
  int next = 0;
  auto alloc = [&](const std::string &key, DimRole role) {
    DimPair p;
    p.odd = next;
    p.even = next + 1;
    p.role = role;
    next += 2;
    plan.dim_map[key] = p;
  };
  for (const FormulaPtr &node : plan.depth0) alloc(pretty_print(node), DimRole::Boolean);
  for (const Stratum &st : plan.strata) {
    for (const FormulaPtr &body : st.count_bodies)
      alloc("#[" + pretty_print(body) + "]@" + std::to_string(st.depth), DimRole::Count);
    for (const FormulaPtr &node : st.comparisons) alloc(pretty_print(node), DimRole::Boolean);
    for (const FormulaPtr &node : st.booleans) alloc(pretty_print(node), DimRole::Boolean);
  }
  alloc("@ss", DimRole::Reference);
  alloc("@ref", DimRole::Reference);
  plan.d = next;
  if (plan.d > dim_cap)
    throw DimBudgetError("compilation needs " + std::to_string(plan.d) +
                         " dimensions, cap is " + std::to_string(dim_cap));
  return plan;
}

// ── skeleton construction ───────────────────────────────────────────────────

namespace {

struct SkeletonLeaf {
  bool fresh = false;
  DimPair pair;       // live leaf: the pair carrying its truth
  FormulaPtr lin;     // fresh leaf: the comparison node
  MarginInfo margin;  // fresh leaf only
  bool foldable = false;
};

struct SkeletonAnalysis {
  std::vector<SkeletonLeaf> leaves;  // var index → leaf, registration order
  BoolExprPtr expr;
};

class SkeletonBuilder {
 public:
  SkeletonBuilder(const CompilationPlan &plan, const std::map<std::string, int> &depths,
                  int stratum)
      : plan_(plan), depths_(depths), stratum_(stratum) {}

  SkeletonAnalysis analyze(const FormulaPtr &node) {
    SkeletonAnalysis out;
    out.expr = walk(node, out);
    return out;
  }

  // clause extraction over the minterm DNF
  std::vector<ClauseIR> clauses(const SkeletonAnalysis &an) const {
    DnfSkeleton dnf = to_canonical_dnf(an.expr, 16);
    std::vector<ClauseIR> out;
    for (const auto &minterm : dnf.clauses) {
      ClauseIR cl;
      MarginInfo fold;
      bool has_fold = false;
      std::map<std::string, LineObj> lines;
      bool dead = false;
      for (const DnfLiteral &lit : minterm) {
        const SkeletonLeaf &leaf = an.leaves[lit.var];
        if (!leaf.fresh) {
          cl.lits.emplace_back(leaf.pair, lit.negated);
          continue;
        }
        if (!lit.negated && leaf.foldable) {
          // provably ≤ 0 margins: their conjunction folds into one Σ ≥ 0 line
          for (const auto &t : leaf.margin.terms) fold.terms.push_back(t);
          fold.c += leaf.margin.c;
          has_fold = true;
          continue;
        }
        // individual half-space: m ≥ 0, or ¬ → m ≤ −1
        add_halfspace(lines, leaf.margin, lit.negated, dead);
        if (dead) break;
      }
      if (dead) continue;
      if (has_fold) add_halfspace(lines, fold, false, dead);
      if (dead) continue;
      for (auto &[key, obj] : lines) cl.objs.push_back(std::move(obj));
      out.push_back(std::move(cl));
    }
    return out;
  }

 private:
  BoolExprPtr walk(const FormulaPtr &node, SkeletonAnalysis &out) {
    const std::string key = pretty_print(node);
    int depth = depths_.at(key);
    if (depth < stratum_) {
      return bx_var(live_var(plan_.dim_map.at(key), out));
    }
    if (node->kind == FKind::Linear) {
      MarginInfo m = margin_of(node);
      if (margin_tautology(m)) return bx_const(true);
      if (margin_unsatisfiable(m)) return bx_const(false);
      return bx_var(fresh_var(node, std::move(m), out));
    }
    if (node->kind == FKind::And) return bx_and(walk(node->f1, out), walk(node->f2, out));
    if (node->kind == FKind::Not) return bx_not(walk(node->f1, out));
    throw Error("internal: unexpected node in skeleton at depth " + std::to_string(depth));
  }

  int live_var(DimPair p, SkeletonAnalysis &out) {
    for (size_t k = 0; k < out.leaves.size(); ++k)
      if (!out.leaves[k].fresh && out.leaves[k].pair.even == p.even) return static_cast<int>(k);
    SkeletonLeaf leaf;
    leaf.pair = p;
    out.leaves.push_back(std::move(leaf));
    return static_cast<int>(out.leaves.size()) - 1;
  }

  int fresh_var(const FormulaPtr &lin, MarginInfo m, SkeletonAnalysis &out) {
    const std::string key = pretty_print(lin);
    for (size_t k = 0; k < out.leaves.size(); ++k)
      if (out.leaves[k].fresh && pretty_print(out.leaves[k].lin) == key)
        return static_cast<int>(k);
    SkeletonLeaf leaf;
    leaf.fresh = true;
    leaf.lin = lin;
    leaf.foldable = margin_foldable(m);
    leaf.margin = std::move(m);
    out.leaves.push_back(std::move(leaf));
    return static_cast<int>(out.leaves.size()) - 1;
  }

  void add_halfspace(std::map<std::string, LineObj> &lines, const MarginInfo &m, bool negated,
                     bool &dead) const {
    // canonical line: merge coefficients per count pair, flip so the first
    // coefficient is positive
    std::map<int, long long> coefs;
    for (const auto &[coef, body] : m.terms) {
      int row = plan_.dim_map
                    .at("#[" + pretty_print(body) + "]@" + std::to_string(stratum_))
                    .even;
      coefs[row] += coef;
    }
    for (auto it = coefs.begin(); it != coefs.end();) {
      if (it->second == 0)
        it = coefs.erase(it);
      else
        ++it;
    }
    bool flip = !coefs.empty() && coefs.begin()->second < 0;
    std::string key;
    {
      char buf[48];
      for (const auto &[row, coef] : coefs) {
        std::snprintf(buf, sizeof buf, "%d:%lld;", row, flip ? -coef : coef);
        key += buf;
      }
    }
    LineObj &obj = lines[key];
    if (obj.coefs.empty() && !coefs.empty()) {
      for (const auto &[row, coef] : coefs) obj.coefs.emplace_back(flip ? -coef : coef, row);
      obj.omega = 0;
      for (const auto &[coef, row] : obj.coefs) obj.omega += std::llabs(coef);
    }
    // m = L_raw + c;  positive: L_raw ≥ −c;  negated: L_raw ≤ −c − 1
    long long lo_raw = negated ? kNoBound : -m.c;
    long long hi_raw = negated ? -m.c - 1 : kNoBound;
    long long lo = flip ? (hi_raw == kNoBound ? kNoBound : -hi_raw) : lo_raw;
    long long hi = flip ? (lo_raw == kNoBound ? kNoBound : -lo_raw) : hi_raw;
    if (lo != kNoBound) obj.lo = obj.lo == kNoBound ? lo : std::max(obj.lo, lo);
    if (hi != kNoBound) obj.hi = obj.hi == kNoBound ? hi : std::min(obj.hi, hi);
    if (obj.lo != kNoBound && obj.hi != kNoBound && obj.lo > obj.hi) dead = true;
  }

  const CompilationPlan &plan_;
  const std::map<std::string, int> &depths_;
  int stratum_;
};

}  // namespace

// ── embedding ───────────────────────────────────────────────────────────────

namespace {

bool eval_at_symbol(const FormulaPtr &f, char symbol) {
  switch (f->kind) {
    case FKind::Atom:
      return f->atom.size() == 1 && f->atom[0] == symbol;
    case FKind::True:
      return true;
    case FKind::Not:
      return !eval_at_symbol(f->f1, symbol);
    case FKind::And:
      return eval_at_symbol(f->f1, symbol) && eval_at_symbol(f->f2, symbol);
    default:
      throw Error("embedding formulas must have modal depth 0");
  }
}

}  // namespace

std::map<std::string, Mat> build_embedding(const std::vector<FormulaPtr> &depth0,
                                           const Alphabet &alphabet,
                                           const std::map<std::string, DimPair> &dim_map, int d) {
  std::map<std::string, Mat> we;
  DimPair ss = dim_map.at("@ss");
  auto set_pair = [](Mat &col, DimPair p, bool truth) {
    col.at(p.even, 0) = truth ? 1.0 : -1.0;
    col.at(p.odd, 0) = truth ? -1.0 : 1.0;
  };
  {
    Mat bos(d, 1);
    for (const FormulaPtr &f : depth0) set_pair(bos, dim_map.at(pretty_print(f)), false);
    set_pair(bos, ss, true);
    we["BOS"] = std::move(bos);
  }
  for (char c : alphabet.letters) {
    Mat col(d, 1);
    for (const FormulaPtr &f : depth0)
      set_pair(col, dim_map.at(pretty_print(f)), eval_at_symbol(f, c));
    set_pair(col, ss, false);
    we[std::string(1, c)] = std::move(col);
  }
  return we;
}

// ── full compilation ────────────────────────────────────────────────────────

TransformerModel compile(const FormulaPtr &f, const Alphabet &alphabet, int dim_cap) {
  CompilationPlan plan = plan_compilation(f, alphabet, dim_cap);
  std::map<std::string, int> depths;
  {
    Collected nodes;
    collect(f, nodes);
    depths = nodes.depth;
  }
  const int md = static_cast<int>(plan.strata.size());
  const DimPair ss = plan.dim_map.at("@ss");
  const DimPair ref = plan.dim_map.at("@ref");

  TransformerModel model;
  model.alphabet = alphabet;
  model.d = plan.d;
  model.dim_map = plan.dim_map;
  model.root = pretty_print(f);
  model.we = build_embedding(plan.depth0, alphabet, plan.dim_map, plan.d);

  // live Boolean pairs entering each block (key → pair)
  std::vector<std::pair<std::string, DimPair>> live;
  for (const FormulaPtr &node : plan.depth0)
    live.emplace_back(pretty_print(node), plan.dim_map.at(pretty_print(node)));

  for (int m = 1; m <= md; ++m) {
    const Stratum &st = plan.strata[m - 1];
    Block b;
    b.w_q = Mat(1, plan.d);
    b.w_k = Mat(1, plan.d);
    b.w_v = Mat(plan.d, plan.d);

    auto route = [&](DimPair dst, DimPair src) {
      b.w_v.at(dst.odd, src.odd) = 1.0;
      b.w_v.at(dst.even, src.even) = 1.0;
    };
    std::vector<DimPair> stratum_counts;
    for (const FormulaPtr &body : st.count_bodies) {
      DimPair cnt = plan.dim_map.at("#[" + pretty_print(body) + "]@" + std::to_string(m));
      route(cnt, plan.dim_map.at(pretty_print(body)));
      stratum_counts.push_back(cnt);
    }
    route(ref, ss);

    BlockBuilder bb(plan.d, ss, ref);
    for (const auto &[key, p] : live) bb.clamp_job(p, -1.0);
    bb.clamp_job(ss, 1.0);
    for (DimPair cnt : stratum_counts) bb.overwrite_true_job(cnt, -1.0);
    if (m < md)
      bb.reset_job(ref);
    else
      bb.overwrite_true_job(ref, -1.0);

    SkeletonBuilder sb(plan, depths, m);
    auto add_skeleton = [&](const FormulaPtr &node) {
      SkeletonIR ir;
      ir.target = plan.dim_map.at(pretty_print(node));
      SkeletonAnalysis an = sb.analyze(node);
      ir.clauses = sb.clauses(an);
      bb.skeleton_job(ir);
    };
    for (const FormulaPtr &node : st.comparisons) add_skeleton(node);
    for (const FormulaPtr &node : st.booleans) add_skeleton(node);

    // post-LN1 BOS column in β = 1 units: live Booleans are False (−1 even)
    // except the start separator; fresh counts saw only the BOS row (−1);
    // the reference saw only the separator (+1)
    std::vector<double> bos(plan.d, 0.0);
    auto put = [&](DimPair p, double even) {
      bos[p.even] = even;
      bos[p.odd] = -even;
    };
    for (const auto &[key, p] : live) put(p, -1.0);
    put(ss, 1.0);
    put(ref, 1.0);
    for (DimPair cnt : stratum_counts) put(cnt, -1.0);

    b.ffn = bb.emit(bos);
    model.blocks.push_back(std::move(b));

    for (const FormulaPtr &body : st.count_bodies)
      live.emplace_back("#[" + pretty_print(body) + "]@" + std::to_string(m),
                        plan.dim_map.at("#[" + pretty_print(body) + "]@" + std::to_string(m)));
    for (const FormulaPtr &node : st.comparisons)
      live.emplace_back(pretty_print(node), plan.dim_map.at(pretty_print(node)));
    for (const FormulaPtr &node : st.booleans)
      live.emplace_back(pretty_print(node), plan.dim_map.at(pretty_print(node)));
  }

  validate(model);
  return model;
}

std::string compilation_report(const TransformerModel &m, const CompilationPlan &plan) {
  std::ostringstream os;
  os << "formula: " << (plan.root ? pretty_print(plan.root) : m.root) << "\n";
  os << "dimensions: " << m.d << "   blocks: " << m.blocks.size() << "\n\n";
  for (const Stratum &st : plan.strata) {
    os << "block " << st.depth << ":\n";
    os << "  counts:";
    for (const auto &b : st.count_bodies) os << "  #[" << pretty_print(b) << "]";
    os << "\n  comparisons:";
    for (const auto &c : st.comparisons) os << "  " << pretty_print(c);
    os << "\n  booleans:";
    for (const auto &bn : st.booleans) os << "  " << pretty_print(bn);
    if (st.depth <= static_cast<int>(m.blocks.size())) {
      const Block &blk = m.blocks[st.depth - 1];
      os << "\n  ffn:";
      for (const FfnLayer &l : blk.ffn) os << " " << l.w.rows << "x" << l.w.cols;
    }
    os << "\n";
  }
  os << "\ndimension map:\n";
  for (const auto &[key, pair] : m.dim_map) {
    const char *role = pair.role == DimRole::Boolean     ? "boolean"
                       : pair.role == DimRole::Count     ? "count"
                       : pair.role == DimRole::Reference ? "reference"
                                                         : "scratch";
    os << "  (" << pair.odd << "," << pair.even << ")  " << role << "  " << key << "\n";
  }
  return os.str();
}

// ── standalone gadget builders ──────────────────────────────────────────────

namespace {

// tiny helper mirroring BlockBuilder's unit pool for the spec-literal gadgets
struct GadgetFfn {
  int d;
  std::vector<LinExpr> units;
  std::map<std::string, int> ids;
  std::map<int, std::vector<std::pair<int, double>>> out;

  explicit GadgetFfn(int d_) : d(d_) {}
  int unit(const LinExpr &e) {
    std::string k = e.key();
    if (auto it = ids.find(k); it != ids.end()) return it->second;
    ids[k] = static_cast<int>(units.size());
    units.push_back(e);
    return static_cast<int>(units.size()) - 1;
  }
  void add(int row, const LinExpr &arg, double coef) { out[row].emplace_back(unit(arg), coef); }
  void pass(int row, const LinExpr &e, double coef) {
    add(row, e, coef);
    add(row, e.negated(), -coef);
  }
  void mirror_odd() {
    std::map<int, std::vector<std::pair<int, double>>> extra;
    for (const auto &[row, terms] : out)
      for (const auto &[u, c] : terms) extra[row - 1].emplace_back(u, -c);
    for (auto &[row, terms] : extra)
      for (auto &t : terms) out[row].push_back(t);
  }
  std::vector<FfnLayer> layers() const {
    const int h = std::max<int>(1, static_cast<int>(units.size()));
    FfnLayer l1;
    l1.w = Mat(h, d);
    l1.b.assign(h, 0.0);
    for (size_t k = 0; k < units.size(); ++k)
      for (const auto &[r, v] : units[k].c) l1.w.at(static_cast<int>(k), r) = v;
    FfnLayer l2;
    l2.w = Mat(d, h);
    l2.b.assign(d, 0.0);
    for (const auto &[row, terms] : out)
      for (const auto &[u, c] : terms) l2.w.at(row, u) += c;
    return {l1, l2};
  }
};

}  // namespace

CountAttention build_count_attention(const std::vector<std::pair<DimPair, DimPair>> &routes,
                                     DimPair ss, DimPair ref, int d) {
  CountAttention out;
  out.w_v = Mat(d, d);
  std::set<int> taken;
  auto route = [&](DimPair dst, DimPair src) {
    if (!taken.insert(dst.even).second)
      throw Error("count attention: target pair allocated twice");
    out.w_v.at(dst.odd, src.odd) = 1.0;
    out.w_v.at(dst.even, src.even) = 1.0;
  };
  for (const auto &[src, dst] : routes) route(dst, src);
  route(ref, ss);

  // affine fix: even ← (even + 1)/2 with the constant 1 realized as
  // −ss + 2·ReLU(ss), which is +1 at real positions and at BOS alike
  GadgetFfn g(d);
  LinExpr sse = even_of(ss);
  auto fix = [&](DimPair p) {
    g.add(p.even, sse, 1.0);  // 2·ReLU(ss)/2
    LinExpr rest = even_of(p);
    rest.add(sse, 1.0);
    g.pass(p.even, rest, -0.5);  // −(even + ss)/2;  net: (−ss + 2ReLU(ss) − even)/2
  };
  for (const auto &[src, dst] : routes) fix(dst);
  fix(ref);
  g.mirror_odd();
  out.fix_ffn = g.layers();
  return out;
}

std::vector<FfnLayer> build_comparison_ffn(const std::vector<ComparisonSpec> &comparisons,
                                           const std::vector<DimPair> &other_live, DimPair ref,
                                           int d) {
  GadgetFfn g(d);
  LinExpr refe = even_of(ref);  // +1/(i+1)
  for (const ComparisonSpec &cmp : comparisons) {
    LinExpr x;  // Σ a_k·even_k + c·ref = (Σ a_k C_k + c)/(i+1)
    for (const auto &[coef, p] : cmp.terms) x.add(p.even, static_cast<double>(coef));
    x.add(refe, static_cast<double>(cmp.constant));
    g.pass(cmp.target.even, refe, -0.5);
    g.add(cmp.target.even, x, 1.0);
    LinExpr x1 = x;
    x1.add(refe, -1.0);
    g.add(cmp.target.even, x1, -1.0);
  }
  for (DimPair p : other_live) {
    LinExpr x = even_of(p);
    LinExpr a1 = x;
    a1.add(refe, -0.5);
    LinExpr a2 = x.negated();
    a2.add(refe, -0.5);
    g.add(p.even, a1, -1.0);
    g.add(p.even, a2, +1.0);
  }
  g.mirror_odd();
  return g.layers();
}

std::vector<FfnLayer> build_arith_ffn(ArithKind kind, DimPair s1, DimPair s2, DimPair target,
                                      int d) {
  GadgetFfn g(d);
  LinExpr e1 = even_of(s1), e2 = even_of(s2);
  switch (kind) {
    case ArithKind::Add:
      g.pass(target.even, e1, 1.0);
      g.pass(target.even, e2, 1.0);
      break;
    case ArithKind::Sub:
      g.pass(target.even, e1, 1.0);
      g.pass(target.even, e2, -1.0);
      break;
    case ArithKind::Min: {  // min(x,y) = x − ReLU(x−y)
      g.pass(target.even, e1, 1.0);
      LinExpr dxy = e1;
      dxy.add(e2, -1.0);
      g.add(target.even, dxy, -1.0);
      break;
    }
    case ArithKind::Max: {  // max(x,y) = x + ReLU(y−x)
      g.pass(target.even, e1, 1.0);
      LinExpr dyx = e2;
      dyx.add(e1, -1.0);
      g.add(target.even, dyx, 1.0);
      break;
    }
  }
  g.mirror_odd();
  return g.layers();
}

std::vector<FfnLayer> build_boolean_ffn(const std::vector<SkeletonSpec> &skeletons, DimPair unit,
                                        int d) {
  GadgetFfn g(d);
  LinExpr ue = even_of(unit);
  for (const SkeletonSpec &sk : skeletons) {
    for (const auto &clause : sk.dnf.clauses) {
      LinExpr arg;
      for (const DnfLiteral &lit : clause) {
        if (lit.var < 0 || lit.var >= static_cast<int>(sk.literal_pairs.size()))
          throw Error("boolean skeleton literal out of range");
        arg.add(sk.literal_pairs[lit.var].even, lit.negated ? -1.0 : 1.0);
      }
      arg.add(ue, -static_cast<double>(static_cast<long long>(clause.size()) - 1));
      g.add(sk.target.even, arg, 2.0);  // 2·Σ clauses − 1
    }
    g.pass(sk.target.even, ue, -1.0);
  }
  g.mirror_odd();
  return g.layers();
}

std::vector<FfnLayer> build_bos_reset(const std::vector<DimPair> &boolean_pairs, DimPair ss,
                                      int d) {
  GadgetFfn g(d);
  LinExpr sse = even_of(ss);
  for (DimPair p : boolean_pairs) {
    // even′ = min(even, −ss), odd′ = max(odd, ss); with antisymmetric pairs
    // both corrections share the unit ReLU(even + ss)
    LinExpr arg = even_of(p);
    arg.add(sse, 1.0);
    g.add(p.even, arg, -1.0);
    g.add(p.odd, arg, +1.0);
  }
  return g.layers();
}

// ── parallel composition ────────────────────────────────────────────────────

namespace {

Block identity_block(int d) {
  Block b;
  b.w_q = Mat(1, d);
  b.w_k = Mat(1, d);
  b.w_v = Mat(d, d);
  FfnLayer l1;
  l1.w = Mat(1, d);
  l1.b.assign(1, 0.0);
  FfnLayer l2;
  l2.w = Mat(d, 1);
  l2.b.assign(d, 0.0);
  b.ffn = {std::move(l1), std::move(l2)};
  return b;
}

// pad a ReLU stack to `depth` layers by inserting identity squares after the
// first layer (safe: post-ReLU activations are nonnegative)
std::vector<FfnLayer> pad_ffn(std::vector<FfnLayer> ffn, size_t depth) {
  while (ffn.size() < depth) {
    int h = ffn.front().w.rows;
    FfnLayer id;
    id.w = Mat(h, h);
    for (int k = 0; k < h; ++k) id.w.at(k, k) = 1.0;
    id.b.assign(h, 0.0);
    ffn.insert(ffn.begin() + 1, std::move(id));
  }
  return ffn;
}

}  // namespace

TransformerModel parallel_compose(const TransformerModel &m1, const TransformerModel &m2) {
  if (!(m1.alphabet == m2.alphabet)) throw Error("parallel_compose: alphabet mismatch");
  TransformerModel out;
  out.alphabet = m1.alphabet;
  out.d = m1.d + m2.d;
  out.root = m1.root;

  for (const auto &[sym, col1] : m1.we) {
    auto it = m2.we.find(sym);
    if (it == m2.we.end()) throw Error("parallel_compose: embedding tables disagree on " + sym);
    Mat col(out.d, 1);
    for (int r = 0; r < m1.d; ++r) col.at(r, 0) = col1.at(r, 0);
    for (int r = 0; r < m2.d; ++r) col.at(m1.d + r, 0) = it->second.at(r, 0);
    out.we[sym] = std::move(col);
  }

  const size_t nblocks = std::max(m1.blocks.size(), m2.blocks.size());
  for (size_t k = 0; k < nblocks; ++k) {
    Block b1 = k < m1.blocks.size() ? m1.blocks[k] : identity_block(m1.d);
    Block b2 = k < m2.blocks.size() ? m2.blocks[k] : identity_block(m2.d);
    const size_t depth = std::max(b1.ffn.size(), b2.ffn.size());
    b1.ffn = pad_ffn(std::move(b1.ffn), depth);
    b2.ffn = pad_ffn(std::move(b2.ffn), depth);

    Block b;
    b.w_q = Mat(1, out.d);
    b.w_k = Mat(1, out.d);
    for (int c = 0; c < m1.d; ++c) {
      b.w_q.at(0, c) = b1.w_q.at(0, c);
      b.w_k.at(0, c) = b1.w_k.at(0, c);
    }
    // m2's scores are dropped: compiled models have zero Q/K, so both halves
    // agree on uniform attention; composing genuinely nonuniform models is
    // outside this construction
    b.w_v = Mat(out.d, out.d);
    for (int r = 0; r < m1.d; ++r)
      for (int c = 0; c < m1.d; ++c) b.w_v.at(r, c) = b1.w_v.at(r, c);
    for (int r = 0; r < m2.d; ++r)
      for (int c = 0; c < m2.d; ++c) b.w_v.at(m1.d + r, m1.d + c) = b2.w_v.at(r, c);

    for (size_t li = 0; li < depth; ++li) {
      const FfnLayer &f1 = b1.ffn[li];
      const FfnLayer &f2 = b2.ffn[li];
      FfnLayer l;
      l.w = Mat(f1.w.rows + f2.w.rows, f1.w.cols + f2.w.cols);
      for (int r = 0; r < f1.w.rows; ++r)
        for (int c = 0; c < f1.w.cols; ++c) l.w.at(r, c) = f1.w.at(r, c);
      for (int r = 0; r < f2.w.rows; ++r)
        for (int c = 0; c < f2.w.cols; ++c) l.w.at(f1.w.rows + r, f1.w.cols + c) = f2.w.at(r, c);
      l.b = f1.b;
      l.b.insert(l.b.end(), f2.b.begin(), f2.b.end());
      b.ffn.push_back(std::move(l));
    }
    out.blocks.push_back(std::move(b));
  }

  out.dim_map = m1.dim_map;
  for (const auto &[key, pair] : m2.dim_map) {
    if (out.dim_map.count(key)) continue;
    DimPair shifted = pair;
    shifted.odd += m1.d;
    shifted.even += m1.d;
    out.dim_map[key] = shifted;
  }
  validate(out);
  return out;
}

}  // namespace ktc
