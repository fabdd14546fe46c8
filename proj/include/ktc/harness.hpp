// harness.hpp — differential testing, the exact-rational shadow, fuzzers,
// the built-in corpus, and the acceptance suite.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ktc/ast.hpp"
#include "ktc/interp.hpp"
#include "ktc/transformer.hpp"
#include "ktc/translate.hpp"

namespace ktc {

using Rational = boost::multiprecision::cpp_rational;

// ── corpus ──────────────────────────────────────────────────────────────────

// Formula table entries (built in code; the corpus/ files must parse to these).
FormulaPtr corpus_astar_bstar();        // over {a,b}
FormulaPtr corpus_astar_bstar_astar();  // over {a,b}
FormulaPtr corpus_anbncn();             // over {a,b,c}
FormulaPtr corpus_dyck1();              // over {(,)}
FormulaPtr corpus_hello();              // over {e,h,l,o}
Alphabet corpus_alphabet(const std::string &id);

// Dyck-1 program (8 ops: the = 0 comparison needs a named zero) and the
// further example programs.
CraspProgram corpus_dyck1_program();
CraspProgram corpus_astar_bstar_program();
CraspProgram corpus_astar_bstar_astar_program();
CraspProgram corpus_anbncn_program();
CraspProgram corpus_hello_program();

// Dyck-1 language model: N_( = ¬Q_EOS-analog (always true), N_) = C_) < C_(,
// N_EOS = accept.
LmProgram corpus_dyck1_lm();

// φ_s per the subsequence recursion (≥2 clause for repeated letters);
// modal_depth(φ_s) = |s|.
FormulaPtr subsequence_formula(const std::string &s);

// ── string enumeration / generation ─────────────────────────────────────────

// All words over the alphabet with 1 <= |w| <= max_len, shortlex order.
std::vector<std::string> enumerate_words(const Alphabet &alphabet, int max_len);

// Uniform i.i.d. letters, length uniform in [1, max_len].
std::string random_word(const Alphabet &alphabet, int max_len, std::mt19937_64 &rng);
// Near-member generator: balanced-paren-style strings with a few mutations.
std::string biased_word(const Alphabet &alphabet, int max_len, std::mt19937_64 &rng);

// ── differential testing ────────────────────────────────────────────────────

struct Disagreement {
  std::string word;
  std::string subformula;
  int position = 0;  // 1-indexed word position
};

struct DiffReport {
  std::string program_id;
  long long strings_tested = 0;
  long long checks = 0;
  double max_abszero_dev = 0.0;  // max | |activation| − 1 | over Boolean pairs
  std::optional<Disagreement> first_counterexample;
  bool agreed() const { return !first_counterexample.has_value(); }
};

struct EnumerationSpec {
  int exhaustive_max_len = 0;  // 0 = skip
  int random_count = 0;
  int random_max_len = 0;
  uint64_t seed = 0;
};

// Runs the model on every word, compares the sign of each Boolean pair's even
// dim at column i+1 with eval_formula of the dim_map subformula at (w,i).
DiffReport diff_test(const FormulaPtr &f, const TransformerModel &model,
                     const EnumerationSpec &spec, const std::string &program_id = "");

std::string to_json(const DiffReport &r);

// ── exact-rational shadow ───────────────────────────────────────────────────

struct NonUniformAttentionError : Error {
  NonUniformAttentionError() : Error("rational shadow requires zero attention scores") {}
};

// Exact replay: values between normalizations are rational matrices with one
// symbolic positive scale per column (actual = m/sqrt(q)); LayerNorm drops the
// incoming scale, so every comparison below is exact.
struct ShadowStream {
  std::vector<std::vector<Rational>> m;  // [row][col]
  std::vector<Rational> q;               // per-column scale², actual = m/sqrt(q)
};

struct ShadowCertificate {
  bool count_ratios_exact = true;   // (count_even+u)/(ref_even+u) == C(i) at every stratum
  bool halfstep_exact = true;       // pre-LN2 live dims all share one magnitude per column
  bool final_pm_one_exact = true;   // final live dims are exactly ±1
  double max_float_dev_pre_ln = 0;  // float runtime vs shadow at pre-LN points
};

ShadowCertificate rational_shadow_forward(const TransformerModel &m, const std::string &w,
                                          const FormulaPtr &f);

// ── fuzzers (deterministic per seed) ────────────────────────────────────────

FormulaPtr fuzz_formula(const Alphabet &alphabet, int max_depth, std::mt19937_64 &rng);
CraspProgram fuzz_crasp(const Alphabet &alphabet, int max_ops, std::mt19937_64 &rng);
BinCountProgram fuzz_bincount(const Alphabet &alphabet, int max_ops, std::mt19937_64 &rng);
FocNormalForm fuzz_foc_nf(const Alphabet &alphabet, int max_counted, std::mt19937_64 &rng);

// ── acceptance suite ────────────────────────────────────────────────────────

// Runs the nine acceptance criteria, one "PASS/FAIL criterion-k: …" line each;
// corpus_dir points at the shipped corpus files (checked against the built-in
// constructors). Returns true iff all criteria pass.
bool run_acceptance_suite(std::ostream &out, const std::string &corpus_dir);

}  // namespace ktc
