// interp.hpp — reference semantics: formula evaluation at positions, program
// traces, end-satisfaction/acceptance, and the autoregressive LM semantics.
//
// Positions are 1-indexed: w,i with 1 <= i <= |w|.  #[F] at (w,i) counts the
// positions j in [1,i] where w,j satisfies F.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "ktc/ast.hpp"

namespace ktc {

struct PositionError : Error {
  PositionError(int i, int n)
      : Error("position " + std::to_string(i) + " out of range [1," + std::to_string(n) + "]") {}
};

bool eval_formula(const FormulaPtr &f, const std::string &w, int i);
long long eval_count(const CountPtr &c, const std::string &w, int i);

// eval_formula at the last position; empty words raise EmptyWordError.
bool end_satisfies(const FormulaPtr &f, const std::string &w);

// ── program execution ───────────────────────────────────────────────────────

struct CraspTrace {
  // Per op (program order): Boolean ops fill bools[name], count ops ints[name];
  // vectors are indexed 0..n-1 for positions 1..n.
  std::map<std::string, std::vector<bool>> bools;
  std::map<std::string, std::vector<long long>> ints;
};

CraspTrace run_crasp(const CraspProgram &p, const std::string &w);
bool crasp_accepts(const CraspProgram &p, const std::string &w);  // EmptyWordError on ""

// ── language models (autoregressive, greedy) ────────────────────────────────

// base program + next-symbol predicates; symbols are 1-char strings or "EOS".
struct LmProgram {
  CraspProgram base;
  std::vector<std::pair<std::string, std::string>> next;  // symbol → Boolean op name

  const std::string &predicate_for(const std::string &symbol) const;
};
void validate(const LmProgram &lm);

// True iff w,i ⊨ N_{w_{i+1}} for all 1 <= i < |w| and w,|w| ⊨ N_EOS.
bool lm_assigns_nonzero(const LmProgram &lm, const std::string &w);

enum class DecodeOutcome : uint8_t { Eos, MaxSteps, Stuck };
struct DecodeResult {
  std::string text;  // prompt plus appended symbols (EOS not included)
  DecodeOutcome outcome;
};

// Repeatedly appends the tie-break-least symbol a with w,|w| ⊨ N_a; stops when
// that symbol is EOS or when |text| reaches max_steps (a cap on total length).
// tie_break lists every alphabet letter plus "EOS" exactly once.
DecodeResult lm_greedy_decode(const LmProgram &lm, const std::string &prompt, int max_steps,
                              const std::vector<std::string> &tie_break);

// Declaration-order tie break with EOS last (the default documented order).
std::vector<std::string> default_tie_break(const Alphabet &alphabet);

}  // namespace ktc
