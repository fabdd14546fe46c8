// parse.hpp — surface syntax for formulas, programs, LM definitions, and
// normal-form count/constraint files.
//
// Formula grammar (precedence low→high; all binary Boolean ops left-assoc):
//
//   formula   ::= disj
//   disj      ::= conj ('|' conj)*
//   conj      ::= unary ('&' unary)*
//   unary     ::= '!' unary | cmp
//   cmp       ::= sum (relop sum)*          chained relops = pairwise conjunction
//   relop     ::= '<=' | '<' | '=' | '>=' | '>'
//   sum       ::= primary (('+'|'-') primary)*
//   primary   ::= 'T' | 'Q_'sym | '#[' formula ']' | NAT | 'i'
//               | 'lin(' lincomb ')' | '(' formula ')'
//   lincomb   ::= ['-'] sterm (('+'|'-') sterm)*   meaning  lincomb >= 0
//   sterm     ::= NAT '*' '#[' formula ']' | '#[' formula ']' | NAT
//
// Sorts are inferred after parsing: relops/+/- force count operands, &,|,!
// force Boolean, mixing is an error. 'Q_x' reads one symbol character unless
// the following character is alphanumeric, in which case the maximal
// alphanumeric run is the symbol (so Q_( and Q_ab both tokenize).
//
// Program grammar: one op per line, `name(i) := rhs` with rhs one of
//   Q_a(i)   !B(i)   B1(i) & B2(i)   C1(i) <= C2(i)  (also < = >= >)   1
//   #[j<=i] B(j)   if B(i) then C1(i) else C2(i)   C1(i) + C2(i)
//   C1(i) - C2(i)   min(C1(i), C2(i))   max(C1(i), C2(i))   c
// `B1(i) | B2(i)` is accepted and desugared into `$`-suffixed auxiliary ops.
// The extended form `name(i) := #2[j<=i] <bool-expr over X(i)/X(j)>` is parsed
// into BinCountProgram for desugar_binary_count.
//
// Every file starts (after comments) with `alphabet: a b c`.  `#` begins a
// comment unless followed by `[` or `2[`.  LM files add lines
// `next a := OpName` (one per letter plus `next EOS := OpName`).
// Normal-form files use `count x := <formula>` and
// `constraint <lincomb> >= 0` lines.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ktc/ast.hpp"
#include "ktc/interp.hpp"
#include "ktc/translate.hpp"

namespace ktc {

// Formula text (no alphabet header), desugared on return.
FormulaPtr parse_kt(const std::string &text, const Alphabet &alphabet);
// Same, but sugar is kept (for desugar() tests and the pretty-print round trip).
FormulaPtr parse_kt_sugared(const std::string &text, const Alphabet &alphabet);

// Program text (no alphabet header).
CraspProgram parse_crasp(const std::string &text, const Alphabet &alphabet);

// Whole files, including the `alphabet:` header.
struct KtFile {
  Alphabet alphabet;
  FormulaPtr formula;  // desugared
};
KtFile parse_kt_file(const std::string &text);
CraspProgram parse_crasp_file(const std::string &text);
LmProgram parse_lm_file(const std::string &text);
FocNormalForm parse_foc_file(const std::string &text);
BinCountProgram parse_bincount_file(const std::string &text);

// Dispatch on extension: .kt/.crasp/.lm/.foc; reads the file from disk.
enum class FileKind { Kt, Crasp, Lm, Foc };
FileKind classify_path(const std::string &path);
std::string read_file(const std::string &path);

}  // namespace ktc
