// compile.hpp — formula → transformer weights with exactly modal_depth(f)
// blocks: modal-depth stratification, masked uniform counting attention,
// fused piecewise-linear decision FFNs, BOS handling, parallel composition.
//
// Residual-stream conventions (compiled models):
//   - every subformula gets a (odd, even) pair with even = −odd at all times;
//   - Boolean pair value at column i+1 is (−1,+1)·truth sign: even = +1 iff
//     w,i ⊨ ψ; BOS column is False in every Boolean pair;
//   - count pairs are zero until their stratum's attention writes the raw
//     prefix mean 2C(i)/(i+1) − 1 (even), the fused FFN consumes them and
//     overwrites the pair with a live ±half-step Boolean;
//   - "@ss" is True only at BOS; "@ref" is recomputed by every attention
//     layer (its prior is reset to zero between blocks) and holds the raw
//     2/(i+1) − 1, giving the FFN the per-column step τ = ρ − ss_even;
//   - between blocks every live dimension is ±1 exactly; dims not yet
//     written are 0.

#pragma once

#include <string>
#include <vector>

#include "ktc/ast.hpp"
#include "ktc/transformer.hpp"

namespace ktc {

struct DimBudgetError : Error {
  using Error::Error;
};

// One stratum per modal depth 1..md: the count bodies written by that block's
// attention, the Linear comparisons decided by its FFN, and the Boolean
// subformulas (skeletons over live literals and fresh comparisons) computed
// alongside them.
struct Stratum {
  int depth = 1;
  std::vector<FormulaPtr> count_bodies;  // ψ with #[ψ] at this depth
  std::vector<FormulaPtr> comparisons;   // Linear nodes of this depth
  std::vector<FormulaPtr> booleans;      // non-Linear Boolean nodes of this depth
};

struct CompilationPlan {
  FormulaPtr root;
  Alphabet alphabet;
  std::vector<FormulaPtr> depth0;  // embedding-resident Boolean subformulas
  std::vector<Stratum> strata;     // index k ↔ depth k+1
  std::map<std::string, DimPair> dim_map;
  int d = 0;
};

CompilationPlan plan_compilation(const FormulaPtr &f, const Alphabet &alphabet,
                                 int dim_cap = 4096);

// Input must be desugared and comparison-normalized (Linear nodes only).
TransformerModel compile(const FormulaPtr &f, const Alphabet &alphabet, int dim_cap = 4096);

// Human-readable stratum table / dim map / gadget inventory.
std::string compilation_report(const TransformerModel &m, const CompilationPlan &plan);

// ── standalone gadget builders (unit-level, paper-literal forms) ────────────

// Embedding columns for depth-0 formulas: ±1 Boolean pairs per symbol, the
// start-separating pair True only at BOS, zeros for count pairs.
std::map<std::string, Mat> build_embedding(const std::vector<FormulaPtr> &depth0,
                                           const Alphabet &alphabet,
                                           const std::map<std::string, DimPair> &dim_map, int d);

// W_V identity-routes each source pair into its count target and the
// start-sep pair into the reference pair; the returned FFN applies the affine
// fix ((v+1)/2 via the start-sep unit) so targets hold ∓C(i)/(i+1).
struct CountAttention {
  Mat w_v;
  std::vector<FfnLayer> fix_ffn;
};
CountAttention build_count_attention(const std::vector<std::pair<DimPair, DimPair>> &routes,
                                     DimPair ss, DimPair ref, int d);

// gtz(Σ a_k·C_k + c + 0.5) per comparison, on affine-fixed count pairs
// (±C/(i+1)) with the reference pair supplying the ramp width; also clamps
// every other listed live dimension to the same ± half-step.
struct ComparisonSpec {
  std::vector<std::pair<long long, DimPair>> terms;  // coefficient, count pair
  long long constant = 0;
  DimPair target;
};
std::vector<FfnLayer> build_comparison_ffn(const std::vector<ComparisonSpec> &comparisons,
                                           const std::vector<DimPair> &other_live, DimPair ref,
                                           int d);

// target ← min/max/sum/difference of two source pairs (count layout:
// even components combined, odd components mirrored).
enum class ArithKind : uint8_t { Add, Sub, Min, Max };
std::vector<FfnLayer> build_arith_ffn(ArithKind kind, DimPair s1, DimPair s2, DimPair target,
                                      int d);

// Canonical-DNF combination of ±1 literal pairs into a ±1 target pair;
// clause units ReLU(Σ B_k − (|K|−1)·unit) with the constant drawn from the
// always-True unit pair.
struct SkeletonSpec {
  DnfSkeleton dnf;
  std::vector<DimPair> literal_pairs;  // index = DnfLiteral::var
  DimPair target;
};
std::vector<FfnLayer> build_boolean_ffn(const std::vector<SkeletonSpec> &skeletons, DimPair unit,
                                        int d);

// Forces BOS columns of the listed Boolean pairs to False via min/max with
// the start-separating pair; identity elsewhere; idempotent.
std::vector<FfnLayer> build_bos_reset(const std::vector<DimPair> &boolean_pairs, DimPair ss,
                                      int d);

// Block-diagonal composition: d = d1 + d2, embeddings concatenated, shallower
// model padded with identity blocks, m2's dim_map keys kept only when m1
// lacks them ("@ss"/"@ref" resolve to m1's pairs).
TransformerModel parallel_compose(const TransformerModel &m1, const TransformerModel &m2);

}  // namespace ktc
