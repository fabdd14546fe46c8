// transformer.hpp — numeric runtime: word embeddings with prepended BOS,
// future-masked softmax self-attention, ReLU feed-forward stacks, the
// parameter-free LayerNorm, and post-norm blocks.
//
// Streams are d rows × (n+1) columns of 64-bit doubles; column 1 is BOS and
// column i+1 holds position i of the input word.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ktc/ast.hpp"

namespace ktc {

// Row-major dense matrix.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  double &at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

struct ShapeError : Error {
  using Error::Error;
};

struct FfnLayer {
  Mat w;                  // out × in
  std::vector<double> b;  // out
};

struct Block {
  // Single-head attention; d_k = 1. Scores are (W_Q x)·(W_K y)/sqrt(d_k),
  // future-masked; compiled models keep W_Q = W_K = 0 (uniform attention).
  Mat w_q;  // d_k × d
  Mat w_k;  // d_k × d
  Mat w_v;  // d × d
  // ReLU between consecutive layers, none after the last. Two entries is the
  // standard shape (W1,b1,W2,b2); the compiler widens to three for Boolean
  // skeletons whose clauses couple two or more fresh comparisons.
  std::vector<FfnLayer> ffn;
};

enum class DimRole : uint8_t { Boolean, Count, Reference, Scratch };

struct DimPair {
  int odd = 0, even = 0;  // 0-based row indices; even = odd + 1
  DimRole role = DimRole::Boolean;
};

struct TransformerModel {
  Alphabet alphabet;
  int d = 0;                        // even
  std::map<std::string, Mat> we;    // symbol ("a", …, "BOS") → d×1 column
  std::vector<Block> blocks;
  std::map<std::string, DimPair> dim_map;  // pretty-printed subformula → pair;
                                           // "@ss" and "@ref" are the special pairs
  std::string root;                 // pretty-print of the compiled formula
};

void validate(const TransformerModel &m);

using ResidualStream = Mat;  // d × (n+1)

ResidualStream word_embed(const TransformerModel &m, const std::string &w);

// c_i = Σ_{j<=i} exp(s_ij)·W_V A_j / Σ_{j<=i} exp(s_ij).
Mat self_attention(const Block &b, const Mat &A, bool future_masked = true);

Mat ffn(const Block &b, const Mat &A);

// Per column: (x − μ)/σ with σ = sqrt(mean (x−μ)²); throws on σ = 0.
Mat layer_norm(const Mat &A);

struct ZeroVarianceError : Error {
  ZeroVarianceError(int col)
      : Error("layer_norm: zero variance at column " + std::to_string(col)) {}
};

// LN2(FFN(A') + A'), A' = LN1(SA(A) + A).
ResidualStream block_forward(const Block &b, const ResidualStream &A);
ResidualStream model_forward(const TransformerModel &m, const std::string &w);

// Exposes each block's intermediate streams for the shadow and the harness.
struct BlockIntermediates {
  Mat pre_ln1;   // SA(A) + A
  Mat post_ln1;  // A'
  Mat pre_ln2;   // FFN(A') + A'
  Mat post_ln2;
};
std::vector<BlockIntermediates> model_forward_trace(const TransformerModel &m,
                                                    const std::string &w);

// Bit-exact serialization: every real is written as a hexadecimal float.
void save_model(const TransformerModel &m, const std::string &path);
TransformerModel load_model(const std::string &path);

}  // namespace ktc
