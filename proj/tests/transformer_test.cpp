// transformer_test.cpp — the numeric runtime on hand-built weights: embedding
// layout, uniform masked attention, LayerNorm, ReLU stacks, post-norm block
// composition, traces, and bit-exact serialization.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "ktc/transformer.hpp"

namespace ktc {
namespace {

Alphabet ab() {
  Alphabet a;
  a.letters = {'a', 'b'};
  return a;
}

Mat column2(double x, double y) {
  Mat m(2, 1);
  m.at(0, 0) = x;
  m.at(1, 0) = y;
  return m;
}

// d = 2 toy model: one block, identity value routing, tiny two-layer FFN.
TransformerModel tiny_model() {
  TransformerModel m;
  m.alphabet = ab();
  m.d = 2;
  m.we["BOS"] = column2(1, -1);
  m.we["a"] = column2(2, -2);
  m.we["b"] = column2(-1, 1);
  Block b;
  b.w_q = Mat(1, 2);
  b.w_k = Mat(1, 2);
  b.w_v = Mat(2, 2);
  b.w_v.at(0, 0) = 1;
  b.w_v.at(1, 1) = 1;
  FfnLayer l1, l2;
  l1.w = Mat(2, 2);
  l1.w.at(0, 0) = 1;
  l1.w.at(1, 1) = 1;
  l1.b = {0, 0};
  l2.w = Mat(2, 2);
  l2.w.at(0, 0) = 0.125;
  l2.w.at(1, 1) = 0.125;
  l2.b = {0, 0};
  b.ffn = {l1, l2};
  m.blocks.push_back(b);
  m.dim_map["Q_a"] = DimPair{0, 1, DimRole::Boolean};
  m.root = "Q_a";
  return m;
}

TEST(Embed, BosThenPositions) {
  TransformerModel m = tiny_model();
  Mat A = word_embed(m, "ab");
  ASSERT_EQ(A.rows, 2);
  ASSERT_EQ(A.cols, 3);
  EXPECT_EQ(A.at(0, 0), 1);   // BOS
  EXPECT_EQ(A.at(0, 1), 2);   // a
  EXPECT_EQ(A.at(0, 2), -1);  // b
}

TEST(Attention, ZeroScoresGiveCausalPrefixMeans) {
  TransformerModel m = tiny_model();
  Mat A = word_embed(m, "ab");
  Mat C = self_attention(m.blocks[0], A);
  // col 0: BOS only; col 1: (BOS+a)/2; col 2: (BOS+a+b)/3
  EXPECT_DOUBLE_EQ(C.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(C.at(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(C.at(0, 2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(C.at(1, 2), -2.0 / 3.0);
}

TEST(Attention, FutureMaskingIgnoresLaterPositions) {
  TransformerModel m = tiny_model();
  Mat A1 = self_attention(m.blocks[0], word_embed(m, "ab"));
  Mat A2 = self_attention(m.blocks[0], word_embed(m, "aa"));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)  // columns BOS and position 1 agree
      EXPECT_DOUBLE_EQ(A1.at(r, c), A2.at(r, c));
}

TEST(Attention, NonzeroScoresReweight) {
  TransformerModel m = tiny_model();
  Block b = m.blocks[0];
  b.w_q.at(0, 0) = 1;
  b.w_k.at(0, 0) = 1;
  Mat uniform = self_attention(m.blocks[0], word_embed(m, "ab"));
  Mat scored = self_attention(b, word_embed(m, "ab"));
  EXPECT_NE(uniform.at(0, 2), scored.at(0, 2));
}

TEST(LayerNorm, FrozenColumn) {
  Mat A(2, 1);
  A.at(0, 0) = 3;
  A.at(1, 0) = 1;
  Mat L = layer_norm(A);
  EXPECT_DOUBLE_EQ(L.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(L.at(1, 0), -1.0);
}

TEST(LayerNorm, ZeroVarianceThrows) {
  Mat A(2, 1);
  A.at(0, 0) = 5;
  A.at(1, 0) = 5;
  EXPECT_THROW(layer_norm(A), ZeroVarianceError);
}

TEST(Ffn, ReluBetweenLayersNotAfter) {
  TransformerModel m = tiny_model();
  Block b = m.blocks[0];
  b.ffn[1].w.at(0, 0) = -1;  // negate after the hidden ReLU
  b.ffn[1].w.at(1, 1) = -1;
  Mat A(2, 2);
  A.at(0, 0) = -3;  // clipped by the hidden ReLU
  A.at(1, 0) = 2;
  A.at(0, 1) = 4;
  A.at(1, 1) = -1;
  Mat F = ffn(b, A);
  EXPECT_DOUBLE_EQ(F.at(0, 0), 0.0);   // ReLU(-3) = 0, then negated
  EXPECT_DOUBLE_EQ(F.at(1, 0), -2.0);  // negative output survives: no final ReLU
  EXPECT_DOUBLE_EQ(F.at(0, 1), -4.0);
  EXPECT_DOUBLE_EQ(F.at(1, 1), 0.0);
}

TEST(Block, PostNormComposition) {
  TransformerModel m = tiny_model();
  const Block &b = m.blocks[0];
  Mat A = word_embed(m, "ab");
  Mat sa = self_attention(b, A);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) sa.at(r, c) += A.at(r, c);
  Mat l1 = layer_norm(sa);
  Mat f = ffn(b, l1);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) f.at(r, c) += l1.at(r, c);
  Mat want = layer_norm(f);

  Mat got = block_forward(b, A);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) EXPECT_NEAR(got.at(r, c), want.at(r, c), 1e-15);
}

TEST(Trace, LastPostNormIsTheModelOutput) {
  TransformerModel m = tiny_model();
  std::vector<BlockIntermediates> trace = model_forward_trace(m, "abba");
  ASSERT_EQ(trace.size(), 1u);
  Mat out = model_forward(m, "abba");
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c)
      EXPECT_DOUBLE_EQ(trace.back().post_ln2.at(r, c), out.at(r, c));
}

TEST(Validate, AcceptsTinyRejectsBroken) {
  TransformerModel m = tiny_model();
  EXPECT_NO_THROW(validate(m));

  TransformerModel odd = tiny_model();
  odd.d = 3;
  EXPECT_THROW(validate(odd), Error);

  TransformerModel missing = tiny_model();
  missing.we.erase("b");
  EXPECT_THROW(validate(missing), Error);

  TransformerModel lopsided = tiny_model();
  lopsided.blocks[0].ffn[1].w = Mat(1, 2);  // FFN no longer returns d rows
  lopsided.blocks[0].ffn[1].b = {0};
  EXPECT_THROW(validate(lopsided), Error);
}

TEST(Serialize, BitExactRoundTrip) {
  TransformerModel m = tiny_model();
  m.we["a"].at(0, 0) = 0.1;  // not representable in binary: exact bits must survive
  m.we["a"].at(1, 0) = -0.1;
  std::string path =
      (std::filesystem::temp_directory_path() / "weight_roundtrip_test.json").string();
  save_model(m, path);
  TransformerModel again = load_model(path);
  std::remove(path.c_str());

  EXPECT_EQ(again.d, m.d);
  EXPECT_TRUE(again.alphabet == m.alphabet);
  EXPECT_EQ(again.root, m.root);
  ASSERT_EQ(again.blocks.size(), m.blocks.size());
  EXPECT_EQ(again.we.at("a").a, m.we.at("a").a);  // bitwise
  EXPECT_EQ(again.blocks[0].w_v.a, m.blocks[0].w_v.a);
  EXPECT_EQ(again.blocks[0].ffn[1].w.a, m.blocks[0].ffn[1].w.a);
  ASSERT_TRUE(again.dim_map.count("Q_a"));
  EXPECT_EQ(again.dim_map.at("Q_a").even, 1);

  Mat a = model_forward(m, "abab");
  Mat b = model_forward(again, "abab");
  EXPECT_EQ(a.a, b.a);  // identical weights, identical arithmetic
}

}  // namespace
}  // namespace ktc
