// compiler_test.cpp — formula → weights, checked against the interpreter via
// the differential harness plus structural assertions on plans and budgets.
// Gadget internals get no isolated tests here; faults injected into finished
// models prove the harness would catch a wrong gadget.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ktc/compile.hpp"
#include "ktc/harness.hpp"
#include "ktc/interp.hpp"
#include "ktc/parse.hpp"
#include "ktc/passes.hpp"
#include "ktc/transformer.hpp"

namespace ktc {
namespace {

Alphabet ab() {
  Alphabet a;
  a.letters = {'a', 'b'};
  return a;
}

FormulaPtr prep(const std::string &text, const Alphabet &alphabet) {
  return normalize_comparison(parse_kt(text, alphabet));
}

FormulaPtr norm(const FormulaPtr &sugared) { return normalize_comparison(desugar(sugared)); }

EnumerationSpec exhaustive(int max_len) {
  EnumerationSpec s;
  s.exhaustive_max_len = max_len;
  return s;
}

TEST(Compile, ZeroDepthFormulaHasNoBlocks) {
  FormulaPtr f = prep("Q_a", ab());
  TransformerModel m = compile(f, ab());
  EXPECT_EQ(m.blocks.size(), 0u);
  EXPECT_NO_THROW(validate(m));

  DiffReport r = diff_test(f, m, exhaustive(4));
  EXPECT_TRUE(r.agreed());
  EXPECT_LE(r.max_abszero_dev, 1e-6);
}

TEST(Compile, BlockCountEqualsModalDepth) {
  struct Row {
    FormulaPtr f;
    Alphabet a;
    int depth;
  };
  std::vector<Row> rows = {
      {prep("Q_a & !Q_b", ab()), ab(), 0},
      {prep("#[Q_a] >= 1", ab()), ab(), 1},
      {norm(corpus_dyck1()), corpus_alphabet("dyck1"), 2},
      {norm(corpus_hello()), corpus_alphabet("hello"), 3},
  };
  for (const Row &row : rows) {
    EXPECT_EQ(modal_depth(row.f), row.depth);
    TransformerModel m = compile(row.f, row.a);
    EXPECT_EQ(static_cast<int>(m.blocks.size()), row.depth);
  }
}

TEST(Compile, AgreesWithInterpreterAtEveryPositionAndSubformula) {
  std::vector<std::string> texts = {
      "#[Q_a] >= 1",
      "#[Q_a] = #[Q_b]",
      "#[Q_a & #[Q_b] >= 1] = 0",
      "!(#[Q_a] < 2) | Q_b",
      "#[Q_a] + #[Q_b] <= #[T] - #[Q_a]",
  };
  for (const std::string &text : texts) {
    FormulaPtr f = prep(text, ab());
    TransformerModel m = compile(f, ab());
    DiffReport r = diff_test(f, m, exhaustive(6));
    EXPECT_TRUE(r.agreed()) << text << " word " << r.first_counterexample->word << " sub "
                            << r.first_counterexample->subformula;
    EXPECT_LE(r.max_abszero_dev, 1e-6) << text;
  }
}

TEST(Compile, BosColumnReadsFalse) {
  FormulaPtr f = norm(corpus_dyck1());
  TransformerModel m = compile(f, corpus_alphabet("dyck1"));
  Mat out = model_forward(m, "()");
  const DimPair root = m.dim_map.at(m.root);
  EXPECT_NEAR(out.at(root.even, 0), -1.0, 1e-6);  // BOS is always False
  EXPECT_NEAR(out.at(root.even, 2), 1.0, 1e-6);   // "()" is balanced
}

TEST(Compile, CompiledModelSurvivesDiskRoundTrip) {
  FormulaPtr f = norm(corpus_dyck1());
  TransformerModel m = compile(f, corpus_alphabet("dyck1"));
  std::string path =
      (std::filesystem::temp_directory_path() / "compiled_roundtrip_test.json").string();
  save_model(m, path);
  TransformerModel again = load_model(path);
  std::remove(path.c_str());
  Mat x = model_forward(m, "(())()");
  Mat y = model_forward(again, "(())()");
  EXPECT_EQ(x.a, y.a);
  EXPECT_EQ(again.root, m.root);
  EXPECT_EQ(again.dim_map.size(), m.dim_map.size());
}

// A single flipped sign in the embedding must surface as a counterexample:
// this is the probe that keeps diff_test honest.
TEST(Compile, InjectedEmbeddingFaultIsCaught) {
  FormulaPtr f = prep("Q_a", ab());
  TransformerModel m = compile(f, ab());
  const DimPair p = m.dim_map.at(m.root);
  m.we["a"].at(p.even, 0) = -m.we["a"].at(p.even, 0);
  m.we["a"].at(p.odd, 0) = -m.we["a"].at(p.odd, 0);
  DiffReport r = diff_test(f, m, exhaustive(2));
  EXPECT_FALSE(r.agreed());
  ASSERT_TRUE(r.first_counterexample.has_value());
  EXPECT_EQ(r.first_counterexample->subformula, m.root);
}

TEST(Compile, InjectedFfnFaultIsCaught) {
  FormulaPtr f = prep("#[Q_a] >= 1", ab());
  TransformerModel m = compile(f, ab());
  ASSERT_EQ(m.blocks.size(), 1u);
  FfnLayer &last = m.blocks[0].ffn.back();
  const DimPair root = m.dim_map.at(m.root);
  for (int c = 0; c < last.w.cols; ++c) last.w.at(root.even, c) = -last.w.at(root.even, c);
  DiffReport r = diff_test(f, m, exhaustive(3));
  EXPECT_FALSE(r.agreed());
}

TEST(Compile, ParallelComposeKeepsBothRoots) {
  FormulaPtr f1 = prep("#[Q_a] >= 1", ab());
  FormulaPtr f2 = prep("Q_b", ab());
  TransformerModel m1 = compile(f1, ab());
  TransformerModel m2 = compile(f2, ab());
  TransformerModel both = parallel_compose(m1, m2);
  EXPECT_NO_THROW(validate(both));
  EXPECT_EQ(both.d, m1.d + m2.d);
  EXPECT_EQ(both.blocks.size(), std::max(m1.blocks.size(), m2.blocks.size()));

  const DimPair p1 = both.dim_map.at(m1.root);
  const DimPair p2 = both.dim_map.at(m2.root);
  for (const std::string &w : enumerate_words(ab(), 4)) {
    Mat out = model_forward(both, w);
    const int last = out.cols - 1;
    const int n = static_cast<int>(w.size());
    EXPECT_EQ(out.at(p1.even, last) > 0, eval_formula(f1, w, n)) << w;
    EXPECT_EQ(out.at(p2.even, last) > 0, eval_formula(f2, w, n)) << w;
  }
}

TEST(Compile, DimBudgetErrorNamesTheCap) {
  FormulaPtr f = norm(corpus_hello());
  try {
    compile(f, corpus_alphabet("hello"), 8);
    FAIL() << "expected DimBudgetError";
  } catch (const DimBudgetError &e) {
    EXPECT_NE(std::string(e.what()).find("8"), std::string::npos);
  }
}

TEST(Compile, PlanMatchesEmittedModel) {
  FormulaPtr f = norm(corpus_dyck1());
  Alphabet a = corpus_alphabet("dyck1");
  CompilationPlan plan = plan_compilation(f, a);
  TransformerModel m = compile(f, a);
  EXPECT_EQ(plan.d, m.d);
  EXPECT_EQ(plan.strata.size(), 2u);
  EXPECT_EQ(plan.dim_map.size(), m.dim_map.size());
  EXPECT_EQ(pretty_print(plan.root), m.root);
  ASSERT_TRUE(m.dim_map.count("@ss"));
  ASSERT_TRUE(m.dim_map.count("@ref"));
  EXPECT_EQ(m.dim_map.at("@ss").role, DimRole::Reference);

  bool atom_in_depth0 = false;
  for (const FormulaPtr &g : plan.depth0)
    if (pretty_print(g) == "Q_(") atom_in_depth0 = true;
  EXPECT_TRUE(atom_in_depth0);
}

TEST(Compile, ReportListsStrataAndPairs) {
  FormulaPtr f = norm(corpus_dyck1());
  Alphabet a = corpus_alphabet("dyck1");
  CompilationPlan plan = plan_compilation(f, a);
  TransformerModel m = compile(f, a);
  std::string report = compilation_report(m, plan);
  EXPECT_NE(report.find("@ss"), std::string::npos);
  EXPECT_NE(report.find("@ref"), std::string::npos);
  EXPECT_NE(report.find(m.root), std::string::npos);
}

}  // namespace
}  // namespace ktc
