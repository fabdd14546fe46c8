// ktc_main.cpp — the `ktc` command-line tool: parse, evaluate, compile, run,
// translate, diff-test, greedy-decode, and the full acceptance corpus.
//
// Exit codes: 0 success / full agreement, 1 counterexample or stuck decode,
// 2 usage or input errors.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "ktc/compile.hpp"
#include "ktc/harness.hpp"
#include "ktc/interp.hpp"
#include "ktc/parse.hpp"
#include "ktc/passes.hpp"
#include "ktc/transformer.hpp"
#include "ktc/translate.hpp"

namespace {

bool is_bincount_text(const std::string &text) {
  return text.find("#2[") != std::string::npos;
}

// Parses a program file, flattening the binary-count form when present.
ktc::CraspProgram load_program(const std::string &text) {
  if (is_bincount_text(text)) return desugar_binary_count(ktc::parse_bincount_file(text));
  return ktc::parse_crasp_file(text);
}

void print_foc(const ktc::FocNormalForm &nf) {
  std::cout << "alphabet:";
  for (char c : nf.alphabet.letters) std::cout << ' ' << c;
  std::cout << '\n';
  for (const auto &[var, body] : nf.counted)
    std::cout << "count " << var << " := " << ktc::pretty_print(body) << '\n';
  for (const ktc::LinearComparison &cons : nf.constraints) {
    std::cout << "constraint ";
    bool first = true;
    for (const auto &[coef, var] : cons.terms) {
      long long mag = coef < 0 ? -coef : coef;
      if (first)
        std::cout << (coef < 0 ? "-" : "");
      else
        std::cout << (coef < 0 ? " - " : " + ");
      if (mag != 1) std::cout << mag << "*";
      std::cout << var->atom;
      first = false;
    }
    if (cons.constant != 0 || first) {
      long long c = cons.constant;
      if (first)
        std::cout << c;
      else
        std::cout << (c < 0 ? " - " : " + ") << (c < 0 ? -c : c);
    }
    std::cout << " >= 0\n";
  }
}

int cmd_parse(const std::string &path) {
  std::string text = ktc::read_file(path);
  switch (ktc::classify_path(path)) {
    case ktc::FileKind::Kt: {
      ktc::KtFile file = ktc::parse_kt_file(text);
      std::cout << ktc::pretty_print(file.formula) << '\n';
      break;
    }
    case ktc::FileKind::Crasp:
      std::cout << ktc::pretty_print(load_program(text));
      break;
    case ktc::FileKind::Lm: {
      ktc::LmProgram lm = ktc::parse_lm_file(text);
      std::cout << ktc::pretty_print(lm.base);
      for (const auto &[symbol, op] : lm.next)
        std::cout << "next " << symbol << " := " << op << '\n';
      break;
    }
    case ktc::FileKind::Foc:
      print_foc(ktc::parse_foc_file(text));
      break;
  }
  return 0;
}

int cmd_eval(const std::string &path, const std::string &w) {
  std::string text = ktc::read_file(path);
  bool result = false;
  switch (ktc::classify_path(path)) {
    case ktc::FileKind::Kt:
      result = end_satisfies(ktc::parse_kt_file(text).formula, w);
      break;
    case ktc::FileKind::Crasp:
      result = crasp_accepts(load_program(text), w);
      break;
    case ktc::FileKind::Lm:
      result = lm_assigns_nonzero(ktc::parse_lm_file(text), w);
      break;
    case ktc::FileKind::Foc:
      result = end_satisfies(foc_nf_to_kt(ktc::parse_foc_file(text)), w);
      break;
  }
  std::cout << (result ? "true" : "false") << '\n';
  return 0;
}

// Any input kind reduces to a formula over its own alphabet.
std::pair<ktc::Alphabet, ktc::FormulaPtr> load_as_formula(const std::string &path) {
  std::string text = ktc::read_file(path);
  switch (ktc::classify_path(path)) {
    case ktc::FileKind::Kt: {
      ktc::KtFile file = ktc::parse_kt_file(text);
      return {file.alphabet, file.formula};
    }
    case ktc::FileKind::Crasp: {
      ktc::CraspProgram p = load_program(text);
      return {p.alphabet, desugar(crasp_to_kt(p))};
    }
    case ktc::FileKind::Lm:
      throw ktc::Error("a language-model file has no single formula; use its base program");
    case ktc::FileKind::Foc: {
      ktc::FocNormalForm nf = ktc::parse_foc_file(text);
      return {nf.alphabet, desugar(foc_nf_to_kt(nf))};
    }
  }
  throw ktc::Error("unreachable file kind");
}

int cmd_compile(const std::string &path, const std::string &out_path) {
  auto [alphabet, formula] = load_as_formula(path);
  ktc::FormulaPtr norm = normalize_comparison(formula);
  ktc::TransformerModel model = compile(norm, alphabet);
  save_model(model, out_path);
  std::cout << "wrote " << out_path << " (d=" << model.d << ", blocks=" << model.blocks.size()
            << ")\n";
  return 0;
}

int cmd_run(const std::string &model_path, const std::string &w) {
  ktc::TransformerModel model = ktc::load_model(model_path);
  for (char c : w)
    if (!model.alphabet.contains(c))
      throw ktc::Error(std::string("letter '") + c + "' not in the model alphabet");
  if (w.empty()) throw ktc::EmptyWordError();
  ktc::Mat out = model_forward(model, w);
  ktc::DimPair root = model.dim_map.at(model.root);
  bool accepted = out.at(root.even, static_cast<int>(w.size())) > 0;
  std::cout << (accepted ? "true" : "false") << '\n';
  return 0;
}

int cmd_translate(const std::string &path, const std::string &target) {
  std::string text = ktc::read_file(path);
  ktc::FileKind kind = ktc::classify_path(path);
  if (target == "kt") {
    auto [alphabet, formula] = load_as_formula(path);
    std::cout << "alphabet:";
    for (char c : alphabet.letters) std::cout << ' ' << c;
    std::cout << '\n' << ktc::pretty_print(formula) << '\n';
    return 0;
  }
  // target == "crasp"
  ktc::CraspProgram p;
  switch (kind) {
    case ktc::FileKind::Kt: {
      ktc::KtFile file = ktc::parse_kt_file(text);
      p = kt_to_crasp(file.formula, file.alphabet);
      break;
    }
    case ktc::FileKind::Crasp:
      p = load_program(text);  // flattens binary counts; otherwise identity
      break;
    case ktc::FileKind::Lm:
      throw ktc::Error("a language-model file is already a program; translate its base directly");
    case ktc::FileKind::Foc: {
      ktc::FocNormalForm nf = ktc::parse_foc_file(text);
      p = kt_to_crasp(desugar(foc_nf_to_kt(nf)), nf.alphabet);
      break;
    }
  }
  std::cout << ktc::pretty_print(p);
  return 0;
}

int cmd_diff(const std::string &path, int exhaustive, int random_count, int random_max_len,
             uint64_t seed, bool json) {
  auto [alphabet, formula] = load_as_formula(path);
  ktc::FormulaPtr norm = normalize_comparison(formula);
  ktc::TransformerModel model = compile(norm, alphabet);
  ktc::EnumerationSpec spec;
  spec.exhaustive_max_len = exhaustive;
  spec.random_count = random_count;
  spec.random_max_len = random_max_len;
  spec.seed = seed;
  ktc::DiffReport report = diff_test(norm, model, spec, path);
  if (json) {
    std::cout << to_json(report) << '\n';
  } else if (report.agreed()) {
    std::cout << "0 disagreements (" << report.strings_tested << " strings, " << report.checks
              << " checks, max |activation|-1 dev " << report.max_abszero_dev << ")\n";
  } else {
    std::cout << "1 disagreement: word \"" << report.first_counterexample->word
              << "\" position " << report.first_counterexample->position << " subformula "
              << report.first_counterexample->subformula << '\n';
  }
  return report.agreed() ? 0 : 1;
}

int cmd_decode(const std::string &path, const std::string &prompt, int max_steps,
               const std::string &tie_break_arg) {
  ktc::LmProgram lm = ktc::parse_lm_file(ktc::read_file(path));
  std::vector<std::string> order;
  if (tie_break_arg.empty()) {
    order = default_tie_break(lm.base.alphabet);
  } else {
    std::string cur;
    for (char c : tie_break_arg) {
      if (c == ',') {
        if (!cur.empty()) order.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) order.push_back(cur);
  }
  ktc::DecodeResult r = lm_greedy_decode(lm, prompt, max_steps, order);
  std::cout << r.text << '\n';
  switch (r.outcome) {
    case ktc::DecodeOutcome::Eos:
      return 0;
    case ktc::DecodeOutcome::MaxSteps:
      std::cerr << "stopped at the step cap before EOS\n";
      return 0;
    case ktc::DecodeOutcome::Stuck:
      std::cerr << "stuck: no next symbol has nonzero probability\n";
      return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Kt[#] / C-RASP toolkit: parsing, semantics, translations, and compiled models"};
  app.require_subcommand(1);

  std::string file, word, out_path = "model.json", target, model_path;
  std::string prompt, tie_break;
  int exhaustive = 0, random_count = 0, random_max_len = 16, max_steps = 64;
  uint64_t seed = 0;
  bool json = false;
  std::string corpus_dir = "corpus";

  CLI::App *parse_cmd = app.add_subcommand("parse", "parse a file and print its canonical form");
  parse_cmd->add_option("file", file)->required();

  CLI::App *eval_cmd = app.add_subcommand("eval", "evaluate a formula/program on a string");
  eval_cmd->add_option("file", file)->required();
  eval_cmd->add_option("string", word)->required();

  CLI::App *compile_cmd = app.add_subcommand("compile", "compile a formula to model weights");
  compile_cmd->add_option("file", file)->required();
  compile_cmd->add_option("-o,--output", out_path, "output model path");

  CLI::App *run_cmd = app.add_subcommand("run", "run a compiled model on a string");
  run_cmd->add_option("model", model_path)->required();
  run_cmd->add_option("string", word)->required();

  CLI::App *translate_cmd = app.add_subcommand("translate", "translate between the two languages");
  translate_cmd->add_option("file", file)->required();
  translate_cmd->add_option("--to", target, "target language")
      ->required()
      ->check(CLI::IsMember({"kt", "crasp"}));

  CLI::App *diff_cmd =
      app.add_subcommand("diff", "compile and compare against the interpreter");
  diff_cmd->add_option("file", file)->required();
  diff_cmd->add_option("--exhaustive", exhaustive, "test all strings up to this length");
  diff_cmd->add_option("--random", random_count, "number of random strings");
  diff_cmd->add_option("--max-len", random_max_len, "random string length cap");
  diff_cmd->add_option("--seed", seed, "random generator seed");
  diff_cmd->add_flag("--json", json, "print the full report as JSON");

  CLI::App *decode_cmd = app.add_subcommand("decode", "greedy-decode from a language model");
  decode_cmd->add_option("lm-file", file)->required();
  decode_cmd->add_option("--prompt", prompt, "starting string")->required();
  decode_cmd->add_option("--max-steps", max_steps, "total length cap");
  decode_cmd->add_option("--tie-break", tie_break,
                         "comma-separated symbol order, e.g. \"EOS,),(\"");

  CLI::App *corpus_cmd = app.add_subcommand("corpus", "run the full acceptance suite");
  corpus_cmd->add_option("--dir", corpus_dir, "corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (parse_cmd->parsed()) return cmd_parse(file);
    if (eval_cmd->parsed()) return cmd_eval(file, word);
    if (compile_cmd->parsed()) return cmd_compile(file, out_path);
    if (run_cmd->parsed()) return cmd_run(model_path, word);
    if (translate_cmd->parsed()) return cmd_translate(file, target);
    if (diff_cmd->parsed()) {
      if (exhaustive == 0 && random_count == 0) exhaustive = 8;
      return cmd_diff(file, exhaustive, random_count, random_max_len, seed, json);
    }
    if (decode_cmd->parsed()) {
      if (prompt.empty()) throw ktc::Error("the prompt must be nonempty");
      return cmd_decode(file, prompt, max_steps, tie_break);
    }
    if (corpus_cmd->parsed()) return ktc::run_acceptance_suite(std::cout, corpus_dir) ? 0 : 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
