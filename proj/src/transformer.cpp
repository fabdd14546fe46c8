// transformer.cpp — the numeric runtime.
//
// Everything is 64-bit floating point. Attention uses the usual max-shifted
// softmax; with the zero Q/K weights compiled models carry, every shifted
// score is exactly 0, the weights are exactly 1, and the output is the exact
// prefix mean — no approximation enters until genuinely nonuniform scores do.

#include "ktc/transformer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace ktc {

using json = nlohmann::json;

namespace {

void require(bool ok, const std::string &msg) {
  if (!ok) throw ShapeError(msg);
}

Mat add(const Mat &x, const Mat &y) {
  require(x.rows == y.rows && x.cols == y.cols, "matrix addition shape mismatch");
  Mat out(x.rows, x.cols);
  for (size_t k = 0; k < x.a.size(); ++k) out.a[k] = x.a[k] + y.a[k];
  return out;
}

}  // namespace

void validate(const TransformerModel &m) {
  require(m.d > 0 && m.d % 2 == 0, "model dimension must be positive and even");
  auto check_column = [&](const std::string &sym) {
    auto it = m.we.find(sym);
    require(it != m.we.end(), "embedding table is missing symbol " + sym);
    require(it->second.rows == m.d && it->second.cols == 1,
            "embedding column for " + sym + " must be d x 1");
    double mean = 0;
    for (int r = 0; r < m.d; ++r) mean += it->second.at(r, 0);
    mean /= m.d;
    require(std::fabs(mean) <= 1e-9, "embedding column for " + sym + " must have zero mean");
  };
  check_column("BOS");
  for (char c : m.alphabet.letters) check_column(std::string(1, c));
  for (size_t bi = 0; bi < m.blocks.size(); ++bi) {
    const Block &b = m.blocks[bi];
    const std::string at = "block " + std::to_string(bi + 1);
    require(b.w_q.rows == 1 && b.w_q.cols == m.d, at + ": W_Q must be 1 x d");
    require(b.w_k.rows == 1 && b.w_k.cols == m.d, at + ": W_K must be 1 x d");
    require(b.w_v.rows == m.d && b.w_v.cols == m.d, at + ": W_V must be d x d");
    require(b.ffn.size() == 2 || b.ffn.size() == 3, at + ": FFN must have 2 or 3 layers");
    int in = m.d;
    for (size_t li = 0; li < b.ffn.size(); ++li) {
      const FfnLayer &l = b.ffn[li];
      require(l.w.cols == in, at + ": FFN layer " + std::to_string(li + 1) + " input mismatch");
      require(static_cast<int>(l.b.size()) == l.w.rows,
              at + ": FFN layer " + std::to_string(li + 1) + " bias size mismatch");
      in = l.w.rows;
    }
    require(in == m.d, at + ": FFN output dimension must be d");
  }
  for (const auto &[pp, pair] : m.dim_map) {
    require(pair.even == pair.odd + 1 && pair.odd % 2 == 0 && pair.odd >= 0 && pair.even < m.d,
            "dim_map entry for " + pp + " must be an aligned in-range pair");
  }
}

ResidualStream word_embed(const TransformerModel &m, const std::string &w) {
  const int n = static_cast<int>(w.size());
  Mat A(m.d, n + 1);
  auto put = [&](const std::string &sym, int col) {
    auto it = m.we.find(sym);
    if (it == m.we.end()) throw Error("unknown letter '" + sym + "'");
    for (int r = 0; r < m.d; ++r) A.at(r, col) = it->second.at(r, 0);
  };
  put("BOS", 0);
  for (int i = 0; i < n; ++i) put(std::string(1, w[i]), i + 1);
  return A;
}

Mat self_attention(const Block &b, const Mat &A, bool future_masked) {
  const int d = A.rows, n1 = A.cols;
  require(b.w_q.cols == d && b.w_k.cols == d && b.w_q.rows == b.w_k.rows,
          "attention weight shapes do not match the stream");
  require(b.w_v.rows == d && b.w_v.cols == d, "W_V must be d x d");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(b.w_q.rows));

  // d_k = 1: one query/key scalar per column
  std::vector<double> q(n1, 0.0), k(n1, 0.0);
  for (int c = 0; c < n1; ++c)
    for (int r = 0; r < d; ++r) {
      q[c] += b.w_q.at(0, r) * A.at(r, c);
      k[c] += b.w_k.at(0, r) * A.at(r, c);
    }

  // values v_j = W_V A_j
  Mat V(d, n1);
  for (int c = 0; c < n1; ++c)
    for (int r = 0; r < d; ++r) {
      double acc = 0;
      for (int t = 0; t < d; ++t) acc += b.w_v.at(r, t) * A.at(t, c);
      V.at(r, c) = acc;
    }

  Mat out(d, n1);
  std::vector<double> weight(n1);
  for (int i = 0; i < n1; ++i) {
    const int hi = future_masked ? i : n1 - 1;
    double mx = -HUGE_VAL;
    for (int j = 0; j <= hi; ++j) mx = std::max(mx, q[i] * k[j] * inv_sqrt_dk);
    double denom = 0;
    for (int j = 0; j <= hi; ++j) {
      weight[j] = std::exp(q[i] * k[j] * inv_sqrt_dk - mx);
      denom += weight[j];
    }
    for (int r = 0; r < d; ++r) {
      double acc = 0;
      for (int j = 0; j <= hi; ++j) acc += weight[j] * V.at(r, j);
      out.at(r, i) = acc / denom;
    }
  }
  return out;
}

Mat ffn(const Block &b, const Mat &A) {
  require(!b.ffn.empty(), "FFN has no layers");
  Mat cur = A;
  for (size_t li = 0; li < b.ffn.size(); ++li) {
    const FfnLayer &l = b.ffn[li];
    require(l.w.cols == cur.rows, "FFN layer input mismatch");
    require(static_cast<int>(l.b.size()) == l.w.rows, "FFN bias size mismatch");
    Mat next(l.w.rows, cur.cols);
    for (int c = 0; c < cur.cols; ++c)
      for (int r = 0; r < l.w.rows; ++r) {
        double acc = l.b[r];
        for (int t = 0; t < cur.rows; ++t) acc += l.w.at(r, t) * cur.at(t, c);
        next.at(r, c) = acc;
      }
    if (li + 1 < b.ffn.size())
      for (double &v : next.a) v = v > 0 ? v : 0.0;
    cur = std::move(next);
  }
  return cur;
}

Mat layer_norm(const Mat &A) {
  Mat out(A.rows, A.cols);
  for (int c = 0; c < A.cols; ++c) {
    double mu = 0;
    for (int r = 0; r < A.rows; ++r) mu += A.at(r, c);
    mu /= A.rows;
    double var = 0;
    for (int r = 0; r < A.rows; ++r) {
      double x = A.at(r, c) - mu;
      var += x * x;
    }
    var /= A.rows;
    if (var == 0.0) throw ZeroVarianceError(c);
    double sigma = std::sqrt(var);
    for (int r = 0; r < A.rows; ++r) out.at(r, c) = (A.at(r, c) - mu) / sigma;
  }
  return out;
}

ResidualStream block_forward(const Block &b, const ResidualStream &A) {
  Mat a1 = layer_norm(add(self_attention(b, A), A));
  return layer_norm(add(ffn(b, a1), a1));
}

ResidualStream model_forward(const TransformerModel &m, const std::string &w) {
  ResidualStream A = word_embed(m, w);
  for (const Block &b : m.blocks) A = block_forward(b, A);
  return A;
}

std::vector<BlockIntermediates> model_forward_trace(const TransformerModel &m,
                                                    const std::string &w) {
  std::vector<BlockIntermediates> out;
  ResidualStream A = word_embed(m, w);
  for (const Block &b : m.blocks) {
    BlockIntermediates bi;
    bi.pre_ln1 = add(self_attention(b, A), A);
    bi.post_ln1 = layer_norm(bi.pre_ln1);
    bi.pre_ln2 = add(ffn(b, bi.post_ln1), bi.post_ln1);
    bi.post_ln2 = layer_norm(bi.pre_ln2);
    A = bi.post_ln2;
    out.push_back(std::move(bi));
  }
  return out;
}

// ── serialization ───────────────────────────────────────────────────────────

namespace {

std::string hex_of(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double double_of(const json &j) {
  if (!j.is_string()) throw Error("model file: expected a hex-float string");
  const std::string s = j.get<std::string>();
  char *end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error("model file: bad hex float '" + s + "'");
  return v;
}

json mat_to_json(const Mat &m) {
  json data = json::array();
  for (double v : m.a) data.push_back(hex_of(v));
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", std::move(data)}};
}

Mat mat_from_json(const json &j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw Error("model file: malformed matrix");
  Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  const json &data = j.at("data");
  if (!data.is_array() || data.size() != m.a.size())
    throw Error("model file: matrix data length mismatch");
  for (size_t k = 0; k < m.a.size(); ++k) m.a[k] = double_of(data[k]);
  return m;
}

std::string role_name(DimRole r) {
  switch (r) {
    case DimRole::Boolean: return "boolean";
    case DimRole::Count: return "count";
    case DimRole::Reference: return "reference";
    case DimRole::Scratch: return "scratch";
  }
  return "boolean";
}

DimRole role_of(const std::string &s) {
  if (s == "boolean") return DimRole::Boolean;
  if (s == "count") return DimRole::Count;
  if (s == "reference") return DimRole::Reference;
  if (s == "scratch") return DimRole::Scratch;
  throw Error("model file: unknown dimension role '" + s + "'");
}

}  // namespace

void save_model(const TransformerModel &m, const std::string &path) {
  validate(m);
  json j;
  j["alphabet"] = json::array();
  for (char c : m.alphabet.letters) j["alphabet"].push_back(std::string(1, c));
  j["d"] = m.d;
  j["embedding"] = json::object();
  for (const auto &[sym, col] : m.we) {
    json arr = json::array();
    for (int r = 0; r < col.rows; ++r) arr.push_back(hex_of(col.at(r, 0)));
    j["embedding"][sym] = std::move(arr);
  }
  j["blocks"] = json::array();
  for (const Block &b : m.blocks) {
    json layers = json::array();
    for (const FfnLayer &l : b.ffn) {
      json bias = json::array();
      for (double v : l.b) bias.push_back(hex_of(v));
      layers.push_back(json{{"w", mat_to_json(l.w)}, {"b", std::move(bias)}});
    }
    j["blocks"].push_back(json{{"w_q", mat_to_json(b.w_q)},
                               {"w_k", mat_to_json(b.w_k)},
                               {"w_v", mat_to_json(b.w_v)},
                               {"ffn", std::move(layers)}});
  }
  j["dim_map"] = json::object();
  for (const auto &[pp, pair] : m.dim_map)
    j["dim_map"][pp] = json::array({pair.odd, pair.even, role_name(pair.role)});
  j["root"] = m.root;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file: " + path);
  out << j.dump(1) << "\n";
  if (!out) throw Error("failed writing model file: " + path);
}

TransformerModel load_model(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw Error("malformed model file " + path + ": " + e.what());
  }
  TransformerModel m;
  try {
    for (const auto &sym : j.at("alphabet")) {
      std::string s = sym.get<std::string>();
      if (s.size() != 1) throw Error("model file: alphabet symbols are single characters");
      m.alphabet.letters.push_back(s[0]);
    }
    m.d = j.at("d").get<int>();
    for (const auto &[sym, arr] : j.at("embedding").items()) {
      Mat col(static_cast<int>(arr.size()), 1);
      for (size_t r = 0; r < arr.size(); ++r) col.at(static_cast<int>(r), 0) = double_of(arr[r]);
      m.we[sym] = std::move(col);
    }
    for (const auto &jb : j.at("blocks")) {
      Block b;
      b.w_q = mat_from_json(jb.at("w_q"));
      b.w_k = mat_from_json(jb.at("w_k"));
      b.w_v = mat_from_json(jb.at("w_v"));
      for (const auto &jl : jb.at("ffn")) {
        FfnLayer l;
        l.w = mat_from_json(jl.at("w"));
        for (const auto &v : jl.at("b")) l.b.push_back(double_of(v));
        b.ffn.push_back(std::move(l));
      }
      m.blocks.push_back(std::move(b));
    }
    for (const auto &[pp, arr] : j.at("dim_map").items()) {
      if (!arr.is_array() || arr.size() != 3) throw Error("model file: malformed dim_map entry");
      DimPair pair;
      pair.odd = arr[0].get<int>();
      pair.even = arr[1].get<int>();
      pair.role = role_of(arr[2].get<std::string>());
      m.dim_map[pp] = pair;
    }
    m.root = j.value("root", std::string{});
  } catch (const json::exception &e) {
    throw Error("malformed model file " + path + ": " + e.what());
  }
  validate(m);
  return m;
}

}  // namespace ktc
