// oracles.cpp — independent membership oracles (no interpreter/compiler code).

#include "ktc/oracles.hpp"

#include "ktc/ast.hpp"

namespace ktc {

bool oracle_astar_bstar(const std::string &w) {
  // two-phase scanner: a-phase then b-phase
  size_t i = 0;
  while (i < w.size() && w[i] == 'a') ++i;
  while (i < w.size() && w[i] == 'b') ++i;
  return i == w.size();
}

bool oracle_astar_bstar_astar(const std::string &w) {
  size_t i = 0;
  while (i < w.size() && w[i] == 'a') ++i;
  while (i < w.size() && w[i] == 'b') ++i;
  while (i < w.size() && w[i] == 'a') ++i;
  return i == w.size();
}

bool oracle_anbncn(const std::string &w) {
  size_t i = 0;
  size_t na = 0, nb = 0, nc = 0;
  while (i < w.size() && w[i] == 'a') ++i, ++na;
  while (i < w.size() && w[i] == 'b') ++i, ++nb;
  while (i < w.size() && w[i] == 'c') ++i, ++nc;
  return i == w.size() && na == nb && nb == nc;
}

bool oracle_dyck1(const std::string &w) {
  long depth = 0;
  for (char c : w) {
    if (c == '(')
      ++depth;
    else if (c == ')')
      --depth;
    else
      return false;
    if (depth < 0) return false;
  }
  return depth == 0;
}

bool oracle_hello(const std::string &w) { return w == "hello"; }

bool oracle_subsequence(const std::string &s, const std::string &w) {
  size_t k = 0;
  for (size_t i = 0; i < w.size() && k < s.size(); ++i)
    if (w[i] == s[k]) ++k;
  return k == s.size();
}

bool oracle_membership(const std::string &language_id, const std::string &w) {
  if (language_id == "astar_bstar") return oracle_astar_bstar(w);
  if (language_id == "astar_bstar_astar") return oracle_astar_bstar_astar(w);
  if (language_id == "anbncn") return oracle_anbncn(w);
  if (language_id == "dyck1") return oracle_dyck1(w);
  if (language_id == "hello") return oracle_hello(w);
  throw Error("unknown language id: " + language_id);
}

}  // namespace ktc
