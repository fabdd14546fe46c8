// oracles.hpp — independent membership oracles used to check formulas,
// programs, and compiled models. Implementations share nothing with the
// interpreter or compiler: a two-phase scanner for a*b*(a*), counter checks
// for aⁿbⁿcⁿ, a stack machine for Dyck-1, literal comparison for {hello},
// and a two-pointer scan for subsequences.

#pragma once

#include <string>

namespace ktc {

bool oracle_astar_bstar(const std::string &w);        // a*b*
bool oracle_astar_bstar_astar(const std::string &w);  // a*b*a*
bool oracle_anbncn(const std::string &w);             // aⁿbⁿcⁿ, n ≥ 0
bool oracle_dyck1(const std::string &w);              // balanced ( )
bool oracle_hello(const std::string &w);              // exactly "hello"
bool oracle_subsequence(const std::string &s, const std::string &w);  // s ⊑ w

// Lookup by corpus id: astar_bstar, astar_bstar_astar, anbncn, dyck1, hello.
bool oracle_membership(const std::string &language_id, const std::string &w);

}  // namespace ktc
