#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treemark/attacks.hpp"
#include "treemark/forest.hpp"

namespace treemark {

// Literal of a 3CNF formula; variables are 1-based as in DIMACS.
struct Lit {
  int var = 0;
  bool neg = false;

  bool operator==(const Lit&) const = default;
};

struct Cnf3 {
  int n_vars = 0;
  std::vector<std::vector<Lit>> clauses;  // each 1..3 literals
};

// Standard DIMACS CNF. Clauses wider than 3 literals raise WidthError (no
// clause splitting); empty clauses and malformed headers raise DimacsError.
Cnf3 parse_dimacs(const std::string& path);

bool eval_clause(const std::vector<Lit>& clause, const std::vector<bool>& assignment);
bool eval_formula(const Cnf3& phi, const std::vector<bool>& assignment);

// Literal tree over the formula's natural coordinates (threshold 0, left =
// false): x -> N(x <= 0, L(-1), L(+1)), !x -> N(x <= 0, L(+1), L(-1)).
Tree convert_literal(Lit l);

// Clause tree of depth <= 3: each internal node branches on one literal's
// variable with exactly one +1 child on the satisfying side.
Tree convert_clause(const std::vector<Lit>& clause);

// One tree per clause, in clause order, with coordinates mapped into the
// solver's [0,1] domain via v -> (v+1)/2, so thresholds land on 0.5 and
// x > 0.5 encodes "true".
Ensemble convert_formula(const Cnf3& phi);

enum class SatStatus { sat, unsat, timeout };

struct SatResult {
  SatStatus status = SatStatus::unsat;
  std::vector<bool> assignment;  // valid when status == sat
};

inline constexpr uint64_t kDefaultSatBudget = 100'000'000;

// Decides satisfiability by forging against convert_formula(phi) with label
// +1, the all-zeros signature and the whole [0,1] domain. SAT results are
// checked against the formula before returning.
SatResult sat_via_forgery(const Cnf3& phi, uint64_t budget = kDefaultSatBudget);

// Exhaustive oracle over all 2^n assignments in lexicographic order
// (x1 most significant, false < true); refuses n_vars > 24.
std::optional<std::vector<bool>> brute_force_sat(const Cnf3& phi);

}  // namespace treemark
