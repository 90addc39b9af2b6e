#include "treemark/reduction.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "treemark/errors.hpp"

namespace treemark {

Cnf3 parse_dimacs(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DimacsError("parse_dimacs: cannot open " + path);

  Cnf3 phi;
  int declared_clauses = -1;
  bool header_seen = false;
  std::vector<Lit> clause;
  std::string line;
  size_t line_no = 0;

  while (std::getline(f, line)) {
    ++line_no;
    std::stringstream ss(line);
    std::string tok;
    ss >> tok;
    if (!ss && tok.empty()) continue;
    if (tok.empty() || tok[0] == 'c' || tok[0] == '%') continue;
    if (tok == "p") {
      std::string kind;
      if (header_seen || !(ss >> kind >> phi.n_vars >> declared_clauses) || kind != "cnf" ||
          phi.n_vars < 0 || declared_clauses < 0) {
        throw DimacsError("parse_dimacs: malformed header at line " + std::to_string(line_no));
      }
      header_seen = true;
      continue;
    }
    if (!header_seen) {
      throw DimacsError("parse_dimacs: clause before header at line " + std::to_string(line_no));
    }
    // Clause tokens; 0 terminates a clause and clauses may span lines.
    std::stringstream rest(line);
    int v;
    while (rest >> v) {
      if (v == 0) {
        if (clause.empty()) {
          throw DimacsError("parse_dimacs: empty clause at line " + std::to_string(line_no));
        }
        if (clause.size() > 3) {
          throw WidthError("parse_dimacs: clause with " + std::to_string(clause.size()) +
                           " literals at line " + std::to_string(line_no) +
                           " (3SAT only, no clause splitting)");
        }
        phi.clauses.push_back(std::move(clause));
        clause.clear();
      } else {
        int var = std::abs(v);
        if (var > phi.n_vars) {
          throw DimacsError("parse_dimacs: variable " + std::to_string(var) +
                            " exceeds declared count at line " + std::to_string(line_no));
        }
        clause.push_back({var, v < 0});
      }
    }
    if (!rest.eof()) {
      throw DimacsError("parse_dimacs: malformed literal at line " + std::to_string(line_no));
    }
  }
  if (!header_seen) throw DimacsError("parse_dimacs: missing header in " + path);
  if (!clause.empty()) throw DimacsError("parse_dimacs: unterminated clause at end of " + path);
  if (declared_clauses != static_cast<int>(phi.clauses.size())) {
    throw DimacsError("parse_dimacs: header declares " + std::to_string(declared_clauses) +
                      " clauses, found " + std::to_string(phi.clauses.size()));
  }
  return phi;
}

bool eval_clause(const std::vector<Lit>& clause, const std::vector<bool>& assignment) {
  for (const Lit& l : clause) {
    if (assignment[l.var - 1] != l.neg) return true;
  }
  return false;
}

bool eval_formula(const Cnf3& phi, const std::vector<bool>& assignment) {
  for (const auto& clause : phi.clauses) {
    if (!eval_clause(clause, assignment)) return false;
  }
  return true;
}

Tree convert_literal(Lit l) {
  if (l.var < 1) throw std::invalid_argument("convert_literal: variable must be >= 1");
  if (!l.neg) return Tree::internal(l.var - 1, 0.0, Tree::leaf(-1), Tree::leaf(1));
  return Tree::internal(l.var - 1, 0.0, Tree::leaf(1), Tree::leaf(-1));
}

Tree convert_clause(const std::vector<Lit>& clause) {
  if (clause.empty() || clause.size() > 3) {
    throw std::invalid_argument("convert_clause: clause must have 1..3 literals");
  }
  if (clause.size() == 1) return convert_literal(clause[0]);
  std::vector<Lit> rest(clause.begin() + 1, clause.end());
  const Lit& head = clause[0];
  if (!head.neg) {
    return Tree::internal(head.var - 1, 0.0, convert_clause(rest), Tree::leaf(1));
  }
  return Tree::internal(head.var - 1, 0.0, Tree::leaf(1), convert_clause(rest));
}

Ensemble convert_formula(const Cnf3& phi) {
  Ensemble ensemble;
  ensemble.d = std::max(phi.n_vars, 1);
  for (const auto& clause : phi.clauses) {
    Tree t = convert_clause(clause);
    std::set<int> used;
    for (TreeNode& node : t.nodes) {
      if (!node.is_leaf()) {
        node.threshold = (node.threshold + 1.0) / 2.0;  // 0 -> 0.5
        used.insert(node.feature);
      }
    }
    ensemble.trees.push_back(std::move(t));
    ensemble.feature_subsets.emplace_back(used.begin(), used.end());
  }
  return ensemble;
}

SatResult sat_via_forgery(const Cnf3& phi, uint64_t budget) {
  // Empty conjunction is vacuously satisfiable.
  if (phi.clauses.empty()) {
    return {SatStatus::sat, std::vector<bool>(phi.n_vars, false)};
  }
  Ensemble ensemble = convert_formula(phi);
  Signature sigma;
  sigma.bits.assign(ensemble.m(), 0);
  std::vector<double> center(ensemble.d, 0.5);

  ForgeOutcome out = forge_instance(ensemble, sigma, 1, center, 1.0, budget);
  if (out.status == ForgeStatus::timeout) return {SatStatus::timeout, {}};
  if (out.status == ForgeStatus::infeasible) return {SatStatus::unsat, {}};

  std::vector<bool> assignment(phi.n_vars, false);
  for (int j = 0; j < phi.n_vars; ++j) {
    assignment[j] = out.witness[j] > 0.5;  // above the converted threshold
  }
  if (!eval_formula(phi, assignment)) {
    throw std::logic_error("sat_via_forgery: extracted assignment fails the formula");
  }
  return {SatStatus::sat, std::move(assignment)};
}

std::optional<std::vector<bool>> brute_force_sat(const Cnf3& phi) {
  if (phi.n_vars > 24) {
    throw RefusedTooLargeError("brute_force_sat: refusing n_vars > 24");
  }
  const int n = phi.n_vars;
  std::vector<bool> assignment(n, false);
  const uint64_t total = uint64_t{1} << n;
  for (uint64_t code = 0; code < total; ++code) {
    for (int j = 0; j < n; ++j) {
      assignment[j] = (code >> (n - 1 - j)) & 1;  // x1 most significant
    }
    if (eval_formula(phi, assignment)) return assignment;
  }
  return std::nullopt;
}

}  // namespace treemark
