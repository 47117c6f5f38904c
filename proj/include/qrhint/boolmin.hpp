#pragma once

#include <vector>

#include "qrhint/boolfunc.hpp"

namespace qrhint {

/// Product term: conjunction of literals given as (variable, positive) pairs,
/// sorted by variable. An empty term is the constant true.
struct Term {
  std::vector<std::pair<int, bool>> lits;
  bool operator==(const Term& o) const { return lits == o.lits; }
};

/// Sum of products. Empty term list is the constant false.
struct Dnf {
  std::vector<Term> terms;
  size_t term_count() const { return terms.size(); }
  size_t literal_count() const;
  bool eval(uint32_t row) const;
};

/// Two-level minimization of a partial truth table. Quine-McCluskey prime
/// implicants; exact minimum cover (branch and bound) up to
/// `exact_var_limit` variables, greedy prime cover beyond. Minimizes term
/// count first, then total literal count; ties broken toward covers using
/// lower-indexed variables, then lexicographically.
Dnf min_bool_exp(const PartialTruthTable& t, int exact_var_limit = 8);

/// Minimal CNF via complement minimization; returned as clauses (each Term is
/// one disjunctive clause of the CNF).
std::vector<Term> min_cnf(const PartialTruthTable& t, int exact_var_limit = 8);

/// DNF back to a formula over the mapped atoms.
Formula dnf_to_formula(const Dnf& d, const AtomMap& am);
/// Clause list (CNF) back to a formula.
Formula cnf_to_formula(const std::vector<Term>& clauses, const AtomMap& am);

}  // namespace qrhint
