#pragma once

#include <vector>

#include "qrhint/frontend.hpp"
#include "qrhint/solver.hpp"

namespace qrhint {

struct GroupingDelta {
  std::vector<int> remove;  // 0-based indices into Q's group_by
  std::vector<int> add;     // 0-based indices into Q*'s group_by
  bool inconclusive = false;  // some satisfiability call returned unknown
  bool empty() const { return remove.empty() && add.empty(); }
};

/// Partition-equivalence repair: two fresh row instantiations t1/t2 of every
/// column; an expression joins `remove` when it can split rows that the
/// target grouping keeps together, then missing target expressions accumulate
/// into `add`. Unknown satisfiability conservatively includes the entry.
GroupingDelta fix_grouping(const Formula& p, const std::vector<ValueExpr>& o,
                           const std::vector<ValueExpr>& ostar, Solver& solver);

/// Renames every alias with the given suffix (row-instantiation helper).
Formula instantiate_formula(const Formula& f, const std::string& suffix);
ValueExpr instantiate_expr(const ValueExpr& e, const std::string& suffix);

}  // namespace qrhint
