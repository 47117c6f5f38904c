#pragma once

#include "qrhint/frontend.hpp"
#include "qrhint/solver.hpp"
#include "qrhint/where_stage.hpp"

namespace qrhint {

/// Effective WHERE/HAVING pair after pooling aggregate-free HAVING conjuncts
/// over grouped columns into the WHERE side.
struct EffectiveSplit {
  Formula where;
  Formula having;
};

EffectiveSplit split_movable_conditions(const QueryIR& q, bool pooling_enabled);

/// Group-scope context: scalar declarations for grouped columns, arrays for
/// non-grouped columns and derived aggregate inputs, WHERE facts lifted to
/// group scope, and the aggregate inference rules instantiated over the
/// arrays present. Registers every aggregate call in both queries' HAVING and
/// SELECT so the SELECT stage can reuse the same context.
Context build_having_context(const QueryIR& q, const QueryIR& qstar_renamed,
                             const Formula& effective_where, Solver& solver);

struct HavingOutcome {
  bool equivalent = false;
  bool inconclusive = false;
  std::optional<Repair> repair;
};

HavingOutcome repair_having(const Formula& h, const Formula& hstar, const Context& ctx,
                            const CostParams& params, Solver& solver, RepairMode mode);

}  // namespace qrhint
