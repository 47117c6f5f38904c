#pragma once

#include <map>
#include <optional>
#include <vector>

#include "qrhint/boolfunc.hpp"
#include "qrhint/boolmin.hpp"
#include "qrhint/solver.hpp"

namespace qrhint {

struct Bound {
  Formula lower, upper;
};

/// Repair bound reachable by fixing exactly the given disjoint sites
/// (recursive: [false,true] at a site, [x,x] at untouched leaves, child-wise
/// combination at connectives, swap-and-negate at Not).
Bound create_bounds(const Formula& x, const std::vector<NodePath>& sites);
/// Bound of every node on the way, keyed by path (for tests and reports).
std::map<NodePath, Bound> create_bounds_all(const Formula& x, const std::vector<NodePath>& sites);

struct RepairFix {
  NodePath site;
  Formula fix;
};

struct Repair {
  std::vector<NodePath> sites;
  std::vector<RepairFix> fixes;  // aligned with sites
  Rat cost = Rat(0);
  bool certified = false;  // solver confirmed application == target
};

struct CostParams {
  Rat w = Rat(1, 6);
  int max_sites = 3;
};

enum class RepairMode { Basic, Optimized };

struct BoundViolation : std::runtime_error {
  BoundViolation() : std::runtime_error("pushed-down target escaped the repair bound") {}
};

struct NoRepairFound : std::runtime_error {
  NoRepairFound() : std::runtime_error("no repair could be certified (solver inconclusive)") {}
};

/// Smallest formula within [l*, u*]: atom mapping, truth table with
/// don't-cares, two-level minimization, substitution back.
Formula min_fix(const Formula& lo, const Formula& hi, Solver& solver, const Context& ctx);

/// Top-down target-bound push-down; sibling sites sharing a parent are merged,
/// minimized jointly (DNF under an Or parent, CNF under an And parent) and
/// distributed back by syntactic similarity.
std::vector<RepairFix> derive_fixes(const Formula& x, const std::vector<NodePath>& sites,
                                    const Formula& lo, const Formula& hi, Solver& solver,
                                    const Context& ctx);

/// Target bounds per node, as derive_fixes pushes them (exposed for tests).
std::map<NodePath, Bound> derive_target_bounds(const Formula& x,
                                               const std::vector<NodePath>& sites,
                                               const Formula& lo, const Formula& hi);

/// Clause assignment for a merged sibling site: token-multiset Jaccard
/// against each member site's text, leftmost member on ties.
std::vector<std::vector<Term>> distribute_fixes(const std::vector<Term>& clauses,
                                                const std::vector<Formula>& member_sites,
                                                const AtomMap& am);

/// Holistic multi-site synthesis over the sites' lowest common ancestor:
/// feasibility map over (atom vars x site vars), greedy per-site
/// minimization with feasibility updates.
std::vector<RepairFix> min_fix_mult(const Formula& x, const std::vector<NodePath>& sites,
                                    const Formula& lo, const Formula& hi, Solver& solver,
                                    const Context& ctx);

/// Feasibility map: per atom-variable row, the set of site-variable
/// assignments keeping the partially-replaced formula consistent with the
/// target (bitmask over site assignments; DontCare rows map to no constraint).
struct FeasibilityMap {
  int atom_vars = 0;
  int site_vars = 0;
  std::vector<uint16_t> feasible;  // bitmask per row; kIrrelevant for * rows
  static constexpr uint16_t kIrrelevant = 0xFFFF;
};

FeasibilityMap init_feasibility(const BoolFunc& g_x, const PartialTruthTable& target,
                                int atom_vars, int site_vars);
void update_feasibility(FeasibilityMap& feas, int site, const Dnf& chosen);
/// Uneven-split priority: argmax of sum over rows of |r - 0.5| where r is the
/// fraction of feasible settings with the site true. Returns the site's
/// forced/free table.
std::pair<int, PartialTruthTable> pick_site(const FeasibilityMap& feas,
                                            const std::vector<int>& remaining);

Rat repair_cost(const std::vector<NodePath>& sites, const std::vector<RepairFix>& fixes,
                const Formula& p, const Formula& pstar, const CostParams& params);

Formula apply_repair(const Formula& p, const std::vector<RepairFix>& fixes);

struct RepairSearchStats {
  size_t site_sets_considered = 0;
  size_t site_sets_viable = 0;
  double first_viable_ms = -1;
  double total_ms = 0;
  std::vector<std::vector<NodePath>> visited;  // filled when tracing
  bool trace = false;
};

/// Minimum-cost repair search: disjoint site sets in ascending cardinality,
/// early stop when the site-count term alone reaches the incumbent, viability
/// via create_bounds containment, fixes via derive_fixes or min_fix_mult.
/// Every accepted repair is solver-certified equivalent to the target.
std::optional<Repair> repair_where(const Formula& p, const Formula& pstar,
                                   const CostParams& params, Solver& solver, const Context& ctx,
                                   RepairMode mode, RepairSearchStats* stats = nullptr);

}  // namespace qrhint
