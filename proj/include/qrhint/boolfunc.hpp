#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qrhint/expr.hpp"
#include "qrhint/solver.hpp"

namespace qrhint {

/// Dense truth-table representation of a Boolean function over n variables
/// (n <= 20). Row index bit i carries variable i's value.
class BoolFunc {
 public:
  BoolFunc() = default;
  BoolFunc(int nvars, bool constant);
  static BoolFunc var(int nvars, int index);

  int nvars() const { return nvars_; }
  bool eval(uint32_t row) const { return (bits_[row >> 6] >> (row & 63)) & 1; }
  void set(uint32_t row, bool v);
  size_t rows() const { return size_t(1) << nvars_; }

  BoolFunc operator&(const BoolFunc& o) const;
  BoolFunc operator|(const BoolFunc& o) const;
  BoolFunc operator~() const;
  bool operator==(const BoolFunc& o) const { return nvars_ == o.nvars_ && bits_ == o.bits_; }

  /// Re-embeds into a wider variable space (same variable indices).
  BoolFunc widen(int new_nvars) const;

 private:
  int nvars_ = 0;
  std::vector<uint64_t> bits_;
};

enum class TriState : uint8_t { Zero = 0, One = 1, DontCare = 2 };

/// Truth table with don't-cares; exactly 2^nvars rows.
struct PartialTruthTable {
  int nvars = 0;
  std::vector<TriState> rows;

  TriState at(uint32_t row) const { return rows[row]; }
  size_t count(TriState t) const;
};

/// Representative atomic predicates with Boolean variables, plus the phi
/// mapping from formulas over those atoms to Boolean functions.
class AtomMap {
 public:
  const std::vector<Formula>& atoms() const { return atoms_; }
  int nvars() const { return static_cast<int>(atoms_.size()); }

  /// phi: Boolean function of a formula whose atoms are all mapped.
  BoolFunc to_func(const Formula& f) const;
  /// Rebuilds a formula from a DNF over the mapped variables.
  Formula literal(int var, bool positive) const;

  friend AtomMap map_atom_preds(const std::vector<Formula>& formulas, Solver& solver,
                                const Context& ctx);

 private:
  struct MappedAtom {
    Formula atom;   // as it appears in inputs
    int var;
    bool positive;  // false: maps to negated variable
  };
  std::optional<std::pair<int, bool>> lookup(const Formula& atom) const;

  std::vector<Formula> atoms_;       // representative atom per variable
  std::vector<MappedAtom> mapped_;   // every input atom seen
};

/// Scans the formulas in order, unifying solver-equivalent (or
/// negation-equivalent) atoms into shared Boolean variables. Unknown
/// equivalences conservatively open a new variable.
AtomMap map_atom_preds(const std::vector<Formula>& formulas, Solver& solver,
                       const Context& ctx);

struct InconsistentBound : std::runtime_error {
  InconsistentBound() : std::runtime_error("feasible row with g_l=1 and g_u=0") {}
};

/// Row-by-row table: don't-care when the signed-atom conjunction is
/// unsatisfiable or when the bound leaves the row free; the common value when
/// g_l = g_u there.
PartialTruthTable build_truth_table(const AtomMap& am, const BoolFunc& g_l, const BoolFunc& g_u,
                                    Solver& solver, const Context& ctx);

}  // namespace qrhint
