#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qrhint/expr.hpp"

namespace qrhint {

enum class Verdict { Yes, No, Unknown };
enum class CheckResult { Sat, Unsat, Unknown };

// ---------------------------------------------------------------------------
// Context: the assertion set solver queries run under.
// ---------------------------------------------------------------------------

/// Pointwise definition of a derived array: forall i: array[i] = expr where
/// non-grouped columns in expr read their base array at i and grouped columns
/// read group-scope scalars.
struct PointwiseDef {
  std::string array;
  ValueExpr expr;
};

/// forall i: formula holds of row i (same substitution rule as PointwiseDef).
struct PointwiseFact {
  Formula formula;
};

enum class AggAxiomKind {
  SumAdd,      // (forall i: X[i]+Y[i]=Z[i]) => SUM(X)+SUM(Y)=SUM(Z)
  SumSub,      // analogous with -
  SumMulC,     // (forall i: X[i]*c=Y[i]) => SUM(X)*c=SUM(Y)
  SumDivC,     // (forall i: X[i]=Y[i]*c) => SUM(X)=SUM(Y)*c   (exact division)
  AvgAdd,
  AvgSub,
  AvgMulC,
  AvgDivC,
  OnesDef,     // forall i: Ones[i]=1
  CountOnes,   // COUNT(X) = COUNT(Ones)
  SumAvgCount, // SUM(X) = AVG(X) * COUNT(Ones)
  MaxGe,       // forall i: MAX(X) >= X[i]
  MinLe,       // forall i: MIN(X) <= X[i]
};

struct AggAxiomInstance {
  AggAxiomKind kind;
  std::string x, y, z;
  Rat c = Rat(0);
};

/// Group-scope encoding environment for aggregate-bearing formulas.
struct AggEnv {
  /// grouped (alias, column) pairs render as scalars
  std::set<std::pair<std::string, std::string>> grouped_columns;
  /// base array per non-grouped column
  std::map<std::pair<std::string, std::string>, std::string> column_arrays;
  /// registered aggregate calls: expression -> (array name)
  std::vector<std::pair<ValueExpr, std::string>> agg_calls;
  /// derived arrays with their defining row expressions
  std::vector<PointwiseDef> defs;
  /// element type per array name
  std::map<std::string, ColumnType> array_types;
  std::string ones_array;  // empty when COUNT(*)/COUNT-linking is unused

  std::optional<std::string> array_for_call(const ValueExpr& agg_call) const;
};

struct Context {
  std::vector<Formula> ground;  // quantifier-free assertions
  std::shared_ptr<const AggEnv> env;  // null for scalar contexts
  std::vector<PointwiseFact> row_facts;
  std::vector<AggAxiomInstance> axioms;
  uint64_t cache_id = 0;  // distinct per constructed context; 0 = empty

  bool has_arrays() const { return env != nullptr; }
  static Context empty() { return Context{}; }
  /// Scalar context carrying only ground facts.
  static Context ground_facts(std::vector<Formula> facts);
};

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

enum class BackendChoice { Auto, BuiltinOnly, External };

struct SolverOptions {
  BackendChoice backend = BackendChoice::Auto;
  std::string external_cmd;  // empty: resolve from env/path
  int timeout_ms = 2000;
};

/// Picks the external solver command: $QRHINT_SOLVER_CMD, then `z3 -in`
/// when z3 is on PATH, then the bundled node pipe driver.
std::string resolve_default_external_cmd();

class SmtProcess;  // persistent external solver child (see smt.cpp)

/// Solver query primitives with contexts. Yes answers are sound; Unknown is
/// always permitted. Deterministic for a fixed backend and timeout.
class Solver {
 public:
  explicit Solver(SolverOptions opt = {});
  ~Solver();

  Verdict sat(const Formula& f, const Context& ctx);
  Verdict unsat(const Formula& f, const Context& ctx);
  Verdict equiv(const Formula& a, const Formula& b, const Context& ctx);
  Verdict equiv_expr(const ValueExpr& a, const ValueExpr& b, const Context& ctx);

  /// Which backend actually serves formulas under this context.
  std::string backend_description(const Context& ctx) const;
  int timeout_ms() const { return opt_.timeout_ms; }
  bool external_available() const;

  /// statistics
  size_t external_calls = 0;
  size_t builtin_calls = 0;

 private:
  CheckResult check(const Formula& f, const Context& ctx);
  CheckResult check_external(const Formula& f, const Context& ctx);

  SolverOptions opt_;
  std::string resolved_cmd_;
  std::unique_ptr<SmtProcess> proc_;
  std::map<std::string, CheckResult> cache_;
};

// exposed for tests
CheckResult builtin_check(const Formula& f, const std::vector<Formula>& ground);
std::string emit_smt2(const Formula& payload, const Context& ctx, int timeout_ms);

/// SQL LIKE with % and _ against a constant pattern.
bool sql_like_match(const std::string& value, const std::string& pattern);

}  // namespace qrhint
