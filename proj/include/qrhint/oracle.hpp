#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qrhint/frontend.hpp"

namespace qrhint {

/// Runtime cell value; ints are kept exact via Rat as well.
using Cell = std::variant<BigInt, Rat, std::string, bool>;

using Row = std::vector<Cell>;

struct DbInstance {
  std::map<std::string, std::vector<Row>> tables;  // bag of rows per table

  std::string to_json() const;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalResult {
  std::vector<Row> rows;  // result bag
  /// For SPJA: the FROM-WHERE rows of each surviving group (before HAVING the
  /// groups of all rows); each group is a bag of joined rows rendered as
  /// canonical strings, used for partition comparison.
  std::vector<std::vector<std::string>> partition;
};

/// Bag-semantics evaluation: FROM cross product, WHERE filter, grouping,
/// HAVING per group, SELECT projection with aggregates. Division by zero
/// fails loudly.
EvalResult evaluate(const QueryIR& q, const DbInstance& db, const SchemaCatalog& catalog);

bool bags_equal(const std::vector<Row>& a, const std::vector<Row>& b);
std::string row_to_string(const Row& r);

struct InstanceGenOptions {
  int max_rows = 6;  // per table, 0..max_rows
};

/// Seeded random instance; value domains cover every literal constant in the
/// given queries plus neighbors and fresh values.
DbInstance generate_instance(const SchemaCatalog& catalog,
                             const std::vector<const QueryIR*>& queries, uint64_t seed,
                             const InstanceGenOptions& opt = {});

struct EmpiricalVerdict {
  bool indistinguishable;
  std::optional<DbInstance> witness;
  std::string detail;  // which part differed
};

EmpiricalVerdict check_equiv_empirical(const QueryIR& q, const QueryIR& qstar,
                                       const SchemaCatalog& catalog, uint64_t seed,
                                       int n_instances);

}  // namespace qrhint
