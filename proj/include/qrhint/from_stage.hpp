#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qrhint/frontend.hpp"

namespace qrhint {

/// Per-table signed count delta: target count minus working count. Empty when
/// the FROM multisets already agree.
using FromDiff = std::map<std::string, int>;

FromDiff check_from(const QueryIR& q, const QueryIR& qstar);

/// How one alias's columns are used across the query, with equality-class
/// expansion and aliases replaced by table names.
struct TableSignature {
  // (attribute, op) -> interacting table names / const:<v> tokens
  std::map<std::pair<std::string, CmpOp>, std::set<std::string>> w;
  std::set<std::string> g;                       // GROUP BY attributes
  std::map<std::string, std::set<int>> s;        // attribute -> 1-based SELECT positions
  std::vector<std::string> attributes;           // the table's column names
};

TableSignature build_signature(const QueryIR& q, const std::string& alias,
                               const SchemaCatalog& catalog);

/// Appendix similarity: normalized Jaccard over W slots + Jaccard over G +
/// normalized Jaccard over S. `ops` is the operator slot set in play for the
/// query pair (LIKE participates only when some query uses it).
double signature_similarity(const TableSignature& a, const TableSignature& b,
                            const std::vector<CmpOp>& ops);

/// Operator slots for a pair of queries.
std::vector<CmpOp> signature_ops(const QueryIR& q, const QueryIR& qstar);

struct TableMapping {
  std::map<std::string, std::string> map;  // Aliases(Q*) -> Aliases(Q)
};

struct MappingResult {
  TableMapping mapping;
  QueryIR qstar_renamed;
  std::map<std::pair<std::string, std::string>, double> similarities;  // (t*, t) -> sim
};

/// Requires check_from(q, qstar) empty. Self-joined tables get a
/// maximum-total-similarity assignment (Hungarian per table block,
/// lexicographically smallest optimum); singleton tables map by name.
MappingResult select_table_mapping(const QueryIR& q, const QueryIR& qstar,
                                   const SchemaCatalog& catalog);

}  // namespace qrhint
