#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrhint/catalog.hpp"
#include "qrhint/expr.hpp"

namespace qrhint {

enum class DiagCode {
  SyntaxError,
  UnsupportedFeature,
  UnknownTable,
  UnknownColumn,
  AmbiguousColumn,
  DuplicateAlias,
  TypeError,
};

std::string diag_code_name(DiagCode c);

struct FrontendError : std::runtime_error {
  FrontendError(DiagCode code, std::string msg, SrcSpan span)
      : std::runtime_error(std::move(msg)), code(code), span(span) {}
  DiagCode code;
  SrcSpan span;
};

enum class QueryKind { SPJ, SPJA };

struct TableRef {
  std::string table;  // lower-cased catalog name
  std::string alias;  // lower-cased; defaults to table name
  SrcSpan span;       // span of this FROM item
};

struct SelectItem {
  ValueExpr expr;
  std::string output_name;  // AS name or derived; ignored for equivalence
};

/// Normalized single-block query. JOIN ... ON is already flattened into the
/// table list plus WHERE conjuncts; every column reference is qualified.
struct QueryIR {
  std::vector<TableRef> tables;
  Formula where;               // TRUE when absent
  std::vector<ValueExpr> group_by;
  Formula having;              // TRUE when absent
  std::vector<SelectItem> select;
  QueryKind kind = QueryKind::SPJ;
  bool distinct = false;       // already reflected in kind/group_by
  SrcSpan from_span;           // span of the FROM item list
  SrcSpan where_span;          // span of the WHERE condition (if present)

  std::vector<std::string> aliases() const;
  std::string table_of(const std::string& alias) const;
  /// Multiset of table names.
  std::map<std::string, int> table_counts() const;
};

QueryIR parse_and_normalize(const std::string& text, const SchemaCatalog& catalog);

/// Renders the IR back to SQL text (round-trip property: reparsing yields a
/// structurally identical IR).
std::string render_query(const QueryIR& q);

/// Applies an alias renaming across the whole IR.
QueryIR rename_query(const QueryIR& q,
                     const std::map<std::string, std::string>& alias_map);

}  // namespace qrhint
