#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qrhint {

enum class ColumnType { Int, Decimal, String, Bool };

std::string column_type_name(ColumnType t);

struct ColumnDef {
  std::string name;  // stored lower-cased
  ColumnType type;
};

/// Table definitions a query pair is resolved against. Identifiers are
/// case-insensitive and stored lower-cased.
class SchemaCatalog {
 public:
  void add_table(const std::string& name, std::vector<ColumnDef> columns);

  bool has_table(const std::string& name) const;
  const std::vector<ColumnDef>& columns(const std::string& table) const;
  std::optional<ColumnType> column_type(const std::string& table,
                                        const std::string& column) const;
  const std::map<std::string, std::vector<ColumnDef>>& tables() const { return tables_; }

  /// Parses {"tables":{"R":[{"name":"A","type":"int"},...]}}.
  static SchemaCatalog from_json_text(const std::string& text);
  static SchemaCatalog from_json_file(const std::string& path);

 private:
  std::map<std::string, std::vector<ColumnDef>> tables_;
};

std::string to_lower(const std::string& s);

}  // namespace qrhint
