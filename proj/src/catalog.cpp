#include "qrhint/catalog.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qrhint {

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string column_type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "int";
    case ColumnType::Decimal: return "decimal";
    case ColumnType::String: return "string";
    case ColumnType::Bool: return "bool";
  }
  return "?";
}

static ColumnType parse_type(const std::string& s) {
  std::string t = to_lower(s);
  if (t == "int" || t == "integer") return ColumnType::Int;
  if (t == "decimal" || t == "numeric" || t == "real" || t == "float") return ColumnType::Decimal;
  if (t == "string" || t == "text" || t == "varchar" || t == "char") return ColumnType::String;
  if (t == "bool" || t == "boolean") return ColumnType::Bool;
  throw std::runtime_error("unsupported column type: " + s);
}

void SchemaCatalog::add_table(const std::string& name, std::vector<ColumnDef> columns) {
  std::string key = to_lower(name);
  if (tables_.count(key)) throw std::runtime_error("duplicate table: " + name);
  std::set<std::string> seen;
  for (auto& c : columns) {
    c.name = to_lower(c.name);
    if (!seen.insert(c.name).second)
      throw std::runtime_error("duplicate column " + c.name + " in table " + name);
  }
  tables_.emplace(key, std::move(columns));
}

bool SchemaCatalog::has_table(const std::string& name) const {
  return tables_.count(to_lower(name)) > 0;
}

const std::vector<ColumnDef>& SchemaCatalog::columns(const std::string& table) const {
  auto it = tables_.find(to_lower(table));
  if (it == tables_.end()) throw std::runtime_error("unknown table: " + table);
  return it->second;
}

std::optional<ColumnType> SchemaCatalog::column_type(const std::string& table,
                                                     const std::string& column) const {
  auto it = tables_.find(to_lower(table));
  if (it == tables_.end()) return std::nullopt;
  std::string col = to_lower(column);
  for (const auto& c : it->second)
    if (c.name == col) return c.type;
  return std::nullopt;
}

SchemaCatalog SchemaCatalog::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SchemaCatalog cat;
  if (!j.contains("tables") || !j["tables"].is_object())
    throw std::runtime_error("catalog JSON must contain a \"tables\" object");
  for (auto& [name, cols] : j["tables"].items()) {
    std::vector<ColumnDef> defs;
    for (auto& c : cols) {
      defs.push_back({c.at("name").get<std::string>(), parse_type(c.at("type").get<std::string>())});
    }
    cat.add_table(name, std::move(defs));
  }
  return cat;
}

SchemaCatalog SchemaCatalog::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

}  // namespace qrhint
