#include "qrhint/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

namespace qrhint {

std::string diag_code_name(DiagCode c) {
  switch (c) {
    case DiagCode::SyntaxError: return "SyntaxError";
    case DiagCode::UnsupportedFeature: return "UnsupportedFeature";
    case DiagCode::UnknownTable: return "UnknownTable";
    case DiagCode::UnknownColumn: return "UnknownColumn";
    case DiagCode::AmbiguousColumn: return "AmbiguousColumn";
    case DiagCode::DuplicateAlias: return "DuplicateAlias";
    case DiagCode::TypeError: return "TypeError";
  }
  return "?";
}

namespace {

enum class Tok { Ident, Int, Dec, Str, Punct, End };

struct Token {
  Tok kind;
  std::string text;   // identifiers lower-cased; punct literal; strings unquoted
  std::string upper;  // upper-cased identifier for keyword checks
  SrcSpan span;
};

const std::set<std::string> kReservedUnsupported = {
    "UNION", "INTERSECT", "EXCEPT", "WITH", "OVER", "ORDER", "LIMIT", "OFFSET",
    "CASE", "EXISTS", "IN", "BETWEEN", "ANY", "ALL", "NULL", "IS",
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(&text) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

  [[noreturn]] void fail(DiagCode code, const std::string& msg, SrcSpan sp) const {
    throw FrontendError(code, msg, sp);
  }

 private:
  void next() {
    const std::string& s = *text_;
    while (pos_ < s.size()) {
      char c = s[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) { pos_++; continue; }
      if (c == '-' && pos_ + 1 < s.size() && s[pos_ + 1] == '-') {
        while (pos_ < s.size() && s[pos_] != '\n') pos_++;
        continue;
      }
      break;
    }
    uint32_t start = static_cast<uint32_t>(pos_);
    if (pos_ >= s.size()) {
      tok_ = {Tok::End, "", "", {start, start}};
      return;
    }
    char c = s[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t b = pos_;
      while (pos_ < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[pos_])) || s[pos_] == '_'))
        pos_++;
      std::string raw = s.substr(b, pos_ - b);
      std::string up = raw;
      std::transform(up.begin(), up.end(), up.begin(), ::toupper);
      tok_ = {Tok::Ident, to_lower(raw), up, {start, static_cast<uint32_t>(pos_)}};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t b = pos_;
      bool dot = false;
      while (pos_ < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[pos_])) ||
              (!dot && s[pos_] == '.' && pos_ + 1 < s.size() &&
               std::isdigit(static_cast<unsigned char>(s[pos_ + 1]))))) {
        if (s[pos_] == '.') dot = true;
        pos_++;
      }
      tok_ = {dot ? Tok::Dec : Tok::Int, s.substr(b, pos_ - b), "",
              {start, static_cast<uint32_t>(pos_)}};
      return;
    }
    if (c == '\'') {
      pos_++;
      std::string val;
      while (true) {
        if (pos_ >= s.size())
          throw FrontendError(DiagCode::SyntaxError, "unterminated string literal",
                              {start, static_cast<uint32_t>(pos_)});
        if (s[pos_] == '\'') {
          if (pos_ + 1 < s.size() && s[pos_ + 1] == '\'') {
            val += '\'';
            pos_ += 2;
            continue;
          }
          pos_++;
          break;
        }
        val += s[pos_++];
      }
      tok_ = {Tok::Str, val, "", {start, static_cast<uint32_t>(pos_)}};
      return;
    }
    // multi-char operators
    static const char* two[] = {"<=", ">=", "<>", "!=", nullptr};
    for (int i = 0; two[i]; ++i) {
      if (s.compare(pos_, 2, two[i]) == 0) {
        pos_ += 2;
        tok_ = {Tok::Punct, two[i], "", {start, static_cast<uint32_t>(pos_)}};
        return;
      }
    }
    pos_++;
    tok_ = {Tok::Punct, std::string(1, c), "", {start, static_cast<uint32_t>(pos_)}};
  }

  const std::string* text_;
  size_t pos_ = 0;
  Token tok_;
};

// Raw (pre-resolution) expression/formula AST reuses ValueExpr/Formula with
// unresolved columns encoded as ColumnRef{alias="", column} or
// ColumnRef{alias, column} with type filled in later.

struct RawTable {
  std::string table;
  std::string alias;
  SrcSpan span;
};

struct RawQuery {
  bool distinct = false;
  std::vector<std::pair<ValueExpr, std::string>> select;  // expr, AS name ("" if none)
  bool select_star = false;
  std::vector<RawTable> tables;
  std::vector<Formula> join_conds;  // from JOIN ... ON
  Formula where;                    // may be null
  std::vector<ValueExpr> group_by;
  Formula having;                   // may be null
  SrcSpan from_span;
  SrcSpan where_span;
};

class Parser {
 public:
  Parser(const std::string& text, const SchemaCatalog& catalog)
      : lex_(text), catalog_(catalog) {}

  RawQuery parse_query() {
    expect_kw("SELECT");
    RawQuery q;
    if (at_kw("DISTINCT")) { lex_.take(); q.distinct = true; }
    if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "*") {
      Token t = lex_.take();
      fail(DiagCode::UnsupportedFeature, "SELECT * is not supported; list columns explicitly",
           t.span);
    }
    while (true) {
      ValueExpr e = parse_value_expr();
      std::string name;
      if (at_kw("AS")) {
        lex_.take();
        Token n = expect_ident();
        name = n.text;
      } else if (lex_.peek().kind == Tok::Ident && !is_keyword(lex_.peek())) {
        name = lex_.take().text;
      }
      q.select.emplace_back(e, name);
      if (!eat_punct(",")) break;
    }
    expect_kw("FROM");
    uint32_t from_begin = lex_.peek().span.begin;
    parse_from_list(q);
    q.from_span = {from_begin, last_end_};
    if (at_kw("WHERE")) {
      lex_.take();
      uint32_t b = lex_.peek().span.begin;
      q.where = parse_formula();
      q.where_span = {b, last_end_};
    }
    if (at_kw("GROUP")) {
      lex_.take();
      expect_kw("BY");
      while (true) {
        q.group_by.push_back(parse_value_expr());
        if (!eat_punct(",")) break;
      }
    }
    if (at_kw("HAVING")) {
      lex_.take();
      q.having = parse_formula();
    }
    Token t = lex_.peek();
    if (t.kind == Tok::Punct && t.text == ";") { lex_.take(); t = lex_.peek(); }
    if (t.kind != Tok::End) {
      if (t.kind == Tok::Ident && kReservedUnsupported.count(t.upper))
        fail(DiagCode::UnsupportedFeature, t.upper + " is not supported", t.span);
      fail(DiagCode::SyntaxError, "unexpected trailing input: '" + t.text + "'", t.span);
    }
    return q;
  }

 private:
  void parse_from_list(RawQuery& q) {
    parse_table_item(q);
    while (true) {
      if (eat_punct(",")) { parse_table_item(q); continue; }
      Token t = lex_.peek();
      if (t.kind == Tok::Ident &&
          (t.upper == "JOIN" || t.upper == "INNER" || t.upper == "CROSS" ||
           t.upper == "LEFT" || t.upper == "RIGHT" || t.upper == "FULL" ||
           t.upper == "OUTER" || t.upper == "NATURAL")) {
        if (t.upper == "LEFT" || t.upper == "RIGHT" || t.upper == "FULL" ||
            t.upper == "OUTER" || t.upper == "NATURAL")
          fail(DiagCode::UnsupportedFeature, t.upper + " JOIN is not supported", t.span);
        lex_.take();
        if (t.upper == "INNER" || t.upper == "CROSS") expect_kw("JOIN");
        parse_table_item(q);
        if (t.upper != "CROSS") {
          if (at_kw("ON")) {
            lex_.take();
            q.join_conds.push_back(parse_formula());
          } else if (at_kw("USING")) {
            fail(DiagCode::UnsupportedFeature, "JOIN ... USING is not supported",
                 lex_.peek().span);
          }
        }
        continue;
      }
      break;
    }
  }

  void parse_table_item(RawQuery& q) {
    Token t = lex_.peek();
    if (t.kind == Tok::Punct && t.text == "(")
      fail(DiagCode::UnsupportedFeature, "subqueries in FROM are not supported", t.span);
    Token name = expect_ident();
    if (name.upper == "SELECT")
      fail(DiagCode::UnsupportedFeature, "subqueries are not supported", name.span);
    RawTable rt;
    rt.table = name.text;
    rt.span = name.span;
    if (at_kw("AS")) {
      lex_.take();
      Token a = expect_ident();
      rt.alias = a.text;
      rt.span.end = a.span.end;
    } else if (lex_.peek().kind == Tok::Ident && !is_keyword(lex_.peek())) {
      Token a = lex_.take();
      rt.alias = a.text;
      rt.span.end = a.span.end;
    } else {
      rt.alias = rt.table;
    }
    q.tables.push_back(rt);
  }

  Formula parse_formula() { return parse_or(); }

  Formula parse_or() {
    Formula f = parse_and();
    std::vector<Formula> parts{f};
    uint32_t b = f->span.begin;
    while (at_kw("OR")) {
      lex_.take();
      parts.push_back(parse_and());
    }
    if (parts.size() == 1) return f;
    return make_or(std::move(parts), {b, last_end_});
  }

  Formula parse_and() {
    Formula f = parse_not();
    std::vector<Formula> parts{f};
    uint32_t b = f->span.begin;
    while (at_kw("AND")) {
      lex_.take();
      parts.push_back(parse_not());
    }
    if (parts.size() == 1) return f;
    return make_and(std::move(parts), {b, last_end_});
  }

  Formula parse_not() {
    if (at_kw("NOT")) {
      Token t = lex_.take();
      Formula f = parse_not();
      return make_not(f, {t.span.begin, last_end_});
    }
    return parse_predicate();
  }

  Formula parse_predicate() {
    Token t = lex_.peek();
    if (t.kind == Tok::Punct && t.text == "(") {
      // Either a parenthesized formula or a parenthesized value expression
      // followed by a comparison. Try the formula reading first and backtrack
      // on a syntax error.
      Lexer saved = lex_;
      uint32_t saved_end = last_end_;
      try {
        lex_.take();
        Formula f = parse_formula();
        expect_punct(")");
        // "(A = B) AND ..." vs "(A) = B": if a comparison operator follows a
        // parenthesized formula, re-read as a value expression.
        Token after = lex_.peek();
        bool cmp_follows =
            (after.kind == Tok::Punct &&
             (after.text == "=" || after.text == "<" || after.text == "<=" ||
              after.text == ">" || after.text == ">=" || after.text == "<>" ||
              after.text == "!=" || after.text == "+" || after.text == "-" ||
              after.text == "*" || after.text == "/")) ||
            (after.kind == Tok::Ident && (after.upper == "LIKE" || after.upper == "NOT"));
        if (!cmp_follows) return f;
      } catch (const FrontendError& e) {
        if (e.code != DiagCode::SyntaxError) throw;
      }
      lex_ = saved;
      last_end_ = saved_end;
      // fall through to the value-expression comparison path
    }
    if (t.kind == Tok::Ident && (t.upper == "TRUE" || t.upper == "FALSE")) {
      lex_.take();
      return t.upper == "TRUE" ? make_true() : make_false();
    }
    if (t.kind == Tok::Ident && t.upper == "EXISTS")
      fail(DiagCode::UnsupportedFeature, "EXISTS subqueries are not supported", t.span);
    ValueExpr lhs = parse_value_expr();
    Token op = lex_.peek();
    if (op.kind == Tok::Ident && op.upper == "NOT") {
      lex_.take();
      Token like = expect_ident();
      if (like.upper != "LIKE")
        fail(DiagCode::SyntaxError, "expected LIKE after NOT", like.span);
      ValueExpr rhs = parse_like_pattern();
      return make_atom(CmpOp::NotLike, lhs, rhs, {lhs->span.begin, last_end_});
    }
    if (op.kind == Tok::Ident && op.upper == "LIKE") {
      lex_.take();
      ValueExpr rhs = parse_like_pattern();
      return make_atom(CmpOp::Like, lhs, rhs, {lhs->span.begin, last_end_});
    }
    if (op.kind == Tok::Ident && (op.upper == "IN" || op.upper == "BETWEEN" || op.upper == "IS"))
      fail(DiagCode::UnsupportedFeature, op.upper + " predicates are not supported", op.span);
    if (op.kind != Tok::Punct)
      fail(DiagCode::SyntaxError, "expected comparison operator", op.span);
    CmpOp cmp;
    if (op.text == "=") cmp = CmpOp::Eq;
    else if (op.text == "<>" || op.text == "!=") cmp = CmpOp::Ne;
    else if (op.text == "<") cmp = CmpOp::Lt;
    else if (op.text == "<=") cmp = CmpOp::Le;
    else if (op.text == ">") cmp = CmpOp::Gt;
    else if (op.text == ">=") cmp = CmpOp::Ge;
    else fail(DiagCode::SyntaxError, "expected comparison operator, got '" + op.text + "'", op.span);
    lex_.take();
    ValueExpr rhs = parse_value_expr();
    return make_atom(cmp, lhs, rhs, {lhs->span.begin, last_end_});
  }

  ValueExpr parse_like_pattern() {
    Token t = lex_.peek();
    if (t.kind != Tok::Str)
      fail(DiagCode::UnsupportedFeature, "LIKE requires a constant string pattern", t.span);
    lex_.take();
    last_end_ = t.span.end;
    return make_str(t.text, t.span);
  }

  ValueExpr parse_value_expr() { return parse_additive(); }

  ValueExpr parse_additive() {
    ValueExpr e = parse_multiplicative();
    while (lex_.peek().kind == Tok::Punct &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      std::string op = lex_.take().text;
      ValueExpr r = parse_multiplicative();
      e = make_arith(op == "+" ? ArithOp::Add : ArithOp::Sub, e, r,
                     {e->span.begin, last_end_});
    }
    return e;
  }

  ValueExpr parse_multiplicative() {
    ValueExpr e = parse_unary();
    while (lex_.peek().kind == Tok::Punct &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      std::string op = lex_.take().text;
      ValueExpr r = parse_unary();
      e = make_arith(op == "*" ? ArithOp::Mul : ArithOp::Div, e, r,
                     {e->span.begin, last_end_});
    }
    return e;
  }

  ValueExpr parse_unary() {
    Token t = lex_.peek();
    if (t.kind == Tok::Punct && t.text == "-") {
      lex_.take();
      ValueExpr e = parse_unary();
      return make_neg(e, {t.span.begin, last_end_});
    }
    if (t.kind == Tok::Punct && t.text == "+") {
      lex_.take();
      return parse_unary();
    }
    return parse_primary();
  }

  ValueExpr parse_primary() {
    Token t = lex_.peek();
    if (t.kind == Tok::Punct && t.text == "(") {
      lex_.take();
      ValueExpr e = parse_value_expr();
      expect_punct(")");
      return e;
    }
    if (t.kind == Tok::Int) {
      lex_.take();
      last_end_ = t.span.end;
      return make_int(BigInt(t.text), t.span);
    }
    if (t.kind == Tok::Dec) {
      lex_.take();
      last_end_ = t.span.end;
      return make_dec(rat_from_decimal_string(t.text), t.span);
    }
    if (t.kind == Tok::Str) {
      lex_.take();
      last_end_ = t.span.end;
      return make_str(t.text, t.span);
    }
    if (t.kind != Tok::Ident)
      fail(DiagCode::SyntaxError, "expected expression, got '" + t.text + "'", t.span);
    if (t.upper == "NULL")
      fail(DiagCode::UnsupportedFeature, "NULL literals are not supported", t.span);
    if (t.upper == "TRUE" || t.upper == "FALSE") {
      lex_.take();
      last_end_ = t.span.end;
      return make_bool(t.upper == "TRUE", t.span);
    }
    if (t.upper == "SELECT")
      fail(DiagCode::UnsupportedFeature, "subqueries are not supported", t.span);
    if (t.upper == "CAST" || t.upper == "CASE")
      fail(DiagCode::UnsupportedFeature, t.upper + " is not supported", t.span);
    // aggregate call?
    std::optional<AggFn> fn;
    if (t.upper == "SUM") fn = AggFn::Sum;
    else if (t.upper == "AVG") fn = AggFn::Avg;
    else if (t.upper == "COUNT") fn = AggFn::Count;
    else if (t.upper == "MIN") fn = AggFn::Min;
    else if (t.upper == "MAX") fn = AggFn::Max;
    Token name = lex_.take();
    last_end_ = name.span.end;
    if (fn && lex_.peek().kind == Tok::Punct && lex_.peek().text == "(") {
      lex_.take();
      if (at_kw("DISTINCT"))
        fail(DiagCode::UnsupportedFeature, "DISTINCT inside aggregates is not supported",
             lex_.peek().span);
      ValueExpr arg;
      if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "*") {
        Token star = lex_.take();
        if (*fn != AggFn::Count)
          fail(DiagCode::SyntaxError, "* is only valid in COUNT(*)", star.span);
      } else {
        arg = parse_value_expr();
      }
      Token close = lex_.peek();
      expect_punct(")");
      if (*fn != AggFn::Count && !arg)
        fail(DiagCode::SyntaxError, "aggregate requires an argument", close.span);
      return make_agg(*fn, arg, {name.span.begin, last_end_});
    }
    if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "(") {
      Token p = lex_.peek();
      if (is_keyword(name) || !fn)
        fail(DiagCode::UnsupportedFeature,
             "function call '" + name.text + "' is not supported (window functions and UDFs are out of scope)",
             p.span);
    }
    // column reference: ident or ident.ident
    if (lex_.peek().kind == Tok::Punct && lex_.peek().text == ".") {
      lex_.take();
      Token col = expect_ident();
      last_end_ = col.span.end;
      return make_column(name.text, col.text, ColumnType::Int,
                         {name.span.begin, col.span.end});
    }
    return make_column("", name.text, ColumnType::Int, name.span);
  }

  bool is_keyword(const Token& t) const {
    static const std::set<std::string> kw = {
        "SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "AND", "OR", "NOT",
        "AS", "ON", "JOIN", "INNER", "CROSS", "LEFT", "RIGHT", "FULL", "OUTER",
        "NATURAL", "LIKE", "DISTINCT", "TRUE", "FALSE", "UNION", "INTERSECT",
        "EXCEPT", "ORDER", "LIMIT", "USING", "IN", "BETWEEN", "IS", "NULL",
        "EXISTS", "WITH", "OVER",
    };
    return t.kind == Tok::Ident && kw.count(t.upper) > 0;
  }

  bool at_kw(const std::string& k) const {
    return lex_.peek().kind == Tok::Ident && lex_.peek().upper == k;
  }

  void expect_kw(const std::string& k) {
    Token t = lex_.peek();
    if (!at_kw(k)) {
      if (t.kind == Tok::Ident && kReservedUnsupported.count(t.upper))
        fail(DiagCode::UnsupportedFeature, t.upper + " is not supported", t.span);
      fail(DiagCode::SyntaxError, "expected " + k, t.span);
    }
    last_end_ = t.span.end;
    lex_.take();
  }

  Token expect_ident() {
    Token t = lex_.peek();
    if (t.kind != Tok::Ident)
      fail(DiagCode::SyntaxError, "expected identifier, got '" + t.text + "'", t.span);
    last_end_ = t.span.end;
    return lex_.take();
  }

  bool eat_punct(const std::string& p) {
    if (lex_.peek().kind == Tok::Punct && lex_.peek().text == p) {
      last_end_ = lex_.peek().span.end;
      lex_.take();
      return true;
    }
    return false;
  }

  void expect_punct(const std::string& p) {
    Token t = lex_.peek();
    if (!eat_punct(p))
      fail(DiagCode::SyntaxError, "expected '" + p + "', got '" + t.text + "'", t.span);
  }

  [[noreturn]] void fail(DiagCode code, const std::string& msg, SrcSpan sp) const {
    throw FrontendError(code, msg, sp);
  }

  Lexer lex_;
  const SchemaCatalog& catalog_;
  uint32_t last_end_ = 0;
};

// --------------------------- Resolution --------------------------------

class Resolver {
 public:
  Resolver(const SchemaCatalog& catalog, const std::vector<TableRef>& tables)
      : catalog_(catalog), tables_(tables) {}

  ValueExpr resolve_expr(const ValueExpr& e, bool allow_agg) {
    if (auto* c = std::get_if<ColumnRef>(&e->kind)) {
      auto [alias, type] = resolve_column(c->alias, c->column, e->span);
      return make_column(alias, c->column, type, e->span);
    }
    if (auto* n = std::get_if<Neg>(&e->kind)) {
      ValueExpr a = resolve_expr(n->arg, allow_agg);
      require_numeric(a, e->span);
      return make_neg(a, e->span);
    }
    if (auto* a = std::get_if<Arith>(&e->kind)) {
      ValueExpr l = resolve_expr(a->lhs, allow_agg);
      ValueExpr r = resolve_expr(a->rhs, allow_agg);
      require_numeric(l, a->lhs->span);
      require_numeric(r, a->rhs->span);
      if (a->op == ArithOp::Div && !is_nonzero_constant(r))
        throw FrontendError(DiagCode::UnsupportedFeature,
                            "division is only supported by a nonzero constant", e->span);
      return make_arith(a->op, l, r, e->span);
    }
    if (auto* g = std::get_if<AggCall>(&e->kind)) {
      if (!allow_agg)
        throw FrontendError(DiagCode::UnsupportedFeature,
                            "aggregate calls are not allowed here", e->span);
      ValueExpr arg;
      if (g->arg) {
        arg = resolve_expr(g->arg, false);
        if (contains_aggregate(arg))
          throw FrontendError(DiagCode::UnsupportedFeature, "nested aggregates", e->span);
        if (g->fn != AggFn::Count && g->fn != AggFn::Min && g->fn != AggFn::Max)
          require_numeric(arg, g->arg->span);
      }
      return make_agg(g->fn, arg, e->span);
    }
    return e;
  }

  Formula resolve_formula(const Formula& f, bool allow_agg) {
    switch (f->kind) {
      case FKind::True:
      case FKind::False:
        return f;
      case FKind::Atom: {
        ValueExpr l = resolve_expr(f->lhs, allow_agg);
        ValueExpr r = resolve_expr(f->rhs, allow_agg);
        check_atom_types(f->op, l, r, f->span);
        return make_atom(f->op, l, r, f->span);
      }
      case FKind::Not:
        return make_not(resolve_formula(f->children[0], allow_agg), f->span);
      default: {
        std::vector<Formula> kids;
        for (const auto& c : f->children) kids.push_back(resolve_formula(c, allow_agg));
        auto n = std::make_shared<FormulaNode>(*f);
        n->children = std::move(kids);
        return n;
      }
    }
  }

 private:
  std::pair<std::string, ColumnType> resolve_column(const std::string& alias,
                                                    const std::string& column, SrcSpan sp) {
    if (!alias.empty()) {
      for (const auto& t : tables_) {
        if (t.alias == alias) {
          auto ty = catalog_.column_type(t.table, column);
          if (!ty)
            throw FrontendError(DiagCode::UnknownColumn,
                                "column " + column + " does not exist in table " + t.table, sp);
          return {alias, *ty};
        }
      }
      throw FrontendError(DiagCode::UnknownTable, "unknown table alias: " + alias, sp);
    }
    std::vector<std::pair<std::string, ColumnType>> hits;
    for (const auto& t : tables_) {
      auto ty = catalog_.column_type(t.table, column);
      if (ty) hits.emplace_back(t.alias, *ty);
    }
    if (hits.empty())
      throw FrontendError(DiagCode::UnknownColumn, "unknown column: " + column, sp);
    if (hits.size() > 1)
      throw FrontendError(DiagCode::AmbiguousColumn,
                          "column " + column + " is ambiguous; qualify it with an alias", sp);
    return hits[0];
  }

  void require_numeric(const ValueExpr& e, SrcSpan sp) {
    ColumnType t = value_type(e);
    if (t != ColumnType::Int && t != ColumnType::Decimal)
      throw FrontendError(DiagCode::TypeError, "expected a numeric expression", sp);
  }

  bool is_nonzero_constant(const ValueExpr& e) {
    if (auto* i = std::get_if<IntLit>(&e->kind)) return i->value != 0;
    if (auto* d = std::get_if<DecLit>(&e->kind)) return d->value != Rat(0);
    if (auto* n = std::get_if<Neg>(&e->kind)) return is_nonzero_constant(n->arg);
    return false;
  }

  void check_atom_types(CmpOp op, const ValueExpr& l, const ValueExpr& r, SrcSpan sp) {
    ColumnType lt = value_type(l), rt = value_type(r);
    bool lnum = lt == ColumnType::Int || lt == ColumnType::Decimal;
    bool rnum = rt == ColumnType::Int || rt == ColumnType::Decimal;
    if (op == CmpOp::Like || op == CmpOp::NotLike) {
      if (lt != ColumnType::String)
        throw FrontendError(DiagCode::TypeError, "LIKE requires a string expression", sp);
      return;
    }
    if (lnum && rnum) return;
    if (lt == ColumnType::String && rt == ColumnType::String) {
      if (op != CmpOp::Eq && op != CmpOp::Ne)
        throw FrontendError(DiagCode::UnsupportedFeature,
                            "strings support only =, <> and LIKE", sp);
      return;
    }
    if (lt == ColumnType::Bool && rt == ColumnType::Bool) {
      if (op != CmpOp::Eq && op != CmpOp::Ne)
        throw FrontendError(DiagCode::TypeError, "booleans support only = and <>", sp);
      return;
    }
    throw FrontendError(DiagCode::TypeError,
                        "type mismatch in comparison (" + column_type_name(lt) + " vs " +
                            column_type_name(rt) + ")",
                        sp);
  }

  const SchemaCatalog& catalog_;
  const std::vector<TableRef>& tables_;
};

}  // namespace

std::vector<std::string> QueryIR::aliases() const {
  std::vector<std::string> out;
  for (const auto& t : tables) out.push_back(t.alias);
  return out;
}

std::string QueryIR::table_of(const std::string& alias) const {
  for (const auto& t : tables)
    if (t.alias == alias) return t.table;
  throw std::runtime_error("unknown alias: " + alias);
}

std::map<std::string, int> QueryIR::table_counts() const {
  std::map<std::string, int> m;
  for (const auto& t : tables) m[t.table]++;
  return m;
}

QueryIR parse_and_normalize(const std::string& text, const SchemaCatalog& catalog) {
  Parser parser(text, catalog);
  RawQuery raw = parser.parse_query();

  QueryIR q;
  std::set<std::string> alias_seen;
  for (const auto& rt : raw.tables) {
    if (!catalog.has_table(rt.table))
      throw FrontendError(DiagCode::UnknownTable, "unknown table: " + rt.table, rt.span);
    if (!alias_seen.insert(rt.alias).second)
      throw FrontendError(DiagCode::DuplicateAlias, "duplicate alias: " + rt.alias, rt.span);
    q.tables.push_back({to_lower(rt.table), rt.alias, rt.span});
  }
  q.from_span = raw.from_span;
  q.where_span = raw.where_span;

  Resolver res(catalog, q.tables);

  std::vector<Formula> where_parts;
  for (const auto& jc : raw.join_conds) where_parts.push_back(res.resolve_formula(jc, false));
  if (raw.where) where_parts.push_back(res.resolve_formula(raw.where, false));
  if (where_parts.empty()) q.where = make_true();
  else if (where_parts.size() == 1) q.where = where_parts[0];
  else {
    // JOIN ... ON conjuncts merge with the WHERE condition
    std::vector<Formula> flat;
    for (auto& p : where_parts) {
      if (p->kind == FKind::And)
        for (auto& c : p->children) flat.push_back(c);
      else
        flat.push_back(p);
    }
    q.where = make_and(std::move(flat), raw.where_span);
  }
  if (formula_contains_aggregate(q.where))
    throw FrontendError(DiagCode::UnsupportedFeature, "aggregates are not allowed in WHERE",
                        q.where->span);

  for (const auto& g : raw.group_by) {
    ValueExpr e = res.resolve_expr(g, false);
    if (contains_aggregate(e))
      throw FrontendError(DiagCode::UnsupportedFeature, "aggregates are not allowed in GROUP BY",
                          g->span);
    q.group_by.push_back(e);
  }

  q.having = raw.having ? res.resolve_formula(raw.having, true) : make_true();

  bool any_agg = formula_contains_aggregate(q.having);
  for (const auto& [e, name] : raw.select) {
    ValueExpr r = res.resolve_expr(e, true);
    any_agg = any_agg || contains_aggregate(r);
    std::string out_name = name;
    if (out_name.empty()) {
      if (auto* c = std::get_if<ColumnRef>(&r->kind)) out_name = c->column;
    }
    q.select.push_back({r, out_name});
  }

  q.distinct = raw.distinct;
  bool spja = raw.distinct || !q.group_by.empty() || any_agg;
  q.kind = spja ? QueryKind::SPJA : QueryKind::SPJ;

  if (raw.distinct) {
    if (any_agg || !q.group_by.empty() || raw.having)
      throw FrontendError(DiagCode::UnsupportedFeature,
                          "DISTINCT combined with GROUP BY/aggregates is not supported",
                          SrcSpan{});
    for (const auto& s : q.select) q.group_by.push_back(s.expr);
  }

  if (q.kind == QueryKind::SPJA) {
    // Bare column references in SELECT and HAVING (outside aggregates) must be
    // grouped; matches SQL and keeps the oracle total.
    auto grouped = [&](const ColumnRef& c) {
      for (const auto& g : q.group_by)
        if (auto* gc = std::get_if<ColumnRef>(&g->kind))
          if (gc->alias == c.alias && gc->column == c.column) return true;
      return false;
    };
    auto check_bare = [&](const ValueExpr& e, const char* where_name) {
      std::vector<ValueExpr> aggs;
      collect_aggregates(e, aggs);
      std::vector<ColumnRef> agg_cols;
      for (const auto& a : aggs) collect_columns(a, agg_cols);
      std::vector<ColumnRef> all_cols;
      collect_columns(e, all_cols);
      for (const auto& c : all_cols) {
        bool inside_agg = false;
        for (const auto& ac : agg_cols)
          if (ac.alias == c.alias && ac.column == c.column) { inside_agg = true; break; }
        if (!inside_agg && !grouped(c))
          throw FrontendError(DiagCode::TypeError,
                              std::string(where_name) + " references " + c.alias + "." +
                                  c.column + " which is neither grouped nor aggregated",
                              e->span);
      }
    };
    for (const auto& s : q.select) check_bare(s.expr, "SELECT");
    if (q.having->kind != FKind::True) {
      std::vector<Formula> atoms;
      collect_atoms(q.having, atoms);
      for (const auto& a : atoms) {
        check_bare(a->lhs, "HAVING");
        check_bare(a->rhs, "HAVING");
      }
    }
  } else if (q.having->kind != FKind::True) {
    throw FrontendError(DiagCode::UnsupportedFeature, "HAVING without grouping or aggregation",
                        q.having->span);
  }

  return q;
}

std::string render_query(const QueryIR& q) {
  std::ostringstream os;
  os << "SELECT ";
  if (q.distinct) os << "DISTINCT ";
  for (size_t i = 0; i < q.select.size(); ++i) {
    if (i) os << ", ";
    os << render_expr(q.select[i].expr);
  }
  os << " FROM ";
  for (size_t i = 0; i < q.tables.size(); ++i) {
    if (i) os << ", ";
    os << q.tables[i].table;
    if (q.tables[i].alias != q.tables[i].table) os << " " << q.tables[i].alias;
  }
  if (q.where->kind != FKind::True) os << " WHERE " << render_formula(q.where);
  if (!q.group_by.empty() && !q.distinct) {
    os << " GROUP BY ";
    for (size_t i = 0; i < q.group_by.size(); ++i) {
      if (i) os << ", ";
      os << render_expr(q.group_by[i]);
    }
  }
  if (q.having->kind != FKind::True) os << " HAVING " << render_formula(q.having);
  return os.str();
}

QueryIR rename_query(const QueryIR& q, const std::map<std::string, std::string>& alias_map) {
  auto f = [&](const std::string& a) {
    auto it = alias_map.find(a);
    return it == alias_map.end() ? a : it->second;
  };
  QueryIR out = q;
  for (auto& t : out.tables) t.alias = f(t.alias);
  out.where = rename_formula(q.where, f);
  out.having = rename_formula(q.having, f);
  out.group_by.clear();
  for (const auto& g : q.group_by) out.group_by.push_back(rename_expr(g, f));
  out.select.clear();
  for (const auto& s : q.select) out.select.push_back({rename_expr(s.expr, f), s.output_name});
  return out;
}

}  // namespace qrhint
