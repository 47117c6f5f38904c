#include "qrhint/expr.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qrhint {

std::string agg_fn_name(AggFn f) {
  switch (f) {
    case AggFn::Sum: return "SUM";
    case AggFn::Avg: return "AVG";
    case AggFn::Count: return "COUNT";
    case AggFn::Min: return "MIN";
    case AggFn::Max: return "MAX";
  }
  return "?";
}

ValueExpr make_column(std::string alias, std::string column, ColumnType type, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = ColumnRef{std::move(alias), std::move(column), type};
  n->span = sp;
  return n;
}

ValueExpr make_int(BigInt v, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = IntLit{std::move(v)};
  n->span = sp;
  return n;
}

ValueExpr make_dec(Rat v, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = DecLit{std::move(v)};
  n->span = sp;
  return n;
}

ValueExpr make_str(std::string v, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = StrLit{std::move(v)};
  n->span = sp;
  return n;
}

ValueExpr make_bool(bool v, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = BoolLit{v};
  n->span = sp;
  return n;
}

ValueExpr make_neg(ValueExpr e, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = Neg{std::move(e)};
  n->span = sp;
  return n;
}

ValueExpr make_arith(ArithOp op, ValueExpr l, ValueExpr r, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = Arith{op, std::move(l), std::move(r)};
  n->span = sp;
  return n;
}

ValueExpr make_agg(AggFn fn, ValueExpr arg, SrcSpan sp) {
  auto n = std::make_shared<ValueExprNode>();
  n->kind = AggCall{fn, std::move(arg)};
  n->span = sp;
  return n;
}

ColumnType value_type(const ValueExpr& e) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) return c->type;
  if (std::holds_alternative<IntLit>(e->kind)) return ColumnType::Int;
  if (std::holds_alternative<DecLit>(e->kind)) return ColumnType::Decimal;
  if (std::holds_alternative<StrLit>(e->kind)) return ColumnType::String;
  if (std::holds_alternative<BoolLit>(e->kind)) return ColumnType::Bool;
  if (auto* n = std::get_if<Neg>(&e->kind)) return value_type(n->arg);
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    ColumnType l = value_type(a->lhs), r = value_type(a->rhs);
    if (a->op == ArithOp::Div) return ColumnType::Decimal;
    return (l == ColumnType::Decimal || r == ColumnType::Decimal) ? ColumnType::Decimal
                                                                  : ColumnType::Int;
  }
  const auto& g = std::get<AggCall>(e->kind);
  if (g.fn == AggFn::Count) return ColumnType::Int;
  if (g.fn == AggFn::Avg) return ColumnType::Decimal;
  return g.arg ? value_type(g.arg) : ColumnType::Int;
}

bool contains_aggregate(const ValueExpr& e) {
  if (std::holds_alternative<AggCall>(e->kind)) return true;
  if (auto* n = std::get_if<Neg>(&e->kind)) return contains_aggregate(n->arg);
  if (auto* a = std::get_if<Arith>(&e->kind))
    return contains_aggregate(a->lhs) || contains_aggregate(a->rhs);
  return false;
}

void collect_columns(const ValueExpr& e, std::vector<ColumnRef>& out) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) { out.push_back(*c); return; }
  if (auto* n = std::get_if<Neg>(&e->kind)) { collect_columns(n->arg, out); return; }
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    collect_columns(a->lhs, out);
    collect_columns(a->rhs, out);
    return;
  }
  if (auto* g = std::get_if<AggCall>(&e->kind)) {
    if (g->arg) collect_columns(g->arg, out);
  }
}

void collect_aggregates(const ValueExpr& e, std::vector<ValueExpr>& out) {
  if (std::holds_alternative<AggCall>(e->kind)) { out.push_back(e); return; }
  if (auto* n = std::get_if<Neg>(&e->kind)) { collect_aggregates(n->arg, out); return; }
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    collect_aggregates(a->lhs, out);
    collect_aggregates(a->rhs, out);
  }
}

bool expr_equal(const ValueExpr& a, const ValueExpr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind.index() != b->kind.index()) return false;
  if (auto* c = std::get_if<ColumnRef>(&a->kind)) {
    const auto& d = std::get<ColumnRef>(b->kind);
    return c->alias == d.alias && c->column == d.column;
  }
  if (auto* c = std::get_if<IntLit>(&a->kind)) return c->value == std::get<IntLit>(b->kind).value;
  if (auto* c = std::get_if<DecLit>(&a->kind)) return c->value == std::get<DecLit>(b->kind).value;
  if (auto* c = std::get_if<StrLit>(&a->kind)) return c->value == std::get<StrLit>(b->kind).value;
  if (auto* c = std::get_if<BoolLit>(&a->kind)) return c->value == std::get<BoolLit>(b->kind).value;
  if (auto* c = std::get_if<Neg>(&a->kind)) return expr_equal(c->arg, std::get<Neg>(b->kind).arg);
  if (auto* c = std::get_if<Arith>(&a->kind)) {
    const auto& d = std::get<Arith>(b->kind);
    return c->op == d.op && expr_equal(c->lhs, d.lhs) && expr_equal(c->rhs, d.rhs);
  }
  const auto& c = std::get<AggCall>(a->kind);
  const auto& d = std::get<AggCall>(b->kind);
  if (c.fn != d.fn) return false;
  if (!c.arg != !d.arg) return false;
  return !c.arg || expr_equal(c.arg, d.arg);
}

static int arith_prec(ArithOp op) {
  return (op == ArithOp::Mul || op == ArithOp::Div) ? 2 : 1;
}

static void render_expr_rec(const ValueExpr& e, std::ostringstream& os, int parent_prec) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) {
    os << c->alias << "." << c->column;
  } else if (auto* i = std::get_if<IntLit>(&e->kind)) {
    os << i->value.str();
  } else if (auto* d = std::get_if<DecLit>(&e->kind)) {
    os << rat_to_string(d->value);
  } else if (auto* s = std::get_if<StrLit>(&e->kind)) {
    std::string esc;
    for (char ch : s->value) { esc += ch; if (ch == '\'') esc += '\''; }
    os << "'" << esc << "'";
  } else if (auto* b = std::get_if<BoolLit>(&e->kind)) {
    os << (b->value ? "TRUE" : "FALSE");
  } else if (auto* n = std::get_if<Neg>(&e->kind)) {
    os << "-";
    render_expr_rec(n->arg, os, 3);
  } else if (auto* a = std::get_if<Arith>(&e->kind)) {
    int prec = arith_prec(a->op);
    bool paren = prec < parent_prec;
    if (paren) os << "(";
    render_expr_rec(a->lhs, os, prec);
    switch (a->op) {
      case ArithOp::Add: os << " + "; break;
      case ArithOp::Sub: os << " - "; break;
      case ArithOp::Mul: os << " * "; break;
      case ArithOp::Div: os << " / "; break;
    }
    render_expr_rec(a->rhs, os, prec + 1);
    if (paren) os << ")";
  } else {
    const auto& g = std::get<AggCall>(e->kind);
    os << agg_fn_name(g.fn) << "(";
    if (g.arg) render_expr_rec(g.arg, os, 0);
    else os << "*";
    os << ")";
  }
}

std::string render_expr(const ValueExpr& e) {
  std::ostringstream os;
  render_expr_rec(e, os, 0);
  return os.str();
}

ValueExpr rename_expr(const ValueExpr& e,
                      const std::function<std::string(const std::string&)>& f) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) {
    std::string renamed = f(c->alias);
    if (renamed == c->alias) return e;
    return make_column(renamed, c->column, c->type, e->span);
  }
  if (auto* n = std::get_if<Neg>(&e->kind)) {
    ValueExpr a = rename_expr(n->arg, f);
    return a == n->arg ? e : make_neg(a, e->span);
  }
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    ValueExpr l = rename_expr(a->lhs, f), r = rename_expr(a->rhs, f);
    return (l == a->lhs && r == a->rhs) ? e : make_arith(a->op, l, r, e->span);
  }
  if (auto* g = std::get_if<AggCall>(&e->kind)) {
    if (!g->arg) return e;
    ValueExpr arg = rename_expr(g->arg, f);
    return arg == g->arg ? e : make_agg(g->fn, arg, e->span);
  }
  return e;
}

// ---------------------------------------------------------------------------

std::string cmp_op_name(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Like: return "LIKE";
    case CmpOp::NotLike: return "NOT LIKE";
  }
  return "?";
}

CmpOp negate_op(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Like: return CmpOp::NotLike;
    case CmpOp::NotLike: return CmpOp::Like;
  }
  return op;
}

CmpOp flip_op(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;  // Eq/Ne symmetric; LIKE is not flippable
  }
}

Formula make_true() {
  static Formula t = [] {
    auto n = std::make_shared<FormulaNode>();
    n->kind = FKind::True;
    return Formula(n);
  }();
  return t;
}

Formula make_false() {
  static Formula f = [] {
    auto n = std::make_shared<FormulaNode>();
    n->kind = FKind::False;
    return Formula(n);
  }();
  return f;
}

Formula make_atom(CmpOp op, ValueExpr lhs, ValueExpr rhs, SrcSpan sp) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::Atom;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->span = sp;
  return n;
}

Formula make_not(Formula f, SrcSpan sp) {
  if (f->kind == FKind::True) return make_false();
  if (f->kind == FKind::False) return make_true();
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::Not;
  n->children = {std::move(f)};
  n->span = sp;
  return n;
}

static Formula make_nary(FKind kind, std::vector<Formula> children, SrcSpan sp, bool flatten) {
  bool absorb = kind == FKind::And ? false : true;  // And absorbs False, Or absorbs True
  std::vector<Formula> kept;
  for (auto& c : children) {
    if (c->kind == FKind::True) {
      if (kind == FKind::And) continue;
      return make_true();
    }
    if (c->kind == FKind::False) {
      if (kind == FKind::Or) continue;
      return make_false();
    }
    if (flatten && c->kind == kind) {
      for (auto& gc : c->children) kept.push_back(gc);
    } else {
      kept.push_back(std::move(c));
    }
  }
  (void)absorb;
  if (kept.empty()) return kind == FKind::And ? make_true() : make_false();
  if (kept.size() == 1) return kept[0];
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->children = std::move(kept);
  n->span = sp;
  return n;
}

Formula make_and(std::vector<Formula> children, SrcSpan sp, bool flatten) {
  return make_nary(FKind::And, std::move(children), sp, flatten);
}

Formula make_or(std::vector<Formula> children, SrcSpan sp, bool flatten) {
  return make_nary(FKind::Or, std::move(children), sp, flatten);
}

Formula negate(const Formula& f) {
  switch (f->kind) {
    case FKind::True: return make_false();
    case FKind::False: return make_true();
    case FKind::Atom: return make_atom(negate_op(f->op), f->lhs, f->rhs);
    case FKind::Not: return f->children[0];
    default: return make_not(f);
  }
}

int formula_size(const Formula& f) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
    case FKind::Atom:
      return 1;
    default: {
      int n = 1;
      for (const auto& c : f->children) n += formula_size(c);
      return n;
    }
  }
}

bool formula_equal(const Formula& a, const Formula& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  if (a->kind == FKind::Atom)
    return a->op == b->op && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!formula_equal(a->children[i], b->children[i])) return false;
  return true;
}

bool formula_is_const(const Formula& f, bool value) {
  return f->kind == (value ? FKind::True : FKind::False);
}

static void render_formula_rec(const Formula& f, std::ostringstream& os, int parent_prec) {
  // precedence: OR=1, AND=2, NOT=3, atoms=4
  switch (f->kind) {
    case FKind::True: os << "TRUE"; return;
    case FKind::False: os << "FALSE"; return;
    case FKind::Atom:
      os << render_expr(f->lhs) << " " << cmp_op_name(f->op) << " " << render_expr(f->rhs);
      return;
    case FKind::Not:
      os << "NOT (";
      render_formula_rec(f->children[0], os, 0);
      os << ")";
      return;
    case FKind::And: {
      bool paren = parent_prec > 2;
      if (paren) os << "(";
      for (size_t i = 0; i < f->children.size(); ++i) {
        if (i) os << " AND ";
        render_formula_rec(f->children[i], os, 3);
      }
      if (paren) os << ")";
      return;
    }
    case FKind::Or: {
      bool paren = parent_prec > 1;
      if (paren) os << "(";
      for (size_t i = 0; i < f->children.size(); ++i) {
        if (i) os << " OR ";
        render_formula_rec(f->children[i], os, 2);
      }
      if (paren) os << ")";
      return;
    }
  }
}

std::string render_formula(const Formula& f) {
  std::ostringstream os;
  render_formula_rec(f, os, 0);
  return os.str();
}

void collect_atoms(const Formula& f, std::vector<Formula>& out) {
  if (f->kind == FKind::Atom) { out.push_back(f); return; }
  for (const auto& c : f->children) collect_atoms(c, out);
}

void collect_formula_columns(const Formula& f, std::vector<ColumnRef>& out) {
  if (f->kind == FKind::Atom) {
    collect_columns(f->lhs, out);
    collect_columns(f->rhs, out);
    return;
  }
  for (const auto& c : f->children) collect_formula_columns(c, out);
}

bool formula_contains_aggregate(const Formula& f) {
  if (f->kind == FKind::Atom)
    return contains_aggregate(f->lhs) || contains_aggregate(f->rhs);
  for (const auto& c : f->children)
    if (formula_contains_aggregate(c)) return true;
  return false;
}

Formula rename_formula(const Formula& f,
                       const std::function<std::string(const std::string&)>& rename_alias) {
  switch (f->kind) {
    case FKind::True:
    case FKind::False:
      return f;
    case FKind::Atom: {
      ValueExpr l = rename_expr(f->lhs, rename_alias);
      ValueExpr r = rename_expr(f->rhs, rename_alias);
      if (l == f->lhs && r == f->rhs) return f;
      return make_atom(f->op, l, r, f->span);
    }
    default: {
      std::vector<Formula> kids;
      bool changed = false;
      for (const auto& c : f->children) {
        kids.push_back(rename_formula(c, rename_alias));
        changed |= kids.back() != c;
      }
      if (!changed) return f;
      auto n = std::make_shared<FormulaNode>(*f);
      n->children = std::move(kids);
      return n;
    }
  }
}

Formula node_at(const Formula& root, const NodePath& path) {
  Formula cur = root;
  for (int idx : path) {
    if (idx < 0 || idx >= static_cast<int>(cur->children.size()))
      throw std::out_of_range("bad node path");
    cur = cur->children[idx];
  }
  return cur;
}

Formula replace_at(const Formula& root, const NodePath& path, const Formula& replacement) {
  if (path.empty()) return replacement;
  std::vector<Formula> kids = root->children;
  NodePath rest(path.begin() + 1, path.end());
  kids[path[0]] = replace_at(kids[path[0]], rest, replacement);
  auto n = std::make_shared<FormulaNode>(*root);
  n->children = std::move(kids);
  return n;
}

bool paths_overlap(const NodePath& a, const NodePath& b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

static void all_paths_rec(const Formula& f, NodePath& cur, std::vector<NodePath>& out) {
  out.push_back(cur);
  for (int i = 0; i < static_cast<int>(f->children.size()); ++i) {
    cur.push_back(i);
    all_paths_rec(f->children[i], cur, out);
    cur.pop_back();
  }
}

std::vector<NodePath> all_node_paths(const Formula& root) {
  std::vector<NodePath> out;
  NodePath cur;
  all_paths_rec(root, cur, out);
  return out;
}

}  // namespace qrhint
