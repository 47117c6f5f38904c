#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qrhint/catalog.hpp"
#include "qrhint/rat.hpp"

namespace qrhint {

/// Half-open byte range into the original query text. {0,0} marks
/// synthesized nodes with no source location.
struct SrcSpan {
  uint32_t begin = 0;
  uint32_t end = 0;
  bool valid() const { return end > begin; }
};

// ---------------------------------------------------------------------------
// Value expressions
// ---------------------------------------------------------------------------

enum class AggFn { Sum, Avg, Count, Min, Max };

std::string agg_fn_name(AggFn f);

struct ValueExprNode;
using ValueExpr = std::shared_ptr<const ValueExprNode>;

struct ColumnRef {
  std::string alias;   // lower-cased; resolved table alias
  std::string column;  // lower-cased
  ColumnType type = ColumnType::Int;
};

struct IntLit { BigInt value; };
struct DecLit { Rat value; };
struct StrLit { std::string value; };
struct BoolLit { bool value; };
struct Neg { ValueExpr arg; };

enum class ArithOp { Add, Sub, Mul, Div };

struct Arith {
  ArithOp op;
  ValueExpr lhs, rhs;
};

/// Aggregate call; arg is empty for COUNT(*).
struct AggCall {
  AggFn fn;
  ValueExpr arg;  // null for COUNT(*)
};

struct ValueExprNode {
  std::variant<ColumnRef, IntLit, DecLit, StrLit, BoolLit, Neg, Arith, AggCall> kind;
  SrcSpan span;
};

ValueExpr make_column(std::string alias, std::string column, ColumnType type, SrcSpan sp = {});
ValueExpr make_int(BigInt v, SrcSpan sp = {});
ValueExpr make_dec(Rat v, SrcSpan sp = {});
ValueExpr make_str(std::string v, SrcSpan sp = {});
ValueExpr make_bool(bool v, SrcSpan sp = {});
ValueExpr make_neg(ValueExpr e, SrcSpan sp = {});
ValueExpr make_arith(ArithOp op, ValueExpr l, ValueExpr r, SrcSpan sp = {});
ValueExpr make_agg(AggFn fn, ValueExpr arg, SrcSpan sp = {});

ColumnType value_type(const ValueExpr& e);
bool contains_aggregate(const ValueExpr& e);
void collect_columns(const ValueExpr& e, std::vector<ColumnRef>& out);
void collect_aggregates(const ValueExpr& e, std::vector<ValueExpr>& out);

/// Structural equality modulo spans.
bool expr_equal(const ValueExpr& a, const ValueExpr& b);

std::string render_expr(const ValueExpr& e);

/// Rewrites alias names (table mapping application / variable renaming).
ValueExpr rename_expr(const ValueExpr& e, const std::function<std::string(const std::string&)>& f);

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, Like, NotLike };

std::string cmp_op_name(CmpOp op);
CmpOp negate_op(CmpOp op);
CmpOp flip_op(CmpOp op);  // mirror for swapped operands

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

enum class FKind { True, False, Atom, Not, And, Or };

struct FormulaNode {
  FKind kind;
  // Atom payload
  CmpOp op = CmpOp::Eq;
  ValueExpr lhs, rhs;
  // Children for Not/And/Or
  std::vector<Formula> children;
  SrcSpan span;
};

Formula make_true();
Formula make_false();
Formula make_atom(CmpOp op, ValueExpr lhs, ValueExpr rhs, SrcSpan sp = {});
Formula make_not(Formula f, SrcSpan sp = {});
/// And/Or with constant folding and single-child collapse; flatten merges
/// nested nodes of the same kind (used where the paper's n-ary trees are
/// expected).
Formula make_and(std::vector<Formula> children, SrcSpan sp = {}, bool flatten = false);
Formula make_or(std::vector<Formula> children, SrcSpan sp = {}, bool flatten = false);

/// Negation that prefers complementing the comparison operator over
/// wrapping in a Not node.
Formula negate(const Formula& f);

/// Node count: each operator node and each atom counts 1.
int formula_size(const Formula& f);

bool formula_equal(const Formula& a, const Formula& b);
bool formula_is_const(const Formula& f, bool value);

std::string render_formula(const Formula& f);

void collect_atoms(const Formula& f, std::vector<Formula>& out);
void collect_formula_columns(const Formula& f, std::vector<ColumnRef>& out);
bool formula_contains_aggregate(const Formula& f);

Formula rename_formula(const Formula& f,
                       const std::function<std::string(const std::string&)>& rename_alias);

// ---------------------------------------------------------------------------
// Tree paths
// ---------------------------------------------------------------------------

/// Path from the root of a formula: sequence of child indices.
using NodePath = std::vector<int>;

Formula node_at(const Formula& root, const NodePath& path);
Formula replace_at(const Formula& root, const NodePath& path, const Formula& replacement);
/// true when a is an ancestor of b or vice versa (or equal).
bool paths_overlap(const NodePath& a, const NodePath& b);
/// Preorder listing of all node paths.
std::vector<NodePath> all_node_paths(const Formula& root);

}  // namespace qrhint
