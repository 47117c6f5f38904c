#include "qrhint/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "qrhint/solver.hpp"  // sql_like_match

namespace qrhint {

namespace {

Rat cell_number(const Cell& c) {
  if (auto* i = std::get_if<BigInt>(&c)) return Rat(*i);
  if (auto* r = std::get_if<Rat>(&c)) return *r;
  if (auto* b = std::get_if<bool>(&c)) return Rat(*b ? 1 : 0);
  throw EvalError("string used in numeric context");
}

// Environment mapping (alias, column) -> cell for one joined row.
struct RowEnv {
  const QueryIR* q;
  const SchemaCatalog* catalog;
  const std::vector<const Row*>* parts;  // one row per FROM table

  Cell lookup(const std::string& alias, const std::string& column) const {
    for (size_t t = 0; t < q->tables.size(); ++t) {
      if (q->tables[t].alias != alias) continue;
      const auto& cols = catalog->columns(q->tables[t].table);
      for (size_t c = 0; c < cols.size(); ++c)
        if (cols[c].name == column) return (*(*parts)[t])[c];
      break;
    }
    throw EvalError("unresolved column " + alias + "." + column);
  }
};

Cell eval_scalar(const ValueExpr& e, const RowEnv& env);

Rat eval_numeric(const ValueExpr& e, const RowEnv& env) { return cell_number(eval_scalar(e, env)); }

Cell eval_scalar(const ValueExpr& e, const RowEnv& env) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) return env.lookup(c->alias, c->column);
  if (auto* i = std::get_if<IntLit>(&e->kind)) return i->value;
  if (auto* d = std::get_if<DecLit>(&e->kind)) return d->value;
  if (auto* s = std::get_if<StrLit>(&e->kind)) return s->value;
  if (auto* b = std::get_if<BoolLit>(&e->kind)) return b->value;
  if (auto* n = std::get_if<Neg>(&e->kind)) return Rat(-eval_numeric(n->arg, env));
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    Rat l = eval_numeric(a->lhs, env);
    Rat r = eval_numeric(a->rhs, env);
    switch (a->op) {
      case ArithOp::Add: return l + r;
      case ArithOp::Sub: return l - r;
      case ArithOp::Mul: return l * r;
      case ArithOp::Div:
        if (r == Rat(0)) throw EvalError("division by zero");
        return l / r;
    }
  }
  throw EvalError("aggregate call in row context");
}

bool cells_equal(const Cell& a, const Cell& b) {
  bool a_num = std::holds_alternative<BigInt>(a) || std::holds_alternative<Rat>(a);
  bool b_num = std::holds_alternative<BigInt>(b) || std::holds_alternative<Rat>(b);
  if (a_num && b_num) return cell_number(a) == cell_number(b);
  if (a.index() != b.index()) return false;
  if (auto* s = std::get_if<std::string>(&a)) return *s == std::get<std::string>(b);
  if (auto* v = std::get_if<bool>(&a)) return *v == std::get<bool>(b);
  return false;
}

bool eval_atom(const Formula& f, const RowEnv& env) {
  if (f->op == CmpOp::Like || f->op == CmpOp::NotLike) {
    Cell l = eval_scalar(f->lhs, env);
    auto* val = std::get_if<std::string>(&l);
    auto* pat = std::get_if<StrLit>(&f->rhs->kind);
    if (!val || !pat) throw EvalError("LIKE over non-strings");
    bool m = sql_like_match(*val, pat->value);
    return f->op == CmpOp::Like ? m : !m;
  }
  Cell l = eval_scalar(f->lhs, env);
  Cell r = eval_scalar(f->rhs, env);
  bool l_num = std::holds_alternative<BigInt>(l) || std::holds_alternative<Rat>(l) ||
               std::holds_alternative<bool>(l);
  if (f->op == CmpOp::Eq) return cells_equal(l, r);
  if (f->op == CmpOp::Ne) return !cells_equal(l, r);
  if (!l_num) {
    throw EvalError("ordering comparison over strings");
  }
  Rat a = cell_number(l), b = cell_number(r);
  switch (f->op) {
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    default: return false;
  }
}

bool eval_formula(const Formula& f, const RowEnv& env) {
  switch (f->kind) {
    case FKind::True: return true;
    case FKind::False: return false;
    case FKind::Atom: return eval_atom(f, env);
    case FKind::Not: return !eval_formula(f->children[0], env);
    case FKind::And:
      for (const auto& c : f->children)
        if (!eval_formula(c, env)) return false;
      return true;
    case FKind::Or:
      for (const auto& c : f->children)
        if (eval_formula(c, env)) return true;
      return false;
  }
  return false;
}

// Group-scope evaluation: aggregates over the group's rows; bare columns from
// the representative row (frontend guarantees they are grouped).
struct GroupEnv {
  const std::vector<RowEnv>* rows;

  Cell eval(const ValueExpr& e) const {
    if (auto* g = std::get_if<AggCall>(&e->kind)) {
      size_t n = rows->size();
      if (g->fn == AggFn::Count) return BigInt(n);
      if (n == 0) throw EvalError("aggregate over empty group");
      std::vector<Rat> vals;
      vals.reserve(n);
      for (const auto& env : *rows) vals.push_back(eval_numeric(g->arg, env));
      switch (g->fn) {
        case AggFn::Sum: {
          Rat s(0);
          for (const auto& v : vals) s += v;
          return s;
        }
        case AggFn::Avg: {
          Rat s(0);
          for (const auto& v : vals) s += v;
          return s / Rat(BigInt(n));
        }
        case AggFn::Min: return *std::min_element(vals.begin(), vals.end());
        case AggFn::Max: return *std::max_element(vals.begin(), vals.end());
        default: break;
      }
    }
    if (auto* c = std::get_if<ColumnRef>(&e->kind)) return rows->front().lookup(c->alias, c->column);
    if (auto* i = std::get_if<IntLit>(&e->kind)) return i->value;
    if (auto* d = std::get_if<DecLit>(&e->kind)) return d->value;
    if (auto* s = std::get_if<StrLit>(&e->kind)) return s->value;
    if (auto* b = std::get_if<BoolLit>(&e->kind)) return b->value;
    if (auto* ng = std::get_if<Neg>(&e->kind)) return Rat(-cell_number(eval(ng->arg)));
    if (auto* a = std::get_if<Arith>(&e->kind)) {
      Rat l = cell_number(eval(a->lhs));
      Rat r = cell_number(eval(a->rhs));
      switch (a->op) {
        case ArithOp::Add: return l + r;
        case ArithOp::Sub: return l - r;
        case ArithOp::Mul: return l * r;
        case ArithOp::Div:
          if (r == Rat(0)) throw EvalError("division by zero");
          return l / r;
      }
    }
    throw EvalError("bad group expression");
  }

  bool eval_having(const Formula& f) const {
    switch (f->kind) {
      case FKind::True: return true;
      case FKind::False: return false;
      case FKind::Not: return !eval_having(f->children[0]);
      case FKind::And:
        for (const auto& c : f->children)
          if (!eval_having(c)) return false;
        return true;
      case FKind::Or:
        for (const auto& c : f->children)
          if (eval_having(c)) return true;
        return false;
      case FKind::Atom: {
        Cell l = eval(f->lhs);
        if (f->op == CmpOp::Like || f->op == CmpOp::NotLike) {
          auto* val = std::get_if<std::string>(&l);
          auto* pat = std::get_if<StrLit>(&f->rhs->kind);
          if (!val || !pat) throw EvalError("LIKE over non-strings");
          bool m = sql_like_match(*val, pat->value);
          return f->op == CmpOp::Like ? m : !m;
        }
        Cell r = eval(f->rhs);
        if (f->op == CmpOp::Eq) return cells_equal(l, r);
        if (f->op == CmpOp::Ne) return !cells_equal(l, r);
        Rat a = cell_number(l), b = cell_number(r);
        switch (f->op) {
          case CmpOp::Lt: return a < b;
          case CmpOp::Le: return a <= b;
          case CmpOp::Gt: return a > b;
          case CmpOp::Ge: return a >= b;
          default: return false;
        }
      }
    }
    return false;
  }
};

std::string cell_to_string(const Cell& c) {
  if (auto* i = std::get_if<BigInt>(&c)) return "i:" + i->str();
  if (auto* r = std::get_if<Rat>(&c)) {
    // normalize integral rationals so SUM(int) compares equal to an int column
    if (r->denominator() == 1) return "i:" + r->numerator().str();
    return "r:" + r->numerator().str() + "/" + r->denominator().str();
  }
  if (auto* s = std::get_if<std::string>(&c)) return "s:" + *s;
  return "b:" + std::string(std::get<bool>(c) ? "1" : "0");
}

}  // namespace

std::string row_to_string(const Row& r) {
  std::string out;
  for (const auto& c : r) {
    out += cell_to_string(c);
    out += '|';
  }
  return out;
}

bool bags_equal(const std::vector<Row>& a, const std::vector<Row>& b) {
  if (a.size() != b.size()) return false;
  std::vector<std::string> sa, sb;
  for (const auto& r : a) sa.push_back(row_to_string(r));
  for (const auto& r : b) sb.push_back(row_to_string(r));
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sa == sb;
}

EvalResult evaluate(const QueryIR& q, const DbInstance& db, const SchemaCatalog& catalog) {
  // cross product of FROM tables
  std::vector<const std::vector<Row>*> sources;
  for (const auto& t : q.tables) {
    auto it = db.tables.find(t.table);
    static const std::vector<Row> kEmpty;
    sources.push_back(it == db.tables.end() ? &kEmpty : &it->second);
  }
  std::vector<std::vector<const Row*>> joined;
  std::vector<const Row*> cur(q.tables.size(), nullptr);
  std::function<void(size_t)> rec = [&](size_t t) {
    if (t == sources.size()) {
      joined.push_back(cur);
      return;
    }
    for (const auto& row : *sources[t]) {
      cur[t] = &row;
      rec(t + 1);
    }
  };
  rec(0);

  // WHERE filter
  std::vector<std::vector<const Row*>> filtered;
  for (auto& parts : joined) {
    RowEnv env{&q, &catalog, &parts};
    if (eval_formula(q.where, env)) filtered.push_back(parts);
  }

  EvalResult res;
  if (q.kind == QueryKind::SPJ) {
    for (auto& parts : filtered) {
      RowEnv env{&q, &catalog, &parts};
      Row out;
      for (const auto& s : q.select) out.push_back(eval_scalar(s.expr, env));
      res.rows.push_back(std::move(out));
    }
    return res;
  }

  // group
  std::map<std::string, std::vector<std::vector<const Row*>>> groups;
  for (auto& parts : filtered) {
    RowEnv env{&q, &catalog, &parts};
    std::string key;
    for (const auto& g : q.group_by) key += cell_to_string(eval_scalar(g, env)) + "|";
    groups[key].push_back(parts);
  }

  for (auto& [key, members] : groups) {
    std::vector<RowEnv> envs;
    envs.reserve(members.size());
    for (auto& parts : members) envs.push_back(RowEnv{&q, &catalog, &parts});
    GroupEnv genv{&envs};
    if (!genv.eval_having(q.having)) continue;
    Row out;
    for (const auto& s : q.select) out.push_back(genv.eval(s.expr));
    if (q.distinct) {
      res.rows.push_back(std::move(out));  // one row per group = DISTINCT
    } else {
      res.rows.push_back(std::move(out));
    }
    std::vector<std::string> part;
    for (auto& parts : members) {
      std::string rs;
      for (const auto* r : parts) rs += row_to_string(*r) + "/";
      part.push_back(rs);
    }
    std::sort(part.begin(), part.end());
    res.partition.push_back(std::move(part));
  }
  std::sort(res.partition.begin(), res.partition.end());
  return res;
}

static void domain_values(const QueryIR& q, std::set<BigInt>& ints, std::set<Rat>& decs,
                          std::set<std::string>& strs) {
  std::function<void(const ValueExpr&)> walk_e = [&](const ValueExpr& e) {
    if (auto* i = std::get_if<IntLit>(&e->kind)) {
      ints.insert(i->value);
      ints.insert(i->value + 1);
      ints.insert(i->value - 1);
    } else if (auto* d = std::get_if<DecLit>(&e->kind)) {
      decs.insert(d->value);
      decs.insert(d->value + Rat(1));
      decs.insert(d->value - Rat(1));
    } else if (auto* s = std::get_if<StrLit>(&e->kind)) {
      strs.insert(s->value);
      if (!s->value.empty()) {
        // a LIKE-pattern-shaped literal also seeds a matching concrete value
        std::string concrete;
        for (char c : s->value) {
          if (c == '%') continue;
          concrete += c == '_' ? 'x' : c;
        }
        strs.insert(concrete);
      }
    } else if (auto* n = std::get_if<Neg>(&e->kind)) {
      walk_e(n->arg);
    } else if (auto* a = std::get_if<Arith>(&e->kind)) {
      walk_e(a->lhs);
      walk_e(a->rhs);
    } else if (auto* g = std::get_if<AggCall>(&e->kind)) {
      if (g->arg) walk_e(g->arg);
    }
  };
  std::function<void(const Formula&)> walk_f = [&](const Formula& f) {
    if (f->kind == FKind::Atom) {
      walk_e(f->lhs);
      walk_e(f->rhs);
      return;
    }
    for (const auto& c : f->children) walk_f(c);
  };
  walk_f(q.where);
  walk_f(q.having);
  for (const auto& g : q.group_by) walk_e(g);
  for (const auto& s : q.select) walk_e(s.expr);
}

DbInstance generate_instance(const SchemaCatalog& catalog,
                             const std::vector<const QueryIR*>& queries, uint64_t seed,
                             const InstanceGenOptions& opt) {
  std::set<BigInt> ints;
  std::set<Rat> decs;
  std::set<std::string> strs;
  for (const auto* q : queries) domain_values(*q, ints, decs, strs);
  // two fresh values per domain
  BigInt mx = ints.empty() ? BigInt(0) : *ints.rbegin();
  ints.insert(mx + 7);
  ints.insert(BigInt(0));
  ints.insert(BigInt(1));
  decs.insert(Rat(0));
  decs.insert(Rat(3, 2));
  strs.insert("zz1");
  strs.insert("zz2");

  std::vector<BigInt> int_pool(ints.begin(), ints.end());
  std::vector<Rat> dec_pool(decs.begin(), decs.end());
  std::vector<std::string> str_pool(strs.begin(), strs.end());

  std::mt19937_64 rng(seed);
  DbInstance db;
  std::set<std::string> needed;
  for (const auto* q : queries)
    for (const auto& t : q->tables) needed.insert(t.table);
  for (const auto& tname : needed) {
    const auto& cols = catalog.columns(tname);
    int rows = static_cast<int>(rng() % (opt.max_rows + 1));
    std::vector<Row> bag;
    for (int r = 0; r < rows; ++r) {
      Row row;
      for (const auto& c : cols) {
        switch (c.type) {
          case ColumnType::Int: row.emplace_back(int_pool[rng() % int_pool.size()]); break;
          case ColumnType::Decimal: row.emplace_back(dec_pool[rng() % dec_pool.size()]); break;
          case ColumnType::String: row.emplace_back(str_pool[rng() % str_pool.size()]); break;
          case ColumnType::Bool: row.emplace_back(rng() % 2 == 0); break;
        }
      }
      bag.push_back(std::move(row));
    }
    db.tables[tname] = std::move(bag);
  }
  return db;
}

EmpiricalVerdict check_equiv_empirical(const QueryIR& q, const QueryIR& qstar,
                                       const SchemaCatalog& catalog, uint64_t seed,
                                       int n_instances) {
  for (int i = 0; i < n_instances; ++i) {
    DbInstance db = generate_instance(catalog, {&q, &qstar}, seed + i);
    EvalResult a = evaluate(q, db, catalog);
    EvalResult b = evaluate(qstar, db, catalog);
    if (!bags_equal(a.rows, b.rows))
      return {false, db, "result bags differ on instance " + std::to_string(i)};
  }
  return {true, std::nullopt, ""};
}

std::string DbInstance::to_json() const {
  nlohmann::json j;
  for (const auto& [t, rows] : tables) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json jr = nlohmann::json::array();
      for (const auto& c : r) {
        if (auto* i = std::get_if<BigInt>(&c)) jr.push_back(i->str());
        else if (auto* q = std::get_if<Rat>(&c)) jr.push_back(rat_to_string(*q));
        else if (auto* s = std::get_if<std::string>(&c)) jr.push_back(*s);
        else jr.push_back(std::get<bool>(c));
      }
      arr.push_back(jr);
    }
    j[t] = arr;
  }
  return j.dump();
}

}  // namespace qrhint
