#include "qrhint/solver.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

// Built-in decision procedure for the scalar fragment: DNF expansion, then
// per-conjunct feasibility via Gaussian elimination on equalities plus
// Fourier-Motzkin over rationals, with integer tightening and verified
// witnesses. String atoms go through equality classes with constant-pattern
// LIKE evaluation. Sound by construction: Sat only with a verified witness,
// Unsat only from an exact rational refutation.

namespace qrhint {

bool sql_like_match(const std::string& value, const std::string& pattern) {
  // classic two-pointer wildcard match; % = any sequence, _ = one char
  size_t v = 0, p = 0, star_v = std::string::npos, star_p = 0;
  while (v < value.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == value[v])) {
      ++v, ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_v = v;
    } else if (star_v != std::string::npos) {
      p = star_p + 1;
      v = ++star_v;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

namespace {

struct DnfTooBig {};
struct OutOfFragment {};

// ----------------------------- literals -----------------------------------

struct Literal {
  CmpOp op;
  ValueExpr lhs, rhs;
};

using Conjunct = std::vector<Literal>;

// NNF with ops pushed into atoms; numeric/bool Ne split into (< or >).
Formula nnf(const Formula& f, bool neg) {
  switch (f->kind) {
    case FKind::True: return neg ? make_false() : make_true();
    case FKind::False: return neg ? make_true() : make_false();
    case FKind::Atom: {
      CmpOp op = neg ? negate_op(f->op) : f->op;
      ColumnType lt = value_type(f->lhs);
      bool stringy = lt == ColumnType::String;
      if (op == CmpOp::Ne && !stringy) {
        return make_or({make_atom(CmpOp::Lt, f->lhs, f->rhs),
                        make_atom(CmpOp::Gt, f->lhs, f->rhs)});
      }
      return make_atom(op, f->lhs, f->rhs, f->span);
    }
    case FKind::Not:
      return nnf(f->children[0], !neg);
    case FKind::And:
    case FKind::Or: {
      bool is_and = (f->kind == FKind::And) != neg;
      std::vector<Formula> kids;
      for (const auto& c : f->children) kids.push_back(nnf(c, neg));
      return is_and ? make_and(std::move(kids)) : make_or(std::move(kids));
    }
  }
  return f;
}

constexpr size_t kDnfCap = 4096;

void dnf(const Formula& f, std::vector<Conjunct>& out) {
  switch (f->kind) {
    case FKind::True:
      out.push_back({});
      return;
    case FKind::False:
      return;
    case FKind::Atom:
      out.push_back({Literal{f->op, f->lhs, f->rhs}});
      return;
    case FKind::Or:
      for (const auto& c : f->children) {
        dnf(c, out);
        if (out.size() > kDnfCap) throw DnfTooBig{};
      }
      return;
    case FKind::And: {
      std::vector<Conjunct> acc{{}};
      for (const auto& c : f->children) {
        std::vector<Conjunct> part;
        dnf(c, part);
        std::vector<Conjunct> next;
        next.reserve(acc.size() * part.size());
        for (const auto& a : acc)
          for (const auto& p : part) {
            Conjunct merged = a;
            merged.insert(merged.end(), p.begin(), p.end());
            next.push_back(std::move(merged));
            if (next.size() > kDnfCap) throw DnfTooBig{};
          }
        acc = std::move(next);
        if (acc.empty()) return;  // a child was unsatisfiable constant
      }
      for (auto& a : acc) out.push_back(std::move(a));
      return;
    }
    case FKind::Not:
      throw std::logic_error("dnf: Not should have been removed by nnf");
  }
}

// ------------------------- linear arithmetic -------------------------------

using VarKey = std::pair<std::string, std::string>;  // (alias, column)

struct LinExpr {
  std::map<int, Rat> coeffs;  // var index -> coefficient
  Rat cst = Rat(0);
};

struct VarTable {
  std::vector<VarKey> keys;
  std::vector<ColumnType> types;
  std::map<VarKey, int> index;

  int intern(const VarKey& k, ColumnType t) {
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(keys.size());
    keys.push_back(k);
    types.push_back(t);
    index.emplace(k, id);
    return id;
  }
};

LinExpr lin_add(const LinExpr& a, const LinExpr& b, const Rat& scale_b) {
  LinExpr r = a;
  r.cst += b.cst * scale_b;
  for (const auto& [v, c] : b.coeffs) {
    Rat nc = r.coeffs.count(v) ? r.coeffs[v] + c * scale_b : c * scale_b;
    if (nc == Rat(0)) r.coeffs.erase(v);
    else r.coeffs[v] = nc;
  }
  return r;
}

std::optional<Rat> as_constant(const ValueExpr& e) {
  if (auto* i = std::get_if<IntLit>(&e->kind)) return Rat(i->value);
  if (auto* d = std::get_if<DecLit>(&e->kind)) return d->value;
  if (auto* n = std::get_if<Neg>(&e->kind)) {
    auto c = as_constant(n->arg);
    if (c) return -*c;
    return std::nullopt;
  }
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    auto l = as_constant(a->lhs), r = as_constant(a->rhs);
    if (!l || !r) return std::nullopt;
    switch (a->op) {
      case ArithOp::Add: return *l + *r;
      case ArithOp::Sub: return *l - *r;
      case ArithOp::Mul: return *l * *r;
      case ArithOp::Div:
        if (*r == Rat(0)) return std::nullopt;
        return *l / *r;
    }
  }
  return std::nullopt;
}

LinExpr linearize(const ValueExpr& e, VarTable& vars) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) {
    LinExpr r;
    if (c->type == ColumnType::String) throw OutOfFragment{};
    r.coeffs[vars.intern({c->alias, c->column}, c->type)] = Rat(1);
    return r;
  }
  if (auto* i = std::get_if<IntLit>(&e->kind)) return {.coeffs = {}, .cst = Rat(i->value)};
  if (auto* d = std::get_if<DecLit>(&e->kind)) return {.coeffs = {}, .cst = d->value};
  if (auto* b = std::get_if<BoolLit>(&e->kind)) return {.coeffs = {}, .cst = Rat(b->value ? 1 : 0)};
  if (auto* n = std::get_if<Neg>(&e->kind)) {
    LinExpr r;
    return lin_add(r, linearize(n->arg, vars), Rat(-1));
  }
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    switch (a->op) {
      case ArithOp::Add:
        return lin_add(linearize(a->lhs, vars), linearize(a->rhs, vars), Rat(1));
      case ArithOp::Sub:
        return lin_add(linearize(a->lhs, vars), linearize(a->rhs, vars), Rat(-1));
      case ArithOp::Mul: {
        auto lc = as_constant(a->lhs);
        auto rc = as_constant(a->rhs);
        if (lc) {
          LinExpr z;
          return lin_add(z, linearize(a->rhs, vars), *lc);
        }
        if (rc) {
          LinExpr z;
          return lin_add(z, linearize(a->lhs, vars), *rc);
        }
        throw OutOfFragment{};  // nonlinear product
      }
      case ArithOp::Div: {
        auto rc = as_constant(a->rhs);
        if (!rc || *rc == Rat(0)) throw OutOfFragment{};
        LinExpr z;
        return lin_add(z, linearize(a->lhs, vars), Rat(1) / *rc);
      }
    }
  }
  throw OutOfFragment{};  // aggregate or string literal in numeric position
}

// row: expr {>=,>} 0 or expr = 0
enum class RowKind { Ge, Gt, Eq };

struct Row {
  LinExpr e;
  RowKind kind;
};

bool row_all_int_vars(const Row& r, const VarTable& vars) {
  for (const auto& [v, c] : r.e.coeffs)
    if (vars.types[v] != ColumnType::Int && vars.types[v] != ColumnType::Bool) return false;
  return true;
}

// For all-integer-variable rows with integral coefficients: normalize by the
// gcd and round the constant so strict becomes non-strict.
void tighten_int_row(Row& r) {
  if (r.e.coeffs.empty()) return;
  BigInt lcm = 1;
  for (const auto& [v, c] : r.e.coeffs) {
    BigInt d = c.denominator();
    lcm = lcm / boost::multiprecision::gcd(lcm, d) * d;
  }
  // scale so variable coefficients are integers
  Rat scale{lcm, BigInt(1)};
  BigInt g = 0;
  for (auto& [v, c] : r.e.coeffs) {
    c *= scale;
    g = boost::multiprecision::gcd(g, c.numerator());
  }
  r.e.cst *= scale;
  if (g == 0) return;
  for (auto& [v, c] : r.e.coeffs) c /= Rat(g);
  r.e.cst /= Rat(g);
  // coeffs integral now; constant may be fractional
  // expr = sum(int coef * int var) + cst {>=,>,=} 0
  Rat k = -r.e.cst;  // sum >= k form
  switch (r.kind) {
    case RowKind::Ge:
      r.e.cst = -Rat(ceil_rat(k));
      break;
    case RowKind::Gt:
      r.e.cst = -Rat(floor_rat(k) + 1);
      r.kind = RowKind::Ge;
      break;
    case RowKind::Eq:
      break;  // handled by caller: fractional constant -> infeasible
  }
}

struct FmState {
  std::vector<Row> rows;
  // elimination record for sample reconstruction
  struct Elim {
    int var;
    std::vector<Row> lowers;  // rows where var coeff > 0: var >= ...
    std::vector<Row> uppers;  // var <= ...
    std::optional<Row> eq;    // equality used for substitution
  };
  std::vector<Elim> elims;
};

Rat eval_lin(const LinExpr& e, const std::map<int, Rat>& assign) {
  Rat r = e.cst;
  for (const auto& [v, c] : e.coeffs) {
    auto it = assign.find(v);
    r += c * (it == assign.end() ? Rat(0) : it->second);
  }
  return r;
}

// returns false on refutation
bool fm_run(FmState& st, const VarTable& vars) {
  // 1. equalities by substitution
  for (;;) {
    int eq_idx = -1;
    for (size_t i = 0; i < st.rows.size(); ++i)
      if (st.rows[i].kind == RowKind::Eq && !st.rows[i].e.coeffs.empty()) {
        eq_idx = static_cast<int>(i);
        break;
      }
    if (eq_idx < 0) break;
    Row eq = st.rows[eq_idx];
    st.rows.erase(st.rows.begin() + eq_idx);
    int var = eq.e.coeffs.begin()->first;
    Rat a = eq.e.coeffs.begin()->second;
    // var = -(rest + cst)/a
    LinExpr sub;  // expression for var
    sub.cst = -eq.e.cst / a;
    for (const auto& [v, c] : eq.e.coeffs)
      if (v != var) sub.coeffs[v] = -c / a;
    for (auto& r : st.rows) {
      auto it = r.e.coeffs.find(var);
      if (it == r.e.coeffs.end()) continue;
      Rat c = it->second;
      r.e.coeffs.erase(it);
      r.e = lin_add(r.e, sub, c);
    }
    FmState::Elim el;
    el.var = var;
    el.eq = eq;
    st.elims.push_back(el);
  }
  // constant equality rows
  for (auto& r : st.rows)
    if (r.kind == RowKind::Eq && r.e.coeffs.empty() && r.e.cst != Rat(0)) return false;
  st.rows.erase(std::remove_if(st.rows.begin(), st.rows.end(),
                               [](const Row& r) { return r.kind == RowKind::Eq; }),
                st.rows.end());

  // 2. Fourier-Motzkin on inequalities
  for (;;) {
    // check constant rows
    for (const auto& r : st.rows) {
      if (!r.e.coeffs.empty()) continue;
      if (r.kind == RowKind::Ge && r.e.cst < Rat(0)) return false;
      if (r.kind == RowKind::Gt && r.e.cst <= Rat(0)) return false;
    }
    // pick the variable with the fewest pair combinations
    std::map<int, std::pair<int, int>> occ;  // var -> (pos count, neg count)
    for (const auto& r : st.rows)
      for (const auto& [v, c] : r.e.coeffs) {
        if (c > Rat(0)) occ[v].first++;
        else occ[v].second++;
      }
    if (occ.empty()) break;
    int best = -1;
    long best_cost = -1;
    for (const auto& [v, pn] : occ) {
      long cost = static_cast<long>(pn.first) * pn.second;
      if (best < 0 || cost < best_cost || (cost == best_cost && v < best)) {
        best = v;
        best_cost = cost;
      }
    }
    int var = best;
    FmState::Elim el;
    el.var = var;
    std::vector<Row> rest;
    for (const auto& r : st.rows) {
      auto it = r.e.coeffs.find(var);
      if (it == r.e.coeffs.end()) {
        rest.push_back(r);
      } else if (it->second > Rat(0)) {
        el.lowers.push_back(r);  // a*var + rest >= 0, a>0  => var >= -(rest)/a
      } else {
        el.uppers.push_back(r);
      }
    }
    for (const auto& lo : el.lowers) {
      Rat a = lo.e.coeffs.at(var);
      for (const auto& up : el.uppers) {
        Rat b = -up.e.coeffs.at(var);  // b > 0
        // combine: b*lo + a*up eliminates var
        Row comb;
        comb.e = lin_add(LinExpr{}, lo.e, b);
        comb.e = lin_add(comb.e, up.e, a);
        comb.e.coeffs.erase(var);
        comb.kind = (lo.kind == RowKind::Gt || up.kind == RowKind::Gt) ? RowKind::Gt : RowKind::Ge;
        if (row_all_int_vars(comb, vars)) {
          tighten_int_row(comb);
        }
        rest.push_back(std::move(comb));
      }
    }
    st.rows = std::move(rest);
    st.elims.push_back(std::move(el));
    if (st.rows.size() > 20000) throw DnfTooBig{};
  }
  return true;
}

// Reconstructs a sample assignment after a successful fm_run.
std::map<int, Rat> fm_sample(const FmState& st, const VarTable& vars) {
  std::map<int, Rat> assign;
  for (auto it = st.elims.rbegin(); it != st.elims.rend(); ++it) {
    const auto& el = *it;
    if (el.eq) {
      // var = -(rest + cst)/a
      Rat a = el.eq->e.coeffs.at(el.var);
      LinExpr rest = el.eq->e;
      rest.coeffs.erase(el.var);
      assign[el.var] = -eval_lin(rest, assign) / a;
      continue;
    }
    // interval from lowers/uppers
    std::optional<Rat> lo, hi;
    bool lo_strict = false, hi_strict = false;
    for (const auto& r : el.lowers) {
      Rat a = r.e.coeffs.at(el.var);
      LinExpr rest = r.e;
      rest.coeffs.erase(el.var);
      Rat bound = -eval_lin(rest, assign) / a;
      bool strict = r.kind == RowKind::Gt;
      if (!lo || bound > *lo || (bound == *lo && strict)) {
        lo = bound;
        lo_strict = strict;
      }
    }
    for (const auto& r : el.uppers) {
      Rat a = r.e.coeffs.at(el.var);  // negative
      LinExpr rest = r.e;
      rest.coeffs.erase(el.var);
      Rat bound = -eval_lin(rest, assign) / a;
      bool strict = r.kind == RowKind::Gt;
      if (!hi || bound < *hi || (bound == *hi && strict)) {
        hi = bound;
        hi_strict = strict;
      }
    }
    bool is_int = vars.types[el.var] == ColumnType::Int || vars.types[el.var] == ColumnType::Bool;
    Rat v;
    if (!lo && !hi) {
      v = Rat(0);
    } else if (lo && !hi) {
      v = is_int ? Rat(lo_strict ? floor_rat(*lo) + 1 : ceil_rat(*lo)) : (lo_strict ? *lo + 1 : *lo);
    } else if (!lo && hi) {
      v = is_int ? Rat(hi_strict ? ceil_rat(*hi) - 1 : floor_rat(*hi)) : (hi_strict ? *hi - 1 : *hi);
    } else {
      if (is_int) {
        BigInt lo_i = lo_strict ? floor_rat(*lo) + 1 : ceil_rat(*lo);
        BigInt hi_i = hi_strict ? ceil_rat(*hi) - 1 : floor_rat(*hi);
        v = lo_i <= hi_i ? Rat(lo_i) : (*lo + *hi) / 2;  // fallback may fail verify
      } else {
        v = (*lo + *hi) / 2;
        if (!lo_strict && v < *lo) v = *lo;
      }
    }
    assign[el.var] = v;
  }
  return assign;
}

// ------------------------------ strings ------------------------------------

struct StringEngine {
  // union-find over string terms (column vars and constants)
  std::map<std::string, std::string> parent;  // term key -> parent key
  std::map<std::string, std::string> constant;  // root -> constant value
  std::vector<std::pair<std::string, std::string>> diseqs;
  std::vector<std::tuple<std::string, std::string, bool>> likes;  // (term, pattern, positive)
  bool out_of_fragment = false;

  static std::string key_of(const ValueExpr& e) {
    if (auto* c = std::get_if<ColumnRef>(&e->kind)) return "v:" + c->alias + "." + c->column;
    if (auto* s = std::get_if<StrLit>(&e->kind)) return "c:" + s->value;
    return "";
  }

  std::string find(const std::string& k) {
    auto it = parent.find(k);
    if (it == parent.end()) {
      parent[k] = k;
      if (k.rfind("c:", 0) == 0) constant[k] = k.substr(2);
      return k;
    }
    if (it->second == k) return k;
    std::string r = find(it->second);
    parent[k] = r;
    return r;
  }

  bool merge(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return true;
    auto ca = constant.find(ra);
    auto cb = constant.find(rb);
    if (ca != constant.end() && cb != constant.end() && ca->second != cb->second)
      return false;  // two distinct constants equated
    parent[ra] = rb;
    if (ca != constant.end() && cb == constant.end()) constant[rb] = ca->second;
    return true;
  }

  // Returns Sat with a verified assignment, Unsat, or Unknown.
  CheckResult solve() {
    if (out_of_fragment) return CheckResult::Unknown;
    for (const auto& [a, b] : diseqs)
      if (find(a) == find(b)) return CheckResult::Unsat;
    // evaluate LIKE on constant-bound classes
    bool any_unbound_like = false;
    for (const auto& [term, pat, pos] : likes) {
      std::string r = find(term);
      auto c = constant.find(r);
      if (c != constant.end()) {
        if (sql_like_match(c->second, pat) != pos) return CheckResult::Unsat;
      } else {
        any_unbound_like = true;
      }
    }
    // build a witness: constants stay; unbound classes get values
    std::map<std::string, std::string> value;
    for (auto& [k, p] : parent) find(k);
    std::set<std::string> roots;
    for (auto& [k, p] : parent) roots.insert(find(k));
    int fresh = 0;
    for (const auto& r : roots) {
      auto c = constant.find(r);
      if (c != constant.end()) {
        value[r] = c->second;
        continue;
      }
      // candidates: fresh strings plus LIKE pattern expansions
      std::vector<std::string> cands;
      for (const auto& [term, pat, pos] : likes) {
        if (find(term) != r || !pos) continue;
        for (const std::string& fill : {std::string(""), std::string("a"), std::string("zq"),
                                        std::string("0")}) {
          std::string cand;
          for (char ch : pat) {
            if (ch == '%') cand += fill;
            else if (ch == '_') cand += 'a';
            else cand += ch;
          }
          cands.push_back(cand);
        }
      }
      cands.push_back("\x01fresh" + std::to_string(fresh++));
      cands.push_back("\x01fresh" + std::to_string(fresh++));
      bool ok = false;
      for (const auto& cand : cands) {
        bool pass = true;
        for (const auto& [term, pat, pos] : likes) {
          if (find(term) != r) continue;
          if (sql_like_match(cand, pat) != pos) { pass = false; break; }
        }
        if (!pass) continue;
        // avoid clashing with other classes' chosen values under a diseq
        value[r] = cand;
        bool clash = false;
        for (const auto& [a, b] : diseqs) {
          std::string rb1 = find(a), rb2 = find(b);
          if (value.count(rb1) && value.count(rb2) && value[rb1] == value[rb2]) clash = true;
        }
        if (clash) { value.erase(r); continue; }
        ok = true;
        break;
      }
      if (!ok) {
        (void)any_unbound_like;
        return CheckResult::Unknown;  // could not construct a witness
      }
    }
    // final verification
    for (const auto& [a, b] : diseqs)
      if (value[find(a)] == value[find(b)]) return CheckResult::Unknown;
    for (const auto& [term, pat, pos] : likes)
      if (sql_like_match(value[find(term)], pat) != pos) return CheckResult::Unknown;
    return CheckResult::Sat;
  }
};

// --------------------------- conjunct check --------------------------------

std::optional<Rat> eval_value(const ValueExpr& e, const VarTable& vars,
                              const std::map<int, Rat>& assign) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) {
    auto it = vars.index.find({c->alias, c->column});
    if (it == vars.index.end()) return Rat(0);
    auto a = assign.find(it->second);
    return a == assign.end() ? Rat(0) : a->second;
  }
  if (auto* i = std::get_if<IntLit>(&e->kind)) return Rat(i->value);
  if (auto* d = std::get_if<DecLit>(&e->kind)) return d->value;
  if (auto* b = std::get_if<BoolLit>(&e->kind)) return Rat(b->value ? 1 : 0);
  if (auto* n = std::get_if<Neg>(&e->kind)) {
    auto v = eval_value(n->arg, vars, assign);
    return v ? std::optional<Rat>(-*v) : std::nullopt;
  }
  if (auto* a = std::get_if<Arith>(&e->kind)) {
    auto l = eval_value(a->lhs, vars, assign);
    auto r = eval_value(a->rhs, vars, assign);
    if (!l || !r) return std::nullopt;
    switch (a->op) {
      case ArithOp::Add: return *l + *r;
      case ArithOp::Sub: return *l - *r;
      case ArithOp::Mul: return *l * *r;
      case ArithOp::Div:
        if (*r == Rat(0)) return std::nullopt;
        return *l / *r;
    }
  }
  return std::nullopt;
}

bool verify_numeric_literal(const Literal& lit, const VarTable& vars,
                            const std::map<int, Rat>& assign) {
  auto l = eval_value(lit.lhs, vars, assign);
  auto r = eval_value(lit.rhs, vars, assign);
  if (!l || !r) return false;
  switch (lit.op) {
    case CmpOp::Eq: return *l == *r;
    case CmpOp::Ne: return *l != *r;
    case CmpOp::Lt: return *l < *r;
    case CmpOp::Le: return *l <= *r;
    case CmpOp::Gt: return *l > *r;
    case CmpOp::Ge: return *l >= *r;
    default: return false;
  }
}

CheckResult check_conjunct(const Conjunct& lits) {
  VarTable vars;
  FmState st;
  StringEngine strings;
  std::vector<Literal> numeric_lits;
  std::set<int> bool_vars;

  auto add_numeric = [&](const Literal& lit) {
    LinExpr l = linearize(lit.lhs, vars);
    LinExpr r = linearize(lit.rhs, vars);
    LinExpr d = lin_add(l, r, Rat(-1));  // lhs - rhs
    Row row;
    switch (lit.op) {
      case CmpOp::Eq: row = {d, RowKind::Eq}; break;
      case CmpOp::Ge: row = {d, RowKind::Ge}; break;
      case CmpOp::Gt: row = {d, RowKind::Gt}; break;
      case CmpOp::Le: row = {lin_add(LinExpr{}, d, Rat(-1)), RowKind::Ge}; break;
      case CmpOp::Lt: row = {lin_add(LinExpr{}, d, Rat(-1)), RowKind::Gt}; break;
      default: throw OutOfFragment{};
    }
    if (row_all_int_vars(row, vars) && !row.e.coeffs.empty()) {
      if (row.kind == RowKind::Eq) {
        // scale to integer coefficients; g must divide the constant
        BigInt lcm = row.e.cst.denominator();
        for (const auto& [v, c] : row.e.coeffs) {
          BigInt dnm = c.denominator();
          lcm = lcm / boost::multiprecision::gcd(lcm, dnm) * dnm;
        }
        BigInt g = 0;
        for (const auto& [v, c] : row.e.coeffs) g = boost::multiprecision::gcd(g, (c * Rat(lcm)).numerator());
        BigInt cst = (row.e.cst * Rat(lcm)).numerator();
        if (g != 0 && cst % g != 0) {
          row.e.coeffs.clear();
          row.e.cst = Rat(1);  // 0 = 1: infeasible marker
        }
      } else {
        tighten_int_row(row);
      }
    }
    st.rows.push_back(row);
    numeric_lits.push_back(lit);
    for (const auto& [v, c] : row.e.coeffs)
      if (vars.types[v] == ColumnType::Bool) bool_vars.insert(v);
  };

  try {
    for (const auto& lit : lits) {
      ColumnType lt = value_type(lit.lhs);
      if (lit.op == CmpOp::Like || lit.op == CmpOp::NotLike) {
        std::string term = StringEngine::key_of(lit.lhs);
        auto* pat = std::get_if<StrLit>(&lit.rhs->kind);
        if (term.empty() || !pat) return CheckResult::Unknown;
        strings.likes.emplace_back(term, pat->value, lit.op == CmpOp::Like);
        strings.find(term);
        continue;
      }
      if (lt == ColumnType::String) {
        std::string a = StringEngine::key_of(lit.lhs);
        std::string b = StringEngine::key_of(lit.rhs);
        if (a.empty() || b.empty()) return CheckResult::Unknown;
        if (lit.op == CmpOp::Eq) {
          if (!strings.merge(a, b)) return CheckResult::Unsat;
        } else if (lit.op == CmpOp::Ne) {
          strings.diseqs.emplace_back(a, b);
          strings.find(a);
          strings.find(b);
        } else {
          return CheckResult::Unknown;  // string ordering out of fragment
        }
        continue;
      }
      add_numeric(lit);
    }
    // bool vars are 0/1
    for (int v : bool_vars) {
      LinExpr e1;
      e1.coeffs[v] = Rat(1);
      st.rows.push_back({e1, RowKind::Ge});  // v >= 0
      LinExpr e2;
      e2.coeffs[v] = Rat(-1);
      e2.cst = Rat(1);
      st.rows.push_back({e2, RowKind::Ge});  // 1 - v >= 0
    }
  } catch (const OutOfFragment&) {
    return CheckResult::Unknown;
  }

  FmState run = st;
  bool feasible;
  try {
    feasible = fm_run(run, vars);
  } catch (const DnfTooBig&) {
    return CheckResult::Unknown;
  }
  if (!feasible) return CheckResult::Unsat;

  CheckResult string_res = strings.solve();
  if (string_res == CheckResult::Unsat) return CheckResult::Unsat;

  // numeric witness
  std::map<int, Rat> sample = fm_sample(run, vars);
  bool ok = true;
  for (size_t i = 0; i < numeric_lits.size() && ok; ++i)
    ok = verify_numeric_literal(numeric_lits[i], vars, sample);
  for (int v = 0; v < static_cast<int>(vars.keys.size()) && ok; ++v) {
    if (vars.types[v] == ColumnType::Int || vars.types[v] == ColumnType::Bool) {
      auto it = sample.find(v);
      if (it != sample.end() && !is_integer(it->second)) ok = false;
    }
  }
  if (!ok) return CheckResult::Unknown;
  if (string_res == CheckResult::Unknown) return CheckResult::Unknown;
  return CheckResult::Sat;
}

}  // namespace

CheckResult builtin_check(const Formula& f, const std::vector<Formula>& ground) {
  std::vector<Formula> parts = ground;
  parts.push_back(f);
  Formula whole = make_and(std::move(parts));
  if (formula_contains_aggregate(whole)) return CheckResult::Unknown;
  Formula n = nnf(whole, false);
  std::vector<Conjunct> conjs;
  try {
    dnf(n, conjs);
  } catch (const DnfTooBig&) {
    return CheckResult::Unknown;
  }
  if (conjs.empty()) return CheckResult::Unsat;
  bool any_unknown = false;
  for (const auto& c : conjs) {
    CheckResult r = check_conjunct(c);
    if (r == CheckResult::Sat) return CheckResult::Sat;
    if (r == CheckResult::Unknown) any_unknown = true;
  }
  return any_unknown ? CheckResult::Unknown : CheckResult::Unsat;
}

}  // namespace qrhint
