#include "qrhint/solver.hpp"
#include "qrhint/subprocess.hpp"

#include <atomic>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <sys/stat.h>

// SMT-LIB 2 emission and the external solver backend. Scalars are Int / Real /
// String / Bool constants; group collections are (Array Int <elem>) constants
// with aggregate functions declared uninterpreted per element sort. Aggregate
// inference rules are emitted as ground instances over the arrays present in
// the context (array-sort quantifiers push Z3 into incompleteness, ground
// instances keep the deductions available).

namespace qrhint {

Context Context::ground_facts(std::vector<Formula> facts) {
  static std::atomic<uint64_t> next_id{1};
  Context c;
  c.ground = std::move(facts);
  c.cache_id = next_id.fetch_add(1);
  return c;
}

std::optional<std::string> AggEnv::array_for_call(const ValueExpr& agg_call) const {
  for (const auto& [expr, arr] : agg_calls)
    if (expr_equal(expr, agg_call)) return arr;
  return std::nullopt;
}

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_')
      out += c;
    else {
      out += '_';
      out += std::to_string(static_cast<int>(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

std::string scalar_name(const std::string& alias, const std::string& column) {
  return "v_" + sanitize(alias) + "_" + sanitize(column);
}

std::string smt_string_literal(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

std::string smt_rat(const Rat& r, bool as_real) {
  if (!as_real) {
    // integer context
    BigInt n = r.numerator();
    if (n < 0) return "(- " + BigInt(-n).str() + ")";
    return n.str();
  }
  std::string num = r.numerator() < 0 ? BigInt(-r.numerator()).str() : r.numerator().str();
  std::string core = r.denominator() == 1 ? "(to_real " + num + ")"
                                          : "(/ " + num + ".0 " + r.denominator().str() + ".0)";
  if (r.numerator() < 0) return "(- " + core + ")";
  return core;
}

std::string like_to_regex(const std::string& pattern) {
  std::vector<std::string> parts;
  std::string lit;
  auto flush = [&] {
    if (!lit.empty()) {
      parts.push_back("(str.to_re " + smt_string_literal(lit) + ")");
      lit.clear();
    }
  };
  for (char c : pattern) {
    if (c == '%') { flush(); parts.push_back("re.all"); }
    else if (c == '_') { flush(); parts.push_back("re.allchar"); }
    else lit += c;
  }
  flush();
  if (parts.empty()) return "(str.to_re \"\")";
  if (parts.size() == 1) return parts[0];
  std::string out = "(re.++";
  for (const auto& p : parts) out += " " + p;
  return out + ")";
}

struct Declarations {
  std::set<std::pair<std::string, ColumnType>> scalars;  // name, type
  std::set<std::pair<std::string, ColumnType>> arrays;   // name, elem type
  std::set<std::pair<AggFn, ColumnType>> agg_fns;
};

std::string sort_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "Int";
    case ColumnType::Decimal: return "Real";
    case ColumnType::String: return "String";
    case ColumnType::Bool: return "Bool";
  }
  return "Int";
}

std::string agg_fn_smt_name(AggFn f, ColumnType elem) {
  std::string base = agg_fn_name(f);
  return base + (elem == ColumnType::Decimal ? "_r" : "_i");
}

ColumnType agg_result_type(AggFn f, ColumnType elem) {
  if (f == AggFn::Count) return ColumnType::Int;
  if (f == AggFn::Avg) return ColumnType::Decimal;
  return elem;
}

class Emitter {
 public:
  Emitter(const Context& ctx) : ctx_(ctx) {}

  // renders a scalar-position value expression; as_real requests Real typing
  std::string value(const ValueExpr& e, bool as_real, bool row_mode) {
    if (auto* c = std::get_if<ColumnRef>(&e->kind)) {
      std::pair<std::string, std::string> key{c->alias, c->column};
      bool is_array_col = false;
      std::string arr;
      if (ctx_.env && !ctx_.env->grouped_columns.count(key)) {
        auto it = ctx_.env->column_arrays.find(key);
        if (it != ctx_.env->column_arrays.end()) {
          is_array_col = true;
          arr = it->second;
        }
      }
      std::string term;
      if (is_array_col) {
        if (!row_mode)
          throw std::runtime_error("non-grouped column outside aggregate: " + c->alias + "." +
                                   c->column);
        decls.arrays.insert({arr, elem_type_of(*c)});
        term = "(select " + arr + " i)";
      } else {
        decls.scalars.insert({scalar_name(c->alias, c->column), c->type});
        term = scalar_name(c->alias, c->column);
      }
      if (as_real && c->type == ColumnType::Int) term = "(to_real " + term + ")";
      return term;
    }
    if (auto* i = std::get_if<IntLit>(&e->kind)) return smt_rat(Rat(i->value), as_real);
    if (auto* d = std::get_if<DecLit>(&e->kind)) return smt_rat(d->value, true);
    if (auto* s = std::get_if<StrLit>(&e->kind)) return smt_string_literal(s->value);
    if (auto* b = std::get_if<BoolLit>(&e->kind)) return b->value ? "true" : "false";
    if (auto* n = std::get_if<Neg>(&e->kind))
      return "(- " + value(n->arg, as_real, row_mode) + ")";
    if (auto* a = std::get_if<Arith>(&e->kind)) {
      bool real_here = as_real || value_type(e) == ColumnType::Decimal;
      std::string l = value(a->lhs, real_here, row_mode);
      std::string r = value(a->rhs, real_here, row_mode);
      const char* op = a->op == ArithOp::Add ? "+"
                       : a->op == ArithOp::Sub ? "-"
                       : a->op == ArithOp::Mul ? "*"
                                               : "/";
      return std::string("(") + op + " " + l + " " + r + ")";
    }
    const auto& g = std::get<AggCall>(e->kind);
    if (!ctx_.env) throw std::runtime_error("aggregate call without an aggregate context");
    auto arr = ctx_.env->array_for_call(e);
    if (!arr) throw std::runtime_error("unregistered aggregate call: " + render_expr(e));
    ColumnType elem = ctx_.env->array_types.count(*arr) ? ctx_.env->array_types.at(*arr)
                                                        : ColumnType::Int;
    decls.arrays.insert({*arr, elem});
    decls.agg_fns.insert({g.fn, elem});
    std::string term = "(" + agg_fn_smt_name(g.fn, elem) + " " + *arr + ")";
    if (as_real && agg_result_type(g.fn, elem) == ColumnType::Int) term = "(to_real " + term + ")";
    return term;
  }

  std::string atom(const Formula& f, bool row_mode) {
    ColumnType lt = value_type(f->lhs);
    if (f->op == CmpOp::Like || f->op == CmpOp::NotLike) {
      auto* pat = std::get_if<StrLit>(&f->rhs->kind);
      if (!pat) throw std::runtime_error("LIKE requires a constant pattern");
      std::string in = "(str.in_re " + value(f->lhs, false, row_mode) + " " +
                       like_to_regex(pat->value) + ")";
      return f->op == CmpOp::Like ? in : "(not " + in + ")";
    }
    bool numeric = lt == ColumnType::Int || lt == ColumnType::Decimal;
    bool as_real = numeric && (value_type(f->lhs) == ColumnType::Decimal ||
                               value_type(f->rhs) == ColumnType::Decimal);
    std::string l = value(f->lhs, as_real, row_mode);
    std::string r = value(f->rhs, as_real, row_mode);
    switch (f->op) {
      case CmpOp::Eq: return "(= " + l + " " + r + ")";
      case CmpOp::Ne: return "(not (= " + l + " " + r + "))";
      case CmpOp::Lt: return "(< " + l + " " + r + ")";
      case CmpOp::Le: return "(<= " + l + " " + r + ")";
      case CmpOp::Gt: return "(> " + l + " " + r + ")";
      case CmpOp::Ge: return "(>= " + l + " " + r + ")";
      default: throw std::runtime_error("bad op");
    }
  }

  std::string formula(const Formula& f, bool row_mode = false) {
    switch (f->kind) {
      case FKind::True: return "true";
      case FKind::False: return "false";
      case FKind::Atom: return atom(f, row_mode);
      case FKind::Not: return "(not " + formula(f->children[0], row_mode) + ")";
      case FKind::And:
      case FKind::Or: {
        std::string out = f->kind == FKind::And ? "(and" : "(or";
        for (const auto& c : f->children) out += " " + formula(c, row_mode);
        return out + ")";
      }
    }
    return "true";
  }

  ColumnType elem_type_of(const ColumnRef& c) const {
    if (ctx_.env) {
      auto it = ctx_.env->column_arrays.find({c.alias, c.column});
      if (it != ctx_.env->column_arrays.end() && ctx_.env->array_types.count(it->second))
        return ctx_.env->array_types.at(it->second);
    }
    return c.type == ColumnType::Decimal ? ColumnType::Decimal : ColumnType::Int;
  }

  Declarations decls;

 private:
  const Context& ctx_;
};

std::string axiom_smt(const AggAxiomInstance& ax, Emitter& em, Declarations& decls) {
  auto arr_elem = [&](const std::string& name) {
    ColumnType t = ColumnType::Int;
    for (const auto& [n, ty] : decls.arrays)
      if (n == name) t = ty;
    return t;
  };
  auto agg = [&](AggFn f, const std::string& arr) {
    ColumnType elem = arr_elem(arr);
    decls.agg_fns.insert({f, elem});
    return "(" + agg_fn_smt_name(f, elem) + " " + arr + ")";
  };
  auto sel = [](const std::string& a) { return "(select " + a + " i)"; };
  std::ostringstream os;
  switch (ax.kind) {
    case AggAxiomKind::SumAdd:
    case AggAxiomKind::AvgAdd:
    case AggAxiomKind::SumSub:
    case AggAxiomKind::AvgSub: {
      bool add = ax.kind == AggAxiomKind::SumAdd || ax.kind == AggAxiomKind::AvgAdd;
      bool is_sum = ax.kind == AggAxiomKind::SumAdd || ax.kind == AggAxiomKind::SumSub;
      AggFn f = is_sum ? AggFn::Sum : AggFn::Avg;
      os << "(assert (=> (forall ((i Int)) (= (" << (add ? "+" : "-") << " " << sel(ax.x) << " "
         << sel(ax.y) << ") " << sel(ax.z) << ")) (= (" << (add ? "+" : "-") << " "
         << agg(f, ax.x) << " " << agg(f, ax.y) << ") " << agg(f, ax.z) << ")))";
      return os.str();
    }
    case AggAxiomKind::SumMulC:
    case AggAxiomKind::AvgMulC: {
      AggFn f = ax.kind == AggAxiomKind::SumMulC ? AggFn::Sum : AggFn::Avg;
      bool elem_real = arr_elem(ax.x) == ColumnType::Decimal;
      std::string c_elem = smt_rat(ax.c, elem_real);
      std::string c_agg = smt_rat(ax.c, elem_real || f == AggFn::Avg);
      os << "(assert (=> (forall ((i Int)) (= (* " << sel(ax.x) << " " << c_elem << ") "
         << sel(ax.y) << ")) (= (* " << agg(f, ax.x) << " " << c_agg << ") " << agg(f, ax.y)
         << ")))";
      return os.str();
    }
    case AggAxiomKind::SumDivC:
    case AggAxiomKind::AvgDivC: {
      // division written multiplicatively: X[i] = Y[i]*c  =>  AGG(X) = AGG(Y)*c
      AggFn f = ax.kind == AggAxiomKind::SumDivC ? AggFn::Sum : AggFn::Avg;
      bool elem_real = arr_elem(ax.x) == ColumnType::Decimal;
      std::string c_elem = smt_rat(ax.c, elem_real);
      std::string c_agg = smt_rat(ax.c, elem_real || f == AggFn::Avg);
      os << "(assert (=> (forall ((i Int)) (= " << sel(ax.x) << " (* " << sel(ax.y) << " "
         << c_elem << "))) (= " << agg(f, ax.x) << " (* " << agg(f, ax.y) << " " << c_agg
         << "))))";
      return os.str();
    }
    case AggAxiomKind::OnesDef:
      os << "(assert (forall ((i Int)) (= " << sel(ax.x) << " 1)))";
      return os.str();
    case AggAxiomKind::CountOnes:
      os << "(assert (= " << agg(AggFn::Count, ax.x) << " " << agg(AggFn::Count, ax.y) << "))";
      return os.str();
    case AggAxiomKind::SumAvgCount: {
      // SUM(X) = AVG(X) * COUNT(Ones)
      ColumnType elem = arr_elem(ax.x);
      std::string sum = agg(AggFn::Sum, ax.x);
      if (elem != ColumnType::Decimal) sum = "(to_real " + sum + ")";
      os << "(assert (= " << sum << " (* " << agg(AggFn::Avg, ax.x) << " (to_real "
         << agg(AggFn::Count, ax.y) << "))))";
      return os.str();
    }
    case AggAxiomKind::MaxGe:
      os << "(assert (forall ((i Int)) (>= " << agg(AggFn::Max, ax.x) << " " << sel(ax.x)
         << ")))";
      return os.str();
    case AggAxiomKind::MinLe:
      os << "(assert (forall ((i Int)) (<= " << agg(AggFn::Min, ax.x) << " " << sel(ax.x)
         << ")))";
      return os.str();
  }
  return "";
}

}  // namespace

std::string emit_smt2(const Formula& payload, const Context& ctx, int timeout_ms) {
  Emitter em(ctx);
  // pre-register array element types
  if (ctx.env)
    for (const auto& [name, t] : ctx.env->array_types) em.decls.arrays.insert({name, t});

  std::vector<std::string> asserts;
  for (const auto& g : ctx.ground) asserts.push_back("(assert " + em.formula(g) + ")");
  if (ctx.env) {
    for (const auto& def : ctx.env->defs) {
      ColumnType elem = ctx.env->array_types.count(def.array)
                            ? ctx.env->array_types.at(def.array)
                            : ColumnType::Int;
      em.decls.arrays.insert({def.array, elem});
      std::string rhs = em.value(def.expr, elem == ColumnType::Decimal, /*row_mode=*/true);
      asserts.push_back("(assert (forall ((i Int)) (= (select " + def.array + " i) " + rhs +
                        ")))");
    }
  }
  for (const auto& rf : ctx.row_facts)
    asserts.push_back("(assert (forall ((i Int)) " + em.formula(rf.formula, true) + "))");
  for (const auto& ax : ctx.axioms) asserts.push_back(axiom_smt(ax, em, em.decls));
  asserts.push_back("(assert " + em.formula(payload) + ")");

  std::ostringstream os;
  os << "(set-option :timeout " << timeout_ms << ")\n";
  for (const auto& [name, t] : em.decls.scalars)
    os << "(declare-const " << name << " " << sort_name(t) << ")\n";
  for (const auto& [name, t] : em.decls.arrays)
    os << "(declare-const " << name << " (Array Int " << sort_name(t) << "))\n";
  for (const auto& [fn, elem] : em.decls.agg_fns) {
    ColumnType res = agg_result_type(fn, elem);
    os << "(declare-fun " << agg_fn_smt_name(fn, elem) << " ((Array Int " << sort_name(elem)
       << ")) " << sort_name(res) << ")\n";
  }
  for (const auto& a : asserts) os << a << "\n";
  os << "(check-sat)\n";
  return os.str();
}

// --------------------------- external process ------------------------------

class SmtProcess {
 public:
  explicit SmtProcess(std::string cmd) : cmd_(std::move(cmd)) {}

  CheckResult check(const std::string& smt2, int timeout_ms) {
    if (cmd_.empty()) return CheckResult::Unknown;
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (!proc_ || !proc_->running()) {
        proc_ = std::make_unique<PipeProcess>(cmd_);
        fresh_ = true;
        if (!proc_->running()) return CheckResult::Unknown;
      }
      std::string input;
      if (!fresh_) input += "(reset)\n";
      input += smt2;
      input += "(echo \"::done::\")\n";
      if (!proc_->write_all(input)) {
        proc_->kill_now();
        proc_.reset();
        continue;  // respawn once
      }
      fresh_ = false;
      // generous wall deadline: solver-side timeout plus startup slack
      int wall = timeout_ms + spawn_grace_ms_;
      auto out = proc_->read_until_line("::done::", wall);
      spawn_grace_ms_ = 4000;
      if (!out) {
        proc_->kill_now();
        proc_.reset();
        return CheckResult::Unknown;  // timed out or died
      }
      std::istringstream ss(*out);
      std::string line;
      CheckResult res = CheckResult::Unknown;
      bool saw = false;
      while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "sat") { res = CheckResult::Sat; saw = true; }
        else if (line == "unsat") { res = CheckResult::Unsat; saw = true; }
        else if (line == "unknown") { res = CheckResult::Unknown; saw = true; }
      }
      if (!saw) {
        // solver emitted an error; reset for the next query
        proc_->kill_now();
        proc_.reset();
        return CheckResult::Unknown;
      }
      return res;
    }
    return CheckResult::Unknown;
  }

  bool usable() const { return !cmd_.empty(); }
  const std::string& command() const { return cmd_; }

 private:
  std::string cmd_;
  std::unique_ptr<PipeProcess> proc_;
  bool fresh_ = true;
  int spawn_grace_ms_ = 15000;  // first call covers process/wasm startup
};

std::string resolve_default_external_cmd() {
  if (const char* env = getenv("QRHINT_SOLVER_CMD"); env && *env) return env;
  if (command_exists("z3")) return "z3 -in";
#ifdef QRHINT_TOOLS_DIR
  {
    std::string driver = std::string(QRHINT_TOOLS_DIR) + "/z3pipe.mjs";
    std::string modules = std::string(QRHINT_TOOLS_DIR) + "/node_modules/z3-solver";
    struct stat sb;
    if (command_exists("node") && stat(driver.c_str(), &sb) == 0 &&
        stat(modules.c_str(), &sb) == 0)
      return "node " + driver;
  }
#endif
  return "";
}

// ------------------------------- Solver ------------------------------------

Solver::Solver(SolverOptions opt) : opt_(opt) {
  if (opt_.backend != BackendChoice::BuiltinOnly) {
    resolved_cmd_ = !opt_.external_cmd.empty() ? opt_.external_cmd
                                               : resolve_default_external_cmd();
    proc_ = std::make_unique<SmtProcess>(resolved_cmd_);
  }
}

Solver::~Solver() = default;

bool Solver::external_available() const { return proc_ && proc_->usable(); }

std::string Solver::backend_description(const Context& ctx) const {
  bool needs_external = ctx.has_arrays();
  if (opt_.backend == BackendChoice::External && external_available())
    return "external:" + resolved_cmd_;
  if (needs_external)
    return external_available() ? "external:" + resolved_cmd_ : "builtin (arrays unsupported)";
  return "builtin";
}

CheckResult Solver::check_external(const Formula& f, const Context& ctx) {
  if (!external_available()) return CheckResult::Unknown;
  external_calls++;
  try {
    std::string smt2 = emit_smt2(f, ctx, opt_.timeout_ms);
    return proc_->check(smt2, opt_.timeout_ms);
  } catch (const std::exception&) {
    return CheckResult::Unknown;
  }
}

CheckResult Solver::check(const Formula& f, const Context& ctx) {
  std::string key = std::to_string(ctx.cache_id) + "|" + render_formula(f);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  CheckResult res;
  bool needs_external =
      ctx.has_arrays() || formula_contains_aggregate(f) || opt_.backend == BackendChoice::External;
  if (!needs_external) {
    builtin_calls++;
    res = builtin_check(f, ctx.ground);
    if (res == CheckResult::Unknown && opt_.backend == BackendChoice::Auto &&
        external_available())
      res = check_external(f, ctx);
  } else if (opt_.backend == BackendChoice::BuiltinOnly) {
    res = CheckResult::Unknown;  // arrays are routed to the external backend only
  } else {
    res = check_external(f, ctx);
  }
  cache_[key] = res;
  return res;
}

Verdict Solver::sat(const Formula& f, const Context& ctx) {
  switch (check(f, ctx)) {
    case CheckResult::Sat: return Verdict::Yes;
    case CheckResult::Unsat: return Verdict::No;
    default: return Verdict::Unknown;
  }
}

Verdict Solver::unsat(const Formula& f, const Context& ctx) {
  switch (check(f, ctx)) {
    case CheckResult::Unsat: return Verdict::Yes;
    case CheckResult::Sat: return Verdict::No;
    default: return Verdict::Unknown;
  }
}

Verdict Solver::equiv(const Formula& a, const Formula& b, const Context& ctx) {
  if (formula_equal(a, b)) return Verdict::Yes;
  Formula diff = make_or({make_and({a, negate(b)}), make_and({negate(a), b})});
  return unsat(diff, ctx);
}

Verdict Solver::equiv_expr(const ValueExpr& a, const ValueExpr& b, const Context& ctx) {
  if (expr_equal(a, b)) return Verdict::Yes;
  ColumnType ta = value_type(a), tb = value_type(b);
  bool num_a = ta == ColumnType::Int || ta == ColumnType::Decimal;
  bool num_b = tb == ColumnType::Int || tb == ColumnType::Decimal;
  if (ta != tb && !(num_a && num_b)) return Verdict::No;  // sort mismatch
  return unsat(make_atom(CmpOp::Ne, a, b), ctx);
}

}  // namespace qrhint
