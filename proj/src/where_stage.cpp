#include "qrhint/where_stage.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace qrhint {

namespace {

bool path_in(const std::vector<NodePath>& sites, const NodePath& p) {
  return std::find(sites.begin(), sites.end(), p) != sites.end();
}

// sites that lie inside the subtree rooted at `prefix`
std::vector<NodePath> sites_under(const std::vector<NodePath>& sites, const NodePath& prefix) {
  std::vector<NodePath> out;
  for (const auto& s : sites) {
    if (s.size() < prefix.size()) continue;
    if (std::equal(prefix.begin(), prefix.end(), s.begin())) out.push_back(s);
  }
  return out;
}

Bound create_bounds_rec(const Formula& x, const NodePath& path,
                        const std::vector<NodePath>& sites,
                        std::map<NodePath, Bound>* record) {
  Bound b;
  if (path_in(sites, path)) {
    b = {make_false(), make_true()};
  } else if (x->kind == FKind::Atom || x->kind == FKind::True || x->kind == FKind::False) {
    b = {x, x};
  } else if (x->kind == FKind::Not) {
    NodePath cp = path;
    cp.push_back(0);
    Bound c = create_bounds_rec(x->children[0], cp, sites, record);
    b = {negate(c.upper), negate(c.lower)};
  } else {
    std::vector<Formula> lows, highs;
    for (int i = 0; i < static_cast<int>(x->children.size()); ++i) {
      NodePath cp = path;
      cp.push_back(i);
      Bound c = create_bounds_rec(x->children[i], cp, sites, record);
      lows.push_back(c.lower);
      highs.push_back(c.upper);
    }
    if (x->kind == FKind::And)
      b = {make_and(lows, {}, true), make_and(highs, {}, true)};
    else
      b = {make_or(lows, {}, true), make_or(highs, {}, true)};
  }
  if (record) (*record)[path] = b;
  return b;
}

}  // namespace

Bound create_bounds(const Formula& x, const std::vector<NodePath>& sites) {
  return create_bounds_rec(x, {}, sites, nullptr);
}

std::map<NodePath, Bound> create_bounds_all(const Formula& x,
                                            const std::vector<NodePath>& sites) {
  std::map<NodePath, Bound> rec;
  create_bounds_rec(x, {}, sites, &rec);
  return rec;
}

// ---------------------------------------------------------------------------
// MinFix
// ---------------------------------------------------------------------------

Formula min_fix(const Formula& lo, const Formula& hi, Solver& solver, const Context& ctx) {
  AtomMap am = map_atom_preds({lo, hi}, solver, ctx);
  BoolFunc g_l = am.to_func(lo);
  BoolFunc g_u = am.to_func(hi);
  PartialTruthTable t = build_truth_table(am, g_l, g_u, solver, ctx);
  Dnf d = min_bool_exp(t);
  return dnf_to_formula(d, am);
}

// ---------------------------------------------------------------------------
// DistributeFixes
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> tokens_of(const std::string& text) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : text) {
    if (isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      cur += static_cast<char>(tolower(static_cast<unsigned char>(c)));
    } else {
      if (!cur.empty()) toks.push_back(cur);
      cur.clear();
      if (!isspace(static_cast<unsigned char>(c))) toks.push_back(std::string(1, c));
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::map<std::string, int> ca, cb;
  for (const auto& t : a) ca[t]++;
  for (const auto& t : b) cb[t]++;
  int inter = 0, uni = 0;
  for (const auto& [t, n] : ca) {
    int m = cb.count(t) ? cb.at(t) : 0;
    inter += std::min(n, m);
    uni += std::max(n, m);
  }
  for (const auto& [t, n] : cb)
    if (!ca.count(t)) uni += n;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

Formula term_to_formula(const Term& t, const AtomMap& am, bool clause) {
  if (t.lits.empty()) return clause ? make_false() : make_true();
  std::vector<Formula> lits;
  for (auto [v, pos] : t.lits) lits.push_back(am.literal(v, pos));
  return clause ? make_or(std::move(lits)) : make_and(std::move(lits));
}

}  // namespace

std::vector<std::vector<Term>> distribute_fixes(const std::vector<Term>& clauses,
                                                const std::vector<Formula>& member_sites,
                                                const AtomMap& am) {
  std::vector<std::vector<Term>> out(member_sites.size());
  std::vector<std::vector<std::string>> site_tokens;
  for (const auto& s : member_sites) site_tokens.push_back(tokens_of(render_formula(s)));
  for (const auto& cl : clauses) {
    Formula cf = term_to_formula(cl, am, false);
    auto ct = tokens_of(render_formula(cf));
    size_t best = 0;
    double best_sim = -1;
    for (size_t i = 0; i < member_sites.size(); ++i) {
      double sim = token_jaccard(ct, site_tokens[i]);
      if (sim > best_sim + 1e-12) {
        best_sim = sim;
        best = i;
      }
    }
    out[best].push_back(cl);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DeriveFixes
// ---------------------------------------------------------------------------

namespace {

struct DeriveCtx {
  const std::vector<NodePath>& sites;
  Solver& solver;
  const Context& ctx;
  std::map<NodePath, Bound>* bounds_record = nullptr;
  std::vector<RepairFix>* fixes = nullptr;  // null when only bounds are wanted
};

void derive_rec(const Formula& x, const NodePath& path, const Formula& lo, const Formula& hi,
                DeriveCtx& dc) {
  if (dc.bounds_record) (*dc.bounds_record)[path] = {lo, hi};
  if (path_in(dc.sites, path)) {
    if (dc.fixes) {
      try {
        dc.fixes->push_back({path, min_fix(lo, hi, dc.solver, dc.ctx)});
      } catch (const InconsistentBound&) {
        throw BoundViolation{};
      }
    }
    return;
  }
  if (x->kind == FKind::Atom || x->kind == FKind::True || x->kind == FKind::False) return;
  if (x->kind == FKind::Not) {
    NodePath cp = path;
    cp.push_back(0);
    derive_rec(x->children[0], cp, negate(hi), negate(lo), dc);
    return;
  }

  bool is_and = x->kind == FKind::And;
  int n = static_cast<int>(x->children.size());
  std::vector<Bound> child_bounds(n);
  std::vector<NodePath> child_paths(n);
  std::vector<bool> is_site(n), has_sites(n);
  std::vector<int> merged;  // indices of direct-child sites
  for (int i = 0; i < n; ++i) {
    NodePath cp = path;
    cp.push_back(i);
    child_paths[i] = cp;
    auto under = sites_under(dc.sites, cp);
    has_sites[i] = !under.empty();
    is_site[i] = path_in(dc.sites, cp);
    child_bounds[i] = create_bounds_rec(x->children[i], cp, dc.sites, nullptr);
    if (is_site[i]) merged.push_back(i);
  }

  // members of C: every non-site child plus (when present) the merged site r
  struct Member {
    bool is_r;
    int child;  // valid when !is_r
    Bound bound;
  };
  std::vector<Member> members;
  for (int i = 0; i < n; ++i)
    if (!is_site[i]) members.push_back({false, i, child_bounds[i]});
  if (!merged.empty()) members.push_back({true, -1, {make_false(), make_true()}});

  for (size_t mi = 0; mi < members.size(); ++mi) {
    const Member& m = members[mi];
    if (!m.is_r && !has_sites[m.child] && !dc.bounds_record) continue;
    // combine bounds from all other members
    std::vector<Formula> other_lows, other_highs;
    for (size_t mj = 0; mj < members.size(); ++mj) {
      if (mj == mi) continue;
      other_lows.push_back(members[mj].bound.lower);
      other_highs.push_back(members[mj].bound.upper);
    }
    Formula lprime = is_and ? make_and(other_lows, {}, true) : make_or(other_lows, {}, true);
    Formula uprime = is_and ? make_and(other_highs, {}, true) : make_or(other_highs, {}, true);
    Formula clo, chi;
    if (is_and) {
      clo = lo;
      chi = make_and({m.bound.upper, make_or({hi, negate(uprime)}, {}, true)}, {}, true);
    } else {
      clo = make_or({m.bound.lower, make_and({lo, negate(lprime)}, {}, true)}, {}, true);
      chi = hi;
    }
    if (m.is_r) {
      if (dc.bounds_record)
        for (int idx : merged) (*dc.bounds_record)[child_paths[idx]] = {clo, chi};
      if (!dc.fixes) continue;
      try {
        if (merged.size() == 1) {
          dc.fixes->push_back({child_paths[merged[0]], min_fix(clo, chi, dc.solver, dc.ctx)});
        } else {
          // joint minimization: DNF under an Or parent, CNF under an And parent
          AtomMap am = map_atom_preds({clo, chi}, dc.solver, dc.ctx);
          PartialTruthTable t =
              build_truth_table(am, am.to_func(clo), am.to_func(chi), dc.solver, dc.ctx);
          std::vector<Formula> site_formulas;
          for (int idx : merged) site_formulas.push_back(x->children[idx]);
          if (is_and) {
            std::vector<Term> clauses = min_cnf(t);
            auto assign = distribute_fixes(clauses, site_formulas, am);
            for (size_t k = 0; k < merged.size(); ++k)
              dc.fixes->push_back(
                  {child_paths[merged[k]], cnf_to_formula(assign[k], am)});
          } else {
            Dnf d = min_bool_exp(t);
            auto assign = distribute_fixes(d.terms, site_formulas, am);
            for (size_t k = 0; k < merged.size(); ++k) {
              Dnf part;
              part.terms = assign[k];
              dc.fixes->push_back({child_paths[merged[k]], dnf_to_formula(part, am)});
            }
          }
        }
      } catch (const InconsistentBound&) {
        throw BoundViolation{};
      }
    } else {
      if (has_sites[m.child]) derive_rec(x->children[m.child], child_paths[m.child], clo, chi, dc);
    }
  }
}

}  // namespace

std::vector<RepairFix> derive_fixes(const Formula& x, const std::vector<NodePath>& sites,
                                    const Formula& lo, const Formula& hi, Solver& solver,
                                    const Context& ctx) {
  std::vector<RepairFix> fixes;
  DeriveCtx dc{sites, solver, ctx, nullptr, &fixes};
  derive_rec(x, {}, lo, hi, dc);
  // order fixes by site order
  std::vector<RepairFix> ordered;
  for (const auto& s : sites)
    for (auto& f : fixes)
      if (f.site == s) ordered.push_back(f);
  return ordered;
}

std::map<NodePath, Bound> derive_target_bounds(const Formula& x,
                                               const std::vector<NodePath>& sites,
                                               const Formula& lo, const Formula& hi) {
  std::map<NodePath, Bound> rec;
  // bounds-only pass needs no solver; use a dummy solver-less context
  static SolverOptions opts{BackendChoice::BuiltinOnly, "", 100};
  static Solver dummy(opts);
  static Context empty;
  DeriveCtx dc{sites, dummy, empty, &rec, nullptr};
  derive_rec(x, {}, lo, hi, dc);
  return rec;
}

// ---------------------------------------------------------------------------
// MinFixMult
// ---------------------------------------------------------------------------

FeasibilityMap init_feasibility(const BoolFunc& g_x, const PartialTruthTable& target,
                                int atom_vars, int site_vars) {
  FeasibilityMap f;
  f.atom_vars = atom_vars;
  f.site_vars = site_vars;
  size_t rows = size_t(1) << atom_vars;
  f.feasible.resize(rows);
  for (uint32_t v = 0; v < rows; ++v) {
    if (target.at(v) == TriState::DontCare) {
      f.feasible[v] = FeasibilityMap::kIrrelevant;
      continue;
    }
    bool want = target.at(v) == TriState::One;
    uint16_t mask = 0;
    for (uint32_t u = 0; u < (uint32_t(1) << site_vars); ++u)
      if (g_x.eval(v | (u << atom_vars)) == want) mask |= uint16_t(1) << u;
    f.feasible[v] = mask;
  }
  return f;
}

void update_feasibility(FeasibilityMap& feas, int site, const Dnf& chosen) {
  for (uint32_t v = 0; v < feas.feasible.size(); ++v) {
    if (feas.feasible[v] == FeasibilityMap::kIrrelevant) continue;
    bool val = chosen.eval(v);
    uint16_t mask = 0;
    for (uint32_t u = 0; u < (uint32_t(1) << feas.site_vars); ++u) {
      if (!(feas.feasible[v] & (uint16_t(1) << u))) continue;
      if ((((u >> site) & 1) != 0) == val) mask |= uint16_t(1) << u;
    }
    feas.feasible[v] = mask;
  }
}

std::pair<int, PartialTruthTable> pick_site(const FeasibilityMap& feas,
                                            const std::vector<int>& remaining) {
  double best_score = -1;
  int best = remaining.front();
  for (int i : remaining) {
    double score = 0;
    for (uint32_t v = 0; v < feas.feasible.size(); ++v) {
      uint16_t mask = feas.feasible[v];
      if (mask == FeasibilityMap::kIrrelevant) continue;
      int total = __builtin_popcount(mask);
      if (total == 0) continue;
      int ones = 0;
      for (uint32_t u = 0; u < (uint32_t(1) << feas.site_vars); ++u)
        if ((mask & (uint16_t(1) << u)) && ((u >> i) & 1)) ones++;
      double r = static_cast<double>(ones) / total;
      score += std::abs(r - 0.5);
    }
    if (score > best_score + 1e-12) {
      best_score = score;
      best = i;
    }
  }
  PartialTruthTable t;
  t.nvars = feas.atom_vars;
  t.rows.resize(feas.feasible.size());
  for (uint32_t v = 0; v < feas.feasible.size(); ++v) {
    uint16_t mask = feas.feasible[v];
    if (mask == FeasibilityMap::kIrrelevant) {
      t.rows[v] = TriState::DontCare;
      continue;
    }
    if (mask == 0) throw std::logic_error("InfeasibleRow: empty feasible set");
    bool has0 = false, has1 = false;
    for (uint32_t u = 0; u < (uint32_t(1) << feas.site_vars); ++u) {
      if (!(mask & (uint16_t(1) << u))) continue;
      (((u >> best) & 1) ? has1 : has0) = true;
    }
    t.rows[v] = has0 && has1 ? TriState::DontCare : (has1 ? TriState::One : TriState::Zero);
  }
  return {best, t};
}

namespace {

// non-site atoms of x in preorder, each as a single-atom formula
void collect_nonsite_atoms(const Formula& x, const NodePath& path,
                           const std::vector<NodePath>& sites, std::vector<Formula>& out) {
  if (path_in(sites, path)) return;
  if (x->kind == FKind::Atom) {
    out.push_back(x);
    return;
  }
  for (int i = 0; i < static_cast<int>(x->children.size()); ++i) {
    NodePath cp = path;
    cp.push_back(i);
    collect_nonsite_atoms(x->children[i], cp, sites, out);
  }
}

BoolFunc formula_with_site_vars(const Formula& x, const NodePath& path,
                                const std::vector<NodePath>& sites, const AtomMap& am,
                                int total_vars) {
  for (size_t i = 0; i < sites.size(); ++i)
    if (sites[i] == path) return BoolFunc::var(total_vars, am.nvars() + static_cast<int>(i));
  switch (x->kind) {
    case FKind::True: return BoolFunc(total_vars, true);
    case FKind::False: return BoolFunc(total_vars, false);
    case FKind::Atom: return am.to_func(x).widen(total_vars);
    case FKind::Not: {
      NodePath cp = path;
      cp.push_back(0);
      return ~formula_with_site_vars(x->children[0], cp, sites, am, total_vars);
    }
    case FKind::And:
    case FKind::Or: {
      BoolFunc acc(total_vars, x->kind == FKind::And);
      for (int i = 0; i < static_cast<int>(x->children.size()); ++i) {
        NodePath cp = path;
        cp.push_back(i);
        BoolFunc c = formula_with_site_vars(x->children[i], cp, sites, am, total_vars);
        acc = x->kind == FKind::And ? (acc & c) : (acc | c);
      }
      return acc;
    }
  }
  return BoolFunc(total_vars, false);
}

}  // namespace

std::vector<RepairFix> min_fix_mult(const Formula& x, const std::vector<NodePath>& sites,
                                    const Formula& lo, const Formula& hi, Solver& solver,
                                    const Context& ctx) {
  if (sites.size() == 1 && sites[0].empty())
    return {{sites[0], min_fix(lo, hi, solver, ctx)}};

  std::vector<Formula> inputs;
  collect_nonsite_atoms(x, {}, sites, inputs);
  inputs.push_back(lo);
  inputs.push_back(hi);
  AtomMap am = map_atom_preds(inputs, solver, ctx);
  PartialTruthTable target =
      build_truth_table(am, am.to_func(lo), am.to_func(hi), solver, ctx);
  int n = am.nvars();
  int k = static_cast<int>(sites.size());
  BoolFunc g_x = formula_with_site_vars(x, {}, sites, am, n + k);
  FeasibilityMap feas = init_feasibility(g_x, target, n, k);

  std::vector<RepairFix> fixes(sites.size());
  std::vector<int> remaining;
  for (int i = 0; i < k; ++i) remaining.push_back(i);
  while (!remaining.empty()) {
    auto [d, tbl] = pick_site(feas, remaining);
    Dnf g_d = min_bool_exp(tbl);
    fixes[d] = {sites[d], dnf_to_formula(g_d, am)};
    update_feasibility(feas, d, g_d);
    remaining.erase(std::remove(remaining.begin(), remaining.end(), d), remaining.end());
  }
  return fixes;
}

// ---------------------------------------------------------------------------
// Cost and application
// ---------------------------------------------------------------------------

Rat repair_cost(const std::vector<NodePath>& sites, const std::vector<RepairFix>& fixes,
                const Formula& p, const Formula& pstar, const CostParams& params) {
  Rat cost = params.w * Rat(BigInt(sites.size()));
  Rat denom = Rat(formula_size(p) + formula_size(pstar));
  for (const auto& f : fixes) {
    Formula site = node_at(p, f.site);
    cost += Rat(formula_size(site) + formula_size(f.fix)) / denom;
  }
  return cost;
}

Formula apply_repair(const Formula& p, const std::vector<RepairFix>& fixes) {
  Formula out = p;
  for (const auto& f : fixes) out = replace_at(out, f.site, f.fix);
  return out;
}

// ---------------------------------------------------------------------------
// RepairWhere
// ---------------------------------------------------------------------------

namespace {

// all antichains of the node set with the given size, lexicographic over
// preorder indices
void antichains(const std::vector<NodePath>& nodes, size_t size, size_t start,
                std::vector<NodePath>& cur, const std::function<bool()>& emit,
                bool& stop) {
  if (stop) return;
  if (cur.size() == size) {
    if (!emit()) stop = true;
    return;
  }
  for (size_t i = start; i < nodes.size() && !stop; ++i) {
    bool ok = true;
    for (const auto& c : cur)
      if (paths_overlap(c, nodes[i])) { ok = false; break; }
    if (!ok) continue;
    cur.push_back(nodes[i]);
    antichains(nodes, size, i + 1, cur, emit, stop);
    cur.pop_back();
  }
}

// push the root target bound down to the subtree at lca_path (all sites lie
// underneath); other branches contribute their exact formulas
std::pair<Formula, Formula> push_bound_to(const Formula& p, const NodePath& lca_path,
                                          const std::vector<NodePath>& sites,
                                          const Formula& root_lo, const Formula& root_hi) {
  Formula lo = root_lo, hi = root_hi;
  Formula node = p;
  NodePath cur;
  for (int step : lca_path) {
    if (node->kind == FKind::Not) {
      Formula t = negate(hi);
      hi = negate(lo);
      lo = t;
      node = node->children[0];
      cur.push_back(step);
      continue;
    }
    bool is_and = node->kind == FKind::And;
    // every site continues through `step`, so sibling branches are exact
    std::vector<Formula> other_lows, other_highs;
    for (int i = 0; i < static_cast<int>(node->children.size()); ++i) {
      if (i == step) continue;
      other_lows.push_back(node->children[i]);
      other_highs.push_back(node->children[i]);
    }
    NodePath cp = cur;
    cp.push_back(step);
    Bound cb = create_bounds_rec(node->children[step], cp, sites, nullptr);
    if (is_and) {
      Formula uprime = make_and(other_highs, {}, true);
      hi = make_and({cb.upper, make_or({hi, negate(uprime)}, {}, true)}, {}, true);
      // lo unchanged
    } else {
      Formula lprime = make_or(other_lows, {}, true);
      lo = make_or({cb.lower, make_and({lo, negate(lprime)}, {}, true)}, {}, true);
      // hi unchanged
    }
    node = node->children[step];
    cur.push_back(step);
  }
  return {lo, hi};
}

NodePath common_prefix(const std::vector<NodePath>& sites) {
  NodePath lca = sites[0];
  for (const auto& s : sites) {
    size_t n = std::min(lca.size(), s.size());
    size_t i = 0;
    while (i < n && lca[i] == s[i]) i++;
    lca.resize(i);
  }
  return lca;
}

}  // namespace

std::optional<Repair> repair_where(const Formula& p, const Formula& pstar,
                                   const CostParams& params, Solver& solver, const Context& ctx,
                                   RepairMode mode, RepairSearchStats* stats) {
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  if (solver.equiv(p, pstar, ctx) == Verdict::Yes) {
    Repair r;
    r.certified = true;
    if (stats) stats->total_ms = elapsed_ms();
    return r;
  }

  std::vector<NodePath> nodes = all_node_paths(p);
  std::optional<Repair> best;

  for (int size = 1; size <= params.max_sites; ++size) {
    if (best && params.w * Rat(size) >= best->cost) break;  // count term alone is too big
    std::vector<NodePath> cur;
    bool stop = false;
    auto emit = [&]() -> bool {
      if (stats) {
        stats->site_sets_considered++;
        if (stats->trace) stats->visited.push_back(cur);
      }
      Bound b = create_bounds(p, cur);
      bool viable = solver.unsat(make_and({b.lower, negate(pstar)}), ctx) == Verdict::Yes &&
                    solver.unsat(make_and({pstar, negate(b.upper)}), ctx) == Verdict::Yes;
      if (!viable) return true;
      if (stats) {
        stats->site_sets_viable++;
        if (stats->first_viable_ms < 0) stats->first_viable_ms = elapsed_ms();
      }
      std::vector<RepairFix> fixes;
      try {
        if (mode == RepairMode::Basic || cur.size() == 1) {
          fixes = derive_fixes(p, cur, pstar, pstar, solver, ctx);
        } else {
          NodePath lca = common_prefix(cur);
          auto [lo, hi] = push_bound_to(p, lca, cur, pstar, pstar);
          std::vector<NodePath> rel;
          for (const auto& s : cur) rel.emplace_back(s.begin() + lca.size(), s.end());
          fixes = min_fix_mult(node_at(p, lca), rel, lo, hi, solver, ctx);
          for (auto& f : fixes) {
            NodePath abs = lca;
            abs.insert(abs.end(), f.site.begin(), f.site.end());
            f.site = std::move(abs);
          }
        }
      } catch (const BoundViolation&) {
        return true;  // viability was certified, so this indicates unknowns; skip
      } catch (const std::logic_error&) {
        return true;
      }
      Rat cost = repair_cost(cur, fixes, p, pstar, params);
      if (best && cost >= best->cost) return true;
      // certify before accepting
      Formula applied = apply_repair(p, fixes);
      if (solver.equiv(applied, pstar, ctx) != Verdict::Yes) return true;
      Repair r;
      r.sites = cur;
      r.fixes = std::move(fixes);
      r.cost = cost;
      r.certified = true;
      best = std::move(r);
      return true;
    };
    antichains(nodes, static_cast<size_t>(size), 0, cur, emit, stop);
  }
  if (stats) stats->total_ms = elapsed_ms();
  return best;
}

}  // namespace qrhint
