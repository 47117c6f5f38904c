#include "qrhint/from_stage.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace qrhint {

FromDiff check_from(const QueryIR& q, const QueryIR& qstar) {
  FromDiff diff;
  auto qc = q.table_counts();
  auto sc = qstar.table_counts();
  for (const auto& [t, n] : sc)
    if (n != (qc.count(t) ? qc.at(t) : 0)) diff[t] = n - (qc.count(t) ? qc.at(t) : 0);
  for (const auto& [t, n] : qc)
    if (!sc.count(t)) diff[t] = -n;
  return diff;
}

namespace {

// union-find over column refs and constants from top-level = conjuncts
struct EqClasses {
  std::map<std::string, std::string> parent;

  std::string find(const std::string& k) {
    auto it = parent.find(k);
    if (it == parent.end()) { parent[k] = k; return k; }
    if (it->second == k) return k;
    std::string r = find(it->second);
    parent[k] = r;
    return r;
  }

  void merge(const std::string& a, const std::string& b) { parent[find(a)] = find(b); }

  std::vector<std::string> members(const std::string& k) {
    std::string r = find(k);
    std::vector<std::string> out;
    for (const auto& [m, p] : parent)
      if (find(m) == r) out.push_back(m);
    return out;
  }
};

std::string term_key(const ValueExpr& e) {
  if (auto* c = std::get_if<ColumnRef>(&e->kind)) return "col:" + c->alias + "." + c->column;
  if (auto* i = std::get_if<IntLit>(&e->kind)) return "const:" + i->value.str();
  if (auto* d = std::get_if<DecLit>(&e->kind)) return "const:" + rat_to_string(d->value);
  if (auto* s = std::get_if<StrLit>(&e->kind)) return "const:'" + s->value + "'";
  if (auto* b = std::get_if<BoolLit>(&e->kind)) return std::string("const:") + (b->value ? "T" : "F");
  return "";
}

void top_level_conjuncts(const Formula& f, std::vector<Formula>& out) {
  if (f->kind == FKind::And) {
    for (const auto& c : f->children) top_level_conjuncts(c, out);
  } else {
    out.push_back(f);
  }
}

EqClasses equality_classes(const QueryIR& q) {
  EqClasses eq;
  std::vector<Formula> conjs;
  top_level_conjuncts(q.where, conjs);
  top_level_conjuncts(q.having, conjs);
  for (const auto& c : conjs) {
    if (c->kind != FKind::Atom || c->op != CmpOp::Eq) continue;
    std::string a = term_key(c->lhs), b = term_key(c->rhs);
    if (!a.empty() && !b.empty()) eq.merge(a, b);
  }
  return eq;
}

}  // namespace

TableSignature build_signature(const QueryIR& q, const std::string& alias,
                               const SchemaCatalog& catalog) {
  TableSignature sig;
  const std::string table = q.table_of(alias);
  for (const auto& c : catalog.columns(table)) sig.attributes.push_back(c.name);

  EqClasses eq = equality_classes(q);
  auto table_of_alias = [&](const std::string& a) { return q.table_of(a); };

  // W: scan every atom of WHERE and HAVING
  std::vector<Formula> atoms;
  collect_atoms(q.where, atoms);
  collect_atoms(q.having, atoms);
  auto add_interactions = [&](const std::string& attr, CmpOp op, const ValueExpr& other_side) {
    auto& slot = sig.w[{attr, op}];
    std::vector<ColumnRef> cols;
    collect_columns(other_side, cols);
    std::vector<std::string> seeds;
    for (const auto& c : cols) seeds.push_back("col:" + c.alias + "." + c.column);
    std::string ck = term_key(other_side);
    if (!ck.empty() && ck.rfind("const:", 0) == 0) seeds.push_back(ck);
    std::string self = "col:" + alias + "." + attr;
    for (const auto& seed : seeds) {
      for (const auto& m : eq.members(seed)) {
        if (m == self) continue;
        if (m.rfind("col:", 0) == 0) {
          std::string ref = m.substr(4);
          std::string a = ref.substr(0, ref.find('.'));
          slot.insert(table_of_alias(a));
        } else {
          slot.insert(m);  // const:<v>
        }
      }
    }
  };
  for (const auto& atom : atoms) {
    if (atom->op == CmpOp::Ne || atom->op == CmpOp::NotLike) continue;  // O omits negations
    std::vector<ColumnRef> lhs_cols, rhs_cols;
    collect_columns(atom->lhs, lhs_cols);
    collect_columns(atom->rhs, rhs_cols);
    for (const auto& c : lhs_cols)
      if (c.alias == alias) add_interactions(c.column, atom->op, atom->rhs);
    for (const auto& c : rhs_cols)
      if (c.alias == alias) add_interactions(c.column, flip_op(atom->op), atom->lhs);
  }

  // G: attributes whose equality class reaches a GROUP BY column through at
  // least one other reference (see the worked matching example: a grouped
  // column mentioned nowhere else does not join G).
  std::set<std::string> gb_cols;
  for (const auto& g : q.group_by) {
    std::vector<ColumnRef> cols;
    collect_columns(g, cols);
    for (const auto& c : cols) gb_cols.insert("col:" + c.alias + "." + c.column);
  }
  for (const auto& attr : sig.attributes) {
    std::string self = "col:" + alias + "." + attr;
    auto members = eq.members(self);
    bool has_other_ref = false, reaches_gb = false;
    for (const auto& m : members) {
      if (m != self && m.rfind("col:", 0) == 0) has_other_ref = true;
      if (gb_cols.count(m)) reaches_gb = true;
    }
    if (has_other_ref && reaches_gb) sig.g.insert(attr);
  }

  // S: 1-based select positions containing the attribute
  for (size_t i = 0; i < q.select.size(); ++i) {
    std::vector<ColumnRef> cols;
    collect_columns(q.select[i].expr, cols);
    for (const auto& c : cols)
      if (c.alias == alias) sig.s[c.column].insert(static_cast<int>(i) + 1);
  }
  return sig;
}

std::vector<CmpOp> signature_ops(const QueryIR& q, const QueryIR& qstar) {
  std::vector<CmpOp> ops = {CmpOp::Eq, CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge};
  auto uses_like = [](const QueryIR& query) {
    std::vector<Formula> atoms;
    collect_atoms(query.where, atoms);
    collect_atoms(query.having, atoms);
    for (const auto& a : atoms)
      if (a->op == CmpOp::Like || a->op == CmpOp::NotLike) return true;
    return false;
  };
  if (uses_like(q) || uses_like(qstar)) ops.push_back(CmpOp::Like);
  return ops;
}

namespace {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  size_t inter = 0;
  for (const auto& x : a)
    if (b.count(x)) inter++;
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard_int(const std::set<int>& a, const std::set<int>& b) {
  if (a.empty() && b.empty()) return 1.0;
  size_t inter = 0;
  for (int x : a)
    if (b.count(x)) inter++;
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double signature_similarity(const TableSignature& a, const TableSignature& b,
                            const std::vector<CmpOp>& ops) {
  static const std::set<std::string> kEmpty;
  double w_sum = 0;
  for (const auto& attr : a.attributes) {
    for (CmpOp op : ops) {
      auto ia = a.w.find({attr, op});
      auto ib = b.w.find({attr, op});
      w_sum += jaccard(ia == a.w.end() ? kEmpty : ia->second,
                       ib == b.w.end() ? kEmpty : ib->second);
    }
  }
  double w_norm = w_sum / (static_cast<double>(a.attributes.size()) * ops.size());
  double g_sim = jaccard(a.g, b.g);
  double s_sum = 0;
  static const std::set<int> kEmptyInt;
  for (const auto& attr : a.attributes) {
    auto ia = a.s.find(attr);
    auto ib = b.s.find(attr);
    s_sum += jaccard_int(ia == a.s.end() ? kEmptyInt : ia->second,
                         ib == b.s.end() ? kEmptyInt : ib->second);
  }
  double s_norm = s_sum / static_cast<double>(a.attributes.size());
  return w_norm + g_sim + s_norm;
}

namespace {

// Exact maximum-sum assignment for one table's alias block; sizes are tiny so
// optimal value by Hungarian-style DP over subsets, then the lexicographically
// smallest assignment achieving it.
struct Assignment {
  std::vector<int> to;  // star alias index -> q alias index
  double total;
};

Assignment best_assignment(const std::vector<std::vector<double>>& sim) {
  int n = static_cast<int>(sim.size());
  // dp over subsets of q-aliases for star aliases 0..i
  int full = 1 << n;
  std::vector<double> dp(full, -1e18);
  dp[0] = 0;
  std::vector<double> best_for_count(n + 1, -1e18);
  for (int mask = 0; mask < full; ++mask) {
    int i = __builtin_popcount(mask);
    if (dp[mask] < -1e17) continue;
    if (i == n) continue;
    for (int j = 0; j < n; ++j) {
      if (mask & (1 << j)) continue;
      int m2 = mask | (1 << j);
      dp[m2] = std::max(dp[m2], dp[mask] + sim[i][j]);
    }
  }
  double opt = dp[full - 1];
  // lexicographically smallest optimal assignment: fix star aliases in order,
  // choosing the smallest q index that still allows reaching opt
  const double eps = 1e-9;
  std::function<double(int, int)> rest = [&](int i, int mask) -> double {
    // max total for star aliases i..n-1 over q aliases not in mask
    if (i == n) return 0;
    double best = -1e18;
    for (int j = 0; j < n; ++j) {
      if (mask & (1 << j)) continue;
      best = std::max(best, sim[i][j] + rest(i + 1, mask | (1 << j)));
    }
    return best;
  };
  Assignment a;
  a.total = opt;
  int mask = 0;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (mask & (1 << j)) continue;
      double with = acc + sim[i][j] + rest(i + 1, mask | (1 << j));
      if (with >= opt - eps) {
        a.to.push_back(j);
        mask |= 1 << j;
        acc += sim[i][j];
        break;
      }
    }
  }
  return a;
}

}  // namespace

MappingResult select_table_mapping(const QueryIR& q, const QueryIR& qstar,
                                   const SchemaCatalog& catalog) {
  if (!check_from(q, qstar).empty())
    throw std::logic_error("select_table_mapping requires equal table multisets");

  MappingResult out;
  std::vector<CmpOp> ops = signature_ops(q, qstar);

  // group aliases by table
  std::map<std::string, std::vector<std::string>> q_by_table, s_by_table;
  for (const auto& t : q.tables) q_by_table[t.table].push_back(t.alias);
  for (const auto& t : qstar.tables) s_by_table[t.table].push_back(t.alias);

  for (const auto& [table, star_aliases] : s_by_table) {
    const auto& q_aliases = q_by_table.at(table);
    if (star_aliases.size() == 1) {
      out.mapping.map[star_aliases[0]] = q_aliases[0];
      continue;
    }
    std::vector<TableSignature> s_sigs, q_sigs;
    for (const auto& a : star_aliases) s_sigs.push_back(build_signature(qstar, a, catalog));
    for (const auto& a : q_aliases) q_sigs.push_back(build_signature(q, a, catalog));
    int n = static_cast<int>(star_aliases.size());
    std::vector<std::vector<double>> sim(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        sim[i][j] = signature_similarity(s_sigs[i], q_sigs[j], ops);
        out.similarities[{star_aliases[i], q_aliases[j]}] = sim[i][j];
      }
    Assignment a = best_assignment(sim);
    for (int i = 0; i < n; ++i) out.mapping.map[star_aliases[i]] = q_aliases[a.to[i]];
  }

  // Rename with collision avoidance: the mapping is a bijection between the
  // alias sets, but renaming in place could transiently collide, so go
  // through the map wholesale.
  out.qstar_renamed = rename_query(qstar, out.mapping.map);
  return out;
}

}  // namespace qrhint
