#include "qrhint/groupby_stage.hpp"

namespace qrhint {

Formula instantiate_formula(const Formula& f, const std::string& suffix) {
  return rename_formula(f, [&](const std::string& a) { return a + suffix; });
}

ValueExpr instantiate_expr(const ValueExpr& e, const std::string& suffix) {
  return rename_expr(e, [&](const std::string& a) { return a + suffix; });
}

GroupingDelta fix_grouping(const Formula& p, const std::vector<ValueExpr>& o,
                           const std::vector<ValueExpr>& ostar, Solver& solver) {
  GroupingDelta delta;
  Context empty;
  Formula p1 = instantiate_formula(p, "#1");
  Formula p2 = instantiate_formula(p, "#2");

  auto pair_eq = [&](const ValueExpr& e) {
    return make_atom(CmpOp::Eq, instantiate_expr(e, "#1"), instantiate_expr(e, "#2"));
  };
  auto pair_ne = [&](const ValueExpr& e) {
    return make_atom(CmpOp::Ne, instantiate_expr(e, "#1"), instantiate_expr(e, "#2"));
  };

  std::vector<Formula> gstar_parts{p1, p2};
  for (const auto& os : ostar) gstar_parts.push_back(pair_eq(os));

  for (size_t i = 0; i < o.size(); ++i) {
    std::vector<Formula> query = gstar_parts;
    query.push_back(pair_ne(o[i]));
    Verdict v = solver.sat(make_and(std::move(query)), empty);
    if (v == Verdict::Yes) delta.remove.push_back(static_cast<int>(i));
    else if (v == Verdict::Unknown) {
      delta.remove.push_back(static_cast<int>(i));  // unknown treated as satisfiable
      delta.inconclusive = true;
    }
  }

  std::vector<Formula> g_parts{p1, p2};
  for (size_t i = 0; i < o.size(); ++i) {
    bool removed = false;
    for (int r : delta.remove)
      if (r == static_cast<int>(i)) removed = true;
    if (!removed) g_parts.push_back(pair_eq(o[i]));
  }
  for (size_t i = 0; i < ostar.size(); ++i) {
    std::vector<Formula> query = g_parts;
    query.push_back(pair_ne(ostar[i]));
    Verdict v = solver.sat(make_and(std::move(query)), empty);
    if (v == Verdict::Yes || v == Verdict::Unknown) {
      delta.add.push_back(static_cast<int>(i));
      if (v == Verdict::Unknown) delta.inconclusive = true;
      g_parts.push_back(pair_eq(ostar[i]));  // G accumulates the added equality
    }
  }
  return delta;
}

}  // namespace qrhint
