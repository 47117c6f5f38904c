#include "qrhint/boolfunc.hpp"

#include <stdexcept>

namespace qrhint {

BoolFunc::BoolFunc(int nvars, bool constant) : nvars_(nvars) {
  if (nvars < 0 || nvars > 20) throw std::invalid_argument("BoolFunc: nvars out of range");
  size_t words = (rows() + 63) / 64;
  bits_.assign(words, constant ? ~uint64_t(0) : 0);
  if (constant && (rows() & 63)) bits_.back() &= (uint64_t(1) << (rows() & 63)) - 1;
}

BoolFunc BoolFunc::var(int nvars, int index) {
  BoolFunc f(nvars, false);
  for (uint32_t r = 0; r < f.rows(); ++r)
    if ((r >> index) & 1) f.set(r, true);
  return f;
}

void BoolFunc::set(uint32_t row, bool v) {
  if (v) bits_[row >> 6] |= uint64_t(1) << (row & 63);
  else bits_[row >> 6] &= ~(uint64_t(1) << (row & 63));
}

BoolFunc BoolFunc::operator&(const BoolFunc& o) const {
  BoolFunc r = *this;
  for (size_t i = 0; i < bits_.size(); ++i) r.bits_[i] &= o.bits_[i];
  return r;
}

BoolFunc BoolFunc::operator|(const BoolFunc& o) const {
  BoolFunc r = *this;
  for (size_t i = 0; i < bits_.size(); ++i) r.bits_[i] |= o.bits_[i];
  return r;
}

BoolFunc BoolFunc::operator~() const {
  BoolFunc r = *this;
  for (size_t i = 0; i < bits_.size(); ++i) r.bits_[i] = ~bits_[i];
  if (rows() & 63) r.bits_.back() &= (uint64_t(1) << (rows() & 63)) - 1;
  return r;
}

BoolFunc BoolFunc::widen(int new_nvars) const {
  if (new_nvars == nvars_) return *this;
  BoolFunc r(new_nvars, false);
  for (uint32_t row = 0; row < r.rows(); ++row) {
    uint32_t sub = row & ((uint32_t(1) << nvars_) - 1);
    if (eval(sub)) r.set(row, true);
  }
  return r;
}

size_t PartialTruthTable::count(TriState t) const {
  size_t n = 0;
  for (auto r : rows)
    if (r == t) n++;
  return n;
}

std::optional<std::pair<int, bool>> AtomMap::lookup(const Formula& atom) const {
  for (const auto& m : mapped_)
    if (formula_equal(m.atom, atom)) return std::make_pair(m.var, m.positive);
  return std::nullopt;
}

BoolFunc AtomMap::to_func(const Formula& f) const {
  int n = nvars();
  switch (f->kind) {
    case FKind::True: return BoolFunc(n, true);
    case FKind::False: return BoolFunc(n, false);
    case FKind::Atom: {
      auto hit = lookup(f);
      if (!hit) throw std::logic_error("AtomMap::to_func: unmapped atom " + render_formula(f));
      BoolFunc v = BoolFunc::var(n, hit->first);
      return hit->second ? v : ~v;
    }
    case FKind::Not: return ~to_func(f->children[0]);
    case FKind::And: {
      BoolFunc acc(n, true);
      for (const auto& c : f->children) acc = acc & to_func(c);
      return acc;
    }
    case FKind::Or: {
      BoolFunc acc(n, false);
      for (const auto& c : f->children) acc = acc | to_func(c);
      return acc;
    }
  }
  return BoolFunc(n, false);
}

Formula AtomMap::literal(int var, bool positive) const {
  const Formula& a = atoms_[var];
  return positive ? a : negate(a);
}

AtomMap map_atom_preds(const std::vector<Formula>& formulas, Solver& solver,
                       const Context& ctx) {
  AtomMap am;
  for (const auto& f : formulas) {
    std::vector<Formula> atoms;
    collect_atoms(f, atoms);
    for (const auto& t : atoms) {
      if (am.lookup(t)) continue;
      std::optional<std::pair<int, bool>> found;
      for (int i = 0; i < am.nvars() && !found; ++i) {
        const Formula& a = am.atoms_[i];
        if (solver.equiv(t, a, ctx) == Verdict::Yes) found = {i, true};
        else if (solver.equiv(t, negate(a), ctx) == Verdict::Yes) found = {i, false};
      }
      if (found) {
        am.mapped_.push_back({t, found->first, found->second});
      } else {
        int var = am.nvars();
        am.atoms_.push_back(t);
        am.mapped_.push_back({t, var, true});
      }
    }
  }
  return am;
}

PartialTruthTable build_truth_table(const AtomMap& am, const BoolFunc& g_l, const BoolFunc& g_u,
                                    Solver& solver, const Context& ctx) {
  int n = am.nvars();
  PartialTruthTable t;
  t.nvars = n;
  t.rows.resize(size_t(1) << n);
  for (uint32_t row = 0; row < t.rows.size(); ++row) {
    std::vector<Formula> signed_atoms;
    for (int i = 0; i < n; ++i) signed_atoms.push_back(am.literal(i, (row >> i) & 1));
    bool infeasible = solver.unsat(make_and(std::move(signed_atoms)), ctx) == Verdict::Yes;
    if (infeasible) {
      t.rows[row] = TriState::DontCare;
      continue;
    }
    bool lo = g_l.eval(row), hi = g_u.eval(row);
    if (lo && !hi) throw InconsistentBound{};
    t.rows[row] = lo == hi ? (lo ? TriState::One : TriState::Zero) : TriState::DontCare;
  }
  return t;
}

}  // namespace qrhint
