#include "qrhint/boolmin.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace qrhint {

size_t Dnf::literal_count() const {
  size_t n = 0;
  for (const auto& t : terms) n += t.lits.size();
  return n;
}

bool Dnf::eval(uint32_t row) const {
  for (const auto& t : terms) {
    bool ok = true;
    for (auto [v, pos] : t.lits)
      if ((((row >> v) & 1) != 0) != pos) { ok = false; break; }
    if (ok) return true;
  }
  return false;
}

namespace {

// Implicant as (mask, value): variables outside mask are don't-cares of the
// cube; value gives the required bits inside mask.
struct Cube {
  uint32_t mask;
  uint32_t value;
  bool operator<(const Cube& o) const {
    return mask != o.mask ? mask < o.mask : value < o.value;
  }
  bool operator==(const Cube& o) const { return mask == o.mask && value == o.value; }
  int literals() const { return __builtin_popcount(mask); }
  bool covers(uint32_t minterm) const { return (minterm & mask) == value; }
};

// Prime implicant generation over care = on + dc.
std::vector<Cube> prime_implicants(int nvars, const std::vector<uint32_t>& on,
                                   const std::vector<uint32_t>& dc) {
  std::set<Cube> current;
  for (uint32_t m : on) current.insert({nvars >= 32 ? ~0u : (uint32_t(1) << nvars) - 1, m});
  for (uint32_t m : dc) current.insert({nvars >= 32 ? ~0u : (uint32_t(1) << nvars) - 1, m});
  std::vector<Cube> primes;
  while (!current.empty()) {
    std::set<Cube> next;
    std::set<Cube> combined;
    std::vector<Cube> cur(current.begin(), current.end());
    for (size_t i = 0; i < cur.size(); ++i) {
      for (size_t j = i + 1; j < cur.size(); ++j) {
        if (cur[i].mask != cur[j].mask) continue;
        uint32_t diff = cur[i].value ^ cur[j].value;
        if (__builtin_popcount(diff) != 1) continue;
        Cube merged{cur[i].mask & ~diff, cur[i].value & ~diff};
        next.insert(merged);
        combined.insert(cur[i]);
        combined.insert(cur[j]);
      }
    }
    for (const auto& c : cur)
      if (!combined.count(c)) primes.push_back(c);
    current = std::move(next);
  }
  std::sort(primes.begin(), primes.end());
  primes.erase(std::unique(primes.begin(), primes.end()), primes.end());
  return primes;
}

Term cube_to_term(const Cube& c, int nvars) {
  Term t;
  for (int v = 0; v < nvars; ++v)
    if ((c.mask >> v) & 1) t.lits.emplace_back(v, ((c.value >> v) & 1) != 0);
  return t;
}

// canonical key for deterministic tie-breaking between equal-cost covers
std::vector<std::pair<uint32_t, uint32_t>> cover_key(const std::vector<Cube>& cover) {
  std::vector<std::pair<uint32_t, uint32_t>> k;
  for (const auto& c : cover) k.emplace_back(c.mask, c.value);
  std::sort(k.begin(), k.end());
  return k;
}

struct CoverSearch {
  const std::vector<Cube>& primes;
  const std::vector<uint32_t>& on;
  std::vector<std::vector<int>> covers_of_minterm;  // per on-minterm: prime indices
  // best found
  size_t best_terms = SIZE_MAX;
  size_t best_lits = SIZE_MAX;
  std::vector<Cube> best_cover;
  std::vector<std::pair<uint32_t, uint32_t>> best_key;

  void consider(const std::vector<int>& chosen) {
    std::vector<Cube> cover;
    size_t lits = 0;
    for (int p : chosen) {
      cover.push_back(primes[p]);
      lits += primes[p].literals();
    }
    auto key = cover_key(cover);
    if (cover.size() < best_terms ||
        (cover.size() == best_terms &&
         (lits < best_lits || (lits == best_lits && key < best_key)))) {
      best_terms = cover.size();
      best_lits = lits;
      best_cover = cover;
      best_key = key;
    }
  }

  void search(std::vector<int>& chosen, std::vector<bool>& covered, size_t covered_count) {
    if (covered_count == on.size()) {
      consider(chosen);
      return;
    }
    // at least one more prime is needed; keep exploring equal-size covers so
    // the literal-count / lexicographic tie-break sees every optimum
    if (chosen.size() + 1 > best_terms) return;
    // branch on the uncovered minterm with fewest covering primes
    int pick = -1;
    size_t fewest = SIZE_MAX;
    for (size_t m = 0; m < on.size(); ++m) {
      if (covered[m]) continue;
      if (covers_of_minterm[m].size() < fewest) {
        fewest = covers_of_minterm[m].size();
        pick = static_cast<int>(m);
      }
    }
    if (pick < 0) return;
    for (int p : covers_of_minterm[pick]) {
      std::vector<bool> cov2 = covered;
      size_t cc = covered_count;
      for (size_t m = 0; m < on.size(); ++m)
        if (!cov2[m] && primes[p].covers(on[m])) { cov2[m] = true; cc++; }
      chosen.push_back(p);
      search(chosen, cov2, cc);
      chosen.pop_back();
    }
  }
};

std::vector<Cube> exact_cover(const std::vector<Cube>& primes, const std::vector<uint32_t>& on) {
  CoverSearch cs{primes, on, {}, SIZE_MAX, SIZE_MAX, {}, {}};
  cs.covers_of_minterm.resize(on.size());
  for (size_t m = 0; m < on.size(); ++m)
    for (size_t p = 0; p < primes.size(); ++p)
      if (primes[p].covers(on[m])) cs.covers_of_minterm[m].push_back(static_cast<int>(p));
  std::vector<int> chosen;
  std::vector<bool> covered(on.size(), false);
  cs.search(chosen, covered, 0);
  return cs.best_cover;
}

std::vector<Cube> greedy_cover(const std::vector<Cube>& primes, const std::vector<uint32_t>& on) {
  std::vector<Cube> cover;
  std::vector<bool> covered(on.size(), false);
  size_t remaining = on.size();
  // essential primes first
  for (size_t m = 0; m < on.size(); ++m) {
    int only = -1, hits = 0;
    for (size_t p = 0; p < primes.size(); ++p)
      if (primes[p].covers(on[m])) {
        only = static_cast<int>(p);
        if (++hits > 1) break;
      }
    if (hits == 1 &&
        std::find(cover.begin(), cover.end(), primes[only]) == cover.end()) {
      cover.push_back(primes[only]);
      for (size_t k = 0; k < on.size(); ++k)
        if (!covered[k] && primes[only].covers(on[k])) { covered[k] = true; remaining--; }
    }
  }
  while (remaining > 0) {
    size_t best_gain = 0;
    int best_p = -1;
    int best_lits = 0;
    for (size_t p = 0; p < primes.size(); ++p) {
      size_t gain = 0;
      for (size_t m = 0; m < on.size(); ++m)
        if (!covered[m] && primes[p].covers(on[m])) gain++;
      if (gain == 0) continue;
      int lits = primes[p].literals();
      if (gain > best_gain || (gain == best_gain && (lits < best_lits ||
          (lits == best_lits && best_p >= 0 && primes[p] < primes[best_p])))) {
        best_gain = gain;
        best_p = static_cast<int>(p);
        best_lits = lits;
      }
    }
    if (best_p < 0) break;  // unreachable when primes cover all on-minterms
    cover.push_back(primes[best_p]);
    for (size_t m = 0; m < on.size(); ++m)
      if (!covered[m] && primes[best_p].covers(on[m])) { covered[m] = true; remaining--; }
  }
  return cover;
}

Dnf minimize(int nvars, const std::vector<uint32_t>& on, const std::vector<uint32_t>& dc,
             int exact_var_limit) {
  Dnf out;
  if (on.empty()) return out;  // constant false
  if (on.size() + dc.size() == (size_t(1) << nvars)) {
    out.terms.push_back({});  // constant true
    return out;
  }
  std::vector<Cube> primes = prime_implicants(nvars, on, dc);
  std::vector<Cube> cover =
      nvars <= exact_var_limit ? exact_cover(primes, on) : greedy_cover(primes, on);
  std::sort(cover.begin(), cover.end(), [](const Cube& a, const Cube& b) {
    // lower-indexed variables first, then lexicographic
    uint32_t la = a.mask & ~(a.mask - 1), lb = b.mask & ~(b.mask - 1);
    if (la != lb) return la < lb;
    if (a.mask != b.mask) return a.mask < b.mask;
    return a.value < b.value;
  });
  for (const auto& c : cover) out.terms.push_back(cube_to_term(c, nvars));
  return out;
}

}  // namespace

Dnf min_bool_exp(const PartialTruthTable& t, int exact_var_limit) {
  std::vector<uint32_t> on, dc;
  for (uint32_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r] == TriState::One) on.push_back(r);
    else if (t.rows[r] == TriState::DontCare) dc.push_back(r);
  }
  return minimize(t.nvars, on, dc, exact_var_limit);
}

std::vector<Term> min_cnf(const PartialTruthTable& t, int exact_var_limit) {
  // minimize the complement, then negate cubes into clauses
  PartialTruthTable comp = t;
  for (auto& r : comp.rows) {
    if (r == TriState::One) r = TriState::Zero;
    else if (r == TriState::Zero) r = TriState::One;
  }
  Dnf d = min_bool_exp(comp, exact_var_limit);
  std::vector<Term> clauses;
  for (const auto& term : d.terms) {
    Term clause;
    for (auto [v, pos] : term.lits) clause.lits.emplace_back(v, !pos);
    clauses.push_back(clause);
  }
  return clauses;
}

Formula dnf_to_formula(const Dnf& d, const AtomMap& am) {
  if (d.terms.empty()) return make_false();
  std::vector<Formula> disjuncts;
  for (const auto& t : d.terms) {
    if (t.lits.empty()) return make_true();
    std::vector<Formula> lits;
    for (auto [v, pos] : t.lits) lits.push_back(am.literal(v, pos));
    disjuncts.push_back(make_and(std::move(lits)));
  }
  return make_or(std::move(disjuncts));
}

Formula cnf_to_formula(const std::vector<Term>& clauses, const AtomMap& am) {
  if (clauses.empty()) return make_true();
  std::vector<Formula> conjuncts;
  for (const auto& c : clauses) {
    if (c.lits.empty()) return make_false();
    std::vector<Formula> lits;
    for (auto [v, pos] : c.lits) lits.push_back(am.literal(v, pos));
    conjuncts.push_back(make_or(std::move(lits)));
  }
  return make_and(std::move(conjuncts));
}

}  // namespace qrhint
