#pragma once

// Brute-force reference computations. Groups are represented by their action
// on the leaves of level n (faithful for pi_n), computed straight from the
// wreath recursion without portraits.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "arbor/presentation.hpp"
#include "arbor/rational.hpp"

namespace oracle {

using arbor::GroupWord;
using arbor::Integer;
using arbor::Rational;
using arbor::WreathPresentation;
using Leaves = std::vector<std::uint32_t>;  // leaf rank -> image rank
using Word = std::vector<int>;              // 0-based symbols

inline std::size_t power(std::size_t d, int n) {
  std::size_t r = 1;
  for (int i = 0; i < n; ++i) r *= d;
  return r;
}

Word apply_word(const WreathPresentation& pres, const GroupWord& w, Word v);

/// v^(x^e) for a single generator x, e = +-1, by unfolding (xw)^g = x^g w^(g|_x).
inline Word apply_letter(const WreathPresentation& pres, std::uint32_t gen, int exponent, const Word& v) {
  if (v.empty()) return v;
  const auto& g = pres.generator(gen);
  const int x = v[0];
  Word rest(v.begin() + 1, v.end());
  Word out;
  if (exponent > 0) {
    out.push_back(g.perm[static_cast<std::size_t>(x)]);
    Word tail = apply_word(pres, g.sections[static_cast<std::size_t>(x)], rest);
    out.insert(out.end(), tail.begin(), tail.end());
  } else {
    int pre = 0;
    while (g.perm[static_cast<std::size_t>(pre)] != x) ++pre;
    out.push_back(pre);
    Word tail = apply_word(pres, g.sections[static_cast<std::size_t>(pre)].inverse(), rest);
    out.insert(out.end(), tail.begin(), tail.end());
  }
  return out;
}

inline Word apply_word(const WreathPresentation& pres, const GroupWord& w, Word v) {
  for (const auto& l : w.letters()) v = apply_letter(pres, l.generator, l.exponent, v);
  return v;
}

inline Word unrank(std::size_t d, int n, std::size_t r) {
  Word v(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    v[static_cast<std::size_t>(i)] = static_cast<int>(r % d);
    r /= d;
  }
  return v;
}

inline std::size_t rank(std::size_t d, const Word& v) {
  std::size_t r = 0;
  for (int x : v) r = r * d + static_cast<std::size_t>(x);
  return r;
}

inline Leaves leaf_action(const WreathPresentation& pres, const GroupWord& w, int n) {
  const std::size_t d = static_cast<std::size_t>(pres.degree());
  const std::size_t count = power(d, n);
  Leaves out(count);
  for (std::size_t r = 0; r < count; ++r) out[r] = static_cast<std::uint32_t>(rank(d, apply_word(pres, w, unrank(d, n, r))));
  return out;
}

/// p first, then q.
inline Leaves compose(const Leaves& p, const Leaves& q) {
  Leaves out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = q[p[i]];
  return out;
}

inline Leaves identity(std::size_t count) {
  Leaves out(count);
  std::iota(out.begin(), out.end(), 0u);
  return out;
}

inline std::set<Leaves> close(const std::vector<Leaves>& gens, std::size_t count) {
  std::set<Leaves> seen{identity(count)};
  std::vector<Leaves> frontier{identity(count)};
  while (!frontier.empty()) {
    std::vector<Leaves> next;
    for (const auto& x : frontier) {
      for (const auto& g : gens) {
        Leaves y = compose(x, g);
        if (seen.insert(y).second) next.push_back(std::move(y));
      }
    }
    frontier.swap(next);
  }
  return seen;
}

/// pi_n(G) as leaf permutations of level n.
inline std::set<Leaves> quotient(const WreathPresentation& pres, int n) {
  std::vector<Leaves> gens;
  for (auto g : pres.active_generators()) gens.push_back(leaf_action(pres, GroupWord::generator(g), n));
  return close(gens, power(static_cast<std::size_t>(pres.degree()), n));
}

inline std::size_t fixed(const Leaves& p) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < p.size(); ++i) c += p[i] == i;
  return c;
}

inline Rational fixer_proportion(const std::set<Leaves>& q) {
  std::size_t hits = 0;
  for (const auto& p : q) hits += fixed(p) > 0;
  return Rational(Integer(hits), Integer(q.size()));
}

/// Action on level k < n induced by a level-n leaf permutation.
inline Leaves restrict(const Leaves& p, std::size_t d, int n, int k) {
  const std::size_t block = power(d, n - k);
  Leaves out(power(d, k));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint32_t>(p[i * block] / block);
  return out;
}

inline std::set<Leaves> restrict_all(const std::set<Leaves>& q, std::size_t d, int n, int k) {
  std::set<Leaves> out;
  for (const auto& p : q) out.insert(restrict(p, d, n, k));
  return out;
}

inline bool transitive(const std::set<Leaves>& q) {
  if (q.empty()) return false;
  std::set<std::uint32_t> orbit;
  for (const auto& p : q) orbit.insert(p[0]);
  return orbit.size() == q.begin()->size();
}

/// {g|_v truncated to m : g in St_G(n), v^g = v}, computed in pi_{|v|+m}.
inline std::set<Leaves> stabilizer_section_image(const WreathPresentation& pres, int n, const Word& v, int m) {
  const std::size_t d = static_cast<std::size_t>(pres.degree());
  const int total = static_cast<int>(v.size()) + m;
  const auto q = quotient(pres, total);
  const std::size_t block = power(d, m);
  const std::size_t base = rank(d, v) * block;
  std::set<Leaves> out;
  for (const auto& p : q) {
    if (restrict(p, d, total, n) != identity(power(d, n))) continue;
    if (p[base] / block != base / block) continue;
    Leaves s(block);
    for (std::size_t j = 0; j < block; ++j) s[j] = static_cast<std::uint32_t>(p[base + j] - base);
    out.insert(s);
  }
  return out;
}

/// Kernel of pi_{n+depth} -> pi_n transitive on the descendants of each level-n vertex.
inline bool subtree_transitive(const WreathPresentation& pres, int n, int depth) {
  const std::size_t d = static_cast<std::size_t>(pres.degree());
  const auto q = quotient(pres, n + depth);
  const std::size_t block = power(d, depth);
  std::vector<std::set<std::uint32_t>> orbits(power(d, n));
  for (const auto& p : q) {
    if (restrict(p, d, n + depth, n) != identity(power(d, n))) continue;
    for (std::size_t b = 0; b < orbits.size(); ++b) orbits[b].insert(p[b * block]);
  }
  for (const auto& o : orbits) {
    if (o.size() != block) return false;
  }
  return true;
}

/// max |E[X_{n+1} | pi_n = a] - X_n(a)| over a.
inline Rational martingale_deviation(const WreathPresentation& pres, int n) {
  const std::size_t d = static_cast<std::size_t>(pres.degree());
  const auto q = quotient(pres, n + 1);
  std::map<Leaves, std::pair<Integer, Integer>> fibers;
  for (const auto& p : q) {
    auto& f = fibers[restrict(p, d, n + 1, n)];
    f.first += fixed(p);
    f.second += 1;
  }
  Rational worst = 0;
  for (const auto& [a, f] : fibers) {
    Rational dev = Rational(f.first, f.second) - Rational(Integer(fixed(a)));
    if (dev < 0) dev = -dev;
    worst = std::max(worst, dev);
  }
  return worst;
}

/// Cone-pair counts #{g : pi_n(g) = a, w^(g|_u) = w, pi_m(g|_{uw}) = b}, keyed by (a, b).
inline std::map<std::pair<Leaves, Leaves>, std::size_t> pseudomixing_counts(const WreathPresentation& pres, int n, int m,
                                                                            const Word& u, const Word& w) {
  const std::size_t d = static_cast<std::size_t>(pres.degree());
  Word v = u;
  v.insert(v.end(), w.begin(), w.end());
  const int total = static_cast<int>(v.size()) + m;
  const auto q = quotient(pres, total);
  const std::size_t block = power(d, m);
  const std::size_t vbase = rank(d, v) * block;
  const std::size_t ublock = power(d, total - n);
  const std::size_t ubase = rank(d, u) * ublock;
  std::map<std::pair<Leaves, Leaves>, std::size_t> counts;
  for (const auto& a : restrict_all(q, d, total, n)) {
    for (const auto& b : quotient(pres, m)) counts[{a, b}] = 0;
  }
  for (const auto& p : q) {
    // v^g = u^g w exactly when g|_u fixes w.
    const std::size_t u_image = p[ubase] / ublock;
    const std::size_t v_image = p[vbase] / block;
    const std::size_t expect = (u_image * ublock + (vbase - ubase)) / block;
    if (v_image != expect) continue;
    Leaves s(block);
    const std::size_t target = v_image * block;
    for (std::size_t j = 0; j < block; ++j) s[j] = static_cast<std::uint32_t>(p[vbase + j] - target);
    ++counts[{restrict(p, d, total, n), s}];
  }
  return counts;
}

/// All 2^(2^n - 1) binary portraits of depth n as leaf permutations.
inline std::vector<Leaves> all_binary_automorphisms(int n) {
  const std::size_t internal = power(2, n) - 1;
  const std::size_t leaves = power(2, n);
  std::vector<Leaves> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << internal); ++mask) {
    Leaves p(leaves);
    for (std::size_t r = 0; r < leaves; ++r) {
      // Walk down: vertex index in level-major order, label bit = swap.
      std::size_t image = 0;
      std::size_t pos = 0;  // rank within level k of the source prefix
      for (int k = 0; k < n; ++k) {
        const std::size_t bit = (r >> (n - 1 - k)) & 1U;
        const std::size_t index = (power(2, k) - 1) + pos;
        const std::size_t swapped = bit ^ ((mask >> index) & 1U);
        image = image * 2 + swapped;
        pos = pos * 2 + bit;
      }
      p[r] = static_cast<std::uint32_t>(image);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace oracle

#include "arbor/quotient.hpp"

namespace oracle {

/// Engine quotient as a set of leaf permutations, for comparison with the oracle.
inline std::set<Leaves> as_leaves(const arbor::FiniteQuotient& q) {
  std::set<Leaves> out;
  for (std::size_t id = 0; id < q.size(); ++id) out.insert(arbor::level_permutation(q.element(id), q.level()));
  return out;
}

}  // namespace oracle
