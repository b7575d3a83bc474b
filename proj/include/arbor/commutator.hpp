#pragma once

// Search for commutator-trick witnesses: g fixing vertices u, w with
// |u| <= |w| <= N, g|_u = 1 and g|_w = s. Candidates are conjugates c^-1 x^k c
// of generator powers, with k up to the lcm of the root-permutation orders.

#include <nlohmann/json.hpp>

#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/presentation.hpp"
#include "arbor/tree.hpp"

namespace arbor {

struct CommutatorWitness {
  GroupWord g;
  GroupWord conjugator;
  GroupWord core;
  Vertex u;
  Vertex w;
  bool revalidated = false;

  nlohmann::json to_json(const WreathPresentation& pres) const {
    return {{"g", pres.format_word(g)},
            {"conjugator", pres.format_word(conjugator)},
            {"core", pres.format_word(core)},
            {"u", u.str()},
            {"w", w.str()},
            {"revalidated", revalidated}};
  }
};

struct CommutatorSearchResult {
  std::optional<CommutatorWitness> witness;
  std::size_t candidates_tried = 0;
};

namespace detail {

inline std::size_t permutation_order(const std::vector<std::uint8_t>& perm) {
  std::size_t order = 1;
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t x = 0; x < perm.size(); ++x) {
    if (seen[x]) continue;
    std::size_t len = 0;
    for (std::size_t y = x; !seen[y]; y = perm[y]) {
      seen[y] = true;
      ++len;
    }
    order = std::lcm(order, len);
  }
  return order;
}

/// All freely reduced words of length <= max_len over generators and inverses, shortlex.
inline std::vector<GroupWord> reduced_words(const std::vector<std::uint32_t>& gens, int max_len) {
  std::vector<Letter> alphabet;
  for (auto g : gens) {
    alphabet.push_back({g, 1});
    alphabet.push_back({g, -1});
  }
  std::vector<GroupWord> out{GroupWord{}};
  std::vector<GroupWord> layer{GroupWord{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<GroupWord> next;
    for (const auto& w : layer) {
      for (const Letter& l : alphabet) {
        if (!w.empty() && w.letters().back() == l.inverse()) continue;
        next.push_back(w * GroupWord({l}));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer.swap(next);
  }
  return out;
}

}  // namespace detail

/// Post-hoc check with portraits only: g fixes u and w, g|_u is trivial and
/// g|_w agrees with s, all to `extra` levels below w.
inline bool revalidate_witness(const WreathPresentation& pres, const GroupWord& s, const CommutatorWitness& wit,
                               int extra = 6) {
  PortraitEvaluator eval(pres);
  const int depth = wit.w.level() + extra;
  const Portrait g = eval.word(wit.g, depth);
  if (g.apply(wit.u) != wit.u || g.apply(wit.w) != wit.w) return false;
  if (!g.section(wit.u).truncate(extra).is_identity()) return false;
  return g.section(wit.w).truncate(extra) == eval.word(s, extra);
}

/// Returns the first witness in search order (conjugator length, core, |w|, u),
/// or none. Throws BudgetExceeded when more than `budget` candidates g would be
/// needed, or when a triviality test is undecided and no witness was found.
inline CommutatorSearchResult commutator_search(const WreathPresentation& pres, const GroupWord& s, int N,
                                                int conj_word_len, std::size_t budget = 100'000,
                                                std::size_t trivial_budget = 100'000) {
  if (N < 1) throw DepthExceeded("commutator_search needs N >= 1");
  const auto active = pres.active_generators();
  CommutatorSearchResult result;
  if (active.empty()) return result;

  std::size_t lcm = 1;
  for (auto g : active) lcm = std::lcm(lcm, detail::permutation_order(pres.generator(g).perm));
  std::vector<GroupWord> cores;
  for (auto g : active) {
    for (std::size_t k = 1; k <= lcm; ++k) {
      cores.push_back(GroupWord::generator(g, 1).power(static_cast<int>(k)));
      cores.push_back(GroupWord::generator(g, -1).power(static_cast<int>(k)));
    }
  }
  const auto conjugators = detail::reduced_words(active, conj_word_len);
  const GroupWord s_inv = s.inverse();
  PortraitEvaluator eval(pres);
  const int probe = N + 4;
  const Portrait s_probe = eval.word(s, 4);
  bool undecided = false;

  for (const GroupWord& c : conjugators) {
    for (const GroupWord& x : cores) {
      if (++result.candidates_tried > budget) throw BudgetExceeded("commutator_search candidates", budget);
      const GroupWord g = (c.inverse() * x * c).reduced();
      if (g.empty()) continue;
      const Portrait gp = eval.word(g, probe);
      std::vector<Vertex> fixed;
      for (int k = 0; k <= N; ++k) {
        for (const Vertex& v : level_vertices(pres.shape(), k)) {
          if (gp.apply(v) == v) fixed.push_back(v);
        }
      }
      for (const Vertex& w : fixed) {
        if (w.level() == 0) continue;
        if (!(gp.section(w).truncate(4) == s_probe)) continue;
        for (const Vertex& u : fixed) {
          if (u.level() > w.level() || u == w) continue;
          if (!gp.section(u).truncate(4).is_identity()) continue;
          try {
            if (!is_trivial(pres, word_section(pres, g, u), trivial_budget)) continue;
            if (!is_trivial(pres, word_section(pres, g, w) * s_inv, trivial_budget)) continue;
          } catch (const BudgetExceeded&) {
            undecided = true;
            continue;
          }
          CommutatorWitness wit{g, c, x, u, w, false};
          wit.revalidated = revalidate_witness(pres, s, wit);
          if (!wit.revalidated) throw InternalInconsistency("commutator witness failed portrait revalidation");
          result.witness = std::move(wit);
          return result;
        }
      }
    }
  }
  if (undecided) throw BudgetExceeded("commutator_search: a triviality test was undecided", result.candidates_tried);
  return result;
}

}  // namespace arbor
