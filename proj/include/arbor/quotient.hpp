#pragma once

// Finite quotients pi_n(G) enumerated as closures of generator portraits.
//
// Elements are depth-n portraits stored back to back in one byte arena and
// located through an open-addressing table. After the breadth-first closure the
// elements are renumbered in canonical-key (bytewise) order, so ids do not
// depend on the discovery order.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/presentation.hpp"
#include "arbor/tree.hpp"

namespace arbor {

inline constexpr std::size_t kDefaultElementBudget = 2'000'000;

/// Budget from the ARBOR_BUDGET environment variable, else the default.
inline std::size_t default_element_budget() {
  if (const char* env = std::getenv("ARBOR_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultElementBudget;
}

namespace detail {

inline std::uint64_t hash_bytes(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h ^ (h >> 29);
}

/// Set of fixed-width byte strings held in an arena, indexed by insertion order.
class ByteSet {
 public:
  explicit ByteSet(std::size_t width) : width_(width), slots_(1024, kEmpty) {}

  std::size_t size() const { return count_; }
  std::size_t width() const { return width_; }
  const std::uint8_t* at(std::size_t id) const { return arena_.data() + id * width_; }
  std::vector<std::uint8_t>& arena() { return arena_; }

  std::optional<std::uint32_t> find(const std::uint8_t* key) const {
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t s = hash_bytes(key, width_) & mask;; s = (s + 1) & mask) {
      const std::uint32_t id = slots_[s];
      if (id == kEmpty) return std::nullopt;
      if (std::memcmp(at(id), key, width_) == 0) return id;
    }
  }

  /// Returns (id, inserted).
  std::pair<std::uint32_t, bool> insert(const std::uint8_t* key) {
    if ((count_ + 1) * 2 > slots_.size()) grow();
    const std::size_t mask = slots_.size() - 1;
    std::size_t s = hash_bytes(key, width_) & mask;
    for (;; s = (s + 1) & mask) {
      const std::uint32_t id = slots_[s];
      if (id == kEmpty) break;
      if (std::memcmp(at(id), key, width_) == 0) return {id, false};
    }
    const auto id = static_cast<std::uint32_t>(count_++);
    slots_[s] = id;
    arena_.insert(arena_.end(), key, key + width_);
    return {id, true};
  }

 private:
  static constexpr std::uint32_t kEmpty = 0xFFFFFFFFu;

  void grow() {
    std::vector<std::uint32_t> next(slots_.size() * 2, kEmpty);
    const std::size_t mask = next.size() - 1;
    for (std::uint32_t id = 0; id < count_; ++id) {
      std::size_t s = hash_bytes(at(id), width_) & mask;
      while (next[s] != kEmpty) s = (s + 1) & mask;
      next[s] = id;
    }
    slots_.swap(next);
  }

  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> arena_;
  std::vector<std::uint32_t> slots_;
};

}  // namespace detail

/// The finite group generated by some depth-n portraits, with canonical ids.
class FiniteQuotient {
 public:
  static constexpr std::uint32_t kNoParent = 0xFFFFFFFFu;

  int degree() const { return degree_; }
  int level() const { return level_; }
  std::size_t size() const { return parent_.size(); }
  std::size_t element_width() const { return width_; }

  std::span<const std::uint8_t> element_bytes(std::size_t id) const {
    return std::span<const std::uint8_t>(arena_).subspan(id * width_, width_);
  }
  Portrait element(std::size_t id) const { return Portrait::from_bytes(degree_, level_, element_bytes(id)); }

  /// Binary search over the canonical order.
  std::optional<std::uint32_t> find(std::span<const std::uint8_t> key) const {
    if (key.size() != width_) return std::nullopt;
    std::size_t lo = 0;
    std::size_t hi = size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const int c = width_ == 0 ? 0 : std::memcmp(arena_.data() + mid * width_, key.data(), width_);
      if (c == 0) return static_cast<std::uint32_t>(mid);
      if (c < 0) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return std::nullopt;
  }
  std::optional<std::uint32_t> find(const Portrait& p) const {
    if (p.degree() != degree_ || p.depth() != level_) return std::nullopt;
    return find(p.bytes());
  }
  bool contains(const Portrait& p) const { return find(p).has_value(); }

  std::uint32_t identity_id() const { return identity_; }

  /// Generators used for the closure, with the presentation letters they stand for.
  const std::vector<Portrait>& generators() const { return generators_; }
  const std::vector<Letter>& generator_letters() const { return letters_; }

  /// Right multiplication table: act(id, j) = id of element(id) * generator j.
  std::uint32_t act(std::size_t id, std::size_t j) const { return action_[id * generators_.size() + j]; }

  /// Shortlex-least positive word (in the generator letters) reaching the element.
  GroupWord representative(std::size_t id) const {
    std::vector<Letter> rev;
    for (std::uint32_t cur = static_cast<std::uint32_t>(id); parent_[cur] != kNoParent; cur = parent_[cur]) {
      rev.push_back(letters_.empty() ? Letter{parent_gen_[cur], 1} : letters_[parent_gen_[cur]]);
    }
    std::reverse(rev.begin(), rev.end());
    return GroupWord(std::move(rev));
  }

  /// {"degree", "level", "order", "generators", "action": [[ids per generator]...],
  ///  "elements"?: [portrait labels...]}.
  nlohmann::json to_json(const WreathPresentation* pres = nullptr, bool with_portraits = false) const {
    nlohmann::json gens = nlohmann::json::array();
    for (std::size_t j = 0; j < generators_.size(); ++j) {
      if (pres && j < letters_.size()) {
        gens.push_back(pres->format_word(GroupWord({letters_[j]})));
      } else {
        gens.push_back("g" + std::to_string(j));
      }
    }
    nlohmann::json action = nlohmann::json::array();
    for (std::size_t id = 0; id < size(); ++id) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < generators_.size(); ++j) row.push_back(act(id, j));
      action.push_back(std::move(row));
    }
    nlohmann::json out = {{"degree", degree_},   {"level", level_}, {"order", size()},
                          {"identity", identity_}, {"generators", gens}, {"action", action}};
    if (with_portraits) {
      nlohmann::json elems = nlohmann::json::array();
      for (std::size_t id = 0; id < size(); ++id) {
        nlohmann::json e = element(id).to_json();
        if (pres) e["word"] = pres->format_word(representative(id));
        elems.push_back(std::move(e));
      }
      out["elements"] = std::move(elems);
    }
    return out;
  }

  friend FiniteQuotient close_portraits(int degree, int level, const std::vector<Portrait>& generators,
                                        const std::vector<Letter>& letters, std::size_t budget);

 private:
  int degree_ = 2;
  int level_ = 0;
  std::size_t width_ = 0;
  std::uint32_t identity_ = 0;
  std::vector<std::uint8_t> arena_;
  std::vector<Portrait> generators_;
  std::vector<Letter> letters_;
  std::vector<std::uint32_t> action_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> parent_gen_;
};

/// Breadth-first closure of the identity under right multiplication by the
/// generators. `letters` (optional, one per generator) labels representative
/// words. Throws BudgetExceeded once the closure would exceed `budget` elements.
inline FiniteQuotient close_portraits(int degree, int level, const std::vector<Portrait>& generators,
                                      const std::vector<Letter>& letters, std::size_t budget) {
  (void)TreeShape{degree};
  for (const auto& g : generators) {
    if (g.degree() != degree || g.depth() != level) throw DegreeMismatch("closure generators must share degree and depth");
  }
  const Portrait id = Portrait::identity(degree, level);
  const std::size_t width = id.bytes().size();
  const std::size_t k = generators.size();
  detail::ByteSet set(width);
  std::vector<std::uint32_t> action;
  std::vector<std::uint32_t> parent{FiniteQuotient::kNoParent};
  std::vector<std::uint32_t> parent_gen{0};
  set.insert(id.bytes().data());
  std::vector<std::uint8_t> buf(width);
  std::vector<std::uint8_t> cur(width);
  std::vector<std::uint32_t> scratch;
  for (std::size_t head = 0; head < set.size(); ++head) {
    std::memcpy(cur.data(), set.at(head), width);
    for (std::size_t j = 0; j < k; ++j) {
      Portrait::compose_raw(degree, level, cur.data(), generators[j].bytes().data(), buf.data(), scratch);
      auto [nid, inserted] = set.insert(buf.data());
      if (inserted) {
        if (set.size() > budget) throw BudgetExceeded("quotient enumeration at level " + std::to_string(level), set.size() - 1);
        parent.push_back(static_cast<std::uint32_t>(head));
        parent_gen.push_back(static_cast<std::uint32_t>(j));
      }
      action.push_back(nid);
    }
  }

  const std::size_t n = set.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return width != 0 && std::memcmp(set.at(a), set.at(b), width) < 0;
  });
  std::vector<std::uint32_t> rename(n);
  for (std::uint32_t i = 0; i < n; ++i) rename[order[i]] = i;

  FiniteQuotient q;
  q.degree_ = degree;
  q.level_ = level;
  q.width_ = width;
  q.generators_ = generators;
  q.letters_ = letters;
  q.arena_.resize(n * width);
  q.action_.resize(n * k);
  q.parent_.resize(n);
  q.parent_gen_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t old = order[i];
    if (width) std::memcpy(q.arena_.data() + static_cast<std::size_t>(i) * width, set.at(old), width);
    for (std::size_t j = 0; j < k; ++j) q.action_[i * k + j] = rename[action[old * k + j]];
    q.parent_[i] = parent[old] == FiniteQuotient::kNoParent ? FiniteQuotient::kNoParent : rename[parent[old]];
    q.parent_gen_[i] = parent_gen[old];
  }
  q.identity_ = rename[0];
  return q;
}

/// pi_n(G) for the group generated by the presentation's non-auxiliary generators.
inline FiniteQuotient enumerate_quotient(const WreathPresentation& pres, int n,
                                         std::size_t element_budget = default_element_budget()) {
  if (n < 0) throw DepthExceeded("quotient level must be nonnegative");
  PortraitEvaluator eval(pres);
  std::vector<Portrait> gens;
  std::vector<Letter> letters;
  for (std::uint32_t g : pres.active_generators()) {
    gens.push_back(eval.generator(g, n));
    letters.push_back(Letter{g, 1});
  }
  return close_portraits(pres.degree(), n, gens, letters, element_budget);
}

/// The depth-n portrait with permutation `perm` (0-based) at vertex v, identity elsewhere.
inline Portrait vertex_portrait(int degree, int depth, const Vertex& v, const std::vector<std::uint8_t>& perm) {
  Portrait id = Portrait::identity(degree, depth);
  std::vector<std::uint8_t> bytes(id.bytes().begin(), id.bytes().end());
  const std::size_t idx = detail::level_offset(degree, v.level()) + v.rank(degree);
  std::copy(perm.begin(), perm.end(), bytes.begin() + static_cast<std::ptrdiff_t>(idx * static_cast<std::size_t>(degree)));
  return Portrait::from_bytes(degree, depth, bytes);
}

/// Aut(T^n) generated by a transposition and a d-cycle placed at every internal vertex.
inline FiniteQuotient full_automorphism_quotient(int degree, int n,
                                                 std::size_t element_budget = default_element_budget()) {
  (void)TreeShape{degree};
  const std::size_t d = static_cast<std::size_t>(degree);
  std::vector<std::uint8_t> swap(d);
  std::vector<std::uint8_t> cycle(d);
  for (std::size_t x = 0; x < d; ++x) {
    swap[x] = static_cast<std::uint8_t>(x);
    cycle[x] = static_cast<std::uint8_t>((x + 1) % d);
  }
  std::swap(swap[0], swap[1]);
  std::vector<Portrait> gens;
  for (int k = 0; k < n; ++k) {
    for (const Vertex& v : level_vertices(TreeShape{degree}, k)) {
      gens.push_back(vertex_portrait(degree, n, v, swap));
      if (d > 2) gens.push_back(vertex_portrait(degree, n, v, cycle));
    }
  }
  return close_portraits(degree, n, gens, {}, element_budget);
}

/// Level-n permutation of a portrait as a rank table.
inline std::vector<std::uint32_t> level_permutation(const Portrait& p, int n) {
  const std::size_t count = detail::ipow(static_cast<std::size_t>(p.degree()), n);
  std::vector<std::uint32_t> out(count);
  for (std::size_t r = 0; r < count; ++r) out[r] = static_cast<std::uint32_t>(p.apply_rank(n, r));
  return out;
}

/// Whether the permutations generate a transitive action on a set of `count` points.
inline bool single_orbit(std::size_t count, const std::vector<std::vector<std::uint32_t>>& perms) {
  if (count == 0) return true;
  std::vector<bool> seen(count, false);
  std::vector<std::uint32_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::uint32_t x = stack.back();
    stack.pop_back();
    for (const auto& p : perms) {
      const std::uint32_t y = p[x];
      if (!seen[y]) {
        seen[y] = true;
        ++reached;
        stack.push_back(y);
      }
    }
  }
  return reached == count;
}

inline bool check_level_transitive(const FiniteQuotient& q) {
  std::vector<std::vector<std::uint32_t>> perms;
  for (const auto& g : q.generators()) perms.push_back(level_permutation(g, q.level()));
  return single_orbit(detail::ipow(static_cast<std::size_t>(q.degree()), q.level()), perms);
}

/// Transitivity on level n straight from the generator portraits, no enumeration.
inline bool level_transitive(const WreathPresentation& pres, int n) {
  PortraitEvaluator eval(pres);
  std::vector<std::vector<std::uint32_t>> perms;
  for (std::uint32_t g : pres.active_generators()) perms.push_back(level_permutation(eval.generator(g, n), n));
  return single_orbit(detail::ipow(static_cast<std::size_t>(pres.degree()), n), perms);
}

/// For each element of `upper`, the id of its truncation in `lower`.
inline std::vector<std::uint32_t> projection_map(const FiniteQuotient& upper, const FiniteQuotient& lower) {
  if (upper.degree() != lower.degree() || lower.level() > upper.level()) {
    throw DegreeMismatch("projection needs a lower level of the same degree");
  }
  std::vector<std::uint32_t> out(upper.size());
  for (std::size_t id = 0; id < upper.size(); ++id) {
    const auto prefix = upper.element_bytes(id).first(lower.element_width());
    const auto hit = lower.find(prefix);
    if (!hit) throw InternalInconsistency("truncation of a quotient element is missing from the lower quotient");
    out[id] = *hit;
  }
  return out;
}

/// Distinct truncations to level k of the elements, i.e. |pi_k| read off a higher level.
inline std::size_t truncated_order(const FiniteQuotient& q, int k) {
  const std::size_t w = detail::level_offset(q.degree(), k) * static_cast<std::size_t>(q.degree());
  detail::ByteSet set(w);
  for (std::size_t id = 0; id < q.size(); ++id) set.insert(q.element_bytes(id).data());
  return set.size();
}

}  // namespace arbor
