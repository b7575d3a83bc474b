#pragma once

// Structural certificates: fractality, super strong fractality, subtree
// transitivity of level stabilizers, mixing certificates, the K_G diagnostic
// and the pseudomixing counting identity.
//
// The workhorse is stabilizer_section_image, which never enumerates the deep
// quotient. G acts on pairs (pi_n(g), v^g) by right multiplication; the
// stabilizer of the base pair is St_G(n) cap st_G(v), and Schreier's lemma
// gives generators for it from a transversal of the (small) orbit. Their
// sections at v, truncated to depth m, generate St_G(n)_v^m.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/presentation.hpp"
#include "arbor/quotient.hpp"
#include "arbor/rational.hpp"
#include "arbor/tree.hpp"

namespace arbor {

/// Schreier generators of St_G(n) cap st_G(v) as depth-`depth` portraits,
/// depth >= max(n, |v|). Orbit size is capped by `budget`.
inline std::vector<Portrait> stabilizer_generators(const WreathPresentation& pres, int n, const Vertex& v, int depth,
                                                   std::size_t budget, std::size_t* orbit_size = nullptr) {
  v.validate(pres.shape());
  if (depth < n || depth < v.level()) throw DepthExceeded("stabilizer generators need depth >= max(n, |v|)");
  const int d = pres.degree();
  PortraitEvaluator eval(pres);
  std::vector<Portrait> gens;
  for (std::uint32_t g : pres.active_generators()) gens.push_back(eval.generator(g, depth));

  const std::size_t prefix = detail::level_offset(d, n) * static_cast<std::size_t>(d);
  const bool track_vertex = v.level() > n;
  const std::size_t vrank = v.rank(d);
  auto point_of = [&](const Portrait& p) {
    std::string key(reinterpret_cast<const char*>(p.bytes().data()), prefix);
    if (track_vertex) {
      const std::size_t r = p.apply_rank(v.level(), vrank);
      key.append(reinterpret_cast<const char*>(&r), sizeof r);
    }
    return key;
  };

  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<Portrait> transversal;
  std::vector<Portrait> inverses;
  const Portrait id = Portrait::identity(d, depth);
  index.emplace(point_of(id), 0);
  transversal.push_back(id);
  inverses.push_back(id);
  std::set<std::string> seen_keys;
  std::vector<Portrait> out;
  for (std::size_t head = 0; head < transversal.size(); ++head) {
    for (const Portrait& s : gens) {
      Portrait q = compose(transversal[head], s);
      const std::string pt = point_of(q);
      const auto it = index.find(pt);
      if (it == index.end()) {
        if (transversal.size() >= budget) throw BudgetExceeded("stabilizer orbit", transversal.size());
        index.emplace(pt, static_cast<std::uint32_t>(transversal.size()));
        inverses.push_back(invert(q));
        transversal.push_back(std::move(q));
        continue;
      }
      Portrait h = compose(q, inverses[it->second]);
      if (h.is_identity()) continue;
      if (seen_keys.insert(h.key()).second) out.push_back(std::move(h));
    }
  }
  if (orbit_size) *orbit_size = transversal.size();
  return out;
}

/// St_G(n)_v^m = {pi_m(g|_v) : g in St_G(n), v^g = v} as a closed subgroup of Aut(T^m).
inline FiniteQuotient stabilizer_section_image(const WreathPresentation& pres, int n, const Vertex& v, int m,
                                               std::size_t budget = default_element_budget()) {
  const int depth = std::max(n, v.level() + m);
  const auto schreier = stabilizer_generators(pres, n, v, depth, budget);
  std::vector<Portrait> images;
  std::set<std::string> keys;
  for (const Portrait& h : schreier) {
    Portrait s = h.section(v).truncate(m);
    if (!s.is_identity() && keys.insert(s.key()).second) images.push_back(std::move(s));
  }
  return close_portraits(pres.degree(), m, images, {}, budget);
}

/// Whether two quotients at the same level hold the same element set.
inline bool same_elements(const FiniteQuotient& a, const FiniteQuotient& b) {
  if (a.size() != b.size() || a.level() != b.level() || a.degree() != b.degree()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::equal(a.element_bytes(i).begin(), a.element_bytes(i).end(), b.element_bytes(i).begin())) return false;
  }
  return true;
}

struct VertexProjectionReport {
  bool pass = true;
  bool level_transitive = true;
  int transitivity_level = 0;
  std::size_t target_order = 0;
  std::size_t vertices_checked = 0;
  std::optional<Vertex> first_failure;
  std::size_t failure_image_order = 0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"pass", pass},
                        {"level_transitive", level_transitive},
                        {"transitivity_checked_to_level", transitivity_level},
                        {"target_order", target_order},
                        {"vertices_checked", vertices_checked}};
    if (first_failure) {
      j["first_failure"] = first_failure->str();
      j["failure_image_order"] = failure_image_order;
    }
    return j;
  }
};

namespace detail {

inline VertexProjectionReport projection_sweep(const WreathPresentation& pres, int level_bound, int m, bool stabilizer,
                                               std::size_t budget) {
  VertexProjectionReport r;
  r.transitivity_level = level_bound + m;
  r.level_transitive = level_transitive(pres, r.transitivity_level);
  const FiniteQuotient target = enumerate_quotient(pres, m, budget);
  r.target_order = target.size();
  for (int k = stabilizer ? 1 : 0; k <= level_bound; ++k) {
    for (const Vertex& v : level_vertices(pres.shape(), k)) {
      const FiniteQuotient image = stabilizer_section_image(pres, stabilizer ? k : 0, v, m, budget);
      ++r.vertices_checked;
      if (!same_elements(image, target)) {
        r.pass = false;
        r.first_failure = v;
        r.failure_image_order = image.size();
        return r;
      }
    }
  }
  r.pass = r.pass && r.level_transitive;
  return r;
}

}  // namespace detail

/// G_v^m = pi_m(G) for all |v| <= level_bound, plus transitivity on level level_bound + m.
inline VertexProjectionReport check_fractal(const WreathPresentation& pres, int level_bound, int m,
                                            std::size_t budget = default_element_budget()) {
  return detail::projection_sweep(pres, level_bound, m, false, budget);
}

/// St_G(n)_v^m = pi_m(G) for 1 <= n <= level_bound and every v at level n.
inline VertexProjectionReport check_super_strongly_fractal(const WreathPresentation& pres, int level_bound, int m,
                                                           std::size_t budget = default_element_budget()) {
  return detail::projection_sweep(pres, level_bound, m, true, budget);
}

/// Whether St_G(n) is transitive on the level-`depth` descendants of every
/// level-n vertex, computed from Schreier generators of St_G(n).
inline bool subtree_transitivity(const WreathPresentation& pres, int n, int depth,
                                 std::size_t budget = default_element_budget()) {
  if (n < 0 || depth < 0) throw DepthExceeded("negative level");
  const int d = pres.degree();
  const int total = n + depth;
  const auto gens = stabilizer_generators(pres, n, Vertex{}, total, budget);
  const std::size_t count = detail::ipow(static_cast<std::size_t>(d), total);
  const std::size_t block = detail::ipow(static_cast<std::size_t>(d), depth);
  std::vector<std::uint32_t> parent(count);
  std::iota(parent.begin(), parent.end(), 0u);
  auto root = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Portrait& g : gens) {
    for (std::size_t r = 0; r < count; ++r) {
      const auto a = root(static_cast<std::uint32_t>(r));
      const auto b = root(static_cast<std::uint32_t>(g.apply_rank(total, r)));
      if (a != b) parent[a] = b;
    }
  }
  for (std::size_t r = 0; r < count; ++r) {
    if (root(static_cast<std::uint32_t>(r)) != root(static_cast<std::uint32_t>((r / block) * block))) return false;
  }
  return true;
}

/// Shortest positive word (up to max_length) whose depth-`depth` portrait is a
/// single cycle on level `depth`.
inline std::optional<GroupWord> find_level_transitive_element(const WreathPresentation& pres, int depth, int max_length) {
  const auto active = pres.active_generators();
  if (active.empty()) return std::nullopt;
  PortraitEvaluator eval(pres);
  const std::size_t count = detail::ipow(static_cast<std::size_t>(pres.degree()), depth);
  std::vector<std::size_t> digits;
  for (int len = 1; len <= max_length; ++len) {
    digits.assign(static_cast<std::size_t>(len), 0);
    while (true) {
      std::vector<Letter> letters;
      for (auto x : digits) letters.push_back(Letter{active[x], 1});
      GroupWord w(std::move(letters));
      const Portrait p = eval.word(w, depth);
      std::size_t r = 0;
      std::size_t steps = 0;
      do {
        r = p.apply_rank(depth, r);
        ++steps;
      } while (r != 0 && steps <= count);
      if (steps == count) return w;
      std::size_t i = 0;
      while (i < digits.size() && ++digits[i] == active.size()) digits[i++] = 0;
      if (i == digits.size()) break;
    }
  }
  return std::nullopt;
}

struct MixingCertificate {
  int n = 0;
  int m = 0;
  int N = 0;
  struct VertexVerdict {
    Vertex v;
    std::size_t image_order = 0;
    bool pass = false;
  };
  std::vector<VertexVerdict> vertices;
  std::size_t target_order = 0;
  /// transitivity[k-1]: St_G(k) transitive below level k down to level n+N+m.
  std::vector<bool> transitivity;
  std::string transitivity_method;
  std::optional<GroupWord> transitive_witness;
  bool pass = false;

  std::string scope() const {
    return "condition (ii) checked for every vertex at level exactly " + std::to_string(n + N) + " with m=" +
           std::to_string(m) + "; condition (i) checked for levels 1.." + std::to_string(n + N) +
           " down to level " + std::to_string(n + N + m) + "; deeper vertices and larger m are not certified";
  }

  nlohmann::json to_json(const WreathPresentation& pres) const {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& vv : vertices) {
      verts.push_back({{"vertex", vv.v.str()}, {"image_order", vv.image_order}, {"pass", vv.pass}});
    }
    nlohmann::json j = {{"n", n},
                        {"m", m},
                        {"N", N},
                        {"pass", pass},
                        {"target_order", target_order},
                        {"vertices", verts},
                        {"subtree_transitivity", transitivity},
                        {"transitivity_method", transitivity_method},
                        {"scope", scope()}};
    if (transitive_witness) j["transitive_witness"] = pres.format_word(*transitive_witness);
    return j;
  }
};

/// Finite certificate for the mixing definition at parameters (n, m, N).
inline MixingCertificate check_mixing_certificate(const WreathPresentation& pres, int n, int m, int N,
                                                  std::size_t budget = default_element_budget()) {
  if (n < 1 || m < 1 || N < 0) throw DepthExceeded("mixing certificate needs n, m >= 1 and N >= 0");
  MixingCertificate c;
  c.n = n;
  c.m = m;
  c.N = N;
  const FiniteQuotient target = enumerate_quotient(pres, m, budget);
  c.target_order = target.size();
  bool ok = true;
  for (const Vertex& v : level_vertices(pres.shape(), n + N)) {
    const FiniteQuotient image = stabilizer_section_image(pres, n, v, m, budget);
    const bool pass = same_elements(image, target);
    ok = ok && pass;
    c.vertices.push_back({v, image.size(), pass});
  }
  const int total = n + N + m;
  // g a single cycle on level `total` => g^(d^k) lies in St_G(k) and is
  // transitive below every level-k vertex down to level `total`.
  c.transitive_witness = find_level_transitive_element(pres, total, 6);
  if (c.transitive_witness) {
    c.transitivity_method = "powers of a level-transitive element";
    c.transitivity.assign(static_cast<std::size_t>(n + N), true);
  } else {
    c.transitivity_method = "Schreier generators of level stabilizers";
    for (int k = 1; k <= n + N; ++k) c.transitivity.push_back(subtree_transitivity(pres, k, total - k, budget));
  }
  for (bool t : c.transitivity) ok = ok && t;
  c.pass = ok;
  return c;
}

/// Intersection over j = 1..L of St_G(j)_{1^j}^m: a subgroup of pi_m(G) that
/// over-approximates pi_m(K_G) and shrinks as L grows.
struct KgReport {
  int L = 0;
  int m = 0;
  std::size_t group_order = 0;
  std::vector<std::string> keys;  // sorted canonical keys
  std::size_t order() const { return keys.size(); }
  std::size_t index() const { return keys.empty() ? 0 : group_order / keys.size(); }
  std::vector<std::size_t> orders_by_level;

  nlohmann::json to_json() const {
    return {{"L", L},
            {"m", m},
            {"group_order", group_order},
            {"subgroup_order", order()},
            {"index", index()},
            {"orders_by_level", orders_by_level}};
  }
};

inline KgReport kg_depth(const WreathPresentation& pres, int L, int m, std::size_t budget = default_element_budget()) {
  if (L < 1 || m < 0) throw DepthExceeded("kg_depth needs L >= 1 and m >= 0");
  KgReport r;
  r.L = L;
  r.m = m;
  r.group_order = enumerate_quotient(pres, m, budget).size();
  std::vector<std::string> cur;
  for (int j = 1; j <= L; ++j) {
    const FiniteQuotient image = stabilizer_section_image(pres, j, Vertex(std::vector<int>(static_cast<std::size_t>(j), 1)), m, budget);
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < image.size(); ++i) keys.push_back(image.element(i).key());
    if (j == 1) {
      cur = std::move(keys);
    } else {
      std::vector<std::string> both;
      std::set_intersection(cur.begin(), cur.end(), keys.begin(), keys.end(), std::back_inserter(both));
      cur = std::move(both);
    }
    r.orders_by_level.push_back(cur.size());
  }
  r.keys = std::move(cur);
  return r;
}

struct PseudomixingReport {
  int n = 0;
  int m = 0;
  Vertex u;
  Vertex w;
  std::size_t big_order = 0;    // |pi_{|v|+m}(G)|
  std::size_t order_n = 0;      // |pi_n(G)|
  std::size_t order_m = 0;      // |pi_m(G)|
  Rational expected;            // |pi_{|v|+m}| / (|pi_n| |pi_m| d^{|w|})
  std::vector<std::size_t> counts;  // counts[a * order_m + b]
  Rational max_deviation;
  bool level_transitive = false;
  bool pass = false;

  nlohmann::json to_json() const {
    std::size_t lo = counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
    std::size_t hi = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    nlohmann::json j = {{"n", n},
                        {"m", m},
                        {"u", u.str()},
                        {"w", w.str()},
                        {"order_total", big_order},
                        {"order_n", order_n},
                        {"order_m", order_m},
                        {"expected_count", to_string(expected)},
                        {"expected_count_float", to_double(expected)},
                        {"min_count", lo},
                        {"max_count", hi},
                        {"max_deviation", to_string(max_deviation)},
                        {"max_deviation_float", to_double(max_deviation)},
                        {"level_transitive", level_transitive},
                        {"pass", pass}};
    if (!level_transitive) j["note"] = "group is not level-transitive; the identity's hypotheses are unmet";
    return j;
  }
};

/// Exact cone-pair counts #{g : pi_n(g) = a, w^{g|_u} = w, pi_m(g|_{uw}) = b}
/// in pi_{|uw|+m}(G), compared with the product formula.
inline PseudomixingReport verify_pseudomixing(const WreathPresentation& pres, int n, int m, const Vertex& u,
                                              const Vertex& w, std::size_t budget = default_element_budget()) {
  if (u.level() != n) throw DepthExceeded("verify_pseudomixing: |u| must equal n");
  u.validate(pres.shape());
  w.validate(pres.shape());
  const Vertex v = u + w;
  const int top = v.level() + m;
  PseudomixingReport r;
  r.n = n;
  r.m = m;
  r.u = u;
  r.w = w;
  const FiniteQuotient big = enumerate_quotient(pres, top, budget);
  const FiniteQuotient qn = enumerate_quotient(pres, n, budget);
  const FiniteQuotient qm = enumerate_quotient(pres, m, budget);
  r.big_order = big.size();
  r.order_n = qn.size();
  r.order_m = qm.size();
  r.level_transitive = level_transitive(pres, top);
  const auto proj = projection_map(big, qn);
  r.counts.assign(qn.size() * qm.size(), 0);
  const int d = pres.degree();
  for (std::size_t id = 0; id < big.size(); ++id) {
    const Portrait g = big.element(id);
    const Vertex ug = g.apply(u);
    if (g.apply(v) != ug + w) continue;  // w^{g|_u} = w
    const auto b = qm.find(g.section(v).truncate(m));
    if (!b) throw InternalInconsistency("section image missing from pi_m(G)");
    ++r.counts[proj[id] * qm.size() + *b];
  }
  r.expected = Rational(Integer(r.big_order), Integer(r.order_n) * Integer(r.order_m) *
                                                   Integer(detail::ipow(static_cast<std::size_t>(d), w.level())));
  r.max_deviation = 0;
  for (auto c : r.counts) {
    Rational dev = Rational(Integer(c)) - r.expected;
    if (dev < 0) dev = -dev;
    if (dev > r.max_deviation) r.max_deviation = dev;
  }
  r.pass = r.level_transitive && r.max_deviation == 0;
  return r;
}

}  // namespace arbor
