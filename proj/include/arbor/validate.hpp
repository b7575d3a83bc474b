#pragma once

// Consistency of a wreath recursion with the branch data of a PCF polynomial.
// A designation assigns a word g_p to every p in P_f cap K and to infinity.
//
//   (a) some ordering of the designated generators multiplies to 1
//   (b) the level-1 cycle type of g_p matches the local degrees over p
//   (c) g_inf is a d-cycle and g_inf^(d^n) has d-cycle labels on level n
//   (d) for a cycle of g_p of length e at x, (g_p^e)|_x is conjugate in
//       pi_depth(G) to g_q^(+-1) for the matching preimage q in P_f, and trivial
//       for preimages outside P_f

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "arbor/dynamics.hpp"
#include "arbor/error.hpp"
#include "arbor/presentation.hpp"
#include "arbor/quotient.hpp"
#include "arbor/tree.hpp"

namespace arbor {

struct DesignatedGenerator {
  ProjectivePoint point;
  GroupWord word;
};

/// JSON: [{"point": "-1" | "inf", "word": "a"}, ...]
struct Designation {
  std::vector<DesignatedGenerator> entries;

  static Designation from_json(const WreathPresentation& pres, const FieldPtr& field, const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("designation must be an array");
    Designation out;
    try {
      for (const auto& e : j) {
        const auto& pt = e.at("point");
        ProjectivePoint p = pt.is_string() && pt.get<std::string>() == "inf"
                                ? ProjectivePoint::infinity()
                                : ProjectivePoint::affine(FieldElement::from_json(field, pt));
        out.entries.push_back({std::move(p), pres.parse_word(e.at("word"))});
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("designation JSON: ") + e.what());
    }
    return out;
  }

  nlohmann::json to_json(const WreathPresentation& pres) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries) j.push_back({{"point", e.point.str()}, {"word", pres.format_word(e.word)}});
    return j;
  }

  const DesignatedGenerator* find(const ProjectivePoint& p) const {
    for (const auto& e : entries) {
      if (e.point == p) return &e;
    }
    return nullptr;
  }
};

struct ClauseResult {
  std::string clause;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  int depth = 0;
  std::vector<ClauseResult> clauses;

  bool pass() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const ClauseResult& c) { return c.pass; });
  }
  const ClauseResult* first_failure() const {
    for (const auto& c : clauses) {
      if (!c.pass) return &c;
    }
    return nullptr;
  }
  nlohmann::json to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : clauses) cs.push_back({{"clause", c.clause}, {"pass", c.pass}, {"detail", c.detail}});
    return {{"depth", depth}, {"pass", pass()}, {"clauses", cs}};
  }
};

namespace detail {

inline std::vector<std::size_t> cycle_lengths(std::span<const std::uint8_t> perm) {
  std::vector<std::size_t> out;
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t x = 0; x < perm.size(); ++x) {
    if (seen[x]) continue;
    std::size_t len = 0;
    for (std::size_t y = x; !seen[y]; y = perm[y]) {
      seen[y] = true;
      ++len;
    }
    out.push_back(len);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Portrait portrait_power(const Portrait& p, std::size_t k) {
  Portrait result = Portrait::identity(p.degree(), p.depth());
  Portrait base = p;
  while (k > 0) {
    if (k & 1U) result = compose(result, base);
    base = compose(base, base);
    k >>= 1U;
  }
  return result;
}

/// Conjugacy class of x in the group generated by `gens` (all same depth).
inline std::unordered_set<std::string> conjugacy_class(const Portrait& x, const std::vector<Portrait>& gens) {
  std::unordered_set<std::string> seen{x.key()};
  std::deque<Portrait> queue{x};
  std::vector<Portrait> inv;
  for (const auto& g : gens) inv.push_back(invert(g));
  while (!queue.empty()) {
    const Portrait cur = std::move(queue.front());
    queue.pop_front();
    for (std::size_t i = 0; i < gens.size(); ++i) {
      Portrait next = compose(compose(inv[i], cur), gens[i]);
      if (seen.insert(next.key()).second) queue.push_back(std::move(next));
    }
  }
  return seen;
}

struct PreimageSlot {
  std::size_t length;
  std::optional<ProjectivePoint> q;  // set iff q is in P_f (or infinity)
  std::string label;
};

inline bool match_slots(const std::vector<std::size_t>& cycle_len, const std::vector<std::vector<bool>>& ok,
                        std::vector<bool>& used, std::size_t i) {
  if (i == cycle_len.size()) return true;
  for (std::size_t s = 0; s < used.size(); ++s) {
    if (used[s] || !ok[i][s]) continue;
    used[s] = true;
    if (match_slots(cycle_len, ok, used, i + 1)) return true;
    used[s] = false;
  }
  return false;
}

}  // namespace detail

/// Runs all four clauses and reports each. Clause (d) enumerates pi_depth(G).
inline ValidationReport check_recursion_against_polynomial(const WreathPresentation& pres, const Designation& des,
                                                           const PolynomialMap& f, const CriticalData& crit,
                                                           const PostCriticalSet& P, int depth,
                                                           std::size_t budget = default_element_budget()) {
  if (!P.pcf) throw NotPCF("validation needs a post-critically finite map");
  if (depth < 1) throw DepthExceeded("validation depth must be >= 1");
  if (pres.degree() != f.degree()) throw DegreeMismatch("presentation degree differs from polynomial degree");
  std::vector<ProjectivePoint> points;
  for (const auto& p : P.points) points.push_back(ProjectivePoint::affine(p));
  points.push_back(ProjectivePoint::infinity());
  std::vector<const DesignatedGenerator*> gens;
  for (const auto& p : points) {
    const auto* g = des.find(p);
    if (!g) throw SchemaError("no generator designated for post-critical point " + p.str());
    gens.push_back(g);
  }
  const int d = f.degree();
  ValidationReport report;
  report.depth = depth;
  PortraitEvaluator eval(pres);

  // (a)
  {
    ClauseResult r{"a", false, ""};
    std::vector<std::size_t> order(gens.size());
    std::iota(order.begin(), order.end(), 0);
    bool undecided = false;
    do {
      GroupWord prod;
      for (auto i : order) prod = prod * gens[i]->word;
      try {
        if (is_trivial(pres, prod, 100'000)) {
          r.pass = true;
          std::string seq;
          for (auto i : order) seq += (seq.empty() ? "" : " * ") + std::string("g_") + points[i].str();
          r.detail = seq + " = 1";
          break;
        }
      } catch (const BudgetExceeded&) {
        undecided = true;
      }
    } while (std::next_permutation(order.begin() + 1, order.end()));
    if (!r.pass) r.detail = undecided ? "no ordering verified trivial (some undecided within budget)" : "no ordering multiplies to 1";
    report.clauses.push_back(r);
  }

  // Preimage slots over every designated point.
  std::vector<std::vector<detail::PreimageSlot>> slots(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].is_infinity()) {
      slots[i].push_back({static_cast<std::size_t>(d), ProjectivePoint::infinity(), "inf"});
      continue;
    }
    const auto pre = preimages(f, crit, P, *points[i].value);
    for (const auto& [q, e] : pre.listed) {
      const bool in_p = detail::set_contains(P.points, q);
      slots[i].push_back({static_cast<std::size_t>(local_degree(f, q)),
                          in_p ? std::optional<ProjectivePoint>(ProjectivePoint::affine(q)) : std::nullopt, q.str()});
    }
    for (int k = pre.listed_degree; k < d; ++k) slots[i].push_back({1, std::nullopt, "unlisted"});
  }

  // (b)
  {
    ClauseResult r{"b", true, ""};
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto got = detail::cycle_lengths(eval.word(gens[i]->word, 1).label(0));
      std::vector<std::size_t> want;
      for (const auto& s : slots[i]) want.push_back(s.length);
      std::sort(want.begin(), want.end());
      if (got != want) {
        r.pass = false;
        r.detail = "cycle type of g_" + points[i].str() + " does not match local degrees over it";
        break;
      }
    }
    report.clauses.push_back(r);
  }

  // (c)
  {
    ClauseResult r{"c", true, ""};
    const Portrait ginf = eval.word(gens.back()->word, depth);
    std::size_t power = 1;
    for (int n = 0; n < depth && r.pass; ++n) {
      const Portrait h = detail::portrait_power(ginf, power).truncate(n + 1);
      if (!h.truncate(n).is_identity()) {
        r.pass = false;
        r.detail = "g_inf^" + std::to_string(power) + " moves a vertex of level " + std::to_string(n);
        break;
      }
      for (const Vertex& v : level_vertices(pres.shape(), n)) {
        const auto lens = detail::cycle_lengths(h.label(v));
        if (lens.size() != 1) {
          r.pass = false;
          r.detail = "g_inf^" + std::to_string(power) + " has a non-d-cycle label at " + (v.is_root() ? std::string("root") : v.str());
          break;
        }
      }
      power *= static_cast<std::size_t>(d);
    }
    report.clauses.push_back(r);
  }

  // (d)
  {
    ClauseResult r{"d", true, ""};
    const FiniteQuotient Q = enumerate_quotient(pres, depth, budget);
    std::vector<std::unordered_set<std::string>> classes(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Portrait g = eval.word(gens[i]->word, depth);
      classes[i] = detail::conjugacy_class(g, Q.generators());
      for (const auto& k : detail::conjugacy_class(invert(g), Q.generators())) classes[i].insert(k);
    }
    auto index_of = [&](const ProjectivePoint& q) {
      for (std::size_t j = 0; j < points.size(); ++j) {
        if (points[j] == q) return j;
      }
      throw InternalInconsistency("post-critical preimage without a designated generator");
    };
    for (std::size_t i = 0; i < points.size() && r.pass; ++i) {
      const Portrait g = eval.word(gens[i]->word, depth + 1);
      const auto root = g.label(0);
      std::vector<std::size_t> cycle_len;
      std::vector<Portrait> sections;
      std::vector<bool> seen(static_cast<std::size_t>(d), false);
      for (std::size_t x = 0; x < static_cast<std::size_t>(d); ++x) {
        if (seen[x]) continue;
        std::size_t len = 0;
        for (std::size_t y = x; !seen[y]; y = root[y]) {
          seen[y] = true;
          ++len;
        }
        cycle_len.push_back(len);
        sections.push_back(detail::portrait_power(g, len).section(Vertex({static_cast<int>(x) + 1})));
      }
      std::vector<std::vector<bool>> ok(cycle_len.size(), std::vector<bool>(slots[i].size(), false));
      for (std::size_t c = 0; c < cycle_len.size(); ++c) {
        for (std::size_t s = 0; s < slots[i].size(); ++s) {
          const auto& slot = slots[i][s];
          if (slot.length != cycle_len[c]) continue;
          ok[c][s] = slot.q ? classes[index_of(*slot.q)].count(sections[c].key()) > 0 : sections[c].is_identity();
        }
      }
      std::vector<bool> used(slots[i].size(), false);
      if (!detail::match_slots(cycle_len, ok, used, 0)) {
        r.pass = false;
        r.detail = "sections of powers of g_" + points[i].str() + " do not match the generators over its preimages";
      }
    }
    report.clauses.push_back(r);
  }
  return report;
}

/// Throws ValidationFailure naming the first violated clause.
inline ValidationReport validate_recursion_against_polynomial(const WreathPresentation& pres, const Designation& des,
                                                              const PolynomialMap& f, const CriticalData& crit,
                                                              const PostCriticalSet& P, int depth,
                                                              std::size_t budget = default_element_budget()) {
  ValidationReport report = check_recursion_against_polynomial(pres, des, f, crit, P, depth, budget);
  if (const auto* bad = report.first_failure()) throw ValidationFailure(bad->clause, bad->detail);
  return report;
}

}  // namespace arbor
