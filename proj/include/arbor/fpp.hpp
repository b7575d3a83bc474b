#pragma once

// Fixed-point process X_n and fixer proportions mu(X_n >= 1): exact tables on
// enumerated quotients, the martingale fiber test, the exact Aut(T) recursion
// and Monte-Carlo estimates.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/presentation.hpp"
#include "arbor/quotient.hpp"
#include "arbor/rational.hpp"
#include "arbor/tree.hpp"

namespace arbor {

struct FixedPointLevel {
  int level = 0;
  std::size_t group_order = 0;
  std::vector<std::size_t> histogram;  // histogram[x] = #{a : X_n(a) = x}, x = 0..d^n
  std::size_t fixers = 0;

  Rational proportion() const { return Rational(Integer(fixers), Integer(group_order)); }
  Rational mean() const {
    Integer total = 0;
    for (std::size_t x = 0; x < histogram.size(); ++x) total += Integer(x) * Integer(histogram[x]);
    return Rational(total, Integer(group_order));
  }
};

struct FixedPointTable {
  std::vector<FixedPointLevel> levels;
  bool truncated = false;  // a requested level exceeded the budget
  int requested = 0;
  std::size_t partial_count = 0;

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& l : levels) {
      const Rational p = l.proportion();
      nlohmann::json hist = nlohmann::json::object();
      for (std::size_t x = 0; x < l.histogram.size(); ++x) {
        if (l.histogram[x]) hist[std::to_string(x)] = l.histogram[x];
      }
      rows.push_back({{"level", l.level},
                      {"group_order", l.group_order},
                      {"fixers", l.fixers},
                      {"proportion", to_string(p)},
                      {"proportion_float", to_double(p)},
                      {"mean_fixed_points", to_string(l.mean())},
                      {"histogram", hist}});
    }
    nlohmann::json j = {{"levels", rows}, {"requested_levels", requested}, {"truncated", truncated}};
    if (truncated) j["budget_partial_count"] = partial_count;
    if (!levels.empty()) {
      j["fpp_upper_bound"] = to_string(levels.back().proportion());
      j["fpp_upper_bound_float"] = to_double(levels.back().proportion());
    }
    return j;
  }

  /// level,group_order,fixers,proportion_num,proportion_den,proportion_float
  std::string to_csv() const {
    std::ostringstream out;
    out << "level,group_order,fixers,proportion_num,proportion_den,proportion_float\n";
    for (const auto& l : levels) {
      const Rational p = l.proportion();
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", to_double(p));
      out << l.level << ',' << l.group_order << ',' << l.fixers << ',' << numerator_of(p) << ','
          << denominator_of(p) << ',' << buf << '\n';
    }
    return out.str();
  }
};

/// X_n histogram over the elements of a quotient of level >= n.
inline FixedPointLevel fixed_point_level(const FiniteQuotient& q, int n) {
  if (n > q.level()) throw DepthExceeded("fixed-point level beyond quotient level");
  FixedPointLevel l;
  l.level = n;
  l.group_order = q.size();
  l.histogram.assign(detail::ipow(static_cast<std::size_t>(q.degree()), n) + 1, 0);
  for (std::size_t id = 0; id < q.size(); ++id) {
    const std::size_t x = q.element(id).fixed_count(n);
    ++l.histogram[x];
    if (x > 0) ++l.fixers;
  }
  return l;
}

/// Exact rows for levels 1..n_max; stops at the last level within the budget.
inline FixedPointTable fixed_point_table(const WreathPresentation& pres, int n_max,
                                         std::size_t budget = default_element_budget()) {
  FixedPointTable t;
  t.requested = n_max;
  for (int n = 1; n <= n_max; ++n) {
    try {
      const FiniteQuotient q = enumerate_quotient(pres, n, budget);
      t.levels.push_back(fixed_point_level(q, n));
    } catch (const BudgetExceeded& e) {
      t.truncated = true;
      t.partial_count = e.partial();
      break;
    }
  }
  return t;
}

/// Same table for an explicitly enumerated family (e.g. Aut(T^n)).
template <class Enumerate>
FixedPointTable fixed_point_table_from(Enumerate&& enumerate, int n_max) {
  FixedPointTable t;
  t.requested = n_max;
  for (int n = 1; n <= n_max; ++n) {
    try {
      t.levels.push_back(fixed_point_level(enumerate(n), n));
    } catch (const BudgetExceeded& e) {
      t.truncated = true;
      t.partial_count = e.partial();
      break;
    }
  }
  return t;
}

struct MartingaleReport {
  int level = 0;
  std::size_t order_n = 0;
  std::size_t order_next = 0;
  std::vector<Rational> conditional_means;  // E[X_{n+1} | fiber of a], by id in pi_n
  std::vector<std::size_t> fixed_counts;    // X_n(a)
  Rational max_deviation;
  bool pass = false;

  nlohmann::json to_json() const {
    std::size_t failing = 0;
    for (std::size_t a = 0; a < conditional_means.size(); ++a) {
      if (conditional_means[a] != Rational(Integer(fixed_counts[a]))) ++failing;
    }
    return {{"level", level},
            {"order_n", order_n},
            {"order_next", order_next},
            {"max_deviation", to_string(max_deviation)},
            {"max_deviation_float", to_double(max_deviation)},
            {"failing_fibers", failing},
            {"pass", pass}};
  }
};

inline MartingaleReport martingale_fiber_check(const WreathPresentation& pres, int n,
                                               std::size_t budget = default_element_budget()) {
  if (n < 1) throw DepthExceeded("martingale check needs n >= 1");
  const FiniteQuotient lower = enumerate_quotient(pres, n, budget);
  const FiniteQuotient upper = enumerate_quotient(pres, n + 1, budget);
  const auto proj = projection_map(upper, lower);
  MartingaleReport r;
  r.level = n;
  r.order_n = lower.size();
  r.order_next = upper.size();
  std::vector<Integer> sums(lower.size(), 0);
  std::vector<std::size_t> sizes(lower.size(), 0);
  for (std::size_t id = 0; id < upper.size(); ++id) {
    sums[proj[id]] += upper.element(id).fixed_count(n + 1);
    ++sizes[proj[id]];
  }
  r.max_deviation = 0;
  for (std::size_t a = 0; a < lower.size(); ++a) {
    const std::size_t x = lower.element(a).fixed_count(n);
    const Rational mean(sums[a], Integer(sizes[a]));
    Rational dev = mean - Rational(Integer(x));
    if (dev < 0) dev = -dev;
    if (dev > r.max_deviation) r.max_deviation = dev;
    r.conditional_means.push_back(mean);
    r.fixed_counts.push_back(x);
  }
  r.pass = r.max_deviation == 0;
  return r;
}

/// mu(X_{n+m} = r | X_n = r) for every r with mu(X_n = r) > 0, from pi_{n+m}.
/// Tabulated only; no target values are asserted anywhere.
inline std::vector<std::pair<std::size_t, Rational>> stay_probabilities(const WreathPresentation& pres, int n, int m,
                                                                        std::size_t budget = default_element_budget()) {
  const FiniteQuotient q = enumerate_quotient(pres, n + m, budget);
  std::vector<std::size_t> total(detail::ipow(static_cast<std::size_t>(pres.degree()), n) + 1, 0);
  std::vector<std::size_t> stay(total.size(), 0);
  for (std::size_t id = 0; id < q.size(); ++id) {
    const Portrait g = q.element(id);
    const std::size_t r = g.fixed_count(n);
    ++total[r];
    if (g.fixed_count(n + m) == r) ++stay[r];
  }
  std::vector<std::pair<std::size_t, Rational>> out;
  for (std::size_t r = 0; r < total.size(); ++r) {
    if (total[r]) out.emplace_back(r, Rational(Integer(stay[r]), Integer(total[r])));
  }
  return out;
}

/// Derangement numbers D_0..D_d.
inline std::vector<Integer> derangements(int d) {
  std::vector<Integer> D(static_cast<std::size_t>(d) + 1);
  D[0] = 1;
  if (d >= 1) D[1] = 0;
  for (int j = 2; j <= d; ++j) D[static_cast<std::size_t>(j)] = Integer(j - 1) * (D[static_cast<std::size_t>(j - 1)] + D[static_cast<std::size_t>(j - 2)]);
  return D;
}

inline Integer factorial(int d) {
  Integer f = 1;
  for (int i = 2; i <= d; ++i) f *= i;
  return f;
}

inline Integer binomial(int n, int k) {
  Integer r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct AutTreeLevel {
  int level = 0;
  std::optional<Rational> exact;  // p_n when the denominator stayed under the cap
  Rational lower;                 // rigorous enclosure lower <= p_n <= upper
  Rational upper;
};

struct AutTreeFpp {
  int degree = 2;
  std::vector<AutTreeLevel> levels;  // levels[0] is n = 0
  int exact_through = 0;
  /// Largest n such that p_0 > p_1 > ... > p_n is certified by the enclosures.
  int strictly_decreasing_through = 0;

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& l : levels) {
      nlohmann::json row = {{"level", l.level}};
      if (l.exact) {
        row["p"] = to_string(*l.exact);
        row["p_float"] = to_double(*l.exact);
      } else {
        row["p_lower_float"] = to_double(l.lower);
        row["p_upper_float"] = to_double(l.upper);
      }
      rows.push_back(std::move(row));
    }
    return {{"degree", degree},
            {"levels", rows},
            {"exact_through", exact_through},
            {"strictly_decreasing_through", strictly_decreasing_through}};
  }
};

/// p_n = mu(X_n >= 1) for Haar measure on Aut(T) via
/// q_{n+1} = (1/d!) sum_k C(d,k) D_{d-k} q_n^k, p_n = 1 - q_n, q_0 = 0.
/// Exact while the denominator of q_n has at most `exact_bits` bits; after that
/// the recursion runs on dyadic enclosures with `precision_bits` fractional
/// bits, rounding outward (the map is increasing on [0, 1]).
inline AutTreeFpp aut_tree_fpp(int d, int n_max, std::size_t exact_bits = 4096, unsigned precision_bits = 256) {
  (void)TreeShape{d};
  if (n_max < 0) throw InvalidArgument("n_max must be nonnegative");
  const auto D = derangements(d);
  const Integer fact = factorial(d);
  std::vector<Integer> coef(static_cast<std::size_t>(d) + 1);
  for (int k = 0; k <= d; ++k) coef[static_cast<std::size_t>(k)] = binomial(d, k) * D[static_cast<std::size_t>(d - k)];

  AutTreeFpp out;
  out.degree = d;
  const Integer one_scaled = Integer(1) << precision_bits;
  const Rational scale(one_scaled);

  bool exact = true;
  Rational q = 0;
  Integer lo = 0;  // q enclosure numerators over 2^precision_bits
  Integer hi = 0;
  auto step_scaled = [&](const Integer& x, bool round_up) {
    // F(x / 2^P) * 2^P = sum_k coef_k x^k 2^{P(d-k)} / (d! 2^{P(d-1)})
    Integer num = 0;
    Integer xp = 1;
    for (int k = 0; k <= d; ++k) {
      num += coef[static_cast<std::size_t>(k)] * xp * (Integer(1) << (precision_bits * static_cast<unsigned>(d - k)));
      xp *= x;
    }
    const Integer den = fact * (Integer(1) << (precision_bits * static_cast<unsigned>(d - 1)));
    Integer r = num / den;
    if (round_up && r * den != num) r += 1;
    return r;
  };

  for (int n = 0; n <= n_max; ++n) {
    AutTreeLevel l;
    l.level = n;
    if (exact) {
      l.exact = 1 - q;
      l.lower = l.upper = *l.exact;
      out.exact_through = n;
    } else {
      l.lower = 1 - Rational(hi) / scale;
      l.upper = 1 - Rational(lo) / scale;
    }
    out.levels.push_back(l);
    if (n == n_max) break;
    if (exact) {
      Rational next = 0;
      Rational qp = 1;
      for (int k = 0; k <= d; ++k) {
        next += Rational(coef[static_cast<std::size_t>(k)]) * qp;
        qp *= q;
      }
      next /= Rational(fact);
      if (boost::multiprecision::msb(denominator_of(next)) + 1 > exact_bits) {
        exact = false;
        // Enclose q exactly at the switch point, then continue on dyadics.
        const Rational scaled = q * scale;
        lo = numerator_of(scaled) / denominator_of(scaled);
        hi = lo + (lo * denominator_of(scaled) == numerator_of(scaled) ? 0 : 1);
        lo = step_scaled(lo, false);
        hi = step_scaled(hi, true);
      } else {
        q = next;
      }
    } else {
      lo = step_scaled(lo, false);
      hi = step_scaled(hi, true);
    }
  }
  out.strictly_decreasing_through = 0;
  for (std::size_t i = 1; i < out.levels.size(); ++i) {
    if (out.levels[i].upper < out.levels[i - 1].lower) {
      out.strictly_decreasing_through = out.levels[i].level;
    } else {
      break;
    }
  }
  return out;
}

/// Fixer proportion of the dihedral group of order 2 d^n on a d^n-cycle.
inline Rational dihedral_fpp_closed_form(int d, int n) {
  (void)TreeShape{d};
  if (n < 1) throw InvalidArgument("dihedral closed form needs n >= 1");
  const Integer dn = Integer(detail::ipow(static_cast<std::size_t>(d), n));
  if (d % 2 == 1) return Rational(1 + dn, 2 * dn);
  return Rational(1 + dn / 2, 2 * dn);
}

// ---------------------------------------------------------------------------
// Monte-Carlo

struct AutTreeSource {
  int degree = 2;
};
struct QuotientSource {
  const FiniteQuotient* quotient = nullptr;
};
/// Random words in a presentation. Not Haar; refused unless `heuristic`.
struct RandomWordSource {
  const WreathPresentation* presentation = nullptr;
  int word_length = 32;
  bool heuristic = false;
};
using SampleSource = std::variant<AutTreeSource, QuotientSource, RandomWordSource>;

struct MonteCarloEstimate {
  std::size_t trials = 0;
  std::size_t hits = 0;
  double estimate = 0;
  double ci_low = 0;   // 99% Wilson score interval
  double ci_high = 0;
  bool heuristic = false;
  std::uint64_t seed = 0;
  std::size_t chunks = 0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"trials", trials},   {"hits", hits},       {"estimate", estimate},
                        {"ci99_low", ci_low}, {"ci99_high", ci_high}, {"seed", seed},
                        {"chunks", chunks},   {"heuristic", heuristic}};
    if (heuristic) j["warning"] = "random words are not Haar-distributed; this estimate may be biased";
    return j;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::pair<double, double> wilson99(std::size_t hits, std::size_t trials) {
  const double z = 2.5758293035489004;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double denom = 1 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace detail

/// Estimates mu(X_n >= 1). Trials are cut into fixed chunks, each with its own
/// substream seeded from (seed, chunk index), so the result does not depend on
/// the thread count.
inline MonteCarloEstimate monte_carlo_fpp(const SampleSource& source, int n, std::size_t trials, std::uint64_t seed,
                                          unsigned threads = 1) {
  if (trials == 0) throw InvalidArgument("monte_carlo_fpp needs at least one trial");
  if (n < 0) throw DepthExceeded("negative level");
  MonteCarloEstimate est;
  est.trials = trials;
  est.seed = seed;
  if (const auto* rw = std::get_if<RandomWordSource>(&source)) {
    if (!rw->heuristic) {
      throw SourceNotUniform("random words are not Haar-uniform; enumerate the quotient or pass the heuristic flag");
    }
    est.heuristic = true;
  }
  if (const auto* qs = std::get_if<QuotientSource>(&source)) {
    if (!qs->quotient || qs->quotient->level() < n) throw DepthExceeded("quotient level below the sampled level");
  }

  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  est.chunks = chunks;
  std::vector<std::size_t> hits(chunks, 0);

  auto run_chunk = [&](std::size_t c) {
    AutSampler rng(detail::splitmix64(seed ^ detail::splitmix64(c + 1)));
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(trials, begin + kChunk);
    std::optional<PortraitEvaluator> eval;
    std::vector<std::uint32_t> active;
    if (const auto* rw = std::get_if<RandomWordSource>(&source)) {
      eval.emplace(*rw->presentation);
      active = rw->presentation->active_generators();
    }
    std::size_t h = 0;
    for (std::size_t t = begin; t < end; ++t) {
      std::size_t x = 0;
      if (const auto* a = std::get_if<AutTreeSource>(&source)) {
        x = rng.sample(TreeShape{a->degree}, n).fixed_count(n);
      } else if (const auto* qs = std::get_if<QuotientSource>(&source)) {
        x = qs->quotient->element(rng.below(qs->quotient->size())).fixed_count(n);
      } else {
        const auto& rw = std::get<RandomWordSource>(source);
        if (active.empty()) {
          x = 1;
        } else {
          std::vector<Letter> letters;
          for (int i = 0; i < rw.word_length; ++i) {
            letters.push_back(Letter{active[rng.below(active.size())], rng.below(2) ? 1 : -1});
          }
          x = eval->word(GroupWord(std::move(letters)), n).fixed_count(n);
        }
      }
      if (x > 0) ++h;
    }
    hits[c] = h;
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto h : hits) est.hits += h;
  est.estimate = static_cast<double>(est.hits) / static_cast<double>(trials);
  std::tie(est.ci_low, est.ci_high) = detail::wilson99(est.hits, trials);
  return est;
}

}  // namespace arbor
