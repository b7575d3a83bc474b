#include <catch2/catch_amalgamated.hpp>

#include "arbor/arbor.hpp"
#include "oracle.hpp"

using namespace arbor;

namespace {

WreathPresentation entry(const char* name) { return *catalog_get(name).presentation; }

WreathPresentation root_swap_only() {
  return WreathPresentation::from_json(
      nlohmann::json::parse(R"({"degree":2,"generators":[{"name":"s","perm":[2,1],"sections":[[],[]]}]})"));
}

Rational exhaustive_aut_proportion(int n) {
  std::size_t hits = 0;
  const auto all = oracle::all_binary_automorphisms(n);
  for (const auto& p : all) hits += oracle::fixed(p) > 0;
  return Rational(Integer(hits), Integer(all.size()));
}

}  // namespace

TEST_CASE("fixed_point_table") {
  const auto t = fixed_point_table(entry("chebyshev_d2"), 3);
  REQUIRE(t.levels.size() == 3);
  CHECK(t.levels[1].proportion() == Rational(3, 8));
  CHECK(t.levels[2].proportion() == Rational(5, 16));
  CHECK(fixed_point_table(entry("chebyshev_d3"), 2).levels[1].proportion() == Rational(5, 9));
  for (const auto& l : fixed_point_table(entry("trivial"), 4).levels) CHECK(l.proportion() == 1);

  const auto b = fixed_point_table(entry("basilica"), 6);
  CHECK(b.truncated);
  CHECK(b.levels.size() == 4);
  CHECK(b.partial_count > 0);
  CHECK(b.to_json()["truncated"] == true);
}

TEST_CASE("fixer proportions agree with the oracle") {
  const std::vector<std::pair<const char*, int>> cases{{"chebyshev_d2", 7}, {"chebyshev_d3", 4}, {"basilica", 4},
                                                        {"grigorchuk", 4},   {"odometer_d2", 6},  {"projection_invariant_example", 5}};
  for (const auto& [name, top] : cases) {
    const auto p = entry(name);
    const auto t = fixed_point_table(p, top);
    REQUIRE(static_cast<int>(t.levels.size()) == top);
    for (int n = 1; n <= top; ++n) {
      INFO(name << " level " << n);
      const auto q = oracle::quotient(p, n);
      CHECK(t.levels[static_cast<std::size_t>(n - 1)].group_order == q.size());
      CHECK(t.levels[static_cast<std::size_t>(n - 1)].proportion() == oracle::fixer_proportion(q));
    }
  }
}

TEST_CASE("martingale_fiber_check") {
  CHECK(martingale_fiber_check(entry("chebyshev_d2"), 2).pass);
  CHECK(martingale_fiber_check(entry("basilica"), 3).pass);
  const auto r = martingale_fiber_check(root_swap_only(), 1);
  CHECK_FALSE(r.pass);
  CHECK(r.max_deviation == Rational(2));  // identity: X_1 = 2, X_2 = 4
  CHECK_THROWS_AS(martingale_fiber_check(entry("basilica"), 0), DepthExceeded);

  for (const auto& name : catalog_names()) {
    const auto e = catalog_get(name);
    if (e.is_virtual()) continue;
    for (int n = 1; n <= 3; ++n) {
      INFO(name << " n=" << n);
      CHECK(martingale_fiber_check(*e.presentation, n).max_deviation ==
            oracle::martingale_deviation(*e.presentation, n));
    }
  }
}

TEST_CASE("aut_tree_fpp") {
  const auto a = aut_tree_fpp(2, 200);
  CHECK(*a.levels[0].exact == 1);
  CHECK(*a.levels[1].exact == Rational(1, 2));
  CHECK(*a.levels[2].exact == Rational(3, 8));
  CHECK(*a.levels[3].exact == Rational(39, 128));
  for (int n = 1; n <= 3; ++n) CHECK(*a.levels[static_cast<std::size_t>(n)].exact == exhaustive_aut_proportion(n));
  CHECK(a.strictly_decreasing_through == 200);
  for (std::size_t n = 1; n <= 49; ++n) {
    if (a.levels[n].exact && a.levels[n + 1].exact) CHECK(*a.levels[n + 1].exact < *a.levels[n].exact);
  }
  for (const auto& l : a.levels) {
    CHECK(l.lower <= l.upper);
    if (l.exact) CHECK((l.lower == *l.exact && l.upper == *l.exact));
  }
  for (int d : {3, 4, 5}) CHECK(*aut_tree_fpp(d, 1).levels[0].exact == 1);
  // d = 3: p_1 = 1 - D_3/3! = 2/3.
  CHECK(*aut_tree_fpp(3, 1).levels[1].exact == Rational(2, 3));
  CHECK_THROWS_AS(aut_tree_fpp(2, -1), InvalidArgument);
}

TEST_CASE("aut_tree_fpp matches enumerated Aut(T^n) for d = 3") {
  const auto a = aut_tree_fpp(3, 2);
  const auto q = full_automorphism_quotient(3, 2);
  CHECK(fixed_point_level(q, 2).proportion() == *a.levels[2].exact);
}

TEST_CASE("dihedral_fpp_closed_form") {
  CHECK(dihedral_fpp_closed_form(2, 2) == Rational(3, 8));
  CHECK(dihedral_fpp_closed_form(2, 2) == fixed_point_table(entry("chebyshev_d2"), 2).levels[1].proportion());
  CHECK(dihedral_fpp_closed_form(3, 2) == Rational(5, 9));
  for (int n = 1; n <= 30; ++n) {
    Rational gap = dihedral_fpp_closed_form(2, n) - Rational(1, 4);
    CHECK(gap >= 0);
    CHECK(gap <= Rational(Integer(2)) / detail::pow_rational(2, n));
  }
  CHECK_THROWS_AS(dihedral_fpp_closed_form(2, 0), InvalidArgument);
}

TEST_CASE("monte_carlo_fpp") {
  const auto a = monte_carlo_fpp(AutTreeSource{2}, 3, 100000, 12345);
  CHECK(a.ci_low <= 39.0 / 128);
  CHECK(39.0 / 128 <= a.ci_high);
  const auto again = monte_carlo_fpp(AutTreeSource{2}, 3, 100000, 12345, 4);
  CHECK(again.hits == a.hits);

  const auto q = enumerate_quotient(entry("chebyshev_d2"), 3);
  const auto c = monte_carlo_fpp(QuotientSource{&q}, 3, 100000, 7);
  CHECK(c.ci_low <= 5.0 / 16);
  CHECK(5.0 / 16 <= c.ci_high);
  CHECK_THROWS_AS(monte_carlo_fpp(QuotientSource{&q}, 4, 10, 7), DepthExceeded);

  CHECK_THROWS_AS(monte_carlo_fpp(AutTreeSource{2}, 3, 0, 1), InvalidArgument);
  const auto p = entry("basilica");
  CHECK_THROWS_AS(monte_carlo_fpp(RandomWordSource{&p, 32, false}, 3, 100, 1), SourceNotUniform);
  const auto h = monte_carlo_fpp(RandomWordSource{&p, 32, true}, 3, 100, 1);
  CHECK(h.heuristic);
  CHECK(h.to_json().contains("warning"));
}

TEST_CASE("stay probabilities are tabulated") {
  const auto s = stay_probabilities(entry("chebyshev_d2"), 2, 1);
  CHECK_FALSE(s.empty());
  for (const auto& [r, p] : s) {
    CHECK(p >= 0);
    CHECK(p <= 1);
  }
}
