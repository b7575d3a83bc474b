#include <catch2/catch_amalgamated.hpp>

#include "arbor/arbor.hpp"
#include "oracle.hpp"

using namespace arbor;

namespace {

WreathPresentation entry(const char* name) { return *catalog_get(name).presentation; }

WreathPresentation trivial() { return entry("trivial"); }

oracle::Word zero_based(const Vertex& v) {
  oracle::Word out;
  for (int x : v.symbols()) out.push_back(x - 1);
  return out;
}

// Brute-force condition (ii) of the mixing definition at level n + N.
bool oracle_condition_ii(const WreathPresentation& p, int n, int m, int N) {
  const auto target = oracle::quotient(p, m);
  for (const Vertex& v : level_vertices(p.shape(), n + N)) {
    if (oracle::stabilizer_section_image(p, n, zero_based(v), m) != target) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stabilizer section images agree with the oracle") {
  for (const char* name : {"chebyshev_d2", "basilica", "grigorchuk", "chebyshev_d3", "odometer_d2"}) {
    const auto p = entry(name);
    const int top = p.degree() == 3 ? 2 : 3;
    for (int n = 0; n <= top; ++n) {
      for (int k = n; k <= top; ++k) {
        for (const Vertex& v : level_vertices(p.shape(), k)) {
          for (int m = 1; m + k <= top + 1; ++m) {
            INFO(name << " n=" << n << " v=" << v.str() << " m=" << m);
            CHECK(oracle::as_leaves(stabilizer_section_image(p, n, v, m)) ==
                  oracle::stabilizer_section_image(p, n, zero_based(v), m));
          }
        }
      }
    }
  }
}

TEST_CASE("check_fractal") {
  CHECK(check_fractal(entry("chebyshev_d2"), 2, 2).pass);
  const auto h = check_fractal(entry("projection_invariant_example"), 1, 1);
  CHECK(h.level_transitive);
  CHECK(h.pass);
  const auto t = check_fractal(trivial(), 1, 1);
  CHECK_FALSE(t.pass);
  CHECK_FALSE(t.level_transitive);
  CHECK(check_fractal(entry("basilica"), 2, 2).pass);
  CHECK(check_fractal(entry("grigorchuk"), 2, 2).pass);
}

TEST_CASE("check_super_strongly_fractal") {
  CHECK(check_super_strongly_fractal(entry("grigorchuk"), 2, 2).pass);
  const auto c = check_super_strongly_fractal(entry("chebyshev_d2"), 2, 2);
  CHECK_FALSE(c.pass);
  REQUIRE(c.first_failure);
  CHECK(c.first_failure->str() == "11");
  CHECK(c.failure_image_order == 4);
  CHECK(c.target_order == 8);
  CHECK(check_super_strongly_fractal(entry("chebyshev_d2"), 1, 1).pass);
  CHECK_FALSE(check_super_strongly_fractal(trivial(), 1, 1).pass);
}

TEST_CASE("subtree_transitivity agrees with the oracle") {
  CHECK(subtree_transitivity(entry("chebyshev_d2"), 1, 2));
  CHECK_FALSE(subtree_transitivity(trivial(), 1, 1));
  CHECK(subtree_transitivity(entry("basilica"), 2, 2));
  for (const auto& name : catalog_names()) {
    const auto e = catalog_get(name);
    if (e.is_virtual()) continue;
    for (int n = 1; n <= 2; ++n) {
      for (int depth = 1; depth + n <= 4; ++depth) {
        INFO(name << " n=" << n << " depth=" << depth);
        CHECK(subtree_transitivity(*e.presentation, n, depth) == oracle::subtree_transitive(*e.presentation, n, depth));
      }
    }
  }
}

TEST_CASE("check_mixing_certificate") {
  const auto g = check_mixing_certificate(entry("grigorchuk"), 1, 1, 0);
  CHECK(g.pass);
  CHECK(g.scope().find("level exactly 1") != std::string::npos);
  CHECK(check_mixing_certificate(entry("basilica"), 1, 1, 4).pass);
  CHECK(check_mixing_certificate(entry("chebyshev_d2"), 1, 1, 4).pass);
  for (int k = 0; k <= 4; ++k) CHECK_FALSE(check_mixing_certificate(entry("chebyshev_d2"), 2, 2, k).pass);
  CHECK_FALSE(check_mixing_certificate(trivial(), 1, 1, 0).pass);
  CHECK_THROWS_AS(check_mixing_certificate(entry("basilica"), 0, 1, 0), DepthExceeded);

  // Condition (ii) by brute force where pi_{n+N+m} is small.
  const std::vector<std::tuple<const char*, int, int, int>> cases{
      {"grigorchuk", 1, 1, 0}, {"grigorchuk", 1, 2, 1}, {"basilica", 1, 1, 2}, {"basilica", 1, 2, 1},
      {"chebyshev_d2", 2, 2, 1}, {"chebyshev_d2", 1, 1, 2}, {"odometer_d2", 1, 1, 2}, {"chebyshev_d3", 1, 1, 1}};
  for (const auto& [name, n, m, N] : cases) {
    const auto p = entry(name);
    const auto c = check_mixing_certificate(p, n, m, N);
    bool ii = true;
    for (const auto& v : c.vertices) ii = ii && v.pass;
    INFO(name << " " << n << m << N);
    CHECK(ii == oracle_condition_ii(p, n, m, N));
  }
}

TEST_CASE("commutator_search") {
  const auto b = entry("basilica");
  const auto r = commutator_search(b, b.parse_word("b"), 2, 2);
  REQUIRE(r.witness);
  const auto& w = *r.witness;
  CHECK(w.revalidated);
  CHECK(w.u.level() <= w.w.level());
  CHECK(w.w.level() <= 2);

  // Independent check on leaf permutations to depth 6 below w.
  const int depth = w.w.level() + 6;
  const auto g = oracle::leaf_action(b, w.g, depth);
  const auto s = oracle::leaf_action(b, b.parse_word("b"), 6);
  CHECK(oracle::apply_word(b, w.g, zero_based(w.u)) == zero_based(w.u));
  CHECK(oracle::apply_word(b, w.g, zero_based(w.w)) == zero_based(w.w));
  const std::size_t block = oracle::power(2, 6);
  const std::size_t wbase = oracle::rank(2, zero_based(w.w)) * block;
  for (std::size_t j = 0; j < block; ++j) CHECK(g[wbase + j] - wbase == s[j]);
  const std::size_t ublock = oracle::power(2, depth - w.u.level());
  const std::size_t ubase = oracle::rank(2, zero_based(w.u)) * ublock;
  for (std::size_t j = 0; j < ublock; ++j) CHECK(g[ubase + j] == ubase + j);

  CHECK_FALSE(commutator_search(trivial(), GroupWord{}, 2, 2).witness);
  CHECK_THROWS_AS(commutator_search(b, b.parse_word("a"), 0, 1), DepthExceeded);
}

TEST_CASE("kg_depth") {
  const auto g = kg_depth(entry("grigorchuk"), 2, 1);
  CHECK(g.index() == 1);
  CHECK(g.order() == 2);
  const auto c = kg_depth(entry("chebyshev_d2"), 3, 2);
  CHECK(c.group_order == 8);
  CHECK(c.index() == 2);
  const auto t = kg_depth(trivial(), 2, 2);
  CHECK(t.order() == 1);

  // Oracle intersection over the path 1, 11, 111.
  const auto p = entry("chebyshev_d2");
  std::set<oracle::Leaves> cur;
  for (int j = 1; j <= 3; ++j) {
    const auto img = oracle::stabilizer_section_image(p, j, oracle::Word(static_cast<std::size_t>(j), 0), 2);
    if (j == 1) {
      cur = img;
    } else {
      std::set<oracle::Leaves> both;
      std::set_intersection(cur.begin(), cur.end(), img.begin(), img.end(), std::inserter(both, both.begin()));
      cur = both;
    }
  }
  CHECK(cur.size() == c.order());
  // Decreasing in L.
  for (std::size_t i = 1; i < c.orders_by_level.size(); ++i) CHECK(c.orders_by_level[i] <= c.orders_by_level[i - 1]);
}

TEST_CASE("verify_pseudomixing against oracle counts") {
  const auto g = entry("grigorchuk");
  const auto r = verify_pseudomixing(g, 1, 1, Vertex::parse("1"), Vertex::parse("2"));
  CHECK(r.pass);
  CHECK(r.max_deviation == 0);
  CHECK(r.expected == Rational(Integer(r.big_order), Integer(2 * 2 * 2)));

  const auto t = verify_pseudomixing(trivial(), 1, 1, Vertex::parse("1"), Vertex::parse("1"));
  CHECK_FALSE(t.pass);
  CHECK_FALSE(t.level_transitive);
  CHECK(t.to_json().contains("note"));

  const auto c = verify_pseudomixing(entry("chebyshev_d2"), 2, 2, Vertex::parse("11"), Vertex::parse("1"));
  CHECK(c.max_deviation != 0);
  CHECK_FALSE(c.pass);
  CHECK_THROWS_AS(verify_pseudomixing(g, 2, 1, Vertex::parse("1"), Vertex::parse("1")), DepthExceeded);

  const std::vector<std::tuple<const char*, int, int, const char*, const char*>> cases{
      {"grigorchuk", 1, 1, "1", "2"},   {"grigorchuk", 1, 2, "2", "1"},    {"chebyshev_d2", 1, 1, "1", "1"},
      {"chebyshev_d2", 2, 2, "11", "1"}, {"basilica", 1, 1, "2", "12"},   {"chebyshev_d3", 1, 1, "3", "2"}};
  for (const auto& [name, n, m, us, ws] : cases) {
    const auto p = entry(name);
    const Vertex u = Vertex::parse(us);
    const Vertex w = Vertex::parse(ws);
    const auto rep = verify_pseudomixing(p, n, m, u, w);
    const auto qn = enumerate_quotient(p, n);
    const auto qm = enumerate_quotient(p, m);
    const auto expect = oracle::pseudomixing_counts(p, n, m, zero_based(u), zero_based(w));
    INFO(name << " u=" << us << " w=" << ws);
    REQUIRE(expect.size() == rep.counts.size());
    for (std::size_t a = 0; a < qn.size(); ++a) {
      for (std::size_t bb = 0; bb < qm.size(); ++bb) {
        const auto key = std::make_pair(level_permutation(qn.element(a), n), level_permutation(qm.element(bb), m));
        CHECK(expect.at(key) == rep.counts[a * qm.size() + bb]);
      }
    }
  }
}
