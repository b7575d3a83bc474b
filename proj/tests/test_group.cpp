#include <catch2/catch_amalgamated.hpp>

#include "arbor/arbor.hpp"
#include "oracle.hpp"

using namespace arbor;

namespace {

WreathPresentation chebyshev() { return *catalog_get("chebyshev_d2").presentation; }

WreathPresentation parse(const char* text) { return WreathPresentation::from_json(nlohmann::json::parse(text)); }

}  // namespace

TEST_CASE("parse_presentation") {
  const auto p = chebyshev();
  CHECK(p.degree() == 2);
  CHECK(p.generators().size() == 2);
  CHECK(p.generator(1).sections[0] == p.parse_word("a"));

  const auto t = parse(R"({"degree":2,"generators":[]})");
  CHECK(t.generators().empty());

  CHECK_THROWS_AS(parse(R"({"degree":2,"generators":[{"name":"a","perm":[2,1],"sections":[["c"],[]]}]})"),
                  UnknownGenerator);
  CHECK_THROWS_AS(parse(R"({"degree":2,"generators":[{"name":"a","perm":[1,1],"sections":[[],[]]}]})"),
                  BadPermutation);
  CHECK_THROWS_AS(parse(R"({"degree":2,"generators":[{"name":"a","perm":[2,1],"sections":[[]]}]})"), SchemaError);
  CHECK_THROWS_AS(parse(R"({"generators":[]})"), SchemaError);
  CHECK_THROWS_AS(parse(R"({"degree":2,"generators":[{"name":"a","perm":[2,1],"sections":[[],[]]},{"name":"a","perm":[1,2],"sections":[[],[]]}]})"),
                  SchemaError);

  const auto back = WreathPresentation::from_json(p.to_json());
  CHECK(back.to_json() == p.to_json());
}

TEST_CASE("word_portrait") {
  const auto p = chebyshev();
  CHECK(word_portrait(p, GroupWord{}, 4).is_identity());
  CHECK(word_portrait(p, p.parse_word("b"), 1).is_identity());
  CHECK_FALSE(word_portrait(p, p.parse_word("b"), 2).is_identity());
  for (int m = 0; m <= 6; ++m) CHECK(word_portrait(p, p.parse_word("a a"), m).is_identity());
  // Multiplicative in the word.
  const auto x = p.parse_word("a b b' a b");
  const auto y = p.parse_word("b a b");
  CHECK(word_portrait(p, x * y, 5) == compose(word_portrait(p, x, 5), word_portrait(p, y, 5)));
}

TEST_CASE("word_section") {
  const auto p = chebyshev();
  const auto w = p.parse_word("a b a");
  CHECK(word_section(p, w, Vertex{}) == w);
  CHECK(word_section(p, p.parse_word("b"), Vertex::parse("1")) == p.parse_word("a"));
  CHECK(word_section(p, p.parse_word("b a"), Vertex::parse("1")) == p.parse_word("a"));
  // (ba)^2 = (ab, ba)
  const auto ba2 = p.parse_word("b a b a");
  CHECK(word_section(p, ba2, Vertex::parse("1")).reduced() == p.parse_word("a b"));
  CHECK(word_section(p, ba2, Vertex::parse("2")).reduced() == p.parse_word("b a"));
}

TEST_CASE("is_trivial") {
  const auto p = chebyshev();
  CHECK(is_trivial(p, GroupWord{}));
  CHECK_FALSE(is_trivial(p, p.parse_word("a")));
  CHECK(is_trivial(p, p.parse_word("b b")));
  CHECK(is_trivial(p, p.parse_word("a b a b' a' a")) == false);

  const auto g = *catalog_get("grigorchuk").presentation;
  CHECK(is_trivial(g, g.parse_word("b c d")));
  CHECK_FALSE(is_trivial(g, g.parse_word("a d")));
  CHECK_THROWS_AS(is_trivial(*catalog_get("basilica").presentation,
                             catalog_get("basilica").presentation->parse_word("a b a' b'"), 1),
                  BudgetExceeded);
}

TEST_CASE("is_trivial agrees with depth-8 portraits on short words") {
  for (const auto& name : catalog_names()) {
    const auto e = catalog_get(name);
    if (!e.presentation || e.presentation->generators().empty()) continue;
    const auto& p = *e.presentation;
    const auto words = detail::reduced_words(p.active_generators(), 4);
    for (const auto& w : words) {
      INFO(name << " " << p.format_word(w));
      CHECK(is_trivial(p, w) == word_portrait(p, w, 8).is_identity());
    }
  }
}

TEST_CASE("enumerate_quotient matches the brute-force closure") {
  CHECK(enumerate_quotient(parse(R"({"degree":2,"generators":[]})"), 3).size() == 1);
  CHECK(enumerate_quotient(chebyshev(), 2).size() == 8);
  CHECK(full_automorphism_quotient(2, 2).size() == 8);
  CHECK(full_automorphism_quotient(3, 2).size() == 6 * 6 * 6 * 6);

  const std::vector<std::pair<std::string, int>> cases{
      {"chebyshev_d2", 6}, {"chebyshev_d3", 4}, {"basilica", 4}, {"grigorchuk", 4},
      {"odometer_d2", 5},  {"projection_invariant_example", 5}};
  for (const auto& [name, top] : cases) {
    const auto p = *catalog_get(name).presentation;
    for (int n = 1; n <= top; ++n) {
      INFO(name << " level " << n);
      const auto q = enumerate_quotient(p, n);
      CHECK(oracle::as_leaves(q) == oracle::quotient(p, n));
      CHECK(check_level_transitive(q) == oracle::transitive(oracle::quotient(p, n)));
    }
  }
  CHECK(enumerate_quotient(*catalog_get("basilica").presentation, 4).size() == 4096);
  CHECK(enumerate_quotient(*catalog_get("grigorchuk").presentation, 3).size() == 128);
}

TEST_CASE("enumeration is deterministic and budgeted") {
  const auto p = *catalog_get("basilica").presentation;
  const auto a = enumerate_quotient(p, 3);
  const auto b = enumerate_quotient(p, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.element(i) == b.element(i));
    CHECK(a.representative(i) == b.representative(i));
    CHECK(word_portrait(p, a.representative(i), 3) == a.element(i));
  }
  try {
    enumerate_quotient(p, 4, 100);
    FAIL("budget not enforced");
  } catch (const BudgetExceeded& e) {
    CHECK(e.partial() > 0);
  }
  CHECK(a.to_json(&p)["order"] == 64);
}

TEST_CASE("check_level_transitive") {
  CHECK(check_level_transitive(enumerate_quotient(chebyshev(), 3)));
  CHECK_FALSE(check_level_transitive(enumerate_quotient(parse(R"({"degree":2,"generators":[]})"), 1)));
  CHECK(check_level_transitive(enumerate_quotient(*catalog_get("basilica").presentation, 4)));
}

TEST_CASE("quotient tower has equal fibers") {
  for (const char* name : {"chebyshev_d2", "basilica", "grigorchuk", "chebyshev_d3"}) {
    const auto p = *catalog_get(name).presentation;
    for (int n = 2; n <= 4; ++n) {
      const auto upper = enumerate_quotient(p, n);
      const auto lower = enumerate_quotient(p, n - 1);
      CHECK(upper.size() % lower.size() == 0);
      const auto proj = projection_map(upper, lower);
      std::vector<std::size_t> fiber(lower.size(), 0);
      for (auto id : proj) ++fiber[id];
      for (auto f : fiber) CHECK(f == upper.size() / lower.size());
      // Homomorphism on generator steps.
      for (std::size_t id = 0; id < upper.size(); id += 7) {
        for (std::size_t j = 0; j < upper.generators().size(); ++j) {
          CHECK(proj[upper.act(id, j)] == lower.act(proj[id], j));
        }
      }
    }
  }
}

TEST_CASE("vertex stabilizers have index d^k in transitive quotients") {
  for (const char* name : {"chebyshev_d2", "basilica", "chebyshev_d3"}) {
    const auto p = *catalog_get(name).presentation;
    const int n = 3;
    const auto q = enumerate_quotient(p, n);
    REQUIRE(check_level_transitive(q));
    for (int k = 0; k <= n; ++k) {
      for (const Vertex& v : level_vertices(p.shape(), k)) {
        std::size_t stab = 0;
        for (std::size_t id = 0; id < q.size(); ++id) stab += q.element(id).apply(v) == v;
        CHECK(stab * detail::ipow(static_cast<std::size_t>(p.degree()), k) == q.size());
      }
    }
  }
}
