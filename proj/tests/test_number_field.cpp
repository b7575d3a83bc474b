#include <catch2/catch_amalgamated.hpp>

#include "arbor/number_field.hpp"

using namespace arbor;

namespace {

FieldPtr field(std::vector<long long> m) {
  QPoly q;
  for (auto c : m) q.push_back(Rational(c));
  return std::make_shared<const NumberField>(q);
}

FieldElement el(const FieldPtr& k, std::vector<long long> c) {
  std::vector<Rational> r;
  for (auto x : c) r.push_back(Rational(x));
  return FieldElement(k, r);
}

}  // namespace

TEST_CASE("field construction checks the minimal polynomial") {
  CHECK(NumberField::rationals()->is_rational());
  CHECK(field({-2, 0, 1})->degree() == 2);
  CHECK_THROWS_AS(field({0, 0, 1}), SchemaError);   // y^2: not squarefree
  CHECK_THROWS_AS(field({-2, 0, 2}), SchemaError);  // not monic
  CHECK_THROWS_AS(field({3}), SchemaError);         // degree 0
}

TEST_CASE("arithmetic in Q(sqrt 2)") {
  const auto k = field({-2, 0, 1});
  const auto s = el(k, {0, 1});
  CHECK(s * s == el(k, {2}));
  const auto u = el(k, {1, 1});
  CHECK(u.inverse() == el(k, {-1, 1}));
  CHECK(u * u.inverse() == el(k, {1}));
  CHECK(u / u == el(k, {1}));
  CHECK(u.pow(3) == u * u * u);
  CHECK(u.pow(0) == el(k, {1}));
  CHECK(-u + u == el(k, {0}));
  CHECK(FieldElement(k, std::vector<Rational>{Rational(0), Rational(0), Rational(1)}) == el(k, {2}));
  CHECK_FALSE(s.is_rational());
  CHECK((s * s).is_rational());
  CHECK_THROWS_AS(el(k, {0}).inverse(), InvalidArgument);
}

TEST_CASE("Gaussian rationals") {
  const auto k = field({1, 0, 1});
  const auto i = el(k, {0, 1});
  CHECK(i * i == el(k, {-1}));
  CHECK(i.pow(4) == el(k, {1}));
  CHECK((el(k, {3, 4}) * el(k, {3, -4})) == el(k, {25}));
}

TEST_CASE("zero divisors are refused") {
  const auto k = field({-1, 0, 1});  // squarefree but reducible: y^2 - 1
  CHECK_THROWS_AS(el(k, {-1, 1}).inverse(), InvalidArgument);
}

TEST_CASE("element JSON") {
  const auto k = field({-2, 0, 1});
  const auto z = FieldElement::from_json(k, nlohmann::json::parse(R"(["1/2", "-3"])"));
  CHECK(z == FieldElement(k, std::vector<Rational>{Rational(1, 2), Rational(-3)}));
  CHECK(FieldElement::from_json(k, z.to_json()) == z);
  CHECK(FieldElement::from_json(NumberField::rationals(), nlohmann::json("7/3")) ==
        FieldElement(NumberField::rationals(), Rational(7, 3)));
  CHECK_THROWS_AS(FieldElement::from_json(k, nlohmann::json::parse(R"({"x":1})")), SchemaError);
  CHECK_THROWS_AS(FieldElement::from_json(k, nlohmann::json::parse(R"(["1", "2", "3"])")), SchemaError);
}

TEST_CASE("polynomials") {
  const auto q = NumberField::rationals();
  const auto x = Polynomial::x(q);
  const auto c = [&](long long v) { return Polynomial::constant(FieldElement(q, Rational(v))); };
  const Polynomial f = x * x - c(2);
  CHECK(f.degree() == 2);
  CHECK(f(FieldElement(q, Rational(3))) == FieldElement(q, Rational(7)));
  CHECK(f.derivative() == c(2) * x);
  const Polynomial ff = f.compose(f);
  CHECK(ff.degree() == 4);
  CHECK(ff(FieldElement(q, Rational(2))) == FieldElement(q, Rational(2)));
  const auto [quot, rem] = f.divide_linear(FieldElement(q, Rational(1)));
  CHECK(rem == FieldElement(q, Rational(-1)));
  CHECK(quot == x + c(1));
  CHECK((f - f).is_zero());
}
