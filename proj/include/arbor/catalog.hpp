#pragma once

// Named fixtures: a presentation, optionally a polynomial with a designation
// of generators, and facts the engines are expected to reproduce. Facts are
// assertion data; the test suite re-derives each one.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "arbor/dynamics.hpp"
#include "arbor/error.hpp"
#include "arbor/presentation.hpp"
#include "arbor/rational.hpp"
#include "arbor/validate.hpp"

namespace arbor {

struct MixingExpectation {
  int n = 1;
  int m = 1;
  int N = 0;
  bool pass = true;
};

struct ExpectedFacts {
  std::optional<bool> level_transitive;  // checked through `structure_depth`
  std::optional<bool> fractal;
  std::optional<bool> super_strongly_fractal;
  int structure_depth = 4;
  std::vector<MixingExpectation> mixing;
  std::vector<std::pair<int, Rational>> fixer_proportions;  // (level, proportion)
  bool fixer_proportions_decreasing = false;  // over every enumerable level
  std::optional<std::string> verdict;         // ChebyshevLike | ZeroFPP
  std::optional<Rational> predicted_fpp;
  std::optional<std::size_t> kg_index;  // with kg_L, kg_m
  int kg_L = 0;
  int kg_m = 0;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  int degree = 2;
  std::optional<WreathPresentation> presentation;  // empty for the virtual Aut(T) entry
  std::optional<PolynomialMap> polynomial;
  std::optional<Designation> designation;
  ExpectedFacts facts;

  bool is_virtual() const { return !presentation.has_value(); }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"name", name}, {"description", description}, {"degree", degree}, {"virtual", is_virtual()}};
    if (presentation) j["presentation"] = presentation->to_json();
    if (polynomial) j["polynomial"] = polynomial->to_json();
    if (designation && presentation) j["designation"] = designation->to_json(*presentation);
    nlohmann::json f = nlohmann::json::object();
    if (facts.level_transitive) f["level_transitive"] = *facts.level_transitive;
    if (facts.fractal) f["fractal"] = *facts.fractal;
    if (facts.super_strongly_fractal) f["super_strongly_fractal"] = *facts.super_strongly_fractal;
    if (facts.level_transitive || facts.fractal || facts.super_strongly_fractal) f["structure_depth"] = facts.structure_depth;
    if (!facts.mixing.empty()) {
      nlohmann::json mix = nlohmann::json::array();
      for (const auto& m : facts.mixing) mix.push_back({{"n", m.n}, {"m", m.m}, {"N", m.N}, {"pass", m.pass}});
      f["mixing"] = mix;
    }
    if (!facts.fixer_proportions.empty()) {
      nlohmann::json fp = nlohmann::json::array();
      for (const auto& [lvl, p] : facts.fixer_proportions) fp.push_back({{"level", lvl}, {"proportion", to_string(p)}});
      f["fixer_proportions"] = fp;
    }
    if (facts.fixer_proportions_decreasing) f["fixer_proportions_decreasing"] = true;
    if (facts.verdict) f["verdict"] = *facts.verdict;
    if (facts.predicted_fpp) f["predicted_fpp"] = to_string(*facts.predicted_fpp);
    if (facts.kg_index) f["kg"] = {{"L", facts.kg_L}, {"m", facts.kg_m}, {"index", *facts.kg_index}};
    j["facts"] = f;
    return j;
  }
};

namespace detail {

inline WreathPresentation pres(const char* text) { return WreathPresentation::from_json(nlohmann::json::parse(text)); }

inline PolynomialMap poly(const char* text) { return PolynomialMap::from_json(nlohmann::json::parse(text)); }

inline void attach(CatalogEntry& e, const char* poly_json, const char* designation_json) {
  e.polynomial = poly(poly_json);
  e.designation = Designation::from_json(*e.presentation, e.polynomial->field(), nlohmann::json::parse(designation_json));
}

inline std::vector<std::pair<int, Rational>> proportions(int from, int to, Rational (*formula)(int)) {
  std::vector<std::pair<int, Rational>> out;
  for (int n = from; n <= to; ++n) out.emplace_back(n, formula(n));
  return out;
}

inline Rational pow_rational(long long base, int n) {
  Integer r = 1;
  for (int i = 0; i < n; ++i) r *= base;
  return Rational(r);
}

}  // namespace detail

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"trivial",     "full_aut_d2", "odometer_d2", "chebyshev_d2",
                                              "chebyshev_d3", "basilica",    "power_map_d2", "grigorchuk",
                                              "projection_invariant_example"};
  return names;
}

inline CatalogEntry catalog_get(const std::string& name) {
  CatalogEntry e;
  e.name = name;
  auto& f = e.facts;
  if (name == "trivial") {
    e.description = "trivial group on the binary tree";
    e.presentation = detail::pres(R"({"degree":2,"generators":[]})");
    f.level_transitive = false;
    f.fixer_proportions = {{1, Rational(1)}, {2, Rational(1)}, {3, Rational(1)}};
  } else if (name == "full_aut_d2") {
    e.description = "Aut(T) for d = 2; sampler-backed, no finite generating set";
    f.level_transitive = true;
    f.fixer_proportions = {{1, Rational(1, 2)}, {2, Rational(3, 8)}, {3, Rational(39, 128)}};
  } else if (name == "odometer_d2" || name == "power_map_d2") {
    e.presentation = detail::pres(R"({"degree":2,"generators":[{"name":"g0","perm":[2,1],"sections":[["g0"],[]]}]})");
    f.level_transitive = true;
    f.fractal = true;
    f.super_strongly_fractal = true;
    f.mixing = {{1, 1, 1, true}, {1, 2, 2, true}};
    f.fixer_proportions = detail::proportions(1, 6, [](int n) { return Rational(1) / detail::pow_rational(2, n); });
    if (name == "odometer_d2") {
      e.description = "binary odometer g0 = (g0, 1)s";
    } else {
      e.description = "iterated monodromy group of x^2";
      detail::attach(e, R"({"coeffs":[0,0,1]})", R"([{"point":"0","word":"g0"},{"point":"inf","word":"g0'"}])");
      f.verdict = "ZeroFPP";
    }
  } else if (name == "chebyshev_d2") {
    e.description = "iterated monodromy group of x^2 - 2: a = (1,1)s, b = (a,b)";
    e.presentation = detail::pres(
        R"({"degree":2,"generators":[{"name":"a","perm":[2,1],"sections":[[],[]]},{"name":"b","perm":[1,2],"sections":[["a"],["b"]]}]})");
    detail::attach(e, R"({"coeffs":[-2,0,1]})",
                   R"([{"point":"-2","word":"a"},{"point":"2","word":"b"},{"point":"inf","word":"b' a'"}])");
    f.level_transitive = true;
    f.fractal = true;
    f.mixing = {{1, 1, 4, true}, {2, 2, 4, false}};
    f.fixer_proportions = detail::proportions(1, 10, [](int n) {
      return (Rational(1) + detail::pow_rational(2, n - 1)) / detail::pow_rational(2, n + 1);
    });
    f.verdict = "ChebyshevLike";
    f.predicted_fpp = Rational(1, 4);
    f.kg_index = 2;
    f.kg_L = 3;
    f.kg_m = 2;
  } else if (name == "chebyshev_d3") {
    e.description = "iterated monodromy group of x^3 - 3x: a = (1,1,a)(1 2), b = (b,1,1)(2 3)";
    e.degree = 3;
    e.presentation = detail::pres(
        R"({"degree":3,"generators":[{"name":"a","perm":[2,1,3],"sections":[[],[],["a"]]},{"name":"b","perm":[1,3,2],"sections":[["b"],[],[]]}]})");
    detail::attach(e, R"({"coeffs":[0,-3,0,1]})",
                   R"([{"point":"2","word":"a"},{"point":"-2","word":"b"},{"point":"inf","word":"b' a'"}])");
    f.level_transitive = true;
    f.structure_depth = 3;
    f.fixer_proportions = detail::proportions(1, 7, [](int n) {
      return (Rational(1) + detail::pow_rational(3, n)) / (Rational(2) * detail::pow_rational(3, n));
    });
    f.verdict = "ChebyshevLike";
    f.predicted_fpp = Rational(1, 2);
  } else if (name == "basilica") {
    e.description = "iterated monodromy group of x^2 - 1: a = (b,1)s, b = (a,1)";
    e.presentation = detail::pres(
        R"({"degree":2,"generators":[{"name":"a","perm":[2,1],"sections":[["b"],[]]},{"name":"b","perm":[1,2],"sections":[["a"],[]]}]})");
    detail::attach(e, R"({"coeffs":[-1,0,1]})",
                   R"([{"point":"-1","word":"a"},{"point":"0","word":"b"},{"point":"inf","word":"b' a'"}])");
    f.level_transitive = true;
    f.fractal = true;
    f.mixing = {{1, 1, 4, true}, {1, 2, 4, true}};
    f.fixer_proportions_decreasing = true;
    f.verdict = "ZeroFPP";
  } else if (name == "grigorchuk") {
    e.description = "first Grigorchuk group; structural fixture without a polynomial";
    e.presentation = detail::pres(
        R"({"degree":2,"generators":[{"name":"a","perm":[2,1],"sections":[[],[]]},{"name":"b","perm":[1,2],"sections":[["a"],["c"]]},{"name":"c","perm":[1,2],"sections":[["a"],["d"]]},{"name":"d","perm":[1,2],"sections":[[],["b"]]}]})");
    f.level_transitive = true;
    f.fractal = true;
    f.super_strongly_fractal = true;
    f.mixing = {{1, 1, 0, true}};
    f.kg_index = 1;
    f.kg_L = 2;
    f.kg_m = 1;
  } else if (name == "projection_invariant_example") {
    e.description = "H = <ba> inside <a, b>, a = (1,1)s, b = (a,b); projection-invariant, not self-similar";
    e.presentation = detail::pres(
        R"({"degree":2,"generators":[{"name":"h","perm":[2,1],"sections":[["a"],["b"]]},{"name":"a","perm":[2,1],"sections":[[],[]],"auxiliary":true},{"name":"b","perm":[1,2],"sections":[["a"],["b"]],"auxiliary":true}]})");
    f.level_transitive = true;
    f.fixer_proportions = detail::proportions(1, 6, [](int n) { return Rational(1) / detail::pow_rational(2, n); });
  } else {
    throw UnknownEntry("unknown catalog entry '" + name + "'");
  }
  if (e.presentation) e.degree = e.presentation->degree();
  return e;
}

}  // namespace arbor
