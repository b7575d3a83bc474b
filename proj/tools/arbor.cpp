// arbor: batch front end for the arbor library.
//
// Exit codes: 0 success, 2 a mathematical check failed (report still written),
// 1 usage or input error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "arbor/arbor.hpp"

namespace {

using nlohmann::json;
using namespace arbor;

struct Options {
  std::string pres_path;
  std::string poly_path;
  std::string catalog;
  std::string format = "json";
  std::string output;
  std::size_t budget = 0;  // 0 = default (ARBOR_BUDGET or 2e6)
  int level = 3;
  int levels = 5;
  int bound = 2;
  int m = 1;
  int n = 1;
  int N = 0;
  int L = 2;
  int degree = 2;
  int depth = 3;
  int conj_len = 2;
  std::string generator;
  std::string u = "1";
  std::string w = "1";
  std::string source = "aut";
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int word_length = 32;
  bool heuristic = false;
  bool portraits = false;
  int orbit_bound = 64;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::size_t budget_of(const Options& o) { return o.budget ? o.budget : default_element_budget(); }

/// Presentation plus optional designation source, from --pres or --catalog.
struct GroupInput {
  WreathPresentation pres;
  std::optional<json> designation;
  std::string label;
};

GroupInput load_group(const Options& o) {
  if (!o.pres_path.empty()) {
    json doc = read_json_file(o.pres_path);
    GroupInput g{WreathPresentation::from_json(doc), std::nullopt, o.pres_path};
    if (doc.contains("designation")) g.designation = doc.at("designation");
    return g;
  }
  if (!o.catalog.empty()) {
    CatalogEntry e = catalog_get(o.catalog);
    if (!e.presentation) throw InputError("catalog entry '" + o.catalog + "' has no finite presentation");
    GroupInput g{*e.presentation, std::nullopt, "catalog:" + o.catalog};
    if (e.designation) g.designation = e.designation->to_json(*e.presentation);
    return g;
  }
  throw InputError("one of --pres or --catalog is required");
}

PolynomialMap load_poly(const Options& o) {
  if (!o.poly_path.empty()) return PolynomialMap::from_json(read_json_file(o.poly_path));
  if (!o.catalog.empty()) {
    CatalogEntry e = catalog_get(o.catalog);
    if (!e.polynomial) throw InputError("catalog entry '" + o.catalog + "' has no polynomial");
    return *e.polynomial;
  }
  throw InputError("one of --poly or --catalog is required");
}

/// Writes the report, echoing the resolved config, and returns the exit code.
class Emitter {
 public:
  Emitter(const Options& o, std::string command, json config) : o_(o), command_(std::move(command)), config_(std::move(config)) {
    config_["command"] = command_;
    config_["format"] = o_.format;
    config_["budget"] = budget_of(o_);
    if (!o_.pres_path.empty()) config_["pres"] = o_.pres_path;
    if (!o_.poly_path.empty()) config_["poly"] = o_.poly_path;
    if (!o_.catalog.empty()) config_["catalog"] = o_.catalog;
  }

  int json_result(const json& result, bool pass = true) {
    json doc = {{"config", config_}, {"result", result}};
    if (!pass) doc["check_failed"] = true;
    write(doc.dump(2) + "\n");
    return pass ? 0 : 2;
  }

  int csv_result(const std::string& body, bool pass = true) {
    std::ostringstream out;
    for (const auto& [k, v] : config_.items()) out << "# " << k << "=" << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    out << body;
    write(out.str());
    return pass ? 0 : 2;
  }

  bool csv() const { return o_.format == "csv"; }

 private:
  void write(const std::string& text) {
    if (o_.output.empty()) {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream out(o_.output);
    if (!out) throw InputError("cannot write '" + o_.output + "'");
    out << text;
  }

  const Options& o_;
  std::string command_;
  json config_;
};

void add_group_source(CLI::App* app, Options& o) {
  app->add_option("--pres", o.pres_path, "presentation JSON file");
  app->add_option("--catalog", o.catalog, "catalog entry name");
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--budget", o.budget, "element budget (default: ARBOR_BUDGET or 2000000)");
  app->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--output,-o", o.output, "output path (default: stdout)");
}

std::string csv_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

int run_fpp_table(const Options& o) {
  FixedPointTable t;
  json config = {{"levels", o.levels}};
  if (o.catalog == "full_aut_d2") {
    t = fixed_point_table_from([&](int n) { return full_automorphism_quotient(2, n, budget_of(o)); }, o.levels);
  } else {
    const GroupInput g = load_group(o);
    t = fixed_point_table(g.pres, o.levels, budget_of(o));
  }
  Emitter e(o, "fpp table", config);
  if (e.csv()) return e.csv_result(t.to_csv());
  return e.json_result(t.to_json());
}

int run_aut_tree(const Options& o) {
  const AutTreeFpp a = aut_tree_fpp(o.degree, o.levels);
  Emitter e(o, "fpp aut-tree", {{"degree", o.degree}, {"levels", o.levels}});
  if (e.csv()) {
    std::ostringstream out;
    out << "level,p_num,p_den,p_float,p_lower_float,p_upper_float\n";
    for (const auto& l : a.levels) {
      if (l.level == 0) continue;
      if (l.exact) {
        out << l.level << ',' << numerator_of(*l.exact) << ',' << denominator_of(*l.exact) << ','
            << csv_double(to_double(*l.exact)) << ',' << csv_double(to_double(*l.exact)) << ','
            << csv_double(to_double(*l.exact)) << '\n';
      } else {
        out << l.level << ",,," << csv_double((to_double(l.lower) + to_double(l.upper)) / 2) << ','
            << csv_double(to_double(l.lower)) << ',' << csv_double(to_double(l.upper)) << '\n';
      }
    }
    return e.csv_result(out.str());
  }
  json j = a.to_json();
  j["levels"].erase(0);  // n = 0 is the trivial p_0 = 1
  return e.json_result(j);
}

int run_dihedral(const Options& o) {
  Emitter e(o, "fpp dihedral", {{"degree", o.degree}, {"levels", o.levels}});
  std::ostringstream out;
  json rows = json::array();
  out << "level,proportion_num,proportion_den,proportion_float\n";
  for (int n = 1; n <= o.levels; ++n) {
    const Rational p = dihedral_fpp_closed_form(o.degree, n);
    out << n << ',' << numerator_of(p) << ',' << denominator_of(p) << ',' << csv_double(to_double(p)) << '\n';
    rows.push_back({{"level", n}, {"proportion", to_string(p)}, {"proportion_float", to_double(p)}});
  }
  const Rational limit = o.degree % 2 == 1 ? Rational(1, 2) : Rational(1, 4);
  if (e.csv()) return e.csv_result(out.str());
  return e.json_result({{"levels", rows}, {"limit", to_string(limit)}, {"limit_float", to_double(limit)}});
}

int run_sample(const Options& o) {
  json config = {{"source", o.source}, {"level", o.level},   {"trials", o.trials},
                 {"seed", o.seed},     {"threads", o.threads}, {"heuristic", o.heuristic}};
  MonteCarloEstimate est;
  if (o.source == "aut") {
    config["degree"] = o.degree;
    est = monte_carlo_fpp(AutTreeSource{o.degree}, o.level, o.trials, o.seed, o.threads);
  } else {
    const GroupInput g = load_group(o);
    if (o.source == "quotient") {
      const FiniteQuotient q = enumerate_quotient(g.pres, o.level, budget_of(o));
      est = monte_carlo_fpp(QuotientSource{&q}, o.level, o.trials, o.seed, o.threads);
    } else {
      config["word_length"] = o.word_length;
      est = monte_carlo_fpp(RandomWordSource{&g.pres, o.word_length, o.heuristic}, o.level, o.trials, o.seed, o.threads);
    }
  }
  Emitter e(o, "fpp sample", config);
  if (e.csv()) {
    std::ostringstream out;
    out << "trials,hits,estimate,ci99_low,ci99_high,heuristic\n"
        << est.trials << ',' << est.hits << ',' << csv_double(est.estimate) << ',' << csv_double(est.ci_low) << ','
        << csv_double(est.ci_high) << ',' << (est.heuristic ? 1 : 0) << '\n';
    return e.csv_result(out.str());
  }
  return e.json_result(est.to_json());
}

int run_martingale(const Options& o) {
  const GroupInput g = load_group(o);
  const MartingaleReport r = martingale_fiber_check(g.pres, o.level, budget_of(o));
  const bool transitive = subtree_transitivity(g.pres, o.level, 1, budget_of(o));
  Emitter e(o, "fpp martingale", {{"level", o.level}});
  json j = r.to_json();
  j["subtree_transitive"] = transitive;
  j["agree"] = transitive == r.pass;
  return e.json_result(j, r.pass);
}

GroupWord parse_generator(const WreathPresentation& pres, const std::string& name) {
  const GroupWord w = pres.parse_word(name);
  if (w.size() != 1) throw InputError("--generator must name a single generator");
  return w;
}

int run_dyn(const Options& o, const std::string& which) {
  const PolynomialMap f = load_poly(o);
  const CriticalData crit = critical_data(f);
  json config = {{"orbit_bound", o.orbit_bound}};
  if (which == "analyze" || which == "classify") {
    const PostCriticalSet P = post_critical_orbit(f, crit, o.orbit_bound);
    Emitter e(o, "dyn " + which, config);
    if (!P.pcf) {
      json j = {{"polynomial", f.str()}, {"critical", crit.to_json()}, {"post_critical", P.to_json()}, {"verdict", "NotPCFWithinBound"}};
      return e.json_result(j, false);
    }
    const DynOrbifoldReport r = analyze_polynomial(f, crit, o.orbit_bound);
    if (which == "analyze") return e.json_result(r.to_json());
    json j = {{"polynomial", r.polynomial},
              {"verdict", r.to_json().at("verdict")},
              {"predicted_fpp", r.to_json().at("predicted_fpp")},
              {"predicted_fpp_float", r.to_json().at("predicted_fpp_float")},
              {"upsilon_cap_K", r.to_json().at("upsilon_cap_K")},
              {"orbifold_type", r.signature.type_string()},
              {"scope", DynOrbifoldReport::kScope}};
    return e.json_result(j);
  }
  if (which == "chebyshev") {
    const DynOrbifoldReport r = analyze_polynomial(f, crit, o.orbit_bound);
    const TwistedChebyshevResult t = detect_twisted_chebyshev(f, r);
    Emitter e(o, "dyn chebyshev", config);
    return e.json_result(t.to_json(), t.match.has_value());
  }
  // validate
  const GroupInput g = load_group(o);
  if (!g.designation) throw InputError("the presentation carries no \"designation\" array");
  const Designation des = Designation::from_json(g.pres, f.field(), *g.designation);
  const PostCriticalSet P = post_critical_orbit(f, crit, o.orbit_bound);
  config["depth"] = o.depth;
  const ValidationReport r = check_recursion_against_polynomial(g.pres, des, f, crit, P, o.depth, budget_of(o));
  Emitter e(o, "dyn validate", config);
  json j = r.to_json();
  if (const auto* bad = r.first_failure()) j["first_failed_clause"] = bad->clause;
  return e.json_result(j, r.pass());
}

int run_catalog_list(const Options& o) {
  Emitter e(o, "catalog list", json::object());
  json rows = json::array();
  std::ostringstream out;
  out << "name,degree,virtual,polynomial\n";
  for (const auto& name : catalog_names()) {
    const CatalogEntry c = catalog_get(name);
    rows.push_back({{"name", name}, {"description", c.description}, {"degree", c.degree}, {"virtual", c.is_virtual()},
                    {"polynomial", c.polynomial ? c.polynomial->str() : ""}});
    out << name << ',' << c.degree << ',' << (c.is_virtual() ? 1 : 0) << ',' << (c.polynomial ? c.polynomial->str() : "") << '\n';
  }
  if (e.csv()) return e.csv_result(out.str());
  return e.json_result(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arbor: self-similar groups, fixed-point proportions and PCF polynomial dynamics"};
  app.require_subcommand(1);
  Options o;
  int code = 0;

  auto* group = app.add_subcommand("group", "group engine")->require_subcommand(1);
  auto* fpp = app.add_subcommand("fpp", "fixed-point proportions")->require_subcommand(1);
  auto* dyn = app.add_subcommand("dyn", "PCF polynomial dynamics")->require_subcommand(1);
  auto* cat = app.add_subcommand("catalog", "vetted fixtures")->require_subcommand(1);

  auto* g_enum = group->add_subcommand("enumerate", "enumerate pi_n(G)");
  g_enum->add_option("--level", o.level, "tree level n")->capture_default_str();
  g_enum->add_flag("--portraits", o.portraits, "include element portraits");
  auto* g_frac = group->add_subcommand("check-fractal", "vertex projections onto pi_m(G)");
  auto* g_ssf = group->add_subcommand("check-ssf", "stabilizer projections onto pi_m(G)");
  for (auto* c : {g_frac, g_ssf}) {
    c->add_option("--bound", o.bound, "largest vertex level")->capture_default_str();
    c->add_option("--m", o.m, "target quotient level")->capture_default_str();
  }
  auto* g_mix = group->add_subcommand("check-mixing", "finite mixing certificate");
  g_mix->add_option("--n", o.n)->capture_default_str();
  g_mix->add_option("--m", o.m)->capture_default_str();
  g_mix->add_option("--N", o.N, "delay")->capture_default_str();
  auto* g_comm = group->add_subcommand("commutator-search", "commutator-trick witness search");
  g_comm->add_option("--generator", o.generator, "generator s")->required();
  g_comm->add_option("--N", o.N, "largest vertex level")->capture_default_str();
  g_comm->add_option("--conj-len", o.conj_len, "longest conjugator")->capture_default_str();
  auto* g_kg = group->add_subcommand("kg", "stabilizer-projection intersection along 1^j");
  g_kg->add_option("--L", o.L)->capture_default_str();
  g_kg->add_option("--m", o.m)->capture_default_str();
  auto* g_pseudo = group->add_subcommand("pseudomixing", "cone-pair counting identity");
  g_pseudo->add_option("--n", o.n)->capture_default_str();
  g_pseudo->add_option("--m", o.m)->capture_default_str();
  g_pseudo->add_option("--u", o.u, "vertex of level n")->capture_default_str();
  g_pseudo->add_option("--w", o.w, "vertex below u")->capture_default_str();
  for (auto* c : {g_enum, g_frac, g_ssf, g_mix, g_comm, g_kg, g_pseudo}) {
    add_group_source(c, o);
    add_common(c, o);
  }

  auto* f_table = fpp->add_subcommand("table", "exact fixer proportions per level");
  f_table->add_option("--levels", o.levels)->capture_default_str();
  add_group_source(f_table, o);
  auto* f_mart = fpp->add_subcommand("martingale", "E[X_{n+1} | pi_n] = X_n check");
  f_mart->add_option("--level", o.level)->capture_default_str();
  add_group_source(f_mart, o);
  auto* f_aut = fpp->add_subcommand("aut-tree", "exact Aut(T) recursion");
  auto* f_dih = fpp->add_subcommand("dihedral", "dihedral closed form");
  for (auto* c : {f_aut, f_dih}) {
    c->add_option("--degree", o.degree)->capture_default_str();
    c->add_option("--levels", o.levels)->capture_default_str();
  }
  auto* f_sample = fpp->add_subcommand("sample", "Monte-Carlo estimate of mu(X_n >= 1)");
  f_sample->add_option("--source", o.source)->check(CLI::IsMember({"aut", "quotient", "words"}))->capture_default_str();
  f_sample->add_option("--level", o.level)->capture_default_str();
  f_sample->add_option("--degree", o.degree)->capture_default_str();
  f_sample->add_option("--trials", o.trials)->capture_default_str();
  f_sample->add_option("--seed", o.seed)->capture_default_str();
  f_sample->add_option("--threads", o.threads)->capture_default_str();
  f_sample->add_option("--word-length", o.word_length)->capture_default_str();
  f_sample->add_flag("--heuristic", o.heuristic, "accept non-uniform random words");
  add_group_source(f_sample, o);
  for (auto* c : {f_table, f_mart, f_aut, f_dih, f_sample}) add_common(c, o);

  std::vector<std::pair<CLI::App*, std::string>> dyn_cmds;
  for (const char* name : {"analyze", "classify", "chebyshev", "validate"}) {
    auto* c = dyn->add_subcommand(name, std::string("dyn ") + name);
    c->add_option("--poly", o.poly_path, "polynomial JSON file");
    c->add_option("--catalog", o.catalog, "catalog entry name");
    c->add_option("--orbit-bound", o.orbit_bound)->capture_default_str();
    add_common(c, o);
    dyn_cmds.emplace_back(c, name);
  }
  dyn_cmds.back().first->add_option("--pres", o.pres_path, "presentation JSON with a designation array");
  dyn_cmds.back().first->add_option("--depth", o.depth)->capture_default_str();

  auto* c_list = cat->add_subcommand("list", "list entries");
  auto* c_show = cat->add_subcommand("show", "show one entry");
  c_show->add_option("name", o.catalog, "entry name")->required();
  for (auto* c : {c_list, c_show}) add_common(c, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (g_enum->parsed()) {
      const GroupInput g = load_group(o);
      const FiniteQuotient q = enumerate_quotient(g.pres, o.level, budget_of(o));
      Emitter e(o, "group enumerate", {{"level", o.level}, {"portraits", o.portraits}});
      json j = q.to_json(&g.pres, o.portraits);
      j["level_transitive"] = check_level_transitive(q);
      code = e.json_result(j);
    } else if (g_frac->parsed() || g_ssf->parsed()) {
      const GroupInput g = load_group(o);
      const bool ssf = g_ssf->parsed();
      const VertexProjectionReport r = ssf ? check_super_strongly_fractal(g.pres, o.bound, o.m, budget_of(o))
                                           : check_fractal(g.pres, o.bound, o.m, budget_of(o));
      Emitter e(o, ssf ? "group check-ssf" : "group check-fractal", {{"bound", o.bound}, {"m", o.m}});
      code = e.json_result(r.to_json(), r.pass);
    } else if (g_mix->parsed()) {
      const GroupInput g = load_group(o);
      const MixingCertificate c = check_mixing_certificate(g.pres, o.n, o.m, o.N, budget_of(o));
      Emitter e(o, "group check-mixing", {{"n", o.n}, {"m", o.m}, {"N", o.N}});
      code = e.json_result(c.to_json(g.pres), c.pass);
    } else if (g_comm->parsed()) {
      const GroupInput g = load_group(o);
      const GroupWord s = parse_generator(g.pres, o.generator);
      const CommutatorSearchResult r = commutator_search(g.pres, s, o.N, o.conj_len);
      Emitter e(o, "group commutator-search", {{"generator", o.generator}, {"N", o.N}, {"conj_len", o.conj_len}});
      json j = {{"found", r.witness.has_value()}, {"candidates_tried", r.candidates_tried}};
      if (r.witness) j["witness"] = r.witness->to_json(g.pres);
      code = e.json_result(j, r.witness.has_value());
    } else if (g_kg->parsed()) {
      const GroupInput g = load_group(o);
      const KgReport r = kg_depth(g.pres, o.L, o.m, budget_of(o));
      Emitter e(o, "group kg", {{"L", o.L}, {"m", o.m}});
      code = e.json_result(r.to_json());
    } else if (g_pseudo->parsed()) {
      const GroupInput g = load_group(o);
      const Vertex u = o.u.empty() ? Vertex{} : Vertex::parse(o.u);
      const Vertex w = o.w.empty() ? Vertex{} : Vertex::parse(o.w);
      const PseudomixingReport r = verify_pseudomixing(g.pres, o.n, o.m, u, w, budget_of(o));
      Emitter e(o, "group pseudomixing", {{"n", o.n}, {"m", o.m}, {"u", o.u}, {"w", o.w}});
      code = e.json_result(r.to_json(), r.pass);
    } else if (f_table->parsed()) {
      code = run_fpp_table(o);
    } else if (f_mart->parsed()) {
      code = run_martingale(o);
    } else if (f_aut->parsed()) {
      code = run_aut_tree(o);
    } else if (f_dih->parsed()) {
      code = run_dihedral(o);
    } else if (f_sample->parsed()) {
      code = run_sample(o);
    } else if (c_list->parsed()) {
      code = run_catalog_list(o);
    } else if (c_show->parsed()) {
      Emitter e(o, "catalog show", {{"name", o.catalog}});
      code = e.json_result(catalog_get(o.catalog).to_json());
    } else {
      for (const auto& [c, name] : dyn_cmds) {
        if (c->parsed()) code = run_dyn(o, name);
      }
    }
  } catch (const InputError& e) {
    std::cerr << "arbor: " << e.what() << "\n";
    return 1;
  } catch (const arbor::Error& e) {
    std::cerr << "arbor: " << e.what() << "\n";
    return 1;
  }
  return code;
}
