#pragma once

// Self-similar groups given by wreath recursions g = (g|_1, ..., g|_d) pi_1(g),
// where each section is a word in the generators. Words multiply left to right
// with the right-action convention of tree.hpp: the word "a b" means a first.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/tree.hpp"

namespace arbor {

struct Letter {
  std::uint32_t generator = 0;
  int exponent = 1;  // +1 or -1

  Letter inverse() const { return {generator, -exponent}; }
  friend bool operator==(const Letter&, const Letter&) = default;
  friend auto operator<=>(const Letter& a, const Letter& b) {
    if (auto c = a.generator <=> b.generator; c != 0) return c;
    return b.exponent <=> a.exponent;  // x before x'
  }
};

class GroupWord {
 public:
  GroupWord() = default;
  explicit GroupWord(std::vector<Letter> letters) : letters_(std::move(letters)) {}

  static GroupWord generator(std::uint32_t g, int exponent = 1) { return GroupWord({Letter{g, exponent}}); }

  const std::vector<Letter>& letters() const { return letters_; }
  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }

  /// Cancels adjacent inverse pairs until none remain.
  GroupWord reduced() const {
    std::vector<Letter> out;
    out.reserve(letters_.size());
    for (const Letter& l : letters_) {
      if (!out.empty() && out.back() == l.inverse()) {
        out.pop_back();
      } else {
        out.push_back(l);
      }
    }
    return GroupWord(std::move(out));
  }

  GroupWord inverse() const {
    std::vector<Letter> out;
    out.reserve(letters_.size());
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) out.push_back(it->inverse());
    return GroupWord(std::move(out));
  }

  GroupWord power(int k) const {
    const GroupWord base = k < 0 ? inverse() : *this;
    std::vector<Letter> out;
    for (int i = 0; i < std::abs(k); ++i) out.insert(out.end(), base.letters_.begin(), base.letters_.end());
    return GroupWord(std::move(out));
  }

  friend GroupWord operator*(const GroupWord& a, const GroupWord& b) {
    std::vector<Letter> out = a.letters_;
    out.insert(out.end(), b.letters_.begin(), b.letters_.end());
    return GroupWord(std::move(out));
  }

  friend bool operator==(const GroupWord&, const GroupWord&) = default;
  /// Shortlex: shorter first, then lexicographic on letters.
  friend auto operator<=>(const GroupWord& a, const GroupWord& b) {
    if (auto c = a.letters_.size() <=> b.letters_.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(a.letters_.begin(), a.letters_.end(), b.letters_.begin(),
                                                  b.letters_.end());
  }

 private:
  std::vector<Letter> letters_;
};

struct GroupWordHash {
  std::size_t operator()(const GroupWord& w) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (const Letter& l : w.letters()) {
      h ^= (static_cast<std::size_t>(l.generator) << 1) | (l.exponent < 0 ? 1U : 0U);
      h *= 1099511628211ULL;
    }
    return h;
  }
};

struct Generator {
  std::string name;
  std::vector<std::uint8_t> perm;  // 0-based: perm[i] is the image of symbol i+1, minus one
  std::vector<GroupWord> sections;  // sections[i] = g|_{i+1}
  /// Auxiliary generators only supply sections; they are not part of the
  /// generated group. This lets non-self-similar subgroups be presented.
  bool auxiliary = false;
};

class WreathPresentation {
 public:
  WreathPresentation() = default;
  WreathPresentation(TreeShape shape, std::vector<Generator> generators)
      : shape_(shape), generators_(std::move(generators)) {
    validate();
  }

  /// {"degree": d, "generators": [{"name": str, "perm": [1-based images],
  ///   "sections": [word, ...], "auxiliary": bool?}]}, word = ["a", "b'"].
  static WreathPresentation from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("presentation must be a JSON object");
    try {
      const TreeShape shape(doc.at("degree").get<int>());
      WreathPresentation pres;
      pres.shape_ = shape;
      const auto& gens = doc.at("generators");
      if (!gens.is_array()) throw SchemaError("'generators' must be an array");
      for (const auto& g : gens) {
        Generator gen;
        gen.name = g.at("name").get<std::string>();
        gen.perm = Portrait::permutation_from_images(shape.degree, g.at("perm").get<std::vector<int>>());
        gen.auxiliary = g.value("auxiliary", false);
        pres.generators_.push_back(std::move(gen));
      }
      pres.check_names();
      for (std::size_t i = 0; i < gens.size(); ++i) {
        const auto& sections = gens[i].at("sections");
        if (!sections.is_array() || sections.size() != static_cast<std::size_t>(shape.degree)) {
          throw SchemaError("generator '" + pres.generators_[i].name + "' needs " + std::to_string(shape.degree) +
                            " sections");
        }
        for (const auto& s : sections) pres.generators_[i].sections.push_back(pres.parse_word(s));
      }
      pres.validate();
      return pres;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("presentation JSON: ") + e.what());
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& g : generators_) {
      nlohmann::json perm = nlohmann::json::array();
      for (auto y : g.perm) perm.push_back(static_cast<int>(y) + 1);
      nlohmann::json sections = nlohmann::json::array();
      for (const auto& s : g.sections) sections.push_back(word_tokens(s));
      nlohmann::json entry = {{"name", g.name}, {"perm", perm}, {"sections", sections}};
      if (g.auxiliary) entry["auxiliary"] = true;
      gens.push_back(std::move(entry));
    }
    return {{"degree", shape_.degree}, {"generators", gens}};
  }

  TreeShape shape() const { return shape_; }
  int degree() const { return shape_.degree; }
  const std::vector<Generator>& generators() const { return generators_; }
  const Generator& generator(std::size_t i) const { return generators_.at(i); }

  /// Indices of the generators of the group itself (non-auxiliary), in order.
  std::vector<std::uint32_t> active_generators() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < generators_.size(); ++i) {
      if (!generators_[i].auxiliary) out.push_back(i);
    }
    return out;
  }

  std::optional<std::uint32_t> find(std::string_view name) const {
    for (std::uint32_t i = 0; i < generators_.size(); ++i) {
      if (generators_[i].name == name) return i;
    }
    return std::nullopt;
  }

  /// Token array ["a", "b'"] or a whitespace-separated string "a b'".
  GroupWord parse_word(const nlohmann::json& tokens) const {
    if (tokens.is_string()) return parse_word(tokens.get<std::string>());
    if (!tokens.is_array()) throw SchemaError("a word must be an array of tokens");
    std::vector<Letter> letters;
    for (const auto& t : tokens) {
      if (!t.is_string()) throw SchemaError("word tokens must be strings");
      letters.push_back(parse_token(t.get<std::string>()));
    }
    return GroupWord(std::move(letters));
  }

  GroupWord parse_word(const char* text) const { return parse_word(std::string(text)); }
  GroupWord parse_word(const std::string& text) const {
    std::istringstream in(text);
    std::vector<Letter> letters;
    std::string token;
    while (in >> token) letters.push_back(parse_token(token));
    return GroupWord(std::move(letters));
  }

  nlohmann::json word_tokens(const GroupWord& w) const {
    nlohmann::json out = nlohmann::json::array();
    for (const Letter& l : w.letters()) out.push_back(generators_.at(l.generator).name + (l.exponent < 0 ? "'" : ""));
    return out;
  }

  std::string format_word(const GroupWord& w) const {
    if (w.empty()) return "1";
    std::string s;
    for (const Letter& l : w.letters()) {
      if (!s.empty()) s += ' ';
      s += generators_.at(l.generator).name;
      if (l.exponent < 0) s += '\'';
    }
    return s;
  }

  /// 0-based permutation of level 1 induced by a word.
  std::vector<std::uint8_t> root_permutation(const GroupWord& w) const {
    const std::size_t d = static_cast<std::size_t>(shape_.degree);
    std::vector<std::uint8_t> cur(d);
    for (std::size_t x = 0; x < d; ++x) cur[x] = static_cast<std::uint8_t>(x);
    for (const Letter& l : w.letters()) {
      const auto& p = generators_[l.generator].perm;
      for (std::size_t x = 0; x < d; ++x) {
        if (l.exponent > 0) {
          cur[x] = p[cur[x]];
        } else {
          cur[x] = static_cast<std::uint8_t>(std::find(p.begin(), p.end(), cur[x]) - p.begin());
        }
      }
    }
    return cur;
  }

  /// The d first-level sections of a word, freely reduced: result[x] = w|_{x+1}.
  std::vector<GroupWord> first_level_sections(const GroupWord& w) const {
    const std::size_t d = static_cast<std::size_t>(shape_.degree);
    std::vector<GroupWord> out(d);
    for (std::size_t x0 = 0; x0 < d; ++x0) {
      std::vector<Letter> acc;
      std::size_t cur = x0;
      for (const Letter& l : w.letters()) {
        const Generator& g = generators_[l.generator];
        if (l.exponent > 0) {
          const auto& s = g.sections[cur].letters();
          acc.insert(acc.end(), s.begin(), s.end());
          cur = g.perm[cur];
        } else {
          // (g^-1)|_x = (g|_{x^{g^-1}})^-1
          cur = static_cast<std::size_t>(std::find(g.perm.begin(), g.perm.end(), cur) - g.perm.begin());
          const GroupWord inv = g.sections[cur].inverse();
          acc.insert(acc.end(), inv.letters().begin(), inv.letters().end());
        }
      }
      out[x0] = GroupWord(std::move(acc)).reduced();
    }
    return out;
  }

 private:
  Letter parse_token(std::string token) const {
    int exponent = 1;
    if (!token.empty() && token.back() == '\'') {
      exponent = -1;
      token.pop_back();
    }
    const auto idx = find(token);
    if (!idx) throw UnknownGenerator("unknown generator '" + token + "'");
    return Letter{*idx, exponent};
  }

  void check_names() const {
    std::unordered_set<std::string> names;
    for (const auto& g : generators_) {
      if (g.name.empty()) throw SchemaError("generator names must be nonempty");
      if (g.name.find_first_of(" '\t\n") != std::string::npos) throw SchemaError("bad generator name '" + g.name + "'");
      if (!names.insert(g.name).second) throw SchemaError("duplicate generator name '" + g.name + "'");
    }
  }

  void validate() const {
    check_names();
    const std::size_t d = static_cast<std::size_t>(shape_.degree);
    for (const auto& g : generators_) {
      if (g.perm.size() != d) throw BadPermutation("generator '" + g.name + "' has a permutation of the wrong size");
      std::vector<bool> seen(d, false);
      for (auto y : g.perm) {
        if (y >= d || seen[y]) throw BadPermutation("generator '" + g.name + "' root label is not a bijection");
        seen[y] = true;
      }
      if (g.sections.size() != d) throw SchemaError("generator '" + g.name + "' needs " + std::to_string(d) + " sections");
      for (const auto& s : g.sections) {
        for (const Letter& l : s.letters()) {
          if (l.generator >= generators_.size()) throw UnknownGenerator("section of '" + g.name + "' names an undeclared generator");
        }
      }
    }
  }

  TreeShape shape_;
  std::vector<Generator> generators_;
};

/// Unfolds the recursion into depth-m portraits, caching every depth built so
/// far. Single-owner; construct one per thread.
class PortraitEvaluator {
 public:
  explicit PortraitEvaluator(const WreathPresentation& pres) : pres_(&pres) {}

  const Portrait& generator(std::uint32_t g, int depth) {
    ensure(depth);
    return gens_[static_cast<std::size_t>(depth)][g];
  }
  const Portrait& generator_inverse(std::uint32_t g, int depth) {
    ensure(depth);
    return invs_[static_cast<std::size_t>(depth)][g];
  }

  Portrait word(const GroupWord& w, int depth) {
    ensure(depth);
    Portrait acc = Portrait::identity(pres_->degree(), depth);
    for (const Letter& l : w.letters()) {
      acc = compose(acc, l.exponent > 0 ? gens_[static_cast<std::size_t>(depth)][l.generator]
                                        : invs_[static_cast<std::size_t>(depth)][l.generator]);
    }
    return acc;
  }

 private:
  void ensure(int depth) {
    if (depth < 0) throw DepthExceeded("negative depth");
    const auto& gens = pres_->generators();
    while (static_cast<int>(gens_.size()) <= depth) {
      const int k = static_cast<int>(gens_.size());
      std::vector<Portrait> level;
      std::vector<Portrait> inverse;
      for (const auto& g : gens) {
        if (k == 0) {
          level.push_back(Portrait::identity(pres_->degree(), 0));
        } else {
          std::vector<Portrait> children;
          for (const auto& s : g.sections) children.push_back(word(s, k - 1));
          level.push_back(Portrait::from_recursion(g.perm, children));
        }
        inverse.push_back(invert(level.back()));
      }
      gens_.push_back(std::move(level));
      invs_.push_back(std::move(inverse));
    }
  }

  const WreathPresentation* pres_;
  std::vector<std::vector<Portrait>> gens_;
  std::vector<std::vector<Portrait>> invs_;
};

/// Depth-m truncation of the automorphism a word represents.
inline Portrait word_portrait(const WreathPresentation& pres, const GroupWord& w, int depth) {
  PortraitEvaluator eval(pres);
  return eval.word(w, depth);
}

/// A word for w|_v, computed letter by letter with (gh)|_v = g|_v h|_{v^g}
/// and freely reduced after each level.
inline GroupWord word_section(const WreathPresentation& pres, const GroupWord& w, const Vertex& v) {
  v.validate(pres.shape());
  GroupWord cur = w.reduced();
  for (int x : v.symbols()) cur = pres.first_level_sections(cur)[static_cast<std::size_t>(x - 1)];
  return cur;
}

/// Decides whether a word is the identity automorphism: closes {w} under
/// first-level sections and checks every visited root label. Exact whenever it
/// returns; throws BudgetExceeded once more than `budget` distinct reduced
/// words have been visited.
inline bool is_trivial(const WreathPresentation& pres, const GroupWord& w, std::size_t budget = 1'000'000) {
  std::unordered_set<GroupWord, GroupWordHash> seen;
  std::deque<GroupWord> queue;
  GroupWord start = w.reduced();
  seen.insert(start);
  queue.push_back(std::move(start));
  const std::size_t d = static_cast<std::size_t>(pres.degree());
  while (!queue.empty()) {
    GroupWord cur = std::move(queue.front());
    queue.pop_front();
    if (cur.empty()) continue;
    const auto perm = pres.root_permutation(cur);
    for (std::size_t x = 0; x < d; ++x) {
      if (perm[x] != x) return false;
    }
    for (auto& s : pres.first_level_sections(cur)) {
      if (s.empty() || seen.contains(s)) continue;
      if (seen.size() >= budget) throw BudgetExceeded("is_trivial: word closure exceeded the budget", seen.size());
      seen.insert(s);
      queue.push_back(std::move(s));
    }
  }
  return true;
}

}  // namespace arbor
