#pragma once

// Truncated automorphisms of the d-regular rooted tree.
//
// The tree is the free monoid over X = {1..d}; a vertex is a word, its level the
// word length. Automorphisms act on the RIGHT: (vw)^g = v^g w^{g|_v}. Composition
// `compose(p, q)` means "p first, then q", so apply(compose(p,q), v) ==
// apply(q, apply(p, v)).
//
// A depth-m Portrait stores one permutation label per internal vertex (levels
// 0..m-1) in level-major order: the root, then level 1 in rank order, and so on.
// Inside each level, the rank of x_1...x_k is sum (x_i - 1) d^(k-i). Labels are
// kept 0-based in memory; every serialized form is 1-based.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arbor/error.hpp"

namespace arbor {

struct TreeShape {
  int degree = 2;

  explicit TreeShape(int d = 2) : degree(d) {
    if (d < 2 || d > 255) throw SchemaError("tree degree must lie in 2..255, got " + std::to_string(d));
  }
  friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

namespace detail {

/// d^k; callers keep k small enough for the result to fit in memory anyway.
inline std::size_t ipow(std::size_t d, int k) {
  std::size_t r = 1;
  for (int i = 0; i < k; ++i) r *= d;
  return r;
}

/// Number of vertices at levels < k, i.e. the index of the first level-k vertex.
inline std::size_t level_offset(int d, int k) {
  return (ipow(static_cast<std::size_t>(d), k) - 1) / static_cast<std::size_t>(d - 1);
}

}  // namespace detail

/// A vertex of the tree, stored as its word of 1-based symbols.
class Vertex {
 public:
  Vertex() = default;
  explicit Vertex(std::vector<int> symbols) : symbols_(std::move(symbols)) {}

  /// "" is the root. Single-digit symbols may be run together ("121"); larger
  /// alphabets use separators ("1.10.3" or "1,10,3").
  static Vertex parse(std::string_view text) {
    std::vector<int> out;
    const bool separated = text.find_first_of(".,") != std::string_view::npos;
    if (!separated) {
      for (char c : text) {
        if (c < '0' || c > '9') throw SymbolOutOfRange("bad vertex symbol in '" + std::string(text) + "'");
        out.push_back(c - '0');
      }
      return Vertex(std::move(out));
    }
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find_first_of(".,", start);
      const auto piece = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      if (piece.empty()) throw SymbolOutOfRange("empty symbol in '" + std::string(text) + "'");
      int value = 0;
      for (char c : piece) {
        if (c < '0' || c > '9') throw SymbolOutOfRange("bad vertex symbol in '" + std::string(text) + "'");
        value = value * 10 + (c - '0');
      }
      out.push_back(value);
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
    return Vertex(std::move(out));
  }

  /// Inverse of `rank`: the level-k vertex with the given rank.
  static Vertex from_rank(int degree, int level, std::size_t rank) {
    std::vector<int> symbols(static_cast<std::size_t>(level));
    for (int i = level - 1; i >= 0; --i) {
      symbols[static_cast<std::size_t>(i)] = static_cast<int>(rank % static_cast<std::size_t>(degree)) + 1;
      rank /= static_cast<std::size_t>(degree);
    }
    return Vertex(std::move(symbols));
  }

  int level() const { return static_cast<int>(symbols_.size()); }
  bool is_root() const { return symbols_.empty(); }
  std::span<const int> symbols() const { return symbols_; }
  int operator[](std::size_t i) const { return symbols_[i]; }

  Vertex child(int x) const {
    Vertex v = *this;
    v.symbols_.push_back(x);
    return v;
  }
  Vertex prefix(int k) const {
    return Vertex(std::vector<int>(symbols_.begin(), symbols_.begin() + k));
  }
  Vertex suffix(int k) const {
    return Vertex(std::vector<int>(symbols_.begin() + k, symbols_.end()));
  }
  friend Vertex operator+(const Vertex& u, const Vertex& w) {
    std::vector<int> s = u.symbols_;
    s.insert(s.end(), w.symbols_.begin(), w.symbols_.end());
    return Vertex(std::move(s));
  }

  void validate(TreeShape shape) const {
    for (int x : symbols_) {
      if (x < 1 || x > shape.degree) {
        throw SymbolOutOfRange("vertex symbol " + std::to_string(x) + " outside 1.." + std::to_string(shape.degree));
      }
    }
  }

  std::size_t rank(int degree) const {
    std::size_t r = 0;
    for (int x : symbols_) r = r * static_cast<std::size_t>(degree) + static_cast<std::size_t>(x - 1);
    return r;
  }

  std::string str() const {
    const bool wide = std::any_of(symbols_.begin(), symbols_.end(), [](int x) { return x > 9; });
    std::string s;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (wide && i > 0) s += '.';
      s += std::to_string(symbols_[i]);
    }
    return s;
  }

  friend auto operator<=>(const Vertex&, const Vertex&) = default;
  friend bool operator==(const Vertex&, const Vertex&) = default;

 private:
  std::vector<int> symbols_;
};

/// All level-k vertices in rank order.
inline std::vector<Vertex> level_vertices(TreeShape shape, int k) {
  const std::size_t count = detail::ipow(static_cast<std::size_t>(shape.degree), k);
  std::vector<Vertex> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) out.push_back(Vertex::from_rank(shape.degree, k, r));
  return out;
}

class Portrait {
 public:
  /// The depth-0 portrait of degree 2: the trivial group object.
  Portrait() : degree_(2), depth_(0) {}

  static Portrait identity(int degree, int depth) {
    (void)TreeShape{degree};
    if (depth < 0) throw DepthExceeded("negative portrait depth");
    Portrait p(degree, depth);
    const std::size_t d = static_cast<std::size_t>(degree);
    for (std::size_t i = 0; i < p.internal_count(); ++i) {
      for (std::size_t x = 0; x < d; ++x) p.images_[i * d + x] = static_cast<std::uint8_t>(x);
    }
    return p;
  }

  /// Builds from 1-based labels in level-major order; validates everything.
  static Portrait from_labels(int degree, int depth, const std::vector<std::vector<int>>& labels) {
    (void)TreeShape{degree};
    if (depth < 0) throw DepthExceeded("negative portrait depth");
    Portrait p(degree, depth);
    if (labels.size() != p.internal_count()) {
      throw SchemaError("portrait of depth " + std::to_string(depth) + " needs " +
                        std::to_string(p.internal_count()) + " labels, got " + std::to_string(labels.size()));
    }
    const std::size_t d = static_cast<std::size_t>(degree);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto perm = permutation_from_images(degree, labels[i]);
      std::copy(perm.begin(), perm.end(), p.images_.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return p;
  }

  /// Raw constructor from 0-based level-major label bytes. The caller vouches
  /// for validity; used by enumeration code that already produced a portrait.
  static Portrait from_bytes(int degree, int depth, std::span<const std::uint8_t> bytes) {
    Portrait p(degree, depth);
    if (bytes.size() != p.images_.size()) throw SchemaError("portrait byte length mismatch");
    std::copy(bytes.begin(), bytes.end(), p.images_.begin());
    return p;
  }

  /// The element (children[0], ..., children[d-1]) root_perm, one level deeper
  /// than its children. `root_perm` is 0-based.
  static Portrait from_recursion(std::span<const std::uint8_t> root_perm, std::span<const Portrait> children) {
    if (children.empty()) throw SchemaError("recursion needs d children");
    const int degree = children[0].degree();
    const int child_depth = children[0].depth();
    if (root_perm.size() != static_cast<std::size_t>(degree) || children.size() != root_perm.size()) {
      throw DegreeMismatch("recursion arity does not match the degree");
    }
    Portrait p(degree, child_depth + 1);
    const std::size_t d = static_cast<std::size_t>(degree);
    std::copy(root_perm.begin(), root_perm.end(), p.images_.begin());
    std::size_t pos = d;
    for (int j = 0; j < child_depth; ++j) {
      const std::size_t block = detail::ipow(d, j) * d;
      const std::size_t from = detail::level_offset(degree, j) * d;
      for (const Portrait& c : children) {
        if (c.degree() != degree || c.depth() != child_depth) throw DegreeMismatch("children differ in shape");
        std::copy_n(c.images_.begin() + static_cast<std::ptrdiff_t>(from), block,
                    p.images_.begin() + static_cast<std::ptrdiff_t>(pos));
        pos += block;
      }
    }
    return p;
  }

  int degree() const { return degree_; }
  int depth() const { return depth_; }
  TreeShape shape() const { return TreeShape{degree_}; }
  std::size_t internal_count() const { return detail::level_offset(degree_, depth_); }

  /// 0-based images of the label at level-major index `index`.
  std::span<const std::uint8_t> label(std::size_t index) const {
    const std::size_t d = static_cast<std::size_t>(degree_);
    return std::span<const std::uint8_t>(images_).subspan(index * d, d);
  }
  std::span<const std::uint8_t> label(const Vertex& v) const {
    check_vertex(v, depth_ - 1);
    return label(detail::level_offset(degree_, v.level()) + v.rank(degree_));
  }

  /// Canonical key: the label bytes. Equal portraits of equal shape have equal keys.
  std::span<const std::uint8_t> bytes() const { return images_; }
  std::string key() const { return std::string(images_.begin(), images_.end()); }

  bool is_identity() const {
    const std::size_t d = static_cast<std::size_t>(degree_);
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (images_[i] != i % d) return false;
    }
    return true;
  }

  /// Rank of v^p for the level-k vertex of the given rank, k <= depth.
  std::size_t apply_rank(int level, std::size_t rank) const {
    const std::size_t d = static_cast<std::size_t>(degree_);
    std::size_t digits[64];
    std::size_t r = rank;
    for (int j = level - 1; j >= 0; --j) {
      digits[j] = r % d;
      r /= d;
    }
    std::size_t orig = 0;
    std::size_t image = 0;
    for (int j = 0; j < level; ++j) {
      const std::size_t idx = detail::level_offset(degree_, j) + orig;
      const std::size_t x = digits[j];
      orig = orig * d + x;
      image = image * d + images_[idx * d + x];
    }
    return image;
  }

  Vertex apply(const Vertex& v) const {
    check_vertex(v, depth_);
    return Vertex::from_rank(degree_, v.level(), apply_rank(v.level(), v.rank(degree_)));
  }

  /// g|_v truncated to depth() - |v|.
  Portrait section(const Vertex& v) const {
    check_vertex(v, depth_);
    const int k = v.level();
    Portrait out(degree_, depth_ - k);
    const std::size_t d = static_cast<std::size_t>(degree_);
    const std::size_t r = v.rank(degree_);
    std::size_t pos = 0;
    for (int j = 0; j < depth_ - k; ++j) {
      const std::size_t width = detail::ipow(d, j);
      const std::size_t from = (detail::level_offset(degree_, k + j) + r * width) * d;
      std::copy_n(images_.begin() + static_cast<std::ptrdiff_t>(from), width * d,
                  out.images_.begin() + static_cast<std::ptrdiff_t>(pos));
      pos += width * d;
    }
    return out;
  }

  Portrait truncate(int k) const {
    if (k < 0 || k > depth_) {
      throw DepthExceeded("cannot truncate a depth-" + std::to_string(depth_) + " portrait to depth " + std::to_string(k));
    }
    Portrait out(degree_, k);
    std::copy_n(images_.begin(), out.images_.size(), out.images_.begin());
    return out;
  }

  /// Number of level-n vertices fixed by this portrait.
  std::size_t fixed_count(int n) const {
    if (n < 0 || n > depth_) throw DepthExceeded("fixed_count level " + std::to_string(n) + " beyond depth " + std::to_string(depth_));
    const std::size_t d = static_cast<std::size_t>(degree_);
    // Fixed vertices form a subtree; walk it level by level.
    std::vector<std::size_t> frontier{0};
    std::vector<std::size_t> next;
    for (int j = 0; j < n; ++j) {
      next.clear();
      const std::size_t off = detail::level_offset(degree_, j);
      for (std::size_t r : frontier) {
        const std::size_t base = (off + r) * d;
        for (std::size_t x = 0; x < d; ++x) {
          if (images_[base + x] == x) next.push_back(r * d + x);
        }
      }
      frontier.swap(next);
      if (frontier.empty()) return 0;
    }
    return frontier.size();
  }

  friend Portrait compose(const Portrait& p, const Portrait& q) {
    if (p.degree_ != q.degree_) throw DegreeMismatch("compose: degrees " + std::to_string(p.degree_) + " and " + std::to_string(q.degree_));
    const int depth = std::min(p.depth_, q.depth_);
    Portrait out(p.degree_, depth);
    std::vector<std::uint32_t> scratch;
    compose_raw(p.degree_, depth, p.images_.data(), q.images_.data(), out.images_.data(), scratch);
    return out;
  }
  friend Portrait operator*(const Portrait& p, const Portrait& q) { return compose(p, q); }

  friend Portrait invert(const Portrait& p) {
    Portrait out(p.degree_, p.depth_);
    std::vector<std::uint32_t> scratch;
    invert_raw(p.degree_, p.depth_, p.images_.data(), out.images_.data(), scratch);
    return out;
  }

  /// Low-level kernels over label arrays; `scratch` is reused between calls.
  static void compose_raw(int degree, int depth, const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
                          std::vector<std::uint32_t>& scratch) {
    const std::size_t d = static_cast<std::size_t>(degree);
    const std::size_t internal = detail::level_offset(degree, depth);
    scratch.assign(internal, 0);  // scratch[i] = rank of the image of vertex i under a
    std::size_t off = 0;
    std::size_t width = 1;
    for (int j = 0; j < depth; ++j) {
      const std::size_t next_off = off + width;
      const std::size_t img_off = next_off;
      for (std::size_t r = 0; r < width; ++r) {
        const std::size_t idx = off + r;
        const std::size_t img = scratch[idx];
        const std::uint8_t* la = a + idx * d;
        const std::uint8_t* lb = b + (off + img) * d;
        std::uint8_t* lo = out + idx * d;
        for (std::size_t x = 0; x < d; ++x) {
          lo[x] = lb[la[x]];
          if (j + 1 < depth) scratch[img_off + r * d + x] = static_cast<std::uint32_t>(img * d + la[x]);
        }
      }
      off = next_off;
      width *= d;
    }
  }

  static void invert_raw(int degree, int depth, const std::uint8_t* a, std::uint8_t* out,
                         std::vector<std::uint32_t>& scratch) {
    const std::size_t d = static_cast<std::size_t>(degree);
    const std::size_t internal = detail::level_offset(degree, depth);
    scratch.assign(internal, 0);
    std::size_t off = 0;
    std::size_t width = 1;
    for (int j = 0; j < depth; ++j) {
      const std::size_t next_off = off + width;
      for (std::size_t r = 0; r < width; ++r) {
        const std::size_t idx = off + r;
        const std::size_t img = scratch[idx];
        const std::uint8_t* la = a + idx * d;
        std::uint8_t* lo = out + (off + img) * d;
        for (std::size_t x = 0; x < d; ++x) {
          lo[la[x]] = static_cast<std::uint8_t>(x);
          if (j + 1 < depth) scratch[next_off + r * d + x] = static_cast<std::uint32_t>(img * d + la[x]);
        }
      }
      off = next_off;
      width *= d;
    }
  }

  friend bool operator==(const Portrait& a, const Portrait& b) {
    return a.degree_ == b.degree_ && a.depth_ == b.depth_ && a.images_ == b.images_;
  }

  /// {"degree": d, "depth": m, "labels": [[1-based images], ...]} in level-major order.
  nlohmann::json to_json() const {
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t i = 0; i < internal_count(); ++i) {
      nlohmann::json perm = nlohmann::json::array();
      for (auto y : label(i)) perm.push_back(static_cast<int>(y) + 1);
      labels.push_back(std::move(perm));
    }
    return {{"degree", degree_}, {"depth", depth_}, {"labels", std::move(labels)}};
  }

  static Portrait from_json(const nlohmann::json& j) {
    try {
      const int degree = j.at("degree").get<int>();
      const int depth = j.at("depth").get<int>();
      return from_labels(degree, depth, j.at("labels").get<std::vector<std::vector<int>>>());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("portrait JSON: ") + e.what());
    }
  }

  /// Validates a 1-based image list and returns it 0-based.
  static std::vector<std::uint8_t> permutation_from_images(int degree, const std::vector<int>& images) {
    if (images.size() != static_cast<std::size_t>(degree)) {
      throw BadPermutation("permutation needs " + std::to_string(degree) + " images, got " + std::to_string(images.size()));
    }
    std::vector<std::uint8_t> out(images.size());
    std::vector<bool> seen(images.size(), false);
    for (std::size_t i = 0; i < images.size(); ++i) {
      const int y = images[i];
      if (y < 1 || y > degree || seen[static_cast<std::size_t>(y - 1)]) {
        throw BadPermutation("not a permutation of 1.." + std::to_string(degree));
      }
      seen[static_cast<std::size_t>(y - 1)] = true;
      out[i] = static_cast<std::uint8_t>(y - 1);
    }
    return out;
  }

 private:
  Portrait(int degree, int depth)
      : degree_(degree), depth_(depth),
        images_(detail::level_offset(degree, depth) * static_cast<std::size_t>(degree)) {}

  void check_vertex(const Vertex& v, int max_level) const {
    if (v.level() > max_level) {
      throw DepthExceeded("vertex '" + v.str() + "' lies below depth " + std::to_string(depth_));
    }
    v.validate(TreeShape{degree_});
  }

  int degree_;
  int depth_;
  std::vector<std::uint8_t> images_;
};

struct PortraitHash {
  std::size_t operator()(const Portrait& p) const noexcept {
    auto b = p.bytes();
    return std::hash<std::string_view>{}(std::string_view(reinterpret_cast<const char*>(b.data()), b.size())) ^
           (static_cast<std::size_t>(p.depth()) * 0x9e3779b97f4a7c15ULL);
  }
};

/// Haar sampler for Aut(T^m): every label independently uniform in Sym(d).
/// Single-owner; the draw sequence depends only on the seed.
class AutSampler {
 public:
  explicit AutSampler(std::uint64_t seed) : engine_(seed) {}

  Portrait sample(TreeShape shape, int depth) {
    Portrait p = Portrait::identity(shape.degree, depth);
    const std::size_t d = static_cast<std::size_t>(shape.degree);
    std::vector<std::uint8_t> bytes(p.bytes().begin(), p.bytes().end());
    for (std::size_t i = 0; i < p.internal_count(); ++i) {
      std::uint8_t* label = bytes.data() + i * d;
      for (std::size_t k = d - 1; k > 0; --k) std::swap(label[k], label[below(k + 1)]);
    }
    return Portrait::from_bytes(shape.degree, depth, bytes);
  }

  /// Uniform integer in [0, n) by rejection, independent of the standard
  /// library's distribution implementation.
  std::size_t below(std::size_t n) {
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % range);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline Portrait uniform_aut_sample(TreeShape shape, int depth, std::uint64_t seed) {
  AutSampler sampler(seed);
  return sampler.sample(shape, depth);
}

}  // namespace arbor
