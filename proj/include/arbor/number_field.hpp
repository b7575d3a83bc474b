#pragma once

// Exact arithmetic in K = Q[y]/(m(y)) for a monic squarefree m, and
// polynomials in x over K.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "arbor/error.hpp"
#include "arbor/rational.hpp"

namespace arbor {

/// Dense polynomial over Q, low degree first, no trailing zeros.
using QPoly = std::vector<Rational>;

namespace detail {

inline void trim(QPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline QPoly qpoly_mul(const QPoly& a, const QPoly& b) {
  if (a.empty() || b.empty()) return {};
  QPoly r(a.size() + b.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  trim(r);
  return r;
}

inline QPoly qpoly_sub(QPoly a, const QPoly& b) {
  if (a.size() < b.size()) a.resize(b.size(), Rational(0));
  for (std::size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
  trim(a);
  return a;
}

/// Returns (quotient, remainder).
inline std::pair<QPoly, QPoly> qpoly_divmod(QPoly a, const QPoly& b) {
  if (b.empty()) throw InvalidArgument("polynomial division by zero");
  trim(a);
  if (a.size() < b.size()) return {{}, a};
  QPoly q(a.size() - b.size() + 1, Rational(0));
  while (a.size() >= b.size() && !a.empty()) {
    const std::size_t shift = a.size() - b.size();
    const Rational c = a.back() / b.back();
    q[shift] = c;
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= c * b[i];
    trim(a);
  }
  trim(q);
  return {q, a};
}

inline QPoly qpoly_gcd(QPoly a, QPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    auto r = qpoly_divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    const Rational lead = a.back();
    for (auto& c : a) c /= lead;
  }
  return a;
}

}  // namespace detail

/// Descriptor of K; k = deg m, and k = 1 with m = y is Q itself.
class NumberField {
 public:
  /// `min_poly` low degree first, monic, degree >= 1, squarefree.
  explicit NumberField(QPoly min_poly) : m_(std::move(min_poly)) {
    detail::trim(m_);
    if (m_.size() < 2) throw SchemaError("minimal polynomial must have degree >= 1");
    if (m_.back() != 1) throw SchemaError("minimal polynomial must be monic");
    QPoly deriv;
    for (std::size_t i = 1; i < m_.size(); ++i) deriv.push_back(m_[i] * Rational(static_cast<long long>(i)));
    detail::trim(deriv);
    if (detail::qpoly_gcd(m_, deriv).size() > 1) throw SchemaError("minimal polynomial must be squarefree");
  }

  static std::shared_ptr<const NumberField> rationals() {
    static const auto q = std::make_shared<const NumberField>(QPoly{Rational(0), Rational(1)});
    return q;
  }

  std::size_t degree() const { return m_.size() - 1; }
  const QPoly& min_poly() const { return m_; }
  bool is_rational() const { return degree() == 1 && m_[0] == 0; }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : m_) j.push_back(to_string(c));
    return {{"min_poly", j}};
  }

 private:
  QPoly m_;
};

using FieldPtr = std::shared_ptr<const NumberField>;

/// Element of K as its coefficient vector in 1, y, ..., y^{k-1}.
class FieldElement {
 public:
  FieldElement() : field_(NumberField::rationals()), c_(1, Rational(0)) {}
  FieldElement(FieldPtr field, Rational value) : field_(std::move(field)), c_(field_->degree(), Rational(0)) {
    c_[0] = std::move(value);
  }
  FieldElement(FieldPtr field, std::vector<Rational> coeffs) : field_(std::move(field)), c_(std::move(coeffs)) {
    if (c_.size() > field_->degree()) {
      QPoly p = c_;
      detail::trim(p);
      c_ = from_poly(p).c_;
    }
    c_.resize(field_->degree(), Rational(0));
  }

  /// A JSON rational string ("p/q") or an array of them (coefficients in y).
  static FieldElement from_json(const FieldPtr& field, const nlohmann::json& j) {
    try {
      if (j.is_string()) return FieldElement(field, parse_rational(j.get<std::string>()));
      if (j.is_number_integer()) return FieldElement(field, Rational(j.get<long long>()));
      if (!j.is_array()) throw SchemaError("field element must be a rational string or an array of them");
      std::vector<Rational> c;
      for (const auto& x : j) {
        if (x.is_string()) {
          c.push_back(parse_rational(x.get<std::string>()));
        } else if (x.is_number_integer()) {
          c.push_back(Rational(x.get<long long>()));
        } else {
          throw SchemaError("field element coefficients must be rational strings");
        }
      }
      if (c.size() > field->degree()) throw SchemaError("field element has more coefficients than the field degree");
      return FieldElement(field, std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("field element: ") + e.what());
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& x : c_) j.push_back(to_string(x));
    return j;
  }

  /// "3/2" over Q, otherwise "a0 + a1*y + ...".
  std::string str() const {
    if (is_rational()) return to_string(c_[0]);
    std::string s;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == 0) continue;
      if (!s.empty()) s += " + ";
      s += "(" + to_string(c_[i]) + ")";
      if (i == 1) s += "*y";
      if (i > 1) s += "*y^" + std::to_string(i);
    }
    return s.empty() ? "0" : s;
  }

  const FieldPtr& field() const { return field_; }
  const std::vector<Rational>& coeffs() const { return c_; }
  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const Rational& x) { return x == 0; });
  }
  bool is_rational() const {
    return std::all_of(c_.begin() + 1, c_.end(), [](const Rational& x) { return x == 0; });
  }
  const Rational& rational_part() const { return c_[0]; }

  friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
    FieldElement r = a;
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += b.c_[i];
    return r;
  }
  friend FieldElement operator-(const FieldElement& a, const FieldElement& b) {
    FieldElement r = a;
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] -= b.c_[i];
    return r;
  }
  FieldElement operator-() const {
    FieldElement r = *this;
    for (auto& x : r.c_) x = -x;
    return r;
  }
  friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
    if (a.field_->degree() == 1) return FieldElement(a.field_, a.c_[0] * b.c_[0]);
    QPoly pa = a.c_;
    QPoly pb = b.c_;
    detail::trim(pa);
    detail::trim(pb);
    return a.from_poly(detail::qpoly_mul(pa, pb));
  }

  /// Multiplicative inverse; throws if the element is zero or a zero divisor.
  FieldElement inverse() const {
    if (is_zero()) throw InvalidArgument("inverse of zero");
    if (field_->degree() == 1) return FieldElement(field_, 1 / c_[0]);
    // Extended Euclid: s * a + t * m = g, g must be a nonzero constant.
    QPoly r0 = field_->min_poly();
    QPoly r1 = c_;
    detail::trim(r1);
    QPoly s0;
    QPoly s1{Rational(1)};
    while (r1.size() > 1) {
      auto [q, r] = detail::qpoly_divmod(r0, r1);
      QPoly s2 = detail::qpoly_sub(s0, detail::qpoly_mul(q, s1));
      r0 = std::move(r1);
      r1 = std::move(r);
      s0 = std::move(s1);
      s1 = std::move(s2);
    }
    if (r1.empty()) throw InvalidArgument("element is a zero divisor in Q[y]/(m)");
    for (auto& x : s1) x /= r1[0];
    return from_poly(s1);
  }
  friend FieldElement operator/(const FieldElement& a, const FieldElement& b) { return a * b.inverse(); }

  FieldElement pow(unsigned k) const {
    FieldElement r(field_, Rational(1));
    FieldElement base = *this;
    while (k) {
      if (k & 1U) r = r * base;
      base = base * base;
      k >>= 1U;
    }
    return r;
  }

  friend bool operator==(const FieldElement& a, const FieldElement& b) { return a.c_ == b.c_; }
  /// Lexicographic on coefficients, constant term first; a total order for sorting.
  friend bool operator<(const FieldElement& a, const FieldElement& b) {
    return std::lexicographical_compare(a.c_.begin(), a.c_.end(), b.c_.begin(), b.c_.end());
  }

 private:
  FieldElement from_poly(const QPoly& p) const {
    const QPoly rem = detail::qpoly_divmod(p, field_->min_poly()).second;
    FieldElement r(field_, Rational(0));
    for (std::size_t i = 0; i < rem.size(); ++i) r.c_[i] = rem[i];
    return r;
  }

  FieldPtr field_;
  std::vector<Rational> c_;
};

/// Polynomial in x over K, low degree first, no trailing zeros.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(FieldPtr field, std::vector<FieldElement> coeffs) : field_(std::move(field)), c_(std::move(coeffs)) {
    trim();
  }

  static Polynomial constant(const FieldElement& c) { return Polynomial(c.field(), {c}); }
  static Polynomial x(const FieldPtr& field) {
    return Polynomial(field, {FieldElement(field, Rational(0)), FieldElement(field, Rational(1))});
  }

  const FieldPtr& field() const { return field_; }
  const std::vector<FieldElement>& coeffs() const { return c_; }
  /// Degree; the zero polynomial has degree -1.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  FieldElement coeff(std::size_t i) const { return i < c_.size() ? c_[i] : FieldElement(field_, Rational(0)); }

  FieldElement operator()(const FieldElement& z) const {
    FieldElement acc(field_, Rational(0));
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }

  Polynomial derivative() const {
    std::vector<FieldElement> out;
    for (std::size_t i = 1; i < c_.size(); ++i) out.push_back(c_[i] * FieldElement(field_, Rational(static_cast<long long>(i))));
    return Polynomial(field_, std::move(out));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<FieldElement> out(std::max(a.c_.size(), b.c_.size()), FieldElement(a.field_, Rational(0)));
    for (std::size_t i = 0; i < a.c_.size(); ++i) out[i] = out[i] + a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) out[i] = out[i] + b.c_[i];
    return Polynomial(a.field_, std::move(out));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    std::vector<FieldElement> out(std::max(a.c_.size(), b.c_.size()), FieldElement(a.field_, Rational(0)));
    for (std::size_t i = 0; i < a.c_.size(); ++i) out[i] = out[i] + a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) out[i] = out[i] - b.c_[i];
    return Polynomial(a.field_, std::move(out));
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return Polynomial(a.field_, {});
    std::vector<FieldElement> out(a.c_.size() + b.c_.size() - 1, FieldElement(a.field_, Rational(0)));
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] = out[i + j] + a.c_[i] * b.c_[j];
    }
    return Polynomial(a.field_, std::move(out));
  }

  /// f(g(x)).
  Polynomial compose(const Polynomial& g) const {
    Polynomial acc(field_, {});
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * g + constant(*it);
    return acc;
  }

  /// Synthetic division by (x - s): returns (quotient, remainder).
  std::pair<Polynomial, FieldElement> divide_linear(const FieldElement& s) const {
    if (c_.empty()) return {*this, FieldElement(field_, Rational(0))};
    std::vector<FieldElement> q(c_.size() - 1, FieldElement(field_, Rational(0)));
    FieldElement carry(field_, Rational(0));
    for (std::size_t i = c_.size(); i-- > 0;) {
      const FieldElement cur = c_[i] + carry * s;
      if (i == 0) return {Polynomial(field_, std::move(q)), cur};
      q[i - 1] = cur;
      carry = cur;
    }
    return {Polynomial(field_, std::move(q)), carry};
  }

  std::string str() const {
    if (c_.empty()) return "0";
    std::string s;
    for (std::size_t i = c_.size(); i-- > 0;) {
      if (c_[i].is_zero()) continue;
      std::string coef = c_[i].str();
      if (!c_[i].is_rational()) coef = "(" + coef + ")";
      if (!s.empty()) {
        if (coef[0] == '-') {
          s += " - ";
          coef = coef.substr(1);
        } else {
          s += " + ";
        }
      }
      if (i == 0) {
        s += coef;
      } else {
        if (coef == "-1") {
          s += "-";
        } else if (coef != "1") {
          s += coef + "*";
        }
        s += i == 1 ? "x" : "x^" + std::to_string(i);
      }
    }
    return s;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
  }

  FieldPtr field_ = NumberField::rationals();
  std::vector<FieldElement> c_;
};

}  // namespace arbor
