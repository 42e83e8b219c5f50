#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace rdlab {

/// Dense real polynomial, coefficients stored in ascending degree order.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  Polynomial(std::initializer_list<double> c) : coeffs_(c) { trim(); }
  explicit Polynomial(std::vector<double> c) : coeffs_(std::move(c)) { trim(); }

  static Polynomial constant(double c) { return Polynomial({c}); }
  /// slope * X + offset
  static Polynomial linear(double slope, double offset) { return Polynomial({offset, slope}); }

  std::size_t degree() const { return coeffs_.size() - 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double operator[](std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : 0.0; }

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Polynomial derivative() const {
    if (coeffs_.size() == 1) return Polynomial{};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
    for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    trim();
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) { return *this += o * -1.0; }
  Polynomial operator*(double s) const {
    auto c = coeffs_;
    for (auto& x : c) x *= s;
    return Polynomial(std::move(c));
  }
  Polynomial operator*(const Polynomial& o) const {
    std::vector<double> c(coeffs_.size() + o.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      for (std::size_t j = 0; j < o.coeffs_.size(); ++j) c[i + j] += coeffs_[i] * o.coeffs_[j];
    return Polynomial(std::move(c));
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

  Polynomial pow(unsigned e) const {
    Polynomial result = constant(1.0);
    Polynomial base = *this;
    while (e > 0) {
      if (e & 1U) result = result * base;
      e >>= 1U;
      if (e > 0) base = base * base;
    }
    return result;
  }

  /// Synthetic division by (X - root). Returns quotient and remainder.
  std::pair<Polynomial, double> divide_by_root(double root) const {
    const std::size_t n = coeffs_.size();
    if (n == 1) return {Polynomial{}, coeffs_[0]};
    std::vector<double> q(n - 1);
    double carry = coeffs_[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
      q[k] = carry;
      carry = coeffs_[k] + carry * root;
    }
    return {Polynomial(std::move(q)), carry};
  }

 private:
  void trim() {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
  }

  std::vector<double> coeffs_;
};

}  // namespace rdlab
