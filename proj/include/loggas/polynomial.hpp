#pragma once

#include <vector>

namespace loggas {

// Dense polynomial in the monomial basis with exact derivatives of any order.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
  }

  double operator()(double x) const {
    double acc = 0.0;
    for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k)
      acc = acc * x + c_[k];
    return acc;
  }

  // order-th derivative: Horner over falling-factorial coefficients
  double derivative(double x, int order) const {
    if (order == 0) return (*this)(x);
    if (order >= static_cast<int>(c_.size())) return 0.0;
    double acc = 0.0;
    for (int k = static_cast<int>(c_.size()) - 1; k >= order; --k) {
      double f = 1.0;
      for (int j = 0; j < order; ++j) f *= (k - j);
      acc = acc * x + f * c_[k];
    }
    return acc;
  }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }

 private:
  std::vector<double> c_;
};

}  // namespace loggas
