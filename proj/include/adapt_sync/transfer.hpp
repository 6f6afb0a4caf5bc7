#pragma once

// Polynomials and SISO transfer functions of state-space realizations.

#include "adapt_sync/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace adapt_sync {

/// Real polynomial, coefficients in ascending powers: c[0] + c[1] p + ...
class Polynomial {
 public:
  Polynomial() : c_{0.0} {}
  explicit Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {
    if (c_.empty()) c_.push_back(0.0);
    trim(0.0);
  }

  /// (p + a)
  static Polynomial linear(double a) { return Polynomial({a, 1.0}); }

  static Polynomial from_roots(const std::vector<double>& roots) {
    Polynomial p({1.0});
    for (double r : roots) p = p * linear(-r);
    return p;
  }

  const std::vector<double>& coeffs() const noexcept { return c_; }
  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
  double leading() const noexcept { return c_.back(); }
  double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }

  /// Drops leading coefficients whose magnitude is at most tol times the
  /// largest coefficient.
  Polynomial& trim(double rel_tol) {
    double scale = 0.0;
    for (double v : c_) scale = std::max(scale, std::abs(v));
    while (c_.size() > 1 && std::abs(c_.back()) <= rel_tol * scale) c_.pop_back();
    return *this;
  }

  std::complex<double> operator()(std::complex<double> s) const {
    std::complex<double> acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }

  Polynomial operator*(double s) const {
    auto out = c_;
    for (auto& v : out) v *= s;
    return Polynomial(std::move(out));
  }

  /// Quotient and remainder of polynomial long division.
  static std::pair<Polynomial, Polynomial> divide(const Polynomial& num, const Polynomial& den) {
    if (den.degree() == 0 && den.leading() == 0.0) throw std::domain_error("Polynomial::divide: zero divisor");
    std::vector<double> rem = num.c_;
    const int dn = den.degree();
    const int nn = num.degree();
    if (nn < dn) return {Polynomial({0.0}), num};
    std::vector<double> quo(static_cast<std::size_t>(nn - dn + 1), 0.0);
    for (int k = nn - dn; k >= 0; --k) {
      const double q = rem[static_cast<std::size_t>(k + dn)] / den.leading();
      quo[static_cast<std::size_t>(k)] = q;
      for (int j = 0; j <= dn; ++j) rem[static_cast<std::size_t>(k + j)] -= q * den.c_[static_cast<std::size_t>(j)];
    }
    rem.resize(static_cast<std::size_t>(std::max(dn, 1)));
    return {Polynomial(std::move(quo)), Polynomial(std::move(rem))};
  }

  std::vector<std::complex<double>> roots() const {
    const int n = degree();
    if (n < 1) return {};
    Matrix comp = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c_[static_cast<std::size_t>(i)] / leading();
    Eigen::EigenSolver<Matrix> es(comp, false);
    std::vector<std::complex<double>> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(es.eigenvalues()[i]);
    return out;
  }

 private:
  std::vector<double> c_;
};

/// H(p) = num(p) / den(p).
struct TransferFunction {
  Polynomial num;
  Polynomial den;

  std::complex<double> operator()(std::complex<double> s) const { return num(s) / den(s); }
  int relative_degree() const { return den.degree() - num.degree(); }
};

/// Characteristic polynomial det(pI - F) and numerator c^T adj(pI - F) b by
/// the Faddeev-LeVerrier recursion.
inline TransferFunction transfer_function(const Matrix& F, const Vector& b, const Vector& c) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || b.size() != n || c.size() != n) throw std::invalid_argument("transfer_function: size mismatch");
  std::vector<double> den(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> num(static_cast<std::size_t>(n), 0.0);
  den[static_cast<std::size_t>(n)] = 1.0;
  Matrix M = Matrix::Zero(n, n);
  const Matrix I = Matrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    M = F * M + den[static_cast<std::size_t>(n - k + 1)] * I;
    num[static_cast<std::size_t>(n - k)] = c.dot(M * b);
    den[static_cast<std::size_t>(n - k)] = -(F * M).trace() / static_cast<double>(k);
  }
  Polynomial N(std::move(num));
  N.trim(1e-12);
  return {N, Polynomial(std::move(den))};
}

/// Relative degree of c^T (pI - F)^{-1} b from its Markov parameters
/// c^T F^j b; 0 if every Markov parameter vanishes.
inline int relative_degree(const Matrix& F, const Vector& b, const Vector& c) {
  const double scale = std::max(1.0, F.norm());
  const double tol = 1e-12 * b.norm() * c.norm();
  Vector v = b;
  double growth = 1.0;
  for (Eigen::Index j = 0; j < F.rows(); ++j) {
    if (std::abs(c.dot(v)) > tol * growth) return static_cast<int>(j + 1);
    v = F * v;
    growth *= scale;
  }
  return 0;
}

/// Controllable-canonical realization of num/den (den need not be monic;
/// num must be strictly proper). Returns (F, b, c) with b = e_n.
struct Realization {
  Matrix F;
  Vector b;
  Vector c;
};

inline Realization realize(const Polynomial& num, const Polynomial& den) {
  const int n = den.degree();
  if (n < 1) throw std::invalid_argument("realize: denominator must have degree >= 1");
  if (num.degree() >= n && !(num.degree() == 0 && num[0] == 0.0))
    throw std::invalid_argument("realize: transfer function must be strictly proper");
  const double lead = den.leading();
  Realization r{Matrix::Zero(n, n), Vector::Zero(n), Vector::Zero(n)};
  for (int i = 0; i + 1 < n; ++i) r.F(i, i + 1) = 1.0;
  for (int i = 0; i < n; ++i) {
    r.F(n - 1, i) = -den[static_cast<std::size_t>(i)] / lead;
    r.c[i] = num[static_cast<std::size_t>(i)] / lead;
  }
  r.b[n - 1] = 1.0;
  return r;
}

}  // namespace adapt_sync
