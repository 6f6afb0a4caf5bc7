#pragma once

// State-space realizations of the filtering operators used by the observers.
// Filter states are slices of the joint scenario state; these types only
// hold the (immutable) realization.

#include "adapt_sync/analysis.hpp"
#include "adapt_sync/numerics.hpp"
#include "adapt_sync/transfer.hpp"

#include <complex>
#include <sstream>
#include <stdexcept>

namespace adapt_sync {

/// H(p) = c_f^T (pI - F)^{-1} b_f applied independently to each of
/// `channels` scalar inputs. State layout: column j of an n x channels
/// matrix, stored column-major.
class LtiFilter {
 public:
  LtiFilter() = default;

  const Matrix& F() const noexcept { return F_; }
  const Vector& b() const noexcept { return b_; }
  const Vector& c() const noexcept { return c_; }
  Eigen::Index order() const noexcept { return F_.rows(); }
  Eigen::Index channels() const noexcept { return channels_; }
  Eigen::Index state_size() const noexcept { return F_.rows() * channels_; }
  int relative_degree() const noexcept { return relative_degree_; }

  Vector derivative(const Eigen::Ref<const Vector>& state, const Eigen::Ref<const Vector>& input) const {
    const auto S = Eigen::Map<const Matrix>(state.data(), order(), channels_);
    Matrix dS = F_ * S + b_ * input.transpose();
    return Eigen::Map<Vector>(dS.data(), dS.size());
  }

  Vector output(const Eigen::Ref<const Vector>& state) const {
    const auto S = Eigen::Map<const Matrix>(state.data(), order(), channels_);
    return (c_.transpose() * S).transpose();
  }

  /// j-th time derivative of every output channel computed from the state
  /// and the current input only. Exact for j <= relative degree, where
  /// input derivatives never enter.
  Vector output_derivative(const Eigen::Ref<const Vector>& state, const Eigen::Ref<const Vector>& input,
                           int j) const {
    if (j < 0 || j > relative_degree_) throw std::out_of_range("LtiFilter::output_derivative: order exceeds r");
    const auto S = Eigen::Map<const Matrix>(state.data(), order(), channels_);
    Eigen::RowVectorXd row = c_.transpose();
    for (int i = 0; i < j; ++i) row = row * F_;
    Vector out = (row * S).transpose();
    if (j == relative_degree_ && j > 0) {
      Eigen::RowVectorXd m = c_.transpose();
      for (int i = 0; i + 1 < j; ++i) m = m * F_;
      out += m.dot(b_) * input;
    }
    return out;
  }

  std::complex<double> transfer(std::complex<double> s) const {
    const Eigen::Index n = order();
    Eigen::MatrixXcd M = s * Eigen::MatrixXcd::Identity(n, n) - F_.cast<std::complex<double>>();
    Eigen::VectorXcd x = M.partialPivLu().solve(b_.cast<std::complex<double>>());
    return c_.cast<std::complex<double>>().dot(x);
  }

  /// H(0) = -c^T F^{-1} b.
  double dc_gain() const { return -c_.dot(F_.partialPivLu().solve(b_)); }

  friend LtiFilter make_lti_filter(const Matrix& F, const Vector& b, const Vector& c, Eigen::Index channels);

 private:
  Matrix F_;
  Vector b_;
  Vector c_;
  Eigen::Index channels_ = 0;
  int relative_degree_ = 0;
};

/// Rejects a non-Hurwitz F, naming the offending eigenvalue.
inline LtiFilter make_lti_filter(const Matrix& F, const Vector& b, const Vector& c, Eigen::Index channels) {
  if (F.rows() == 0 || F.rows() != F.cols()) throw std::invalid_argument("make_lti_filter: F must be square");
  if (b.size() != F.rows() || c.size() != F.rows()) throw std::invalid_argument("make_lti_filter: b, c must match F");
  if (channels < 1) throw std::invalid_argument("make_lti_filter: need at least one channel");
  const auto h = hurwitz_check(F);
  if (!h.hurwitz) {
    std::ostringstream os;
    os << "make_lti_filter: F is not Hurwitz, eigenvalue " << h.worst_eigenvalue.real()
       << (h.worst_eigenvalue.imag() >= 0 ? "+" : "") << h.worst_eigenvalue.imag() << "i has non-negative real part";
    throw std::invalid_argument(os.str());
  }
  LtiFilter f;
  f.F_ = F;
  f.b_ = b;
  f.c_ = c;
  f.channels_ = channels;
  f.relative_degree_ = relative_degree(F, b, c);
  if (f.relative_degree_ == 0) throw std::invalid_argument("make_lti_filter: transfer function is identically zero");
  return f;
}

/// W(p) = (p + lambda) H(p), evaluated through the H-filter state so that
/// varpi = W(p)[u] needs no numerical differentiation:
/// varpi = c^T (F s + b u) + lambda c^T s.
class WDecomposition {
 public:
  WDecomposition(LtiFilter H, double lambda) : H_(std::move(H)), lambda_(lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("WDecomposition: lambda must be positive");
  }

  const LtiFilter& H() const noexcept { return H_; }
  double lambda() const noexcept { return lambda_; }
  int relative_degree() const noexcept { return H_.relative_degree(); }

  Vector output(const Eigen::Ref<const Vector>& state, const Eigen::Ref<const Vector>& input) const {
    return H_.output_derivative(state, input, 1) + lambda_ * H_.output(state);
  }

  /// W(s0) from the realization (F, b, c^T (F + lambda I), c^T b).
  std::complex<double> transfer(std::complex<double> s) const {
    const Eigen::Index n = H_.order();
    using C = std::complex<double>;
    Eigen::MatrixXcd M = s * Eigen::MatrixXcd::Identity(n, n) - H_.F().cast<C>();
    Eigen::VectorXcd x = M.partialPivLu().solve(H_.b().cast<C>());
    Eigen::RowVectorXcd row = (H_.c().transpose() * (H_.F() + lambda_ * Matrix::Identity(n, n))).cast<C>();
    return (row * x)(0) + C(H_.c().dot(H_.b()), 0.0);
  }

  double dc_gain() const { return lambda_ * H_.dc_gain(); }

 private:
  LtiFilter H_;
  double lambda_;
};

inline Vector lti_filter_output(const LtiFilter& f, const Eigen::Ref<const Vector>& state) { return f.output(state); }

inline Vector w_filter_output(const WDecomposition& w, const Eigen::Ref<const Vector>& state,
                              const Eigen::Ref<const Vector>& input) {
  return w.output(state, input);
}

/// Omega' = G Omega + b phibar^T.
inline Matrix omega_filter_derivative(const Matrix& Omega, const Matrix& G, const Vector& b, const Vector& phibar) {
  return G * Omega + b * phibar.transpose();
}

/// eta' = G eta - Omega theta_hat_dot.
inline Vector eta_filter_derivative(const Vector& eta, const Matrix& G, const Matrix& Omega,
                                    const Vector& theta_hat_dot) {
  return G * eta - Omega * theta_hat_dot;
}

/// How the Lorenz augmentation filters are formed.
enum class LorenzFilterForm {
  general,     // from the generic Omega/eta equations with G(y_r) and forcing b r y_r
  as_printed,  // verbatim printed Lorenz filters: no forcing, +y_r couplings, eta driven by vartheta_hat
};

/// Printed Lorenz Omega filter (single parameter column).
inline Vector lorenz_printed_omega_derivative(const Vector& Omega, double sigma, double beta, double y_r) {
  Vector d(3);
  d[0] = sigma * Omega[1] - sigma * Omega[0];
  d[1] = -sigma * Omega[0] - Omega[1] + y_r * Omega[2];
  d[2] = -beta * Omega[2] + y_r * Omega[1];
  return d;
}

/// Printed Lorenz eta filter; note it is driven by the estimate itself.
inline Vector lorenz_printed_eta_derivative(const Vector& eta, const Vector& Omega, double sigma, double beta,
                                            double y_r, double vartheta_hat) {
  Vector d(3);
  d[0] = sigma * eta[1] - sigma * eta[0] - Omega[0] * vartheta_hat;
  d[1] = -sigma * eta[0] - eta[1] + y_r * eta[2] - Omega[1] * vartheta_hat;
  d[2] = -beta * eta[2] + y_r * eta[1] - Omega[2] * vartheta_hat;
  return d;
}

}  // namespace adapt_sync
