#pragma once

// Verification toolkit: persistent excitation, stability checks, the
// Lyapunov solve behind the high-order-tuner gain bound, residual sets and
// the disturbance propagator of the robust schemes.

#include "adapt_sync/numerics.hpp"
#include "adapt_sync/plant.hpp"
#include "adapt_sync/transfer.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adapt_sync {

// ---------------------------------------------------------------------------
// Hurwitz / minimum phase

struct HurwitzReport {
  bool hurwitz = false;
  double abscissa = 0.0;  // largest real part of the spectrum
  std::complex<double> worst_eigenvalue;
};

inline HurwitzReport hurwitz_check(const Matrix& F) {
  if (F.rows() != F.cols() || F.rows() == 0) throw std::invalid_argument("hurwitz_check: matrix must be square");
  Eigen::EigenSolver<Matrix> es(F, false);
  HurwitzReport r;
  r.abscissa = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    const auto ev = es.eigenvalues()[i];
    if (ev.real() > r.abscissa) {
      r.abscissa = ev.real();
      r.worst_eigenvalue = ev;
    }
  }
  r.hurwitz = r.abscissa < 0.0;
  return r;
}

struct MinPhaseReport {
  bool minimum_phase = false;
  std::vector<std::complex<double>> zeros;
  bool reduced = false;  // realization was not minimal; cancelled pole/zero pairs
  std::string warning;
};

inline bool is_minimal(const Matrix& F, const Vector& b, const Vector& c) {
  const Eigen::Index n = F.rows();
  Matrix ctrb(n, n), obsv(n, n);
  Vector v = b;
  Eigen::RowVectorXd w = c.transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    ctrb.col(j) = v;
    obsv.row(j) = w;
    v = F * v;
    w = w * F;
  }
  Eigen::FullPivLU<Matrix> lc(ctrb), lo(obsv);
  lc.setThreshold(1e-10);
  lo.setThreshold(1e-10);
  return lc.rank() == n && lo.rank() == n;
}

/// True iff every transmission zero of c^T (pI - F)^{-1} b lies in the open
/// left half plane. Non-minimal realizations are reduced first by cancelling
/// zeros that coincide with poles.
inline MinPhaseReport min_phase_check(const Matrix& F, const Vector& b, const Vector& c) {
  const TransferFunction tf = transfer_function(F, b, c);
  MinPhaseReport r;
  r.zeros = tf.num.roots();
  if (!is_minimal(F, b, c)) {
    r.reduced = true;
    r.warning = "realization is not minimal; reduced by pole/zero cancellation";
    auto poles = tf.den.roots();
    std::vector<std::complex<double>> kept;
    for (const auto& z : r.zeros) {
      auto it = std::find_if(poles.begin(), poles.end(), [&](const auto& p) { return std::abs(p - z) < 1e-6; });
      if (it != poles.end())
        poles.erase(it);
      else
        kept.push_back(z);
    }
    r.zeros = std::move(kept);
  }
  r.minimum_phase = std::all_of(r.zeros.begin(), r.zeros.end(), [](const auto& z) { return z.real() < 0.0; });
  return r;
}

// ---------------------------------------------------------------------------
// Lyapunov equation and the tuner gain bound

/// Solves F^T P + P F = -2 I for Hurwitz F via the Kronecker form, with one
/// step of iterative refinement.
inline Matrix lyapunov_solve(const Matrix& F) {
  const auto h = hurwitz_check(F);
  if (!h.hurwitz) {
    std::ostringstream os;
    os << "lyapunov_solve: F is not Hurwitz (eigenvalue " << h.worst_eigenvalue << ")";
    throw std::invalid_argument(os.str());
  }
  const Eigen::Index n = F.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix K(n * n, n * n);
  // vec(F^T P + P F) = (I kron F^T + F^T kron I) vec(P)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K.block(i * n, j * n, n, n) = I(i, j) * F.transpose() + F(j, i) * I;
  const Matrix Q = -2.0 * I;
  Eigen::PartialPivLU<Matrix> lu(K);
  Vector rhs = Eigen::Map<const Vector>(Q.data(), n * n);
  Vector p = lu.solve(rhs);
  p += lu.solve(rhs - K * p);
  Matrix P = Eigen::Map<Matrix>(p.data(), n, n);
  P = 0.5 * (P + P.transpose()).eval();
  return P;
}

inline double lyapunov_residual(const Matrix& F, const Matrix& P) {
  return (F.transpose() * P + P * F + 2.0 * Matrix::Identity(F.rows(), F.cols())).norm();
}

/// Lower bound on the tuner normalization gain:
/// (3 / (4 lambda)) (|l| + |P Gamma^{-1} h|)^2 with Gamma^T P + P Gamma = -2I.
inline double hot_mu_bound(const Matrix& Gamma, const Vector& l, const Vector& h, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("hot_mu_bound: lambda must be positive");
  if (Gamma.size() == 0) return 0.0;
  const Matrix P = lyapunov_solve(Gamma);
  const Vector v = P * Gamma.partialPivLu().solve(h);
  const double s = l.norm() + v.norm();
  return 3.0 / (4.0 * lambda) * s * s;
}

/// Quadratic certificate for a Hurwitz F together with the optional constants
/// of the state-dependent stability assumption.
struct StabilityCertificate {
  Matrix P;
  double residual = 0.0;
  std::optional<double> c1, c2, c3, c4;
  std::optional<double> mu_min;
};

inline StabilityCertificate certify(const Matrix& F) {
  StabilityCertificate cert;
  cert.P = lyapunov_solve(F);
  cert.residual = lyapunov_residual(F, cert.P);
  return cert;
}

/// Certificate for the Lorenz G(y) with V(x) = x^T x / 2:
/// c1 = c2 = 1/2, c3 = min(sigma, 1, beta), c4 = 1.
inline StabilityCertificate lorenz_certificate(double sigma, double beta) {
  StabilityCertificate cert;
  cert.P = 0.5 * Matrix::Identity(3, 3);
  cert.c1 = 0.5;
  cert.c2 = 0.5;
  cert.c3 = std::min({sigma, 1.0, beta});
  cert.c4 = 1.0;
  return cert;
}

// ---------------------------------------------------------------------------
// Persistent excitation

struct PeReport {
  double window = 0.0;
  double alpha_hat = 0.0;
  double threshold = 0.0;
  bool is_pe = false;
  std::size_t windows = 0;
  double worst_window_start = 0.0;
};

/// Minimum over windows [t, t+T] of the smallest eigenvalue of the Gram
/// integral of f f^T, trapezoid rule on the samples. A window end falling
/// between samples is handled by linear interpolation.
inline PeReport pe_metric(const TimeSeries& series, const std::vector<std::string>& channels, double T,
                          std::optional<double> stride = std::nullopt, double threshold = 1e-6) {
  if (!(T > 0.0)) throw std::invalid_argument("pe_metric: window must be positive");
  if (channels.empty()) throw std::invalid_argument("pe_metric: at least one channel required");
  if (series.size() < 2) throw std::invalid_argument("pe_metric: series too short");
  const auto& t = series.t();
  const double h = series.step();
  if (t.back() - t.front() + 1e-9 * h < T) throw std::invalid_argument("pe_metric: series shorter than the window");

  const auto m = static_cast<Eigen::Index>(channels.size());
  std::vector<std::span<const double>> cols;
  for (const auto& name : channels) cols.push_back(series.channel(name));
  auto f_at = [&](std::size_t k) {
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = cols[static_cast<std::size_t>(i)][k];
    return v;
  };

  const double stride_time = stride.value_or(T / 4.0);
  const auto stride_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(stride_time / h)));
  const double n_exact = T / h;
  auto full = static_cast<std::size_t>(std::floor(n_exact + 1e-9));
  double frac = n_exact - static_cast<double>(full);
  if (frac < 1e-9) frac = 0.0;

  PeReport rep;
  rep.window = T;
  rep.threshold = threshold;
  rep.alpha_hat = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + full < series.size(); start += stride_steps) {
    if (frac > 0.0 && start + full + 1 >= series.size()) break;
    Matrix gram = Matrix::Zero(m, m);
    Vector prev = f_at(start);
    for (std::size_t k = start + 1; k <= start + full; ++k) {
      Vector cur = f_at(k);
      gram += 0.5 * h * (prev * prev.transpose() + cur * cur.transpose());
      prev = std::move(cur);
    }
    if (frac > 0.0) {
      const Vector next = f_at(start + full + 1);
      const Vector end = prev + frac * (next - prev);
      gram += 0.5 * frac * h * (prev * prev.transpose() + end * end.transpose());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double lo = std::max(0.0, es.eigenvalues().minCoeff());
    ++rep.windows;
    if (lo < rep.alpha_hat) {
      rep.alpha_hat = lo;
      rep.worst_window_start = t[start];
    }
  }
  rep.is_pe = rep.alpha_hat >= threshold;
  return rep;
}

// ---------------------------------------------------------------------------
// Residual set of the robust schemes

struct ResidualBound {
  double theta_norm = 0.0;
  double theta_star = 0.0;
  double gamma = 0.0;
  double noise_sup = 0.0;
  double bound = 0.0;  // admissible |theta_tilde|^2
};

/// max[(|theta| + 2 theta*)^2, gamma ||xi + xi_e||_inf^2 + |theta|^2]
inline ResidualBound residual_bound(const Vector& theta, double theta_star, double gamma, double noise_sup) {
  if (!(theta_star > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("residual_bound: theta*, gamma must be > 0");
  if (!(noise_sup >= 0.0)) throw std::invalid_argument("residual_bound: noise_sup must be >= 0");
  ResidualBound r{theta.norm(), theta_star, gamma, noise_sup, 0.0};
  const double a = r.theta_norm + 2.0 * theta_star;
  r.bound = std::max(a * a, gamma * noise_sup * noise_sup + r.theta_norm * r.theta_norm);
  return r;
}

// ---------------------------------------------------------------------------
// Disturbance propagator

/// Xi' = F Xi + phi0(y) - phi0(y_r) + b (phi(y) - phi(y_r))^T theta - k xi.
/// Its output c^T Xi is the noise-induced part of the augmented error.
inline Vector disturbance_propagator_derivative(const Vector& Xi, const Matrix& F, const RegressorPlant& plant,
                                                double y, double y_r, const Vector& theta, const Vector& k, double t) {
  const double xi = y_r - y;
  return F * Xi + plant.phi0(t, y) - plant.phi0(t, y_r) + plant.b * (plant.phi(t, y) - plant.phi(t, y_r)).dot(theta) -
         k * xi;
}

/// State-dependent form: uses G(y_r) = A(y_r) - k(y_r) c^T and adds
/// (A(y) - A(y_r)) x.
inline Vector disturbance_propagator_derivative(const Vector& Xi, const StateDependentPlant& plant,
                                                const VectorOfOutput& k_of_y, const Vector& x, double y, double y_r,
                                                const Vector& theta, double t) {
  const double xi = y_r - y;
  const Vector k = k_of_y(y_r);
  const Matrix Ar = plant.A_of_y(y_r);
  const Matrix Gbar = Ar - k * plant.c.transpose();
  return Gbar * Xi + plant.phi0(t, y) - plant.phi0(t, y_r) +
         plant.b * (plant.phi(t, y) - plant.phi(t, y_r)).dot(theta) - k * xi + (plant.A_of_y(y) - Ar) * x;
}

}  // namespace adapt_sync
