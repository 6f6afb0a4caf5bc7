#pragma once

// Adaptive observers (slave systems). Every observer is an immutable
// description; its state is a slice of the joint scenario state and is only
// touched through evaluate()/derivative().

#include "adapt_sync/analysis.hpp"
#include "adapt_sync/filters.hpp"
#include "adapt_sync/plant.hpp"
#include "adapt_sync/transfer.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace adapt_sync {

// ---------------------------------------------------------------------------
// Adaptation building blocks

/// Dead-zone leakage weight: 0 below theta*, linear ramp to 1 at 2 theta*.
inline double dead_zone_alpha(const Vector& theta_hat, double theta_star) {
  if (!(theta_star > 0.0)) throw std::invalid_argument("dead_zone_alpha: theta* must be positive");
  const double n = theta_hat.norm();
  if (n < theta_star) return 0.0;
  if (n > 2.0 * theta_star) return 1.0;
  return n / theta_star - 1.0;
}

/// gamma * omega * e_aug, minus alpha(theta_hat) theta_hat in robust mode.
inline Vector adaptation_rhs(double gamma, const Vector& omega, double e_aug, const Vector& theta_hat,
                             std::optional<double> theta_star = std::nullopt) {
  if (!(gamma > 0.0)) throw std::invalid_argument("adaptation_rhs: gamma must be positive");
  Vector d = gamma * e_aug * omega;
  if (theta_star) d -= dead_zone_alpha(theta_hat, *theta_star) * theta_hat;
  return d;
}

/// e + H(p)[phi^T theta_hat] - omega^T theta_hat, the filtered product
/// supplied as `aug_filter_output`.
inline double augmented_error(double e_raw, double aug_filter_output, const Vector& omega, const Vector& theta_hat) {
  return e_raw + aug_filter_output - omega.dot(theta_hat);
}

/// Simple contiguous layout of named blocks inside a state vector.
class StateLayout {
 public:
  Eigen::Index add(Eigen::Index size) {
    const Eigen::Index off = size_;
    size_ += size;
    return off;
  }
  Eigen::Index size() const noexcept { return size_; }

 private:
  Eigen::Index size_ = 0;
};

// ---------------------------------------------------------------------------
// Augmented-error observer (constant A)

class AeObserver {
 public:
  struct Signals {
    double y_hat = 0.0;
    double e = 0.0;
    double e_aug = 0.0;
    Vector theta_hat;
    Vector theta_hat_dot;
    Vector omega;
    Vector phibar;
  };

  AeObserver(RegressorPlant model, Vector k, double gamma, std::optional<double> theta_star = std::nullopt)
      : model_(std::move(model)), k_(std::move(k)), gamma_(gamma), theta_star_(theta_star) {
    model_.validate();
    if (!(gamma_ > 0.0)) throw std::invalid_argument("AeObserver: gamma must be positive");
    if (theta_star_ && !(*theta_star_ > 0.0)) throw std::invalid_argument("AeObserver: theta* must be positive");
    if (k_.size() != model_.n()) throw std::invalid_argument("AeObserver: k must have length n");
    const Matrix F = model_.A - k_ * model_.c.transpose();
    regressor_ = make_lti_filter(F, model_.b, model_.c, model_.m());
    augmentation_ = make_lti_filter(F, model_.b, model_.c, 1);
    x_hat_ = layout_.add(model_.n());
    theta_hat_ = layout_.add(model_.m());
    reg_state_ = layout_.add(regressor_.state_size());
    aug_state_ = layout_.add(augmentation_.state_size());
  }

  Eigen::Index state_size() const { return layout_.size(); }
  Eigen::Index n() const { return model_.n(); }
  Eigen::Index m() const { return model_.m(); }
  const Matrix& F() const { return regressor_.F(); }
  const Vector& k() const { return k_; }
  double gamma() const { return gamma_; }
  std::optional<double> theta_star() const { return theta_star_; }
  const LtiFilter& regressor_filter() const { return regressor_; }
  const RegressorPlant& model() const { return model_; }

  Vector initial_state(const Vector& x_hat0, const Vector& theta_hat0) const {
    Vector z = Vector::Zero(state_size());
    z.segment(x_hat_, n()) = x_hat0;
    z.segment(theta_hat_, m()) = theta_hat0;
    return z;
  }

  auto x_hat(const Eigen::Ref<const Vector>& z) const { return z.segment(x_hat_, n()); }
  auto theta_hat(const Eigen::Ref<const Vector>& z) const { return z.segment(theta_hat_, m()); }

  Signals evaluate(double t, const Eigen::Ref<const Vector>& z, double y_r) const {
    Signals s;
    s.theta_hat = theta_hat(z);
    s.y_hat = model_.c.dot(x_hat(z));
    s.e = y_r - s.y_hat;
    s.phibar = model_.phi(t, y_r);
    s.omega = regressor_.output(z.segment(reg_state_, regressor_.state_size()));
    const double aug = augmentation_.output(z.segment(aug_state_, augmentation_.state_size()))[0];
    s.e_aug = augmented_error(s.e, aug, s.omega, s.theta_hat);
    s.theta_hat_dot = adaptation_rhs(gamma_, s.omega, s.e_aug, s.theta_hat, theta_star_);
    return s;
  }

  Vector derivative(double t, const Eigen::Ref<const Vector>& z, double y_r) const {
    const Signals s = evaluate(t, z, y_r);
    Vector dz(state_size());
    dz.segment(x_hat_, n()) = model_.A * x_hat(z) + model_.phi0(t, y_r) +
                              model_.b * s.phibar.dot(s.theta_hat) + k_ * s.e;
    dz.segment(theta_hat_, m()) = s.theta_hat_dot;
    dz.segment(reg_state_, regressor_.state_size()) =
        regressor_.derivative(z.segment(reg_state_, regressor_.state_size()), s.phibar);
    dz.segment(aug_state_, augmentation_.state_size()) = augmentation_.derivative(
        z.segment(aug_state_, augmentation_.state_size()), Vector::Constant(1, s.phibar.dot(s.theta_hat)));
    return dz;
  }

 private:
  RegressorPlant model_;
  Vector k_;
  double gamma_;
  std::optional<double> theta_star_;
  LtiFilter regressor_;
  LtiFilter augmentation_;
  StateLayout layout_;
  Eigen::Index x_hat_ = 0, theta_hat_ = 0, reg_state_ = 0, aug_state_ = 0;
};

// ---------------------------------------------------------------------------
// High-order tuner

/// Time-derivative arrays [f, f', f'', ...] with Leibniz products.
namespace jet {

using Jet = std::vector<double>;

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline Jet mul(const Jet& a, const Jet& b) {
  const std::size_t K = std::min(a.size(), b.size());
  Jet c(K, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i <= k; ++i)
      c[k] += binomial(static_cast<int>(k), static_cast<int>(i)) * a[i] * b[k - i];
  return c;
}

}  // namespace jet

/// Per-parameter tuner filter (l, Gamma, h): a minimal realization of
/// alpha(0)/alpha(p) with alpha(p) = (p + lambda_alpha)^order.
struct Tuner {
  Matrix Gamma;
  Vector h;
  Vector l;
  double mu = 1.0;
  double lambda_alpha = 1.0;

  Eigen::Index order() const { return Gamma.rows(); }

  std::complex<double> transfer(std::complex<double> s) const {
    const Eigen::Index n = order();
    if (n == 0) return 1.0;
    using C = std::complex<double>;
    Eigen::MatrixXcd M = s * Eigen::MatrixXcd::Identity(n, n) - Gamma.cast<C>();
    Eigen::VectorXcd x = M.partialPivLu().solve(h.cast<C>());
    return l.cast<C>().dot(x);
  }
};

inline Tuner make_tuner(int order, double lambda_alpha, double mu) {
  if (order < 0) throw std::invalid_argument("make_tuner: order must be >= 0");
  if (!(lambda_alpha > 0.0)) throw std::invalid_argument("make_tuner: alpha root must be negative (lambda_alpha > 0)");
  if (!(mu > 0.0)) throw std::invalid_argument("make_tuner: mu must be positive");
  Tuner t;
  t.mu = mu;
  t.lambda_alpha = lambda_alpha;
  if (order == 0) {
    t.Gamma.resize(0, 0);
    t.h.resize(0);
    t.l.resize(0);
    return t;
  }
  const Polynomial alpha = Polynomial::from_roots(std::vector<double>(static_cast<std::size_t>(order), -lambda_alpha));
  const Realization r = realize(Polynomial({alpha[0]}), alpha);
  t.Gamma = r.F;
  t.h = r.b;
  t.l = r.c;
  return t;
}

enum class TunerOutput {
  direct,      // theta_hat_i = l^T eta_i
  derivative,  // d/dt theta_hat_i = l^T eta_i
};

struct HotOptions {
  double lambda = 1.0;
  double mu = 1.0;
  double alpha_lambda = 0.0;  // tuner polynomial root; 0 selects lambda
  TunerOutput tuner_output = TunerOutput::direct;
  bool strict = true;  // reject mu at or below the stability bound
};

/// Observer with adjustable feedback nu = W(p)^{-1}[varpi^T theta_hat],
/// W(p) = (p + lambda) H(p).
///
/// W^{-1} = D(p) / ((p + lambda) N(p)) is split into a polynomial part Q(p)
/// of degree r - 1 and a strictly proper remainder realized as a filter. The
/// derivatives of g = varpi^T theta_hat required by Q are propagated exactly:
/// varpi's from the H-filter state, theta_hat's from the tuner equations.
class HotObserver {
 public:
  struct Signals {
    double y_hat = 0.0;
    double e = 0.0;
    double nu = 0.0;
    double g = 0.0;  // varpi^T theta_hat
    double normalizer = 1.0;
    Vector theta_hat;
    Vector theta_hat_dot;
    Vector varpi;
    Vector phi;
    jet::Jet g_jet;
  };

  HotObserver(RegressorPlant model, Vector k, HotOptions options)
      : model_(std::move(model)), k_(std::move(k)), options_(options), W_(LtiFilter{}, 1.0) {
    model_.validate();
    if (k_.size() != model_.n()) throw std::invalid_argument("HotObserver: k must have length n");
    if (!(options_.lambda > 0.0)) throw std::invalid_argument("HotObserver: lambda must be positive");
    if (!(options_.mu > 0.0)) throw std::invalid_argument("HotObserver: mu must be positive");
    const Matrix F = model_.A - k_ * model_.c.transpose();
    H_ = make_lti_filter(F, model_.b, model_.c, model_.m());
    W_ = WDecomposition(H_, options_.lambda);
    r_ = H_.relative_degree();
    if (r_ < 1) throw std::invalid_argument("HotObserver: relative degree must be >= 1");

    const double alpha_lambda = options_.alpha_lambda > 0.0 ? options_.alpha_lambda : options_.lambda;
    tuner_ = make_tuner(std::max(0, r_ - 2), alpha_lambda, options_.mu);
    mu_bound_ = r_ > 2 ? hot_mu_bound(tuner_.Gamma, tuner_.l, tuner_.h, options_.lambda) : 0.0;
    if (options_.strict && r_ > 2 && !(options_.mu > mu_bound_)) {
      std::ostringstream os;
      os << "HotObserver: mu = " << options_.mu << " does not exceed the stability bound " << mu_bound_;
      throw std::invalid_argument(os.str());
    }

    // nu = Q(p)[g] + R(p)/M(p) [g]
    const TransferFunction tf = transfer_function(F, model_.b, model_.c);
    const Polynomial M = Polynomial::linear(options_.lambda) * tf.num;
    auto [Q, R] = Polynomial::divide(tf.den, M);
    quotient_ = Q;
    if (quotient_.degree() != r_ - 1) throw std::logic_error("HotObserver: unexpected quotient degree");
    const Realization rem = realize(R, M);
    remainder_F_ = rem.F;
    remainder_b_ = rem.b;
    remainder_c_ = rem.c;
    const auto hz = hurwitz_check(remainder_F_);
    if (!hz.hurwitz)
      throw std::invalid_argument("HotObserver: H(p) is not minimum phase, W(p)^{-1} has an unstable part");

    x_hat_ = layout_.add(model_.n());
    h_state_ = layout_.add(H_.state_size());
    psi_ = layout_.add(model_.m());
    eta_ = layout_.add(model_.m() * tuner_.order());
    if (r_ > 2 && options_.tuner_output == TunerOutput::derivative) theta_state_ = layout_.add(model_.m());
    rem_ = layout_.add(remainder_F_.rows());
  }

  Eigen::Index state_size() const { return layout_.size(); }
  Eigen::Index n() const { return model_.n(); }
  Eigen::Index m() const { return model_.m(); }
  int relative_degree() const { return r_; }
  const Tuner& tuner() const { return tuner_; }
  double mu_bound() const { return mu_bound_; }
  const HotOptions& options() const { return options_; }
  const WDecomposition& W() const { return W_; }
  const Matrix& F() const { return H_.F(); }
  const Vector& k() const { return k_; }
  const Polynomial& quotient() const { return quotient_; }
  bool uses_tuner_filters() const { return r_ > 2; }
  const RegressorPlant& model() const { return model_; }

  auto x_hat(const Eigen::Ref<const Vector>& z) const { return z.segment(x_hat_, n()); }

  /// theta_hat(0) is only adjustable where theta_hat is itself a state or
  /// equals psi; in direct tuner mode it is l^T eta(0) and starts at zero.
  Vector initial_state(const Vector& x_hat0, const Vector& theta_hat0) const {
    Vector z = Vector::Zero(state_size());
    z.segment(x_hat_, n()) = x_hat0;
    if (r_ <= 2) {
      z.segment(psi_, m()) = theta_hat0;
    } else if (options_.tuner_output == TunerOutput::derivative) {
      z.segment(theta_state_, m()) = theta_hat0;
    } else if (theta_hat0.norm() != 0.0) {
      // eta at the steady state of psi = theta_hat0 gives l^T eta = theta_hat0.
      z.segment(psi_, m()) = theta_hat0;
      const Vector eta_ss = -tuner_.Gamma.partialPivLu().solve(tuner_.h);
      for (Eigen::Index i = 0; i < m(); ++i)
        z.segment(eta_ + i * tuner_.order(), tuner_.order()) = eta_ss * theta_hat0[i];
    }
    return z;
  }

  Signals evaluate(double t, const Eigen::Ref<const Vector>& z, double y_r) const {
    const int K = r_ - 1;  // highest derivative of g needed
    const auto q = static_cast<std::size_t>(K + 1);
    Signals s;
    s.y_hat = model_.c.dot(x_hat(z));
    s.e = y_r - s.y_hat;
    s.phi = model_.phi(t, y_r);
    const auto hs = z.segment(h_state_, H_.state_size());

    // varpi^(j) = omega^(j+1) + lambda omega^(j), j <= r - 1
    std::vector<Vector> omega;
    for (int j = 0; j <= r_; ++j) omega.push_back(H_.output_derivative(hs, s.phi, j));
    std::vector<jet::Jet> varpi(static_cast<std::size_t>(m()), jet::Jet(q));
    for (Eigen::Index i = 0; i < m(); ++i)
      for (int j = 0; j <= K; ++j)
        varpi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            omega[static_cast<std::size_t>(j + 1)][i] + options_.lambda * omega[static_cast<std::size_t>(j)][i];
    s.varpi.resize(m());
    for (Eigen::Index i = 0; i < m(); ++i) s.varpi[i] = varpi[static_cast<std::size_t>(i)][0];

    // normalizer 1 + mu varpi^T varpi
    jet::Jet norm(q, 0.0);
    norm[0] = 1.0;
    for (const auto& v : varpi) {
      const auto sq = jet::mul(v, v);
      for (std::size_t j = 0; j < q; ++j) norm[j] += options_.mu * sq[j];
    }
    s.normalizer = norm[0];

    // theta_hat jets. Only psi and psi' = varpi e are needed exactly: higher
    // derivatives of psi are annihilated by l^T Gamma^a h = 0, a < r - 3.
    std::vector<jet::Jet> theta(static_cast<std::size_t>(m()), jet::Jet(q, 0.0));
    const auto psi = z.segment(psi_, m());
    for (Eigen::Index i = 0; i < m(); ++i) {
      auto& th = theta[static_cast<std::size_t>(i)];
      const double psi_dot = s.varpi[i] * s.e;
      if (r_ <= 2) {
        th[0] = psi[i];
        if (q > 1) th[1] = psi_dot;
        continue;
      }
      const Eigen::Index d = tuner_.order();
      jet::Jet psi_jet(q, 0.0);
      psi_jet[0] = psi[i];
      if (q > 1) psi_jet[1] = psi_dot;
      std::vector<Vector> eta_d{z.segment(eta_ + i * d, d)};
      for (int j = 0; j < K; ++j) {
        Vector next = Vector::Zero(d);
        for (int a = 0; a <= j; ++a) {
          const auto ja = static_cast<std::size_t>(j - a);
          next += jet::binomial(j, a) * norm[static_cast<std::size_t>(a)] *
                  (tuner_.Gamma * eta_d[ja] + tuner_.h * psi_jet[ja]);
        }
        eta_d.push_back(std::move(next));
      }
      if (options_.tuner_output == TunerOutput::direct) {
        for (std::size_t j = 0; j < q; ++j) th[j] = tuner_.l.dot(eta_d[j]);
      } else {
        th[0] = z[theta_state_ + i];
        for (std::size_t j = 1; j < q; ++j) th[j] = tuner_.l.dot(eta_d[j - 1]);
      }
    }
    s.theta_hat.resize(m());
    s.theta_hat_dot.resize(m());
    for (Eigen::Index i = 0; i < m(); ++i) {
      s.theta_hat[i] = theta[static_cast<std::size_t>(i)][0];
      s.theta_hat_dot[i] = q > 1 ? theta[static_cast<std::size_t>(i)][1] : s.varpi[i] * s.e;
    }

    s.g_jet.assign(q, 0.0);
    for (Eigen::Index i = 0; i < m(); ++i) {
      const auto prod = jet::mul(varpi[static_cast<std::size_t>(i)], theta[static_cast<std::size_t>(i)]);
      for (std::size_t j = 0; j < q; ++j) s.g_jet[j] += prod[j];
    }
    s.g = s.g_jet[0];
    s.nu = nu_from(s.g_jet, z.segment(rem_, remainder_F_.rows()));
    return s;
  }

  /// nu = sum_j Q_j g^(j) + remainder filter output.
  double nu_from(const jet::Jet& g_jet, const Eigen::Ref<const Vector>& remainder_state) const {
    double nu = remainder_c_.dot(remainder_state);
    for (int j = 0; j <= quotient_.degree(); ++j)
      nu += quotient_[static_cast<std::size_t>(j)] * g_jet[static_cast<std::size_t>(j)];
    return nu;
  }

  /// Equilibrium of the remainder filter under constant input g.
  Vector remainder_steady_state(double g) const {
    return -remainder_F_.partialPivLu().solve(remainder_b_ * g);
  }

  Vector derivative(double t, const Eigen::Ref<const Vector>& z, double y_r) const {
    const Signals s = evaluate(t, z, y_r);
    Vector dz(state_size());
    dz.segment(x_hat_, n()) = model_.A * x_hat(z) + model_.phi0(t, y_r) + model_.b * s.nu + k_ * s.e;
    dz.segment(h_state_, H_.state_size()) = H_.derivative(z.segment(h_state_, H_.state_size()), s.phi);
    dz.segment(psi_, m()) = s.varpi * s.e;
    const Eigen::Index d = tuner_.order();
    const auto psi = z.segment(psi_, m());
    for (Eigen::Index i = 0; i < m() && d > 0; ++i) {
      const auto eta = z.segment(eta_ + i * d, d);
      const Vector deta = s.normalizer * (tuner_.Gamma * eta + tuner_.h * psi[i]);
      dz.segment(eta_ + i * d, d) = deta;
      if (options_.tuner_output == TunerOutput::derivative) dz[theta_state_ + i] = tuner_.l.dot(eta);
    }
    const auto w = z.segment(rem_, remainder_F_.rows());
    dz.segment(rem_, remainder_F_.rows()) = remainder_F_ * w + remainder_b_ * s.g;
    return dz;
  }

 private:
  RegressorPlant model_;
  Vector k_;
  HotOptions options_;
  LtiFilter H_;
  WDecomposition W_;
  int r_ = 0;
  Tuner tuner_;
  double mu_bound_ = 0.0;
  Polynomial quotient_;
  Matrix remainder_F_;
  Vector remainder_b_;
  Vector remainder_c_;
  StateLayout layout_;
  Eigen::Index x_hat_ = 0, h_state_ = 0, psi_ = 0, eta_ = 0, theta_state_ = 0, rem_ = 0;
};

/// Convenience wrapper returning only nu.
inline double hot_nu(const HotObserver& obs, double t, const Eigen::Ref<const Vector>& z, double y_r) {
  return obs.evaluate(t, z, y_r).nu;
}

// ---------------------------------------------------------------------------
// State-dependent augmented-error observer

struct LorenzParameters {
  double sigma = 10.0;
  double beta = 8.0 / 3.0;
};

class SdObserver {
 public:
  struct Signals {
    double y_hat = 0.0;
    double e = 0.0;
    double e_aug = 0.0;
    Vector theta_hat;
    Vector theta_hat_dot;
    Vector omega;
    Vector phibar;
  };

  /// `certificate` documents the stability of G(y) = A(y) - k(y) c^T; without
  /// one, G must at least be Hurwitz at y = 0.
  SdObserver(StateDependentPlant model, VectorOfOutput k_of_y, double gamma,
             std::optional<double> theta_star = std::nullopt,
             std::optional<StabilityCertificate> certificate = std::nullopt,
             LorenzFilterForm form = LorenzFilterForm::general, std::optional<LorenzParameters> lorenz = std::nullopt)
      : model_(std::move(model)),
        k_of_y_(std::move(k_of_y)),
        gamma_(gamma),
        theta_star_(theta_star),
        certificate_(std::move(certificate)),
        form_(form),
        lorenz_(lorenz) {
    model_.validate();
    if (!(gamma_ > 0.0)) throw std::invalid_argument("SdObserver: gamma must be positive");
    if (theta_star_ && !(*theta_star_ > 0.0)) throw std::invalid_argument("SdObserver: theta* must be positive");
    if (!k_of_y_ || k_of_y_(0.0).size() != model_.n()) throw std::invalid_argument("SdObserver: k(y) must have length n");
    if (form_ == LorenzFilterForm::as_printed && (!lorenz_ || model_.n() != 3 || model_.m() != 1))
      throw std::invalid_argument("SdObserver: printed filter form applies to the Lorenz master only");
    if (!certificate_) {
      const auto h = hurwitz_check(G(0.0));
      if (!h.hurwitz) throw std::invalid_argument("SdObserver: G(0) = A(0) - k(0) c^T is not Hurwitz");
    }
    x_hat_ = layout_.add(model_.n());
    theta_hat_ = layout_.add(model_.m());
    omega_ = layout_.add(model_.n() * model_.m());
    eta_ = layout_.add(model_.n());
  }

  Eigen::Index state_size() const { return layout_.size(); }
  Eigen::Index n() const { return model_.n(); }
  Eigen::Index m() const { return model_.m(); }
  double gamma() const { return gamma_; }
  std::optional<double> theta_star() const { return theta_star_; }
  LorenzFilterForm form() const { return form_; }
  const std::optional<StabilityCertificate>& certificate() const { return certificate_; }
  const StateDependentPlant& model() const { return model_; }
  const VectorOfOutput& k_of_y() const { return k_of_y_; }

  Matrix G(double y) const { return model_.A_of_y(y) - k_of_y_(y) * model_.c.transpose(); }

  Vector initial_state(const Vector& x_hat0, const Vector& theta_hat0) const {
    Vector z = Vector::Zero(state_size());
    z.segment(x_hat_, n()) = x_hat0;
    z.segment(theta_hat_, m()) = theta_hat0;
    return z;
  }

  auto x_hat(const Eigen::Ref<const Vector>& z) const { return z.segment(x_hat_, n()); }
  auto theta_hat(const Eigen::Ref<const Vector>& z) const { return z.segment(theta_hat_, m()); }
  auto eta(const Eigen::Ref<const Vector>& z) const { return z.segment(eta_, n()); }
  Matrix Omega(const Eigen::Ref<const Vector>& z) const {
    return Eigen::Map<const Matrix>(z.segment(omega_, n() * m()).data(), n(), m());
  }

  Signals evaluate(double t, const Eigen::Ref<const Vector>& z, double y_r) const {
    Signals s;
    s.theta_hat = theta_hat(z);
    s.y_hat = model_.c.dot(x_hat(z));
    s.e = y_r - s.y_hat;
    s.phibar = model_.phi(t, y_r);
    s.omega = (model_.c.transpose() * Omega(z)).transpose();
    s.e_aug = s.e + model_.c.dot(eta(z));
    s.theta_hat_dot = adaptation_rhs(gamma_, s.omega, s.e_aug, s.theta_hat, theta_star_);
    return s;
  }

  Vector derivative(double t, const Eigen::Ref<const Vector>& z, double y_r) const {
    const Signals s = evaluate(t, z, y_r);
    const Matrix Ar = model_.A_of_y(y_r);
    const Vector k = k_of_y_(y_r);
    const Matrix Gbar = Ar - k * model_.c.transpose();
    const Matrix Om = Omega(z);
    Vector dz(state_size());
    dz.segment(x_hat_, n()) = Ar * x_hat(z) + model_.phi0(t, y_r) + model_.b * s.phibar.dot(s.theta_hat) + k * s.e;
    dz.segment(theta_hat_, m()) = s.theta_hat_dot;
    if (form_ == LorenzFilterForm::general) {
      const Matrix dOm = omega_filter_derivative(Om, Gbar, model_.b, s.phibar);
      dz.segment(omega_, n() * m()) = Eigen::Map<const Vector>(dOm.data(), dOm.size());
      dz.segment(eta_, n()) = eta_filter_derivative(eta(z), Gbar, Om, s.theta_hat_dot);
    } else {
      dz.segment(omega_, 3) = lorenz_printed_omega_derivative(Om.col(0), lorenz_->sigma, lorenz_->beta, y_r);
      dz.segment(eta_, 3) =
          lorenz_printed_eta_derivative(eta(z), Om.col(0), lorenz_->sigma, lorenz_->beta, y_r, s.theta_hat[0]);
    }
    return dz;
  }

 private:
  StateDependentPlant model_;
  VectorOfOutput k_of_y_;
  double gamma_;
  std::optional<double> theta_star_;
  std::optional<StabilityCertificate> certificate_;
  LorenzFilterForm form_;
  std::optional<LorenzParameters> lorenz_;
  StateLayout layout_;
  Eigen::Index x_hat_ = 0, theta_hat_ = 0, omega_ = 0, eta_ = 0;
};

/// Observer for the Lorenz message master: k = (0, sigma, 0), vartheta is the
/// adjustable parameter.
inline SdObserver make_lorenz_observer(double sigma, double beta, double r, double gamma,
                                       std::optional<double> theta_star = std::nullopt,
                                       LorenzFilterForm form = LorenzFilterForm::general) {
  auto model = lorenz_message_plant(sigma, beta, r, Signal::constant(0.0));
  const auto inj = lorenz_gain_and_G(sigma, beta);
  return SdObserver(std::move(model), [k = inj.k](double) { return k; }, gamma, theta_star,
                    lorenz_certificate(sigma, beta), form, LorenzParameters{sigma, beta});
}

}  // namespace adapt_sync
