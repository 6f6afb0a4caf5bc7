#pragma once

// Master-system models, the additive noisy channel and the Lorenz presets.

#include "adapt_sync/numerics.hpp"
#include "adapt_sync/signal.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

namespace adapt_sync {

/// Known nonlinearity evaluated on the output (and, for exogenous
/// excitation, on time).
using OutputMap = std::function<Vector(double t, double y)>;
/// Possibly time-varying parameter vector.
using ParameterMap = std::function<Vector(double t)>;
using MatrixOfOutput = std::function<Matrix(double y)>;
using VectorOfOutput = std::function<Vector(double y)>;

/// x' = A x + phi0(y) + b phi(y)^T theta,  y = c^T x.
struct RegressorPlant {
  Matrix A;
  Vector b;
  Vector c;
  OutputMap phi0;
  OutputMap phi;
  ParameterMap theta;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return phi(0.0, 0.0).size(); }
  double output(const Vector& x) const { return c.dot(x); }

  void validate() const {
    const auto dim = A.rows();
    if (dim == 0 || A.cols() != dim) throw std::invalid_argument("plant: A must be square and non-empty");
    if (b.size() != dim || c.size() != dim) throw std::invalid_argument("plant: b and c must have length n");
    if (!phi0 || !phi || !theta) throw std::invalid_argument("plant: phi0, phi and theta are required");
    if (phi0(0.0, 0.0).size() != dim) throw std::invalid_argument("plant: phi0(y) must have length n");
    if (phi(0.0, 0.0).size() != theta(0.0).size())
      throw std::invalid_argument("plant: phi(y) and theta must have the same length m");
  }
};

/// x' = A(y) x + phi0(y) + b phi(y)^T theta,  y = c^T x.
struct StateDependentPlant {
  MatrixOfOutput A_of_y;
  Vector b;
  Vector c;
  OutputMap phi0;
  OutputMap phi;
  ParameterMap theta;

  Eigen::Index n() const { return b.size(); }
  Eigen::Index m() const { return phi(0.0, 0.0).size(); }
  double output(const Vector& x) const { return c.dot(x); }

  void validate() const {
    const auto dim = b.size();
    if (dim == 0 || c.size() != dim) throw std::invalid_argument("plant: b and c must have the same length n");
    if (!A_of_y || !phi0 || !phi || !theta) throw std::invalid_argument("plant: A(y), phi0, phi, theta required");
    const Matrix A0 = A_of_y(0.0);
    if (A0.rows() != dim || A0.cols() != dim) throw std::invalid_argument("plant: A(y) must be n x n");
    if (phi0(0.0, 0.0).size() != dim) throw std::invalid_argument("plant: phi0(y) must have length n");
    if (phi(0.0, 0.0).size() != theta(0.0).size())
      throw std::invalid_argument("plant: phi(y) and theta must have the same length m");
  }
};

using MasterSystem = std::variant<RegressorPlant, StateDependentPlant>;

inline StateDependentPlant as_state_dependent(const RegressorPlant& p) {
  return StateDependentPlant{[A = p.A](double) { return A; }, p.b, p.c, p.phi0, p.phi, p.theta};
}

namespace detail {
inline Vector checked(Vector v, double t) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << "plant_derivative: non-finite component " << i << " at t=" << t;
      throw IntegrationFault(os.str(), t, i);
    }
  }
  return v;
}
}  // namespace detail

inline Vector plant_derivative(const RegressorPlant& p, const Vector& x, double t) {
  const double y = p.output(x);
  return detail::checked(p.A * x + p.phi0(t, y) + p.b * p.phi(t, y).dot(p.theta(t)), t);
}

inline Vector plant_derivative(const StateDependentPlant& p, const Vector& x, double t) {
  const double y = p.output(x);
  return detail::checked(p.A_of_y(y) * x + p.phi0(t, y) + p.b * p.phi(t, y).dot(p.theta(t)), t);
}

inline Vector plant_derivative(const MasterSystem& p, const Vector& x, double t) {
  return std::visit([&](const auto& q) { return plant_derivative(q, x, t); }, p);
}

// ---------------------------------------------------------------------------
// Channel

enum class NoiseDistribution { zero, uniform, truncated_gaussian };

/// y_r = y + xi_k with xi_k a pure function of (seed, k); |xi_k| <= xi_max.
struct Channel {
  double xi_max = 0.0;
  NoiseDistribution distribution = NoiseDistribution::uniform;
  std::uint64_t seed = 0;

  bool noiseless() const { return xi_max == 0.0 || distribution == NoiseDistribution::zero; }

  double noise(std::uint64_t k) const {
    if (noiseless()) return 0.0;
    if (distribution == NoiseDistribution::uniform) return xi_max * (2.0 * unit(k, 0) - 1.0);
    // Gaussian with sd xi_max/3, redrawn until inside the bound.
    for (std::uint64_t attempt = 0;; ++attempt) {
      const double u1 = unit(k, 2 * attempt + 1);
      const double u2 = unit(k, 2 * attempt + 2);
      const double g = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
      const double v = g * xi_max / 3.0;
      if (std::abs(v) <= xi_max) return v;
    }
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double unit(std::uint64_t k, std::uint64_t lane) const {
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ k) ^ lane);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }
};

inline double channel_output(const Channel& channel, double y, std::uint64_t k) { return y + channel.noise(k); }

// ---------------------------------------------------------------------------
// Lorenz system

/// A(y) of the Lorenz system written with x1 as output.
inline MatrixOfOutput lorenz_A(double sigma, double beta) {
  return [sigma, beta](double y) {
    Matrix A(3, 3);
    A << -sigma, sigma, 0.0,
         0.0, -1.0, -y,
         0.0, y, -beta;
    return A;
  };
}

inline StateDependentPlant lorenz_plant(double sigma, double beta, Signal theta) {
  if (!(sigma > 0.0) || !(beta > 0.0)) throw std::invalid_argument("lorenz_plant: sigma and beta must be positive");
  Vector b(3), c(3);
  b << 0.0, 1.0, 0.0;
  c << 1.0, 0.0, 0.0;
  return StateDependentPlant{
      lorenz_A(sigma, beta), b, c, [](double, double) { return Vector::Zero(3).eval(); },
      [](double, double y) { return Vector::Constant(1, y); },
      [theta = std::move(theta)](double t) { return Vector::Constant(1, theta(t)); }};
}

inline StateDependentPlant lorenz_plant(double sigma, double beta, double theta) {
  return lorenz_plant(sigma, beta, Signal::constant(theta));
}

/// theta = r (1 + vartheta).
inline double message_to_theta(double r, double vartheta) { return r * (1.0 + vartheta); }

/// Lorenz master carrying the message vartheta(t) in theta = r(1 + vartheta).
///
/// The dynamics equal lorenz_plant(sigma, beta, r(1 + vartheta)); the
/// unknown parameter is vartheta itself, with the known part moved into
/// phi0(y) = (0, r y, 0) and regressor phi(y) = r y.
inline StateDependentPlant lorenz_message_plant(double sigma, double beta, double r, Signal vartheta) {
  if (!(sigma > 0.0) || !(beta > 0.0)) throw std::invalid_argument("lorenz_message_plant: sigma, beta must be positive");
  Vector b(3), c(3);
  b << 0.0, 1.0, 0.0;
  c << 1.0, 0.0, 0.0;
  return StateDependentPlant{lorenz_A(sigma, beta), b, c,
                             [r](double, double y) {
                               Vector v = Vector::Zero(3);
                               v[1] = r * y;
                               return v;
                             },
                             [r](double, double y) { return Vector::Constant(1, r * y); },
                             [m = std::move(vartheta)](double t) { return Vector::Constant(1, m(t)); }};
}

struct LorenzInjection {
  Vector k;
  MatrixOfOutput G_of_y;
};

/// Output-injection gain making G(y) = A(y) - k c^T diagonal plus
/// skew-symmetric: k = (0, sigma, 0), so the (2,1) entry becomes -sigma and
/// the observer's second row picks up +sigma * e.
inline LorenzInjection lorenz_gain_and_G(double sigma, double beta) {
  Vector k(3), c(3);
  k << 0.0, sigma, 0.0;
  c << 1.0, 0.0, 0.0;
  auto A = lorenz_A(sigma, beta);
  return {k, [A, k, c](double y) { return (A(y) - k * c.transpose()).eval(); }};
}

}  // namespace adapt_sync
