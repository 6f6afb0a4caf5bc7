#pragma once

// End-to-end harness: master system -> channel -> observer, integrated as one
// joint ODE, plus the recovery metrics of a transmitted message.

#include "adapt_sync/analysis.hpp"
#include "adapt_sync/numerics.hpp"
#include "adapt_sync/observers.hpp"
#include "adapt_sync/plant.hpp"
#include "adapt_sync/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace adapt_sync {

using Observer = std::variant<AeObserver, HotObserver, SdObserver>;

/// Extra states co-integrated with a scenario to check the error models.
struct Diagnostics {
  /// Disturbance propagator Xi (zero initial state); output channel `xi_e`.
  bool disturbance = false;
  /// Homogeneous error zeta' = G(t) zeta from zeta(0) = eps(0), plus for the
  /// state-dependent scheme the auxiliary error delta = eps + eta - Omega
  /// theta_tilde - Xi; for the tuner scheme the W(p)[nu] reference filter.
  bool auxiliary = false;
};

struct MetricsSpec {
  double band_fraction = 0.05;  // settle band as a fraction of the message amplitude
  double post_transient = 0.0;  // RMSE ignores samples before this time
  std::size_t discard_symbols = 1;
  double pe_window = 5.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  MasterSystem plant;
  Vector x0;
  Channel channel;
  std::optional<Observer> observer;  // required
  Vector x_hat0;
  Vector theta_hat0;
  /// Message carried by the parameter (its truth is plant.theta(t)).
  std::optional<Signal> message;
  double t0 = 0.0;
  double t_end = 100.0;
  double step = 1e-3;
  double guard = 1e6;
  Diagnostics diagnostics;
  MetricsSpec metrics;
};

struct RecoveryMetrics {
  double rmse_theta = 0.0;
  std::vector<std::optional<double>> settle_times;  // one per transition, relative to it
  std::optional<double> ber;
  std::size_t bits_compared = 0;
  double final_output_error = 0.0;

  std::optional<double> max_settle_time() const {
    double m = 0.0;
    for (const auto& s : settle_times) {
      if (!s) return std::nullopt;
      m = std::max(m, *s);
    }
    return m;
  }
};

struct ScenarioResult {
  TimeSeries series;
  RecoveryMetrics metrics;
  std::optional<PeReport> pe;
  std::optional<ResidualBound> residual;
  std::optional<double> noise_sup;  // sup |xi + xi_e| over the run
};

// ---------------------------------------------------------------------------
// Metrics

namespace detail {

inline std::vector<double> message_transitions(const Signal& message, double t0, double t_end) {
  std::vector<double> out{t0};
  if (message.kind() != Signal::Kind::square_wave) return out;
  const double half = message.symbol_duration();
  double k = std::ceil((t0 - message.phase()) / half + 1e-12);
  for (double tau = message.phase() + k * half; tau <= t_end + 1e-9; tau += half)
    if (tau > t0 + 1e-12) out.push_back(tau);
  return out;
}

}  // namespace detail

/// Time after `start` at which |err| stays below `band` until `stop`, or
/// nullopt if it never does.
inline std::optional<double> settle_time(const std::vector<double>& t, std::span<const double> err, double band,
                                         double start, double stop) {
  std::optional<double> entered;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < start - 1e-12) continue;
    if (t[k] >= stop) break;
    if (std::abs(err[k]) < band) {
      if (!entered) entered = t[k];
    } else {
      entered.reset();
    }
  }
  if (!entered) return std::nullopt;
  return *entered - start;
}

struct SymbolTimes {
  double start = 0.0;
  double duration = 1.0;
  std::size_t count = 0;
};

inline SymbolTimes symbol_times(const Signal& square, double t0, double t_end) {
  const double d = square.symbol_duration();
  const double first = square.phase() + std::ceil((t0 - square.phase()) / d - 1e-12) * d;
  const auto count = static_cast<std::size_t>(std::floor((t_end - first) / d + 1e-9));
  return {first, d, count};
}

/// One bit per symbol: estimate at the symbol midpoint above the level
/// midpoint (the square wave's offset) decodes as 1.
inline std::vector<int> decode_bits(const TimeSeries& series, const std::string& channel, double level_midpoint,
                                    const SymbolTimes& symbols) {
  const auto& t = series.t();
  if (t.empty()) throw std::invalid_argument("decode_bits: empty series");
  const auto v = series.channel(channel);
  std::vector<int> bits;
  for (std::size_t k = 0; k < symbols.count; ++k) {
    const double lo = symbols.start + static_cast<double>(k) * symbols.duration;
    const double hi = lo + symbols.duration;
    if (lo < t.front() - 1e-9 || hi > t.back() + 1e-9)
      throw std::out_of_range("decode_bits: symbol window outside the series");
    const double mid = 0.5 * (lo + hi);
    const auto idx = static_cast<std::size_t>(std::llround((mid - t.front()) / series.step()));
    bits.push_back(v[std::min(idx, t.size() - 1)] > level_midpoint ? 1 : 0);
  }
  return bits;
}

inline std::vector<int> transmitted_bits(const Signal& square, const SymbolTimes& symbols) {
  std::vector<int> bits;
  for (std::size_t k = 0; k < symbols.count; ++k) {
    const double mid = symbols.start + (static_cast<double>(k) + 0.5) * symbols.duration;
    bits.push_back(square(mid) > square.offset() ? 1 : 0);
  }
  return bits;
}

/// Recovery of `estimate` against `truth`. For square-wave messages the RMSE
/// uses only the last half of each symbol and the BER skips
/// `discard_symbols` leading symbols.
inline RecoveryMetrics recovery_metrics(const TimeSeries& series, const Signal& message, double band,
                                        double post_transient, const std::string& estimate = "vartheta_hat",
                                        const std::string& truth = "vartheta", std::size_t discard_symbols = 1) {
  if (!series.has(estimate) || !series.has(truth))
    throw std::invalid_argument("recovery_metrics: series lacks '" + estimate + "' or '" + truth + "'");
  const auto& t = series.t();
  const auto est = series.channel(estimate);
  const auto tru = series.channel(truth);
  std::vector<double> err(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) err[k] = est[k] - tru[k];

  RecoveryMetrics m;
  const bool square = message.kind() == Signal::Kind::square_wave;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < post_transient) continue;
    if (square) {
      const double d = message.symbol_duration();
      const double u = (t[k] - message.phase()) / d;
      if (u - std::floor(u) < 0.5) continue;
    }
    acc += err[k] * err[k];
    ++count;
  }
  m.rmse_theta = count ? std::sqrt(acc / static_cast<double>(count)) : 0.0;

  const auto transitions = detail::message_transitions(message, t.front(), t.back());
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    // A transition on the final sample only closes the previous segment.
    if (i > 0 && transitions[i] >= t.back() - 1e-9) break;
    const double stop = i + 1 < transitions.size() ? transitions[i + 1] : t.back() + series.step();
    m.settle_times.push_back(settle_time(t, err, band, transitions[i], stop));
  }

  if (square) {
    const auto sym = symbol_times(message, t.front(), t.back());
    const auto got = decode_bits(series, estimate, message.offset(), sym);
    const auto want = transmitted_bits(message, sym);
    std::size_t wrong = 0, total = 0;
    for (std::size_t k = discard_symbols; k < got.size(); ++k, ++total) wrong += got[k] != want[k] ? 1 : 0;
    m.bits_compared = total;
    m.ber = total ? static_cast<double>(wrong) / static_cast<double>(total) : 0.0;
  }

  if (series.has("e")) {
    const auto e = series.channel("e");
    const double from = t.front() + 0.9 * (t.back() - t.front());
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] >= from) m.final_output_error = std::max(m.final_output_error, std::abs(e[k]));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scenario runner

namespace detail {

inline std::vector<std::string> indexed(const std::string& base, Eigen::Index count, bool bare_if_single) {
  if (count == 1 && bare_if_single) return {base};
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < count; ++i) out.push_back(base + std::to_string(i + 1));
  return out;
}

inline const RegressorPlant* regressor_plant(const MasterSystem& p) { return std::get_if<RegressorPlant>(&p); }

inline StateDependentPlant state_dependent(const MasterSystem& p) {
  if (const auto* r = std::get_if<RegressorPlant>(&p)) return as_state_dependent(*r);
  return std::get<StateDependentPlant>(p);
}

}  // namespace detail

inline void validate(const ScenarioConfig& cfg) {
  if (!cfg.observer) throw std::invalid_argument("scenario: no observer configured");
  std::visit([](const auto& p) { p.validate(); }, cfg.plant);
  const Eigen::Index n = std::visit([](const auto& p) { return p.n(); }, cfg.plant);
  const Eigen::Index m = std::visit([](const auto& p) { return p.m(); }, cfg.plant);
  if (cfg.x0.size() != n) throw std::invalid_argument("scenario: x0 must have length n");
  if (cfg.x_hat0.size() != n) throw std::invalid_argument("scenario: x_hat0 must have length n");
  if (cfg.theta_hat0.size() != m) throw std::invalid_argument("scenario: theta_hat0 must have length m");
  if (!(cfg.step > 0.0)) throw std::invalid_argument("scenario: step must be positive");
  if (!(cfg.t_end > cfg.t0)) throw std::invalid_argument("scenario: t_end must exceed t0");
  if (!(cfg.guard > 0.0)) throw std::invalid_argument("scenario: guard must be positive");
  if (cfg.channel.xi_max < 0.0) throw std::invalid_argument("scenario: xi_max must be >= 0");
  const bool sd_plant = std::holds_alternative<StateDependentPlant>(cfg.plant);
  if (sd_plant && !std::holds_alternative<SdObserver>(*cfg.observer))
    throw std::invalid_argument("scenario: AE and HOT schemes require a constant-A master system");
  std::visit(
      [&](const auto& o) {
        if (o.n() != n || o.m() != m) throw std::invalid_argument("scenario: observer dimensions differ from the plant");
      },
      *cfg.observer);
}

/// Integrates master, observer, filters, adaptation and requested
/// diagnostics as one system and records every channel at every step.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  const MasterSystem& plant = cfg.plant;
  const Observer& observer = *cfg.observer;
  const Vector c = std::visit([](const auto& p) { return p.c; }, plant);
  const Vector b = std::visit([](const auto& p) { return p.b; }, plant);
  const Eigen::Index n = c.size();
  const Eigen::Index m = std::visit([](const auto& p) { return p.m(); }, plant);
  auto theta_of = [&plant](double t) { return std::visit([t](const auto& p) { return p.theta(t); }, plant); };

  // Error-dynamics matrix seen by the diagnostics: F for constant-A schemes,
  // G(y_r) for the state-dependent one.
  const bool sd = std::holds_alternative<SdObserver>(observer);
  const SdObserver* sd_obs = std::get_if<SdObserver>(&observer);
  const HotObserver* hot_obs = std::get_if<HotObserver>(&observer);
  const Matrix F_const = sd ? Matrix() : std::visit([](const auto& o) -> Matrix {
    if constexpr (std::is_same_v<std::decay_t<decltype(o)>, SdObserver>) return Matrix();
    else return o.F();
  }, observer);
  const Vector k_const = sd ? Vector() : std::visit([](const auto& o) -> Vector {
    if constexpr (std::is_same_v<std::decay_t<decltype(o)>, SdObserver>) return Vector();
    else return o.k();
  }, observer);
  const StateDependentPlant sd_plant = detail::state_dependent(plant);
  auto error_matrix = [&](double y_r) -> Matrix { return sd ? sd_obs->G(y_r) : F_const; };

  StateLayout layout;
  const Eigen::Index xs = layout.add(n);
  const Eigen::Index obs_size = std::visit([](const auto& o) { return o.state_size(); }, observer);
  const Eigen::Index os = layout.add(obs_size);
  const bool dist = cfg.diagnostics.disturbance;
  const bool aux = cfg.diagnostics.auxiliary;
  const Eigen::Index xi_s = dist ? layout.add(n) : -1;
  const Eigen::Index zeta_s = aux ? layout.add(n) : -1;
  const bool hot_ref = aux && hot_obs != nullptr;
  const Eigen::Index snu_s = hot_ref ? layout.add(n) : -1;
  const Eigen::Index zh_s = hot_ref ? layout.add(1) : -1;

  Vector z0 = Vector::Zero(layout.size());
  z0.segment(xs, n) = cfg.x0;
  z0.segment(os, obs_size) =
      std::visit([&](const auto& o) { return o.initial_state(cfg.x_hat0, cfg.theta_hat0); }, observer);
  if (aux) {
    const Vector eps0 = cfg.x0 - cfg.x_hat0;
    Vector delta0 = eps0;
    if (sd_obs) {
      const auto zo = z0.segment(os, obs_size);
      delta0 += sd_obs->eta(zo) - sd_obs->Omega(zo) * (theta_of(cfg.t0) - cfg.theta_hat0);
    }
    z0.segment(zeta_s, n) = delta0;
  }

  const Channel channel = cfg.channel;
  const double t0 = cfg.t0;
  const double h = cfg.step;

  HeldOdeSystem sys;
  sys.dimension = layout.size();
  sys.hold = [channel](std::size_t k, double) { return Vector::Constant(1, channel.noise(k)); };
  sys.derivative = [&](double t, const Vector& z, const Vector& held) {
    const double xi = held[0];
    const auto x = z.segment(xs, n);
    const double y = c.dot(x);
    const double y_r = y + xi;
    Vector dz(z.size());
    dz.segment(xs, n) = plant_derivative(plant, x, t);
    const auto zo = z.segment(os, obs_size);
    dz.segment(os, obs_size) = std::visit([&](const auto& o) { return o.derivative(t, zo, y_r); }, observer);
    const Vector theta = theta_of(t);
    if (dist) {
      const Vector Xi = z.segment(xi_s, n);
      if (sd)
        dz.segment(xi_s, n) =
            disturbance_propagator_derivative(Xi, sd_plant, sd_obs->k_of_y(), x, y, y_r, theta, t);
      else
        dz.segment(xi_s, n) =
            disturbance_propagator_derivative(Xi, F_const, *detail::regressor_plant(plant), y, y_r, theta, k_const, t);
    }
    if (aux) dz.segment(zeta_s, n) = error_matrix(y_r) * z.segment(zeta_s, n);
    if (hot_ref) {
      const auto s = hot_obs->evaluate(t, zo, y_r);
      const Vector snu = z.segment(snu_s, n);
      const Matrix& F = hot_obs->F();
      const double lambda = hot_obs->options().lambda;
      dz.segment(snu_s, n) = F * snu + b * s.nu;
      const double w_nu = c.dot(F * snu + b * s.nu) + lambda * c.dot(snu);
      dz[zh_s] = -lambda * z[zh_s] + s.varpi.dot(theta) - w_nu;
    }
    return dz;
  };

  // Channel set.
  Recorder rec;
  auto add = [&rec](const std::vector<std::string>& names) {
    rec.names.insert(rec.names.end(), names.begin(), names.end());
  };
  add({"y", "y_r", "xi", "e", "e_hat"});
  add(detail::indexed("theta", m, true));
  add(detail::indexed("theta_hat", m, true));
  add(detail::indexed("phi", m, true));
  add(detail::indexed("omega", m, true));
  add(detail::indexed("eps", n, false));
  add({"V"});
  const bool message = cfg.message.has_value() && m == 1;
  if (message) add({"vartheta", "vartheta_hat"});
  if (hot_obs) add({"nu", "g"});
  if (dist) add({"xi_e", "error_model_residual_raw"});
  if (aux) {
    add(detail::indexed("zeta", n, false));
    add({"error_model_residual"});
    if (sd) {
      add(detail::indexed("delta", n, false));
      add({"delta_identity"});
    }
    if (hot_ref) add({"w_nu", "z_ref", "hot_model_residual"});
  }

  rec.fill = [&](const Sample& smp, std::span<double> out) {
    const double t = smp.t;
    const double xi = smp.held[0];
    const auto x = smp.x.segment(xs, n);
    const double y = c.dot(x);
    const double y_r = y + xi;
    const auto zo = smp.x.segment(os, obs_size);
    const Vector theta = theta_of(t);
    double e = 0.0, e_hat = 0.0;
    Vector theta_hat, omega, x_hat;
    std::visit(
        [&](const auto& o) {
          const auto s = o.evaluate(t, zo, y_r);
          e = s.e;
          theta_hat = s.theta_hat;
          x_hat = o.x_hat(zo);
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, HotObserver>) {
            e_hat = s.e;
            omega = s.varpi;
          } else {
            e_hat = s.e_aug;
            omega = s.omega;
          }
        },
        observer);
    const Vector theta_tilde = theta - theta_hat;
    const Vector phi = std::visit([&](const auto& p) { return p.phi(t, y); }, plant);
    std::size_t i = 0;
    auto put = [&](double v) { out[i++] = v; };
    put(y);
    put(y_r);
    put(xi);
    put(e);
    put(e_hat);
    for (Eigen::Index j = 0; j < m; ++j) put(theta[j]);
    for (Eigen::Index j = 0; j < m; ++j) put(theta_hat[j]);
    for (Eigen::Index j = 0; j < m; ++j) put(phi[j]);
    for (Eigen::Index j = 0; j < m; ++j) put(omega[j]);
    const Vector eps = x - x_hat;
    for (Eigen::Index j = 0; j < n; ++j) put(eps[j]);
    double gamma = 1.0;
    if (const auto* ae = std::get_if<AeObserver>(&observer)) gamma = ae->gamma();
    if (sd_obs) gamma = sd_obs->gamma();
    put(theta_tilde.squaredNorm() / (2.0 * gamma));
    if (message) {
      put(theta[0]);
      put(theta_hat[0]);
    }
    if (hot_obs) {
      const auto s = hot_obs->evaluate(t, zo, y_r);
      put(s.nu);
      put(s.g);
    }
    const double xi_e = dist ? c.dot(smp.x.segment(xi_s, n)) : 0.0;
    const double model_raw = e_hat - omega.dot(theta_tilde) - xi_e - xi;
    if (dist) {
      put(xi_e);
      put(model_raw);
    }
    if (aux) {
      const Vector zeta = smp.x.segment(zeta_s, n);
      for (Eigen::Index j = 0; j < n; ++j) put(zeta[j]);
      put(hot_obs ? 0.0 : model_raw - c.dot(zeta));
      if (sd) {
        Vector delta = eps + sd_obs->eta(zo) - sd_obs->Omega(zo) * theta_tilde;
        if (dist) delta -= smp.x.segment(xi_s, n);
        for (Eigen::Index j = 0; j < n; ++j) put(delta[j]);
        put(e_hat - omega.dot(theta_tilde) - c.dot(delta) - xi_e - xi);
      }
      if (hot_ref) {
        const auto s = hot_obs->evaluate(t, zo, y_r);
        const Vector snu = smp.x.segment(snu_s, n);
        const Matrix& F = hot_obs->F();
        const double w_nu = c.dot(F * snu + b * s.nu) + hot_obs->options().lambda * c.dot(snu);
        put(w_nu);
        put(smp.x[zh_s]);
        put(e - c.dot(zeta) - smp.x[zh_s]);
      }
    }
  };

  ScenarioResult result;
  result.series = simulate(sys, z0, t0, cfg.t_end, h, rec, SimulationOptions{cfg.guard});

  const auto& ts = result.series;
  if (message) {
    const double amp = cfg.message->kind() == Signal::Kind::constant ? std::abs(cfg.message->offset())
                                                                      : std::abs(cfg.message->amplitude());
    const double band = cfg.metrics.band_fraction * (amp > 0.0 ? amp : 1.0);
    result.metrics = recovery_metrics(ts, *cfg.message, band, cfg.metrics.post_transient, "vartheta_hat", "vartheta",
                                      cfg.metrics.discard_symbols);
  } else if (m == 1) {
    result.metrics = recovery_metrics(ts, Signal::constant(theta_of(t0)[0]), cfg.metrics.band_fraction,
                                      cfg.metrics.post_transient, "theta_hat", "theta", 0);
  } else {
    const auto e = ts.channel("e");
    const double from = ts.t().front() + 0.9 * (ts.t().back() - ts.t().front());
    for (std::size_t k = 0; k < ts.size(); ++k)
      if (ts.t()[k] >= from) result.metrics.final_output_error = std::max(result.metrics.final_output_error, std::abs(e[k]));
  }

  if (cfg.t_end - cfg.t0 >= cfg.metrics.pe_window)
    result.pe = pe_metric(ts, detail::indexed("phi", m, true), cfg.metrics.pe_window);

  if (dist) {
    const auto xi = ts.channel("xi");
    const auto xe = ts.channel("xi_e");
    double sup = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) sup = std::max(sup, std::abs(xi[k] + xe[k]));
    result.noise_sup = sup;
    std::optional<double> theta_star;
    double gamma = 1.0;
    if (const auto* ae = std::get_if<AeObserver>(&observer)) {
      theta_star = ae->theta_star();
      gamma = ae->gamma();
    } else if (sd_obs) {
      theta_star = sd_obs->theta_star();
      gamma = sd_obs->gamma();
    }
    if (theta_star) result.residual = residual_bound(theta_of(cfg.t_end), *theta_star, gamma, sup);
  }
  return result;
}

}  // namespace adapt_sync
