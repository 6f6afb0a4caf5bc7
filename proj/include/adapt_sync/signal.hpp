#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace adapt_sync {

/// Bounded scalar time function used for messages and exogenous excitation.
///
/// A square wave alternates between `offset + amplitude` (for the first
/// `duty` fraction of each period) and `offset - amplitude`; with duty 0.5
/// each half period is one transmitted symbol. `phase` shifts the waveform
/// right in time for every kind.
class Signal {
 public:
  enum class Kind { constant, square_wave, sine, piecewise_linear };

  static Signal constant(double value) {
    Signal s;
    s.kind_ = Kind::constant;
    s.offset_ = value;
    return s;
  }

  static Signal square_wave(double amplitude, double period, double offset = 0.0, double duty = 0.5,
                            double phase = 0.0) {
    if (!(period > 0.0)) throw std::invalid_argument("square wave period must be positive");
    if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("square wave duty must lie in (0, 1)");
    Signal s;
    s.kind_ = Kind::square_wave;
    s.amplitude_ = amplitude;
    s.period_ = period;
    s.offset_ = offset;
    s.duty_ = duty;
    s.phase_ = phase;
    return s;
  }

  static Signal sine(double amplitude, double period, double offset = 0.0, double phase = 0.0) {
    if (!(period > 0.0)) throw std::invalid_argument("sine period must be positive");
    Signal s;
    s.kind_ = Kind::sine;
    s.amplitude_ = amplitude;
    s.period_ = period;
    s.offset_ = offset;
    s.phase_ = phase;
    return s;
  }

  /// Linear interpolation between knots, held flat outside them.
  static Signal piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw std::invalid_argument("piecewise-linear signal needs at least one knot");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i].first > knots[i - 1].first))
        throw std::invalid_argument("piecewise-linear knot times must increase");
    Signal s;
    s.kind_ = Kind::piecewise_linear;
    s.knots_ = std::move(knots);
    return s;
  }

  double operator()(double t) const {
    switch (kind_) {
      case Kind::constant:
        return offset_;
      case Kind::square_wave: {
        const double u = (t - phase_) / period_;
        const double frac = u - std::floor(u);
        return frac < duty_ ? offset_ + amplitude_ : offset_ - amplitude_;
      }
      case Kind::sine:
        return offset_ + amplitude_ * std::sin(2.0 * std::numbers::pi * (t - phase_) / period_);
      case Kind::piecewise_linear: {
        if (t <= knots_.front().first) return knots_.front().second;
        if (t >= knots_.back().first) return knots_.back().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const auto& k) { return v < k.first; });
        const auto& [t1, v1] = *it;
        const auto& [t0, v0] = *(it - 1);
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
      }
    }
    return 0.0;
  }

  /// Upper bound on |value| over all time.
  double sup_norm() const {
    switch (kind_) {
      case Kind::constant:
        return std::abs(offset_);
      case Kind::square_wave:
      case Kind::sine:
        return std::abs(offset_) + std::abs(amplitude_);
      case Kind::piecewise_linear: {
        double m = 0.0;
        for (const auto& k : knots_) m = std::max(m, std::abs(k.second));
        return m;
      }
    }
    return 0.0;
  }

  Kind kind() const noexcept { return kind_; }
  double amplitude() const noexcept { return amplitude_; }
  double period() const noexcept { return period_; }
  double offset() const noexcept { return offset_; }
  double duty() const noexcept { return duty_; }
  double phase() const noexcept { return phase_; }
  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

  /// Duration of one symbol of a square wave (half its period).
  double symbol_duration() const {
    if (kind_ != Kind::square_wave) throw std::logic_error("symbol_duration: not a square wave");
    return 0.5 * period_;
  }

 private:
  Kind kind_ = Kind::constant;
  double amplitude_ = 0.0;
  double period_ = 1.0;
  double offset_ = 0.0;
  double duty_ = 0.5;
  double phase_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace adapt_sync
