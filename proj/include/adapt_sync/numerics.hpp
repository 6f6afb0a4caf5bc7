#pragma once

// Fixed-step RK4 integration and trajectory recording.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adapt_sync {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an integration produces a non-finite value or trips the
/// magnitude guard. Carries the time and the offending state index.
class IntegrationFault : public std::runtime_error {
 public:
  IntegrationFault(const std::string& what, double time, Eigen::Index channel)
      : std::runtime_error(what), time_(time), channel_(channel) {}

  double time() const noexcept { return time_; }
  Eigen::Index channel() const noexcept { return channel_; }

 private:
  double time_;
  Eigen::Index channel_;
};

struct OdeSystem {
  Eigen::Index dimension = 0;
  std::function<Vector(double t, const Vector& x)> derivative;
};

/// An ODE whose right-hand side also sees a value sampled once at the start
/// of each step and held across the RK4 stages (e.g. channel noise).
struct HeldOdeSystem {
  Eigen::Index dimension = 0;
  std::function<Vector(std::size_t step, double t)> hold;
  std::function<Vector(double t, const Vector& x, const Vector& held)> derivative;
};

namespace detail {

inline void check_finite(const Vector& v, double t, const char* where) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << where << ": non-finite value in channel " << i << " at t=" << t;
      throw IntegrationFault(os.str(), t, i);
    }
  }
}

template <class F>
Vector rk4(const F& f, double t, const Vector& x, double h) {
  const Vector k1 = f(t, x);
  check_finite(k1, t, "rk4_step");
  const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  check_finite(k2, t + 0.5 * h, "rk4_step");
  const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  check_finite(k3, t + 0.5 * h, "rk4_step");
  const Vector k4 = f(t + h, x + h * k3);
  check_finite(k4, t + h, "rk4_step");
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

inline Vector rk4_step(const OdeSystem& sys, double t, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_step: step must be positive");
  if (x.size() != sys.dimension) throw std::invalid_argument("rk4_step: state dimension mismatch");
  return detail::rk4(sys.derivative, t, x, h);
}

/// Equally spaced samples of named channels.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<std::string> names, double step) : names_(std::move(names)), step_(step) {
    columns_.resize(names_.size());
  }

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& t() const noexcept { return t_; }
  double step() const noexcept { return step_; }
  std::size_t size() const noexcept { return t_.size(); }
  bool empty() const noexcept { return t_.empty(); }

  bool has(const std::string& name) const {
    for (const auto& n : names_)
      if (n == name) return true;
    return false;
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw std::out_of_range("TimeSeries: no channel named '" + name + "'");
  }

  std::span<const double> channel(const std::string& name) const { return columns_[index_of(name)]; }
  std::span<const double> column(std::size_t i) const { return columns_.at(i); }

  void append(double t, std::span<const double> row) {
    if (row.size() != names_.size()) throw std::invalid_argument("TimeSeries::append: row width mismatch");
    if (!t_.empty() && !(t > t_.back())) throw std::invalid_argument("TimeSeries::append: time must increase");
    t_.push_back(t);
    for (std::size_t i = 0; i < row.size(); ++i) columns_[i].push_back(row[i]);
  }

  void add_channel(std::string name, std::vector<double> values) {
    if (values.size() != t_.size()) throw std::invalid_argument("TimeSeries::add_channel: length mismatch");
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
  }

  /// Copy restricted to `keep`, in that order.
  TimeSeries select(const std::vector<std::string>& keep) const {
    TimeSeries out(keep, step_);
    out.t_ = t_;
    for (std::size_t i = 0; i < keep.size(); ++i) out.columns_[i] = columns_[index_of(keep[i])];
    return out;
  }

  void reserve(std::size_t n) {
    t_.reserve(n);
    for (auto& c : columns_) c.reserve(n);
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> t_;
  std::vector<std::vector<double>> columns_;
  double step_ = 0.0;
};

/// Writes `t` followed by every channel, 17 significant digits.
inline void write_csv(std::ostream& os, const TimeSeries& ts) {
  os << "t";
  for (const auto& n : ts.names()) os << ',' << n;
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    os << ts.t()[k];
    for (std::size_t c = 0; c < ts.names().size(); ++c) os << ',' << ts.column(c)[k];
    os << '\n';
  }
}

inline TimeSeries read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header.front() != "t") throw std::runtime_error("read_csv: first column must be 't'");
  std::vector<std::string> names(header.begin() + 1, header.end());

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("read_csv: bad number '" + cell + "' on line " + std::to_string(line_no));
      }
    }
    if (row.size() != header.size())
      throw std::runtime_error("read_csv: wrong column count on line " + std::to_string(line_no));
    times.push_back(row.front());
    rows.emplace_back(row.begin() + 1, row.end());
  }
  const double step = times.size() > 1 ? times[1] - times[0] : 0.0;
  TimeSeries ts(names, step);
  ts.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) ts.append(times[k], rows[k]);
  return ts;
}

inline void write_csv_file(const std::string& path, const TimeSeries& ts) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(os, ts);
}

inline TimeSeries read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(is);
}

/// What a recorder sees at each sample.
struct Sample {
  double t;
  const Vector& x;
  const Vector& held;
};

/// Named channels extracted from a sample in one call.
struct Recorder {
  std::vector<std::string> names;
  std::function<void(const Sample&, std::span<double>)> fill;
};

/// Convenience recorder: one channel per state component, named `<prefix><i>`.
inline Recorder state_recorder(Eigen::Index dimension, const std::string& prefix = "x") {
  Recorder r;
  for (Eigen::Index i = 0; i < dimension; ++i) r.names.push_back(prefix + std::to_string(i + 1));
  r.fill = [](const Sample& s, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.x[static_cast<Eigen::Index>(i)];
  };
  return r;
}

struct SimulationOptions {
  double guard = 1e6;  // per-component magnitude limit
};

inline std::size_t step_count(double t0, double t_end, double h) {
  const double n = (t_end - t0) / h;
  return static_cast<std::size_t>(std::llround(n));
}

/// Integrates from t0 to t_end with fixed step h, recording at t0 and after
/// every step. Sample k is at exactly t0 + k*h.
inline TimeSeries simulate(const HeldOdeSystem& sys, const Vector& x0, double t0, double t_end, double h,
                           const Recorder& record, const SimulationOptions& options = {}) {
  if (!(h > 0.0)) throw std::invalid_argument("simulate: step must be positive");
  if (!(t_end > t0)) throw std::invalid_argument("simulate: t_end must exceed t0");
  if (x0.size() != sys.dimension) throw std::invalid_argument("simulate: initial state dimension mismatch");

  const std::size_t steps = step_count(t0, t_end, h);
  TimeSeries ts(record.names, h);
  ts.reserve(steps + 1);
  std::vector<double> row(record.names.size());

  auto guard = [&](const Vector& x, double t) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i]) || std::abs(x[i]) > options.guard) {
        std::ostringstream os;
        os << "simulate: state " << i << " left the guard |x| <= " << options.guard << " at t=" << t;
        throw IntegrationFault(os.str(), t, i);
      }
    }
  };

  Vector x = x0;
  guard(x, t0);
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const Vector held = sys.hold ? sys.hold(k, t) : Vector();
    if (record.fill) record.fill(Sample{t, x, held}, row);
    ts.append(t, row);
    if (k == steps) break;
    auto f = [&](double tau, const Vector& z) { return sys.derivative(tau, z, held); };
    x = detail::rk4(f, t, x, h);
    guard(x, t + h);
  }
  return ts;
}

inline TimeSeries simulate(const OdeSystem& sys, const Vector& x0, double t0, double t_end, double h,
                           const Recorder& record, const SimulationOptions& options = {}) {
  HeldOdeSystem held{sys.dimension, {}, [f = sys.derivative](double t, const Vector& x, const Vector&) {
                       return f(t, x);
                     }};
  return simulate(held, x0, t0, t_end, h, record, options);
}

/// Final state only; same stepping as simulate().
inline Vector integrate(const OdeSystem& sys, const Vector& x0, double t0, double t_end, double h) {
  const std::size_t steps = step_count(t0, t_end, h);
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) x = rk4_step(sys, t0 + static_cast<double>(k) * h, x, h);
  return x;
}

}  // namespace adapt_sync
