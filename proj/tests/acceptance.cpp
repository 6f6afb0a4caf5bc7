// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "adapt_sync/transmission.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace adapt_sync;

namespace {

constexpr double kSigma = 10.0;
constexpr double kBeta = 8.0 / 3.0;
constexpr double kR = 97.0;
constexpr double kGamma = 0.45;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double max_abs_from(const TimeSeries& ts, const std::string& ch, double from) {
  const auto v = ts.channel(ch);
  double m = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (ts.t()[k] >= from) m = std::max(m, std::abs(v[k]));
  return m;
}

ScenarioConfig lorenz_scenario(const Signal& message, double t_end, Channel channel = {},
                               std::optional<double> theta_star = std::nullopt) {
  ScenarioConfig cfg;
  cfg.name = "lorenz";
  cfg.plant = lorenz_message_plant(kSigma, kBeta, kR, message);
  cfg.message = message;
  cfg.channel = channel;
  cfg.observer = make_lorenz_observer(kSigma, kBeta, kR, kGamma, theta_star);
  cfg.x0 = Vector::Ones(3);
  cfg.x_hat0 = Vector::Zero(3);
  cfg.theta_hat0 = Vector::Zero(1);
  cfg.t_end = t_end;
  cfg.step = 1e-3;
  return cfg;
}

RegressorPlant regressor(const Matrix& A, const Vector& b, const Vector& c, std::function<double(double)> phi,
                         double theta) {
  const Eigen::Index n = A.rows();
  return RegressorPlant{A, b, c, [n](double, double) { return Vector::Zero(n).eval(); },
                        [phi = std::move(phi)](double t, double) { return Vector::Constant(1, phi(t)); },
                        [theta](double) { return Vector::Constant(1, theta); }};
}

// Criterion 1 and 3 share this run.
struct ReferenceRun {
  ScenarioResult result;
  double seconds = 0.0;
};

ReferenceRun reference_run() {
  auto cfg = lorenz_scenario(Signal::constant(0.1), 100.0);
  cfg.diagnostics.auxiliary = true;
  const auto start = std::chrono::steady_clock::now();
  ReferenceRun run{run_scenario(cfg), 0.0};
  run.seconds = seconds_since(start);
  return run;
}

Verdict criterion1(const ReferenceRun& run) {
  Verdict v;
  const auto& ts = run.result.series;
  const double e_max = max_abs_from(ts, "e", 90.0);
  const auto th = ts.channel("vartheta");
  const auto thh = ts.channel("vartheta_hat");
  double th_err = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (ts.t()[k] >= 90.0) th_err = std::max(th_err, std::abs(thh[k] - th[k]));
  const auto pe = pe_metric(ts, {"phi"}, 5.0);
  v.detail << "max|e|=" << e_max << " max|vartheta_hat-vartheta|=" << th_err << " pe_alpha=" << pe.alpha_hat
           << " runtime=" << run.seconds << "s";
  v.require(e_max <= 1e-3, "max|e| <= 1e-3");
  v.require(th_err <= 1e-2, "parameter error <= 1e-2");
  v.require(pe.alpha_hat > 0.0, "alpha_hat > 0");
  v.require(run.seconds <= 10.0, "runtime <= 10 s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  const Signal sq = Signal::square_wave(0.1, 40.0);  // symbol duration 20
  const auto start = std::chrono::steady_clock::now();
  const auto res = run_scenario(lorenz_scenario(sq, 200.0));
  const double secs = seconds_since(start);
  const auto& m = res.metrics;
  v.detail << "ber=" << (m.ber ? *m.ber : -1.0) << " bits=" << m.bits_compared << " runtime=" << secs << "s";
  v.require(m.ber.has_value() && *m.ber == 0.0, "BER = 0");
  v.require(m.bits_compared == 9, "9 bits compared");
  v.require(secs <= 30.0, "runtime <= 30 s");
  return v;
}

Verdict criterion3(const ReferenceRun& run) {
  Verdict v;
  const auto& ts = run.result.series;
  double dev = 0.0;
  for (int i = 1; i <= 3; ++i) {
    const auto z = ts.channel("zeta" + std::to_string(i));
    const auto d = ts.channel("delta" + std::to_string(i));
    for (std::size_t k = 0; k < ts.size(); ++k) dev = std::max(dev, std::abs(z[k] - d[k]));
  }
  const double ident = max_abs_from(ts, "delta_identity", 0.0);
  v.detail << "max|zeta-delta|=" << dev << " max|e_hat-omega^T theta_tilde-c^T delta|=" << ident;
  v.require(dev <= 1e-6, "zeta matches delta within 1e-6");
  v.require(ident <= 1e-6, "identity within 1e-6");
  return v;
}

Verdict criterion4() {
  Verdict v;
  Matrix A(2, 2);
  A << 0.0, 1.0, -2.0, -3.0;
  Vector b(2), c(2), k(2);
  b << 0.0, 1.0;
  c << 1.0, 0.0;
  k << 1.0, 0.0;
  const auto plant = regressor(A, b, c, [](double t) { return 3.0 * std::sin(t); }, 2.0);
  ScenarioConfig cfg;
  cfg.plant = plant;
  cfg.observer = AeObserver(plant, k, 5.0);
  cfg.x0 = Vector::Zero(2);
  cfg.x_hat0 = Vector::Zero(2);
  cfg.theta_hat0 = Vector::Zero(1);
  cfg.t_end = 100.0;
  const auto res = run_scenario(cfg);
  const auto& ts = res.series;
  const auto eh = ts.channel("e_hat");
  const auto om = ts.channel("omega");
  const auto th = ts.channel("theta");
  const auto thh = ts.channel("theta_hat");
  const auto V = ts.channel("V");
  double model = 0.0, rise = -1e300;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    model = std::max(model, std::abs(eh[i] - om[i] * (th[i] - thh[i])));
    if (i > 0) rise = std::max(rise, (V[i] - V[i - 1]) / ts.step());
  }
  const double e_max = max_abs_from(ts, "e", 90.0);
  v.detail << "max|e_hat-omega^T theta_tilde|=" << model << " max dV/dt=" << rise << " max|e|=" << e_max;
  v.require(model <= 1e-6, "equivalent model within 1e-6");
  v.require(rise <= 1e-6, "V nonincreasing within 1e-6 per unit time");
  v.require(e_max <= 1e-3, "max|e| <= 1e-3");
  return v;
}

Verdict criterion5() {
  Verdict v;
  const double vartheta = 0.1;
  auto cfg = lorenz_scenario(Signal::constant(vartheta), 200.0, Channel{0.5, NoiseDistribution::uniform, 42},
                             1.1 * vartheta);
  cfg.diagnostics = {true, true};
  const auto res = run_scenario(cfg);
  const auto& ts = res.series;
  const auto th = ts.channel("vartheta");
  const auto thh = ts.channel("vartheta_hat");
  double worst = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (ts.t()[k] >= 100.0) worst = std::max(worst, (th[k] - thh[k]) * (th[k] - thh[k]));
  const double bound = res.residual ? res.residual->bound : -1.0;
  const double ident = max_abs_from(ts, "error_model_residual", 0.0);
  v.detail << "max|theta_tilde|^2(t>=100)=" << worst << " bound=" << bound
           << " noise_sup=" << (res.noise_sup ? *res.noise_sup : -1.0) << " max identity residual=" << ident;
  v.require(res.residual.has_value() && worst <= bound, "|theta_tilde|^2 below the residual bound");
  v.require(ident <= 1e-5, "augmented-error identity within 1e-5");
  return v;
}

Verdict criterion6() {
  Verdict v;
  const double ts = 0.3;
  const double a = dead_zone_alpha(Vector::Constant(1, 0.5 * ts), ts);
  const double b = dead_zone_alpha(Vector::Constant(1, 1.5 * ts), ts);
  const double c = dead_zone_alpha(Vector::Constant(1, 3.0 * ts), ts);
  v.require(a == 0.0 && std::abs(b - 0.5) <= 1e-15 && c == 1.0, "hand values 0, 0.5, 1");
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 4.0 * ts);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng);
    const double fx = dead_zone_alpha(Vector::Constant(1, x), ts);
    const double fy = dead_zone_alpha(Vector::Constant(1, y), ts);
    // Monotone and Lipschitz (hence continuous) with constant 1/theta*.
    if ((x <= y) != (fx <= fy) && fx != fy) ++bad;
    if (std::abs(fx - fy) > std::abs(x - y) / ts + 1e-12) ++bad;
    if (fx < 0.0 || fx > 1.0) ++bad;
  }
  v.detail << "alpha(0.5,1.5,3)=(" << a << "," << b << "," << c << ") property violations=" << bad;
  v.require(bad == 0, "monotone and continuous over 1e4 points");
  return v;
}

Verdict criterion7() {
  Verdict v;
  auto chain = [](int r) {
    return realize(Polynomial({1.0}), Polynomial::from_roots(std::vector<double>(static_cast<std::size_t>(r), -1.0)));
  };
  auto run_hot = [&](int r, double mu, double& e_max, double& grad_dev) {
    const auto rz = chain(r);
    const auto plant = regressor(rz.F, rz.b, rz.c, [](double t) { return 10.0 * std::sin(0.5 * t); }, 2.0);
    ScenarioConfig cfg;
    cfg.plant = plant;
    cfg.observer = HotObserver(plant, Vector::Zero(r), HotOptions{1.0, mu});
    cfg.x0 = Vector::Zero(r);
    cfg.x0[0] = 0.5;
    cfg.x_hat0 = Vector::Zero(r);
    cfg.theta_hat0 = Vector::Zero(1);
    cfg.t_end = 100.0;
    const auto res = run_scenario(cfg);
    e_max = max_abs_from(res.series, "e", 90.0);
    // theta_hat_dot against varpi e by central differences.
    const auto& ts = res.series;
    const auto thh = ts.channel("theta_hat");
    const auto om = ts.channel("omega");
    const auto e = ts.channel("e");
    grad_dev = 0.0;
    for (std::size_t k = 1; k + 1 < ts.size(); ++k)
      grad_dev = std::max(grad_dev, std::abs((thh[k + 1] - thh[k - 1]) / (2 * ts.step()) - om[k] * e[k]));
  };
  double e2 = 0, g2 = 0, e3 = 0, g3 = 0;
  run_hot(2, 1.0, e2, g2);
  const auto probe = HotObserver(regressor(chain(3).F, chain(3).b, chain(3).c, [](double t) { return std::sin(t); }, 2.0),
                                 Vector::Zero(3), HotOptions{1.0, 1e3});
  const double bound = probe.mu_bound();
  run_hot(3, 2.0 * bound, e3, g3);
  bool rejected = false;
  try {
    HotObserver(regressor(chain(3).F, chain(3).b, chain(3).c, [](double t) { return std::sin(t); }, 2.0),
                Vector::Zero(3), HotOptions{1.0, 0.9 * bound});
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  Matrix Gamma = Matrix::Constant(1, 1, -1.0);
  const double hand = hot_mu_bound(Gamma, Vector::Ones(1), Vector::Ones(1), 1.0);
  v.detail << "r=2: max|e|=" << e2 << " max|theta_hat_dot-varpi e|=" << g2 << "; r=3: mu_bound=" << bound
           << " max|e|=" << e3 << "; strict rejects 0.9x=" << (rejected ? "yes" : "no") << "; scalar bound=" << hand;
  v.require(g2 <= 1e-4, "r=2 adaptation is varpi e");
  v.require(e2 <= 1e-3, "r=2 max|e| <= 1e-3");
  v.require(e3 <= 1e-3, "r=3 max|e| <= 1e-3");
  v.require(rejected, "strict mode rejects 0.9x bound");
  v.require(std::abs(hand - 3.0) <= 1e-12, "scalar bound = 3");
  return v;
}

// Largest deviation of finite-difference dV/dt from the closed form over 100
// random starts in [-1,1]^3.
double lorenz_dvdt_deviation(double h, bool five_point) {
  const auto inj = lorenz_gain_and_G(kSigma, kBeta);
  OdeSystem sys{3, [&](double, const Vector& x) { return (inj.G_of_y(x[0]) * x).eval(); }};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector x0(3);
    x0 << u(rng), u(rng), u(rng);
    const auto ts = simulate(sys, x0, 0.0, 2.0, h, state_recorder(3));
    const auto x1 = ts.channel("x1");
    const auto x2 = ts.channel("x2");
    const auto x3 = ts.channel("x3");
    auto V = [&](std::size_t k) { return 0.5 * (x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k]); };
    for (std::size_t k = 2; k + 2 < ts.size(); ++k) {
      const double fd = five_point ? (-V(k + 2) + 8 * V(k + 1) - 8 * V(k - 1) + V(k - 2)) / (12 * h)
                                   : (V(k + 1) - V(k - 1)) / (2 * h);
      const double exact = -kSigma * x1[k] * x1[k] - x2[k] * x2[k] - kBeta * x3[k] * x3[k];
      worst = std::max(worst, std::abs(fd - exact));
    }
  }
  return worst;
}

Verdict criterion8() {
  Verdict v;
  // central difference carries an h^2 V'''/6 term near 1.4e-3 at this scale,
  // so the 1e-4 tolerance goes on the five-point stencil and the central one
  // is checked for its h^2 scaling
  const double five = lorenz_dvdt_deviation(1e-3, true);
  const double c1 = lorenz_dvdt_deviation(1e-3, false);
  const double c2 = lorenz_dvdt_deviation(2e-3, false);
  const auto inj = lorenz_gain_and_G(kSigma, kBeta);
  Matrix D = Matrix::Zero(3, 3);
  D.diagonal() << -2 * kSigma, -2.0, -2 * kBeta;
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> uy(-1e3, 1e3);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const Matrix G = inj.G_of_y(uy(rng));
    if (G + G.transpose() != D) ++mismatches;
  }
  v.detail << "max|dV/dt_fd - (-sigma x1^2 - x2^2 - beta x3^2)| five-point=" << five << " central=" << c1
           << " central(2h)/central(h)=" << c2 / c1 << " symmetric-part mismatches=" << mismatches;
  v.require(five <= 1e-4, "five-point dV/dt within 1e-4");
  v.require(c2 / c1 >= 3.5 && c2 / c1 <= 4.5, "central difference error scales as h^2");
  v.require(mismatches == 0, "G + G^T exact");
  return v;
}

Verdict criterion9() {
  Verdict v;
  const double h = 1e-3;
  TimeSeries ts({"s", "z"}, h);
  for (std::size_t k = 0; k <= 20000; ++k) {
    const double t = static_cast<double>(k) * h;
    const std::array<double, 2> row{std::sin(t), 0.0};
    ts.append(t, row);
  }
  const double a = pe_metric(ts, {"s"}, 2.0 * std::numbers::pi).alpha_hat;
  const double z = pe_metric(ts, {"z"}, 2.0 * std::numbers::pi).alpha_hat;
  v.detail << "alpha_hat(sin)=" << a << " (pi=" << std::numbers::pi << ") alpha_hat(0)=" << z;
  v.require(std::abs(a - std::numbers::pi) <= 1e-4, "sin gives pi within 1e-4");
  v.require(z == 0.0, "zero input gives 0");
  return v;
}

Verdict criterion10() {
  Verdict v;
  const auto plant = lorenz_plant(kSigma, kBeta, 28.0);
  OdeSystem sys{3, [&](double t, const Vector& x) { return plant_derivative(plant, x, t); }};
  const Vector x0 = Vector::Ones(3);
  const Vector ref = integrate(sys, x0, 0.0, 1.0, 1e-5);
  const double e1 = (integrate(sys, x0, 0.0, 1.0, 1e-3) - ref).norm();
  const double e2 = (integrate(sys, x0, 0.0, 1.0, 5e-4) - ref).norm();
  const double ratio = e1 / e2;
  v.detail << "err(1e-3)=" << e1 << " err(5e-4)=" << e2 << " ratio=" << ratio;
  v.require(ratio >= 10.0 && ratio <= 22.0, "ratio in [10, 22]");
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::string& title, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    if (!v.pass) ++failures;
    std::printf("criterion %2d %s: %s  %s\n", n, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
  };

  std::optional<ReferenceRun> ref;
  std::string ref_error;
  try {
    ref = reference_run();
  } catch (const std::exception& e) {
    ref_error = e.what();
  }
  auto needs_ref = [&](auto check) {
    return [&, check]() -> Verdict {
      if (!ref) throw std::runtime_error("reference run failed: " + ref_error);
      return check(*ref);
    };
  };

  report(1, "Lorenz reference convergence", needs_ref(criterion1));
  report(2, "square-wave recovery", criterion2);
  report(3, "auxiliary-error identity", needs_ref(criterion3));
  report(4, "AE equivalent model", criterion4);
  report(5, "robust residual set", criterion5);
  report(6, "dead-zone function", criterion6);
  report(7, "high-order tuner", criterion7);
  report(8, "Lorenz stability identity", criterion8);
  report(9, "PE metric oracle", criterion9);
  report(10, "integrator order", criterion10);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
