// High-order tuner observer on a relative-degree-3 plant: prints the tuner
// gain bound and the estimate at a few times.

#include "adapt_sync/transmission.hpp"

#include <cmath>
#include <iostream>

int main() {
  using namespace adapt_sync;
  Matrix A(3, 3);
  A << -6, 1, 0, -11, 0, 1, -6, 0, 0;
  Vector b(3), c(3), k(3);
  b << 0, 0, 1;
  c << 1, 0, 0;
  k << 3, 8, 5;
  auto plant = [&](double theta) {
    return RegressorPlant{A, b, c, [](double, double) { return Vector::Zero(3).eval(); },
                          [](double t, double) { return Vector::Constant(1, 10.0 * std::sin(0.5 * t)); },
                          [theta](double) { return Vector::Constant(1, theta); }};
  };

  HotOptions probe;
  probe.strict = false;
  const double bound = HotObserver(plant(0.0), k, probe).mu_bound();
  HotOptions opts;
  opts.mu = 2.0 * bound;
  std::cout << "relative degree 3, mu bound " << bound << ", using mu = " << opts.mu << "\n";

  ScenarioConfig cfg;
  cfg.plant = plant(2.0);
  cfg.x0 = Vector::Zero(3);
  cfg.observer = HotObserver(plant(0.0), k, opts);
  cfg.x_hat0 = Vector::Zero(3);
  cfg.theta_hat0 = Vector::Zero(1);
  cfg.t_end = 60.0;
  const auto res = run_scenario(cfg);
  const auto th = res.series.channel("theta_hat");
  const auto e = res.series.channel("e");
  for (double t : {5.0, 10.0, 20.0, 40.0, 60.0}) {
    const auto i = static_cast<std::size_t>(std::llround(t / cfg.step));
    std::cout << "t=" << t << "  theta_hat=" << th[i] << "  e=" << e[i] << "\n";
  }
}
