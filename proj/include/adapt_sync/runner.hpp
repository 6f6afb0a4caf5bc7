#pragma once

// Batch execution of parsed scenarios and result emission (CSV plus JSON
// summary, each written atomically).

#include "adapt_sync/config.hpp"

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <thread>
#include <vector>

namespace adapt_sync {

inline json to_json(const PeReport& pe) {
  return {{"window", pe.window},   {"alpha_hat", pe.alpha_hat}, {"threshold", pe.threshold},
          {"is_pe", pe.is_pe},     {"windows", pe.windows},     {"worst_window_start", pe.worst_window_start}};
}

inline json to_json(const ResidualBound& rb) {
  return {{"theta_norm", rb.theta_norm}, {"theta_star", rb.theta_star}, {"gamma", rb.gamma},
          {"noise_sup", rb.noise_sup},   {"bound", rb.bound}};
}

inline json to_json(const RecoveryMetrics& m) {
  json settle = json::array();
  for (const auto& s : m.settle_times) settle.push_back(s ? json(*s) : json(nullptr));
  const auto worst = m.max_settle_time();
  return {{"rmse_theta", m.rmse_theta},
          {"settle_times", settle},
          {"settle_time", worst ? json(*worst) : json(nullptr)},
          {"settled", worst.has_value()},
          {"ber", m.ber ? json(*m.ber) : json(nullptr)},
          {"bits_compared", m.bits_compared},
          {"final_output_error", m.final_output_error}};
}

struct RunOutcome {
  std::string name;
  bool ok = false;
  bool fault = false;  // simulation fault (as opposed to a setup error)
  std::string error;
  std::optional<double> fault_time;
  json summary;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json summary_json(const ScenarioSpec& spec, const ScenarioResult& res, double seconds) {
  json s;
  s["name"] = spec.config.name;
  s["samples"] = res.series.size();
  s["t_end"] = res.series.t().back();
  s["step"] = spec.config.step;
  s["metrics"] = to_json(res.metrics);
  s["pe"] = res.pe ? to_json(*res.pe) : json(nullptr);
  if (res.noise_sup) s["noise_sup"] = *res.noise_sup;
  if (res.residual) s["residual_bound"] = to_json(*res.residual);
  s["runtime_seconds"] = seconds;
  if (spec.runtime_budget) {
    s["runtime_budget"] = *spec.runtime_budget;
    s["within_budget"] = seconds <= *spec.runtime_budget;
  }
  return s;
}

/// Runs one scenario and writes `<name>.csv` and `<name>.summary.json`
/// into `out_dir`.
inline RunOutcome run_and_write(const ScenarioSpec& spec, const std::filesystem::path& out_dir) {
  RunOutcome o;
  o.name = spec.config.name;
  try {
    const auto start = std::chrono::steady_clock::now();
    const ScenarioResult res = run_scenario(spec.config);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& ch : spec.record)
      if (!res.series.has(ch)) throw std::invalid_argument("recorded channel '" + ch + "' does not exist");
    const TimeSeries out = spec.record.empty() ? res.series : res.series.select(spec.record);
    std::ostringstream csv;
    write_csv(csv, out);
    o.summary = summary_json(spec, res, seconds);
    o.csv_path = out_dir / (o.name + ".csv");
    o.summary_path = out_dir / (o.name + ".summary.json");
    write_atomically(o.csv_path, csv.str());
    write_atomically(o.summary_path, o.summary.dump(2) + "\n");
    o.ok = true;
  } catch (const IntegrationFault& f) {
    o.fault = true;
    o.fault_time = f.time();
    o.error = f.what();
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

/// Runs every scenario, at most `jobs` at a time; each job is sequential.
inline std::vector<RunOutcome> run_batch(const std::vector<ScenarioSpec>& specs, const std::filesystem::path& out_dir,
                                         unsigned jobs = 0) {
  std::filesystem::create_directories(out_dir);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunOutcome> outcomes(specs.size());
  for (std::size_t begin = 0; begin < specs.size(); begin += jobs) {
    std::vector<std::future<RunOutcome>> running;
    const std::size_t end = std::min(specs.size(), begin + jobs);
    for (std::size_t i = begin; i < end; ++i)
      running.push_back(std::async(std::launch::async, [&, i] { return run_and_write(specs[i], out_dir); }));
    for (std::size_t i = begin; i < end; ++i) outcomes[i] = running[i - begin].get();
  }
  return outcomes;
}

}  // namespace adapt_sync
