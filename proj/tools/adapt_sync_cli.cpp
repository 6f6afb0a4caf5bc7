// adapt-sync: run synchronization scenarios and analyze recorded series.
//
// Exit status: 0 success, 1 usage error in an analysis input, 2 validation
// error, 3 simulation fault.

#include "adapt_sync/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

enum class Level { quiet = 0, error = 1, warn = 2, info = 3, debug = 4 };

Level log_level() {
  const char* env = std::getenv("ADAPT_SYNC_LOG");
  if (!env) return Level::info;
  const std::string v = env;
  if (v == "quiet" || v == "off") return Level::quiet;
  if (v == "error") return Level::error;
  if (v == "warn") return Level::warn;
  if (v == "debug") return Level::debug;
  return Level::info;
}

void log(Level level, const std::string& msg) {
  static const Level current = log_level();
  if (level > current) return;
  static const char* names[] = {"", "error", "warn", "info", "debug"};
  std::cerr << "adapt-sync [" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(tok);
  return out;
}

adapt_sync::ConfigFile load(const std::string& config, const std::string& preset,
                            const std::vector<std::string>& overrides) {
  if (!config.empty() && !preset.empty())
    throw adapt_sync::ConfigError("give either --config or --preset, not both", "", std::nullopt);
  if (!preset.empty()) {
    const auto& p = adapt_sync::find_preset(preset);
    return adapt_sync::parse_config(p.text, overrides, "preset:" + p.name);
  }
  if (config.empty()) throw adapt_sync::ConfigError("one of --config or --preset is required", "", std::nullopt);
  return adapt_sync::load_config(config, overrides);
}

int cmd_run(const std::string& config, const std::string& preset, const std::string& out_dir,
            const std::vector<std::string>& overrides, unsigned jobs) {
  adapt_sync::ConfigFile file;
  try {
    file = load(config, preset, overrides);
  } catch (const adapt_sync::ConfigError& e) {
    log(Level::error, e.what());
    return 2;
  }
  for (const auto& s : file.scenarios) log(Level::debug, "queued scenario " + s.config.name);
  const auto outcomes = adapt_sync::run_batch(file.scenarios, out_dir, jobs);
  int status = 0;
  for (const auto& o : outcomes) {
    if (o.ok) {
      std::ostringstream msg;
      msg << o.name << ": wrote " << o.csv_path.string() << " and " << o.summary_path.string();
      log(Level::info, msg.str());
      if (o.summary.contains("within_budget") && !o.summary["within_budget"].get<bool>())
        log(Level::warn, o.name + ": runtime exceeded its declared budget");
      continue;
    }
    if (o.fault) {
      std::ostringstream msg;
      msg << o.name << ": simulation fault at t=" << o.fault_time.value_or(0.0) << ": " << o.error;
      log(Level::error, msg.str());
      status = 3;
    } else {
      log(Level::error, o.name + ": " + o.error);
      if (status == 0) status = 2;
    }
  }
  return status;
}

int cmd_validate(const std::string& config, const std::string& preset, const std::vector<std::string>& overrides) {
  try {
    const auto file = load(config, preset, overrides);
    for (const auto& s : file.scenarios) std::cout << s.config.name << ": ok\n";
    return 0;
  } catch (const adapt_sync::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

int cmd_presets(bool show_json, const std::string& only) {
  for (const auto& p : adapt_sync::presets()) {
    if (!only.empty() && p.name != only) continue;
    std::cout << p.name << "\t" << p.description << "\n";
    if (show_json) std::cout << p.text << "\n";
  }
  return 0;
}

int cmd_analyze_pe(const std::string& input, double window, const std::string& channels,
                   std::optional<double> stride, double threshold) {
  try {
    const auto series = adapt_sync::read_csv_file(input);
    std::vector<std::string> names = split_csv_list(channels);
    if (names.empty()) {
      for (const auto& n : series.names())
        if (n.rfind("phi", 0) == 0 && n.rfind("phibar", 0) != 0) names.push_back(n);
      if (names.empty()) throw std::invalid_argument("no --channels given and no phi* channels in the input");
    }
    const auto report = adapt_sync::pe_metric(series, names, window, stride, threshold);
    adapt_sync::json j = adapt_sync::to_json(report);
    j["input"] = input;
    j["channels"] = names;
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    log(Level::error, e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive observer-based synchronization of regressor-form master systems"};
  app.require_subcommand(1);

  std::string config, preset, out_dir = ".";
  std::vector<std::string> overrides;
  unsigned jobs = 0;
  auto* run = app.add_subcommand("run", "Run every scenario of a config file or preset");
  run->add_option("--config", config, "Scenario config (JSON)");
  run->add_option("--preset", preset, "Built-in preset name");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--set", overrides, "Override key=value (repeatable); keys are relative to each scenario");
  run->add_option("-j,--jobs", jobs, "Concurrent scenarios (0: one per hardware thread)");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config, "Scenario config (JSON)");
  validate->add_option("--preset", preset, "Built-in preset name");
  validate->add_option("--set", overrides, "Override key=value (repeatable)");

  bool show_json = false;
  std::string only;
  auto* list = app.add_subcommand("presets", "List built-in presets");
  list->add_flag("--json", show_json, "Print each preset's full config");
  list->add_option("name", only, "Show only this preset");

  auto* analyze = app.add_subcommand("analyze", "Analyze a recorded CSV series");
  analyze->require_subcommand(1);
  std::string input, channels;
  double window = 0.0, threshold = 1e-6;
  std::optional<double> stride;
  auto* pe = analyze->add_subcommand("pe", "Persistent-excitation level of regressor channels");
  pe->add_option("--input", input, "CSV written by `run`")->required();
  pe->add_option("--window", window, "Window length T")->required();
  pe->add_option("--channels", channels, "Comma-separated channel names (default: phi*)");
  pe->add_option("--stride", stride, "Window stride (default T/4)");
  pe->add_option("--threshold", threshold, "PE decision threshold on the minimum eigenvalue")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*run) return cmd_run(config, preset, out_dir, overrides, jobs);
  if (*validate) return cmd_validate(config, preset, overrides);
  if (*list) return cmd_presets(show_json, only);
  if (*pe) return cmd_analyze_pe(input, window, channels, stride, threshold);
  return 2;
}
