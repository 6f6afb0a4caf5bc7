#include "adapt_sync/runner.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

using namespace adapt_sync;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "scenarios": [
    {
      "name": "small",
      "plant": {"type": "regressor", "A": [[0, 1], [-2, -3]], "b": [0, 1], "c": [1, 0],
                "phi": [{"kind": "signal", "signal": {"kind": "sine", "amplitude": 3, "frequency": 1}}],
                "theta": [2]},
      "observer": {"scheme": "ae", "k": [1, 0], "gamma": 5},
      "simulation": {"t_end": 2, "step": 0.01}
    }
  ]
}
)";

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adapt_sync_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EveryPresetParses) {
  for (const auto& p : presets()) {
    SCOPED_TRACE(p.name);
    const auto file = parse_config(p.text, {}, "preset:" + p.name);
    ASSERT_EQ(file.scenarios.size(), 1u);
    EXPECT_EQ(file.scenarios[0].config.name, p.name);
  }
  EXPECT_THROW(find_preset("nope"), ConfigError);
}

TEST(Config, LorenzPresetCarriesReferenceParameters) {
  const auto file = parse_config(find_preset("lorenz-square-noiseless").text);
  const auto& cfg = file.scenarios[0].config;
  ASSERT_TRUE(cfg.message.has_value());
  EXPECT_EQ(cfg.message->symbol_duration(), 20.0);
  EXPECT_EQ(cfg.message->amplitude(), 0.1);
  const auto& obs = std::get<SdObserver>(*cfg.observer);
  EXPECT_EQ(obs.gamma(), 0.45);
  EXPECT_FALSE(obs.theta_star().has_value());
  EXPECT_EQ(cfg.t_end, 200.0);
}

TEST(Config, AutoThetaStarIsTenPercentAboveTruth) {
  const auto file = parse_config(find_preset("lorenz-square-noisy").text);
  const auto& obs = std::get<SdObserver>(*file.scenarios[0].config.observer);
  EXPECT_NEAR(*obs.theta_star(), 0.11, 1e-15);
  EXPECT_EQ(file.scenarios[0].config.channel.seed, 42u);
}

TEST(Config, SyntaxErrorReportsLine) {
  const std::string text = "{\n  \"schema_version\": 1,\n  \"scenarios\": [\n    }\n";
  const auto msg = error_of(text);
  EXPECT_NE(msg.find("cfg.json:4"), std::string::npos) << msg;
}

TEST(Config, SemanticErrorReportsLineAndPointer) {
  std::string text = kMinimal;
  text.replace(text.find("\"gamma\": 5"), 10, "\"gamma\": 0");
  const auto msg = error_of(text);
  EXPECT_NE(msg.find("cfg.json:9: /scenarios/0/observer/gamma"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyIsRejected) {
  std::string text = kMinimal;
  text.replace(text.find("\"t_end\""), 7, "\"t_ned\"");
  const auto msg = error_of(text);
  EXPECT_NE(msg.find("unknown key 't_ned'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("cfg.json:10"), std::string::npos) << msg;
}

TEST(Config, NoisyChannelRequiresSeed) {
  const auto msg = error_of(kMinimal, {"channel={\"xi_max\": 0.1}"});
  EXPECT_NE(msg.find("seed"), std::string::npos) << msg;
  EXPECT_NE(msg.find("(value set by override)"), std::string::npos) << msg;
  EXPECT_EQ(error_of(kMinimal, {"channel={\"xi_max\": 0.1, \"seed\": 3}"}), "");
}

TEST(Config, SchemaVersionIsChecked) {
  std::string text = kMinimal;
  text.replace(text.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  EXPECT_NE(error_of(text).find("schema_version"), std::string::npos);
}

TEST(Config, OverridesApplyToEveryScenarioOrOne) {
  const auto file = parse_config(kMinimal, {"observer.gamma=7", "simulation.t_end=3"});
  EXPECT_EQ(std::get<AeObserver>(*file.scenarios[0].config.observer).gamma(), 7.0);
  EXPECT_EQ(file.scenarios[0].config.t_end, 3.0);
  const auto one = parse_config(kMinimal, {"scenarios.0.name=renamed"});
  EXPECT_EQ(one.scenarios[0].config.name, "renamed");
  EXPECT_THROW(parse_config(kMinimal, {"novalue"}), ConfigError);
}

TEST(Config, OverriddenGammaZeroNamesTheOverride) {
  const auto msg = error_of(find_preset("lorenz-square-noiseless").text, {"observer.gamma=0"});
  EXPECT_NE(msg.find("gamma"), std::string::npos);
  EXPECT_NE(msg.find("(value set by override)"), std::string::npos) << msg;
}

TEST(Config, IncompatibleSchemeIsAConfigError) {
  const auto msg = error_of(find_preset("lorenz-square-noiseless").text, {"observer.scheme=ae"});
  EXPECT_NE(msg.find("constant-A"), std::string::npos) << msg;
}

TEST(Config, HotStrictModeSurfacesAsConfigError) {
  const auto msg = error_of(find_preset("hot-synthetic-r3").text, {"observer.mu=2.7"});
  EXPECT_NE(msg.find("stability bound"), std::string::npos) << msg;
  EXPECT_EQ(error_of(find_preset("hot-synthetic-r3").text, {"observer.mu=2.7", "observer.strict=false"}), "");
}

TEST(Config, DuplicateNamesAreRejected) {
  auto doc = json::parse(kMinimal);
  doc["scenarios"].push_back(doc["scenarios"][0]);
  EXPECT_NE(error_of(doc.dump(2)).find("duplicate"), std::string::npos);
}

TEST(Config, MissingFileIsAConfigError) { EXPECT_THROW(load_config("/nonexistent/x.json"), ConfigError); }

TEST(Runner, WritesCsvAndSummaryThatRoundTrip) {
  const auto dir = scratch_dir("roundtrip");
  const auto file = parse_config(kMinimal);
  const auto outcomes = run_batch(file.scenarios, dir, 1);
  ASSERT_EQ(outcomes.size(), 1u);
  ASSERT_TRUE(outcomes[0].ok) << outcomes[0].error;
  const auto series = read_csv_file((dir / "small.csv").string());
  const auto direct = run_scenario(file.scenarios[0].config);
  ASSERT_EQ(series.names(), direct.series.names());
  for (std::size_t c = 0; c < series.names().size(); ++c)
    for (std::size_t k = 0; k < series.size(); ++k) ASSERT_EQ(series.column(c)[k], direct.series.column(c)[k]);
  std::ifstream in(dir / "small.summary.json");
  const auto summary = json::parse(in);
  EXPECT_EQ(summary["name"], "small");
  EXPECT_EQ(summary["samples"], series.size());
  EXPECT_FALSE(std::filesystem::exists(dir / "small.csv.tmp"));
}

TEST(Runner, RecordSelectsChannelsAndRejectsUnknown) {
  const auto dir = scratch_dir("record");
  auto file = parse_config(kMinimal);
  file.scenarios[0].record = {"e", "theta_hat"};
  auto out = run_batch(file.scenarios, dir, 1);
  ASSERT_TRUE(out[0].ok);
  EXPECT_EQ(read_csv_file(out[0].csv_path.string()).names(), (std::vector<std::string>{"e", "theta_hat"}));
  file.scenarios[0].record = {"nope"};
  out = run_batch(file.scenarios, dir, 1);
  EXPECT_FALSE(out[0].ok);
  EXPECT_FALSE(out[0].fault);
}

TEST(Runner, FaultIsReportedWithTime) {
  const auto dir = scratch_dir("fault");
  const auto file = parse_config(kMinimal, {"plant.A=[[1, 1], [0, -1]]", "observer.k=[3, 0]", "initial={\"x\": [1, 1]}",
                                            "simulation.guard=100", "simulation.t_end=20"});
  const auto out = run_batch(file.scenarios, dir, 1);
  ASSERT_FALSE(out[0].ok);
  EXPECT_TRUE(out[0].fault);
  ASSERT_TRUE(out[0].fault_time.has_value());
  EXPECT_LT(*out[0].fault_time, 20.0);
}

TEST(Runner, ParallelBatchMatchesSequential) {
  const auto seq_dir = scratch_dir("seq");
  const auto par_dir = scratch_dir("par");
  auto doc = json::parse(kMinimal);
  for (int i = 1; i < 4; ++i) {
    auto s = doc["scenarios"][0];
    s["name"] = "small" + std::to_string(i);
    s["observer"]["gamma"] = 1 + i;
    doc["scenarios"].push_back(s);
  }
  const auto file = parse_config(doc.dump());
  const auto a = run_batch(file.scenarios, seq_dir, 1);
  const auto b = run_batch(file.scenarios, par_dir, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(a[i].ok && b[i].ok);
    const auto sa = read_csv_file(a[i].csv_path.string());
    const auto sb = read_csv_file(b[i].csv_path.string());
    EXPECT_TRUE(sa == sb) << a[i].name;
  }
}

TEST(Runner, EveryPresetCompletesWithinItsBudget) {
  const auto dir = scratch_dir("presets");
  for (const auto& p : presets()) {
    SCOPED_TRACE(p.name);
    const auto file = parse_config(p.text);
    const auto out = run_batch(file.scenarios, dir, 1);
    ASSERT_TRUE(out[0].ok) << out[0].error;
    ASSERT_TRUE(out[0].summary.contains("within_budget"));
    EXPECT_TRUE(out[0].summary["within_budget"].get<bool>()) << out[0].summary["runtime_seconds"];
  }
}
