#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "warmstart/cli.hpp"
#include "warmstart/results.hpp"
#include "warmstart/verify.hpp"

using namespace warmstart;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("warmstart_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json tiny_online(const fs::path& out) {
  auto doc = nlohmann::json::parse(R"({
    "protocol": "online",
    "dataset": {"kind": "gaussian_mixture", "n": 300, "d": 4, "k": 3, "label_noise": 0.05, "seed": 2},
    "model": {"hidden": [8]},
    "optimizer": {"lr": 0.01, "batch_size": 32},
    "convergence": {"max_epochs": 8},
    "online": {"k_stream": 50, "rounds": 3},
    "initializers": [{"policy": "warm"}, {"policy": "shrink_perturb", "lambda": 0.5, "gamma": 0.01}],
    "seeds": [0, 1]
  })");
  doc["out"] = out.string();
  return doc;
}

std::string config_error(const nlohmann::json& doc, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(doc, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseConfig, MinimalConfigFillsDefaults) {
  const auto rc = parse_config(nlohmann::json::parse(R"({"protocol": "two_phase", "dataset": {}})"));
  const auto& adam = std::get<AdamConfig>(rc.common.train.optimizer);
  EXPECT_EQ(adam.learning_rate, 0.001);
  EXPECT_EQ(adam.batch_size, 128u);
  EXPECT_DOUBLE_EQ(rc.common.val_fraction, 1.0 / 3.0);
  EXPECT_EQ(rc.common.model.hidden, (std::vector<std::size_t>{100, 100}));
  EXPECT_EQ(rc.seeds.size(), 5u);
  EXPECT_EQ(rc.resolved["optimizer"]["lr"], 0.001);
  EXPECT_EQ(rc.resolved["convergence"]["max_epochs"], 500);
  // The echo is itself a valid config with the same hash.
  EXPECT_EQ(parse_config(rc.resolved).hash, rc.hash);
}

TEST(ParseConfig, UnknownKeySuggestsNearest) {
  const auto doc = nlohmann::json::parse(R"({"protocol": "online", "dataset": {}, "reinit": {"lamda": 0.5}})");
  EXPECT_NE(config_error(doc).find("unknown key 'lamda' (did you mean 'lambda'?)"), std::string::npos)
      << config_error(doc);
}

TEST(ParseConfig, TypeMismatchNamesKey) {
  const auto doc = nlohmann::json::parse(R"({"protocol": "online", "dataset": {}, "optimizer": {"lr": "fast"}})");
  const auto msg = config_error(doc);
  EXPECT_NE(msg.find("optimizer.lr"), std::string::npos) << msg;
  EXPECT_NE(msg.find("expected number"), std::string::npos) << msg;
}

TEST(ParseConfig, MissingRequiredKey) {
  EXPECT_NE(config_error(nlohmann::json::parse(R"({"dataset": {}})")).find("protocol"), std::string::npos);
  EXPECT_NE(config_error(nlohmann::json::parse(R"({"protocol": "online"})")).find("dataset"), std::string::npos);
  EXPECT_NE(config_error(nlohmann::json::parse(R"({"protocol": "pretrain_crossover", "dataset": {}})"))
                .find("target_dataset"),
            std::string::npos);
}

TEST(ParseConfig, SeedsMustBeDistinct) {
  EXPECT_FALSE(config_error(nlohmann::json::parse(R"({"protocol": "online", "dataset": {}, "seeds": [1, 1]})")).empty());
  EXPECT_FALSE(config_error(nlohmann::json::parse(R"({"protocol": "online", "dataset": {}, "seeds": []})")).empty());
}

TEST(ParseConfig, OverrideSupersedesFileAndIsEchoed) {
  const auto doc = nlohmann::json::parse(
      R"({"protocol": "online", "dataset": {}, "reinit": {"policy": "shrink_perturb", "lambda": 0.6, "gamma": 0.01}})");
  const auto rc = parse_config(doc, {"reinit.lambda=0.3"});
  EXPECT_EQ(rc.common.initializers.at(0).lambda, 0.3);
  EXPECT_EQ(rc.resolved["reinit"]["lambda"], 0.3);
  EXPECT_NE(rc.hash, parse_config(doc).hash);
}

TEST(ParseConfig, HashIgnoresOutputDirectory) {
  auto a = nlohmann::json::parse(R"({"protocol": "online", "dataset": {}, "out": "a"})");
  auto b = nlohmann::json::parse(R"({"protocol": "online", "dataset": {}, "out": "b"})");
  EXPECT_EQ(parse_config(a).hash, parse_config(b).hash);
}

TEST(ParseConfig, GridAxisNamesChecked) {
  const auto doc = nlohmann::json::parse(R"({"protocol": "grid", "dataset": {}, "grid": {"axes": {"lamda": [0.1]}}})");
  EXPECT_NE(config_error(doc).find("did you mean 'lambda'"), std::string::npos) << config_error(doc);
}

TEST(Run, TinyOnlineSucceeds) {
  const auto dir = fresh_dir("ok");
  std::ostringstream log;
  EXPECT_EQ(run_document(tiny_online(dir), {}, log), exit_ok) << log.str();
  EXPECT_TRUE(fs::exists(dir / "records.json"));
  EXPECT_TRUE(fs::exists(dir / "curves.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  const auto records = read_records_json((dir / "records.json").string());
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    EXPECT_EQ(r.config_hash, parse_config(tiny_online(dir)).hash);
    EXPECT_EQ(r.config["online"]["k_stream"], 50);
  }
  const auto curves = slurp(dir / "curves.csv");
  EXPECT_EQ(curves.rfind("# config_hash=" + records[0].config_hash + "\nprotocol,series,seed,x,metric,value\n", 0), 0u);
}

TEST(Run, BrokenConfigWritesNothing) {
  const auto dir = fresh_dir("broken");
  auto doc = tiny_online(dir);
  doc["optimizer"]["lr"] = -1;
  std::ostringstream log;
  EXPECT_EQ(run_document(doc, {}, log), exit_config);
  EXPECT_FALSE(fs::exists(dir));

  doc = tiny_online(dir);
  doc["dataset"] = {{"csv", (dir.parent_path() / "does_not_exist.csv").string()}};
  EXPECT_EQ(run_document(doc, {}, log), exit_config);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Run, DivergentLearningRateAbortsWithRecord) {
  const auto dir = fresh_dir("diverge");
  std::ostringstream log;
  EXPECT_EQ(run_document(tiny_online(dir), {R"(optimizer={"kind": "sgd", "lr": 1000})",
                                                        R"(model={"hidden": [8, 8], "activation": "none"})"}, log), exit_abort);
  const auto records = read_records_json((dir / "records.json").string());
  ASSERT_FALSE(records.empty());
  bool any = false;
  for (const auto& r : records) {
    if (!r.abort) continue;
    any = true;
    EXPECT_GE(r.abort->epoch, 1u);
    EXPECT_NE(r.abort->message.find("epoch " + std::to_string(r.abort->epoch)), std::string::npos);
  }
  EXPECT_TRUE(any);
  EXPECT_NE(log.str().find("abort"), std::string::npos);
}

TEST(Run, SameConfigGivesIdenticalCurves) {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  std::ostringstream log;
  ASSERT_EQ(run_document(tiny_online(a), {}, log), exit_ok);
  ASSERT_EQ(run_document(tiny_online(b), {}, log), exit_ok);
  EXPECT_EQ(slurp(a / "curves.csv"), slurp(b / "curves.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(EmitResults, EmptyRecordsGiveHeadersOnly) {
  const auto dir = fresh_dir("empty");
  emit_results({}, dir, "abc");
  EXPECT_EQ(slurp(dir / "curves.csv"), "# config_hash=abc\nprotocol,series,seed,x,metric,value\n");
  EXPECT_EQ(slurp(dir / "summary.csv"), "# config_hash=abc\nprotocol,series,x,metric,n,mean,std\n");
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "records.json")), nlohmann::json::array());
}

TEST(EmitResults, SeriesWithCommasAreQuoted) {
  EXPECT_EQ(detail::csv_text("warm"), "warm");
  EXPECT_EQ(detail::csv_text("shrink_perturb(0.6,0.01)"), "\"shrink_perturb(0.6,0.01)\"");
  EXPECT_EQ(detail::csv_text("a\"b"), "\"a\"\"b\"");

  const auto dir = fresh_dir("quoted");
  std::ostringstream log;
  ASSERT_EQ(run_document(tiny_online(dir), {}, log), exit_ok);
  std::istringstream curves(slurp(dir / "curves.csv"));
  std::string line;
  std::size_t quoted = 0;
  while (std::getline(curves, line)) {
    if (line.find("shrink_perturb") == std::string::npos) continue;
    ++quoted;
    EXPECT_NE(line.find(",\"shrink_perturb(0.5,0.01)\","), std::string::npos) << line;
  }
  EXPECT_GT(quoted, 0u);
}

TEST(EmitResults, RecordsRoundTripExactly) {
  const auto dir = fresh_dir("roundtrip");
  std::ostringstream log;
  ASSERT_EQ(run_document(tiny_online(dir), {}, log), exit_ok);
  const auto rc = parse_config(tiny_online(dir));
  const auto in_memory = execute(rc, 1);
  EXPECT_EQ(read_records_json((dir / "records.json").string()), in_memory);

  ExperimentRecord aborted = in_memory.front();
  aborted.abort = AbortInfo{2, 7, std::numeric_limits<double>::infinity(), "boom"};
  const auto back = nlohmann::json(aborted).get<ExperimentRecord>();
  EXPECT_EQ(back.abort->epoch, 7u);
  EXPECT_TRUE(std::isnan(back.abort->param_norm));
}

TEST(EmitResults, SummaryMatchesCurveAggregates) {
  const auto rc = parse_config(tiny_online(fresh_dir("summary")));
  const auto records = execute(rc, 1);
  const auto rows = summarize(records);
  const auto curves = assemble_curves(records);
  std::size_t matched = 0;
  for (const auto& row : rows) {
    for (const auto& p : curves) {
      if (p.stat == CurveStat::mean && p.series == row.series && p.x == row.x && p.metric == row.metric) {
        EXPECT_NEAR(p.value, row.mean, 1e-12);
        ++matched;
      }
      if (p.stat == CurveStat::stddev && p.series == row.series && p.x == row.x && p.metric == row.metric) {
        EXPECT_NEAR(p.value, row.stddev, 1e-12);
      }
    }
  }
  EXPECT_EQ(matched, rows.size());
}

TEST(EmitResults, UnwritablePathFails) {
  const auto blocker = fresh_dir("blocker");
  std::ofstream(blocker.string()) << "file";
  EXPECT_THROW(emit_results({}, blocker / "sub", "h"), InputError);
  fs::remove(blocker);
}

TEST(Verify, AllChecksPass) {
  std::ostringstream out;
  EXPECT_EQ(verify(out), 0) << out.str();
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
}
