#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lem/cli.hpp"

using namespace lem;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result lem_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lem");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// Key paths and value types; arrays are described by their first element.
nlohmann::json schema_of(const nlohmann::json& j) {
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : j.items()) out[k] = schema_of(v);
    return out;
  }
  if (j.is_array()) return nlohmann::json::array({j.empty() ? nlohmann::json("empty") : schema_of(j.front())});
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  return "null";
}

void expect_golden(const std::string& name, const nlohmann::json& schema) {
  const fs::path path = fs::path(LEM_GOLDEN_DIR) / name;
  if (std::getenv("LEM_UPDATE_GOLDEN")) {
    std::ofstream(path) << schema.dump(2) << "\n";
  }
  ASSERT_TRUE(fs::exists(path)) << path;
  EXPECT_EQ(schema, load(path)) << "schema drift in " << name;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("lem_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    setenv("LEM_LOG", "quiet", 1);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& f) const { return (dir_ / f).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ScenarioGenerateIsReproducible) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "100", "--seed", "1", "--out", at("a.json")}).code, 0);
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "100", "--seed", "1", "--out", at("b.json")}).code, 0);
  EXPECT_EQ(slurp(at("a.json")), slurp(at("b.json")));
  EXPECT_EQ(slurp(at("a.truth.json")), slurp(at("b.truth.json")));
  EXPECT_EQ(load(at("a.json")).size(), 100u);
}

TEST_F(Cli, ScenarioWithNoUsers) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "0", "--out", at("e.json")}).code, 0);
  EXPECT_TRUE(load(at("e.json")).empty());
}

TEST_F(Cli, AuctionReportSchema) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "100", "--seed", "2", "--out", at("b.json")}).code, 0);
  const Result r = lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("r.json"), "--verify"});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json rep = load(at("r.json"));
  EXPECT_EQ(rep["status"], "ok");
  EXPECT_GT(rep["metrics"]["comparisons"].get<u64>(), 100u);
  EXPECT_GT(rep["metrics"]["rounds"].get<u64>(), 0u);
  EXPECT_TRUE(rep["metrics"].contains("offline_seconds"));
  EXPECT_TRUE(rep["metrics"].contains("online_seconds"));
  EXPECT_EQ(rep["verification"]["verdict"], "pass");
  expect_golden("auction_report.schema.json", schema_of(rep));
}

TEST_F(Cli, VerdictOnlyWhenRequested) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "10", "--out", at("b.json")}).code, 0);
  ASSERT_EQ(lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("r.json")}).code, 0);
  EXPECT_FALSE(load(at("r.json")).contains("verification"));
}

TEST_F(Cli, OmitTimingGivesIdenticalReports) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "30", "--out", at("b.json")}).code, 0);
  for (const char* f : {"r1.json", "r2.json"}) {
    ASSERT_EQ(lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at(f), "--omit-timing",
                       "--transcript-dir", at(std::string(f) + ".t")})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(at("r1.json")), slurp(at("r2.json")));
  for (int p = 1; p <= 3; ++p) {
    const std::string name = "evaluator" + std::to_string(p) + ".bin";
    EXPECT_EQ(slurp(at("r1.json.t/" + name)), slurp(at("r2.json.t/" + name)));
    EXPECT_FALSE(slurp(at("r1.json.t/" + name)).empty());
  }
}

TEST_F(Cli, TcpTransport) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "20", "--out", at("b.json")}).code, 0);
  ASSERT_EQ(lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("m.json"), "--omit-timing"}).code, 0);
  const Result r =
      lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("t.json"), "--omit-timing", "--transport", "tcp"});
  ASSERT_EQ(r.code, 0) << r.err;
  nlohmann::json m = load(at("m.json")), t = load(at("t.json"));
  m.erase("transport");
  t.erase("transport");
  EXPECT_EQ(m, t);
}

TEST_F(Cli, ConfigurationErrorsExitThree) {
  EXPECT_EQ(lem_cli({"auction", "run", "--bids", at("missing.json"), "--report", at("r.json")}).code, 3);
  EXPECT_EQ(lem_cli({"auction", "run", "--bids", at("x.json")}).code, 3);
  EXPECT_EQ(lem_cli({"frobnicate"}).code, 3);
  std::ofstream(at("bad.json")) << "[{\"bid_id\": 1}]";
  EXPECT_EQ(lem_cli({"auction", "run", "--bids", at("bad.json"), "--report", at("r.json")}).code, 3);
  std::ofstream(at("cfg.json")) << R"({"field": {"modulus": "1000"}})";
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "5", "--out", at("b.json")}).code, 0);
  EXPECT_EQ(lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("r.json"), "--config", at("cfg.json")}).code, 3);
  EXPECT_EQ(lem_cli({"bench", "--sizes", "4", "--repeat", "0"}).code, 3);
}

TEST_F(Cli, ProtocolAbortExitsTwoWithPartialReport) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "60", "--out", at("b.json")}).code, 0);
  std::ofstream(at("cfg.json")) << R"({"auction": {"timeout_ms": 0}})";
  const Result r = lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("r.json"), "--config", at("cfg.json")});
  EXPECT_EQ(r.code, 2) << r.err;
  const nlohmann::json rep = load(at("r.json"));
  EXPECT_EQ(rep["status"], "aborted");
  EXPECT_TRUE(rep["error"].contains("message"));
}

TEST_F(Cli, RunConfigFile) {
  std::ofstream(at("cfg.json")) << R"({"field": {"modulus": "9223372036854775783", "k": 20, "kappa": 40},
                                      "auction": {"n_suppliers": 10, "seed": 5, "period": 3, "demand_aggregates": true}})";
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "20", "--out", at("b.json")}).code, 0);
  ASSERT_EQ(lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("r.json"), "--config", at("cfg.json"),
                     "--verify"})
                .code,
            0);
  const nlohmann::json rep = load(at("r.json"));
  EXPECT_EQ(rep["period"], 3);
  EXPECT_TRUE(rep["per_supplier"][0].contains("demand_wh"));
}

TEST_F(Cli, BillingMatchesOracle) {
  ASSERT_EQ(lem_cli({"scenario", "generate", "--users", "50", "--out", at("b.json")}).code, 0);
  ASSERT_EQ(lem_cli({"auction", "run", "--bids", at("b.json"), "--report", at("r.json")}).code, 0);
  const Result r = lem_cli({"billing", "run", "--ground-truth", at("b.truth.json"), "--clearance", at("r.json"),
                            "--cycle-length", "96", "--out", at("bill.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json bill = load(at("bill.json"));
  EXPECT_EQ(bill["verification"]["verdict"], "pass");
  EXPECT_EQ(bill["bills"].size(), 50u);
  i64 total = 0, by_supplier = 0;
  for (const auto& b : bill["bills"]) total += b["bill_cents"].get<i64>();
  for (const auto& s : bill["suppliers"]) by_supplier += s["total_cents"].get<i64>();
  EXPECT_EQ(total, by_supplier);
  expect_golden("billing.schema.json", schema_of(bill));
  EXPECT_EQ(lem_cli({"billing", "run", "--ground-truth", at("nope.json"), "--clearance", at("r.json")}).code, 3);
}

TEST_F(Cli, BenchCsvColumns) {
  const Result r = lem_cli({"bench", "--sizes", "4,8", "--repeat", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, slurp(fs::path(LEM_GOLDEN_DIR) / "bench_header.csv").substr(0, header.size()));
  EXPECT_EQ(header, "bids,rounds,comparisons,cpu_seconds,online_seconds");
  std::size_t rows = 0;
  while (std::getline(in, row)) {
    if (!row.empty()) ++rows;
  }
  EXPECT_EQ(rows, 2u);
}

TEST(CliBench, AveragesEveryRepeat) {
  cli::BenchArgs a;
  a.sizes = {6};
  a.repeat = 3;
  setenv("LEM_LOG", "quiet", 1);
  std::ostringstream sink;
  const auto rows = cli::bench(a, cli::Log(sink));
  ASSERT_EQ(rows.size(), 1u);
  double sum = 0;
  for (u64 s = 1; s <= 3; ++s) {
    scenario::ScenarioConfig sc;
    sc.n_users = 6;
    sc.seed = s;
    auction::RunOptions o;
    o.auction.seed = s;
    sum += static_cast<double>(auction::run_local(scenario::generate(sc).bids, o).totals.comparisons);
  }
  EXPECT_DOUBLE_EQ(rows[0].comparisons, sum / 3);
}
