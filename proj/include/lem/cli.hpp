#pragma once

// Command-line front end. Exit codes: 0 success, 1 verification failure,
// 2 protocol abort, 3 configuration error. LEM_LOG=quiet|info|debug sets the
// verbosity of progress lines on stderr (default info).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lem/auction/session.hpp"
#include "lem/billing.hpp"
#include "lem/config.hpp"
#include "lem/oracle.hpp"
#include "lem/scenario.hpp"

namespace lem::cli {

enum Exit : int { kOk = 0, kVerifyFailed = 1, kAborted = 2, kConfig = 3 };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    const char* env = std::getenv("LEM_LOG");
    const std::string v = env ? env : "info";
    level_ = v == "quiet" ? 0 : v == "debug" ? 2 : 1;
  }
  void info(const std::string& s) const {
    if (level_ >= 1) err_ << s << "\n";
  }
  void debug(const std::string& s) const {
    if (level_ >= 2) err_ << s << "\n";
  }

 private:
  std::ostream& err_;
  int level_ = 1;
};

inline std::string truth_path_for(const std::string& out) {
  const std::filesystem::path p(out);
  if (p.extension() == ".json") return (p.parent_path() / (p.stem().string() + ".truth.json")).string();
  return out + ".truth.json";
}

inline int error_exit(const std::exception& e, std::ostream& err) {
  if (dynamic_cast<const ProtocolAbort*>(&e) || dynamic_cast<const PoolExhausted*>(&e) ||
      dynamic_cast<const PolicyViolation*>(&e) || dynamic_cast<const ShareError*>(&e) ||
      dynamic_cast<const BillingError*>(&e)) {
    err << "aborted: " << e.what() << "\n";
    return kAborted;
  }
  err << "error: " << e.what() << "\n";
  return kConfig;
}

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const PeerAbort*>(&e)) return "peer_abort";
  if (dynamic_cast<const ProtocolAbort*>(&e)) return "protocol_abort";
  if (dynamic_cast<const PoolExhausted*>(&e)) return "pool_exhausted";
  if (dynamic_cast<const PolicyViolation*>(&e)) return "policy_violation";
  if (dynamic_cast<const ShareError*>(&e)) return "share_error";
  if (dynamic_cast<const BillingError*>(&e)) return "billing_refused";
  return "config_error";
}

// ---------------------------------------------------------------------------

struct ScenarioArgs {
  std::size_t users = 100;
  u64 seed = 1;
  std::string out;
  std::string truth;
  std::string config;
};

inline int scenario_generate(const ScenarioArgs& a, const Log& log) {
  scenario::ScenarioConfig c;
  if (!a.config.empty()) c = scenario::config_from_json(auction::read_json_file(a.config));
  c.n_users = a.users;
  c.seed = a.seed;
  const scenario::Scenario s = scenario::generate(c);
  auction::write_json_file(a.out, auction::bids_to_json(s.bids));
  const std::string truth = a.truth.empty() ? truth_path_for(a.out) : a.truth;
  auction::write_json_file(truth, scenario::truth_to_json(c, s.truth));
  log.info("wrote " + std::to_string(s.bids.size()) + " bids to " + a.out + " and ground truth to " + truth);
  return kOk;
}

// ---------------------------------------------------------------------------

struct AuctionArgs {
  std::string bids;
  std::string transport = "memory";
  std::string report;
  std::string config;
  std::string endpoints;
  std::string transcript_dir;
  std::optional<std::uint32_t> suppliers;
  std::optional<u64> seed;
  std::optional<u64> period;
  std::optional<std::size_t> max_bids;
  bool verify = false;
  bool demand_aggregates = false;
  bool omit_timing = false;
};

inline auction::RunOptions auction_options(const AuctionArgs& a) {
  auction::RunOptions o;
  if (!a.config.empty()) o.auction = config::auction_from_json(auction::read_json_file(a.config));
  if (a.suppliers) o.auction.n_suppliers = *a.suppliers;
  if (a.seed) o.auction.seed = *a.seed;
  if (a.period) o.auction.period = *a.period;
  if (a.max_bids) o.auction.max_bids = *a.max_bids;
  if (a.demand_aggregates) o.auction.demand_aggregates = true;
  o.auction.record_transcript = !a.transcript_dir.empty();
  o.backend = a.transport == "tcp" ? auction::Backend::kTcp : auction::Backend::kMemory;
  if (!a.endpoints.empty()) o.endpoints = net::RoleRegistry::load(a.endpoints);
  o.verify = a.verify;
  o.omit_timing = a.omit_timing;
  return o;
}

inline void write_transcripts(const std::string& dir, const auction::RunReport& r) {
  std::filesystem::create_directories(dir);
  for (int p = 0; p < kParties; ++p) {
    const std::string path = (std::filesystem::path(dir) / ("evaluator" + std::to_string(p + 1) + ".bin")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    const auto& bytes = r.parties[p].transcript_bytes;
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

inline int auction_run(const AuctionArgs& a, const Log& log, std::ostream& err) {
  auction::RunOptions o;
  std::vector<auction::Bid> bids;
  try {
    o = auction_options(a);
    bids = auction::load_bids(a.bids);
  } catch (const std::exception& e) {
    return error_exit(e, err);
  }
  log.info("clearing " + std::to_string(bids.size()) + " bids over the " + a.transport + " transport");
  try {
    const auction::RunReport r = auction::run_local(bids, o);
    nlohmann::json j = auction::to_json(r);
    j["status"] = "ok";
    j["transport"] = a.transport;
    auction::write_json_file(a.report, j);
    if (!a.transcript_dir.empty()) write_transcripts(a.transcript_dir, r);
    log.info("sigma = " + std::to_string(r.sigma) + " cents/kWh, phi = " + std::to_string(r.phi) + " Wh, " +
             std::to_string(r.totals.comparisons) + " comparisons, " + std::to_string(r.totals.rounds) + " rounds");
    if (r.verification && !r.verification->pass) {
      err << "verification failed:";
      for (const auto& m : r.verification->mismatches) err << " " << m << ";";
      err << "\n";
      return kVerifyFailed;
    }
    if (r.verification) log.info("verification: pass");
    return kOk;
  } catch (const std::exception& e) {
    const int code = error_exit(e, err);
    nlohmann::json j{{"status", code == kAborted ? "aborted" : "error"},
                     {"transport", a.transport},
                     {"period", o.auction.period},
                     {"n_submitted", bids.size()},
                     {"error", {{"kind", error_kind(e)}, {"message", e.what()}}}};
    try {
      auction::write_json_file(a.report, j);
    } catch (const std::exception&) {
    }
    return code;
  }
}

// ---------------------------------------------------------------------------

struct BillingArgs {
  std::string ground_truth;
  std::string clearance;
  std::size_t cycle_length = 1440;
  u64 cycle = 0;
  u64 seed = 1;
  std::string out;
};

/// Every period of the cycle meters the ground-truth usage; the cleared
/// period also settles the user's accepted bid at the trading price.
inline int billing_run(const BillingArgs& a, const Log& log, std::ostream& out, std::ostream& err) {
  try {
    const auto [cfg, users] = scenario::truth_from_file_json(auction::read_json_file(a.ground_truth));
    const nlohmann::json rep = auction::read_json_file(a.clearance);
    if (rep.value("status", std::string("ok")) != "ok") throw ConfigError("clearance report records an aborted run");
    const u64 sigma = rep.at("sigma_cents").get<u64>();
    const u64 period = rep.value("period", u64{0});
    const std::set<u64> sold(rep.at("accepted_supply_ids").begin(), rep.at("accepted_supply_ids").end());
    const std::set<u64> bought(rep.at("accepted_demand_ids").begin(), rep.at("accepted_demand_ids").end());
    const std::size_t L = a.cycle_length;
    const std::size_t traded_slot = period % std::max<std::size_t>(L, 1);
    const billing::Tariff tariff{static_cast<i64>(cfg.retail_sell), static_cast<i64>(cfg.retail_buy)};
    const FieldParams params;
    const Field field(params);

    billing::Ledger ledger(field, L);
    Rng rng(a.seed, "meters", a.cycle);
    std::map<u64, i64> expected;
    std::size_t imbalances = 0;
    for (const auto& u : users) {
      billing::Meter meter(params, u.user_id, a.cycle, L, rng);
      std::vector<i64> x(L);
      for (std::size_t i = 0; i < L; ++i) {
        billing::PeriodUsage use{u.import_wh, u.export_wh, 0, 0, sigma};
        if (i == traded_slot) {
          if (bought.count(u.bid_id)) use.traded_buy_wh = u.import_wh;
          if (sold.count(u.bid_id)) use.traded_sell_wh = u.export_wh;
        }
        const billing::PeriodBill b = billing::compute_period_bill(use, tariff);
        imbalances += b.imbalance ? 1 : 0;
        x[i] = b.cents;
        ledger.submit(meter.report(i, b.cents));
      }
      expected[u.user_id] = oracle::bill_plain(x);
    }

    nlohmann::json bills = nlohmann::json::array();
    std::map<std::uint32_t, std::pair<std::size_t, i64>> per_supplier;
    std::size_t mismatches = 0;
    for (const auto& u : users) {
      const i64 bill = ledger.bill(u.user_id, a.cycle);
      if (bill != expected[u.user_id]) ++mismatches;
      bills.push_back(billing::bill_json(u.user_id, a.cycle, bill));
      auto& s = per_supplier[u.supplier_id];
      ++s.first;
      s.second += bill;
    }
    nlohmann::json suppliers = nlohmann::json::array();
    for (const auto& [k, v] : per_supplier) {
      suppliers.push_back({{"supplier_id", k}, {"users", v.first}, {"total_cents", v.second}});
    }
    const nlohmann::json result{{"cycle", a.cycle},
                                {"cycle_length", L},
                                {"traded_period", traded_slot},
                                {"sigma_cents", sigma},
                                {"imbalances", imbalances},
                                {"suppliers", suppliers},
                                {"bills", bills},
                                {"verification", {{"verdict", mismatches ? "fail" : "pass"}, {"mismatches", mismatches}}}};
    if (a.out.empty()) {
      out << result.dump(2) << "\n";
    } else {
      auction::write_json_file(a.out, result);
    }
    log.info("billed " + std::to_string(users.size()) + " users over " + std::to_string(L) + " periods; oracle " +
             (mismatches ? "mismatch" : "match"));
    return mismatches ? kVerifyFailed : kOk;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed clearance report: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    return error_exit(e, err);
  }
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> sizes{100, 500, 1000};
  std::size_t repeat = 10;
  u64 seed = 1;
  std::string out;
  std::string config;
};

struct BenchRow {
  std::size_t bids = 0;
  double rounds = 0;
  double comparisons = 0;
  double cpu_seconds = 0;
  double online_seconds = 0;
};

inline std::vector<BenchRow> bench(const BenchArgs& a, const Log& log) {
  if (a.repeat == 0) throw ConfigError("--repeat must be at least 1");
  std::vector<BenchRow> rows;
  for (std::size_t n : a.sizes) {
    BenchRow row;
    row.bids = n;
    for (std::size_t r = 0; r < a.repeat; ++r) {
      scenario::ScenarioConfig sc;
      if (!a.config.empty()) sc = scenario::config_from_json(auction::read_json_file(a.config));
      sc.n_users = n;
      sc.seed = a.seed + r;
      auction::RunOptions o;
      o.auction.n_suppliers = sc.n_suppliers;
      o.auction.seed = a.seed + r;
      const auction::RunReport rep = auction::run_local(scenario::generate(sc).bids, o);
      row.rounds += static_cast<double>(rep.totals.rounds);
      row.comparisons += static_cast<double>(rep.totals.comparisons);
      row.cpu_seconds += rep.offline_seconds + rep.online_seconds;
      row.online_seconds += rep.online_seconds;
      log.debug("bench n=" + std::to_string(n) + " run " + std::to_string(r + 1) + ": " +
                std::to_string(rep.totals.comparisons) + " comparisons");
    }
    const double k = static_cast<double>(a.repeat);
    row.rounds /= k;
    row.comparisons /= k;
    row.cpu_seconds /= k;
    row.online_seconds /= k;
    log.info("bench n=" + std::to_string(n) + " done");
    rows.push_back(row);
  }
  return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream s;
  s << "bids,rounds,comparisons,cpu_seconds,online_seconds\n";
  s << std::fixed;
  for (const auto& r : rows) {
    s << r.bids << "," << std::setprecision(1) << r.rounds << "," << r.comparisons << "," << std::setprecision(3)
      << r.cpu_seconds << "," << r.online_seconds << "\n";
  }
  return s.str();
}

inline int bench_run(const BenchArgs& a, const Log& log, std::ostream& out, std::ostream& err) {
  try {
    const auto rows = bench(a, log);
    const std::string csv = bench_csv(rows);
    if (a.out.empty()) {
      out << csv;
    } else {
      std::ofstream f(a.out);
      if (!f) throw ConfigError("cannot write " + a.out);
      f << csv;
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(3) << "growth " << rows[i - 1].bids << " -> " << rows[i].bids
        << ": comparisons x" << rows[i].comparisons / rows[i - 1].comparisons << ", rounds x"
        << rows[i].rounds / rows[i - 1].rounds;
      log.info(s.str());
    }
    return kOk;
  } catch (const std::exception& e) {
    return error_exit(e, err);
  }
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const Log log(err);
  CLI::App app{"Three-party local electricity market: scenario generation, sealed-bid clearance, masked billing"};
  app.require_subcommand(1);

  ScenarioArgs sa;
  CLI::App* scen = app.add_subcommand("scenario", "Synthetic bid populations");
  scen->require_subcommand(1);
  CLI::App* gen = scen->add_subcommand("generate", "Write a bid file and its ground-truth sidecar");
  gen->add_option("--users", sa.users, "Number of households")->required();
  gen->add_option("--seed", sa.seed, "Random seed");
  gen->add_option("--out", sa.out, "Bid file")->required();
  gen->add_option("--truth", sa.truth, "Ground-truth file (default: <out>.truth.json)");
  gen->add_option("--config", sa.config, "Scenario config JSON")->check(CLI::ExistingFile);

  AuctionArgs aa;
  CLI::App* auc = app.add_subcommand("auction", "Sealed-bid clearance");
  auc->require_subcommand(1);
  CLI::App* arun = auc->add_subcommand("run", "Run one trading period end to end");
  arun->add_option("--bids", aa.bids, "Bid file")->required();
  arun->add_option("--transport", aa.transport, "memory or tcp")->check(CLI::IsMember({"memory", "tcp"}));
  arun->add_option("--report", aa.report, "Report file")->required();
  arun->add_option("--config", aa.config, "Run config JSON (field parameters, auction settings)");
  arun->add_option("--endpoints", aa.endpoints, "Endpoint config JSON for the tcp transport");
  arun->add_option("--suppliers", aa.suppliers, "Number of suppliers");
  arun->add_option("--seed", aa.seed, "Evaluator and dealer seed");
  arun->add_option("--period", aa.period, "Trading period index");
  arun->add_option("--max-bids", aa.max_bids, "Public upper bound on the number of bids");
  arun->add_option("--transcript-dir", aa.transcript_dir, "Write per-evaluator transcripts here");
  arun->add_flag("--verify", aa.verify, "Check the outcome against the plaintext reference");
  arun->add_flag("--demand-aggregates", aa.demand_aggregates, "Also send suppliers their accepted demand volume");
  arun->add_flag("--omit-timing", aa.omit_timing, "Zero the wall-clock fields");

  BillingArgs ba;
  CLI::App* bil = app.add_subcommand("billing", "Masked monthly billing");
  bil->require_subcommand(1);
  CLI::App* brun = bil->add_subcommand("run", "Bill every user of a scenario for one cycle");
  brun->add_option("--ground-truth", ba.ground_truth, "Ground-truth file")->required();
  brun->add_option("--clearance", ba.clearance, "Auction report")->required();
  brun->add_option("--cycle-length", ba.cycle_length, "Periods per billing cycle")->check(CLI::PositiveNumber);
  brun->add_option("--cycle", ba.cycle, "Billing cycle index");
  brun->add_option("--seed", ba.seed, "Mask seed");
  brun->add_option("--out", ba.out, "Bill file (default: stdout)");

  BenchArgs bn;
  CLI::App* ben = app.add_subcommand("bench", "Average metrics per market size (CSV)");
  ben->add_option("--sizes", bn.sizes, "Comma-separated bid counts")->delimiter(',');
  ben->add_option("--repeat", bn.repeat, "Runs per size");
  ben->add_option("--seed", bn.seed, "First seed");
  ben->add_option("--config", bn.config, "Scenario config JSON");
  ben->add_option("--out", bn.out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed()) return scenario_generate(sa, log);
    if (arun->parsed()) return auction_run(aa, log, err);
    if (brun->parsed()) return billing_run(ba, log, out, err);
    if (ben->parsed()) return bench_run(bn, log, out, err);
  } catch (const std::exception& e) {
    return error_exit(e, err);
  }
  return kConfig;
}

}  // namespace lem::cli
