#pragma once

// Synthetic bid populations for one 30-minute trading slot: household
// consumption, rooftop PV output for a fraction of users, and a bid price
// picked from a range that depends on how much a user has to sell or buy.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lem/auction/bid.hpp"
#include "lem/error.hpp"
#include "lem/field.hpp"
#include "lem/random.hpp"

namespace lem::scenario {

using auction::Bid;

struct ScenarioConfig {
  std::size_t n_users = 100;
  double pv_fraction = 0.30;
  std::vector<double> pv_capacities_kw{2.3, 3.6, 4.7};
  double pv_efficiency = 0.8166;
  double consumption_mean_kw = 0.637;
  double consumption_std = 0.20;
  double generation_std = 0.20;
  std::uint32_t n_suppliers = 10;
  u64 retail_sell = 20;  // cents/kWh
  u64 retail_buy = 4;    // cents/kWh
  double slot_minutes = 30;
  // Nine overlapping price ranges in cents/kWh. Ranges 2 and 7 are the
  // published ones; the others fill the gaps.
  std::vector<std::vector<u64>> price_ranges{{6, 7, 8},     {4, 5, 6},       {8, 9, 10},
                                             {9, 10, 11, 12}, {11, 12, 13},   {13, 14, 15},
                                             {17, 18, 19, 20}, {14, 15, 16, 17}, {16, 17, 18}};
  u64 seed = 1;

  void validate() const {
    if (pv_fraction < 0 || pv_fraction > 1) throw ConfigError("pv_fraction must lie in [0, 1]");
    if (retail_buy >= retail_sell) throw ConfigError("retail_buy must be below retail_sell");
    if (pv_capacities_kw.empty()) throw ConfigError("at least one PV capacity is required");
    if (n_suppliers < 1) throw ConfigError("at least one supplier is required");
    if (consumption_std < 0 || generation_std < 0 || slot_minutes <= 0) {
      throw ConfigError("standard deviations must be non-negative and the slot positive");
    }
    if (price_ranges.empty()) throw ConfigError("at least one price range is required");
    std::vector<bool> covered(retail_sell - retail_buy + 1, false);
    for (const auto& r : price_ranges) {
      if (r.empty()) throw ConfigError("empty price range");
      for (u64 p : r) {
        if (p < retail_buy || p > retail_sell) {
          throw ConfigError("price " + std::to_string(p) + " lies outside [retail_buy, retail_sell]");
        }
        covered[p - retail_buy] = true;
      }
    }
    if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
      throw ConfigError("price ranges must cover every price from retail_buy to retail_sell");
    }
  }
};

/// Plaintext truth per user, kept by the meter and used for billing.
struct GroundTruth {
  u64 user_id = 0;
  std::uint32_t supplier_id = 1;
  double pv_capacity_kw = 0;  // 0 without PV
  double consumption_kw = 0;
  double generation_kw = 0;
  u64 import_wh = 0;
  u64 export_wh = 0;
  u64 bid_id = 0;
};

struct Scenario {
  std::vector<Bid> bids;
  std::vector<GroundTruth> truth;
};

/// Ranges ordered by mean price; the quartile of a user's excess picks a
/// group of adjacent ranges and one range is drawn from it.
inline std::vector<std::vector<u64>> ranges_by_price(const ScenarioConfig& c) {
  std::vector<std::vector<u64>> r = c.price_ranges;
  auto mean = [](const std::vector<u64>& v) {
    return static_cast<double>(std::accumulate(v.begin(), v.end(), u64{0})) / static_cast<double>(v.size());
  };
  std::stable_sort(r.begin(), r.end(), [&](const auto& a, const auto& b) { return mean(a) < mean(b); });
  return r;
}

/// Ranges available to a user whose excess magnitude falls in quartile q
/// (0 = smallest). Large sellers get the cheap end, large buyers the dear end.
inline std::pair<std::size_t, std::size_t> range_group(std::size_t n_ranges, int quartile, bool is_demand) {
  const int tier = is_demand ? quartile : 3 - quartile;  // 0 = cheapest group
  const std::size_t lo = n_ranges * static_cast<std::size_t>(tier) / 4;
  const std::size_t hi = std::max(lo + 1, n_ranges * static_cast<std::size_t>(tier + 1) / 4);
  return {lo, hi};
}

/// Quartile of each value among its peers: 0..3 by empirical rank.
inline std::vector<int> quartiles(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<int> q(v.size());
  for (std::size_t r = 0; r < idx.size(); ++r) q[idx[r]] = static_cast<int>(4 * r / idx.size());
  return q;
}

inline Scenario generate(const ScenarioConfig& c) {
  c.validate();
  Scenario s;
  const FieldParams params;
  const FixedPoint wh = units::watt_hours(params);
  std::vector<double> excess(c.n_users);
  for (std::size_t i = 0; i < c.n_users; ++i) {
    const u64 uid = i + 1;
    Rng rng(c.seed, "user", uid);
    std::normal_distribution<double> cons(c.consumption_mean_kw, c.consumption_std);
    std::bernoulli_distribution has_pv(c.pv_fraction);
    GroundTruth g;
    g.user_id = uid;
    g.bid_id = uid;
    g.supplier_id = static_cast<std::uint32_t>(rng.below(c.n_suppliers)) + 1;
    g.consumption_kw = std::max(0.0, cons(rng));
    if (has_pv(rng)) {
      g.pv_capacity_kw = c.pv_capacities_kw[rng.below(c.pv_capacities_kw.size())];
      std::normal_distribution<double> gen(g.pv_capacity_kw * c.pv_efficiency, c.generation_std);
      g.generation_kw = std::max(0.0, gen(rng));
    }
    excess[i] = g.generation_kw - g.consumption_kw;
    const u64 q = wh.to_units(units::slot_wh(std::fabs(excess[i]), c.slot_minutes));
    (excess[i] > 0 ? g.export_wh : g.import_wh) = q;
    s.truth.push_back(g);
  }

  std::vector<double> sell, buy;
  for (double e : excess) (e > 0 ? sell : buy).push_back(std::fabs(e));
  const std::vector<int> q_sell = quartiles(sell), q_buy = quartiles(buy);
  const auto ranges = ranges_by_price(c);
  std::size_t si = 0, bi = 0;
  for (std::size_t i = 0; i < c.n_users; ++i) {
    const GroundTruth& g = s.truth[i];
    const bool demand = !(excess[i] > 0);
    const int quartile = demand ? q_buy[bi++] : q_sell[si++];
    Rng rng(c.seed, "price", g.user_id);
    const auto [lo, hi] = range_group(ranges.size(), quartile, demand);
    const auto& range = ranges[lo + rng.below(hi - lo)];
    const u64 price = range[rng.below(range.size())];
    s.bids.push_back({g.bid_id, demand ? g.import_wh : g.export_wh, price, demand, g.supplier_id, 0});
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON.

inline nlohmann::json to_json(const ScenarioConfig& c) {
  return {{"n_users", c.n_users},
          {"pv_fraction", c.pv_fraction},
          {"pv_capacities_kw", c.pv_capacities_kw},
          {"pv_efficiency", c.pv_efficiency},
          {"consumption_mean_kw", c.consumption_mean_kw},
          {"consumption_std", c.consumption_std},
          {"generation_std", c.generation_std},
          {"n_suppliers", c.n_suppliers},
          {"retail_sell", c.retail_sell},
          {"retail_buy", c.retail_buy},
          {"slot_minutes", c.slot_minutes},
          {"price_ranges", c.price_ranges},
          {"seed", c.seed}};
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c.n_users = j.value("n_users", c.n_users);
    c.pv_fraction = j.value("pv_fraction", c.pv_fraction);
    c.pv_capacities_kw = j.value("pv_capacities_kw", c.pv_capacities_kw);
    c.pv_efficiency = j.value("pv_efficiency", c.pv_efficiency);
    c.consumption_mean_kw = j.value("consumption_mean_kw", c.consumption_mean_kw);
    c.consumption_std = j.value("consumption_std", c.consumption_std);
    c.generation_std = j.value("generation_std", c.generation_std);
    c.n_suppliers = j.value("n_suppliers", c.n_suppliers);
    c.retail_sell = j.value("retail_sell", c.retail_sell);
    c.retail_buy = j.value("retail_buy", c.retail_buy);
    c.slot_minutes = j.value("slot_minutes", c.slot_minutes);
    c.price_ranges = j.value("price_ranges", c.price_ranges);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const GroundTruth& g) {
  return {{"user_id", g.user_id},         {"supplier_id", g.supplier_id},
          {"pv_capacity_kw", g.pv_capacity_kw}, {"consumption_kw", g.consumption_kw},
          {"generation_kw", g.generation_kw},   {"import_wh", g.import_wh},
          {"export_wh", g.export_wh},           {"bid_id", g.bid_id}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth g;
    g.user_id = j.at("user_id").get<u64>();
    g.supplier_id = j.at("supplier_id").get<std::uint32_t>();
    g.pv_capacity_kw = j.value("pv_capacity_kw", 0.0);
    g.consumption_kw = j.value("consumption_kw", 0.0);
    g.generation_kw = j.value("generation_kw", 0.0);
    g.import_wh = j.at("import_wh").get<u64>();
    g.export_wh = j.at("export_wh").get<u64>();
    g.bid_id = j.at("bid_id").get<u64>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ground-truth record: ") + e.what());
  }
}

/// Sidecar: {"config": ..., "retail_sell", "retail_buy", "users": [...]}.
inline nlohmann::json truth_to_json(const ScenarioConfig& c, const std::vector<GroundTruth>& truth) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& g : truth) users.push_back(to_json(g));
  return {{"config", to_json(c)}, {"users", users}};
}

inline std::pair<ScenarioConfig, std::vector<GroundTruth>> truth_from_file_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("users")) throw ConfigError("ground-truth file needs a 'users' array");
  ScenarioConfig c = j.contains("config") ? config_from_json(j.at("config")) : ScenarioConfig{};
  std::vector<GroundTruth> out;
  for (const auto& u : j.at("users")) out.push_back(truth_from_json(u));
  return {c, out};
}

}  // namespace lem::scenario
