#pragma once

// Run configuration file:
// {"field": {"modulus": "9223372036854775783", "k": 20, "kappa": 40, "sum_bits": 22},
//  "auction": {"n_suppliers": 10, "seed": 1, "session": 1, "period": 0, "max_bids": 0,
//              "pool_factor": 1.5, "demand_aggregates": false, "timeout_ms": 30000,
//              "supplier_retries": 3}}
// Every key is optional.

#include <string>

#include <nlohmann/json.hpp>

#include "lem/auction/protocol.hpp"
#include "lem/error.hpp"
#include "lem/field.hpp"

namespace lem::config {

inline nlohmann::json to_json(const FieldParams& p) {
  return {{"modulus", std::to_string(p.modulus)}, {"k", p.value_bits}, {"kappa", p.stat_sec}, {"sum_bits", p.sum_bits}};
}

inline FieldParams field_from_json(const nlohmann::json& j) {
  FieldParams p;
  try {
    if (j.contains("modulus")) {
      const std::string m = j.at("modulus").is_string() ? j.at("modulus").get<std::string>()
                                                        : std::to_string(j.at("modulus").get<u64>());
      std::size_t used = 0;
      p.modulus = std::stoull(m, &used);
      if (used != m.size()) throw ConfigError("field modulus '" + m + "' is not a decimal integer");
    }
    p.value_bits = j.value("k", p.value_bits);
    p.stat_sec = j.value("kappa", p.stat_sec);
    p.sum_bits = j.value("sum_bits", p.sum_bits);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field params: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("field modulus: ") + e.what());
  }
  p.validate();
  return p;
}

inline nlohmann::json to_json(const auction::AuctionConfig& c) {
  return {{"field", to_json(c.params)},
          {"auction",
           {{"n_suppliers", c.n_suppliers},
            {"seed", c.seed},
            {"session", c.session},
            {"period", c.period},
            {"max_bids", c.max_bids},
            {"pool_factor", c.pool_factor},
            {"demand_aggregates", c.demand_aggregates},
            {"timeout_ms", c.timeout.count()},
            {"supplier_retries", c.supplier_retries}}}};
}

inline auction::AuctionConfig auction_from_json(const nlohmann::json& j) {
  auction::AuctionConfig c;
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  if (j.contains("field")) c.params = field_from_json(j.at("field"));
  try {
    const nlohmann::json a = j.value("auction", nlohmann::json::object());
    c.n_suppliers = a.value("n_suppliers", c.n_suppliers);
    c.seed = a.value("seed", c.seed);
    c.session = a.value("session", c.session);
    c.period = a.value("period", c.period);
    c.max_bids = a.value("max_bids", c.max_bids);
    c.pool_factor = a.value("pool_factor", c.pool_factor);
    c.demand_aggregates = a.value("demand_aggregates", c.demand_aggregates);
    c.timeout = std::chrono::milliseconds(a.value("timeout_ms", static_cast<long long>(c.timeout.count())));
    c.supplier_retries = a.value("supplier_retries", c.supplier_retries);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (c.n_suppliers < 1) throw ConfigError("run config: n_suppliers must be at least 1");
  if (!(c.pool_factor >= 1.0)) throw ConfigError("run config: pool_factor must be at least 1");
  return c;
}

}  // namespace lem::config
