#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lem/abb/party.hpp"
#include "lem/error.hpp"
#include "lem/field.hpp"

namespace lem::auction {

/// Plaintext bid as held by its dealer (smart meter).
struct Bid {
  u64 bid_id = 0;
  u64 q_wh = 0;
  u64 price_cents = 0;
  bool is_demand = false;
  std::uint32_t supplier_id = 1;  // 1-based
  std::uint32_t dealer_id = 0;    // 0 means "same as bid_id"

  std::uint32_t dealer() const { return dealer_id ? dealer_id : static_cast<std::uint32_t>(bid_id); }

  friend bool operator==(const Bid&, const Bid&) = default;
};

/// Non-participation sentinels: zero volume at the price extremes.
inline Bid supply_sentinel(u64 bid_id, const FieldParams& p, std::uint32_t supplier = 1) {
  return Bid{bid_id, 0, p.top(), false, supplier, 0};
}

inline Bid demand_sentinel(u64 bid_id, std::uint32_t supplier = 1) { return Bid{bid_id, 0, 0, true, supplier, 0}; }

// Column layout of a shared bid table: q, p, d, b, then one column per
// supplier holding the one-hot flag.
namespace col {
inline constexpr std::size_t kQ = 0;
inline constexpr std::size_t kP = 1;
inline constexpr std::size_t kD = 2;
inline constexpr std::size_t kB = 3;
inline constexpr std::size_t kS0 = 4;
}  // namespace col

inline std::size_t bid_width(std::uint32_t n_suppliers) { return col::kS0 + n_suppliers; }

/// Dealer-side range guard. Plaintext only; evaluators never see these values.
inline void validate_bid(const Bid& b, const FieldParams& p, std::uint32_t n_suppliers) {
  const std::string who = "bid " + std::to_string(b.bid_id) + ": ";
  if (b.bid_id == 0 || b.bid_id > p.top()) throw EncodingError(who + "identifier must be in [1, 2^k)");
  if (b.q_wh > p.top()) throw EncodingError(who + "volume exceeds the k-bit budget");
  if (b.price_cents > p.top()) throw EncodingError(who + "price exceeds the sentinel");
  if (b.supplier_id < 1 || b.supplier_id > n_suppliers) {
    throw EncodingError(who + "supplier " + std::to_string(b.supplier_id) + " is not in 1.." +
                        std::to_string(n_suppliers));
  }
}

/// The 4 + |S| field values a dealer shares for one bid.
inline std::vector<Fe> bid_vector(const Bid& b, std::uint32_t n_suppliers) {
  std::vector<Fe> v(bid_width(n_suppliers), Fe{0});
  v[col::kQ] = Fe{b.q_wh};
  v[col::kP] = Fe{b.price_cents};
  v[col::kD] = Fe{b.is_demand ? 1u : 0u};
  v[col::kB] = Fe{b.bid_id};
  v[col::kS0 + b.supplier_id - 1] = Fe{1};
  return v;
}

// ---------------------------------------------------------------------------
// JSON: {bid_id, q_wh, price_cents, is_demand, supplier_id[, dealer_id]}.

inline nlohmann::json to_json(const Bid& b) {
  nlohmann::json j{{"bid_id", b.bid_id},
                   {"q_wh", b.q_wh},
                   {"price_cents", b.price_cents},
                   {"is_demand", b.is_demand},
                   {"supplier_id", b.supplier_id}};
  if (b.dealer_id) j["dealer_id"] = b.dealer_id;
  return j;
}

inline Bid bid_from_json(const nlohmann::json& j) {
  try {
    Bid b;
    b.bid_id = j.at("bid_id").get<u64>();
    b.q_wh = j.at("q_wh").get<u64>();
    b.price_cents = j.at("price_cents").get<u64>();
    b.is_demand = j.at("is_demand").get<bool>();
    b.supplier_id = j.at("supplier_id").get<std::uint32_t>();
    b.dealer_id = j.value("dealer_id", std::uint32_t{0});
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed bid record: ") + e.what());
  }
}

inline nlohmann::json bids_to_json(const std::vector<Bid>& bids) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : bids) arr.push_back(to_json(b));
  return arr;
}

inline std::vector<Bid> bids_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() && j.contains("bids") ? j.at("bids") : j;
  if (!arr.is_array()) throw ConfigError("bid file must hold a JSON array of bids");
  std::vector<Bid> out;
  for (const auto& rec : arr) out.push_back(bid_from_json(rec));
  return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline std::vector<Bid> load_bids(const std::string& path) { return bids_from_json(read_json_file(path)); }

}  // namespace lem::auction
