#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lem/error.hpp"
#include "lem/net/message.hpp"

namespace lem::net {

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Maps logical roles to stations (processes/listeners). Evaluators each own
/// a station; dealers and suppliers default to the shared "gateway" station
/// unless listed individually. Also carries the public registration of bid
/// identifiers to the dealers that submitted them.
class RoleRegistry {
 public:
  static constexpr const char* kGateway = "gateway";

  static std::string evaluator_station(int index) { return "evaluator#" + std::to_string(index); }

  RoleRegistry() {
    for (int i = 1; i <= 3; ++i) addresses_[evaluator_station(i)] = Address{};
    addresses_[kGateway] = Address{};
  }

  std::string station_of(NodeId n) const {
    if (n.role == Role::kEvaluator) {
      if (n.id < 1 || n.id > 3) throw ConfigError("registry: evaluator index must be 1..3, got " + std::to_string(n.id));
      return evaluator_station(static_cast<int>(n.id));
    }
    auto it = overrides_.find(n);
    return it == overrides_.end() ? std::string(kGateway) : it->second;
  }

  void place(NodeId n, const std::string& station) { overrides_[n] = station; }

  void set_address(const std::string& station, Address a) { addresses_[station] = std::move(a); }

  const Address& address(const std::string& station) const {
    auto it = addresses_.find(station);
    if (it == addresses_.end()) throw ConfigError("registry: no address for station " + station);
    return it->second;
  }

  std::vector<std::string> stations() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : addresses_) out.push_back(k);
    return out;
  }

  void register_bid(std::uint64_t bid_id, std::uint32_t dealer) {
    if (!bid_owner_.emplace(bid_id, dealer).second) {
      throw ConfigError("registry: bid id " + std::to_string(bid_id) + " registered twice");
    }
  }

  std::optional<std::uint32_t> dealer_of_bid(std::uint64_t bid_id) const {
    auto it = bid_owner_.find(bid_id);
    if (it == bid_owner_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::uint64_t, std::uint32_t>& bid_owners() const { return bid_owner_; }

  /// Endpoint config: [{"role": "evaluator", "id": 1, "host": "...", "port": 7001}, ...].
  /// Role "gateway" (id ignored) sets the default station for dealers and
  /// suppliers; "dealer"/"supplier" records give one output party its own
  /// station.
  static RoleRegistry from_json(const nlohmann::json& j) {
    RoleRegistry reg;
    if (!j.is_array()) throw ConfigError("endpoint config must be a JSON array");
    for (const auto& rec : j) {
      const std::string role = rec.at("role").get<std::string>();
      Address a{rec.value("host", std::string("127.0.0.1")), rec.at("port").get<std::uint16_t>()};
      if (role == "evaluator") {
        const int id = rec.at("id").get<int>();
        if (id < 1 || id > 3) throw ConfigError("endpoint config: evaluator id must be 1..3");
        reg.set_address(evaluator_station(id), a);
      } else if (role == "gateway") {
        reg.set_address(kGateway, a);
      } else if (role == "dealer" || role == "supplier") {
        const auto id = rec.at("id").get<std::uint32_t>();
        const NodeId n{role == "dealer" ? Role::kDealer : Role::kSupplier, id};
        const std::string station = n.str();
        reg.set_address(station, a);
        reg.place(n, station);
      } else {
        throw ConfigError("endpoint config: unknown role '" + role + "'");
      }
    }
    return reg;
  }

  static RoleRegistry load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open endpoint config " + path);
    nlohmann::json j;
    try {
      in >> j;
      return from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("endpoint config " + path + ": " + e.what());
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 1; i <= 3; ++i) {
      const Address& a = address(evaluator_station(i));
      out.push_back({{"role", "evaluator"}, {"id", i}, {"host", a.host}, {"port", a.port}});
    }
    const Address& g = address(kGateway);
    out.push_back({{"role", "gateway"}, {"id", 0}, {"host", g.host}, {"port", g.port}});
    for (const auto& [node, station] : overrides_) {
      const Address& a = address(station);
      out.push_back({{"role", role_name(node.role)}, {"id", node.id}, {"host", a.host}, {"port", a.port}});
    }
    return out;
  }

 private:
  std::map<std::string, Address> addresses_;
  std::map<NodeId, std::string> overrides_;
  std::map<std::uint64_t, std::uint32_t> bid_owner_;
};

}  // namespace lem::net
