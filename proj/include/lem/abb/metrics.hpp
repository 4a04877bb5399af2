#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace lem::abb {

struct Counters {
  std::uint64_t rounds = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t multiplications = 0;    // Product invocations by protocol scripts
  std::uint64_t internal_products = 0;  // products inside comparison / bit generation
  std::uint64_t bytes_sent = 0;
  std::uint64_t random_bits = 0;        // pool bits consumed (online) or produced (offline)

  Counters& operator+=(const Counters& o) {
    rounds += o.rounds;
    comparisons += o.comparisons;
    multiplications += o.multiplications;
    internal_products += o.internal_products;
    bytes_sent += o.bytes_sent;
    random_bits += o.random_bits;
    return *this;
  }

  friend bool operator==(const Counters&, const Counters&) = default;
};

inline nlohmann::json to_json(const Counters& c) {
  return {{"rounds", c.rounds},
          {"comparisons", c.comparisons},
          {"multiplications", c.multiplications},
          {"internal_products", c.internal_products},
          {"bytes_sent", c.bytes_sent},
          {"random_bits", c.random_bits}};
}

/// Per-phase counters of one party. Rounds and byte counts are per party;
/// comparisons and multiplications count elementwise primitive calls.
class Metrics {
 public:
  void set_phase(std::string phase) {
    phase_ = std::move(phase);
    if (!phases_.count(phase_)) order_.push_back(phase_);
    phases_[phase_];
  }
  const std::string& phase() const { return phase_; }

  Counters& now() { return phases_[phase_]; }

  const Counters& at(const std::string& phase) const {
    static const Counters empty;
    auto it = phases_.find(phase);
    return it == phases_.end() ? empty : it->second;
  }

  Counters total() const {
    Counters t;
    for (const auto& [k, v] : phases_) t += v;
    return t;
  }

  const std::vector<std::string>& phase_order() const { return order_; }

  struct Invocation {
    std::string phase;
    std::string key;  // cost-table entry that prices the call
    std::uint64_t elements = 0;

    friend bool operator==(const Invocation&, const Invocation&) = default;
  };

  /// Primitive invocation log: one entry per round-consuming call.
  void log(std::string key, std::uint64_t elements = 0) { log_.push_back({phase_, std::move(key), elements}); }
  const std::vector<Invocation>& invocations() const { return log_; }

  double offline_seconds = 0;
  double online_seconds = 0;

 private:
  std::string phase_ = "setup";
  std::map<std::string, Counters> phases_{{"setup", {}}};
  std::vector<std::string> order_{"setup"};
  std::vector<Invocation> log_;
};

}  // namespace lem::abb
