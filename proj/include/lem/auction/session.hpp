#pragma once

// One trading period with every role in a single process: the gateway deals
// bids on behalf of their meters, three evaluator threads run the clearance
// script, and the gateway collects the notifications addressed to dealers and
// suppliers it hosts.

#include <algorithm>
#include <array>
#include <chrono>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lem/abb/costs.hpp"
#include "lem/abb/local.hpp"
#include "lem/auction/protocol.hpp"
#include "lem/net/transport.hpp"
#include "lem/oracle.hpp"

namespace lem::auction {

enum class Backend { kMemory, kTcp };

struct RunOptions {
  AuctionConfig auction;
  Backend backend = Backend::kMemory;
  std::string host = "127.0.0.1";                // tcp backend: every station binds an ephemeral port here
  std::optional<net::RoleRegistry> endpoints;    // tcp backend: fixed evaluator and gateway addresses instead
  std::set<std::uint32_t> down_suppliers;        // memory backend: stations that never answer
  std::set<std::uint32_t> corrupt_dealers;       // dealers whose submission is sent truncated
  bool verify = false;                           // compare against the plaintext oracle; implies instrument
  bool omit_timing = false;                      // zero the wall-clock fields (byte-stable reports)
};

/// What a dealer reconstructs from the three notifications for its bid.
struct DealerView {
  u64 bid_id = 0;
  std::uint32_t dealer = 0;
  bool is_demand = false;
  u64 q_wh = 0;
  u64 price_cents = 0;
  bool accept_bit = false;  // A for this bid
  bool traded = false;      // supply: A = 1; demand: A = 0
  u64 sigma = 0;
};

struct SupplierView {
  std::uint32_t supplier_id = 0;
  u64 volume_wh = 0;
  u64 sigma = 0;
  std::optional<u64> demand_wh;
};

struct Rejected {
  u64 bid_id = 0;
  std::string reason;
};

struct PartyRecord {
  abb::Metrics metrics;
  std::vector<abb::TranscriptEntry> transcript;
  std::vector<std::uint8_t> transcript_bytes;
  EvaluatorOutput output;
};

struct Verification {
  bool pass = true;
  std::vector<std::string> mismatches;
  oracle::PlainClearance expected;
};

struct RunReport {
  u64 period = 0;
  std::size_t n_submitted = 0;
  std::size_t n_bids = 0;
  u64 sigma = 0;
  bool void_period = true;
  u64 phi = 0;
  bool phi_complete = true;
  std::vector<SupplierView> per_supplier;
  u64 accepted_demand_wh = 0;
  i64 overshoot = 0;
  std::vector<u64> accepted_supply_ids;
  std::vector<u64> accepted_demand_ids;
  std::vector<Rejected> rejected;
  std::vector<u64> excluded_ids;  // dealt but not admitted at intake
  std::vector<u64> dropped_ids;
  std::vector<std::uint32_t> unreachable_suppliers;
  std::vector<DealerView> dealers;

  abb::Counters totals;  // rounds, comparisons, multiplications from party 1; bytes over all parties
  double offline_seconds = 0;
  double online_seconds = 0;
  FieldParams params;
  int tiebreak_width = 1;
  std::size_t pool_bits = 0;

  std::array<PartyRecord, kParties> parties;
  std::optional<Verification> verification;
};

// ---------------------------------------------------------------------------

namespace detail {

/// Opens a degree-1 sharing held as one value per party, checking that the
/// three points lie on one line.
inline Fe open_triple(const Field& f, Fe s1, Fe s2, Fe s3, const std::string& what) {
  const Fe check = f.add(f.sub(s1, f.add(s2, s2)), s3);
  if (check.v != 0) throw ProtocolAbort("inconsistent shares for " + what);
  return f.sub(f.add(s1, s1), s2);
}

inline Column open_columns(const Field& f, const std::array<Column, kParties>& c, const std::string& what) {
  Column out(c[0].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = open_triple(f, c[0][i], c[1][i], c[2][i], what);
  return out;
}

inline std::vector<u64> sorted_ids(std::vector<u64> v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// Collects the root cause over evaluator and gateway errors: anything that
/// is not a forwarded abort wins.
inline void rethrow_root_cause(const std::vector<std::exception_ptr>& errors) {
  auto is_peer = [](const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const PeerAbort&) {
      return true;
    } catch (...) {
      return false;
    }
  };
  for (const auto& e : errors) {
    if (e && !is_peer(e)) std::rethrow_exception(e);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

class LocalSession {
 public:
  LocalSession(std::vector<Bid> bids, RunOptions opts) : bids_(std::move(bids)), opts_(std::move(opts)) {
    if (opts_.verify) opts_.auction.instrument = true;
  }

  RunReport run() {
    const AuctionConfig& cfg = opts_.auction;
    cfg.params.validate_modulus();
    if (cfg.n_suppliers < 1) throw ConfigError("at least one supplier is required");
    const Field field(cfg.params);

    report_.period = cfg.period;
    report_.params = cfg.params;
    report_.n_submitted = bids_.size();

    // Dealer-side validation and public registration.
    std::vector<Bid> valid;
    std::set<u64> seen;
    for (const Bid& b : bids_) {
      try {
        validate_bid(b, cfg.params, cfg.n_suppliers);
      } catch (const EncodingError& e) {
        report_.rejected.push_back({b.bid_id, e.what()});
        continue;
      }
      if (!seen.insert(b.bid_id).second) throw ConfigError("bid id " + std::to_string(b.bid_id) + " submitted twice");
      valid.push_back(b);
    }
    u64 volume = 0;
    for (const Bid& b : valid) volume += b.q_wh;
    if (volume >> cfg.params.sum_bits) {
      throw ConfigError("total bid volume " + std::to_string(volume) + " Wh does not fit the " +
                        std::to_string(cfg.params.sum_bits) + "-bit sum budget");
    }
    const std::size_t n_max = cfg.max_bids ? cfg.max_bids : valid.size();
    if (valid.size() > n_max) {
      throw ConfigError(std::to_string(valid.size()) + " bids exceed the public bound of " + std::to_string(n_max));
    }
    report_.tiebreak_width = tiebreak_bits(n_max);
    report_.pool_bits = pool_plan(n_max, cfg).bits;

    net::RoleRegistry reg;
    for (const Bid& b : valid) reg.register_bid(b.bid_id, b.dealer());
    for (std::uint32_t k : opts_.down_suppliers) {
      const net::NodeId n{net::Role::kSupplier, k};
      reg.set_address(n.str(), {opts_.host, 0});
      reg.place(n, n.str());
    }

    if (opts_.backend == Backend::kMemory) {
      net::MemoryHub hub(reg, cfg.session);
      for (std::uint32_t k : opts_.down_suppliers) hub.set_down(net::NodeId{net::Role::kSupplier, k}.str());
      net::MemoryTransport gateway(hub, net::RoleRegistry::kGateway);
      std::array<std::unique_ptr<net::Transport>, kParties> ev;
      for (int i = 1; i <= kParties; ++i) {
        ev[i - 1] = std::make_unique<net::MemoryTransport>(hub, net::RoleRegistry::evaluator_station(i));
      }
      execute(field, reg, gateway, ev, valid, n_max);
    } else {
      if (!opts_.down_suppliers.empty()) throw ConfigError("simulated supplier outages need the memory backend");
      for (const auto& s : reg.stations()) {
        reg.set_address(s, opts_.endpoints ? opts_.endpoints->address(s) : net::Address{opts_.host, 0});
      }
      auto gateway = std::make_unique<net::TcpTransport>(reg, net::RoleRegistry::kGateway, cfg.session);
      std::array<std::unique_ptr<net::TcpTransport>, kParties> tcp;
      for (int i = 1; i <= kParties; ++i) {
        tcp[i - 1] = std::make_unique<net::TcpTransport>(reg, net::RoleRegistry::evaluator_station(i), cfg.session);
      }
      auto bound = [&](const std::string& station, std::uint16_t port) {
        reg.set_address(station, {reg.address(station).host, port});
      };
      bound(net::RoleRegistry::kGateway, gateway->port());
      for (int i = 1; i <= kParties; ++i) bound(net::RoleRegistry::evaluator_station(i), tcp[i - 1]->port());
      gateway->update_registry(reg);
      std::array<std::unique_ptr<net::Transport>, kParties> ev;
      for (int i = 0; i < kParties; ++i) {
        tcp[i]->update_registry(reg);
        ev[i] = std::move(tcp[i]);
      }
      execute(field, reg, *gateway, ev, valid, n_max);
    }

    finish(valid);
    return std::move(report_);
  }

 private:
  void execute(const Field& field, const net::RoleRegistry& reg, net::Transport& gateway,
               std::array<std::unique_ptr<net::Transport>, kParties>& ev, const std::vector<Bid>& valid,
               std::size_t n_max) {
    const AuctionConfig& cfg = opts_.auction;
    std::vector<std::exception_ptr> errors(kParties + 1);
    std::array<std::thread, kParties> threads;
    for (int i = 1; i <= kParties; ++i) {
      threads[i - 1] = std::thread([&, i] {
        abb::PartyConfig pc;
        pc.params = cfg.params;
        pc.index = i;
        pc.seed = cfg.seed;
        pc.session = cfg.session;
        pc.timeout = cfg.timeout;
        pc.verify_bits = cfg.verify_bits;
        pc.record_transcript = cfg.record_transcript;
        pc.record_payloads = cfg.record_payloads;
        pc.bit_chunk = cfg.bit_chunk;
        std::optional<Party> party;
        try {
          party.emplace(pc, *ev[i - 1]);
          EvaluatorOutput out = run_evaluator(*party, cfg, reg, n_max);
          report_.parties[i - 1].output = std::move(out);
        } catch (const std::exception& e) {
          errors[i] = std::current_exception();
          if (party) {
            party->broadcast_abort(e.what());
          } else {
            abort_from(gateway, e.what());
          }
        }
        if (party) {
          report_.parties[i - 1].metrics = party->metrics();
          report_.parties[i - 1].transcript = party->transcript().entries();
          report_.parties[i - 1].transcript_bytes = party->transcript().serialize();
        }
      });
    }
    try {
      run_gateway(field, gateway, valid);
    } catch (const std::exception& e) {
      errors[0] = std::current_exception();
      abort_from(gateway, e.what());
    }
    for (auto& t : threads) t.join();
    detail::rethrow_root_cause({errors[1], errors[2], errors[3], errors[0]});
  }

  void abort_from(net::Transport& gateway, const std::string& reason) {
    for (int p = 1; p <= kParties; ++p) {
      net::Message m{opts_.auction.session, 0, kGatewayNode, net::evaluator(p), net::Op::kAbort, 0,
                     std::vector<std::uint8_t>(reason.begin(), reason.end())};
      try {
        gateway.send(m);
      } catch (const std::exception&) {
      }
    }
  }

  void run_gateway(const Field& field, net::Transport& gateway, const std::vector<Bid>& valid) {
    const AuctionConfig& cfg = opts_.auction;
    Rng rng(cfg.seed, "dealer", cfg.period);
    std::map<std::uint32_t, std::uint8_t> next_slot;
    std::map<std::pair<std::uint32_t, std::uint8_t>, const Bid*> by_slot;
    for (const Bid& b : valid) {
      const std::uint32_t dealer = b.dealer();
      const std::uint8_t slot = next_slot[dealer]++;
      by_slot[{dealer, slot}] = &b;
      const std::vector<Fe> v = bid_vector(b, cfg.n_suppliers);
      if (opts_.corrupt_dealers.count(dealer)) {
        for (int p = 1; p <= kParties; ++p) {
          net::Message m{cfg.session, 0, {net::Role::kDealer, dealer}, net::evaluator(p), net::Op::kBidInput, slot, {}};
          Party::encode_shares(m.payload, std::span<const Fe>(v.data(), v.size() - 1), static_cast<std::uint8_t>(p));
          gateway.send(m);
        }
      } else {
        abb::deal_input(gateway, field, cfg.session, {net::Role::kDealer, dealer}, slot, v, rng);
      }
    }
    for (int p = 1; p <= kParties; ++p) {
      gateway.send({cfg.session, 0, kGatewayNode, net::evaluator(p), net::Op::kSubmissionClosed, 0, {}});
    }

    // The evaluators' agreed intake lists must coincide.
    std::vector<detail::Submission> admitted;
    for (int p = 1; p <= kParties; ++p) {
      const net::Message m =
          gateway.inbox().wait({0, net::evaluator(p), kGatewayNode, net::Op::kIntake, 0}, cfg.timeout);
      auto list = detail::decode_submissions(m.payload, net::evaluator(p).str());
      if (p == 1) {
        admitted = std::move(list);
      } else if (list != admitted) {
        throw ProtocolAbort("evaluators disagree on the admitted bid set");
      }
    }
    std::set<u64> admitted_ids;
    for (const auto& key : admitted) {
      auto it = by_slot.find(key);
      if (it == by_slot.end()) throw ProtocolAbort("intake lists a submission that was never dealt");
      admitted_ids.insert(it->second->bid_id);
    }
    for (const Bid& b : valid) {
      if (!admitted_ids.count(b.bid_id)) report_.excluded_ids.push_back(b.bid_id);
    }

    // Dealer notifications: the full tuple, the accept bit and sigma.
    const std::size_t width = bid_width(cfg.n_suppliers) + 2;
    for (const Bid& b : valid) {
      if (!admitted_ids.count(b.bid_id)) continue;
      const net::NodeId dealer{net::Role::kDealer, b.dealer()};
      std::array<Column, kParties> rows;
      for (int p = 1; p <= kParties; ++p) {
        net::Message m = gateway.inbox().wait({b.bid_id, net::evaluator(p), dealer, net::Op::kNotifyUser, 0}, cfg.timeout);
        rows[p - 1] = decode(field, m.payload, width, static_cast<std::uint8_t>(p));
      }
      const Column row = detail::open_columns(field, rows, "bid " + std::to_string(b.bid_id));
      DealerView v;
      v.bid_id = row[col::kB].v;
      v.dealer = b.dealer();
      v.is_demand = row[col::kD].v == 1;
      v.q_wh = row[col::kQ].v;
      v.price_cents = row[col::kP].v;
      v.accept_bit = row[width - 2].v == 1;
      v.traded = v.is_demand ? !v.accept_bit : v.accept_bit;
      v.sigma = row[width - 1].v;
      if (v.bid_id != b.bid_id) throw ProtocolAbort("notification for bid " + std::to_string(b.bid_id) + " carries another tuple");
      report_.dealers.push_back(v);
    }

    // Supplier notifications for suppliers hosted here.
    const std::size_t sw = cfg.demand_aggregates ? 3 : 2;
    for (std::uint32_t k = 1; k <= cfg.n_suppliers; ++k) {
      if (opts_.down_suppliers.count(k)) continue;
      const net::NodeId sup{net::Role::kSupplier, k};
      std::array<Column, kParties> rows;
      for (int p = 1; p <= kParties; ++p) {
        net::Message m = gateway.inbox().wait({cfg.period, net::evaluator(p), sup, net::Op::kNotifySupplier, 0}, cfg.timeout);
        rows[p - 1] = decode(field, m.payload, sw, static_cast<std::uint8_t>(p));
      }
      const Column vals = detail::open_columns(field, rows, "supplier " + std::to_string(k));
      SupplierView s{k, vals[0].v, vals[1].v, std::nullopt};
      if (cfg.demand_aggregates) s.demand_wh = vals[2].v;
      report_.per_supplier.push_back(s);
    }
  }

  static Column decode(const Field& f, const std::vector<std::uint8_t>& payload, std::size_t count, std::uint8_t point) {
    if (payload.size() != count * shamir::kShareWireBytes) throw ProtocolAbort("malformed notification payload");
    Column out(count);
    for (std::size_t i = 0; i < count; ++i) {
      const Share s = shamir::get_share(std::span(payload).subspan(i * shamir::kShareWireBytes, shamir::kShareWireBytes), f);
      if (s.party != point || s.degree != 1) throw ProtocolAbort("notification share has the wrong evaluation point");
      out[i] = s.value;
    }
    return out;
  }

  void finish(const std::vector<Bid>& valid) {
    const AuctionConfig& cfg = opts_.auction;
    const Field field(cfg.params);
    const EvaluatorOutput& o1 = report_.parties[0].output;
    report_.n_bids = o1.n_bids;
    report_.sigma = o1.sigma;
    report_.void_period = report_.sigma == 0;
    report_.dropped_ids = o1.dropped_ids;
    report_.unreachable_suppliers = o1.unreachable_suppliers;

    for (const DealerView& v : report_.dealers) {
      if (v.sigma != report_.sigma) throw ProtocolAbort("dealer for bid " + std::to_string(v.bid_id) + " saw another price");
      if (!v.traded) continue;
      if (v.is_demand) {
        report_.accepted_demand_ids.push_back(v.bid_id);
        report_.accepted_demand_wh += v.q_wh;
      } else {
        report_.accepted_supply_ids.push_back(v.bid_id);
      }
    }
    report_.accepted_supply_ids = detail::sorted_ids(report_.accepted_supply_ids);
    report_.accepted_demand_ids = detail::sorted_ids(report_.accepted_demand_ids);
    report_.phi = 0;
    for (const SupplierView& s : report_.per_supplier) report_.phi += s.volume_wh;
    report_.phi_complete = report_.per_supplier.size() == cfg.n_suppliers;
    report_.overshoot = static_cast<i64>(report_.phi) - static_cast<i64>(report_.accepted_demand_wh);

    report_.totals = report_.parties[0].metrics.total();
    report_.totals.bytes_sent = 0;
    for (const auto& p : report_.parties) {
      report_.totals.bytes_sent += p.metrics.total().bytes_sent;
      report_.offline_seconds = std::max(report_.offline_seconds, p.metrics.offline_seconds);
      report_.online_seconds = std::max(report_.online_seconds, p.metrics.online_seconds);
    }
    if (opts_.omit_timing) {
      report_.offline_seconds = 0;
      report_.online_seconds = 0;
    }
    if (opts_.verify) verify(field, valid);
  }

  void verify(const Field& field, const std::vector<Bid>& valid) {
    const AuctionConfig& cfg = opts_.auction;
    Verification ver;
    auto fail = [&](std::string what) {
      ver.pass = false;
      ver.mismatches.push_back(std::move(what));
    };
    auto open = [&](auto member, const std::string& what) {
      std::array<Column, kParties> c;
      for (int p = 0; p < kParties; ++p) c[p] = report_.parties[p].output.snap.*member;
      return detail::open_columns(field, c, what);
    };

    std::map<u64, Bid> by_id;
    for (const Bid& b : valid) by_id[b.bid_id] = b;
    std::vector<Bid> order;
    for (Fe id : open(&Snapshot::first_order_ids, "first shuffle ids")) {
      auto it = by_id.find(id.v);
      if (it == by_id.end()) {
        fail("shuffled table holds unknown id " + std::to_string(id.v));
        continue;
      }
      order.push_back(it->second);
    }
    ver.expected = oracle::clear_ordered(order, cfg.n_suppliers);
    const oracle::PlainClearance& e = ver.expected;

    if (static_cast<i64>(report_.sigma) != e.sigma) fail("sigma");
    if (report_.phi_complete && static_cast<i64>(report_.phi) != e.phi) fail("phi");
    if (report_.accepted_supply_ids != e.accepted_supply_ids) fail("accepted supply ids");
    if (report_.accepted_demand_ids != e.accepted_demand_ids) fail("accepted demand ids");
    for (const SupplierView& s : report_.per_supplier) {
      if (static_cast<i64>(s.volume_wh) != e.per_supplier[s.supplier_id - 1]) {
        fail("supplier " + std::to_string(s.supplier_id) + " volume");
      }
      if (s.demand_wh && static_cast<i64>(*s.demand_wh) != e.demand_per_supplier[s.supplier_id - 1]) {
        fail("supplier " + std::to_string(s.supplier_id) + " demand volume");
      }
    }

    // Internal values, opened only here.
    const Column sorted = open(&Snapshot::sorted_ids, "sorted ids");
    const Column accept = open(&Snapshot::accept, "accept bits");
    const Column nu = open(&Snapshot::nu_trace, "nu trace");
    const Column sup = open(&Snapshot::accepted_supply, "accepted supply ids");
    const Column dem = open(&Snapshot::accepted_demand, "accepted demand ids");
    for (std::size_t j = 0; j < e.sorted.size(); ++j) {
      if (j >= sorted.size() || sorted[j].v != e.sorted[j].bid_id) {
        fail("sorted order at position " + std::to_string(j));
        break;
      }
    }
    for (std::size_t j = 0; j < e.accept.size() && j < accept.size(); ++j) {
      if (static_cast<int>(accept[j].v) != e.accept[j]) fail("accept bit " + std::to_string(j));
      if (static_cast<i64>(nu[j].v) != e.nu_trace[j]) fail("nu after bid " + std::to_string(j));
      const bool sup_expected = e.accept[j] && !e.sorted[j].is_demand;
      const bool dem_expected = !e.accept[j] && e.sorted[j].is_demand;
      if (sup[j].v != (sup_expected ? e.sorted[j].bid_id : 0)) fail("accepted supply entry " + std::to_string(j));
      if (dem[j].v != (dem_expected ? e.sorted[j].bid_id : 0)) fail("accepted demand entry " + std::to_string(j));
    }
    const auto snap_scalar = [&](Fe Snapshot::*m) {
      return detail::open_triple(field, report_.parties[0].output.snap.*m, report_.parties[1].output.snap.*m,
                                 report_.parties[2].output.snap.*m, "scalar");
    };
    if (static_cast<i64>(snap_scalar(&Snapshot::delta).v) != e.delta) fail("delta");
    if (static_cast<i64>(snap_scalar(&Snapshot::phi).v) != e.phi) fail("phi (shared)");
    if (static_cast<i64>(snap_scalar(&Snapshot::nu).v) != e.nu) fail("nu");
    report_.verification = std::move(ver);
  }

  std::vector<Bid> bids_;
  RunOptions opts_;
  RunReport report_;
};

inline RunReport run_local(std::vector<Bid> bids, RunOptions opts) { return LocalSession(std::move(bids), std::move(opts)).run(); }

// ---------------------------------------------------------------------------
// Report JSON.

inline nlohmann::json metrics_json(const RunReport& r) {
  return {{"rounds", r.totals.rounds},
          {"comparisons", r.totals.comparisons},
          {"multiplications", r.totals.multiplications},
          {"internal_products", r.totals.internal_products},
          {"bytes", r.totals.bytes_sent},
          {"random_bits", r.totals.random_bits},
          {"offline_seconds", r.offline_seconds},
          {"online_seconds", r.online_seconds}};
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json per_supplier = nlohmann::json::array();
  for (const SupplierView& s : r.per_supplier) {
    nlohmann::json j{{"supplier_id", s.supplier_id}, {"volume_wh", s.volume_wh}};
    if (s.demand_wh) j["demand_wh"] = *s.demand_wh;
    per_supplier.push_back(j);
  }
  nlohmann::json rejected = nlohmann::json::array();
  for (const Rejected& x : r.rejected) rejected.push_back({{"bid_id", x.bid_id}, {"reason", x.reason}});

  nlohmann::json phases = nlohmann::json::object();
  const abb::Metrics& m = r.parties[0].metrics;
  for (const std::string& ph : m.phase_order()) phases[ph] = abb::to_json(m.at(ph));

  nlohmann::json j{{"period", r.period},
                   {"n_submitted", r.n_submitted},
                   {"n_bids", r.n_bids},
                   {"sigma_cents", r.sigma},
                   {"void", r.void_period},
                   {"phi_wh", r.phi},
                   {"phi_complete", r.phi_complete},
                   {"per_supplier", per_supplier},
                   {"accepted_demand_wh", r.accepted_demand_wh},
                   {"overshoot_wh", r.overshoot},
                   {"accepted_supply_ids", r.accepted_supply_ids},
                   {"accepted_demand_ids", r.accepted_demand_ids},
                   {"rejected", rejected},
                   {"excluded_ids", r.excluded_ids},
                   {"dropped_ids", r.dropped_ids},
                   {"unreachable_suppliers", r.unreachable_suppliers},
                   {"metrics", metrics_json(r)},
                   {"phases", phases},
                   {"pool_bits", r.pool_bits},
                   {"cost_table", abb::costs::table_json(r.params, r.tiebreak_width)}};
  if (r.verification) {
    j["verification"] = {{"verdict", r.verification->pass ? "pass" : "fail"},
                         {"mismatches", r.verification->mismatches}};
  }
  return j;
}

}  // namespace lem::auction
