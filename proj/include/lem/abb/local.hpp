#pragma once

// Three parties in one process over the in-memory hub. Each run() call
// executes the same script on all three parties in their own threads.

#include <array>
#include <exception>
#include <memory>
#include <optional>
#include <thread>
#include <type_traits>

#include "lem/abb/party.hpp"
#include "lem/net/transport.hpp"

namespace lem::abb {

/// Sends one dealer's shares of `values` to the three evaluators.
inline std::size_t deal_input(net::Transport& t, const Field& f, u64 session, net::NodeId dealer, std::uint8_t slot,
                              std::span<const Fe> values, Rng& rng) {
  std::array<Column, kParties + 1> cols;
  for (int p = 1; p <= kParties; ++p) cols[p].resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto sh = shamir::share(f, values[i], rng);
    for (int p = 1; p <= kParties; ++p) cols[p][i] = sh[p - 1].value;
  }
  std::size_t bytes = 0;
  for (int p = 1; p <= kParties; ++p) {
    net::Message m{session, 0, dealer, net::evaluator(p), net::Op::kBidInput, slot, {}};
    Party::encode_shares(m.payload, cols[p], static_cast<std::uint8_t>(p));
    bytes += t.send(m);
  }
  return bytes;
}

class LocalTrio {
 public:
  explicit LocalTrio(PartyConfig base, net::RoleRegistry registry = {})
      : hub_(std::move(registry), base.session), gateway_(hub_, net::RoleRegistry::kGateway) {
    for (int i = 1; i <= kParties; ++i) {
      transports_[i - 1] = std::make_unique<net::MemoryTransport>(hub_, net::RoleRegistry::evaluator_station(i));
      PartyConfig cfg = base;
      cfg.index = i;
      parties_[i - 1] = std::make_unique<Party>(cfg, *transports_[i - 1]);
    }
  }

  net::MemoryHub& hub() { return hub_; }
  net::Transport& gateway() { return gateway_; }
  Party& party(int index) { return *parties_[index - 1]; }

  /// Runs fn(Party&) on every party concurrently. If any party throws, the
  /// others are told to abort and the first exception is rethrown.
  template <typename Fn>
  auto run(Fn fn) {
    using R = std::invoke_result_t<Fn, Party&>;
    constexpr bool kVoid = std::is_void_v<R>;
    using Slot = std::conditional_t<kVoid, bool, std::optional<R>>;
    std::array<Slot, kParties> results{};
    std::array<std::exception_ptr, kParties> errors{};
    std::array<std::thread, kParties> threads;
    for (int i = 0; i < kParties; ++i) {
      threads[i] = std::thread([&, i] {
        try {
          if constexpr (kVoid) {
            fn(*parties_[i]);
          } else {
            results[i] = fn(*parties_[i]);
          }
        } catch (const std::exception& e) {
          errors[i] = std::current_exception();
          parties_[i]->broadcast_abort(e.what());
        }
      });
    }
    for (auto& t : threads) t.join();
    rethrow_root_cause(errors);
    if constexpr (!kVoid) {
      std::array<R, kParties> out;
      for (int i = 0; i < kParties; ++i) out[i] = std::move(*results[i]);
      return out;
    }
  }

 private:
  static bool is_peer_abort(const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const PeerAbort&) {
      return true;
    } catch (...) {
      return false;
    }
  }

  static void rethrow_root_cause(const std::array<std::exception_ptr, kParties>& errors) {
    for (const auto& e : errors) {
      if (e && !is_peer_abort(e)) std::rethrow_exception(e);
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  net::MemoryHub hub_;
  net::MemoryTransport gateway_;
  std::array<std::unique_ptr<net::MemoryTransport>, kParties> transports_;
  std::array<std::unique_ptr<Party>, kParties> parties_;
};

}  // namespace lem::abb
