#pragma once

// Per-party record of every message sent or consumed, in protocol order.
// Used by the determinism tests (byte-identical serialization) and by the
// privacy audit (payload kinds per phase, share-value uniformity).

#include <sodium.h>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lem/net/message.hpp"
#include "lem/random.hpp"
#include "lem/shamir.hpp"

namespace lem::abb {

enum class Stage : std::uint8_t { kOffline = 0, kOnline = 1 };

struct TranscriptEntry {
  bool outgoing = true;
  Stage stage = Stage::kOffline;
  std::uint64_t round = 0;
  net::NodeId peer;
  net::Op op = net::Op::kOpen;
  std::uint8_t tag = 0;
  std::uint32_t payload_len = 0;
  std::array<std::uint8_t, 16> digest{};  // BLAKE2b-128 of the payload
  std::vector<std::uint8_t> payload;      // kept only when payloads are recorded
};

class Transcript {
 public:
  Transcript() = default;
  Transcript(bool enabled, bool keep_payloads) : enabled_(enabled), keep_payloads_(keep_payloads) {}

  bool enabled() const { return enabled_; }

  void record(bool outgoing, Stage stage, const net::Message& m, const net::NodeId& peer) {
    if (!enabled_) return;
    detail::ensure_sodium();
    TranscriptEntry e;
    e.outgoing = outgoing;
    e.stage = stage;
    e.round = m.round;
    e.peer = peer;
    e.op = m.op;
    e.tag = m.tag;
    e.payload_len = static_cast<std::uint32_t>(m.payload.size());
    crypto_generichash(e.digest.data(), e.digest.size(), m.payload.data(), m.payload.size(), nullptr, 0);
    if (keep_payloads_) e.payload = m.payload;
    entries_.push_back(std::move(e));
  }

  const std::vector<TranscriptEntry>& entries() const { return entries_; }

  /// Canonical byte form: fixed-width fields plus the payload digest.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(entries_.size() * 48);
    for (const auto& e : entries_) {
      out.push_back(e.outgoing ? 1 : 0);
      out.push_back(static_cast<std::uint8_t>(e.stage));
      net::detail::put_le<std::uint64_t>(out, e.round);
      out.push_back(static_cast<std::uint8_t>(e.peer.role));
      net::detail::put_le<std::uint32_t>(out, e.peer.id);
      out.push_back(static_cast<std::uint8_t>(e.op));
      out.push_back(e.tag);
      net::detail::put_le<std::uint32_t>(out, e.payload_len);
      out.insert(out.end(), e.digest.begin(), e.digest.end());
    }
    return out;
  }

 private:
  bool enabled_ = false;
  bool keep_payloads_ = false;
  std::vector<TranscriptEntry> entries_;
};

}  // namespace lem::abb
