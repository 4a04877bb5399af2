#pragma once

// Message framing shared by every transport. Layout (all little-endian):
//
//   u32 payload_len
//   u64 session | u64 round
//   u8 from_role | u32 from_id | u8 to_role | u32 to_id
//   u8 op | u8 tag
//   payload_len bytes of payload
//
// See docs/wire-format.md for payload layouts per op.

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "lem/error.hpp"

namespace lem::net {

enum class Role : std::uint8_t {
  kEvaluator = 1,
  kDealer = 2,
  kSupplier = 3,
  kGateway = 4,
};

inline const char* role_name(Role r) {
  switch (r) {
    case Role::kEvaluator: return "evaluator";
    case Role::kDealer: return "dealer";
    case Role::kSupplier: return "supplier";
    case Role::kGateway: return "gateway";
  }
  return "?";
}

struct NodeId {
  Role role = Role::kEvaluator;
  std::uint32_t id = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId& a, const NodeId& b) {
    return std::tie(a.role, a.id) <=> std::tie(b.role, b.id);
  }

  std::string str() const { return std::string(role_name(role)) + "#" + std::to_string(id); }
};

inline NodeId evaluator(int index) { return {Role::kEvaluator, static_cast<std::uint32_t>(index)}; }

enum class Op : std::uint8_t {
  kBidInput = 1,          // dealer -> evaluator, shares of one bid (tag = slot)
  kSubmissionClosed = 2,  // gateway -> evaluator, end of the submission window
  kIntake = 3,            // evaluator <-> evaluator, ids of intact submissions
  kRandomDeal = 4,        // shares of a party-chosen random value
  kProductReshare = 5,    // degree-1 resharing of a local degree-2 product
  kOpen = 6,              // share of a value being opened (tag = OpenTag)
  kShuffleReshare = 7,    // resharing inside a permute-and-reshare pass
  kPermutation = 8,       // offline: pair permutation material
  kNotifyUser = 9,        // evaluator -> dealer, shares of the bid tuple
  kNotifySupplier = 10,   // evaluator -> supplier, shares of its aggregates
  kAbort = 11,
};

enum class PayloadKind : std::uint8_t { kShares, kPermutation, kControl };

inline PayloadKind payload_kind(Op op) {
  switch (op) {
    case Op::kPermutation: return PayloadKind::kPermutation;
    case Op::kSubmissionClosed:
    case Op::kIntake:
    case Op::kAbort: return PayloadKind::kControl;
    default: return PayloadKind::kShares;
  }
}

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kBidInput: return "bid_input";
    case Op::kSubmissionClosed: return "submission_closed";
    case Op::kIntake: return "intake";
    case Op::kRandomDeal: return "random_deal";
    case Op::kProductReshare: return "product_reshare";
    case Op::kOpen: return "open";
    case Op::kShuffleReshare: return "shuffle_reshare";
    case Op::kPermutation: return "permutation";
    case Op::kNotifyUser: return "notify_user";
    case Op::kNotifySupplier: return "notify_supplier";
    case Op::kAbort: return "abort";
  }
  return "?";
}

struct Message {
  std::uint64_t session = 0;
  std::uint64_t round = 0;
  NodeId from;
  NodeId to;
  Op op = Op::kOpen;
  std::uint8_t tag = 0;
  std::vector<std::uint8_t> payload;
};

inline constexpr std::size_t kHeaderBytes = 8 + 8 + 1 + 4 + 1 + 4 + 1 + 1;
inline constexpr std::size_t kFrameOverhead = 4 + kHeaderBytes;
inline constexpr std::size_t kMaxPayload = std::size_t{1} << 30;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(p[b]) << (8 * b);
  return v;
}

}  // namespace detail

inline std::size_t frame_size(const Message& m) { return kFrameOverhead + m.payload.size(); }

inline std::vector<std::uint8_t> encode_frame(const Message& m) {
  std::vector<std::uint8_t> out;
  out.reserve(frame_size(m));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.payload.size()));
  detail::put_le<std::uint64_t>(out, m.session);
  detail::put_le<std::uint64_t>(out, m.round);
  out.push_back(static_cast<std::uint8_t>(m.from.role));
  detail::put_le<std::uint32_t>(out, m.from.id);
  out.push_back(static_cast<std::uint8_t>(m.to.role));
  detail::put_le<std::uint32_t>(out, m.to.id);
  out.push_back(static_cast<std::uint8_t>(m.op));
  out.push_back(m.tag);
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

/// Payload length announced by a frame's first four bytes.
inline std::uint32_t frame_payload_len(std::span<const std::uint8_t> prefix) {
  if (prefix.size() < 4) throw ProtocolAbort("frame: truncated length prefix");
  return detail::get_le<std::uint32_t>(prefix.data());
}

/// Decodes exactly one frame; the span must hold the whole frame.
inline Message decode_frame(std::span<const std::uint8_t> frame) {
  if (frame.size() < kFrameOverhead) throw ProtocolAbort("frame: shorter than header");
  const std::uint32_t len = frame_payload_len(frame);
  if (frame.size() != kFrameOverhead + len) throw ProtocolAbort("frame: length prefix does not match payload");
  const std::uint8_t* p = frame.data() + 4;
  Message m;
  m.session = detail::get_le<std::uint64_t>(p);
  m.round = detail::get_le<std::uint64_t>(p + 8);
  m.from = {static_cast<Role>(p[16]), detail::get_le<std::uint32_t>(p + 17)};
  m.to = {static_cast<Role>(p[21]), detail::get_le<std::uint32_t>(p + 22)};
  m.op = static_cast<Op>(p[26]);
  m.tag = p[27];
  m.payload.assign(p + kHeaderBytes, p + kHeaderBytes + len);
  return m;
}

}  // namespace lem::net
