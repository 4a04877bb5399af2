#pragma once

// One computational party of the three-party arithmetic black box. Every
// operation is collective: all three parties call the same sequence of
// methods with public arguments of equal shape, and each round-consuming
// call advances the shared round counter in lock-step.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lem/abb/costs.hpp"
#include "lem/abb/metrics.hpp"
#include "lem/abb/transcript.hpp"
#include "lem/error.hpp"
#include "lem/field.hpp"
#include "lem/net/transport.hpp"
#include "lem/random.hpp"
#include "lem/shamir.hpp"

namespace lem::abb {

static_assert(std::endian::native == std::endian::little, "wire helpers assume a little-endian host");

/// One party's shares of a vector of secrets.
using Column = std::vector<Fe>;

/// Every opening names its purpose; untagged openings are refused.
enum class OpenTag : std::uint8_t {
  kNone = 0,
  kMaskedComparison = 1,
  kSquare = 2,
  kBitCheck = 3,
  kSortOutcome = 4,
  kTradingPrice = 5,
  kBidIdentifier = 6,
  kDebug = 255,
};

inline const char* open_tag_name(OpenTag t) {
  switch (t) {
    case OpenTag::kNone: return "none";
    case OpenTag::kMaskedComparison: return "masked_comparison";
    case OpenTag::kSquare: return "square";
    case OpenTag::kBitCheck: return "bit_check";
    case OpenTag::kSortOutcome: return "sort_outcome";
    case OpenTag::kTradingPrice: return "trading_price";
    case OpenTag::kBidIdentifier: return "bid_identifier";
    case OpenTag::kDebug: return "debug";
  }
  return "?";
}

inline bool is_allowlisted(std::uint8_t tag) {
  switch (static_cast<OpenTag>(tag)) {
    case OpenTag::kMaskedComparison:
    case OpenTag::kSquare:
    case OpenTag::kBitCheck:
    case OpenTag::kSortOutcome:
    case OpenTag::kTradingPrice:
    case OpenTag::kBidIdentifier:
    case OpenTag::kDebug: return true;
    default: return false;
  }
}

struct PartyConfig {
  FieldParams params;
  int index = 1;
  u64 seed = 0;
  u64 session = 0;
  std::chrono::milliseconds timeout{30000};
  bool debug_open = false;
  bool verify_bits = true;
  bool record_transcript = false;
  bool record_payloads = false;
  std::size_t bit_chunk = std::size_t{1} << 18;
};

/// Offline material to prepare before going online.
struct PoolPlan {
  std::size_t bits = 0;
  std::size_t shuffles = 0;
  std::size_t shuffle_len = 0;
};

/// Rows of shared tuples that move together under shuffle and sort.
struct SharedTable {
  std::vector<Column> cols;
  int shuffles = 0;           // secret shuffles applied so far
  bool order_public = false;  // true once row order depends on opened values
  bool sorted = false;

  std::size_t rows() const { return cols.empty() ? 0 : cols.front().size(); }
};

class Party {
 public:
  Party(PartyConfig cfg, net::Transport& transport)
      : cfg_(std::move(cfg)),
        field_(cfg_.params),
        transport_(transport),
        self_(net::evaluator(cfg_.index)),
        rng_(cfg_.seed, "evaluator", static_cast<u64>(cfg_.index)),
        transcript_(cfg_.record_transcript, cfg_.record_payloads) {
    if (cfg_.index < 1 || cfg_.index > kParties) throw ConfigError("party index must be 1..3");
    cfg_.params.validate_modulus();
    weights_ = shamir::degree2_weights(field_);
    inv2_ = field_.inv(field_.from_u64(2));
  }

  int index() const { return cfg_.index; }
  net::NodeId id() const { return self_; }
  const Field& field() const { return field_; }
  const FieldParams& params() const { return cfg_.params; }
  const PartyConfig& config() const { return cfg_; }
  Metrics& metrics() { return metrics_; }
  const Metrics& metrics() const { return metrics_; }
  const Transcript& transcript() const { return transcript_; }
  net::Transport& transport() { return transport_; }
  Stage stage() const { return stage_; }
  std::size_t bits_available() const { return bits_.size() - bit_pos_; }
  std::size_t shuffles_available() const { return perms_.size() - perm_pos_; }

  // -------------------------------------------------------------------------
  // Local linear operations. Shares of a public constant c are c itself.

  Column constant(std::size_t n, Fe c) const { return Column(n, c); }

  Column add(const Column& a, const Column& b) const {
    check_same(a, b);
    Column out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = field_.add(a[i], b[i]);
    return out;
  }

  Column sub(const Column& a, const Column& b) const {
    check_same(a, b);
    Column out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = field_.sub(a[i], b[i]);
    return out;
  }

  Column scale(const Column& a, Fe c) const {
    Column out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = field_.mul(a[i], c);
    return out;
  }

  Column add_public(const Column& a, Fe c) const {
    Column out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = field_.add(a[i], c);
    return out;
  }

  /// 1 - a, elementwise.
  Column one_minus(const Column& a) const {
    Column out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = field_.sub(field_.one(), a[i]);
    return out;
  }

  Fe sum(const Column& a) const {
    Fe acc = field_.zero();
    for (Fe x : a) acc = field_.add(acc, x);
    return acc;
  }

  // -------------------------------------------------------------------------
  // Phases.

  void begin_offline() {
    stage_ = Stage::kOffline;
    metrics_.set_phase("offline");
    phase_start_ = std::chrono::steady_clock::now();
  }

  void begin_online() {
    if (stage_ == Stage::kOffline) metrics_.offline_seconds += elapsed();
    stage_ = Stage::kOnline;
    online_started_ = true;
    metrics_.set_phase("online");
    phase_start_ = std::chrono::steady_clock::now();
  }

  void end_online() {
    if (stage_ == Stage::kOnline) metrics_.online_seconds += elapsed();
    phase_start_ = std::chrono::steady_clock::now();
  }

  void set_phase(const std::string& phase) { metrics_.set_phase(phase); }

  /// Generates the whole offline pool. Refused once the online phase began.
  void prepare(const PoolPlan& plan) {
    if (online_started_) throw PolicyViolation("offline material requested after the online phase started");
    generate_shuffle_material(plan.shuffles, plan.shuffle_len);
    generate_bits(plan.bits);
  }

  // -------------------------------------------------------------------------
  // Input: shares dealt by an input party (round 0, tag = slot).

  Column input(net::NodeId dealer, std::size_t count, std::uint8_t slot = 0) {
    const net::Message m = await(dealer, net::Op::kBidInput, 0, slot);
    return decode_shares(m.payload, count, static_cast<std::uint8_t>(cfg_.index), dealer.str());
  }

  // -------------------------------------------------------------------------
  // Product, open, random values.

  Column mul(const Column& a, const Column& b) {
    metrics_.log("product", a.size());
    metrics_.now().multiplications += a.size();
    return mul_raw(a, b);
  }

  std::vector<Fe> open(const Column& a, OpenTag tag, const SharedTable* source = nullptr) {
    check_open_policy(tag, source);
    metrics_.log("open", a.size());
    return open_raw(a, tag);
  }

  Column joint_random(std::size_t n) {
    metrics_.log("joint_random");
    return joint_random_raw(n);
  }

  /// Takes n bits from the offline pool.
  Column random_bits(std::size_t n) { return take_bits(n); }

  // -------------------------------------------------------------------------
  // Comparisons. Inputs must be valid encodings below 2^width.

  Column lt(const Column& a, const Column& b, int width) {
    check_same(a, b);
    if (!cfg_.params.supports_width(width)) {
      throw ConfigError("comparison width " + std::to_string(width) + " not supported by the modulus");
    }
    metrics_.log(costs::lt_key(width), a.size());
    metrics_.now().comparisons += a.size();
    return lt_raw(a, b, width);
  }

  Column eq(const Column& a, const Column& b, int width) {
    check_same(a, b);
    if (!cfg_.params.supports_width(width + 1)) {
      throw ConfigError("equality width " + std::to_string(width) + " not supported by the modulus");
    }
    metrics_.log(costs::eq_key(width), a.size());
    metrics_.now().comparisons += a.size();
    return eq_raw(a, b, width);
  }

  // -------------------------------------------------------------------------
  // Shuffle: three permute-and-reshare passes over the pairs (1,2), (1,3),
  // (2,3). Each pass is unknown to the party outside the pair.

  void shuffle(SharedTable& t) {
    if (perm_pos_ >= perms_.size()) throw PoolExhausted("no shuffle material left in the offline pool");
    const ShuffleMaterial& mat = perms_[perm_pos_++];
    const std::size_t n = t.rows();
    if (n > mat.len) {
      throw PoolExhausted("shuffle material covers " + std::to_string(mat.len) + " rows, table has " +
                          std::to_string(n));
    }
    for (int p = 0; p < 3; ++p) shuffle_pass(t, p, mat);
    ++t.shuffles;
    t.order_public = false;
    t.sorted = false;
  }

  /// Ascending sort by (key, tiebreak). Both columns must hold distinct
  /// pairs; tiebreak values lie below 2^tie_bits, keys below 2^key_bits.
  /// Pivot is the last row of each subrange; outcomes are opened.
  void sort(SharedTable& t, std::size_t key_col, std::size_t tie_col, int key_bits, int tie_bits) {
    if (t.shuffles < 1 || t.order_public) throw PolicyViolation("sort refused: table was not shuffled first");
    const std::size_t n = t.rows();
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    if (n >= 2) ranges.emplace_back(0, n);
    std::vector<std::size_t> order(n);
    while (!ranges.empty()) {
      Column tie_piv, tie_i, key_piv, key_i;
      for (auto [lo, hi] : ranges) {
        for (std::size_t i = lo; i + 1 < hi; ++i) {
          tie_piv.push_back(t.cols[tie_col][hi - 1]);
          tie_i.push_back(t.cols[tie_col][i]);
          key_piv.push_back(t.cols[key_col][hi - 1]);
          key_i.push_back(t.cols[key_col][i]);
        }
      }
      const Column later = lt(tie_piv, tie_i, tie_bits);
      const Fe two = field_.from_u64(2);
      const Column lhs = add(scale(key_i, two), later);
      const Column rhs = add_public(scale(key_piv, two), field_.one());
      const Column less = lt(lhs, rhs, key_bits + 1);
      const std::vector<Fe> outcome = open(less, OpenTag::kSortOutcome);

      std::vector<std::pair<std::size_t, std::size_t>> next;
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      for (auto [lo, hi] : ranges) {
        std::vector<std::size_t> left, right;
        for (std::size_t i = lo; i + 1 < hi; ++i) {
          const Fe o = outcome[k++];
          if (o != field_.zero() && o != field_.one()) throw ProtocolAbort("sort outcome is not a bit");
          (o == field_.one() ? left : right).push_back(i);
        }
        std::size_t w = lo;
        for (std::size_t i : left) order[w++] = i;
        order[w++] = hi - 1;
        for (std::size_t i : right) order[w++] = i;
        if (left.size() >= 2) next.emplace_back(lo, lo + left.size());
        if (right.size() >= 2) next.emplace_back(hi - right.size(), hi);
      }
      for (Column& c : t.cols) {
        Column moved(n);
        for (std::size_t i = 0; i < n; ++i) moved[i] = c[order[i]];
        c = std::move(moved);
      }
      ranges = std::move(next);
    }
    t.sorted = true;
    t.order_public = true;
  }

  // -------------------------------------------------------------------------
  // Output to a party outside the evaluator set (round field carries a
  // caller-chosen key, e.g. the bid identifier).

  void send_shares(net::NodeId to, net::Op op, u64 key, std::uint8_t tag, const Column& values) {
    std::vector<std::uint8_t> payload;
    encode_shares(payload, values, static_cast<std::uint8_t>(cfg_.index));
    post(to, op, key, tag, std::move(payload));
  }

  /// Sends one message outside the round structure; recorded and counted.
  void post(net::NodeId to, net::Op op, u64 key, std::uint8_t tag, std::vector<std::uint8_t> payload) {
    net::Message m{cfg_.session, key, self_, to, op, tag, std::move(payload)};
    transcript_.record(true, stage_, m, to);
    metrics_.now().bytes_sent += transport_.send(m);
  }

  /// Waits for one message addressed to this party; recorded on consumption.
  net::Message await(net::NodeId from, net::Op op, u64 key, std::uint8_t tag) {
    net::Message m = transport_.inbox().wait({key, from, self_, op, tag}, cfg_.timeout);
    transcript_.record(false, stage_, m, from);
    return m;
  }

  /// Takes every buffered message of one op addressed to this party, in key
  /// order; each is recorded on consumption.
  std::vector<net::Message> drain(net::Op op, u64 key) {
    std::vector<net::Message> msgs = transport_.inbox().drain(key, op, self_);
    for (const auto& m : msgs) transcript_.record(false, stage_, m, m.from);
    return msgs;
  }

  /// Logs a round-consuming step performed outside the built-in primitives.
  void log_invocation(const std::string& key, u64 elements = 0) { metrics_.log(key, elements); }

  // -------------------------------------------------------------------------
  // Raw round: send one payload to each peer, then wait for both.

  using Payloads = std::array<std::vector<std::uint8_t>, kParties + 1>;

  Payloads exchange(net::Op op, std::uint8_t tag, Payloads out) {
    const u64 r = round_++;
    for (int p = 1; p <= kParties; ++p) {
      if (p == cfg_.index) continue;
      net::Message m{cfg_.session, r, self_, net::evaluator(p), op, tag, std::move(out[p])};
      transcript_.record(true, stage_, m, m.to);
      metrics_.now().bytes_sent += transport_.send(m);
    }
    Payloads in;
    for (int p = 1; p <= kParties; ++p) {
      if (p == cfg_.index) continue;
      net::Message m = transport_.inbox().wait({r, net::evaluator(p), self_, op, tag}, cfg_.timeout);
      transcript_.record(false, stage_, m, m.from);
      in[p] = std::move(m.payload);
    }
    ++metrics_.now().rounds;
    return in;
  }

  /// Tells the other evaluators and the gateway to stop. Best effort.
  void broadcast_abort(const std::string& reason) {
    std::vector<net::NodeId> targets{net::NodeId{net::Role::kGateway, 0}};
    for (int p = 1; p <= kParties; ++p) {
      if (p != cfg_.index) targets.push_back(net::evaluator(p));
    }
    for (const auto& to : targets) {
      net::Message m{cfg_.session, 0, self_, to, net::Op::kAbort, 0,
                     std::vector<std::uint8_t>(reason.begin(), reason.end())};
      try {
        transport_.send(m);
      } catch (const std::exception&) {
      }
    }
  }

  // -------------------------------------------------------------------------
  // Share payload helpers (10 bytes per share, see shamir wire form).

  static void encode_shares(std::vector<std::uint8_t>& out, std::span<const Fe> v, std::uint8_t point) {
    const std::size_t off = out.size();
    out.resize(off + v.size() * shamir::kShareWireBytes);
    std::uint8_t* p = out.data() + off;
    for (Fe x : v) {
      std::memcpy(p, &x.v, 8);
      p[8] = point;
      p[9] = 1;
      p += shamir::kShareWireBytes;
    }
  }

  Column decode_shares(const std::vector<std::uint8_t>& in, std::size_t count, std::uint8_t point,
                       const std::string& from) const {
    if (in.size() != count * shamir::kShareWireBytes) {
      throw ProtocolAbort("malformed share payload from " + from + ": expected " + std::to_string(count) +
                          " shares, got " + std::to_string(in.size()) + " bytes");
    }
    Column out(count);
    const std::uint8_t* p = in.data();
    for (std::size_t i = 0; i < count; ++i, p += shamir::kShareWireBytes) {
      u64 v;
      std::memcpy(&v, p, 8);
      if (v >= field_.modulus() || p[8] != point || p[9] != 1) {
        throw ProtocolAbort("malformed share from " + from + " at position " + std::to_string(i));
      }
      out[i] = Fe{v};
    }
    return out;
  }

 private:
  struct ShuffleMaterial {
    std::size_t len = 0;
    std::array<std::vector<std::uint32_t>, 3> pair_perm;  // pairs (1,2), (1,3), (2,3)
  };

  static constexpr std::array<std::pair<int, int>, 3> kPairs{{{1, 2}, {1, 3}, {2, 3}}};

  static void check_same(const Column& a, const Column& b) {
    if (a.size() != b.size()) throw ShareError("column length mismatch");
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - phase_start_).count();
  }

  void check_open_policy(OpenTag tag, const SharedTable* source) const {
    switch (tag) {
      case OpenTag::kNone: throw PolicyViolation("refusing to open an untagged value");
      case OpenTag::kDebug:
        if (!cfg_.debug_open) throw PolicyViolation("debug openings are disabled");
        return;
      case OpenTag::kBidIdentifier:
        if (!source || source->shuffles < 1 || source->order_public) {
          throw PolicyViolation("bid identifiers may only be opened from a freshly shuffled table");
        }
        return;
      default: return;
    }
  }

  /// Degree-1 sharings of each secret, one column per evaluation point.
  std::array<Column, kParties + 1> deal(const Column& secrets) {
    std::array<Column, kParties + 1> out;
    for (int p = 1; p <= kParties; ++p) out[p].resize(secrets.size());
    const Fe x2 = field_.from_u64(2);
    const Fe x3 = field_.from_u64(3);
    for (std::size_t i = 0; i < secrets.size(); ++i) {
      const Fe slope = rng_.element(field_);
      const Fe s1 = field_.add(secrets[i], slope);
      out[1][i] = s1;
      out[2][i] = field_.add(secrets[i], field_.mul(slope, x2));
      out[3][i] = field_.add(secrets[i], field_.mul(slope, x3));
    }
    return out;
  }

  /// Deals each secret to all parties in one round and returns, per sender,
  /// the shares this party received (own contribution included). Only the
  /// parties in `senders` deal; the others send empty payloads.
  std::array<Column, kParties + 1> reshare_round(net::Op op, std::uint8_t tag, const Column& secrets,
                                                 std::array<bool, kParties + 1> senders, std::size_t count) {
    const bool dealing = senders[cfg_.index];
    std::array<Column, kParties + 1> dealt;
    Payloads out;
    if (dealing) {
      dealt = deal(secrets);
      for (int p = 1; p <= kParties; ++p) {
        if (p != cfg_.index) encode_shares(out[p], dealt[p], static_cast<std::uint8_t>(p));
      }
    }
    Payloads in = exchange(op, tag, std::move(out));
    std::array<Column, kParties + 1> got;
    if (dealing) got[cfg_.index] = std::move(dealt[cfg_.index]);
    for (int p = 1; p <= kParties; ++p) {
      if (p == cfg_.index) continue;
      if (!senders[p]) {
        if (!in[p].empty()) throw ProtocolAbort("unexpected payload from evaluator#" + std::to_string(p));
        continue;
      }
      got[p] = decode_shares(in[p], count, static_cast<std::uint8_t>(cfg_.index), net::evaluator(p).str());
    }
    return got;
  }

  std::array<Column, kParties + 1> reshare_all(net::Op op, const Column& secrets) {
    return reshare_round(op, 0, secrets, {false, true, true, true}, secrets.size());
  }

  Column joint_random_raw(std::size_t n) {
    Column mine(n);
    for (auto& x : mine) x = rng_.element(field_);
    auto got = reshare_all(net::Op::kRandomDeal, mine);
    Column out(n, field_.zero());
    for (int p = 1; p <= kParties; ++p) {
      for (std::size_t i = 0; i < n; ++i) out[i] = field_.add(out[i], got[p][i]);
    }
    return out;
  }

  Column mul_raw(const Column& a, const Column& b) {
    check_same(a, b);
    Column local(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) local[i] = field_.mul(a[i], b[i]);
    auto got = reshare_all(net::Op::kProductReshare, local);
    Column out(a.size(), field_.zero());
    for (int p = 1; p <= kParties; ++p) {
      const Fe w = weights_[p - 1];
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = field_.add(out[i], field_.mul(w, got[p][i]));
    }
    return out;
  }

  std::vector<Fe> open_raw(const Column& a, OpenTag tag) {
    Payloads out;
    for (int p = 1; p <= kParties; ++p) {
      if (p != cfg_.index) encode_shares(out[p], a, static_cast<std::uint8_t>(cfg_.index));
    }
    Payloads in = exchange(net::Op::kOpen, static_cast<std::uint8_t>(tag), std::move(out));
    std::array<Column, kParties + 1> pts;
    for (int p = 1; p <= kParties; ++p) {
      pts[p] = p == cfg_.index ? a
                               : decode_shares(in[p], a.size(), static_cast<std::uint8_t>(p), net::evaluator(p).str());
    }
    std::vector<Fe> vals(a.size());
    const Fe two = field_.from_u64(2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      // Three points of a line: s1 - 2 s2 + s3 = 0.
      if (field_.add(field_.sub(pts[1][i], field_.mul(two, pts[2][i])), pts[3][i]) != field_.zero()) {
        throw ProtocolAbort(std::string("inconsistent shares while opening (") + open_tag_name(tag) + ")");
      }
      vals[i] = field_.add(field_.add(field_.mul(weights_[0], pts[1][i]), field_.mul(weights_[1], pts[2][i])),
                           field_.mul(weights_[2], pts[3][i]));
    }
    return vals;
  }

  Column take_bits(std::size_t n) {
    if (bit_pos_ + n > bits_.size()) {
      throw PoolExhausted("random-bit pool exhausted: need " + std::to_string(n) + ", have " +
                          std::to_string(bits_.size() - bit_pos_));
    }
    Column out(bits_.begin() + static_cast<std::ptrdiff_t>(bit_pos_),
               bits_.begin() + static_cast<std::ptrdiff_t>(bit_pos_ + n));
    bit_pos_ += n;
    metrics_.now().random_bits += n;
    return out;
  }

  // Square-root technique: open r^2, then (r / sqrt(r^2) + 1) / 2 is a
  // uniform bit nobody knows.
  void generate_bits(std::size_t count) {
    std::size_t made = 0;
    while (made < count) {
      const std::size_t m = std::min(cfg_.bit_chunk, count - made);
      metrics_.log("joint_random");
      const Column r = joint_random_raw(m);
      metrics_.log("product");
      metrics_.now().internal_products += m;
      const Column r2 = mul_raw(r, r);
      metrics_.log("open");
      const std::vector<Fe> u = open_raw(r2, OpenTag::kSquare);
      Column b;
      b.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        if (u[i] == field_.zero()) continue;
        const auto is = field_.inv_sqrt(u[i]);
        if (!is) throw ProtocolAbort("opened square is not a quadratic residue");
        b.push_back(field_.mul(field_.add(field_.mul(r[i], *is), field_.one()), inv2_));
      }
      if (cfg_.verify_bits) {
        metrics_.log("product");
        metrics_.now().internal_products += b.size();
        const Column check = sub(mul_raw(b, b), b);
        metrics_.log("open");
        for (Fe v : open_raw(check, OpenTag::kBitCheck)) {
          if (v != field_.zero()) throw ProtocolAbort("random bit failed the b^2 = b check");
        }
      }
      made += b.size();
      metrics_.now().random_bits += b.size();
      bits_.insert(bits_.end(), b.begin(), b.end());
    }
  }

  void generate_shuffle_material(std::size_t count, std::size_t len) {
    for (std::size_t s = 0; s < count; ++s) {
      ShuffleMaterial mat;
      mat.len = len;
      Payloads out;
      for (int k = 0; k < 3; ++k) {
        auto [a, b] = kPairs[k];
        if (a != cfg_.index) continue;
        mat.pair_perm[k] = rng_.permutation(len);
        for (std::uint32_t v : mat.pair_perm[k]) net::detail::put_le<std::uint32_t>(out[b], v);
      }
      metrics_.log("permutation_material");
      Payloads in = exchange(net::Op::kPermutation, 0, std::move(out));
      for (int k = 0; k < 3; ++k) {
        auto [a, b] = kPairs[k];
        if (b != cfg_.index) continue;
        mat.pair_perm[k] = decode_permutation(in[a], len, a);
      }
      perms_.push_back(std::move(mat));
    }
  }

  static std::vector<std::uint32_t> decode_permutation(const std::vector<std::uint8_t>& in, std::size_t len,
                                                       int from) {
    if (in.size() != len * 4) throw ProtocolAbort("malformed permutation from evaluator#" + std::to_string(from));
    std::vector<std::uint32_t> perm(len);
    std::vector<bool> seen(len, false);
    for (std::size_t i = 0; i < len; ++i) {
      perm[i] = net::detail::get_le<std::uint32_t>(in.data() + 4 * i);
      if (perm[i] >= len || seen[perm[i]]) {
        throw ProtocolAbort("evaluator#" + std::to_string(from) + " sent something that is not a permutation");
      }
      seen[perm[i]] = true;
    }
    return perm;
  }

  /// Restriction of a permutation of [0, N) to the entries below n; uniform
  /// on permutations of [0, n) when the original is uniform.
  static std::vector<std::uint32_t> induced(const std::vector<std::uint32_t>& perm, std::size_t n) {
    std::vector<std::uint32_t> out;
    out.reserve(n);
    for (std::uint32_t v : perm) {
      if (v < n) out.push_back(v);
    }
    return out;
  }

  void shuffle_pass(SharedTable& t, int pair, const ShuffleMaterial& mat) {
    metrics_.log("shuffle_pass", t.rows());
    const auto [a, b] = kPairs[pair];
    const bool member = cfg_.index == a || cfg_.index == b;
    const std::size_t n = t.rows();
    const std::size_t width = t.cols.size();
    Column flat;
    if (member) {
      // Convert to an additive sharing between a and b, then permute.
      const int other = cfg_.index == a ? b : a;
      const Fe lambda = field_.mul(field_.from_u64(static_cast<u64>(other)),
                                   field_.inv(field_.from_i64(other - cfg_.index)));
      const std::vector<std::uint32_t> perm = induced(mat.pair_perm[pair], n);
      flat.resize(width * n);
      for (std::size_t c = 0; c < width; ++c) {
        for (std::size_t i = 0; i < n; ++i) flat[c * n + i] = field_.mul(lambda, t.cols[c][perm[i]]);
      }
    }
    std::array<bool, kParties + 1> senders{};
    senders[a] = senders[b] = true;
    auto got = reshare_round(net::Op::kShuffleReshare, static_cast<std::uint8_t>(pair), flat, senders, width * n);
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        t.cols[c][i] = field_.add(got[a][c * n + i], got[b][c * n + i]);
      }
    }
  }

  Column lt_raw(const Column& a, const Column& b, int w) {
    const std::size_t n = a.size();
    const int kappa = cfg_.params.stat_sec;
    const std::size_t per = static_cast<std::size_t>(w + kappa);
    const Column r = take_bits(n * per);
    const Fe two_w = field_.pow2(w);

    Column masked(n);
    Column x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = field_.add(field_.sub(a[i], b[i]), two_w);
      Fe acc = x[i];
      for (std::size_t j = 0; j < per; ++j) acc = field_.add(acc, field_.mul(field_.pow2(static_cast<int>(j)), r[i * per + j]));
      masked[i] = acc;
    }
    const std::vector<Fe> c = open_raw(masked, OpenTag::kMaskedComparison);

    const std::size_t ww = static_cast<std::size_t>(w);
    const u64 low_mask = (u64{1} << w) - 1;
    Column e(n * ww);
    for (std::size_t i = 0; i < n; ++i) {
      const u64 cl = c[i].v & low_mask;
      for (std::size_t j = 0; j < ww; ++j) {
        const Fe rb = r[i * per + j];
        e[i * ww + j] = ((cl >> j) & 1) ? field_.sub(field_.one(), rb) : rb;
      }
    }
    // f_j = OR of e_l for l >= j, by doubling.
    Column f = e;
    for (std::size_t d = 1; d < ww; d *= 2) {
      Column lhs, rhs;
      lhs.reserve(n * (ww - d));
      rhs.reserve(n * (ww - d));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j + d < ww; ++j) {
          lhs.push_back(f[i * ww + j]);
          rhs.push_back(f[i * ww + j + d]);
        }
      }
      metrics_.now().internal_products += lhs.size();
      const Column prod = mul_raw(lhs, rhs);
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j + d < ww; ++j, ++k) {
          f[i * ww + j] = field_.sub(field_.add(lhs[k], rhs[k]), prod[k]);
        }
      }
    }
    const Fe inv_two_w = field_.inv(two_w);
    Column out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const u64 cl = c[i].v & low_mask;
      Fe u = field_.zero();
      Fe r_low = field_.zero();
      for (std::size_t j = 0; j < ww; ++j) {
        const Fe next = j + 1 < ww ? f[i * ww + j + 1] : field_.zero();
        if (!((cl >> j) & 1)) u = field_.add(u, field_.sub(f[i * ww + j], next));
        r_low = field_.add(r_low, field_.mul(field_.pow2(static_cast<int>(j)), r[i * per + j]));
      }
      const Fe xmod = field_.add(field_.sub(field_.from_u64(cl), r_low), field_.mul(two_w, u));
      const Fe top = field_.mul(field_.sub(x[i], xmod), inv_two_w);
      out[i] = field_.sub(field_.one(), top);
    }
    return out;
  }

  Column eq_raw(const Column& a, const Column& b, int w) {
    const std::size_t n = a.size();
    const int kappa = cfg_.params.stat_sec;
    const std::size_t low = static_cast<std::size_t>(w + 1);
    const std::size_t per = low + static_cast<std::size_t>(kappa);
    const Column r = take_bits(n * per);
    const Fe two_w = field_.pow2(w);

    Column masked(n);
    for (std::size_t i = 0; i < n; ++i) {
      Fe acc = field_.add(field_.sub(a[i], b[i]), two_w);
      for (std::size_t j = 0; j < per; ++j) acc = field_.add(acc, field_.mul(field_.pow2(static_cast<int>(j)), r[i * per + j]));
      masked[i] = acc;
    }
    const std::vector<Fe> c = open_raw(masked, OpenTag::kMaskedComparison);

    // a == b exactly when the masked low bits differ from r only at bit w.
    std::vector<Column> terms(n, Column(low));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < low; ++j) {
        const Fe rb = r[i * per + j];
        const Fe ej = ((c[i].v >> j) & 1) ? field_.sub(field_.one(), rb) : rb;
        terms[i][j] = j + 1 < low ? field_.sub(field_.one(), ej) : ej;
      }
    }
    std::size_t len = low;
    while (len > 1) {
      const std::size_t half = len / 2;
      Column lhs, rhs;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < half; ++j) {
          lhs.push_back(terms[i][2 * j]);
          rhs.push_back(terms[i][2 * j + 1]);
        }
      }
      metrics_.now().internal_products += lhs.size();
      const Column prod = mul_raw(lhs, rhs);
      const std::size_t next_len = (len + 1) / 2;
      std::size_t k = 0;
      for (std::size_t i = 0; i < n; ++i) {
        Column t(next_len);
        for (std::size_t j = 0; j < half; ++j) t[j] = prod[k++];
        if (len % 2) t[half] = terms[i][len - 1];
        terms[i] = std::move(t);
      }
      len = next_len;
    }
    Column out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = terms[i][0];
    return out;
  }

  PartyConfig cfg_;
  Field field_;
  net::Transport& transport_;
  net::NodeId self_;
  Rng rng_;
  Metrics metrics_;
  Transcript transcript_;
  std::array<Fe, kParties> weights_{};
  Fe inv2_;
  u64 round_ = 1;
  Stage stage_ = Stage::kOffline;
  bool online_started_ = false;
  std::chrono::steady_clock::time_point phase_start_ = std::chrono::steady_clock::now();
  Column bits_;
  std::size_t bit_pos_ = 0;
  std::vector<ShuffleMaterial> perms_;
  std::size_t perm_pos_ = 0;
};

}  // namespace lem::abb
