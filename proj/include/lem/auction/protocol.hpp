#pragma once

// The evaluator-side clearance script. Every function here is run by all
// three parties in lock-step on their own shares.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <thread>
#include <utility>
#include <vector>

#include "lem/abb/party.hpp"
#include "lem/auction/bid.hpp"
#include "lem/net/registry.hpp"

namespace lem::auction {

using abb::Column;
using abb::OpenTag;
using abb::Party;
using abb::SharedTable;

inline const net::NodeId kGatewayNode{net::Role::kGateway, 0};

struct AuctionConfig {
  FieldParams params;
  std::uint32_t n_suppliers = 10;
  u64 seed = 1;
  u64 session = 1;
  u64 period = 0;
  std::size_t max_bids = 0;  // public upper bound on |B|; 0 = number submitted
  double pool_factor = 1.5;
  bool demand_aggregates = false;
  bool verify_bits = true;
  std::chrono::milliseconds timeout{30000};
  bool record_transcript = false;
  bool record_payloads = false;
  bool instrument = false;  // keep share snapshots so a test harness can check internals
  int supplier_retries = 3;
  std::chrono::milliseconds retry_backoff{50};
  std::size_t bit_chunk = std::size_t{1} << 18;
};

inline int tiebreak_bits(std::size_t n) { return std::max(1, lem::detail::bit_length(n > 0 ? n - 1 : 0)); }

/// Offline demand: expected quicksort comparisons (2 n ln n) at two
/// primitive comparisons each, one clearance comparison per bid, scaled by
/// the safety factor; three shuffles of up to n_max rows.
inline abb::PoolPlan pool_plan(std::size_t n_max, const AuctionConfig& cfg) {
  const FieldParams& p = cfg.params;
  const double n = static_cast<double>(n_max);
  const double sort_cmps = n_max >= 2 ? 2.0 * n * std::log(n) : 0.0;
  const double per_sort = abb::costs::lt_bits(tiebreak_bits(n_max), p.stat_sec) +
                          abb::costs::lt_bits(p.value_bits + 1, p.stat_sec);
  const double clear = n * abb::costs::lt_bits(p.sum_bits, p.stat_sec);
  abb::PoolPlan plan;
  plan.bits = static_cast<std::size_t>(std::ceil(cfg.pool_factor * (sort_cmps * per_sort + clear)));
  plan.shuffles = 3;
  plan.shuffle_len = n_max;
  return plan;
}

/// Shares a party keeps for the test harness; empty unless instrumented.
struct Snapshot {
  Column first_order_ids;  // bid ids after the first shuffle
  Column sorted_ids;
  Column accept;           // A in sorted order
  Column nu_trace;
  Column supplier_volume;
  Column accepted_supply;  // A (1 - d) b, sorted order
  Column accepted_demand;  // (1 - A) d b, sorted order
  Fe delta;
  Fe phi;
  Fe nu;
};

struct EvaluatorOutput {
  std::size_t n_bids = 0;
  u64 sigma = 0;
  std::vector<std::pair<std::uint32_t, std::uint8_t>> admitted;  // (dealer, slot), canonical order
  std::vector<u64> dropped_ids;
  std::vector<std::uint32_t> unreachable_suppliers;
  Snapshot snap;
};

// ---------------------------------------------------------------------------
// Intake: collect dealer submissions until the gateway closes the window,
// then agree on the set of intact submissions.

namespace detail {

using Submission = std::pair<std::uint32_t, std::uint8_t>;

inline std::vector<std::uint8_t> encode_submissions(const std::vector<Submission>& subs) {
  std::vector<std::uint8_t> out;
  for (auto [dealer, slot] : subs) {
    net::detail::put_le<std::uint32_t>(out, dealer);
    out.push_back(slot);
  }
  return out;
}

inline std::vector<Submission> decode_submissions(const std::vector<std::uint8_t>& in, const std::string& from) {
  if (in.size() % 5 != 0) throw ProtocolAbort("malformed intake list from " + from);
  std::vector<Submission> out;
  for (std::size_t i = 0; i < in.size(); i += 5) {
    out.emplace_back(net::detail::get_le<std::uint32_t>(in.data() + i), in[i + 4]);
  }
  return out;
}

}  // namespace detail

inline SharedTable intake(Party& p, const AuctionConfig& cfg, EvaluatorOutput& out) {
  p.set_phase("intake");
  const std::size_t width = bid_width(cfg.n_suppliers);
  p.await(kGatewayNode, net::Op::kSubmissionClosed, 0, 0);
  std::map<detail::Submission, Column> intact;
  for (net::Message& m : p.drain(net::Op::kBidInput, 0)) {
    if (m.from.role != net::Role::kDealer) continue;
    try {
      intact[{m.from.id, m.tag}] = p.decode_shares(m.payload, width, static_cast<std::uint8_t>(p.index()), m.from.str());
    } catch (const ProtocolAbort&) {
      // Malformed submission: the bid is excluded, the others proceed.
    }
  }
  std::vector<detail::Submission> mine;
  for (const auto& [k, v] : intact) mine.push_back(k);

  Party::Payloads msgs;
  for (int q = 1; q <= kParties; ++q) {
    if (q != p.index()) msgs[q] = detail::encode_submissions(mine);
  }
  p.log_invocation("intake", mine.size());
  Party::Payloads in = p.exchange(net::Op::kIntake, 0, std::move(msgs));
  std::set<detail::Submission> agreed(mine.begin(), mine.end());
  for (int q = 1; q <= kParties; ++q) {
    if (q == p.index()) continue;
    const auto theirs = detail::decode_submissions(in[q], net::evaluator(q).str());
    const std::set<detail::Submission> other(theirs.begin(), theirs.end());
    std::set<detail::Submission> both;
    std::set_intersection(agreed.begin(), agreed.end(), other.begin(), other.end(), std::inserter(both, both.end()));
    agreed = std::move(both);
  }
  out.admitted.assign(agreed.begin(), agreed.end());
  p.post(kGatewayNode, net::Op::kIntake, 0, 0, detail::encode_submissions(out.admitted));

  SharedTable t;
  t.cols.assign(width, Column{});
  for (const auto& key : out.admitted) {
    const Column& v = intact.at(key);
    for (std::size_t c = 0; c < width; ++c) t.cols[c].push_back(v[c]);
  }
  out.n_bids = out.admitted.size();
  return t;
}

// ---------------------------------------------------------------------------
// Clearance building blocks.

/// delta = sum_j q_j d_j; returns (qd, delta).
inline std::pair<Column, Fe> aggregate_demand(Party& p, const SharedTable& t) {
  Column qd = p.mul(t.cols[col::kQ], t.cols[col::kD]);
  const Fe delta = p.sum(qd);
  return {std::move(qd), delta};
}

/// Input-only terms of the scan, computed before the sequential loop.
struct ClearanceSetup {
  Column gain;                  // L_j - L_{j-1}, L_j = price of the last supply bid among 1..j
  std::vector<Column> supply;   // s_jk (1 - d_j) q_j, per supplier k
  std::vector<Column> demand;   // s_jk d_j q_j, per supplier k (extension)
};

inline ClearanceSetup clearance_setup(Party& p, const SharedTable& t, const Column& qd, const AuctionConfig& cfg) {
  const std::size_t n = t.rows();
  const std::uint32_t S = cfg.n_suppliers;
  const Column sv = p.sub(t.cols[col::kQ], qd);
  const Column one_minus_d = p.one_minus(t.cols[col::kD]);

  // One round: s_jk * sv_j for every k, (1 - d_j) p_j, and optionally s_jk * qd_j.
  Column lhs, rhs;
  for (std::uint32_t k = 0; k < S; ++k) {
    lhs.insert(lhs.end(), t.cols[col::kS0 + k].begin(), t.cols[col::kS0 + k].end());
    rhs.insert(rhs.end(), sv.begin(), sv.end());
  }
  lhs.insert(lhs.end(), one_minus_d.begin(), one_minus_d.end());
  rhs.insert(rhs.end(), t.cols[col::kP].begin(), t.cols[col::kP].end());
  if (cfg.demand_aggregates) {
    for (std::uint32_t k = 0; k < S; ++k) {
      lhs.insert(lhs.end(), t.cols[col::kS0 + k].begin(), t.cols[col::kS0 + k].end());
      rhs.insert(rhs.end(), qd.begin(), qd.end());
    }
  }
  const Column prod = p.mul(lhs, rhs);

  ClearanceSetup out;
  std::size_t off = 0;
  for (std::uint32_t k = 0; k < S; ++k, off += n) out.supply.emplace_back(prod.begin() + off, prod.begin() + off + n);
  Column b(prod.begin() + off, prod.begin() + off + n);
  off += n;
  if (cfg.demand_aggregates) {
    for (std::uint32_t k = 0; k < S; ++k, off += n) out.demand.emplace_back(prod.begin() + off, prod.begin() + off + n);
  }

  // L_j = d_j L_{j-1} + (1 - d_j) p_j as a prefix composition of affine maps.
  Column a = t.cols[col::kD];
  for (std::size_t s = 1; s < n; s *= 2) {
    Column l, r;
    for (std::size_t j = s; j < n; ++j) {
      l.push_back(a[j]);
      r.push_back(a[j - s]);
    }
    for (std::size_t j = s; j < n; ++j) {
      l.push_back(a[j]);
      r.push_back(b[j - s]);
    }
    const Column pr = p.mul(l, r);
    const std::size_t m = n - s;
    for (std::size_t j = n; j-- > s;) {
      a[j] = pr[j - s];
      b[j] = p.field().add(pr[m + j - s], b[j]);
    }
  }
  out.gain.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.gain[j] = j ? p.field().sub(b[j], b[j - 1]) : b[j];
  return out;
}

struct SharedClearance {
  Column accept;  // A
  Fe sigma;
  Fe phi;
  Fe nu;
  std::vector<Fe> supplier_volume;
  std::vector<Fe> demand_volume;  // extension, empty unless enabled
  Column nu_trace;
};

/// The sequential scan: c_j = [nu < delta]; nu += c_j q_j. Because c is a
/// prefix of ones, the remaining updates are one batched round after the loop.
inline SharedClearance market_clearance(Party& p, const SharedTable& t, Fe delta, const ClearanceSetup& setup,
                                        const AuctionConfig& cfg) {
  if (!t.sorted) throw PolicyViolation("clearance refused: bids are not sorted");
  const Field& f = p.field();
  const std::size_t n = t.rows();
  const std::uint32_t S = cfg.n_suppliers;
  SharedClearance r;
  r.nu = f.zero();
  r.accept.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Fe c = p.lt({r.nu}, {delta}, cfg.params.sum_bits)[0];
    const Fe cq = p.mul({c}, {t.cols[col::kQ][j]})[0];
    r.nu = f.add(r.nu, cq);
    r.accept[j] = c;
    if (cfg.instrument) r.nu_trace.push_back(r.nu);
  }

  Column lhs, rhs;
  auto push = [&](const Column& v) {
    lhs.insert(lhs.end(), r.accept.begin(), r.accept.end());
    rhs.insert(rhs.end(), v.begin(), v.end());
  };
  push(setup.gain);
  for (const Column& v : setup.supply) push(v);
  for (const Column& v : setup.demand) push(v);
  const Column prod = p.mul(lhs, rhs);

  auto sum_block = [&](std::size_t block) {
    Fe acc = f.zero();
    for (std::size_t j = 0; j < n; ++j) acc = f.add(acc, prod[block * n + j]);
    return acc;
  };
  r.sigma = sum_block(0);
  r.phi = f.zero();
  for (std::uint32_t k = 0; k < S; ++k) {
    r.supplier_volume.push_back(sum_block(1 + k));
    r.phi = f.add(r.phi, r.supplier_volume.back());
  }
  for (std::uint32_t k = 0; k < setup.demand.size(); ++k) {
    // (1 - c) d q s = d q s - c d q s
    r.demand_volume.push_back(f.sub(p.sum(setup.demand[k]), sum_block(1 + S + k)));
  }
  return r;
}

/// Entry j is b_j for accepted supply bids (resp. accepted demand bids) and 0 otherwise.
inline std::pair<Column, Column> accepted_ids(Party& p, const SharedTable& t, const Column& accept) {
  const std::size_t n = t.rows();
  Column l = accept, r = p.one_minus(t.cols[col::kD]);
  const Column not_a = p.one_minus(accept);
  l.insert(l.end(), not_a.begin(), not_a.end());
  r.insert(r.end(), t.cols[col::kD].begin(), t.cols[col::kD].end());
  const Column sel = p.mul(l, r);
  Column ids = t.cols[col::kB];
  ids.insert(ids.end(), t.cols[col::kB].begin(), t.cols[col::kB].end());
  const Column out = p.mul(sel, ids);
  return {Column(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n)),
          Column(out.begin() + static_cast<std::ptrdiff_t>(n), out.end())};
}

// ---------------------------------------------------------------------------
// Informing phases.

/// Reshuffles (bids, A), opens the identifiers and sends each tuple with the
/// trading price to the dealer registered for it.
inline void inform_users(Party& p, const SharedTable& t, const SharedClearance& cl, const net::RoleRegistry& reg,
                         EvaluatorOutput& out) {
  SharedTable msg;
  msg.cols = t.cols;
  msg.cols.push_back(cl.accept);
  p.shuffle(msg);
  const std::vector<Fe> ids = p.open(msg.cols[col::kB], OpenTag::kBidIdentifier, &msg);
  for (std::size_t i = 0; i < msg.rows(); ++i) {
    const auto dealer = reg.dealer_of_bid(ids[i].v);
    if (!dealer) {
      out.dropped_ids.push_back(ids[i].v);
      continue;
    }
    Column row;
    for (const Column& c : msg.cols) row.push_back(c[i]);
    row.push_back(cl.sigma);
    p.send_shares({net::Role::kDealer, *dealer}, net::Op::kNotifyUser, ids[i].v, 0, row);
  }
}

/// Sends supplier k its share of S_k and of sigma; retries, then gives up on
/// that supplier only.
inline void inform_suppliers(Party& p, const SharedClearance& cl, const AuctionConfig& cfg, EvaluatorOutput& out) {
  for (std::uint32_t k = 1; k <= cfg.n_suppliers; ++k) {
    Column values{cl.supplier_volume[k - 1], cl.sigma};
    if (!cl.demand_volume.empty()) values.push_back(cl.demand_volume[k - 1]);
    bool sent = false;
    for (int attempt = 0; attempt <= cfg.supplier_retries && !sent; ++attempt) {
      try {
        p.send_shares({net::Role::kSupplier, k}, net::Op::kNotifySupplier, cfg.period, 0, values);
        sent = true;
      } catch (const net::Unreachable&) {
        if (attempt < cfg.supplier_retries) std::this_thread::sleep_for(cfg.retry_backoff * (attempt + 1));
      }
    }
    if (!sent) out.unreachable_suppliers.push_back(k);
  }
}

// ---------------------------------------------------------------------------
// Full evaluator run: offline pool, then the online phases.

inline EvaluatorOutput run_evaluator(Party& p, const AuctionConfig& cfg, const net::RoleRegistry& reg,
                                     std::size_t n_max) {
  EvaluatorOutput out;
  p.begin_offline();
  p.prepare(pool_plan(n_max, cfg));
  p.begin_online();

  SharedTable t = intake(p, cfg, out);
  const std::size_t n = t.rows();
  if (n > n_max) throw PoolExhausted("more bids admitted than the offline pool was sized for");

  p.set_phase("randomise");
  p.shuffle(t);
  if (cfg.instrument) out.snap.first_order_ids = t.cols[col::kB];
  const std::size_t tau = t.cols.size();
  t.cols.emplace_back(n);
  for (std::size_t i = 0; i < n; ++i) t.cols[tau][i] = p.field().from_u64(i);
  p.shuffle(t);

  p.set_phase("sort");
  p.sort(t, col::kP, tau, cfg.params.value_bits, tiebreak_bits(n));
  t.cols.pop_back();

  p.set_phase("aggregate");
  auto [qd, delta] = aggregate_demand(p, t);

  p.set_phase("clearance_setup");
  const ClearanceSetup setup = clearance_setup(p, t, qd, cfg);

  p.set_phase("clearance");
  SharedClearance cl = market_clearance(p, t, delta, setup, cfg);

  if (cfg.instrument) {
    p.set_phase("accepted");
    auto [sup, dem] = accepted_ids(p, t, cl.accept);
    out.snap.sorted_ids = t.cols[col::kB];
    out.snap.accept = cl.accept;
    out.snap.nu_trace = cl.nu_trace;
    out.snap.supplier_volume = cl.supplier_volume;
    out.snap.accepted_supply = std::move(sup);
    out.snap.accepted_demand = std::move(dem);
    out.snap.delta = delta;
    out.snap.phi = cl.phi;
    out.snap.nu = cl.nu;
  }

  p.set_phase("inform_users");
  out.sigma = p.open({cl.sigma}, OpenTag::kTradingPrice)[0].v;
  inform_users(p, t, cl, reg, out);

  p.set_phase("inform_suppliers");
  inform_suppliers(p, cl, cfg, out);
  p.end_online();
  return out;
}

}  // namespace lem::auction
