#pragma once

// Plaintext reference for clearance and billing. Replays the clearance
// recurrences literally on integers, with no restructuring.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "lem/auction/bid.hpp"

namespace lem::oracle {

using auction::Bid;

struct PlainClearance {
  i64 sigma = 0;
  i64 phi = 0;
  i64 nu = 0;
  i64 delta = 0;
  std::vector<Bid> sorted;
  std::vector<int> accept;       // A_j in sorted order
  std::vector<i64> nu_trace;     // nu after each iteration
  std::vector<i64> per_supplier; // accepted supply volume, index = supplier_id - 1
  std::vector<i64> demand_per_supplier;
  std::vector<u64> accepted_supply_ids;  // ascending
  std::vector<u64> accepted_demand_ids;  // ascending
  i64 accepted_demand_volume = 0;
  i64 overshoot = 0;
  bool void_period = true;
};

/// Runs the scan over bids already in clearance order.
inline PlainClearance clear_sorted(std::vector<Bid> sorted, std::uint32_t n_suppliers) {
  PlainClearance r;
  r.sorted = std::move(sorted);
  r.per_supplier.assign(n_suppliers, 0);
  r.demand_per_supplier.assign(n_suppliers, 0);
  for (const Bid& b : r.sorted) r.delta += static_cast<i64>(b.q_wh) * (b.is_demand ? 1 : 0);
  for (const Bid& b : r.sorted) {
    const i64 q = static_cast<i64>(b.q_wh);
    const i64 p = static_cast<i64>(b.price_cents);
    const i64 d = b.is_demand ? 1 : 0;
    const i64 c = r.nu < r.delta ? 1 : 0;
    r.sigma = r.sigma + (1 - d) * c * (p - r.sigma);
    r.phi = r.phi + (1 - d) * c * q;
    for (std::uint32_t k = 0; k < n_suppliers; ++k) {
      const i64 s = b.supplier_id == k + 1 ? 1 : 0;
      r.per_supplier[k] += s * (1 - d) * c * q;
      r.demand_per_supplier[k] += s * (1 - c) * d * q;
    }
    r.accept.push_back(static_cast<int>(c));
    r.nu = r.nu + c * q;
    r.nu_trace.push_back(r.nu);
  }
  for (std::size_t j = 0; j < r.sorted.size(); ++j) {
    const Bid& b = r.sorted[j];
    if (r.accept[j] && !b.is_demand) r.accepted_supply_ids.push_back(b.bid_id);
    if (!r.accept[j] && b.is_demand) {
      r.accepted_demand_ids.push_back(b.bid_id);
      r.accepted_demand_volume += static_cast<i64>(b.q_wh);
    }
  }
  std::sort(r.accepted_supply_ids.begin(), r.accepted_supply_ids.end());
  std::sort(r.accepted_demand_ids.begin(), r.accepted_demand_ids.end());
  r.overshoot = r.phi - r.accepted_demand_volume;
  r.void_period = r.sigma == 0;
  return r;
}

/// Ascending price; equal prices keep the given order.
inline PlainClearance clear_ordered(std::vector<Bid> bids, std::uint32_t n_suppliers) {
  std::stable_sort(bids.begin(), bids.end(),
                   [](const Bid& a, const Bid& b) { return a.price_cents < b.price_cents; });
  return clear_sorted(std::move(bids), n_suppliers);
}

/// Equal prices are ordered by a permutation drawn from tie_seed.
inline PlainClearance clear_plain(std::vector<Bid> bids, u64 tie_seed, std::uint32_t n_suppliers) {
  std::mt19937_64 gen(tie_seed);
  for (std::size_t i = bids.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(bids[i - 1], bids[pick(gen)]);
  }
  return clear_ordered(std::move(bids), n_suppliers);
}

inline i64 bill_plain(const std::vector<i64>& x) {
  i64 total = 0;
  for (i64 v : x) total += v;
  return total;
}

}  // namespace lem::oracle
