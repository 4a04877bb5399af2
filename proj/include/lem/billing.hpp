#pragma once

// Meter-side bill computation with one-time zero-sum masks, and the
// supplier-side ledger that can only unmask complete billing cycles.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "lem/error.hpp"
#include "lem/field.hpp"
#include "lem/random.hpp"

namespace lem::billing {

/// L masks summing to zero: L - 1 uniform draws and their negated sum.
inline std::vector<Fe> gen_masks(const Field& f, std::size_t L, Rng& rng) {
  if (L == 0) throw BillingError("a billing cycle needs at least one period");
  std::vector<Fe> s(L);
  Fe acc = f.zero();
  for (std::size_t i = 0; i + 1 < L; ++i) {
    s[i] = Fe{rng.below(f.modulus())};
    acc = f.add(acc, s[i]);
  }
  s[L - 1] = f.neg(acc);
  return s;
}

struct Tariff {
  i64 retail_sell = 20;  // cents/kWh charged by the supplier
  i64 retail_buy = 4;    // cents/kWh paid for energy fed into the grid
};

/// Metered and locally traded energy of one user in one period, in Wh.
struct PeriodUsage {
  u64 import_wh = 0;
  u64 export_wh = 0;
  u64 traded_buy_wh = 0;
  u64 traded_sell_wh = 0;
  u64 sigma = 0;  // trading price, cents/kWh
};

struct PeriodBill {
  i64 cents = 0;
  bool imbalance = false;  // traded more than was metered
};

/// floor(n / 1000 + 1/2) for signed n: milli-cents to cents, halves rounded up.
inline i64 round_millicents(i64 n) {
  const i64 t = n + 500;
  return t >= 0 ? t / 1000 : -((-t + 999) / 1000);
}

/// Local trades are settled at sigma, residuals at retail. An import
/// residual below zero (bought more than used) is credited at the buy-back
/// rate; an export residual below zero (sold more than fed in) is charged at
/// the retail rate.
inline PeriodBill compute_period_bill(const PeriodUsage& u, const Tariff& t) {
  const i64 sigma = static_cast<i64>(u.sigma);
  const i64 import_res = static_cast<i64>(u.import_wh) - static_cast<i64>(u.traded_buy_wh);
  const i64 export_res = static_cast<i64>(u.export_wh) - static_cast<i64>(u.traded_sell_wh);
  PeriodBill b;
  b.imbalance = import_res < 0 || export_res < 0;
  i64 n = sigma * static_cast<i64>(u.traded_buy_wh) - sigma * static_cast<i64>(u.traded_sell_wh);
  n += import_res >= 0 ? t.retail_sell * import_res : t.retail_buy * import_res;
  n -= export_res >= 0 ? t.retail_buy * export_res : t.retail_sell * export_res;
  b.cents = round_millicents(n);
  return b;
}

struct MaskedReport {
  u64 user_id = 0;
  u64 cycle = 0;
  u64 period = 0;  // 0-based within the cycle
  Fe c;

  friend bool operator==(const MaskedReport&, const MaskedReport&) = default;
};

inline MaskedReport mask_and_report(const Field& f, u64 user, u64 cycle, u64 period, Fe x, Fe mask) {
  return {user, cycle, period, f.add(x, mask)};
}

/// Sum of one complete cycle of reports in Z_M.
inline Fe aggregate_residue(const Field& f, const std::vector<MaskedReport>& reports, std::size_t L) {
  if (reports.size() != L) {
    throw BillingError("bill refused: " + std::to_string(reports.size()) + " of " + std::to_string(L) +
                       " period reports present");
  }
  std::set<u64> periods;
  Fe acc = f.zero();
  for (const auto& r : reports) {
    if (r.period >= L || !periods.insert(r.period).second) {
      throw BillingError("bill refused: period " + std::to_string(r.period) + " missing or repeated");
    }
    acc = f.add(acc, r.c);
  }
  return acc;
}

/// The cycle sum decoded as signed cents.
inline i64 aggregate_bill(const Field& f, const std::vector<MaskedReport>& reports, std::size_t L) {
  return f.to_signed(aggregate_residue(f, reports, L));
}

/// Meter side: holds the masks of the current cycle and hands each out once.
class Meter {
 public:
  Meter(const FieldParams& params, u64 user, u64 cycle, std::size_t L, Rng& rng)
      : field_(params), codec_(field_, params.value_bits), user_(user), cycle_(cycle), masks_(gen_masks(field_, L, rng)),
        used_(L, false) {}

  MaskedReport report(u64 period, i64 bill_cents) {
    if (period >= masks_.size()) throw BillingError("period " + std::to_string(period) + " outside the cycle");
    if (used_[period]) {
      throw BillingError("mask for user " + std::to_string(user_) + " period " + std::to_string(period) +
                         " already used");
    }
    used_[period] = true;
    return mask_and_report(field_, user_, cycle_, period, codec_.encode(bill_cents), masks_[period]);
  }

  const std::vector<Fe>& masks() const { return masks_; }

 private:
  Field field_;
  SignedCodec codec_;
  u64 user_;
  u64 cycle_;
  std::vector<Fe> masks_;
  std::vector<bool> used_;
};

/// Supplier side: accepts at most one report per (user, cycle, period).
class Ledger {
 public:
  Ledger(const Field& f, std::size_t L) : field_(f), L_(L) {
    if (L == 0) throw BillingError("a billing cycle needs at least one period");
  }

  void submit(const MaskedReport& r) {
    if (r.period >= L_) throw BillingError("report period " + std::to_string(r.period) + " outside the cycle");
    auto& cyc = reports_[{r.user_id, r.cycle}];
    if (!cyc.emplace(r.period, r).second) {
      throw BillingError("duplicate report for user " + std::to_string(r.user_id) + " cycle " +
                         std::to_string(r.cycle) + " period " + std::to_string(r.period));
    }
  }

  i64 bill(u64 user, u64 cycle) const {
    std::vector<MaskedReport> rs;
    auto it = reports_.find({user, cycle});
    if (it != reports_.end()) {
      for (const auto& [p, r] : it->second) rs.push_back(r);
    }
    return aggregate_bill(field_, rs, L_);
  }

  std::vector<std::pair<u64, u64>> accounts() const {
    std::vector<std::pair<u64, u64>> out;
    for (const auto& [k, v] : reports_) out.push_back(k);
    return out;
  }

 private:
  Field field_;
  std::size_t L_;
  std::map<std::pair<u64, u64>, std::map<u64, MaskedReport>> reports_;
};

// ---------------------------------------------------------------------------
// JSON: report {user_id, cycle, period, c: decimal string}; bill {user_id, cycle, bill_cents}.

inline nlohmann::json to_json(const MaskedReport& r) {
  return {{"user_id", r.user_id}, {"cycle", r.cycle}, {"period", r.period}, {"c", std::to_string(r.c.v)}};
}

inline MaskedReport report_from_json(const Field& f, const nlohmann::json& j) {
  try {
    MaskedReport r;
    r.user_id = j.at("user_id").get<u64>();
    r.cycle = j.at("cycle").get<u64>();
    r.period = j.at("period").get<u64>();
    const std::string c = j.at("c").get<std::string>();
    std::size_t used = 0;
    const u64 v = std::stoull(c, &used);
    if (used != c.size() || v >= f.modulus()) throw ConfigError("masked report value '" + c + "' is not in Z_M");
    r.c = Fe{v};
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed masked report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("malformed masked report value: ") + e.what());
  }
}

inline nlohmann::json bill_json(u64 user, u64 cycle, i64 cents) {
  return {{"user_id", user}, {"cycle", cycle}, {"bill_cents", cents}};
}

}  // namespace lem::billing
