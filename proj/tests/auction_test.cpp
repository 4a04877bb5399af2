#include <gtest/gtest.h>

#include <algorithm>

#include "bidgen.hpp"
#include "lem/abb/local.hpp"
#include "lem/auction/session.hpp"

using namespace lem;
using namespace lem::auction;

namespace {

RunOptions options(std::uint32_t suppliers, u64 seed = 1) {
  RunOptions o;
  o.auction.n_suppliers = suppliers;
  o.auction.seed = seed;
  o.auction.session = 7;
  o.auction.period = 42;
  o.auction.bit_chunk = 1 << 14;
  o.verify = true;
  o.omit_timing = true;
  return o;
}

// demand(q=1,p=2), supply(q=3,p=5), supply(q=2,p=7), demand(q=4,p=9); both
// supply bids belong to supplier 2.
std::vector<Bid> four_bids() {
  return {{1, 1, 2, true, 1, 0}, {2, 3, 5, false, 2, 0}, {3, 2, 7, false, 2, 0}, {4, 4, 9, true, 3, 0}};
}

u64 supplier_volume(const RunReport& r, std::uint32_t k) {
  for (const auto& s : r.per_supplier) {
    if (s.supplier_id == k) return s.volume_wh;
  }
  ADD_FAILURE() << "no view for supplier " << k;
  return 0;
}

}  // namespace

TEST(Auction, FourBidExample) {
  const RunReport r = run_local(four_bids(), options(3));
  ASSERT_TRUE(r.verification);
  EXPECT_TRUE(r.verification->pass) << ::testing::PrintToString(r.verification->mismatches);
  EXPECT_EQ(r.sigma, 7u);
  EXPECT_EQ(r.phi, 5u);
  EXPECT_EQ(r.accepted_supply_ids, (std::vector<u64>{2, 3}));
  EXPECT_EQ(r.accepted_demand_ids, (std::vector<u64>{4}));
  EXPECT_EQ(supplier_volume(r, 1), 0u);
  EXPECT_EQ(supplier_volume(r, 2), 5u);
  EXPECT_EQ(supplier_volume(r, 3), 0u);
  EXPECT_EQ(r.verification->expected.accept, (std::vector<int>{1, 1, 1, 0}));
  EXPECT_EQ(r.verification->expected.nu, 6);
  EXPECT_EQ(r.overshoot, 1);
  for (const DealerView& d : r.dealers) EXPECT_EQ(d.sigma, 7u);
  const auto seller = std::find_if(r.dealers.begin(), r.dealers.end(), [](const auto& d) { return d.bid_id == 3; });
  ASSERT_NE(seller, r.dealers.end());
  EXPECT_TRUE(seller->traded);
  EXPECT_EQ(seller->q_wh, 2u);
}

TEST(Auction, DemandAggregate) {
  const std::vector<Bid> bids{{1, 3, 10, true, 1, 0}, {2, 4, 11, true, 1, 0}, {3, 9, 3, false, 1, 0}};
  const RunReport r = run_local(bids, options(1));
  EXPECT_TRUE(r.verification->pass);
  EXPECT_EQ(r.verification->expected.delta, 7);
  EXPECT_EQ(r.sigma, 3u);
  EXPECT_EQ(r.phi, 9u);
}

TEST(Auction, NoDemandVoidsThePeriod) {
  const std::vector<Bid> bids{{1, 3, 10, false, 1, 0}, {2, 4, 11, false, 2, 0}};
  const RunReport r = run_local(bids, options(2));
  EXPECT_TRUE(r.verification->pass);
  EXPECT_EQ(r.sigma, 0u);
  EXPECT_TRUE(r.void_period);
  EXPECT_EQ(r.phi, 0u);
  EXPECT_TRUE(r.accepted_supply_ids.empty());
}

TEST(Auction, OneSupplyOneDemand) {
  const std::vector<Bid> bids{{1, 5, 4, false, 1, 0}, {2, 5, 10, true, 1, 0}};
  const RunReport r = run_local(bids, options(1));
  EXPECT_TRUE(r.verification->pass);
  EXPECT_EQ(r.sigma, 4u);
  EXPECT_EQ(r.phi, 5u);
  EXPECT_EQ(r.verification->expected.accept, (std::vector<int>{1, 0}));
  EXPECT_EQ(r.accepted_demand_ids, (std::vector<u64>{2}));
  EXPECT_EQ(r.overshoot, 0);
}

TEST(Auction, EmptyMarket) {
  const RunReport r = run_local({}, options(2));
  EXPECT_EQ(r.n_bids, 0u);
  EXPECT_EQ(r.sigma, 0u);
  EXPECT_EQ(r.phi, 0u);
  EXPECT_TRUE(r.verification->pass);
}

TEST(Auction, SentinelsAreInert) {
  const FieldParams p;
  std::vector<Bid> bids = four_bids();
  bids.push_back(supply_sentinel(10, p));
  bids.push_back(demand_sentinel(11));
  const RunReport r = run_local(bids, options(3));
  EXPECT_TRUE(r.verification->pass);
  EXPECT_EQ(r.sigma, 7u);
  EXPECT_EQ(r.phi, 5u);
  EXPECT_EQ(r.dealers.size(), 6u);
}

TEST(Auction, RandomScenariosMatchOracle) {
  for (u64 seed = 1; seed <= 12; ++seed) {
    const std::size_t n = 4 + seed * 3;
    const auto bids = lemtest::random_bids(n, seed, 4, 5000, 6);
    const RunReport r = run_local(bids, options(4, seed));
    ASSERT_TRUE(r.verification);
    EXPECT_TRUE(r.verification->pass) << "seed " << seed << ": " << ::testing::PrintToString(r.verification->mismatches);
    u64 sum = 0;
    for (const auto& s : r.per_supplier) sum += s.volume_wh;
    EXPECT_EQ(sum, r.phi);
    EXPECT_TRUE(std::is_sorted(r.verification->expected.nu_trace.begin(), r.verification->expected.nu_trace.end()));
    EXPECT_GE(r.overshoot, 0);
  }
}

TEST(Auction, ClearanceCostLaw) {
  const std::uint32_t S = 3;
  const std::size_t n = 24;
  RunOptions o = options(S);
  o.verify = false;
  const RunReport r = run_local(lemtest::random_bids(n, 3, S), o);
  const abb::Metrics& m = r.parties[0].metrics;
  EXPECT_EQ(m.at("clearance").comparisons, n);
  EXPECT_EQ(m.at("clearance").multiplications, n * (2 + S));
  EXPECT_EQ(m.at("aggregate").multiplications, n);
  EXPECT_EQ(m.at("sort").comparisons % 2, 0u);
  EXPECT_GT(m.at("sort").comparisons, 0u);
  u64 rounds = 0;
  for (const auto& inv : m.invocations()) rounds += abb::costs::rounds_of(inv.key);
  EXPECT_EQ(rounds, m.total().rounds);
}

TEST(Auction, DemandAggregatesExtension) {
  RunOptions o = options(3);
  o.auction.demand_aggregates = true;
  const RunReport r = run_local(four_bids(), o);
  EXPECT_TRUE(r.verification->pass);
  ASSERT_TRUE(r.per_supplier[2].demand_wh);
  EXPECT_EQ(*r.per_supplier[2].demand_wh, 4u);
  EXPECT_EQ(*r.per_supplier[0].demand_wh, 0u);
}

TEST(Auction, UnreachableSupplierIsSkipped) {
  RunOptions o = options(3);
  o.down_suppliers = {1};
  o.auction.retry_backoff = std::chrono::milliseconds(1);
  const RunReport r = run_local(four_bids(), o);
  EXPECT_EQ(r.unreachable_suppliers, (std::vector<std::uint32_t>{1}));
  EXPECT_FALSE(r.phi_complete);
  EXPECT_EQ(supplier_volume(r, 2), 5u);
  EXPECT_TRUE(r.verification->pass);
}

TEST(Auction, MalformedSubmissionIsExcluded) {
  RunOptions o = options(3);
  o.corrupt_dealers = {1};
  const RunReport r = run_local(four_bids(), o);
  EXPECT_EQ(r.excluded_ids, (std::vector<u64>{1}));
  EXPECT_EQ(r.n_bids, 3u);
  EXPECT_EQ(r.dealers.size(), 3u);
}

TEST(Auction, DealerValidation) {
  std::vector<Bid> bids = four_bids();
  bids.push_back({9, 1, u64{1} << 20, false, 1, 0});
  bids.push_back({10, 1, 5, false, 7, 0});
  const RunReport r = run_local(bids, options(3));
  ASSERT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(r.rejected[0].bid_id, 9u);
  EXPECT_EQ(r.rejected[1].bid_id, 10u);
  EXPECT_EQ(r.n_bids, 4u);

  std::vector<Bid> dup = four_bids();
  dup.push_back(dup.front());
  EXPECT_THROW(run_local(dup, options(3)), ConfigError);

  std::vector<Bid> heavy;
  for (u64 i = 1; i <= 5; ++i) heavy.push_back({i, (u64{1} << 20) - 1, 5, false, 1, 0});
  EXPECT_THROW(run_local(heavy, options(1)), ConfigError);
}

TEST(Auction, PublicBoundEnforced) {
  RunOptions o = options(3);
  o.auction.max_bids = 3;
  EXPECT_THROW(run_local(four_bids(), o), ConfigError);
  o.auction.max_bids = 8;
  const RunReport r = run_local(four_bids(), o);
  EXPECT_EQ(r.sigma, 7u);
}

TEST(Auction, ClearanceRefusesUnsortedTable) {
  abb::PartyConfig pc;
  pc.seed = 3;
  pc.session = 1;
  abb::LocalTrio trio(pc);
  AuctionConfig cfg;
  cfg.n_suppliers = 1;
  EXPECT_THROW(trio.run([&](Party& p) {
    SharedTable t;
    t.cols.assign(bid_width(1), Column(2, Fe{0}));
    const ClearanceSetup setup{Column(2), {Column(2)}, {}};
    market_clearance(p, t, Fe{0}, setup, cfg);
  }),
               PolicyViolation);
}

TEST(Auction, TraceIndependentOfBidValues) {
  RunOptions o = options(3);
  o.verify = false;
  o.auction.record_transcript = true;
  const RunReport a = run_local(lemtest::random_bids(16, 1, 3), o);
  const RunReport b = run_local(lemtest::random_bids(16, 2, 3), o);
  auto outside_sort = [](const RunReport& r) {
    std::vector<abb::Metrics::Invocation> v;
    for (const auto& inv : r.parties[0].metrics.invocations()) {
      if (inv.phase != "sort") v.push_back(inv);
    }
    return v;
  };
  EXPECT_EQ(outside_sort(a), outside_sort(b));
  for (const char* ph : {"intake", "randomise", "aggregate", "clearance_setup", "clearance", "inform_users"}) {
    EXPECT_EQ(a.parties[0].metrics.at(ph).bytes_sent, b.parties[0].metrics.at(ph).bytes_sent) << ph;
    EXPECT_EQ(a.parties[0].metrics.at(ph).rounds, b.parties[0].metrics.at(ph).rounds) << ph;
  }
}

TEST(Auction, DeterministicReports) {
  RunOptions o = options(3, 11);
  o.auction.record_transcript = true;
  const auto bids = lemtest::random_bids(20, 5, 3, 100, 4);
  const RunReport a = run_local(bids, o);
  const RunReport b = run_local(bids, o);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  for (int p = 0; p < kParties; ++p) EXPECT_EQ(a.parties[p].transcript_bytes, b.parties[p].transcript_bytes);
}

TEST(Auction, TcpMatchesMemory) {
  RunOptions o = options(3, 4);
  o.auction.record_transcript = true;
  const auto bids = lemtest::random_bids(12, 9, 3, 100, 4);
  const RunReport mem = run_local(bids, o);
  o.backend = Backend::kTcp;
  const RunReport tcp = run_local(bids, o);
  EXPECT_EQ(to_json(mem).dump(), to_json(tcp).dump());
  for (int p = 0; p < kParties; ++p) EXPECT_EQ(mem.parties[p].transcript_bytes, tcp.parties[p].transcript_bytes);
  EXPECT_TRUE(tcp.verification->pass);
}

TEST(Auction, PoolPlanScalesWithBound) {
  AuctionConfig cfg;
  EXPECT_EQ(pool_plan(0, cfg).bits, 0u);
  EXPECT_LT(pool_plan(100, cfg).bits, pool_plan(200, cfg).bits);
  EXPECT_EQ(pool_plan(100, cfg).shuffles, 3u);
  EXPECT_EQ(tiebreak_bits(1), 1);
  EXPECT_EQ(tiebreak_bits(256), 8);
  EXPECT_EQ(tiebreak_bits(257), 9);
}
