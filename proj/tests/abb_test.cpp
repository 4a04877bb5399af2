#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "lem/abb/local.hpp"
#include "stats.hpp"

using namespace lem;
using namespace lem::abb;

namespace {

PartyConfig base_config(u64 seed = 1) {
  PartyConfig c;
  c.seed = seed;
  c.session = 99;
  c.debug_open = true;
  c.bit_chunk = 1 << 14;
  return c;
}

const net::NodeId kDealer{net::Role::kDealer, 1};

// Secret-shares plaintext values among the trio and returns each party's column.
void deal(LocalTrio& trio, const std::vector<u64>& values, std::uint8_t slot, u64 seed = 5) {
  const Field f(trio.party(1).params());
  Rng rng(seed, "dealer");
  Column v;
  for (u64 x : values) v.push_back(f.from_u64(x));
  deal_input(trio.gateway(), f, trio.party(1).config().session, kDealer, slot, v, rng);
}

std::vector<u64> plain(const std::vector<Fe>& xs) {
  std::vector<u64> out;
  for (Fe x : xs) out.push_back(x.v);
  return out;
}

// Plaintext quicksort with the engine's pivot and partition rules; counts
// pivot comparisons.
template <typename Key>
std::size_t quicksort_count(std::vector<Key>& xs) {
  std::size_t count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  if (xs.size() >= 2) ranges.emplace_back(0, xs.size());
  while (!ranges.empty()) {
    std::vector<std::pair<std::size_t, std::size_t>> next;
    for (auto [lo, hi] : ranges) {
      const Key piv = xs[hi - 1];
      std::vector<Key> left, right;
      for (std::size_t i = lo; i + 1 < hi; ++i) {
        ++count;
        (xs[i] < piv ? left : right).push_back(xs[i]);
      }
      std::size_t w = lo;
      for (auto& k : left) xs[w++] = k;
      xs[w++] = piv;
      for (auto& k : right) xs[w++] = k;
      if (left.size() >= 2) next.emplace_back(lo, lo + left.size());
      if (right.size() >= 2) next.emplace_back(hi - right.size(), hi);
    }
    ranges = std::move(next);
  }
  return count;
}

}  // namespace

TEST(Abb, InputThenOpen) {
  LocalTrio trio(base_config());
  deal(trio, {5, 0, 123456}, 0);
  auto out = trio.run([](Party& p) { return p.open(p.input(kDealer, 3), OpenTag::kDebug); });
  for (const auto& o : out) EXPECT_EQ(plain(o), (std::vector<u64>{5, 0, 123456}));
}

TEST(Abb, ProductSmallModulus) {
  PartyConfig cfg = base_config();
  cfg.params = FieldParams::toy(101);
  LocalTrio trio(cfg);
  deal(trio, {7, 13}, 0);
  auto out = trio.run([](Party& p) {
    const Column in = p.input(kDealer, 2);
    return p.open(p.mul({in[0]}, {in[1]}), OpenTag::kDebug);
  });
  EXPECT_EQ(out[0][0].v, 91u);
}

TEST(Abb, ProductMatchesPlaintextOnRandomPairs) {
  LocalTrio trio(base_config());
  const Field f(FieldParams{});
  std::mt19937_64 gen(11);
  const std::size_t n = 10000;
  std::vector<u64> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = gen() % f.modulus();
    b[i] = i < 10 ? (i < 5 ? 1 : 0) : gen() % f.modulus();
  }
  deal(trio, a, 0);
  deal(trio, b, 1, 6);
  auto out = trio.run([&](Party& p) {
    const Column x = p.input(kDealer, n, 0);
    const Column y = p.input(kDealer, n, 1);
    return p.open(p.mul(x, y), OpenTag::kDebug);
  });
  for (std::size_t i = 0; i < n; ++i) {
    ASSERT_EQ(out[0][i].v, static_cast<u64>(static_cast<u128>(a[i]) * b[i] % f.modulus())) << i;
  }
  EXPECT_EQ(trio.party(1).metrics().total().multiplications, n);
  EXPECT_EQ(trio.party(1).metrics().total().rounds, 2u);
}

TEST(Abb, OpenPolicy) {
  PartyConfig cfg = base_config();
  cfg.debug_open = false;
  LocalTrio trio(cfg);
  EXPECT_THROW(trio.run([](Party& p) { p.open({Fe{1}}, OpenTag::kNone); }), PolicyViolation);
  LocalTrio trio2(cfg);
  EXPECT_THROW(trio2.run([](Party& p) { p.open({Fe{1}}, OpenTag::kDebug); }), PolicyViolation);
  LocalTrio trio3(cfg);
  EXPECT_THROW(trio3.run([](Party& p) {
    SharedTable t;
    t.cols = {{Fe{1}}};
    p.open(t.cols[0], OpenTag::kBidIdentifier, &t);
  }),
               PolicyViolation);
}

TEST(Abb, BidIdentifierOpensOnlyFromShuffledTable) {
  LocalTrio trio(base_config());
  deal(trio, {11, 22, 33, 44}, 0);
  auto out = trio.run([](Party& p) {
    p.begin_offline();
    p.prepare({20000, 1, 4});
    p.begin_online();
    SharedTable t;
    t.cols = {p.input(kDealer, 4)};
    p.shuffle(t);
    auto ids = p.open(t.cols[0], OpenTag::kBidIdentifier, &t);
    t.cols.push_back(t.cols[0]);
    p.sort(t, 0, 1, 20, 6);
    bool refused = false;
    try {
      p.open(t.cols[0], OpenTag::kBidIdentifier, &t);
    } catch (const PolicyViolation&) {
      refused = true;
    }
    return std::make_pair(plain(ids), refused);
  });
  auto ids = out[0].first;
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<u64>{11, 22, 33, 44}));
  EXPECT_TRUE(out[0].second);
}

TEST(Abb, RandomBitsAreBitsWithBalancedMean) {
  LocalTrio trio(base_config(3));
  auto out = trio.run([](Party& p) {
    p.begin_offline();
    p.prepare({10000, 0, 0});
    p.begin_online();
    const Column b = p.random_bits(10000);
    const Column check = p.sub(p.mul(b, b), b);
    return std::make_pair(p.open(b, OpenTag::kDebug), p.open(check, OpenTag::kDebug));
  });
  std::size_t ones = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    const u64 v = out[0].first[i].v;
    ASSERT_TRUE(v == 0 || v == 1);
    ASSERT_EQ(out[0].second[i].v, 0u);
    ones += v;
  }
  const double mean = static_cast<double>(ones) / 10000.0;
  EXPECT_GE(mean, 0.47);
  EXPECT_LE(mean, 0.53);
}

TEST(Abb, PoolExhaustionIsAnError) {
  LocalTrio trio(base_config());
  EXPECT_THROW(trio.run([](Party& p) {
    p.begin_offline();
    p.prepare({100, 0, 0});
    p.begin_online();
    p.lt({Fe{1}, Fe{2}}, {Fe{2}, Fe{1}}, 20);
  }),
               PoolExhausted);
}

TEST(Abb, NoOfflineMaterialAfterOnlineStart) {
  LocalTrio trio(base_config());
  EXPECT_THROW(trio.run([](Party& p) {
    p.begin_online();
    p.prepare({10, 0, 0});
  }),
               PolicyViolation);
}

TEST(Abb, LessThanExhaustiveSixBits) {
  LocalTrio trio(base_config(4));
  std::vector<u64> a, b;
  for (u64 x = 0; x < 64; ++x) {
    for (u64 y = 0; y < 64; ++y) {
      a.push_back(x);
      b.push_back(y);
    }
  }
  deal(trio, a, 0);
  deal(trio, b, 1, 6);
  const std::size_t n = a.size();
  auto out = trio.run([&](Party& p) {
    p.begin_offline();
    p.prepare({n * 46, 0, 0});
    p.begin_online();
    return p.open(p.lt(p.input(kDealer, n, 0), p.input(kDealer, n, 1), 6), OpenTag::kDebug);
  });
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n; ++i) errors += out[1][i].v != (a[i] < b[i] ? 1u : 0u);
  EXPECT_EQ(errors, 0u);
  EXPECT_EQ(trio.party(2).metrics().at("offline").comparisons, 0u);
  EXPECT_EQ(trio.party(2).metrics().total().comparisons, n);
}

TEST(Abb, LessThanRandomFullWidthPairs) {
  LocalTrio trio(base_config(5));
  const FieldParams params;
  std::mt19937_64 gen(21);
  const std::size_t n = 10000;
  std::vector<u64> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = gen() & params.top();
    b[i] = i % 7 == 0 ? a[i] : gen() & params.top();
  }
  a[1] = 0;
  b[1] = params.top();
  a[2] = params.top();
  b[2] = 0;
  deal(trio, a, 0);
  deal(trio, b, 1, 6);
  auto out = trio.run([&](Party& p) {
    p.begin_offline();
    p.prepare({n * 60, 0, 0});
    p.begin_online();
    return p.open(p.lt(p.input(kDealer, n, 0), p.input(kDealer, n, 1), params.value_bits), OpenTag::kDebug);
  });
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n; ++i) errors += out[0][i].v != (a[i] < b[i] ? 1u : 0u);
  EXPECT_EQ(errors, 0u);
  // One open round plus ceil(log2 20) = 5 product rounds.
  const auto& log = trio.party(1).metrics().invocations();
  ASSERT_GE(log.size(), 2u);
  EXPECT_EQ(log[log.size() - 2].key, "lt/w=20");
}

TEST(Abb, EqualityOnRandomPairs) {
  LocalTrio trio(base_config(6));
  const FieldParams params;
  std::mt19937_64 gen(22);
  const std::size_t n = 10000;
  std::vector<u64> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = gen() & params.top();
    const int kind = static_cast<int>(i % 4);
    b[i] = kind == 0 ? a[i] : kind == 1 ? ((a[i] + 1) & params.top()) : gen() & params.top();
  }
  deal(trio, a, 0);
  deal(trio, b, 1, 6);
  auto out = trio.run([&](Party& p) {
    p.begin_offline();
    p.prepare({n * 61, 0, 0});
    p.begin_online();
    return p.open(p.eq(p.input(kDealer, n, 0), p.input(kDealer, n, 1), params.value_bits), OpenTag::kDebug);
  });
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n; ++i) errors += out[0][i].v != (a[i] == b[i] ? 1u : 0u);
  EXPECT_EQ(errors, 0u);
}

TEST(Abb, RoundsMatchCostTable) {
  LocalTrio trio(base_config(7));
  deal(trio, {3, 9, 27, 1, 5}, 0);
  trio.run([](Party& p) {
    p.begin_offline();
    p.prepare({5000, 2, 8});
    p.begin_online();
    SharedTable t;
    const Column x = p.input(kDealer, 5);
    t.cols = {x, p.constant(5, Fe{0})};
    p.shuffle(t);
    for (std::size_t i = 0; i < 5; ++i) t.cols[1][i] = p.field().from_u64(i);
    p.shuffle(t);
    p.sort(t, 0, 1, 20, 3);
    p.mul(t.cols[0], t.cols[0]);
    p.eq(t.cols[0], t.cols[1], 20);
    p.lt(t.cols[0], t.cols[1], 22);
    p.open(t.cols[0], OpenTag::kDebug);
  });
  for (int i = 1; i <= 3; ++i) {
    const Metrics& m = trio.party(i).metrics();
    std::uint64_t expected = 0;
    for (const auto& inv : m.invocations()) expected += static_cast<std::uint64_t>(costs::rounds_of(inv.key));
    EXPECT_EQ(m.total().rounds, expected);
  }
  EXPECT_EQ(costs::lt_rounds(20), 6);
  EXPECT_EQ(costs::eq_rounds(20), 6);
  EXPECT_EQ(costs::lt_rounds(1), 1);
}

TEST(Abb, ShuffleKeepsMultisetAndTuples) {
  LocalTrio trio(base_config(8));
  std::vector<u64> a{1, 2, 3, 4, 5, 6, 7}, b{10, 20, 30, 40, 50, 60, 70};
  deal(trio, a, 0);
  deal(trio, b, 1, 6);
  auto out = trio.run([&](Party& p) {
    p.begin_offline();
    p.prepare({0, 2, 16});
    p.begin_online();
    SharedTable t;
    t.cols = {p.input(kDealer, 7, 0), p.input(kDealer, 7, 1)};
    p.shuffle(t);
    SharedTable single;
    single.cols = {{t.cols[0][0]}};
    p.shuffle(single);
    return std::make_tuple(p.open(t.cols[0], OpenTag::kDebug), p.open(t.cols[1], OpenTag::kDebug),
                           p.open(single.cols[0], OpenTag::kDebug)[0]);
  });
  const auto x = plain(std::get<0>(out[0]));
  const auto y = plain(std::get<1>(out[0]));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], 10 * x[i]);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, a);
  EXPECT_EQ(std::get<2>(out[0]).v, x[0]);
}

TEST(Abb, ShuffleOfFourIsUniform) {
  LocalTrio trio(base_config(9));
  const int trials = 10000;
  auto out = trio.run([&](Party& p) {
    p.begin_offline();
    p.prepare({0, static_cast<std::size_t>(trials), 4});
    p.begin_online();
    std::vector<Fe> opened;
    Column all;
    for (int t = 0; t < trials; ++t) {
      SharedTable tab;
      tab.cols = {{Fe{0}, Fe{1}, Fe{2}, Fe{3}}};
      p.shuffle(tab);
      all.insert(all.end(), tab.cols[0].begin(), tab.cols[0].end());
    }
    return p.open(all, OpenTag::kDebug);
  });
  std::map<std::vector<u64>, std::uint64_t> seen;
  for (int t = 0; t < trials; ++t) {
    std::vector<u64> perm;
    for (int i = 0; i < 4; ++i) perm.push_back(out[0][static_cast<std::size_t>(4 * t + i)].v);
    ++seen[perm];
  }
  ASSERT_EQ(seen.size(), 24u);
  std::vector<std::uint64_t> counts;
  for (const auto& [k, v] : seen) counts.push_back(v);
  EXPECT_GT(lemtest::chi_square_uniform_p(counts), 0.001);
}

TEST(Abb, SortRefusedWithoutShuffle) {
  LocalTrio trio(base_config());
  EXPECT_THROW(trio.run([](Party& p) {
    SharedTable t;
    t.cols = {{Fe{2}, Fe{1}}, {Fe{0}, Fe{1}}};
    p.sort(t, 0, 1, 20, 1);
  }),
               PolicyViolation);
}

TEST(Abb, SortMatchesPlaintextQuicksort) {
  const std::size_t n = 1000;
  LocalTrio trio(base_config(10));
  std::mt19937_64 gen(33);
  std::vector<u64> price(n);
  for (auto& x : price) x = 10000 + gen() % 20001;
  deal(trio, price, 0);
  const int tie_bits = detail::bit_length(n - 1);
  const std::size_t budget = static_cast<std::size_t>(1.5 * 2 * n * std::log(n)) * (20 + 1 + 40 + tie_bits + 40);
  auto out = trio.run([&](Party& p) {
    p.begin_offline();
    p.prepare({budget, 2, n});
    p.begin_online();
    SharedTable t;
    t.cols = {p.input(kDealer, n), p.constant(n, Fe{0})};
    p.shuffle(t);
    for (std::size_t i = 0; i < n; ++i) t.cols[1][i] = p.field().from_u64(i);
    p.shuffle(t);
    const auto before_p = p.open(t.cols[0], OpenTag::kDebug);
    const auto before_t = p.open(t.cols[1], OpenTag::kDebug);
    const auto cmp_before = p.metrics().total().comparisons;
    p.sort(t, 0, 1, 20, tie_bits);
    const auto cmps = p.metrics().total().comparisons - cmp_before;
    return std::make_tuple(before_p, before_t, cmps, p.open(t.cols[0], OpenTag::kDebug),
                           p.open(t.cols[1], OpenTag::kDebug));
  });
  const auto& [bp, bt, cmps, ap, at] = out[0];
  std::vector<std::pair<u64, u64>> keys;
  for (std::size_t i = 0; i < n; ++i) keys.emplace_back(bp[i].v, bt[i].v);
  const std::size_t oracle = quicksort_count(keys);
  EXPECT_EQ(cmps, 2 * oracle);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(ap[i].v, keys[i].first);
    EXPECT_EQ(at[i].v, keys[i].second);
  }
  // Expected quicksort cost 2(n+1)H_n - 4n, about 2 n ln n.
  EXPECT_LT(static_cast<double>(oracle), 2.0 * n * std::log(static_cast<double>(n)));
  EXPECT_GT(static_cast<double>(oracle), 0.8 * (2.0 * n * std::log(static_cast<double>(n)) - 2.85 * n));
}
