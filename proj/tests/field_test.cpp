#include <gtest/gtest.h>

#include <random>

#include "lem/field.hpp"

using namespace lem;

namespace {

// Schoolbook extended Euclid, independent of Field::inv.
i64 egcd_inverse(i64 a, i64 m) {
  i64 old_r = a, r = m, old_s = 1, s = 0;
  while (r != 0) {
    const i64 q = old_r / r;
    std::tie(old_r, r) = std::make_pair(r, old_r - q * r);
    std::tie(old_s, s) = std::make_pair(s, old_s - q * s);
  }
  return ((old_s % m) + m) % m;
}

}  // namespace

TEST(Field, SmallModulusExamples) {
  const Field f(101);
  EXPECT_EQ(f.add(Fe{100}, Fe{5}).v, 4u);
  EXPECT_EQ(f.mul(Fe{7}, Fe{13}).v, (7 * 13) % 101);
  EXPECT_EQ(f.inv(Fe{1}).v, 1u);
  EXPECT_EQ(f.inv(Fe{2}).v, static_cast<u64>(egcd_inverse(2, 101)));
  EXPECT_THROW(f.inv(Fe{0}), FieldError);
  EXPECT_EQ(f.sub(Fe{3}, Fe{5}).v, 99u);
  EXPECT_EQ(f.neg(Fe{0}).v, 0u);
}

TEST(Field, InverseMatchesExtendedEuclid) {
  const Field f(101);
  for (u64 a = 1; a < 101; ++a) {
    EXPECT_EQ(f.inv(Fe{a}).v, static_cast<u64>(egcd_inverse(static_cast<i64>(a), 101)));
    EXPECT_EQ(f.mul(Fe{a}, f.inv(Fe{a})).v, 1u);
  }
}

TEST(Field, OperationsAgreeWithWideIntegerOracle) {
  const FieldParams p;
  const Field f(p);
  const u128 m = p.modulus;
  std::mt19937_64 gen(7);
  for (int i = 0; i < 100000; ++i) {
    const u64 a = gen() % p.modulus;
    const u64 b = i % 10 == 0 ? p.modulus - 1 - (gen() % 4) : gen() % p.modulus;
    EXPECT_EQ(f.add(Fe{a}, Fe{b}).v, static_cast<u64>((static_cast<u128>(a) + b) % m));
    EXPECT_EQ(f.sub(Fe{a}, Fe{b}).v, static_cast<u64>((static_cast<u128>(a) + m - b) % m));
    EXPECT_EQ(f.mul(Fe{a}, Fe{b}).v, static_cast<u64>(static_cast<u128>(a) * b % m));
    EXPECT_EQ(f.neg(Fe{a}).v, static_cast<u64>((m - a) % m));
  }
}

TEST(Field, GenericModulusAgreesWithOracle) {
  const u64 m = 2305843009213693951ULL;  // 2^61 - 1
  const Field f(m);
  std::mt19937_64 gen(9);
  for (int i = 0; i < 20000; ++i) {
    const u64 a = gen() % m, b = gen() % m;
    EXPECT_EQ(f.mul(Fe{a}, Fe{b}).v, static_cast<u64>(static_cast<u128>(a) * b % m));
  }
}

TEST(Field, MultiplicativeIdentity) {
  const Field f(FieldParams{});
  std::mt19937_64 gen(3);
  for (int i = 0; i < 1000; ++i) {
    const Fe x{gen() % f.modulus()};
    EXPECT_EQ(f.mul(x, f.one()), x);
  }
}

TEST(Field, SquareRootsAndInverseSquareRoots) {
  for (u64 m : {101ULL, 97ULL, 9223372036854775783ULL}) {  // 97 = 1 mod 4 exercises Tonelli-Shanks
    const Field f(m);
    std::mt19937_64 gen(m);
    for (int i = 0; i < 500; ++i) {
      const Fe r{1 + gen() % (m - 1)};
      const Fe sq = f.mul(r, r);
      const auto s = f.sqrt(sq);
      ASSERT_TRUE(s.has_value());
      EXPECT_EQ(f.mul(*s, *s), sq);
      const auto is = f.inv_sqrt(sq);
      ASSERT_TRUE(is.has_value());
      EXPECT_EQ(f.mul(*s, *is), f.one());
    }
  }
  const Field f(101);
  int non_residues = 0;
  for (u64 a = 1; a < 101; ++a) non_residues += !f.sqrt(Fe{a}).has_value();
  EXPECT_EQ(non_residues, 50);
}

TEST(FieldParams, DefaultsSatisfyComparisonSlack) {
  const FieldParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_TRUE(detail::is_prime_u64(p.modulus));
  EXPECT_EQ(p.modulus, (u64{1} << 63) - 25);
  EXPECT_EQ(p.top(), (u64{1} << 20) - 1);
  EXPECT_TRUE(p.supports_width(p.value_bits + 1));
  EXPECT_TRUE(p.supports_width(p.sum_bits));
  EXPECT_FALSE(p.supports_width(p.sum_bits + 1));
}

TEST(FieldParams, RejectsBadModuli) {
  FieldParams p;
  p.modulus = 1000;
  EXPECT_THROW(p.validate(), ConfigError);
  p.modulus = 2305843009213693951ULL;  // prime, but too small for width sum_bits with kappa = 40
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_NO_THROW(p.validate_modulus());
  EXPECT_NO_THROW(FieldParams::toy(101).validate_modulus());
}

TEST(FieldParams, PrimalityTestMatchesTrialDivision) {
  for (u64 n = 0; n < 5000; ++n) {
    bool prime = n >= 2;
    for (u64 d = 2; d * d <= n; ++d) {
      if (n % d == 0) {
        prime = false;
        break;
      }
    }
    EXPECT_EQ(detail::is_prime_u64(n), prime) << n;
  }
}

TEST(Encoding, HouseholdVolumeAndPrice) {
  const FieldParams p;
  const auto wh = units::watt_hours(p);
  EXPECT_EQ(wh.to_units(units::slot_wh(0.637, 30)), 319u);
  EXPECT_EQ(units::cents_per_kwh(p).to_units(0.20), 20u);
  EXPECT_EQ(wh.encode(0).v, 0u);
  EXPECT_THROW(wh.encode(-1), EncodingError);
  EXPECT_THROW(wh.encode(static_cast<double>(u64{1} << 20)), EncodingError);
  EXPECT_EQ(wh.encode(static_cast<double>(p.top())).v, p.top());
}

TEST(Encoding, MonotoneAndRoundTrips) {
  const FieldParams p;
  const auto cents = units::cents_per_kwh(p);
  u64 prev = 0;
  for (int c = 0; c <= 2000; ++c) {
    const double eur = c / 100.0;
    const Fe e = cents.encode(eur);
    EXPECT_EQ(e.v, static_cast<u64>(c));
    EXPECT_DOUBLE_EQ(cents.decode(e), eur);
    EXPECT_GE(e.v, prev);
    prev = e.v;
  }
}

TEST(Encoding, RoundHalfUp) {
  EXPECT_EQ(round_half_up(318.5), 319);
  EXPECT_EQ(round_half_up(318.49), 318);
  EXPECT_EQ(round_half_up(-8.8), -9);
  EXPECT_EQ(round_half_up(-8.5), -8);
  EXPECT_EQ(round_half_up(0.0), 0);
}

TEST(SignedCodec, CenteredRange) {
  const FieldParams p;
  const Field f(p);
  const SignedCodec codec(f, p.value_bits);
  for (i64 v : {0LL, 1LL, -1LL, -9LL, 12345LL, -(1LL << 19) + 1, (1LL << 19) - 1}) {
    EXPECT_EQ(codec.decode(codec.encode(v)), v);
  }
  EXPECT_EQ(codec.encode(-9).v, p.modulus - 9);
  EXPECT_THROW(codec.encode(1LL << 19), EncodingError);
  EXPECT_THROW(codec.decode(Fe{1ULL << 40}), EncodingError);
  EXPECT_EQ(codec.decode_sum(f.add(codec.encode(-500000), codec.encode(-500000))), -1000000);
}
