#pragma once

// Prime-field arithmetic over Z_M plus the fixed-point encodings that carry
// energy volumes, prices and bills into the field.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "lem/error.hpp"

namespace lem {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

/// A residue in [0, M). The modulus lives in the owning Field.
struct Fe {
  u64 v = 0;

  constexpr Fe() = default;
  constexpr explicit Fe(u64 value) : v(value) {}

  friend constexpr bool operator==(Fe, Fe) = default;
  friend constexpr auto operator<=>(Fe, Fe) = default;
};

namespace detail {

inline u64 mulmod_u64(u64 a, u64 b, u64 m) {
  return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 powmod_u64(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mulmod_u64(result, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Deterministic Miller-Rabin; this base set is exact for all n < 2^64.
inline bool is_prime_u64(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

inline int bit_length(u64 x) { return x == 0 ? 0 : 64 - __builtin_clzll(x); }

}  // namespace detail

/// Field modulus and the bit budgets the comparison protocols depend on.
///
/// value_bits (k) bounds every encoded application value; stat_sec (kappa)
/// is the statistical masking slack; sum_bits bounds the running volume sums
/// compared during clearance. A masked comparison of width w needs
/// M > 2^(w+kappa) + 2^(w+2), checked by supports_width().
struct FieldParams {
  static constexpr u64 kDefaultModulus = 9223372036854775783ULL;  // 2^63 - 25

  u64 modulus = kDefaultModulus;
  int value_bits = 20;
  int stat_sec = 40;
  int sum_bits = 22;

  bool supports_width(int width) const {
    if (width <= 0 || width + stat_sec >= 63) return false;
    const u128 bound = (static_cast<u128>(1) << (width + stat_sec)) + (static_cast<u128>(1) << (width + 2));
    return static_cast<u128>(modulus) > bound;
  }

  /// Largest value an application field may take; also the sentinel price.
  u64 top() const { return (u64{1} << value_bits) - 1; }

  /// Checks the modulus alone; enough for sharing and multiplication.
  void validate_modulus() const {
    if (modulus < 3 || !detail::is_prime_u64(modulus)) {
      throw ConfigError("field params: modulus " + std::to_string(modulus) + " is not an odd prime");
    }
    if (modulus >= (u64{1} << 63)) {
      throw ConfigError("field params: modulus must be below 2^63");
    }
  }

  /// Full check, including the slack the comparison protocols need.
  void validate() const {
    validate_modulus();
    if (value_bits <= 0 || stat_sec <= 0 || sum_bits < value_bits) {
      throw ConfigError("field params: need k > 0, kappa > 0 and sum_bits >= k");
    }
    const int slack = value_bits + stat_sec + 1;
    if (slack >= 63 || modulus <= (u64{1} << slack)) {
      throw ConfigError("field params: modulus must exceed 2^(k+kappa+1)");
    }
    if (!supports_width(value_bits + 1) || !supports_width(sum_bits)) {
      throw ConfigError("field params: modulus too small for comparison widths k+1 and sum_bits");
    }
  }

  /// Parameters for small-modulus experiments where comparisons are unused.
  static FieldParams toy(u64 modulus) {
    FieldParams p;
    p.modulus = modulus;
    p.value_bits = detail::bit_length(modulus) - 1;
    p.stat_sec = 1;
    p.sum_bits = p.value_bits;
    return p;
  }
};

/// Arithmetic in Z_M. Cheap to copy; all operations are pure.
class Field {
 public:
  explicit Field(u64 modulus) : m_(modulus) {
    if (modulus < 2) throw FieldError("modulus must be at least 2");
    constexpr u64 k63 = u64{1} << 63;
    if (modulus < k63 && k63 - modulus < (u64{1} << 16)) pm_c_ = k63 - modulus;
  }
  explicit Field(const FieldParams& params) : Field(params.modulus) {}

  u64 modulus() const { return m_; }

  Fe from_u64(u64 x) const { return Fe{x % m_}; }

  Fe from_i64(i64 x) const {
    if (x >= 0) return Fe{static_cast<u64>(x) % m_};
    const u64 mag = static_cast<u64>(-(x + 1)) + 1;
    return neg(Fe{mag % m_});
  }

  Fe zero() const { return Fe{0}; }
  Fe one() const { return Fe{1 % m_}; }

  Fe add(Fe a, Fe b) const {
    const u64 s = a.v + b.v;  // both < 2^63, no overflow
    return Fe{s >= m_ ? s - m_ : s};
  }

  Fe sub(Fe a, Fe b) const { return Fe{a.v >= b.v ? a.v - b.v : a.v + (m_ - b.v)}; }

  Fe neg(Fe a) const { return Fe{a.v == 0 ? 0 : m_ - a.v}; }

  Fe mul(Fe a, Fe b) const {
    const u128 x = static_cast<u128>(a.v) * b.v;
    return Fe{pm_c_ ? reduce_pseudo_mersenne(x) : static_cast<u64>(x % m_)};
  }

  Fe pow(Fe a, u64 e) const {
    Fe result = one();
    while (e) {
      if (e & 1) result = mul(result, a);
      a = mul(a, a);
      e >>= 1;
    }
    return result;
  }

  Fe inv(Fe a) const {
    if (a.v == 0) throw FieldError("zero is not invertible");
    return pow(a, m_ - 2);
  }

  /// Square root for quadratic residues (Tonelli-Shanks), nullopt otherwise.
  /// Returns the root r with the deterministic exponent schedule, so repeated
  /// calls on the same input agree across parties.
  std::optional<Fe> sqrt(Fe a) const {
    if (a.v == 0) return Fe{0};
    if (m_ == 2) return a;
    if (pow(a, (m_ - 1) / 2).v != 1) return std::nullopt;
    if (m_ % 4 == 3) return pow(a, (m_ + 1) / 4);
    u64 q = m_ - 1;
    int s = 0;
    while ((q & 1) == 0) {
      q >>= 1;
      ++s;
    }
    Fe z{2};
    while (pow(z, (m_ - 1) / 2).v == 1) z = Fe{z.v + 1};
    Fe c = pow(z, q);
    Fe r = pow(a, (q + 1) / 2);
    Fe t = pow(a, q);
    int mexp = s;
    while (t.v != 1) {
      int i = 1;
      Fe t2 = mul(t, t);
      while (t2.v != 1) {
        t2 = mul(t2, t2);
        ++i;
      }
      Fe b = c;
      for (int j = 0; j < mexp - i - 1; ++j) b = mul(b, b);
      r = mul(r, b);
      c = mul(b, b);
      t = mul(t, c);
      mexp = i;
    }
    return r;
  }

  /// 1/sqrt(a) for a nonzero square, consistent with sqrt(): the product of
  /// the two is 1. Costs one exponentiation when M = 3 (mod 4).
  std::optional<Fe> inv_sqrt(Fe a) const {
    if (a.v == 0) return std::nullopt;
    if (m_ % 4 == 3) {
      const Fe r = pow(a, (m_ - 3) / 4);
      if (mul(mul(r, r), a) != one()) return std::nullopt;
      return r;
    }
    auto s = sqrt(a);
    if (!s) return std::nullopt;
    return inv(*s);
  }

  /// 2^e as a field element (e < 64).
  Fe pow2(int e) const { return from_u64(u64{1} << e); }

  /// Centered decoding: residues above M/2 map to negative integers.
  i64 to_signed(Fe a) const {
    return a.v > m_ / 2 ? -static_cast<i64>(m_ - a.v) : static_cast<i64>(a.v);
  }

  friend bool operator==(const Field& x, const Field& y) { return x.m_ == y.m_; }

 private:
  // M = 2^63 - c with small c: fold the high part twice, then subtract.
  u64 reduce_pseudo_mersenne(u128 x) const {
    constexpr u64 mask = (u64{1} << 63) - 1;
    const u128 y = (x >> 63) * pm_c_ + (static_cast<u64>(x) & mask);
    u64 z = static_cast<u64>(y >> 63) * pm_c_ + (static_cast<u64>(y) & mask);
    while (z >= m_) z -= m_;
    return z;
  }

  u64 m_;
  u64 pm_c_ = 0;
};

// ---------------------------------------------------------------------------
// Fixed-point encodings.

/// Round-half-up on decimal inputs. The small nudge keeps values such as
/// 318.49999999999994 (a binary artefact of 318.5) on the intended side.
inline i64 round_half_up(double x) {
  return static_cast<i64>(std::floor(x + 0.5 + 1e-9 * std::max(1.0, std::fabs(x))));
}

/// Maps a non-negative physical quantity to an integer count of `1/scale`
/// units and then into the field. Monotone; decode(encode(x)) == x for every
/// x that is already a multiple of 1/scale.
class FixedPoint {
 public:
  FixedPoint(const FieldParams& params, double scale) : params_(params), scale_(scale) {
    if (!(scale > 0)) throw ConfigError("fixed-point scale must be positive");
  }

  u64 to_units(double quantity) const {
    if (!(quantity >= 0) || !std::isfinite(quantity)) {
      throw EncodingError("cannot encode negative or non-finite quantity");
    }
    const i64 units = round_half_up(quantity * scale_);
    if (units > static_cast<i64>(params_.top())) {
      throw EncodingError("quantity " + std::to_string(quantity) + " exceeds the " +
                          std::to_string(params_.value_bits) + "-bit value budget");
    }
    return static_cast<u64>(units);
  }

  Fe encode(double quantity) const { return Fe{to_units(quantity)}; }

  double decode(Fe v) const { return static_cast<double>(v.v) / scale_; }

  double scale() const { return scale_; }

 private:
  FieldParams params_;
  double scale_;
};

namespace units {

/// Energy of a constant power draw over a trading slot, in Wh.
inline double slot_wh(double power_kw, double slot_minutes) { return power_kw * 1000.0 * slot_minutes / 60.0; }

inline FixedPoint watt_hours(const FieldParams& params) { return FixedPoint(params, 1.0); }

/// Prices given in EUR/kWh encoded as integer cents per kWh.
inline FixedPoint cents_per_kwh(const FieldParams& params) { return FixedPoint(params, 100.0); }

}  // namespace units

/// Signed bill amounts: [0, 2^(k-1)) positive, (M - 2^(k-1), M) negative.
class SignedCodec {
 public:
  SignedCodec(const Field& field, int value_bits) : field_(field), half_(u64{1} << (value_bits - 1)) {}

  Fe encode(i64 cents) const {
    const u64 mag = cents < 0 ? static_cast<u64>(-(cents + 1)) + 1 : static_cast<u64>(cents);
    if (mag >= half_) {
      throw EncodingError("signed amount " + std::to_string(cents) + " outside the encoding range");
    }
    return field_.from_i64(cents);
  }

  /// Decodes one in-range amount.
  i64 decode(Fe v) const {
    if (v.v < half_) return static_cast<i64>(v.v);
    if (v.v > field_.modulus() - half_) return -static_cast<i64>(field_.modulus() - v.v);
    throw EncodingError("residue " + std::to_string(v.v) + " is not a valid signed amount");
  }

  /// Decodes a sum of many amounts, which may leave the per-value range.
  i64 decode_sum(Fe v) const { return field_.to_signed(v); }

 private:
  Field field_;
  u64 half_;
};

}  // namespace lem
