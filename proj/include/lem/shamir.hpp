#pragma once

// (1,3)-threshold Shamir sharing at the fixed evaluation points {1, 2, 3}.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lem/error.hpp"
#include "lem/field.hpp"
#include "lem/random.hpp"

namespace lem {

inline constexpr int kParties = 3;

struct Share {
  std::uint8_t party = 1;   // evaluation point, 1..3
  Fe value;
  std::uint8_t degree = 1;  // 2 only inside multiplication

  friend bool operator==(const Share&, const Share&) = default;
};

/// One party's shares of a vector of secrets, aligned by position.
struct ShareVector {
  std::uint8_t party = 1;
  std::uint8_t degree = 1;
  std::vector<Fe> values;
};

namespace shamir {

/// Value of a + slope * x at the party's evaluation point.
inline Fe eval_line(const Field& f, Fe secret, Fe slope, int x) {
  return f.add(secret, f.mul(slope, f.from_u64(static_cast<u64>(x))));
}

inline std::array<Share, kParties> share_with_slope(const Field& f, Fe secret, Fe slope) {
  std::array<Share, kParties> out;
  for (int i = 1; i <= kParties; ++i) {
    out[i - 1] = Share{static_cast<std::uint8_t>(i), eval_line(f, secret, slope, i), 1};
  }
  return out;
}

/// Degree-1 sharing with a uniformly random slope.
inline std::array<Share, kParties> share(const Field& f, Fe secret, Rng& rng) {
  return share_with_slope(f, secret, rng.element(f));
}

/// Lagrange coefficient for point xs[i] when interpolating at 0.
inline Fe lagrange_at_zero(const Field& f, std::span<const int> xs, std::size_t i) {
  Fe num = f.one();
  Fe den = f.one();
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (j == i) continue;
    num = f.mul(num, f.from_i64(-xs[j]));
    den = f.mul(den, f.from_i64(xs[i] - xs[j]));
  }
  return f.mul(num, f.inv(den));
}

/// Interpolates f(0) from at least degree+1 distinct points.
inline Fe reconstruct(const Field& f, std::span<const Share> shares) {
  if (shares.empty()) throw ShareError("reconstruct: no shares");
  const int degree = shares.front().degree;
  if (static_cast<int>(shares.size()) < degree + 1) {
    throw ShareError("reconstruct: need " + std::to_string(degree + 1) + " shares, got " +
                     std::to_string(shares.size()));
  }
  std::vector<int> xs;
  for (const Share& s : shares) {
    if (s.degree != degree) throw ShareError("reconstruct: mixed degrees");
    if (s.party < 1 || s.party > kParties) throw ShareError("reconstruct: party index out of range");
    for (int x : xs) {
      if (x == s.party) throw ShareError("reconstruct: duplicate party index " + std::to_string(x));
    }
    xs.push_back(s.party);
  }
  Fe acc = f.zero();
  for (std::size_t i = 0; i < shares.size(); ++i) {
    acc = f.add(acc, f.mul(lagrange_at_zero(f, xs, i), shares[i].value));
  }
  return acc;
}

/// Share of sum_i coeffs[i] * secret_i. Local; no communication.
inline Share lin_combine(const Field& f, std::span<const Fe> coeffs, std::span<const Share> shares) {
  if (coeffs.size() != shares.size() || shares.empty()) {
    throw ShareError("lin_combine: coefficient/share count mismatch");
  }
  Share out{shares.front().party, f.zero(), shares.front().degree};
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (shares[i].degree != out.degree) throw ShareError("lin_combine: degree mismatch");
    if (shares[i].party != out.party) throw ShareError("lin_combine: shares from different parties");
    out.value = f.add(out.value, f.mul(coeffs[i], shares[i].value));
  }
  return out;
}

/// Recombination weights for a degree-2 product sharing over {1,2,3}.
inline std::array<Fe, kParties> degree2_weights(const Field& f) {
  const std::array<int, kParties> xs{1, 2, 3};
  return {lagrange_at_zero(f, xs, 0), lagrange_at_zero(f, xs, 1), lagrange_at_zero(f, xs, 2)};
}

// Wire form: 8-byte little-endian value, 1-byte party index, 1-byte degree.
inline constexpr std::size_t kShareWireBytes = 10;

inline void put_share(std::vector<std::uint8_t>& out, const Share& s) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(s.value.v >> (8 * b)));
  out.push_back(s.party);
  out.push_back(s.degree);
}

inline Share get_share(std::span<const std::uint8_t> in, const Field& f) {
  if (in.size() < kShareWireBytes) throw ShareError("share wire: truncated");
  u64 v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<u64>(in[b]) << (8 * b);
  Share s{in[8], Fe{v}, in[9]};
  if (v >= f.modulus()) throw ShareError("share wire: value not reduced");
  if (s.party < 1 || s.party > kParties) throw ShareError("share wire: bad party index");
  if (s.degree < 1 || s.degree > 2) throw ShareError("share wire: bad degree");
  return s;
}

}  // namespace shamir
}  // namespace lem
