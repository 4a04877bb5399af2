#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "lem/error.hpp"
#include "lem/field.hpp"

namespace lem {

namespace detail {

inline void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error("libsodium initialisation failed");
}

}  // namespace detail

/// Seeded CSPRNG: a ChaCha20 keystream keyed by BLAKE2b(seed, label, index).
/// Streams with different labels or indices are independent. Satisfies
/// UniformRandomBitGenerator, but prefer below()/shuffle() over <random>
/// distributions whose output is implementation-defined.
class Rng {
 public:
  using result_type = u64;

  explicit Rng(u64 seed, std::string_view label = "", u64 index = 0) {
    detail::ensure_sodium();
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, key_.size());
    std::array<unsigned char, 16> head{};
    std::memcpy(head.data(), &seed, 8);
    std::memcpy(head.data() + 8, &index, 8);
    crypto_generichash_update(&st, head.data(), head.size());
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
    crypto_generichash_final(&st, key_.data(), key_.size());
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<u64>::max(); }

  result_type operator()() { return next_u64(); }

  u64 next_u64() {
    if (pos_ == buf_.size()) refill();
    return buf_[pos_++];
  }

  /// Uniform in [0, bound), bound > 0 (Lemire's method, unbiased).
  u64 below(u64 bound) {
    u128 m = static_cast<u128>(next_u64()) * bound;
    u64 low = static_cast<u64>(m);
    if (low < bound) {
      const u64 threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<u128>(next_u64()) * bound;
        low = static_cast<u64>(m);
      }
    }
    return static_cast<u64>(m >> 64);
  }

  Fe element(const Field& f) { return Fe{below(f.modulus())}; }

  bool bit() { return next_u64() & 1; }

  /// Fisher-Yates with below(); identical output on every platform.
  template <typename T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::swap(xs[i - 1], xs[below(i)]);
    }
  }

  /// Uniform permutation of {0, ..., n-1}.
  std::vector<std::uint32_t> permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
    shuffle(std::span<std::uint32_t>(p));
    return p;
  }

 private:
  void refill() {
    std::array<unsigned char, crypto_stream_chacha20_NONCEBYTES> nonce{};
    std::memcpy(nonce.data(), &block_, sizeof(block_));
    crypto_stream_chacha20(reinterpret_cast<unsigned char*>(buf_.data()), buf_.size() * sizeof(u64),
                           nonce.data(), key_.data());
    ++block_;
    pos_ = 0;
  }

  std::array<unsigned char, crypto_stream_chacha20_KEYBYTES> key_{};
  std::array<u64, 512> buf_{};
  std::size_t pos_ = buf_.size();
  u64 block_ = 0;
};

}  // namespace lem
