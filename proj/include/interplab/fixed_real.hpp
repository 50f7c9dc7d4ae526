#pragma once

#include <array>
#include <cstdint>

#include "interplab/random.hpp"

namespace interplab {

/// Two's-complement fixed-point real with a 64-bit integer part and 384
/// fraction bits.
///
/// The dyadic rescalings b(2^{n-1} x) used by the extremal system read bits of
/// x far below double precision (n up to a few hundred). Points are therefore
/// sampled as a double plus uniform dither in the bits below its last
/// mantissa bit, and all sums of Gaussian components are formed exactly here.
class FixedReal {
 public:
  static constexpr int kWords = 7;
  static constexpr int kBits = 64 * kWords;
  /// Weight of the least significant bit is 2^{-kFracBits}.
  static constexpr int kFracBits = 64 * (kWords - 1);

  FixedReal() = default;

  /// Exact conversion (bits below 2^{-384} are truncated). |v| < 2^63.
  static FixedReal from_double(double v);

  /// from_double(v) plus an independent uniform variate on [0, ulp(v)), so the
  /// result has random bits all the way down to 2^{-384}.
  static FixedReal dithered(double v, CounterRng& rng);

  /// Nearest double.
  double to_double() const;

  /// (2^s x) mod 2 in [0, 2), for s >= 0.
  double mod2_scaled(int s) const;

  bool negative() const noexcept { return static_cast<std::int64_t>(w_[0]) < 0; }

  FixedReal operator-() const;
  FixedReal& operator+=(const FixedReal& o);
  FixedReal& operator-=(const FixedReal& o) { return *this += -o; }
  friend FixedReal operator+(FixedReal a, const FixedReal& b) { return a += b; }
  friend FixedReal operator-(FixedReal a, const FixedReal& b) { return a -= b; }
  friend bool operator==(const FixedReal&, const FixedReal&) = default;

 private:
  // w_[0] is the integer word; w_[j] holds fraction bits 2^{-64(j-1)-1} ..
  // 2^{-64 j}, most significant first.
  std::array<std::uint64_t, kWords> w_{};
};

}  // namespace interplab
