#include "interplab/fixed_real.hpp"

#include <cmath>

#include "interplab/errors.hpp"

namespace interplab {

namespace {

using u128 = unsigned __int128;

// Bit index i counts from the most significant bit of the integer word; its
// weight is 2^{63 - i}.
void or_bits_at(std::array<std::uint64_t, FixedReal::kWords>& w, std::uint64_t value,
                int lsb_index) {
  // Place `value` so that its bit 0 lands on lsb_index.
  const int word = lsb_index >= 0 ? lsb_index / 64 : -1 - (-1 - lsb_index) / 64;
  const int shift = 63 - (lsb_index - 64 * word);
  const u128 wide = static_cast<u128>(value) << shift;
  const auto lo = static_cast<std::uint64_t>(wide);
  const auto hi = static_cast<std::uint64_t>(wide >> 64);
  if (word >= 0 && word < FixedReal::kWords) w[word] |= lo;
  if (word - 1 >= 0 && word - 1 < FixedReal::kWords) w[word - 1] |= hi;
}

}  // namespace

FixedReal FixedReal::from_double(double v) {
  if (!std::isfinite(v) || std::fabs(v) >= 0x1.0p63) {
    throw InvalidParameter("FixedReal: value out of range");
  }
  FixedReal r;
  if (v == 0.0) return r;
  int exp = 0;
  const double f = std::frexp(std::fabs(v), &exp);  // |v| = f 2^exp, f in [0.5,1)
  const auto mant = static_cast<std::uint64_t>(std::ldexp(f, 53));
  // LSB of mant has weight 2^{exp-53}, i.e. index 63 - (exp - 53).
  const int lsb = 116 - exp;
  if (lsb - 52 >= kBits) return r;  // underflows the representation
  if (lsb < kBits) {
    or_bits_at(r.w_, mant, lsb);
  } else {
    const int drop = lsb - (kBits - 1);
    or_bits_at(r.w_, mant >> drop, kBits - 1);
  }
  return v < 0 ? -r : r;
}

FixedReal FixedReal::dithered(double v, CounterRng& rng) {
  FixedReal r = from_double(v);
  if (v == 0.0) return r;
  int exp = 0;
  std::frexp(v, &exp);
  const int first = 116 - exp + 1;  // first index below the last mantissa bit
  if (first >= kBits) return r;
  FixedReal u;
  // Fill indices [first, kBits) with random bits.
  const int first_word = first / 64;
  for (int j = first_word; j < kWords; ++j) u.w_[j] = rng();
  const int keep = 64 - (first - 64 * first_word);  // bits of first_word to keep
  u.w_[first_word] = keep == 64 ? u.w_[first_word] : (u.w_[first_word] & ((1ULL << keep) - 1));
  r += u;
  return r;
}

FixedReal FixedReal::operator-() const {
  FixedReal r;
  std::uint64_t carry = 1;
  for (int j = kWords - 1; j >= 0; --j) {
    const u128 s = static_cast<u128>(~w_[j]) + carry;
    r.w_[j] = static_cast<std::uint64_t>(s);
    carry = static_cast<std::uint64_t>(s >> 64);
  }
  return r;
}

FixedReal& FixedReal::operator+=(const FixedReal& o) {
  std::uint64_t carry = 0;
  for (int j = kWords - 1; j >= 0; --j) {
    const u128 s = static_cast<u128>(w_[j]) + o.w_[j] + carry;
    w_[j] = static_cast<std::uint64_t>(s);
    carry = static_cast<std::uint64_t>(s >> 64);
  }
  return *this;
}

double FixedReal::to_double() const {
  if (negative()) return -(-*this).to_double();
  for (int j = 0; j < kWords; ++j) {
    if (w_[j] == 0) continue;
    double v = std::ldexp(static_cast<double>(w_[j]), -64 * j);
    if (j + 1 < kWords) v += std::ldexp(static_cast<double>(w_[j + 1]), -64 * (j + 1));
    return v;
  }
  return 0.0;
}

double FixedReal::mod2_scaled(int s) const {
  // 64-bit window starting at index 63 + s (weight 2^{-s}); value = V 2^{-63}.
  const int start = 63 + s;
  const int word = start / 64;
  const int off = start % 64;
  std::uint64_t v = 0;
  if (word < kWords) v = w_[word] << off;
  if (off != 0 && word + 1 < kWords) v |= w_[word + 1] >> (64 - off);
  return static_cast<double>(v >> 11) * 0x1.0p-52;
}

}  // namespace interplab
