// Arbitrary-precision helpers shared by every module.
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace brsa {

using BigInt = mpz_class;

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A value lies outside [0, n).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Randomized search ran out of attempts.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

std::size_t bit_length(const BigInt& x);
std::size_t decimal_digits(const BigInt& x);
std::size_t hamming_weight(const BigInt& x);

std::string to_hex(const BigInt& x);
BigInt from_hex(std::string_view hex);
/// Accepts decimal or 0x-prefixed hexadecimal.
BigInt parse_integer(std::string_view text);

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod);
/// Throws InvalidArgument when gcd(a, mod) != 1.
BigInt invert(const BigInt& a, const BigInt& mod);
BigInt gcd(const BigInt& a, const BigInt& b);
BigInt lcm(const BigInt& a, const BigInt& b);
BigInt isqrt(const BigInt& x);
bool is_perfect_square(const BigInt& x);

std::vector<std::uint8_t> to_bytes(const BigInt& x);
BigInt from_bytes(const std::uint8_t* data, std::size_t len);

/// Seeded generator. All randomness in the library flows through this type,
/// so equal seeds give equal outputs independent of the GMP version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 2^bits).
  BigInt bits(std::size_t bits);
  /// Uniform in [0, bound), bound > 0.
  BigInt below(const BigInt& bound);
  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace brsa
