#include "brsa/bigint.hpp"

#include <cctype>

namespace brsa {

std::size_t bit_length(const BigInt& x) {
  if (x == 0) return 0;
  return mpz_sizeinbase(x.get_mpz_t(), 2);
}

std::size_t decimal_digits(const BigInt& x) {
  if (x == 0) return 1;
  BigInt a = abs(x);
  return a.get_str(10).size();
}

std::size_t hamming_weight(const BigInt& x) {
  if (x < 0) throw InvalidArgument("hamming_weight: negative value");
  return mpz_popcount(x.get_mpz_t());
}

std::string to_hex(const BigInt& x) { return x.get_str(16); }

BigInt from_hex(std::string_view hex) {
  if (hex.empty()) throw InvalidArgument("empty hex string");
  for (char ch : hex) {
    if (!std::isxdigit(static_cast<unsigned char>(ch)))
      throw InvalidArgument("invalid hex digit in '" + std::string(hex) + "'");
  }
  return BigInt(std::string(hex), 16);
}

BigInt parse_integer(std::string_view text) {
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X'))
    return from_hex(text.substr(2));
  if (text.empty()) throw InvalidArgument("empty integer");
  for (char ch : text) {
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw InvalidArgument("invalid decimal integer '" + std::string(text) + "'");
  }
  return BigInt(std::string(text), 10);
}

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  if (exp < 0) throw InvalidArgument("powm: negative exponent");
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

BigInt invert(const BigInt& a, const BigInt& mod) {
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
    throw InvalidArgument("value is not invertible modulo the given modulus");
  return r;
}

BigInt gcd(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

BigInt lcm(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

BigInt isqrt(const BigInt& x) {
  if (x < 0) throw InvalidArgument("isqrt: negative value");
  BigInt r;
  mpz_sqrt(r.get_mpz_t(), x.get_mpz_t());
  return r;
}

bool is_perfect_square(const BigInt& x) {
  return x >= 0 && mpz_perfect_square_p(x.get_mpz_t()) != 0;
}

std::vector<std::uint8_t> to_bytes(const BigInt& x) {
  if (x < 0) throw InvalidArgument("to_bytes: negative value");
  if (x == 0) return {};
  std::vector<std::uint8_t> out((bit_length(x) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, x.get_mpz_t());
  out.resize(written);
  return out;
}

BigInt from_bytes(const std::uint8_t* data, std::size_t len) {
  BigInt r;
  if (len == 0) return r;
  mpz_import(r.get_mpz_t(), len, 1, 1, 1, 0, data);
  return r;
}

BigInt Rng::bits(std::size_t bits) {
  if (bits == 0) return 0;
  const std::size_t words = (bits + 63) / 64;
  std::vector<std::uint64_t> buf(words);
  for (auto& w : buf) w = engine_();
  const std::size_t excess = words * 64 - bits;
  if (excess) buf[0] >>= excess;
  BigInt r;
  mpz_import(r.get_mpz_t(), words, 1, sizeof(std::uint64_t), 0, 0, buf.data());
  return r;
}

BigInt Rng::below(const BigInt& bound) {
  if (bound <= 0) throw InvalidArgument("Rng::below: bound must be positive");
  const std::size_t nbits = bit_length(bound);
  // rejection sampling, expected < 2 draws
  for (;;) {
    BigInt r = bits(nbits);
    if (r < bound) return r;
  }
}

}  // namespace brsa
