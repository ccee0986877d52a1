#include "brsa/bigint.hpp"
#include "brsa/primes.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace brsa;

TEST(BigInt, BitLengthAndDigits) {
  EXPECT_EQ(bit_length(BigInt(0)), 0u);
  EXPECT_EQ(bit_length(BigInt(1)), 1u);
  EXPECT_EQ(bit_length(BigInt(255)), 8u);
  EXPECT_EQ(bit_length(BigInt(256)), 9u);
  EXPECT_EQ(decimal_digits(BigInt(0)), 1u);
  EXPECT_EQ(decimal_digits(BigInt(9)), 1u);
  EXPECT_EQ(decimal_digits(BigInt(10)), 2u);
  EXPECT_EQ(decimal_digits(BigInt("99999999999999999999")), 20u);
  EXPECT_EQ(decimal_digits(BigInt("100000000000000000000")), 21u);
  EXPECT_EQ(hamming_weight(BigInt(0xF0F0)), 8u);
}

TEST(BigInt, HexAndIntegerParsing) {
  EXPECT_EQ(to_hex(BigInt(0)), "0");
  EXPECT_EQ(to_hex(BigInt(3054)), "bee");
  EXPECT_EQ(from_hex("BEE"), 3054);
  EXPECT_EQ(parse_integer("0x10"), 16);
  EXPECT_EQ(parse_integer("123456789012345678901234567890"), BigInt("123456789012345678901234567890"));
  EXPECT_THROW(parse_integer(""), InvalidArgument);
  EXPECT_THROW(parse_integer("12a"), InvalidArgument);
  EXPECT_THROW(from_hex("xyz"), InvalidArgument);
}

TEST(BigInt, ModularHelpersAgreeWithWordOracle) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const oracle::u64 m = (rng.next() >> 40) | 3;
    const oracle::u64 b = rng.next() % m;
    const oracle::u64 e = rng.next() >> 44;
    EXPECT_EQ(powm(BigInt(static_cast<unsigned long>(b)), BigInt(static_cast<unsigned long>(e)),
                   BigInt(static_cast<unsigned long>(m))),
              static_cast<unsigned long>(oracle::powmod(b, e, m)));
  }
  EXPECT_EQ(invert(BigInt(3), BigInt(40)), 27);
  EXPECT_EQ(invert(BigInt(7), BigInt(40)), 23);
  EXPECT_THROW(invert(BigInt(4), BigInt(40)), InvalidArgument);
  EXPECT_EQ(gcd(BigInt(84), BigInt(36)), 12);
  EXPECT_EQ(lcm(BigInt(4), BigInt(6)), 12);
  EXPECT_EQ(isqrt(BigInt(99)), 9);
  EXPECT_TRUE(is_perfect_square(BigInt(144)));
  EXPECT_FALSE(is_perfect_square(BigInt(145)));
}

TEST(BigInt, ByteRoundTrip) {
  EXPECT_TRUE(to_bytes(BigInt(0)).empty());
  const auto bytes = to_bytes(BigInt(0x0102));
  ASSERT_EQ(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 1);
  EXPECT_EQ(bytes[1], 2);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const BigInt x = rng.bits(1 + i * 13);
    const auto b = to_bytes(x);
    EXPECT_EQ(from_bytes(b.data(), b.size()), x);
  }
}

TEST(Rng, DeterministicAndBounded) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(1);
  const BigInt bound(1000);
  for (int i = 0; i < 1000; ++i) {
    const BigInt v = r.below(bound);
    EXPECT_GE(v, 0);
    EXPECT_LT(v, bound);
  }
  for (int i = 0; i < 100; ++i) EXPECT_LT(bit_length(r.bits(77)), 78u);
}

TEST(Primes, SmallTableMatchesTrialDivision) {
  const auto table = primes_below(2000);
  std::vector<std::uint32_t> expect;
  for (oracle::u64 n = 0; n < 2000; ++n) {
    if (oracle::is_prime(n)) expect.push_back(static_cast<std::uint32_t>(n));
  }
  EXPECT_EQ(table, expect);
}

TEST(Primes, MillerRabinAgreesWithTrialDivisionBelow100k) {
  for (unsigned long n = 0; n < 100000; ++n)
    ASSERT_EQ(is_probable_prime(BigInt(n)), oracle::is_prime(n)) << n;
}

TEST(Primes, CarmichaelAndStrongPseudoprimesRejected) {
  for (unsigned long n : {561ul, 1105ul, 1729ul, 2465ul, 2821ul, 6601ul, 8911ul, 3215031751ul, 2152302898747ul,
                          3474749660383ul, 341550071728321ul})
    EXPECT_FALSE(is_probable_prime(BigInt(n))) << n;
}

TEST(Primes, KnownLargePrimes) {
  EXPECT_TRUE(is_probable_prime(BigInt("2305843009213693951")));           // 2^61 - 1
  EXPECT_TRUE(is_probable_prime(BigInt("618970019642690137449562111")));   // 2^89 - 1
  EXPECT_FALSE(is_probable_prime(BigInt("618970019642690137449562113")));
  const BigInt m127 = (BigInt(1) << 127) - 1;
  EXPECT_TRUE(is_probable_prime(m127));
  EXPECT_FALSE(is_probable_prime(m127 * m127));
}

TEST(Primes, RandomPrimeHasRequestedShape) {
  Rng rng(11);
  for (std::size_t bits : {8u, 16u, 64u, 256u}) {
    const BigInt p = random_prime(bits, rng);
    EXPECT_EQ(bit_length(p), bits);
    EXPECT_TRUE(is_probable_prime(p));
    EXPECT_EQ(mpz_tstbit(p.get_mpz_t(), bits - 2), 1);
  }
  const BigInt q = random_prime(64, rng, [](const BigInt& c) { return gcd(c - 1, BigInt(3)) == 1; });
  EXPECT_EQ(gcd(q - 1, BigInt(3)), 1);
}

TEST(Primes, TrialFactor) {
  BigInt rest;
  const auto f = trial_factor(BigInt(2 * 2 * 3 * 1000003ul), 1000, rest);
  EXPECT_EQ(f, (std::vector<BigInt>{2, 2, 3}));
  EXPECT_EQ(rest, 1000003);
}
