#include "brsa/rsa.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace brsa;

namespace {

KeyPair toy55() {
  const std::pair<BigInt, BigInt> pairs[] = {{3, 27}, {7, 23}};
  return KeyPair::from_pairs(5, 11, pairs);
}

}  // namespace

TEST(KeyPair, ToyModulus) {
  const KeyPair k = toy55();
  EXPECT_EQ(k.n(), 55);
  EXPECT_EQ(k.phi(), 40);
  EXPECT_EQ(k.slot_count(), 2u);
  EXPECT_EQ(k.slot(0).dp, 27 % 4);
  EXPECT_EQ(k.slot(1).dq, 23 % 10);
  EXPECT_EQ(k.find_slot(7), 1u);
  EXPECT_FALSE(k.find_slot(11).has_value());
}

TEST(KeyPair, FromFactorsDerivesInverse) {
  const BigInt exps[] = {3, 7};
  const KeyPair k = KeyPair::from_factors(5, 11, exps);
  EXPECT_EQ(k.slot(0).d, 27);
  EXPECT_EQ(k.slot(1).d, 23);
}

TEST(KeyPair, RejectsBadInputs) {
  const BigInt e3[] = {3};
  const BigInt e5[] = {5};
  const BigInt shared[] = {3, 9};
  EXPECT_THROW(KeyPair::from_factors(5, 5, e3), InvalidArgument);
  EXPECT_THROW(KeyPair::from_factors(6, 11, e3), InvalidArgument);
  EXPECT_THROW(KeyPair::from_factors(5, 11, e5), InvalidArgument);  // gcd(5, 40) = 5
  EXPECT_THROW(KeyPair::from_factors(17, 23, shared), InvalidArgument);
  const std::pair<BigInt, BigInt> wrong[] = {{3, 28}};
  EXPECT_THROW(KeyPair::from_pairs(5, 11, wrong), InvalidArgument);
}

TEST(Rsa, ExhaustiveToyRoundTripAgainstWordOracle) {
  const KeyPair k = toy55();
  for (std::size_t s = 0; s < 2; ++s) {
    for (unsigned long m = 0; m < 55; ++m) {
      const BigInt c = encrypt(k, s, m);
      EXPECT_EQ(c, static_cast<unsigned long>(oracle::powmod(m, k.slot(s).e.get_ui(), 55)));
      EXPECT_EQ(decrypt_conventional(k, s, c), m);
      EXPECT_EQ(decrypt_direct(k, s, c), m);
    }
  }
}

TEST(Rsa, EncryptRejectsOutOfRange) {
  const KeyPair k = toy55();
  EXPECT_THROW(encrypt(k, 0, 55), RangeError);
  EXPECT_THROW(encrypt(k, 0, -1), RangeError);
}

TEST(Rsa, GeneratedKeysCrtMatchesDirect) {
  const BigInt exps[] = {3, 5, 7, 11};
  const KeyPair k = generate_keypair(512, exps, 5);
  EXPECT_EQ(k.modulus_bits(), 512u);
  EXPECT_EQ(k.slot_count(), 4u);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const BigInt m = rng.below(k.n());
    for (std::size_t s = 0; s < 4; ++s) {
      const BigInt c = encrypt(k, s, m);
      EXPECT_EQ(decrypt_conventional(k, s, c), decrypt_direct(k, s, c));
      EXPECT_EQ(decrypt_conventional(k, s, c), m);
    }
  }
}

TEST(Rsa, GenerationIsDeterministic) {
  const BigInt exps[] = {65537};
  EXPECT_EQ(generate_keypair(256, exps, 1), generate_keypair(256, exps, 1));
  EXPECT_NE(generate_keypair(256, exps, 1).n(), generate_keypair(256, exps, 2).n());
  for (std::size_t bits : {17u, 33u, 255u}) EXPECT_EQ(generate_keypair(bits, exps, 3).modulus_bits(), bits);
}

TEST(Rsa, GenerationRejectsBadExponents) {
  const BigInt even[] = {4};
  const BigInt shared[] = {3, 15};
  EXPECT_THROW(generate_keypair(256, even, 1), InvalidArgument);
  EXPECT_THROW(generate_keypair(256, shared, 1), InvalidArgument);
  const BigInt ok[] = {3};
  EXPECT_THROW(generate_keypair(8, ok, 1), InvalidArgument);
}

TEST(KeyFile, RoundTrip) {
  const BigInt exps[] = {3, 5, 7};
  KeyPair k = generate_keypair(256, exps, 4);
  k.set_witnesses(StrongWitness{BigInt(3), BigInt(5)}, std::nullopt);
  std::stringstream ss;
  write_key_file(ss, k);
  const std::string text = ss.str();
  EXPECT_NE(text.find("e0=3\n"), std::string::npos);
  EXPECT_NE(text.find("e2=7\n"), std::string::npos);
  const KeyPair back = read_key_file(ss);
  EXPECT_EQ(back, k);
  ASSERT_TRUE(back.p_witness().has_value());
  EXPECT_EQ(back.p_witness()->s, 5);
  EXPECT_FALSE(back.q_witness().has_value());
}

TEST(KeyFile, RejectsMalformedInput) {
  std::istringstream missing("n=37\np=5\n");
  EXPECT_THROW(read_key_file(missing), ConfigError);
  std::istringstream bad("# toy\nn=37\np=5\nq=b\nphi=28\ne0=3\nd0=zz\n");
  EXPECT_THROW(read_key_file(bad), ConfigError);
  std::istringstream inconsistent("n=38\np=5\nq=b\nphi=28\ne0=3\nd0=1b\n");
  EXPECT_THROW(read_key_file(inconsistent), ConfigError);
  EXPECT_THROW(load_key_file("/nonexistent/key.txt"), ConfigError);
}

TEST(KeyFile, CommentsIgnored) {
  std::istringstream in("# toy key\nn=37\np=5\nq=b\nphi=28\ne0=3 # public\nd0=1b\n");
  const KeyPair k = read_key_file(in);
  EXPECT_EQ(k.n(), 55);
  EXPECT_EQ(k.slot(0).d, 27);
}
