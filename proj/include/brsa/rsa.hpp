// Textbook RSA over a single modulus carrying several (e, d) slots.
#pragma once

#include "brsa/bigint.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace brsa {

/// One public/private exponent pair plus its CRT exponents.
struct KeySlot {
  BigInt e;
  BigInt d;
  BigInt dp;  // d mod (p-1)
  BigInt dq;  // d mod (q-1)
};

/// Construction witnesses of a strong prime: r | p-1 and s | p+1, both prime.
struct StrongWitness {
  BigInt r;
  BigInt s;
};

/// RSA modulus with its factors and any number of exponent slots sharing it.
///
/// Invariants (checked on construction): p and q are distinct primes,
/// every e is coprime to phi with e*d = 1 (mod phi), and the public
/// exponents are pairwise coprime so any subset can be batch-decrypted.
class KeyPair {
 public:
  /// Derives d for every exponent. Throws InvalidArgument when an exponent
  /// is not invertible modulo phi.
  static KeyPair from_factors(const BigInt& p, const BigInt& q, std::span<const BigInt> exponents);
  /// Uses caller-supplied (e, d) pairs and verifies them.
  static KeyPair from_pairs(const BigInt& p, const BigInt& q,
                            std::span<const std::pair<BigInt, BigInt>> pairs);

  const BigInt& n() const { return n_; }
  const BigInt& p() const { return p_; }
  const BigInt& q() const { return q_; }
  const BigInt& phi() const { return phi_; }
  const BigInt& q_inv() const { return q_inv_; }
  std::size_t modulus_bits() const { return bit_length(n_); }
  std::size_t modulus_bytes() const { return (modulus_bits() + 7) / 8; }

  std::size_t slot_count() const { return slots_.size(); }
  const KeySlot& slot(std::size_t index) const;
  const std::vector<KeySlot>& slots() const { return slots_; }
  /// Index of the slot with public exponent e, if any.
  std::optional<std::size_t> find_slot(const BigInt& e) const;

  const std::optional<StrongWitness>& p_witness() const { return p_witness_; }
  const std::optional<StrongWitness>& q_witness() const { return q_witness_; }
  void set_witnesses(std::optional<StrongWitness> p_w, std::optional<StrongWitness> q_w);

  friend bool operator==(const KeyPair& a, const KeyPair& b);

 private:
  KeyPair(const BigInt& p, const BigInt& q);
  void add_slot(const BigInt& e, const BigInt& d);

  BigInt n_, p_, q_, phi_, q_inv_;
  std::vector<KeySlot> slots_;
  std::optional<StrongWitness> p_witness_, q_witness_;
};

/// Throws InvalidArgument naming the first offending pair.
void require_pairwise_coprime(std::span<const BigInt> values);

/// Deterministic for a fixed seed. p gets ceil(bits/2) bits and q
/// floor(bits/2), each with the top two bits set.
KeyPair generate_keypair(std::size_t bits, std::span<const BigInt> exponents, std::uint64_t seed);

BigInt encrypt(const KeyPair& key, std::size_t slot, const BigInt& m);
/// CRT decryption (Garner recombination).
BigInt decrypt_conventional(const KeyPair& key, std::size_t slot, const BigInt& c);
/// c^d mod n without CRT; reference path for tests.
BigInt decrypt_direct(const KeyPair& key, std::size_t slot, const BigInt& c);

/// `name=hex` lines: n, p, q, phi, then e<i>/d<i> per slot (0-based), plus the
/// optional strong-prime witnesses rp, sp, rq, sq. `#` starts a comment.
void write_key_file(std::ostream& out, const KeyPair& key);
KeyPair read_key_file(std::istream& in);
KeyPair load_key_file(const std::string& path);
void save_key_file(const std::string& path, const KeyPair& key);

}  // namespace brsa
