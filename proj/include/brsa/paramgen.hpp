// Parameter generation with a security sieve: strong primes, prime gap,
// gcd(p-1, q-1), small-d bounds and the Hamming weight of d.
#pragma once

#include "brsa/bigint.hpp"
#include "brsa/rsa.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace brsa {

struct SievePolicy {
  std::size_t strong_factor_bits = 496;   // largest prime factor of p+-1, q+-1
  std::size_t min_prime_gap_bits = 1008;  // bitlen(|p - q|)
  BigInt max_gcd = 8;                     // gcd(p-1, q-1)
  double wiener_ratio = 0.292;            // bitlen(d) >= ceil(ratio * bitlen(phi))
  std::size_t min_d_bits = 80;            // bitlen(d) > min_d_bits
  std::size_t hamming_security_bits = 80; // C(L, min(w, L-w)) > 2^bits

  /// Defaults for primes of `prime_bits` bits: half the prime length minus 16
  /// for the strong factor, the prime length minus 16 for the gap. Both are
  /// clamped to stay positive on toy sizes.
  static SievePolicy for_prime_bits(std::size_t prime_bits);
  static SievePolicy for_modulus_bits(std::size_t modulus_bits) {
    return for_prime_bits((modulus_bits + 1) / 2);
  }

  void validate() const;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string measured;
  std::string threshold;
};

/// Verdicts for one slot of a key, in a fixed order: strong_p, strong_q,
/// prime_gap, gcd_check, wiener_bound, d_length, hamming_weight.
struct SieveReport {
  std::vector<CheckResult> checks;

  bool pass() const;
  const CheckResult& check(const std::string& name) const;
  std::vector<std::string> failed() const;
};

/// `CHECK name: PASS|FAIL measured=<v> threshold=<t>` per line.
void print_report(std::ostream& out, const SieveReport& report);
void print_report_csv(std::ostream& out, const SieveReport& report, bool header = true);

struct StrongPrime {
  BigInt p;
  StrongWitness witness;  // r | p-1, s | p+1
};

struct StrongPrimeOptions {
  /// p-1 is additionally made a multiple of this value (1 = no constraint).
  /// Weak-key generators use it to force a large gcd(p-1, q-1).
  BigInt p_minus_1_multiple = 1;
  /// Public exponents that must stay coprime to p-1.
  std::vector<BigInt> coprime_to = {};
  /// When nonzero, the search starts at the first candidate >= start
  /// instead of a random point (used to build deliberately close primes).
  BigInt start = 0;
  std::size_t max_candidates = 0;  // 0 = automatic
};

/// Gordon-style: primes r, s of strong_factor_bits bits, then p = 1 (mod r),
/// p = -1 (mod s), found by CRT stepping. Top two bits of p are set.
StrongPrime generate_strong_prime(std::size_t bits, std::size_t strong_factor_bits, Rng& rng,
                                  const StrongPrimeOptions& options = {});
StrongPrime generate_strong_prime(std::size_t bits, std::size_t strong_factor_bits, std::uint64_t seed);

/// Bit length of the largest prime factor of x that can be certified: trial
/// division, then Pollard rho (Brent) on the cofactor. An unsplit composite
/// contributes nothing, so the result is a lower bound.
std::size_t largest_prime_factor_bits(const BigInt& x, std::uint64_t rho_iterations = 200000);

/// C(n, k), exact.
BigInt binomial(std::size_t n, std::size_t k);

SieveReport sieve_keypair(const KeyPair& key, std::size_t slot, const SievePolicy& policy);

struct SievedKey {
  KeyPair key;
  std::vector<SieveReport> reports;  // one per slot
  std::size_t attempts = 0;
};

/// Raised when no attempt passes; carries the last rejected report.
class SieveExhausted : public GenerationError {
 public:
  SieveExhausted(const std::string& what, SieveReport last) : GenerationError(what), last_(std::move(last)) {}
  const SieveReport& last_report() const { return last_; }

 private:
  SieveReport last_;
};

/// Generates strong-prime keys until every slot passes the sieve.
SievedKey generate_sieved_keypair(std::size_t bits, const std::vector<BigInt>& exponents,
                                  const SievePolicy& policy, std::uint64_t seed, std::size_t max_attempts);

/// Key in the style of the modulus-length table: one random 66-bit public
/// exponent instead of small batch exponents.
KeyPair generate_profile_keypair(std::size_t bits, std::uint64_t seed);

struct DigitProfile {
  std::size_t p = 0, q = 0, n = 0, e = 0, d = 0, c = 0;
};

/// Decimal digit lengths of p, q, n, e, d (slot 0). The ciphertext length is the
/// median over 15 encryptions of random messages.
DigitProfile measure_digit_profile(const KeyPair& key, std::uint64_t seed);

/// Row of the published modulus-length table (decimal digits).
struct Table1Row {
  std::size_t n_bits, p, q, n, e, d, c;
};
const std::vector<Table1Row>& table1_reference();

}  // namespace brsa
