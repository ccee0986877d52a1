// Desk-scale attack oracles. Each one targets a parameter weakness the sieve
// rejects, and is used to show weak keys fall while sieved keys resist.
#pragma once

#include "brsa/bigint.hpp"
#include "brsa/rsa.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace brsa {

struct AttackBudget {
  std::uint64_t max_steps = 1'000'000;
  double max_seconds = 60.0;

  void validate() const;
};

/// Steps taken and whether the budget stopped the search.
struct AttackTrace {
  std::uint64_t steps = 0;
  bool budget_exhausted = false;
};

/// Square attack: a = ceil(sqrt n), a+1, ... until a^2 - n is a square b^2,
/// giving (a - b, a + b). Even n returns (2, n/2) at once.
std::optional<std::pair<BigInt, BigInt>> fermat_factor(const BigInt& n, const AttackBudget& budget,
                                                       AttackTrace* trace = nullptr);

/// Product of the largest power of every prime <= bound that stays <= bound.
BigInt smooth_exponent(std::uint64_t bound);

/// p-1 method with bases 2, 3, 5. When gcd(a^M - 1, n) = n the exponentiation
/// is replayed one prime factor at a time to separate the factors.
std::optional<BigInt> pollard_p_minus_1(const BigInt& n, std::uint64_t smoothness_bound,
                                        const AttackBudget& budget, AttackTrace* trace = nullptr);

/// Continued-fraction expansion of e/n; every convergent k/d is tested by
/// solving x^2 - (n - phi + 1)x + n = 0 with phi = (ed - 1)/k.
std::optional<BigInt> wiener_attack(const BigInt& e, const BigInt& n, const AttackBudget& budget,
                                    AttackTrace* trace = nullptr);

/// Convergents (numerator, denominator) of a/b.
std::vector<std::pair<BigInt, BigInt>> convergents(const BigInt& a, const BigInt& b);

struct CycleFactor {
  BigInt factor;
};

/// Iteration attack result: the plaintext, or a factor of n when c itself
/// shares one with n.
using CycleResult = std::variant<BigInt, CycleFactor>;

/// Re-encrypts c until it reappears; the element before c is the plaintext.
std::optional<CycleResult> cycle_attack(const BigInt& c, const BigInt& e, const BigInt& n,
                                        const AttackBudget& budget, AttackTrace* trace = nullptr);

struct Probe {
  BigInt m;
  BigInt c;
};

/// Smallest d' in [1, max_steps] with c^d' = m (mod n) for every probe.
std::optional<BigInt> exhaustive_d_search(const BigInt& e, const BigInt& n, const std::vector<Probe>& probes,
                                          const AttackBudget& budget, AttackTrace* trace = nullptr);

/// Combination attack: enumerates d' of bit length `bits` by increasing
/// Hamming weight (top bit fixed) up to `max_weight`.
std::optional<BigInt> weighted_d_search(const BigInt& n, const std::vector<Probe>& probes, std::size_t bits,
                                        std::size_t max_weight, const AttackBudget& budget,
                                        AttackTrace* trace = nullptr);

/// Purpose-built weak keys, one per attack.
namespace weak_keys {

/// |p - q| small: q is the first strong prime above p with its own witnesses.
KeyPair close_primes(std::size_t bits, std::uint64_t seed);
/// p - 1 is `bound`-smooth (product of primes in [2^10, bound)); q is strong.
KeyPair smooth_p_minus_1(std::size_t bits, std::uint64_t bound, std::uint64_t seed);
/// d of `d_bits` bits with a balanced Hamming weight; e = d^-1 mod phi.
KeyPair small_d(std::size_t bits, std::size_t d_bits, std::uint64_t seed);
/// Strong primes whose p-1 and q-1 share a prime factor of `shared_bits`.
KeyPair shared_factor(std::size_t bits, std::size_t shared_bits, std::uint64_t seed);
/// Key of about 256 bits with e = 3 whose p-1 and q-1 both divide 3^51120 - 1, so the
/// encryption cycle is at most 51120 long. Both share the prime (3^71 - 1)/2.
KeyPair short_cycle(std::uint64_t seed);

}  // namespace weak_keys

}  // namespace brsa
