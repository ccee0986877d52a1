#pragma once

#include "brsa/bigint.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace brsa {

/// Primes strictly below limit (sieve of Eratosthenes).
std::vector<std::uint32_t> primes_below(std::uint32_t limit);

/// The shared table of primes below 2^16 used for trial division.
std::span<const std::uint32_t> small_primes();

/// Miller-Rabin after trial division by small primes. Below 2^64 the witness
/// set {2..37} makes the answer exact; above, `rounds` bases are used (the
/// twelve fixed primes followed by pseudo-random bases derived from n).
bool is_probable_prime(const BigInt& n, unsigned rounds = 40);

/// Random prime with exactly `bits` bits and the top two bits set, so that a
/// product of two such primes has exactly twice as many bits.
/// `accept` may veto candidates (e.g. gcd(e, p-1) != 1).
BigInt random_prime(std::size_t bits, Rng& rng,
                    const std::function<bool(const BigInt&)>& accept = {},
                    std::size_t max_candidates = 0, bool top_two_bits = true);

/// Factorization by trial division up to `limit`; the unfactored cofactor is
/// returned in `rest` (1 when fully factored).
std::vector<BigInt> trial_factor(const BigInt& n, std::uint32_t limit, BigInt& rest);

}  // namespace brsa
