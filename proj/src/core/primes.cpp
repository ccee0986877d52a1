#include "brsa/primes.hpp"

#include <array>

namespace brsa {

std::vector<std::uint32_t> primes_below(std::uint32_t limit) {
  std::vector<std::uint32_t> out;
  if (limit < 3) return out;
  std::vector<bool> composite(limit, false);
  for (std::uint32_t i = 2; i < limit; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (std::uint64_t j = std::uint64_t(i) * i; j < limit; j += i) composite[j] = true;
  }
  return out;
}

std::span<const std::uint32_t> small_primes() {
  static const std::vector<std::uint32_t> table = primes_below(1u << 16);
  return table;
}

namespace {

constexpr std::array<unsigned, 12> kFixedWitnesses = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// One Miller-Rabin round; n odd, n > 3, n - 1 = d * 2^s.
bool mr_round(const BigInt& n, const BigInt& n_minus_1, const BigInt& d, std::size_t s,
              const BigInt& base) {
  BigInt x = powm(base, d, n);
  if (x == 1 || x == n_minus_1) return true;
  for (std::size_t r = 1; r < s; ++r) {
    x = (x * x) % n;
    if (x == n_minus_1) return true;
    if (x == 1) return false;
  }
  return false;
}

}  // namespace

bool is_probable_prime(const BigInt& n, unsigned rounds) {
  if (n < 2) return false;
  // trial division; only the first 256 primes to keep the common path cheap
  const auto primes = small_primes();
  for (std::size_t i = 0; i < 256; ++i) {
    const std::uint32_t p = primes[i];
    if (n == p) return true;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return false;
  }
  const BigInt n_minus_1 = n - 1;
  const std::size_t s = mpz_scan1(n_minus_1.get_mpz_t(), 0);
  BigInt d = n_minus_1 >> s;

  for (unsigned w : kFixedWitnesses) {
    if (!mr_round(n, n_minus_1, d, s, BigInt(w))) return false;
  }
  if (bit_length(n) <= 64) return true;

  if (rounds <= kFixedWitnesses.size()) return true;
  // deterministic pseudo-random bases in [2, n-2]
  Rng rng(mpz_get_ui(n.get_mpz_t()) ^ 0x9e3779b97f4a7c15ULL);
  const BigInt span = n - 3;
  for (unsigned i = kFixedWitnesses.size(); i < rounds; ++i) {
    const BigInt base = rng.below(span) + 2;
    if (!mr_round(n, n_minus_1, d, s, base)) return false;
  }
  return true;
}

BigInt random_prime(std::size_t bits, Rng& rng, const std::function<bool(const BigInt&)>& accept,
                    std::size_t max_candidates, bool top_two_bits) {
  if (bits < 3) throw InvalidArgument("random_prime: need at least 3 bits");
  if (max_candidates == 0) max_candidates = 200 * bits + 1000;
  const auto primes = small_primes();
  const std::size_t sieve_count = std::min<std::size_t>(primes.size(), bits < 32 ? 16 : 2048);

  for (std::size_t tried = 0; tried < max_candidates;) {
    BigInt p = rng.bits(bits);
    mpz_setbit(p.get_mpz_t(), bits - 1);
    if (top_two_bits) mpz_setbit(p.get_mpz_t(), bits - 2);
    mpz_setbit(p.get_mpz_t(), 0);

    // incremental sieve over p, p+2, p+4, ... until the bit length overflows
    std::vector<std::uint32_t> residues(sieve_count);
    for (std::size_t j = 0; j < sieve_count; ++j)
      residues[j] = mpz_fdiv_ui(p.get_mpz_t(), primes[j]);

    // a fresh start point per run keeps tiny bit lengths from cycling
    for (std::size_t step = 0; step < (bits < 16 ? 1u : 4096u) && tried < max_candidates; ++step, p += 2) {
      if (step > 0) {
        for (std::size_t j = 0; j < sieve_count; ++j) residues[j] = (residues[j] + 2) % primes[j];
      }
      if (bit_length(p) != bits) break;
      ++tried;
      bool sieved = false;
      for (std::size_t j = 0; j < sieve_count; ++j) {
        if (residues[j] == 0 && p != primes[j]) {
          sieved = true;
          break;
        }
      }
      if (sieved) continue;
      if (accept && !accept(p)) continue;
      if (is_probable_prime(p)) return p;
    }
  }
  throw GenerationError("random_prime: no " + std::to_string(bits) + "-bit prime found within budget");
}

std::vector<BigInt> trial_factor(const BigInt& n, std::uint32_t limit, BigInt& rest) {
  std::vector<BigInt> factors;
  rest = n;
  for (std::uint32_t p : small_primes()) {
    if (p >= limit) break;
    while (rest > 1 && mpz_divisible_ui_p(rest.get_mpz_t(), p)) {
      factors.emplace_back(p);
      rest /= p;
    }
    if (rest == 1) break;
  }
  return factors;
}

}  // namespace brsa
