#include "brsa/attacks.hpp"

#include "brsa/paramgen.hpp"
#include "brsa/primes.hpp"

#include <algorithm>

namespace brsa {

void AttackBudget::validate() const {
  if (max_steps == 0 || !(max_seconds > 0)) throw InvalidArgument("attack budget must be positive");
}

namespace {

// Step and wall-clock accounting shared by every oracle.
class Meter {
 public:
  Meter(const AttackBudget& budget, AttackTrace* trace)
      : budget_(budget), trace_(trace ? trace : &local_), start_(std::chrono::steady_clock::now()) {
    budget_.validate();
    *trace_ = {};
  }

  /// Counts one step; false once the budget is spent.
  bool step() {
    if (trace_->steps >= budget_.max_steps) return exhaust();
    ++trace_->steps;
    if ((trace_->steps & 1023) == 0) {
      const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start_;
      if (spent.count() > budget_.max_seconds) return exhaust();
    }
    return true;
  }

 private:
  bool exhaust() {
    trace_->budget_exhausted = true;
    return false;
  }

  const AttackBudget& budget_;
  AttackTrace local_;
  AttackTrace* trace_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::optional<std::pair<BigInt, BigInt>> fermat_factor(const BigInt& n, const AttackBudget& budget,
                                                       AttackTrace* trace) {
  Meter meter(budget, trace);
  if (n < 4) return std::nullopt;
  if (mpz_even_p(n.get_mpz_t())) {
    meter.step();
    return std::make_pair(BigInt(2), BigInt(n / 2));
  }
  BigInt a = isqrt(n);
  if (a * a < n) ++a;
  // r = a^2 - n, advanced by 2a + 1 per step
  BigInt r = a * a - n;
  while (meter.step()) {
    if (is_perfect_square(r)) {
      const BigInt b = isqrt(r);
      BigInt p = a - b, q = a + b;
      if (p == 1) return std::nullopt;  // n prime: only the trivial split exists
      if (p * q != n) throw Error("fermat_factor: self-check failed");
      return std::make_pair(std::move(p), std::move(q));
    }
    r += 2 * a + 1;
    ++a;
  }
  return std::nullopt;
}

BigInt smooth_exponent(std::uint64_t bound) {
  BigInt m = 1;
  for (const auto& p : primes_below(static_cast<std::uint32_t>(std::min<std::uint64_t>(bound + 1, 1u << 30)))) {
    std::uint64_t pk = p;
    while (pk * p <= bound) pk *= p;
    m *= static_cast<unsigned long>(pk);
  }
  return m;
}

std::optional<BigInt> pollard_p_minus_1(const BigInt& n, std::uint64_t smoothness_bound, const AttackBudget& budget,
                                        AttackTrace* trace) {
  Meter meter(budget, trace);
  if (n < 4) return std::nullopt;
  if (mpz_even_p(n.get_mpz_t())) return BigInt(2);
  const auto primes = primes_below(static_cast<std::uint32_t>(std::min<std::uint64_t>(smoothness_bound + 1, 1u << 30)));

  auto verified = [&](const BigInt& f) -> std::optional<BigInt> {
    if (f <= 1 || f >= n || n % f != 0) throw Error("pollard_p_minus_1: self-check failed");
    return f;
  };

  for (const unsigned base : {2u, 3u, 5u}) {
    if (n % base == 0) return verified(BigInt(base));
    BigInt x = base;
    bool out_of_budget = false;
    for (const std::uint32_t p : primes) {
      if (!meter.step()) {
        out_of_budget = true;
        break;
      }
      std::uint64_t pk = p;
      while (pk * p <= smoothness_bound) pk *= p;
      x = powm(x, BigInt(static_cast<unsigned long>(pk)), n);
    }
    BigInt g = gcd(x - 1, n);
    if (g > 1 && g < n) return verified(g);
    if (g == n) {
      // staged replay: one prime factor at a time, so the first prime whose
      // order divides the accumulated exponent is caught before the other
      BigInt y = base;
      for (const std::uint32_t p : primes) {
        std::uint64_t pk = p;
        while (pk * p <= smoothness_bound) pk *= p;
        bool collapsed = false;
        for (std::uint64_t f = p; f <= pk; f *= p) {
          y = powm(y, BigInt(static_cast<unsigned long>(p)), n);
          const BigInt h = gcd(y - 1, n);
          if (h > 1 && h < n) return verified(h);
          if (h == n) {
            collapsed = true;
            break;
          }
        }
        if (collapsed) break;
      }
    }
    if (out_of_budget) break;
  }
  return std::nullopt;
}

std::vector<std::pair<BigInt, BigInt>> convergents(const BigInt& a, const BigInt& b) {
  std::vector<std::pair<BigInt, BigInt>> out;
  BigInt num = a, den = b;
  BigInt h_prev = 1, h_prev2 = 0, k_prev = 0, k_prev2 = 1;
  while (den != 0) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    const BigInt rem = num - q * den;
    const BigInt h = q * h_prev + h_prev2;
    const BigInt k = q * k_prev + k_prev2;
    out.emplace_back(h, k);
    h_prev2 = h_prev;
    h_prev = h;
    k_prev2 = k_prev;
    k_prev = k;
    num = den;
    den = rem;
  }
  return out;
}

std::optional<BigInt> wiener_attack(const BigInt& e, const BigInt& n, const AttackBudget& budget,
                                    AttackTrace* trace) {
  Meter meter(budget, trace);
  if (e <= 0 || n <= 0 || e >= n) return std::nullopt;
  for (const auto& [k, d] : convergents(e, n)) {
    if (!meter.step()) return std::nullopt;
    if (k == 0 || d == 0) continue;
    const BigInt ed1 = e * d - 1;
    if (ed1 % k != 0) continue;
    const BigInt phi = ed1 / k;
    const BigInt s = n - phi + 1;
    const BigInt disc = s * s - 4 * n;
    if (disc < 0 || !is_perfect_square(disc)) continue;
    const BigInt t = isqrt(disc);
    if (mpz_odd_p(BigInt(s + t).get_mpz_t())) continue;
    const BigInt p = (s + t) / 2, q = (s - t) / 2;
    if (p > 1 && q > 1 && p * q == n) {
      // d inverts e modulo (p-1)(q-1)
      if ((e * d) % ((p - 1) * (q - 1)) != 1) throw Error("wiener_attack: self-check failed");
      return d;
    }
  }
  return std::nullopt;
}

std::optional<CycleResult> cycle_attack(const BigInt& c, const BigInt& e, const BigInt& n, const AttackBudget& budget,
                                        AttackTrace* trace) {
  Meter meter(budget, trace);
  if (c <= 0 || c >= n) throw RangeError("cycle_attack: ciphertext must lie in (0, n)");
  if (const BigInt g = gcd(c, n); g != 1) return CycleResult{CycleFactor{g}};
  BigInt prev = c;
  while (meter.step()) {
    BigInt next = powm(prev, e, n);
    if (next == c) {
      if (powm(prev, e, n) != c) throw Error("cycle_attack: self-check failed");
      return CycleResult{prev};
    }
    prev = std::move(next);
  }
  return std::nullopt;
}

namespace {

bool decrypts_all(const BigInt& d, const BigInt& n, const std::vector<Probe>& probes) {
  for (const auto& pr : probes)
    if (powm(pr.c, d, n) != pr.m % n) return false;
  return true;
}

}  // namespace

std::optional<BigInt> exhaustive_d_search(const BigInt& /*e*/, const BigInt& n, const std::vector<Probe>& probes,
                                          const AttackBudget& budget, AttackTrace* trace) {
  Meter meter(budget, trace);
  if (probes.empty()) throw InvalidArgument("exhaustive_d_search: at least one probe is required");
  const Probe& first = probes.front();
  const BigInt target = first.m % n;
  BigInt x = 1;
  for (BigInt d = 1; meter.step(); ++d) {
    x = (x * first.c) % n;
    if (x == target && decrypts_all(d, n, probes)) return d;
  }
  return std::nullopt;
}

std::optional<BigInt> weighted_d_search(const BigInt& n, const std::vector<Probe>& probes, std::size_t bits,
                                        std::size_t max_weight, const AttackBudget& budget, AttackTrace* trace) {
  Meter meter(budget, trace);
  if (probes.empty()) throw InvalidArgument("weighted_d_search: at least one probe is required");
  if (bits == 0) return std::nullopt;
  const std::size_t low = bits - 1;  // positions below the fixed top bit
  for (std::size_t w = 1; w <= std::min(max_weight, bits); ++w) {
    const std::size_t k = w - 1;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
      if (!meter.step()) return std::nullopt;
      BigInt d = 0;
      mpz_setbit(d.get_mpz_t(), low);
      for (const std::size_t i : idx) mpz_setbit(d.get_mpz_t(), i);
      if (decrypts_all(d, n, probes)) return d;
      // next k-combination of [0, low)
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == low - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return std::nullopt;
}

namespace weak_keys {

namespace {

const BigInt kWeakExponent = 65537;

}  // namespace

KeyPair close_primes(std::size_t bits, std::uint64_t seed) {
  const std::size_t pb = (bits + 1) / 2;
  const std::size_t sfb = SievePolicy::for_prime_bits(pb).strong_factor_bits;
  Rng rng(seed);
  StrongPrimeOptions opts;
  opts.coprime_to = {kWeakExponent};
  for (int attempt = 0; attempt < 64; ++attempt) {
    const StrongPrime p = generate_strong_prime(pb, sfb, rng, opts);
    StrongPrimeOptions near = opts;
    near.start = p.p + 2;
    near.max_candidates = 1u << 16;
    StrongPrime q;
    try {
      q = generate_strong_prime(pb, sfb, rng, near);
    } catch (const GenerationError&) {
      continue;
    }
    if (q.p == p.p || gcd(p.p - 1, q.p - 1) > 8) continue;
    const BigInt exps[] = {kWeakExponent};
    KeyPair key = KeyPair::from_factors(p.p, q.p, exps);
    key.set_witnesses(p.witness, q.witness);
    return key;
  }
  throw GenerationError("weak_keys::close_primes: retry budget exhausted");
}

KeyPair smooth_p_minus_1(std::size_t bits, std::uint64_t bound, std::uint64_t seed) {
  const std::size_t pb = (bits + 1) / 2;
  Rng rng(seed);
  const auto table = primes_below(static_cast<std::uint32_t>(std::min<std::uint64_t>(bound, 1u << 30)));
  std::vector<std::uint32_t> pool;
  for (auto p : table)
    if (p >= 1024) pool.push_back(p);
  if (pool.size() < 16 || pb < 24) throw InvalidArgument("weak_keys::smooth_p_minus_1: bound or size too small");

  const std::size_t qb = bits / 2;
  const StrongPrime q = [&] {
    StrongPrimeOptions opts;
    opts.coprime_to = {kWeakExponent};
    return generate_strong_prime(qb, SievePolicy::for_prime_bits(qb).strong_factor_bits, rng, opts);
  }();

  for (int attempt = 0; attempt < 100000; ++attempt) {
    BigInt m = 2;
    while (bit_length(m) + 16 < pb) m *= pool[rng.next() % pool.size()];
    for (int last = 0; last < 256; ++last) {
      const BigInt cand = m * pool[rng.next() % pool.size()] + 1;
      if (bit_length(cand) != pb) continue;
      if (!is_probable_prime(cand) || cand == q.p) continue;
      if (gcd(cand - 1, q.p - 1) > 8 || gcd(kWeakExponent, cand - 1) != 1) continue;
      const BigInt exps[] = {kWeakExponent};
      KeyPair key = KeyPair::from_factors(cand, q.p, exps);
      key.set_witnesses(std::nullopt, q.witness);
      return key;
    }
  }
  throw GenerationError("weak_keys::smooth_p_minus_1: retry budget exhausted");
}

KeyPair small_d(std::size_t bits, std::size_t d_bits, std::uint64_t seed) {
  const std::size_t pb = (bits + 1) / 2;
  const std::size_t sfb = SievePolicy::for_prime_bits(pb).strong_factor_bits;
  if (d_bits < 8 || d_bits >= bits / 2) throw InvalidArgument("weak_keys::small_d: d_bits out of range");
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const StrongPrime p = generate_strong_prime(pb, sfb, rng);
    const StrongPrime q = generate_strong_prime(bits / 2, sfb, rng);
    if (p.p == q.p || gcd(p.p - 1, q.p - 1) > 8) continue;
    const BigInt phi = (p.p - 1) * (q.p - 1);
    for (int tries = 0; tries < 4096; ++tries) {
      BigInt d = rng.bits(d_bits);
      mpz_setbit(d.get_mpz_t(), d_bits - 1);
      mpz_setbit(d.get_mpz_t(), 0);
      const std::size_t w = hamming_weight(d);
      if (w + 3 < d_bits / 2 || w > d_bits / 2 + 3 || gcd(d, phi) != 1) continue;
      const BigInt e = invert(d, phi);
      if (e < 3) continue;
      const std::pair<BigInt, BigInt> pairs[] = {{e, d}};
      KeyPair key = KeyPair::from_pairs(p.p, q.p, pairs);
      key.set_witnesses(p.witness, q.witness);
      return key;
    }
  }
  throw GenerationError("weak_keys::small_d: retry budget exhausted");
}

KeyPair shared_factor(std::size_t bits, std::size_t shared_bits, std::uint64_t seed) {
  const std::size_t pb = (bits + 1) / 2;
  const std::size_t sfb = SievePolicy::for_prime_bits(pb).strong_factor_bits;
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    StrongPrimeOptions opts;
    opts.coprime_to = {kWeakExponent};
    opts.p_minus_1_multiple = random_prime(shared_bits, rng, {}, 0, false);
    const StrongPrime p = generate_strong_prime(pb, sfb, rng, opts);
    const StrongPrime q = generate_strong_prime(bits / 2, sfb, rng, opts);
    if (p.p == q.p) continue;
    const BigInt exps[] = {kWeakExponent};
    KeyPair key = KeyPair::from_factors(p.p, q.p, exps);
    key.set_witnesses(p.witness, q.witness);
    return key;
  }
  throw GenerationError("weak_keys::shared_factor: retry budget exhausted");
}

KeyPair short_cycle(std::uint64_t seed) {
  // p - 1 = 2^a * R * t with R = (3^71 - 1)/2 prime and t a product of distinct
  // primes whose order of 3 divides 720, so 3^51120 = 1 modulo lambda(n)
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), 3, 71);
  r = (r - 1) / 2;
  if (!is_probable_prime(r)) throw GenerationError("weak_keys::short_cycle: (3^71 - 1)/2 is not prime");
  std::vector<unsigned long> pool;
  for (const std::uint32_t l : primes_below(1u << 16)) {
    if (l > 3 && powm(BigInt(3), BigInt(720), BigInt(static_cast<unsigned long>(l))) == 1) pool.push_back(l);
  }
  Rng rng(seed);
  auto draw = [&]() -> StrongPrime {
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      BigInt m = r << static_cast<unsigned>(1 + rng.next() % 5);
      for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.next() % i]);
      const std::size_t k = rng.next() % 5;
      for (std::size_t i = 0; i < k; ++i) m *= pool[i];
      const BigInt p = m + 1;
      const std::size_t pb = bit_length(p);
      if (pb < 124 || pb > 136 || !is_probable_prime(p)) continue;
      BigInt rest;
      trial_factor(p + 1, 1u << 16, rest);
      if (bit_length(rest) < SievePolicy::for_prime_bits(pb).strong_factor_bits || !is_probable_prime(rest)) continue;
      return StrongPrime{p, StrongWitness{r, rest}};
    }
    throw GenerationError("weak_keys::short_cycle: retry budget exhausted");
  };
  const StrongPrime p = draw();
  for (int attempt = 0; attempt < 64; ++attempt) {
    const StrongPrime q = draw();
    if (q.p == p.p) continue;
    const BigInt exps[] = {BigInt(3)};
    KeyPair key = KeyPair::from_factors(std::max(p.p, q.p), std::min(p.p, q.p), exps);
    key.set_witnesses(p.p > q.p ? p.witness : q.witness, p.p > q.p ? q.witness : p.witness);
    return key;
  }
  throw GenerationError("weak_keys::short_cycle: retry budget exhausted");
}

}  // namespace weak_keys

}  // namespace brsa
