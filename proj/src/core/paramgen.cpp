#include "brsa/paramgen.hpp"

#include "brsa/primes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace brsa {

SievePolicy SievePolicy::for_prime_bits(std::size_t prime_bits) {
  SievePolicy p;
  p.strong_factor_bits = prime_bits / 2 > 18 ? prime_bits / 2 - 16 : 2;
  p.min_prime_gap_bits = prime_bits > 17 ? prime_bits - 16 : 1;
  return p;
}

void SievePolicy::validate() const {
  if (strong_factor_bits == 0 || min_prime_gap_bits == 0 || max_gcd <= 0 || min_d_bits == 0 ||
      hamming_security_bits == 0)
    throw ConfigError("sieve policy: all thresholds must be positive");
  if (!(wiener_ratio > 0 && wiener_ratio < 0.5)) throw ConfigError("sieve policy: wiener_ratio must lie in (0, 0.5)");
}

bool SieveReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

const CheckResult& SieveReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw InvalidArgument("no sieve check named " + name);
}

std::vector<std::string> SieveReport::failed() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.pass) out.push_back(c.name);
  return out;
}

void print_report(std::ostream& out, const SieveReport& report) {
  for (const auto& c : report.checks) {
    out << "CHECK " << c.name << ": " << (c.pass ? "PASS" : "FAIL") << " measured=" << c.measured
        << " threshold=" << c.threshold << '\n';
  }
}

void print_report_csv(std::ostream& out, const SieveReport& report, bool header) {
  if (header) out << "name,verdict,measured,threshold\n";
  for (const auto& c : report.checks)
    out << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ',' << c.measured << ',' << c.threshold << '\n';
}

namespace {

// x = a (mod m1), x = b (mod m2), gcd(m1, m2) = 1; result in [0, m1*m2)
BigInt crt_pair(const BigInt& a, const BigInt& m1, const BigInt& b, const BigInt& m2) {
  const BigInt m = m1 * m2;
  BigInt x = (a + m1 * (((b - a) % m2 + m2) % m2 * invert(m1 % m2, m2) % m2)) % m;
  if (x < 0) x += m;
  return x;
}

}  // namespace

StrongPrime generate_strong_prime(std::size_t bits, std::size_t strong_factor_bits, Rng& rng,
                                  const StrongPrimeOptions& options) {
  if (strong_factor_bits < 3) strong_factor_bits = 3;
  if (bits < strong_factor_bits + 4)
    throw InvalidArgument("generate_strong_prime: bits must be >= strong_factor_bits + 4");
  const BigInt& mult = options.p_minus_1_multiple;
  if (mult < 1) throw InvalidArgument("generate_strong_prime: p_minus_1_multiple must be >= 1");
  const std::size_t budget = options.max_candidates ? options.max_candidates : 40 * bits + 2000;

  const auto coprime_ok = [&](const BigInt& p) {
    const BigInt pm1 = p - 1;
    for (const auto& e : options.coprime_to)
      if (gcd(e, pm1) != 1) return false;
    return true;
  };

  std::size_t tried = 0;
  for (int round = 0; round < 64 && tried < budget; ++round) {
    const BigInt r = random_prime(strong_factor_bits, rng, {}, 0, false);
    BigInt s;
    do s = random_prime(strong_factor_bits, rng, {}, 0, false);
    while (s == r);
    const BigInt a = r * mult;
    if (gcd(a, s) != 1) continue;
    // p = 1 (mod r*mult), p = -1 (mod s)
    BigInt p0 = crt_pair(BigInt(1), a, s - 1, s);
    BigInt step = a * s;
    if (mpz_odd_p(step.get_mpz_t())) {
      if (mpz_even_p(p0.get_mpz_t())) p0 += step;
      step *= 2;
    } else if (mpz_even_p(p0.get_mpz_t())) {
      continue;  // an even multiple forces p even: impossible
    }
    if (bit_length(step) + 2 > bits) {
      throw InvalidArgument("generate_strong_prime: strong factors too large for a " + std::to_string(bits) +
                            "-bit prime");
    }

    for (int restart = 0; restart < 8 && tried < budget; ++restart) {
      BigInt y = options.start;
      if (y == 0 || restart > 0) {
        y = rng.bits(bits);
        mpz_setbit(y.get_mpz_t(), bits - 1);
        mpz_setbit(y.get_mpz_t(), bits - 2);
      }
      BigInt off = (p0 - y) % step;
      if (off < 0) off += step;
      for (BigInt p = y + off; bit_length(p) == bits && tried < budget; p += step) {
        ++tried;
        if (!coprime_ok(p)) continue;
        if (is_probable_prime(p)) return StrongPrime{p, StrongWitness{r, s}};
      }
    }
  }
  throw GenerationError("generate_strong_prime: search budget exhausted for a " + std::to_string(bits) +
                        "-bit prime; try a smaller strong_factor_bits");
}

StrongPrime generate_strong_prime(std::size_t bits, std::size_t strong_factor_bits, std::uint64_t seed) {
  Rng rng(seed);
  return generate_strong_prime(bits, strong_factor_bits, rng);
}

namespace {

// Brent's variant of Pollard rho. Returns a nontrivial factor or 0.
BigInt rho_split(const BigInt& n, std::uint64_t max_iterations, std::uint64_t c_seed) {
  if (mpz_even_p(n.get_mpz_t())) return 2;
  for (std::uint64_t c = c_seed; c < c_seed + 4; ++c) {
    BigInt y = 2, x, g = 1, q = 1, ys;
    std::uint64_t r = 1, iters = 0;
    const std::uint64_t m = 128;
    while (g == 1 && iters < max_iterations) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = (y * y + c) % n;
      std::uint64_t k = 0;
      while (k < r && g == 1) {
        ys = y;
        for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
          y = (y * y + c) % n;
          q = (q * abs(x - y)) % n;
        }
        g = gcd(q, n);
        k += m;
        iters += m;
      }
      r *= 2;
    }
    if (g == n) {
      // backtrack one step at a time
      do {
        ys = (ys * ys + c) % n;
        g = gcd(abs(x - ys), n);
      } while (g == 1);
    }
    if (g != 1 && g != n) return g;
    if (iters >= max_iterations) return 0;
  }
  return 0;
}

}  // namespace

std::size_t largest_prime_factor_bits(const BigInt& x, std::uint64_t rho_iterations) {
  if (x < 2) return 0;
  BigInt rest;
  const auto small = trial_factor(x, 1u << 16, rest);
  std::size_t best = 0;
  for (const auto& f : small) best = std::max(best, bit_length(f));
  std::vector<BigInt> work;
  if (rest > 1) work.push_back(rest);
  while (!work.empty()) {
    BigInt v = work.back();
    work.pop_back();
    if (v < 2) continue;
    if (is_probable_prime(v)) {
      best = std::max(best, bit_length(v));
      continue;
    }
    if (is_perfect_square(v)) {
      work.push_back(isqrt(v));
      continue;
    }
    const BigInt f = rho_split(v, rho_iterations, 1);
    if (f == 0) continue;  // unsplit composite: no certified factor
    work.push_back(f);
    work.push_back(v / f);
  }
  return best;
}

BigInt binomial(std::size_t n, std::size_t k) {
  BigInt r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

namespace {

std::string fmt(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

double log2_big(const BigInt& x) {
  if (x <= 0) return -INFINITY;
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
  return std::log2(mant) + static_cast<double>(exp);
}

// A witness is accepted when it divides, is prime, and is reported by bit length.
std::size_t strong_bits(const BigInt& p, const std::optional<StrongWitness>& w) {
  if (w && w->r > 1 && w->s > 1 && (p - 1) % w->r == 0 && (p + 1) % w->s == 0 && is_probable_prime(w->r) &&
      is_probable_prime(w->s)) {
    return std::min(bit_length(w->r), bit_length(w->s));
  }
  return std::min(largest_prime_factor_bits(p - 1), largest_prime_factor_bits(p + 1));
}

}  // namespace

SieveReport sieve_keypair(const KeyPair& key, std::size_t slot, const SievePolicy& policy) {
  policy.validate();
  const KeySlot& s = key.slot(slot);
  SieveReport report;
  auto add = [&](std::string name, bool pass, std::string measured, std::string threshold) {
    report.checks.push_back(CheckResult{std::move(name), pass, std::move(measured), std::move(threshold)});
  };

  const std::size_t sp = strong_bits(key.p(), key.p_witness());
  add("strong_p", sp >= policy.strong_factor_bits, std::to_string(sp), std::to_string(policy.strong_factor_bits));
  const std::size_t sq = strong_bits(key.q(), key.q_witness());
  add("strong_q", sq >= policy.strong_factor_bits, std::to_string(sq), std::to_string(policy.strong_factor_bits));

  const std::size_t gap = bit_length(abs(key.p() - key.q()));
  add("prime_gap", gap >= policy.min_prime_gap_bits, std::to_string(gap), std::to_string(policy.min_prime_gap_bits));

  const BigInt g = gcd(key.p() - 1, key.q() - 1);
  add("gcd_check", g <= policy.max_gcd, g.get_str(), policy.max_gcd.get_str());

  const std::size_t d_bits = bit_length(s.d);
  const std::size_t phi_bits = bit_length(key.phi());
  // the small epsilon keeps exact products such as 0.292 * 1000 from rounding up
  const auto wiener_min =
      static_cast<std::size_t>(std::ceil(policy.wiener_ratio * static_cast<double>(phi_bits) - 1e-9));
  add("wiener_bound", d_bits >= wiener_min, std::to_string(d_bits), std::to_string(wiener_min));

  add("d_length", d_bits > policy.min_d_bits, std::to_string(d_bits), std::to_string(policy.min_d_bits));

  const std::size_t w = hamming_weight(s.d);
  const std::size_t kk = std::min(w, d_bits - w);
  const BigInt combos = binomial(d_bits, kk);
  BigInt bound = 1;
  bound <<= policy.hamming_security_bits;
  add("hamming_weight", combos > bound, fmt(log2_big(combos), 1), std::to_string(policy.hamming_security_bits));
  return report;
}

SievedKey generate_sieved_keypair(std::size_t bits, const std::vector<BigInt>& exponents,
                                  const SievePolicy& policy, std::uint64_t seed, std::size_t max_attempts) {
  if (max_attempts == 0) throw InvalidArgument("generate_sieved_keypair: max_attempts must be >= 1");
  if (bits < 16) throw InvalidArgument("generate_sieved_keypair: bits must be >= 16");
  if (exponents.empty()) throw InvalidArgument("generate_sieved_keypair: no exponents given");
  require_pairwise_coprime(exponents);
  policy.validate();

  Rng rng(seed);
  StrongPrimeOptions opts;
  opts.coprime_to = exponents;
  SieveReport last;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    const StrongPrime p = generate_strong_prime((bits + 1) / 2, policy.strong_factor_bits, rng, opts);
    const StrongPrime q = generate_strong_prime(bits / 2, policy.strong_factor_bits, rng, opts);
    if (p.p == q.p) continue;
    KeyPair key = KeyPair::from_factors(p.p, q.p, exponents);
    key.set_witnesses(p.witness, q.witness);
    std::vector<SieveReport> reports;
    bool ok = true;
    for (std::size_t i = 0; i < key.slot_count(); ++i) {
      reports.push_back(sieve_keypair(key, i, policy));
      if (!reports.back().pass()) {
        ok = false;
        last = reports.back();
        break;
      }
    }
    if (ok) return SievedKey{std::move(key), std::move(reports), attempt};
  }
  std::string failing;
  for (const auto& f : last.failed()) failing += (failing.empty() ? "" : ", ") + f;
  throw SieveExhausted("generate_sieved_keypair: " + std::to_string(max_attempts) +
                           " attempts exhausted; last failing checks: " + failing,
                       last);
}

KeyPair generate_profile_keypair(std::size_t bits, std::uint64_t seed) {
  if (bits < 16) throw InvalidArgument("generate_profile_keypair: bits must be >= 16");
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const BigInt p = random_prime((bits + 1) / 2, rng);
    const BigInt q = random_prime(bits / 2, rng);
    if (p == q) continue;
    const BigInt phi = (p - 1) * (q - 1);
    for (int tries = 0; tries < 256; ++tries) {
      BigInt e = rng.bits(66);
      mpz_setbit(e.get_mpz_t(), 65);
      mpz_setbit(e.get_mpz_t(), 0);
      if (gcd(e, phi) != 1) continue;
      const BigInt exps[] = {e};
      return KeyPair::from_factors(p, q, exps);
    }
  }
  throw GenerationError("generate_profile_keypair: retry budget exhausted");
}

namespace {
constexpr std::size_t kCiphertextSamples = 15;
}  // namespace

DigitProfile measure_digit_profile(const KeyPair& key, std::uint64_t seed) {
  if (key.slot_count() == 0) throw InvalidArgument("measure_digit_profile: key has no slots");
  Rng rng(seed);
  std::array<std::size_t, kCiphertextSamples> lengths{};
  for (auto& len : lengths) {
    const BigInt m = rng.below(key.n());
    len = decimal_digits(encrypt(key, 0, m));
  }
  std::nth_element(lengths.begin(), lengths.begin() + kCiphertextSamples / 2, lengths.end());
  DigitProfile out;
  out.p = decimal_digits(key.p());
  out.q = decimal_digits(key.q());
  out.n = decimal_digits(key.n());
  out.e = decimal_digits(key.slot(0).e);
  out.d = decimal_digits(key.slot(0).d);
  out.c = lengths[kCiphertextSamples / 2];
  return out;
}

const std::vector<Table1Row>& table1_reference() {
  static const std::vector<Table1Row> rows = {
      {500, 76, 76, 151, 21, 151, 151},   {600, 91, 91, 181, 21, 181, 181},
      {700, 106, 106, 212, 21, 211, 211}, {800, 121, 121, 242, 20, 241, 241},
      {900, 136, 136, 272, 20, 272, 271}, {1000, 151, 151, 302, 20, 301, 301},
      {1024, 155, 155, 309, 20, 308, 309}, {1200, 181, 181, 362, 21, 361, 362},
      {1500, 227, 227, 453, 21, 452, 452},
  };
  return rows;
}

}  // namespace brsa
