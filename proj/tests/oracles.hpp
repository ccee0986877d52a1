// Independent reference arithmetic on machine words, used to check library
// results without going through the code under test.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

inline u64 powmod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

inline u64 gcd(u64 a, u64 b) {
  while (b) {
    const u64 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

// Smallest x in [1, m) with a*x = 1 (mod m), or 0.
inline u64 inverse_by_search(u64 a, u64 m) {
  for (u64 x = 1; x < m; ++x) {
    if (mulmod(a % m, x, m) == 1) return x;
  }
  return 0;
}

inline u64 largest_prime_factor(u64 n) {
  u64 best = 1;
  for (u64 d = 2; d * d <= n; ++d) {
    while (n % d == 0) {
      best = d;
      n /= d;
    }
  }
  return n > 1 ? n : best;
}

inline unsigned bit_length(u64 x) {
  unsigned bits = 0;
  while (x) {
    ++bits;
    x >>= 1;
  }
  return bits;
}

// Batch service-time model as an exact fraction (numerator, denominator) of
// T_rsa for integer n and k.
inline std::pair<u64, u64> tb_fraction(u64 b, u64 n, u64 k) {
  const u64 num = (3 * n * n * n + n * n * (42 * b + k * (3 * b * b * b + 3 * b) - 1)) * b;
  const u64 den = b * (3 * n * n * n + n * n);
  const u64 g = gcd(num, den);
  return {num / g, den / g};
}

}  // namespace oracle
