#include "brsa/batch.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <omp.h>

namespace brsa {

BatchContext BatchContext::build(std::vector<BigInt> exponents) {
  if (exponents.empty()) throw InvalidArgument("batch context needs at least one exponent");
  for (const auto& e : exponents) {
    if (e < 3 || mpz_even_p(e.get_mpz_t()))
      throw InvalidArgument("batch exponent " + e.get_str() + " must be odd and >= 3");
  }
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    for (std::size_t j = i + 1; j < exponents.size(); ++j) {
      if (gcd(exponents[i], exponents[j]) != 1)
        throw InvalidArgument("not pairwise coprime: exponents " + exponents[i].get_str() + " (index " +
                              std::to_string(i) + ") and " + exponents[j].get_str() + " (index " +
                              std::to_string(j) + ")");
    }
  }
  BatchContext ctx;
  ctx.exponents_ = std::move(exponents);
  ctx.nodes_.reserve(2 * ctx.exponents_.size() - 1);
  ctx.root_ = ctx.build_range(0, ctx.exponents_.size());
  return ctx;
}

// Children are appended before their parent, so index order is a post-order.
int BatchContext::build_range(std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) {
    Node leaf;
    leaf.product = exponents_[lo];
    leaf.leaf = lo;
    nodes_.push_back(std::move(leaf));
    return static_cast<int>(nodes_.size() - 1);
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  const int l = build_range(lo, mid);
  const int r = build_range(mid, hi);
  Node node;
  node.left = l;
  node.right = r;
  const BigInt& el = nodes_[l].product;
  const BigInt& er = nodes_[r].product;
  node.product = el * er;
  node.t = er * invert(er % el, el);
  node.left_exp = (node.t - 1) / el;
  node.right_exp = node.t / er;
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size() - 1);
}

BoundBatch::BoundBatch(std::shared_ptr<const BatchContext> ctx, const KeyPair& key)
    : ctx_(std::move(ctx)), key_(&key) {
  if (!ctx_) throw InvalidArgument("BoundBatch: null context");
  slots_.reserve(ctx_->size());
  for (const auto& e : ctx_->exponents()) {
    const auto slot = key.find_slot(e);
    if (!slot) throw InvalidArgument("batch exponent " + e.get_str() + " is not a slot of the key");
    slots_.push_back(*slot);
  }
  d_ = invert(ctx_->product(), key.phi());
  dp_ = d_ % (key.p() - 1);
  dq_ = d_ % (key.q() - 1);
}

BigInt BoundBatch::root_exponentiate(const BigInt& a) const {
  const KeyPair& k = *key_;
  const BigInt m1 = powm(a % k.p(), dp_, k.p());
  const BigInt m2 = powm(a % k.q(), dq_, k.q());
  BigInt h = (k.q_inv() * (m1 - m2)) % k.p();
  if (h < 0) h += k.p();
  return m2 + h * k.q();
}

std::vector<BigInt> batch_decrypt(const BoundBatch& bound, std::span<const BigInt> ciphertexts,
                                  BatchStats* stats) {
  const BatchContext& ctx = bound.context();
  const BigInt& n = bound.key().n();
  if (ciphertexts.size() != ctx.size())
    throw BatchError("batch size mismatch: job has " + std::to_string(ciphertexts.size()) +
                     " ciphertexts, context expects " + std::to_string(ctx.size()));
  for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
    if (ciphertexts[i] < 0 || ciphertexts[i] >= n)
      throw BatchError("ciphertext " + std::to_string(i) + " out of range [0, n)", i);
  }
  BatchStats local;
  BatchStats& st = stats ? *stats : local;

  if (ctx.size() == 1) {
    ++st.full_exponentiations;
    return {bound.root_exponentiate(ciphertexts[0])};
  }
  for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
    if (gcd(ciphertexts[i], n) != 1)
      throw BatchError("ciphertext " + std::to_string(i) + " is not invertible modulo n", i);
  }

  const auto& nodes = ctx.nodes();
  // upward phase: value[v] = prod over leaves i below v of c_i^(E_v / e_i)
  std::vector<BigInt> up(nodes.size());
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    const auto& node = nodes[v];
    if (node.is_leaf()) {
      up[v] = ciphertexts[node.leaf];
      continue;
    }
    const BigInt& el = nodes[node.left].product;
    const BigInt& er = nodes[node.right].product;
    up[v] = (powm(up[node.left], er, n) * powm(up[node.right], el, n)) % n;
    st.small_exponentiations += 2;
  }

  // root: one full-size exponentiation yields the product of all plaintexts
  std::vector<BigInt> down(nodes.size());
  const int root = ctx.root();
  down[root] = bound.root_exponentiate(up[root]);
  ++st.full_exponentiations;

  // downward phase: split each product into its two halves
  std::vector<BigInt> out(ctx.size());
  for (int v = root; v >= 0; --v) {
    const auto& node = nodes[v];
    if (node.is_leaf()) {
      out[node.leaf] = down[v];
      continue;
    }
    const BigInt& m = down[v];
    const BigInt denom = (powm(up[node.left], node.left_exp, n) * powm(up[node.right], node.right_exp, n)) % n;
    BigInt ml = (powm(m, node.t, n) * invert(denom, n)) % n;
    down[node.right] = (m * invert(ml, n)) % n;
    down[node.left] = std::move(ml);
    st.small_exponentiations += 3;
    st.inversions += 2;
  }

#ifndef NDEBUG
  BigInt prod = 1;
  for (const auto& m : out) prod = (prod * m) % n;
  if (prod != down[root]) throw BatchError("root identity violated");
#endif
  return out;
}

std::vector<BigInt> batch_decrypt(const BatchContext& ctx, const KeyPair& key, const BatchJob& job) {
  if (!job.tags.empty() && job.tags.size() != job.ciphertexts.size())
    throw BatchError("batch job tags do not align with ciphertexts");
  // non-owning shared_ptr: the caller's context outlives this call
  const BoundBatch bound(std::shared_ptr<const BatchContext>(&ctx, [](const BatchContext*) {}), key);
  return batch_decrypt(bound, job.ciphertexts);
}

std::vector<std::vector<BigInt>> batch_decrypt_jobs_serial(const BoundBatch& bound,
                                                           std::span<const std::vector<BigInt>> jobs) {
  std::vector<std::vector<BigInt>> out(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = batch_decrypt(bound, jobs[i]);
  return out;
}

std::vector<std::vector<BigInt>> batch_decrypt_jobs_parallel(const BoundBatch& bound,
                                                             std::span<const std::vector<BigInt>> jobs) {
  std::vector<std::vector<BigInt>> out(jobs.size());
  const auto count = static_cast<std::int64_t>(jobs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      out[i] = batch_decrypt(bound, jobs[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<BigInt> decrypt_many_serial(const KeyPair& key, std::span<const std::size_t> slots,
                                        std::span<const BigInt> ciphertexts) {
  if (slots.size() != ciphertexts.size()) throw InvalidArgument("decrypt_many: slot/ciphertext length mismatch");
  std::vector<BigInt> out(ciphertexts.size());
  for (std::size_t i = 0; i < ciphertexts.size(); ++i)
    out[i] = decrypt_conventional(key, slots[i], ciphertexts[i]);
  return out;
}

std::vector<BigInt> decrypt_many_parallel(const KeyPair& key, std::span<const std::size_t> slots,
                                          std::span<const BigInt> ciphertexts) {
  if (slots.size() != ciphertexts.size()) throw InvalidArgument("decrypt_many: slot/ciphertext length mismatch");
  std::vector<BigInt> out(ciphertexts.size());
  const auto count = static_cast<std::int64_t>(ciphertexts.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      out[i] = decrypt_conventional(key, slots[i], ciphertexts[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<BigInt> default_batch_exponents(std::size_t count) {
  std::vector<BigInt> out;
  for (unsigned candidate = 3; out.size() < count; candidate += 2) {
    bool prime = true;
    for (unsigned f = 3; f * f <= candidate; f += 2) {
      if (candidate % f == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.emplace_back(candidate);
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

BenchReport bench_batch(const KeyPair& key, std::size_t b, std::size_t trials, std::uint64_t seed) {
  if (b < 1) throw InvalidArgument("bench_batch: b must be >= 1");
  if (key.slot_count() < b) throw InvalidArgument("bench_batch: key has fewer than b slots");
  if (trials == 0) trials = 1;

  std::vector<BigInt> exps;
  for (std::size_t i = 0; i < b; ++i) exps.push_back(key.slot(i).e);
  const BoundBatch bound(std::make_shared<const BatchContext>(BatchContext::build(exps)), key);

  Rng rng(seed);
  std::vector<double> batch_t, conv_t;
  std::vector<std::size_t> slots(b);
  std::iota(slots.begin(), slots.end(), 0);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<BigInt> cts(b);
    for (std::size_t i = 0; i < b; ++i) {
      BigInt m;
      do m = rng.below(key.n()); while (gcd(m, key.n()) != 1);
      cts[i] = encrypt(key, i, m);
    }
    std::vector<BigInt> batch_out, conv_out;
    batch_t.push_back(time_ms([&] { batch_out = batch_decrypt(bound, cts); }));
    conv_t.push_back(time_ms([&] { conv_out = decrypt_many_serial(key, slots, cts); }));
    if (batch_out != conv_out) throw BatchError("bench_batch: batch output differs from conventional decryption");
  }
  BenchReport r;
  r.bits = key.modulus_bits();
  r.b = b;
  r.batch_ms = median(batch_t);
  r.conventional_ms = median(conv_t);
  r.speedup = r.batch_ms > 0 ? r.conventional_ms / r.batch_ms : 0.0;
  return r;
}

BenchReport bench_batch(std::size_t bits, std::size_t b, std::size_t trials, std::uint64_t seed) {
  const KeyPair key = generate_keypair(bits, default_batch_exponents(std::max<std::size_t>(b, 1)), seed);
  return bench_batch(key, b, trials, seed ^ 0x5bd1e995ULL);
}

}  // namespace brsa
