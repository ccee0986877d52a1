// Batch RSA decryption: b ciphertexts under b pairwise-coprime public
// exponents of one modulus, recovered with a single full-size exponentiation.
#pragma once

#include "brsa/bigint.hpp"
#include "brsa/rsa.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace brsa {

/// Raised when a batch cannot be processed. `index` names the offending
/// ciphertext when one is to blame (a non-unit mod n), otherwise npos.
class BatchError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  BatchError(const std::string& what, std::size_t index = npos) : Error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Balanced product tree over the public exponents, leaf order preserved.
/// Immutable after build; independent of any particular key.
class BatchContext {
 public:
  struct Node {
    BigInt product;             // product of the exponents beneath this node
    int left = -1, right = -1;  // children; -1 for leaves
    std::size_t leaf = 0;       // exponent index, leaves only
    // Downward split multiplier t = 1 (mod E_L), t = 0 (mod E_R), smallest
    // nonnegative, with the derived exponents (t-1)/E_L and t/E_R.
    BigInt t, left_exp, right_exp;

    bool is_leaf() const { return left < 0; }
  };

  /// Throws InvalidArgument when a pair shares a factor, naming the pair.
  static BatchContext build(std::vector<BigInt> exponents);

  std::size_t size() const { return exponents_.size(); }
  const std::vector<BigInt>& exponents() const { return exponents_; }
  /// E, the product of all exponents.
  const BigInt& product() const { return nodes_[root_].product; }
  /// E / e_i
  BigInt co_exponent(std::size_t i) const { return product() / exponents_.at(i); }

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }

 private:
  int build_range(std::size_t lo, std::size_t hi);

  std::vector<BigInt> exponents_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// A context bound to a key: the root exponent D = E^-1 mod phi and its CRT
/// halves, plus the key slot of every leaf.
class BoundBatch {
 public:
  BoundBatch(std::shared_ptr<const BatchContext> ctx, const KeyPair& key);

  const BatchContext& context() const { return *ctx_; }
  const KeyPair& key() const { return *key_; }
  std::size_t size() const { return ctx_->size(); }
  const BigInt& root_exponent() const { return d_; }
  const std::vector<std::size_t>& slots() const { return slots_; }

  BigInt root_exponentiate(const BigInt& a) const;

 private:
  std::shared_ptr<const BatchContext> ctx_;
  const KeyPair* key_;
  BigInt d_, dp_, dq_;
  std::vector<std::size_t> slots_;
};

/// Ciphertexts aligned with the context's exponent order, plus origin tags.
struct BatchJob {
  std::vector<BigInt> ciphertexts;
  std::vector<std::uint64_t> tags;
};

struct BatchStats {
  std::size_t full_exponentiations = 0;   // phi-sized exponent
  std::size_t small_exponentiations = 0;  // exponents below E
  std::size_t inversions = 0;
};

std::vector<BigInt> batch_decrypt(const BoundBatch& bound, std::span<const BigInt> ciphertexts,
                                  BatchStats* stats = nullptr);
std::vector<BigInt> batch_decrypt(const BatchContext& ctx, const KeyPair& key, const BatchJob& job);

/// Decrypts many independent jobs under one bound context. The serial loop is
/// the reference; the OpenMP variant distributes jobs over threads and must
/// produce identical output.
std::vector<std::vector<BigInt>> batch_decrypt_jobs_serial(const BoundBatch& bound,
                                                           std::span<const std::vector<BigInt>> jobs);
std::vector<std::vector<BigInt>> batch_decrypt_jobs_parallel(const BoundBatch& bound,
                                                             std::span<const std::vector<BigInt>> jobs);

/// Conventional (CRT) decryption of many ciphertexts; slots[i] selects the key slot.
std::vector<BigInt> decrypt_many_serial(const KeyPair& key, std::span<const std::size_t> slots,
                                        std::span<const BigInt> ciphertexts);
std::vector<BigInt> decrypt_many_parallel(const KeyPair& key, std::span<const std::size_t> slots,
                                          std::span<const BigInt> ciphertexts);

/// The first `count` odd primes (3, 5, 7, 11, ...).
std::vector<BigInt> default_batch_exponents(std::size_t count);

struct BenchReport {
  std::size_t bits = 0;
  std::size_t b = 0;
  double batch_ms = 0;         // median wall time of one batch of b
  double conventional_ms = 0;  // median wall time of b conventional decryptions
  double speedup = 0;          // conventional_ms / batch_ms
};

BenchReport bench_batch(std::size_t bits, std::size_t b, std::size_t trials, std::uint64_t seed);
/// Same as above against an existing key whose first b slots are used.
BenchReport bench_batch(const KeyPair& key, std::size_t b, std::size_t trials, std::uint64_t seed);

}  // namespace brsa
