// Deadline-aware optimal batch scheduling.
//
// Step 1 picks the batch size b from the batching cost model. Step 2 keeps one
// FIFO queue per public exponent, hands exponents to clients round robin and
// decides at every poll whether to run a full batch, a minibatch over the
// nonempty queues, a single conventional decryption, or to wait.
#pragma once

#include "brsa/batch.hpp"
#include "brsa/bigint.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace brsa {

/// Times are in seconds throughout. Deadline comparisons allow this much
/// slack for clock arithmetic.
inline constexpr double kTimeEpsilon = 1e-9;

struct SchedulerConfig {
  double lambda = 100.0;              // arrival rate, requests/second
  double t_i = 0.2;                   // client tolerable waiting time
  double t_rsa = 0.01;                // one conventional decryption
  double k = 1.0;                     // cost coefficient of the T_b model
  double n_scale = 1024.0;            // "n" of the T_b model, modulus bits
  double poll_granularity = 0.001;
  double queue_capacity_factor = 10;  // pending bound = factor * b
  bool minibatch = true;              // false: full batches only

  /// Throws ConfigError on a violated invariant.
  void validate() const;
};

/// `key = value` lines: lambda, t_i, t_rsa, k, n_scale, poll_granularity_ms,
/// queue_capacity_factor, minibatch. `#` starts a comment.
SchedulerConfig parse_scheduler_config(std::istream& in);
SchedulerConfig load_scheduler_config(const std::string& path);
void write_scheduler_config(std::ostream& out, const SchedulerConfig& cfg);

/// Service time of a batch of b:
///   (3n^3 + n^2 (42b + k(3b^3 + 3b) - 1)) b T_rsa / (b (3n^3 + n^2))
double compute_tb(std::size_t b, const SchedulerConfig& cfg);

/// Int(0.4 * lambda * T_i + 1)
std::size_t max_batch_size(double lambda, double t_i);

/// Largest b in [2, max_batch_size] with T_b < b / lambda; nullopt means
/// conventional (non-batching) mode.
std::optional<std::size_t> find_optimal_batch_size(const SchedulerConfig& cfg);

/// Batch size actually run by the scheduler: the optimum, or 1.
std::size_t effective_batch_size(const SchedulerConfig& cfg);

struct PendingRequest {
  std::uint64_t id = 0;
  std::size_t exponent = 0;  // queue index
  BigInt ciphertext;
  double enqueued_at = 0;    // client timer origin
};

enum class ActionKind { FullBatch, MiniBatch, Conventional, Wait };

const char* to_string(ActionKind kind);

struct Action {
  ActionKind kind = ActionKind::Wait;
  /// Queues whose heads are consumed, ascending.
  std::vector<std::size_t> queues;
  /// Head request id of each entry in `queues`.
  std::vector<std::uint64_t> request_ids;
  /// Wait only.
  double wait = 0;

  std::size_t size() const { return queues.size(); }
  bool is_wait() const { return kind == ActionKind::Wait; }
};

/// complete_action was handed an action that no longer matches the queues.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

enum class EnqueueResult { Accepted, Overloaded };

/// Step-2 queue state. Single owner: callers serialize every method call.
class QueueState {
 public:
  QueueState(std::size_t b, std::size_t capacity, double origin = 0.0);

  std::size_t batch_size() const { return queues_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t pending() const { return pending_; }
  const std::deque<PendingRequest>& queue(std::size_t i) const { return queues_.at(i); }
  double server_wait_origin() const { return server_wait_origin_; }

  /// Returns the cursor, then advances it modulo b.
  std::size_t assign_exponent();
  EnqueueResult enqueue(PendingRequest req, double now);

  /// Decision procedure, evaluated in order:
  ///  1. every queue nonempty -> FullBatch
  ///  2. maxtimer = oldest head wait; nothing queued -> Wait(granularity)
  ///  3. maxtimer >= T_i or server waiting time >= T_i - maxtimer
  ///       -> MiniBatch over the nonempty queues, or Conventional for one
  ///  4. otherwise Wait(min(granularity, T_i - maxtimer))
  /// With minibatching disabled step 3 is skipped.
  Action poll(const SchedulerConfig& cfg, double now) const;

  /// Pops the heads named by `action` and resets the server waiting time.
  /// Returns the consumed requests in action order.
  std::vector<PendingRequest> complete_action(const Action& action, double now);

 private:
  std::vector<std::deque<PendingRequest>> queues_;
  std::size_t capacity_;
  std::size_t pending_ = 0;
  std::size_t cursor_ = 0;
  double server_wait_origin_;
};

/// Injected time source so the same scheduler runs on a virtual or wall clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock();
  double now() const override;

 private:
  std::int64_t origin_ns_;
};

class ManualClock final : public Clock {
 public:
  double now() const override { return now_; }
  void set(double t) { now_ = t; }
  void advance(double dt) { now_ += dt; }

 private:
  double now_ = 0;
};

/// Bound batch contexts for exponent subsets, least recently used evicted.
/// Subsets are bit masks over the key's first b slots.
class SubsetBatchCache {
 public:
  SubsetBatchCache(const KeyPair& key, std::size_t capacity = 32);

  std::shared_ptr<const BoundBatch> get(const std::vector<std::size_t>& slots);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  using Entry = std::pair<std::uint64_t, std::shared_ptr<const BoundBatch>>;
  const KeyPair* key_;
  std::size_t capacity_;
  std::list<Entry> entries_;
  std::unordered_map<std::uint64_t, std::list<Entry>::iterator> index_;
  std::size_t hits_ = 0, misses_ = 0;
};

}  // namespace brsa
