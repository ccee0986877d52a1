// Batch decryption server and its load-generating client.
//
// Connection handlers greet each client with the next round-robin public
// exponent and forward requests to a single scheduler actor. The actor owns
// the queues and hands decryption actions to a worker pool, which writes the
// responses back to the originating connections.
#pragma once

#include "brsa/protocol.hpp"
#include "brsa/rsa.hpp"
#include "brsa/scheduler.hpp"
#include "brsa/simulator.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

namespace brsa {

struct ServerOptions {
  proto::Endpoint listen{"127.0.0.1", 0};  // port 0 picks an ephemeral port
  std::size_t workers = 0;                 // 0: hardware concurrency
};

struct ServerStats {
  std::uint64_t connections = 0;
  std::uint64_t requests = 0;
  std::uint64_t ok = 0;
  std::uint64_t overloaded = 0;
  std::uint64_t malformed = 0;
  std::uint64_t full_batches = 0;
  std::uint64_t mini_batches = 0;
  std::uint64_t conventional = 0;
  std::uint64_t batch_fallbacks = 0;  // batches redone conventionally
};

class BatchServer {
 public:
  /// Throws ConfigError when the key has fewer slots than the batch size the
  /// scheduler config selects.
  BatchServer(KeyPair key, SchedulerConfig config, ServerOptions options = {});
  ~BatchServer();
  BatchServer(const BatchServer&) = delete;
  BatchServer& operator=(const BatchServer&) = delete;

  /// Binds, listens and spawns the accept, scheduler and worker threads.
  void start();
  /// Stops accepting, drops open connections and joins every thread.
  void stop();

  std::uint16_t port() const;
  std::size_t batch_size() const;
  ServerStats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LoadOptions {
  proto::Endpoint server;
  std::size_t connections = 10;
  std::size_t requests_per_connection = 100;
  double lambda = 50.0;  // aggregate request rate over all connections
  std::uint64_t seed = 1;
  double t_i = 0;        // deadline used for the violations column; 0 disables
  double timeout = 30.0; // per-connection receive timeout, seconds
};

struct LoadResult {
  Metrics metrics;  // mode reported as "live" in CSV output
  std::size_t sent = 0;
  std::size_t ok = 0;
  std::size_t overloaded = 0;
  std::size_t malformed = 0;
  std::size_t mismatches = 0;
  std::size_t transport_errors = 0;  // connections that failed or timed out
  double min_response = 0;

  bool correct() const { return mismatches == 0 && transport_errors == 0; }
};

/// Opens the connections, sends Poisson-spaced encrypted random plaintexts
/// and checks every returned plaintext against the original.
LoadResult run_load(const LoadOptions& options);

void write_load_csv(std::ostream& out, const LoadResult& result);

}  // namespace brsa
