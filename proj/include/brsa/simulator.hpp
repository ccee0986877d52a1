// Discrete-event simulation of a decryption server under three policies:
// no batching, full batches only, and full batches plus minibatching.
#pragma once

#include "brsa/rsa.hpp"
#include "brsa/scheduler.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace brsa {

struct ArrivalTrace {
  struct Arrival {
    double time;
    std::uint64_t id;
  };
  std::vector<Arrival> arrivals;
  double lambda = 0;
  double duration = 0;
  double burst_factor = 1;
  double burst_fraction = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return arrivals.size(); }
};

/// Poisson arrivals at rate lambda, raised to lambda * burst_factor inside
/// burst windows. The horizon is split into ten equal cycles and the first
/// burst_fraction of every cycle is a burst. Arrivals are drawn in unit-rate
/// operational time and mapped through the integrated rate, so equal seeds
/// give coupled traces across parameter changes.
ArrivalTrace generate_trace(double lambda, double duration, double burst_factor, double burst_fraction,
                            std::uint64_t seed);

enum class SimMode { NonBatching, BatchNoMini, BatchWithMini };
enum class ServiceModel { Analytic, Measured };

const char* to_string(SimMode mode);
SimMode parse_sim_mode(const std::string& text);

struct SimConfig {
  SchedulerConfig sched;
  SimMode mode = SimMode::BatchWithMini;
  ServiceModel service = ServiceModel::Analytic;
  double duration = 10.0;
  /// Measured mode only: key whose slots back the batch contexts.
  const KeyPair* key = nullptr;
};

struct Metrics {
  SimMode mode = SimMode::NonBatching;
  double lambda = 0;
  double t_i = 0;
  std::size_t b = 0;
  std::size_t arrivals = 0;
  std::size_t served = 0;
  std::size_t queued_at_horizon = 0;
  std::size_t rejected = 0;
  double mean_response = 0;  // seconds, over served requests
  double p95_response = 0;
  double max_wait = 0;       // longest wait before service start
  double violations = 0;     // fraction waiting longer than T_i
  std::size_t late_beyond_grace = 0;  // waits longer than T_i + poll granularity
  double throughput = 0;     // served / duration
  std::map<std::size_t, std::size_t> batch_histogram;  // action size -> count
  std::size_t actions = 0;
  double ratio = 1.0;        // mean response / reference mean response
  double model_vs_measured = 0;  // Measured mode: sum(T_b model) / sum(wall time)
};

/// Runs one policy over the trace on a virtual clock. Requests not started
/// before the horizon are reported as queued and excluded from the means.
Metrics run_simulation(const ArrivalTrace& trace, const SimConfig& cfg);

/// All three policies on the same trace; ratio = mean / NonBatching mean.
std::vector<Metrics> compare_modes(const ArrivalTrace& trace, const SimConfig& base);

/// One (trace, config) pair per entry; the OpenMP variant runs entries
/// concurrently and must match the serial reference bit for bit.
struct SweepEntry {
  SimConfig config;
  double burst_factor = 1;
  double burst_fraction = 0;
  std::uint64_t seed = 1;
};
std::vector<Metrics> run_sweep_serial(const std::vector<SweepEntry>& entries);
std::vector<Metrics> run_sweep_parallel(const std::vector<SweepEntry>& entries);

/// Sweep file: one whitespace-separated `key=value` config per line; keys are
/// mode, lambda, t_i, t_rsa (seconds), t_rsa_ms, k, n_scale,
/// poll_granularity_ms, queue_capacity_factor, duration, burst_factor,
/// burst_fraction, seed.
std::vector<SweepEntry> parse_sweep(std::istream& in);

/// mode,lambda,t_i,b,mean_ms,p95_ms,violations,throughput,ratio
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_row(std::ostream& out, const Metrics& m, const std::string& mode_label = "");

}  // namespace brsa
