#include "brsa/simulator.hpp"

#include "brsa/batch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <omp.h>

namespace brsa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 53 random mantissa bits, (0, 1]
double open_unit(Rng& rng) { return (static_cast<double>(rng.next() >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace

ArrivalTrace generate_trace(double lambda, double duration, double burst_factor, double burst_fraction,
                            std::uint64_t seed) {
  if (!(lambda > 0)) throw InvalidArgument("generate_trace: lambda must be > 0");
  if (!(duration >= 0)) throw InvalidArgument("generate_trace: duration must be >= 0");
  if (!(burst_factor >= 1)) throw InvalidArgument("generate_trace: burst_factor must be >= 1");
  if (!(burst_fraction >= 0 && burst_fraction <= 1))
    throw InvalidArgument("generate_trace: burst_fraction must lie in [0, 1]");

  ArrivalTrace trace;
  trace.lambda = lambda;
  trace.duration = duration;
  trace.burst_factor = burst_factor;
  trace.burst_fraction = burst_fraction;
  trace.seed = seed;

  const double cycle = duration / 10.0;
  const double burst_len = burst_fraction * cycle;
  const double burst_mass = burst_factor * burst_len;           // integrated rate / lambda
  const double cycle_mass = burst_mass + (cycle - burst_len);
  // inverse of the integrated (unit-lambda) rate function
  auto to_time = [&](double x) {
    if (burst_factor == 1.0 || cycle_mass <= 0) return x;
    const double j = std::floor(x / cycle_mass);
    const double rem = x - j * cycle_mass;
    const double base = j * cycle;
    if (rem < burst_mass) return base + rem / burst_factor;
    return base + burst_len + (rem - burst_mass);
  };

  Rng rng(seed);
  double operational = 0;
  for (std::uint64_t id = 0;; ++id) {
    operational += -std::log(open_unit(rng));
    const double t = to_time(operational / lambda);
    if (t >= duration) break;
    trace.arrivals.push_back({t, id});
  }
  return trace;
}

const char* to_string(SimMode mode) {
  switch (mode) {
    case SimMode::NonBatching: return "nonbatching";
    case SimMode::BatchNoMini: return "batch";
    case SimMode::BatchWithMini: return "minibatch";
  }
  return "?";
}

SimMode parse_sim_mode(const std::string& text) {
  if (text == "nonbatching" || text == "none") return SimMode::NonBatching;
  if (text == "batch" || text == "batch-nomini") return SimMode::BatchNoMini;
  if (text == "minibatch" || text == "batch-mini") return SimMode::BatchWithMini;
  throw ConfigError("unknown simulation mode '" + text + "' (nonbatching|batch|minibatch)");
}

namespace {

// Service-time source for one run: the cost model, or real decryptions.
class ServiceTimer {
 public:
  ServiceTimer(const SimConfig& cfg, std::size_t b) : cfg_(cfg), rng_(0x243f6a8885a308d3ULL) {
    if (cfg.service == ServiceModel::Measured) {
      if (!cfg.key) throw ConfigError("Measured service model requires key material");
      if (cfg.key->slot_count() < b)
        throw ConfigError("Measured service model: key has fewer slots than the batch size");
      cache_.emplace(*cfg.key, 32);
    }
  }

  double duration(std::size_t size, const std::vector<std::size_t>& slots) {
    const double model = size <= 1 ? cfg_.sched.t_rsa : compute_tb(size, cfg_.sched);
    if (cfg_.service == ServiceModel::Analytic) return model;

    const KeyPair& key = *cfg_.key;
    std::vector<BigInt> cts;
    for (const std::size_t s : slots) {
      BigInt m;
      do m = rng_.below(key.n()); while (gcd(m, key.n()) != 1);
      cts.push_back(encrypt(key, s, m));
    }
    const auto t0 = std::chrono::steady_clock::now();
    if (slots.size() == 1) {
      (void)decrypt_conventional(key, slots[0], cts[0]);
    } else {
      (void)batch_decrypt(*cache_->get(slots), cts);
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - t0;
    model_total_ += model;
    wall_total_ += wall.count();
    return wall.count();
  }

  double model_vs_measured() const { return wall_total_ > 0 ? model_total_ / wall_total_ : 0.0; }

 private:
  const SimConfig& cfg_;
  Rng rng_;
  std::optional<SubsetBatchCache> cache_;
  double model_total_ = 0, wall_total_ = 0;
};

struct RequestTimes {
  double arrival = 0;
  double start = -1;  // -1: not started
  double completion = -1;
  bool rejected = false;
};

Metrics summarize(const ArrivalTrace& trace, const SimConfig& cfg, std::size_t b,
                  const std::vector<RequestTimes>& times) {
  Metrics m;
  m.mode = cfg.mode;
  m.lambda = cfg.sched.lambda;
  m.t_i = cfg.sched.t_i;
  m.b = b;
  m.arrivals = trace.size();

  std::vector<double> responses;
  std::size_t violating = 0;
  for (const auto& r : times) {
    if (r.rejected) {
      ++m.rejected;
      continue;
    }
    const bool started = r.start >= 0;
    const double wait = started ? r.start - r.arrival : cfg.duration - r.arrival;
    if (wait > cfg.sched.t_i + kTimeEpsilon) ++violating;
    if (wait > cfg.sched.t_i + cfg.sched.poll_granularity + kTimeEpsilon) ++m.late_beyond_grace;
    if (!started) {
      ++m.queued_at_horizon;
      continue;
    }
    ++m.served;
    m.max_wait = std::max(m.max_wait, wait);
    responses.push_back(r.completion - r.arrival);
  }
  if (!responses.empty()) {
    double sum = 0;
    for (double v : responses) sum += v;
    m.mean_response = sum / static_cast<double>(responses.size());
    std::sort(responses.begin(), responses.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(responses.size())));
    m.p95_response = responses[std::max<std::size_t>(rank, 1) - 1];
  }
  const std::size_t considered = m.served + m.queued_at_horizon;
  m.violations = considered ? static_cast<double>(violating) / static_cast<double>(considered) : 0.0;
  m.throughput = cfg.duration > 0 ? static_cast<double>(m.served) / cfg.duration : 0.0;
  return m;
}

Metrics run_nonbatching(const ArrivalTrace& trace, const SimConfig& cfg) {
  std::vector<RequestTimes> times(trace.size());
  ServiceTimer timer(cfg, 1);
  double free_at = 0;
  std::size_t actions = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    times[i].arrival = trace.arrivals[i].time;
    const double start = std::max(free_at, times[i].arrival);
    if (start > cfg.duration) continue;
    times[i].start = start;
    times[i].completion = start + timer.duration(1, {0});
    free_at = times[i].completion;
    ++actions;
  }
  Metrics m = summarize(trace, cfg, 1, times);
  m.actions = actions;
  if (actions) m.batch_histogram[1] = actions;
  m.model_vs_measured = timer.model_vs_measured();
  return m;
}

Metrics run_batching(const ArrivalTrace& trace, const SimConfig& cfg) {
  SchedulerConfig sched = cfg.sched;
  sched.minibatch = cfg.mode == SimMode::BatchWithMini;
  const std::size_t b = effective_batch_size(sched);
  const auto capacity = static_cast<std::size_t>(std::ceil(sched.queue_capacity_factor * static_cast<double>(b)));
  QueueState state(b, std::max<std::size_t>(capacity, 1), 0.0);
  ServiceTimer timer(cfg, b);

  std::vector<RequestTimes> times(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) times[i].arrival = trace.arrivals[i].time;

  Metrics extra;
  std::size_t next = 0;
  double now = 0;
  double busy_until = 0;
  for (;;) {
    while (next < trace.size() && trace.arrivals[next].time <= now) {
      PendingRequest req;
      req.id = next;
      req.exponent = state.assign_exponent();
      if (state.enqueue(std::move(req), trace.arrivals[next].time) == EnqueueResult::Overloaded)
        times[next].rejected = true;
      ++next;
    }

    const bool idle = busy_until <= now;
    double next_poll = kInf;
    if (idle) {
      const Action action = state.poll(sched, now);
      if (!action.is_wait()) {
        const auto consumed = state.complete_action(action, now);
        const double dur = timer.duration(action.size(), action.queues);
        for (const auto& r : consumed) {
          times[r.id].start = now;
          times[r.id].completion = now + dur;
        }
        busy_until = now + dur;
        ++extra.batch_histogram[action.size()];
        ++extra.actions;
        continue;
      }
      if (state.pending() > 0) next_poll = now + action.wait;
    }

    const double next_arrival = next < trace.size() ? trace.arrivals[next].time : kInf;
    const double next_t = std::min(next_arrival, idle ? next_poll : busy_until);
    if (next_t == kInf || next_t > cfg.duration) break;
    now = std::max(now, next_t);
  }

  Metrics m = summarize(trace, cfg, b, times);
  m.batch_histogram = std::move(extra.batch_histogram);
  m.actions = extra.actions;
  m.model_vs_measured = timer.model_vs_measured();
  return m;
}

}  // namespace

Metrics run_simulation(const ArrivalTrace& trace, const SimConfig& cfg) {
  cfg.sched.validate();
  if (!(cfg.duration > 0)) throw ConfigError("simulation duration must be > 0");
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace.arrivals[i].time < trace.arrivals[i - 1].time)
      throw InvalidArgument("run_simulation: arrival times must be nondecreasing");
  }
  if (cfg.service == ServiceModel::Measured && !cfg.key)
    throw ConfigError("Measured service model requires key material");
  return cfg.mode == SimMode::NonBatching ? run_nonbatching(trace, cfg) : run_batching(trace, cfg);
}

std::vector<Metrics> compare_modes(const ArrivalTrace& trace, const SimConfig& base) {
  std::vector<Metrics> out;
  for (const SimMode mode : {SimMode::NonBatching, SimMode::BatchNoMini, SimMode::BatchWithMini}) {
    SimConfig cfg = base;
    cfg.mode = mode;
    out.push_back(run_simulation(trace, cfg));
  }
  const double reference = out.front().mean_response;
  for (auto& m : out) m.ratio = reference > 0 ? m.mean_response / reference : (m.mean_response > 0 ? kInf : 1.0);
  return out;
}

namespace {

Metrics run_entry(const SweepEntry& e) {
  const ArrivalTrace trace =
      generate_trace(e.config.sched.lambda, e.config.duration, e.burst_factor, e.burst_fraction, e.seed);
  return run_simulation(trace, e.config);
}

}  // namespace

std::vector<Metrics> run_sweep_serial(const std::vector<SweepEntry>& entries) {
  std::vector<Metrics> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(run_entry(e));
  return out;
}

std::vector<Metrics> run_sweep_parallel(const std::vector<SweepEntry>& entries) {
  for (const auto& e : entries) {
    if (e.config.service == ServiceModel::Measured)
      throw ConfigError("parallel sweeps support the Analytic service model only");
  }
  std::vector<Metrics> out(entries.size());
  const auto count = static_cast<std::int64_t>(entries.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      out[i] = run_entry(entries[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<SweepEntry> parse_sweep(std::istream& in) {
  std::vector<SweepEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    SweepEntry entry;
    bool any = false;
    while (tokens >> tok) {
      any = true;
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ConfigError("sweep line " + std::to_string(line_no) + ": expected key=value, got '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      auto num = [&] {
        try {
          std::size_t used = 0;
          const double v = std::stod(value, &used);
          if (used == value.size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError("sweep line " + std::to_string(line_no) + ": '" + key + "' expects a number");
      };
      SchedulerConfig& s = entry.config.sched;
      if (key == "mode") entry.config.mode = parse_sim_mode(value);
      else if (key == "lambda") s.lambda = num();
      else if (key == "t_i") s.t_i = num();
      else if (key == "t_rsa") s.t_rsa = num();
      else if (key == "t_rsa_ms") s.t_rsa = num() / 1000.0;
      else if (key == "k") s.k = num();
      else if (key == "n_scale") s.n_scale = num();
      else if (key == "poll_granularity_ms") s.poll_granularity = num() / 1000.0;
      else if (key == "queue_capacity_factor") s.queue_capacity_factor = num();
      else if (key == "duration") entry.config.duration = num();
      else if (key == "burst_factor") entry.burst_factor = num();
      else if (key == "burst_fraction") entry.burst_fraction = num();
      else if (key == "seed") entry.seed = static_cast<std::uint64_t>(num());
      else throw ConfigError("sweep line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!any) continue;
    entry.config.sched.validate();
    out.push_back(entry);
  }
  return out;
}

void write_metrics_csv_header(std::ostream& out) {
  out << "mode,lambda,t_i,b,mean_ms,p95_ms,violations,throughput,ratio\n";
}

void write_metrics_csv_row(std::ostream& out, const Metrics& m, const std::string& mode_label) {
  std::ostringstream row;
  row << std::setprecision(10) << (mode_label.empty() ? to_string(m.mode) : mode_label) << ',' << m.lambda << ','
      << m.t_i << ',' << m.b << ',' << m.mean_response * 1000.0 << ',' << m.p95_response * 1000.0 << ','
      << m.violations << ',' << m.throughput << ',' << m.ratio << '\n';
  out << row.str();
}

}  // namespace brsa
