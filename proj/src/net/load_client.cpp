#include "brsa/server.hpp"

#include "socket.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>

namespace brsa {

namespace {

using SteadyTime = std::chrono::steady_clock::time_point;

struct ConnectionOutcome {
  std::vector<double> latencies;  // ok responses only
  std::size_t sent = 0, ok = 0, overloaded = 0, malformed = 0, mismatches = 0;
  bool transport_error = false;
  std::size_t exponent_index = 0;
};

ConnectionOutcome run_connection(const LoadOptions& opt, std::size_t index, SteadyTime t0) {
  ConnectionOutcome out;
  const std::size_t count = opt.requests_per_connection;
  try {
    net::Socket sock = net::connect_tcp(opt.server);
    net::set_recv_timeout(sock, opt.timeout);

    std::vector<std::uint8_t> buf;
    std::vector<std::uint8_t> chunk(1 << 16);
    std::optional<proto::HelloFrame> hello;
    std::size_t used = 0;
    while (!(hello = proto::decode_hello(buf, used))) {
      const std::size_t got = net::recv_some(sock, chunk.data(), chunk.size());
      if (got == 0) throw net::NetError("server closed before hello");
      buf.insert(buf.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(got));
    }
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(used));
    out.exponent_index = hello->exponent_index;
    const BigInt n = hello->n();
    const BigInt e = hello->e();

    Rng rng(opt.seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    const double rate = opt.lambda / static_cast<double>(opt.connections);
    std::vector<BigInt> messages(count);
    std::vector<std::vector<std::uint8_t>> frames(count);
    std::vector<double> offsets(count);
    double t = 0;
    for (std::size_t i = 0; i < count; ++i) {
      t += -std::log(1.0 - rng.uniform01()) / rate;
      offsets[i] = t;
      messages[i] = rng.below(n);
      frames[i] = proto::encode(proto::RequestFrame{i, to_bytes(powm(messages[i], e, n))});
    }

    std::mutex mu;
    std::vector<SteadyTime> sent_at(count);
    std::vector<bool> answered(count, false);
    bool writer_failed = false;

    std::thread writer([&] {
      try {
        for (std::size_t i = 0; i < count; ++i) {
          std::this_thread::sleep_until(t0 + std::chrono::duration_cast<std::chrono::nanoseconds>(
                                                 std::chrono::duration<double>(offsets[i])));
          {
            std::lock_guard lk(mu);
            sent_at[i] = std::chrono::steady_clock::now();
          }
          net::send_all(sock, frames[i]);
        }
      } catch (const net::NetError&) {
        std::lock_guard lk(mu);
        writer_failed = true;
      }
    });

    std::size_t received = 0;
    try {
      while (received < count) {
        std::size_t off = 0;
        for (;;) {
          std::size_t n_used = 0;
          auto resp = proto::decode_response(std::span(buf).subspan(off), n_used);
          if (!resp) break;
          off += n_used;
          const auto now = std::chrono::steady_clock::now();
          std::lock_guard lk(mu);
          if (resp->request_id >= count || answered[resp->request_id]) {
            ++out.malformed;
            continue;
          }
          const std::size_t id = resp->request_id;
          answered[id] = true;
          ++received;
          switch (resp->status) {
            case proto::Status::Ok:
              ++out.ok;
              out.latencies.push_back(std::chrono::duration<double>(now - sent_at[id]).count());
              if (from_bytes(resp->plaintext.data(), resp->plaintext.size()) != messages[id]) ++out.mismatches;
              break;
            case proto::Status::Overloaded: ++out.overloaded; break;
            case proto::Status::Malformed: ++out.malformed; break;
          }
        }
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(off));
        if (received >= count) break;
        const std::size_t got = net::recv_some(sock, chunk.data(), chunk.size());
        if (got == 0) throw net::NetError("server closed the connection");
        buf.insert(buf.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(got));
      }
    } catch (const Error&) {
      out.transport_error = true;
      sock.shutdown();
    }
    writer.join();
    out.sent = count;
    if (writer_failed) out.transport_error = true;
  } catch (const Error&) {
    out.transport_error = true;
  }
  return out;
}

}  // namespace

LoadResult run_load(const LoadOptions& opt) {
  if (opt.connections == 0) throw ConfigError("load: connections must be >= 1");
  if (!(opt.lambda > 0)) throw ConfigError("load: lambda must be > 0");

  const SteadyTime t0 = std::chrono::steady_clock::now();
  std::vector<ConnectionOutcome> outcomes(opt.connections);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < opt.connections; ++i)
    threads.emplace_back([&, i] { outcomes[i] = run_connection(opt, i, t0); });
  for (auto& t : threads) t.join();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  LoadResult r;
  std::vector<double> latencies;
  std::size_t max_index = 0;
  for (const auto& o : outcomes) {
    r.sent += o.sent;
    r.ok += o.ok;
    r.overloaded += o.overloaded;
    r.malformed += o.malformed;
    r.mismatches += o.mismatches;
    r.transport_errors += o.transport_error ? 1 : 0;
    latencies.insert(latencies.end(), o.latencies.begin(), o.latencies.end());
    max_index = std::max(max_index, o.exponent_index);
  }

  Metrics& m = r.metrics;
  m.lambda = opt.lambda;
  m.t_i = opt.t_i;
  m.b = max_index + 1;
  m.arrivals = r.sent;
  m.served = r.ok;
  m.rejected = r.overloaded;
  m.throughput = wall > 0 ? static_cast<double>(r.ok) / wall : 0;
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    double sum = 0;
    std::size_t late = 0;
    for (double v : latencies) {
      sum += v;
      if (opt.t_i > 0 && v > opt.t_i) ++late;
    }
    m.mean_response = sum / static_cast<double>(latencies.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(latencies.size())));
    m.p95_response = latencies[std::max<std::size_t>(rank, 1) - 1];
    m.max_wait = latencies.back();
    m.violations = static_cast<double>(late) / static_cast<double>(latencies.size());
    r.min_response = latencies.front();
  }
  return r;
}

void write_load_csv(std::ostream& out, const LoadResult& result) {
  write_metrics_csv_header(out);
  write_metrics_csv_row(out, result.metrics, "live");
}

}  // namespace brsa
