#include "brsa/server.hpp"

#include "brsa/batch.hpp"
#include "socket.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <functional>
#include <list>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <sys/socket.h>

namespace brsa {

namespace {

struct Connection {
  net::Socket sock;
  std::size_t exponent = 0;
  std::mutex write_mu;
  std::atomic<bool> finished{false};
  std::thread thread;

  void send(const proto::ResponseFrame& frame) {
    const auto bytes = proto::encode(frame);
    std::lock_guard lk(write_mu);
    try {
      net::send_all(sock, bytes);
    } catch (const net::NetError&) {
      sock.shutdown();
    }
  }
};

struct Submission {
  std::shared_ptr<Connection> conn;
  std::uint64_t client_id = 0;
  BigInt ciphertext;
  double arrival = 0;
};

struct Route {
  std::shared_ptr<Connection> conn;
  std::uint64_t client_id = 0;
};

class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads) {
    for (std::size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { run(); });
  }
  ~WorkerPool() { stop(); }

  void post(std::function<void()> task) {
    {
      std::lock_guard lk(mu_);
      tasks_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

  void stop() {
    {
      std::lock_guard lk(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stopping_ || !tasks_.empty(); });
        if (stopping_) return;
        task = std::move(tasks_.front());
        tasks_.pop_front();
      }
      task();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
};

}  // namespace

struct BatchServer::Impl {
  KeyPair key;
  SchedulerConfig cfg;
  ServerOptions options;
  std::size_t b;
  std::size_t capacity;
  std::size_t workers;
  std::size_t modulus_bytes;
  SteadyClock clock;

  net::Socket listener;
  std::uint16_t port = 0;
  std::thread accept_thread;
  std::thread sched_thread;
  std::unique_ptr<WorkerPool> pool;
  bool started = false;
  bool stopped = false;

  std::mutex conn_mu;
  std::list<std::shared_ptr<Connection>> connections;

  // scheduler mailbox
  std::mutex mb_mu;
  std::condition_variable mb_cv;
  std::deque<Submission> inbox;
  std::size_t completions = 0;
  bool stopping = false;

  std::atomic<std::uint64_t> n_connections{0}, n_requests{0}, n_ok{0}, n_overloaded{0}, n_malformed{0},
      n_full{0}, n_mini{0}, n_conventional{0}, n_fallbacks{0};

  Impl(KeyPair k, SchedulerConfig c, ServerOptions o)
      : key(std::move(k)), cfg(c), options(std::move(o)), modulus_bytes(key.modulus_bytes()) {
    cfg.validate();
    b = effective_batch_size(cfg);
    if (key.slot_count() < b)
      throw ConfigError("key has " + std::to_string(key.slot_count()) + " exponent slots, scheduler needs " +
                        std::to_string(b));
    capacity = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.queue_capacity_factor * b)));
    workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  }

  void accept_loop() {
    std::size_t next_exponent = 0;
    for (;;) {
      const int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return;
      }
      auto conn = std::make_shared<Connection>();
      conn->sock = net::Socket(fd);
      net::set_nodelay(conn->sock);
      conn->exponent = next_exponent;
      next_exponent = (next_exponent + 1) % b;
      ++n_connections;

      std::lock_guard lk(conn_mu);
      if (stopped) return;
      for (auto it = connections.begin(); it != connections.end();) {
        if ((*it)->finished) {
          (*it)->thread.join();
          it = connections.erase(it);
        } else {
          ++it;
        }
      }
      conn->thread = std::thread([this, conn] { handle(conn); });
      connections.push_back(conn);
    }
  }

  void handle(const std::shared_ptr<Connection>& conn) {
    try {
      const auto& slot = key.slot(conn->exponent);
      const auto hello = proto::encode(proto::HelloFrame::make(static_cast<std::uint16_t>(conn->exponent), key.n(), slot.e));
      {
        std::lock_guard lk(conn->write_mu);
        net::send_all(conn->sock, hello);
      }
      std::vector<std::uint8_t> buf;
      std::vector<std::uint8_t> chunk(1 << 16);
      for (;;) {
        const std::size_t got = net::recv_some(conn->sock, chunk.data(), chunk.size());
        if (got == 0) break;
        buf.insert(buf.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(got));
        std::size_t off = 0;
        bool close = false;
        while (off < buf.size()) {
          std::size_t used = 0;
          std::optional<proto::RequestFrame> frame;
          try {
            frame = proto::decode_request(std::span(buf).subspan(off), used);
          } catch (const proto::ProtocolError&) {
            ++n_malformed;
            conn->send({0, proto::Status::Malformed, {}});
            close = true;
            break;
          }
          if (!frame) break;
          off += used;
          on_request(conn, std::move(*frame));
        }
        if (close) break;
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(off));
      }
    } catch (const net::NetError&) {
    }
    conn->sock.shutdown();
    conn->finished = true;
  }

  void on_request(const std::shared_ptr<Connection>& conn, proto::RequestFrame frame) {
    ++n_requests;
    const double now = clock.now();
    BigInt c = from_bytes(frame.ciphertext.data(), frame.ciphertext.size());
    if (frame.ciphertext.size() > modulus_bytes || c >= key.n()) {
      ++n_malformed;
      conn->send({frame.request_id, proto::Status::Malformed, {}});
      return;
    }
    {
      std::lock_guard lk(mb_mu);
      inbox.push_back({conn, frame.request_id, std::move(c), now});
    }
    mb_cv.notify_one();
  }

  struct Job {
    std::vector<std::size_t> slots;
    std::vector<BigInt> ciphertexts;
    std::vector<Route> routes;
    std::shared_ptr<const BoundBatch> bound;
  };

  void run_job(const Job& job) {
    std::vector<BigInt> pts;
    if (job.slots.size() == 1) {
      pts.push_back(decrypt_conventional(key, job.slots[0], job.ciphertexts[0]));
    } else {
      try {
        pts = batch_decrypt(*job.bound, job.ciphertexts);
      } catch (const BatchError&) {
        ++n_fallbacks;
        pts.clear();
        for (std::size_t i = 0; i < job.slots.size(); ++i)
          pts.push_back(decrypt_conventional(key, job.slots[i], job.ciphertexts[i]));
      }
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      job.routes[i].conn->send({job.routes[i].client_id, proto::Status::Ok, to_bytes(pts[i])});
      ++n_ok;
    }
    {
      std::lock_guard lk(mb_mu);
      ++completions;
    }
    mb_cv.notify_one();
  }

  void scheduler_loop() {
    QueueState state(b, capacity, clock.now());
    SubsetBatchCache cache(key);
    std::unordered_map<std::uint64_t, Route> routes;
    std::uint64_t next_id = 0;
    std::size_t in_flight = 0;
    double wait = cfg.poll_granularity;

    for (;;) {
      std::deque<Submission> arrived;
      std::size_t done = 0;
      {
        std::unique_lock lk(mb_mu);
        mb_cv.wait_for(lk, std::chrono::duration<double>(wait),
                       [&] { return stopping || !inbox.empty() || completions > 0; });
        if (stopping) return;
        arrived.swap(inbox);
        done = completions;
        completions = 0;
      }
      in_flight -= done;

      for (auto& sub : arrived) {
        PendingRequest req;
        req.id = next_id++;
        req.exponent = sub.conn->exponent;
        req.ciphertext = std::move(sub.ciphertext);
        if (state.enqueue(std::move(req), sub.arrival) == EnqueueResult::Overloaded) {
          ++n_overloaded;
          sub.conn->send({sub.client_id, proto::Status::Overloaded, {}});
          continue;
        }
        routes.emplace(next_id - 1, Route{std::move(sub.conn), sub.client_id});
      }

      wait = 1.0;
      while (in_flight < workers) {
        const double now = clock.now();
        const Action action = state.poll(cfg, now);
        if (action.is_wait()) {
          wait = action.wait;
          break;
        }
        auto consumed = state.complete_action(action, now);
        Job job;
        job.slots = action.queues;
        for (auto& req : consumed) {
          job.ciphertexts.push_back(std::move(req.ciphertext));
          const auto it = routes.find(req.id);
          job.routes.push_back(std::move(it->second));
          routes.erase(it);
        }
        if (action.size() > 1) job.bound = cache.get(action.queues);
        switch (action.kind) {
          case ActionKind::FullBatch: ++n_full; break;
          case ActionKind::MiniBatch: ++n_mini; break;
          default: ++n_conventional; break;
        }
        ++in_flight;
        pool->post([this, job = std::move(job)] { run_job(job); });
      }
      if (state.pending() == 0 && in_flight < workers) wait = 1.0;
    }
  }
};

BatchServer::BatchServer(KeyPair key, SchedulerConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(key), config, std::move(options))) {}

BatchServer::~BatchServer() { stop(); }

void BatchServer::start() {
  if (impl_->started) throw Error("server already started");
  impl_->listener = net::listen_tcp(impl_->options.listen);
  impl_->port = net::local_port(impl_->listener);
  impl_->pool = std::make_unique<WorkerPool>(impl_->workers);
  impl_->started = true;
  impl_->sched_thread = std::thread([this] { impl_->scheduler_loop(); });
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void BatchServer::stop() {
  if (!impl_ || !impl_->started || impl_->stopped) return;
  {
    std::lock_guard lk(impl_->conn_mu);
    impl_->stopped = true;
  }
  impl_->listener.shutdown();
  impl_->accept_thread.join();
  impl_->listener.close();
  {
    std::lock_guard lk(impl_->conn_mu);
    for (auto& c : impl_->connections) c->sock.shutdown();
    for (auto& c : impl_->connections) c->thread.join();
    impl_->connections.clear();
  }
  {
    std::lock_guard lk(impl_->mb_mu);
    impl_->stopping = true;
  }
  impl_->mb_cv.notify_all();
  impl_->sched_thread.join();
  impl_->pool->stop();
}

std::uint16_t BatchServer::port() const { return impl_->port; }

std::size_t BatchServer::batch_size() const { return impl_->b; }

ServerStats BatchServer::stats() const {
  ServerStats s;
  s.connections = impl_->n_connections;
  s.requests = impl_->n_requests;
  s.ok = impl_->n_ok;
  s.overloaded = impl_->n_overloaded;
  s.malformed = impl_->n_malformed;
  s.full_batches = impl_->n_full;
  s.mini_batches = impl_->n_mini;
  s.conventional = impl_->n_conventional;
  s.batch_fallbacks = impl_->n_fallbacks;
  return s;
}

}  // namespace brsa
