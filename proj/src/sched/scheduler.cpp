#include "brsa/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace brsa {

void SchedulerConfig::validate() const {
  if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
  if (!(t_i > 0)) throw ConfigError("t_i must be > 0");
  if (!(t_rsa > 0)) throw ConfigError("t_rsa must be > 0");
  if (!(k > 0)) throw ConfigError("k must be > 0");
  if (!(n_scale >= 1)) throw ConfigError("n_scale must be >= 1");
  if (!(poll_granularity > 0)) throw ConfigError("poll_granularity must be > 0");
  if (!(queue_capacity_factor > 0)) throw ConfigError("queue_capacity_factor must be > 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + value + "'");
}

}  // namespace

SchedulerConfig parse_scheduler_config(std::istream& in) {
  SchedulerConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "lambda") cfg.lambda = parse_double(key, value);
    else if (key == "t_i") cfg.t_i = parse_double(key, value);
    else if (key == "t_rsa") cfg.t_rsa = parse_double(key, value);
    else if (key == "k") cfg.k = parse_double(key, value);
    else if (key == "n_scale") cfg.n_scale = parse_double(key, value);
    else if (key == "poll_granularity_ms") cfg.poll_granularity = parse_double(key, value) / 1000.0;
    else if (key == "queue_capacity_factor") cfg.queue_capacity_factor = parse_double(key, value);
    else if (key == "minibatch") cfg.minibatch = parse_bool(key, value);
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SchedulerConfig load_scheduler_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_scheduler_config(in);
}

void write_scheduler_config(std::ostream& out, const SchedulerConfig& cfg) {
  out << "lambda = " << cfg.lambda << '\n'
      << "t_i = " << cfg.t_i << '\n'
      << "t_rsa = " << cfg.t_rsa << '\n'
      << "k = " << cfg.k << '\n'
      << "n_scale = " << cfg.n_scale << '\n'
      << "poll_granularity_ms = " << cfg.poll_granularity * 1000.0 << '\n'
      << "queue_capacity_factor = " << cfg.queue_capacity_factor << '\n'
      << "minibatch = " << (cfg.minibatch ? "true" : "false") << '\n';
}

double compute_tb(std::size_t b, const SchedulerConfig& cfg) {
  const double n = cfg.n_scale;
  const double bb = static_cast<double>(b);
  const double n2 = n * n;
  const double n3 = n2 * n;
  const double inner = 42.0 * bb + cfg.k * (3.0 * bb * bb * bb + 3.0 * bb) - 1.0;
  return (3.0 * n3 + n2 * inner) * bb * cfg.t_rsa / (bb * (3.0 * n3 + n2));
}

std::size_t max_batch_size(double lambda, double t_i) {
  // 0.4 * x written as 2x / 5 so exact products such as lambda=10, T_i=1
  // do not land just below an integer
  return static_cast<std::size_t>(std::floor(2.0 * lambda * t_i / 5.0 + 1.0));
}

std::optional<std::size_t> find_optimal_batch_size(const SchedulerConfig& cfg) {
  const std::size_t max_b = max_batch_size(cfg.lambda, cfg.t_i);
  if (max_b <= 1) return std::nullopt;
  std::optional<std::size_t> best;
  for (std::size_t b = 2; b <= max_b; ++b) {
    if (compute_tb(b, cfg) < static_cast<double>(b) / cfg.lambda) best = b;
  }
  return best;
}

std::size_t effective_batch_size(const SchedulerConfig& cfg) {
  return find_optimal_batch_size(cfg).value_or(1);
}

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::FullBatch: return "full";
    case ActionKind::MiniBatch: return "mini";
    case ActionKind::Conventional: return "conventional";
    case ActionKind::Wait: return "wait";
  }
  return "?";
}

QueueState::QueueState(std::size_t b, std::size_t capacity, double origin)
    : queues_(b), capacity_(capacity), server_wait_origin_(origin) {
  if (b == 0) throw InvalidArgument("QueueState: b must be >= 1");
  if (capacity == 0) throw InvalidArgument("QueueState: capacity must be >= 1");
}

std::size_t QueueState::assign_exponent() {
  const std::size_t out = cursor_;
  cursor_ = (cursor_ + 1) % queues_.size();
  return out;
}

EnqueueResult QueueState::enqueue(PendingRequest req, double now) {
  if (req.exponent >= queues_.size())
    throw InvalidArgument("enqueue: exponent index " + std::to_string(req.exponent) + " out of range");
  if (pending_ >= capacity_) return EnqueueResult::Overloaded;
  req.enqueued_at = now;
  queues_[req.exponent].push_back(std::move(req));
  ++pending_;
  return EnqueueResult::Accepted;
}

Action QueueState::poll(const SchedulerConfig& cfg, double now) const {
  Action action;
  const std::size_t b = queues_.size();

  const bool all_full =
      std::all_of(queues_.begin(), queues_.end(), [](const auto& q) { return !q.empty(); });
  if (all_full) {
    action.kind = b == 1 ? ActionKind::Conventional : ActionKind::FullBatch;
    for (std::size_t i = 0; i < b; ++i) {
      action.queues.push_back(i);
      action.request_ids.push_back(queues_[i].front().id);
    }
    return action;
  }

  if (pending_ == 0) {
    action.wait = cfg.poll_granularity;
    return action;
  }

  double maxtimer = 0;
  for (const auto& q : queues_) {
    if (!q.empty()) maxtimer = std::max(maxtimer, now - q.front().enqueued_at);
  }
  const double deadline = cfg.t_i;
  const double server_waiting = now - server_wait_origin_;

  if (cfg.minibatch &&
      (maxtimer >= deadline - kTimeEpsilon || server_waiting >= deadline - maxtimer - kTimeEpsilon)) {
    for (std::size_t i = 0; i < b; ++i) {
      if (queues_[i].empty()) continue;
      action.queues.push_back(i);
      action.request_ids.push_back(queues_[i].front().id);
    }
    action.kind = action.queues.size() >= 2 ? ActionKind::MiniBatch : ActionKind::Conventional;
    return action;
  }

  action.wait = std::max(0.0, std::min(cfg.poll_granularity, deadline - maxtimer));
  if (action.wait <= kTimeEpsilon) action.wait = cfg.poll_granularity;
  return action;
}

std::vector<PendingRequest> QueueState::complete_action(const Action& action, double now) {
  if (action.is_wait()) return {};
  if (action.queues.size() != action.request_ids.size())
    throw IntegrityError("action queues and request ids do not align");
  for (std::size_t j = 0; j < action.queues.size(); ++j) {
    const std::size_t qi = action.queues[j];
    if (qi >= queues_.size() || queues_[qi].empty() || queues_[qi].front().id != action.request_ids[j])
      throw IntegrityError("request " + std::to_string(action.request_ids[j]) + " is no longer at the head of queue " +
                           std::to_string(qi));
  }
  std::vector<PendingRequest> out;
  out.reserve(action.queues.size());
  for (const std::size_t qi : action.queues) {
    out.push_back(std::move(queues_[qi].front()));
    queues_[qi].pop_front();
    --pending_;
  }
  server_wait_origin_ = now;
  return out;
}

SteadyClock::SteadyClock()
    : origin_ns_(std::chrono::duration_cast<std::chrono::nanoseconds>(
                     std::chrono::steady_clock::now().time_since_epoch())
                     .count()) {}

double SteadyClock::now() const {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now().time_since_epoch())
                      .count();
  return static_cast<double>(ns - origin_ns_) * 1e-9;
}

SubsetBatchCache::SubsetBatchCache(const KeyPair& key, std::size_t capacity)
    : key_(&key), capacity_(capacity == 0 ? 1 : capacity) {}

std::shared_ptr<const BoundBatch> SubsetBatchCache::get(const std::vector<std::size_t>& slots) {
  std::uint64_t mask = 0;
  for (const std::size_t s : slots) {
    if (s >= 64) throw InvalidArgument("SubsetBatchCache: slot index too large");
    mask |= std::uint64_t{1} << s;
  }
  if (const auto it = index_.find(mask); it != index_.end()) {
    ++hits_;
    entries_.splice(entries_.begin(), entries_, it->second);
    return it->second->second;
  }
  ++misses_;
  std::vector<BigInt> exps;
  for (std::size_t s = 0; s < 64; ++s) {
    if (mask & (std::uint64_t{1} << s)) exps.push_back(key_->slot(s).e);
  }
  auto ctx = std::make_shared<const BatchContext>(BatchContext::build(std::move(exps)));
  auto bound = std::make_shared<const BoundBatch>(std::move(ctx), *key_);
  entries_.emplace_front(mask, bound);
  index_[mask] = entries_.begin();
  if (entries_.size() > capacity_) {
    index_.erase(entries_.back().first);
    entries_.pop_back();
  }
  return bound;
}

}  // namespace brsa
