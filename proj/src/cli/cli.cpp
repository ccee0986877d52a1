#include "brsa/cli.hpp"

#include "brsa/attacks.hpp"
#include "brsa/batch.hpp"
#include "brsa/paramgen.hpp"
#include "brsa/rsa.hpp"
#include "brsa/scheduler.hpp"
#include "brsa/server.hpp"
#include "brsa/simulator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <pthread.h>

namespace brsa::cli {

namespace {

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value, std::ostream& out) {
  if (opt->count() > 0) return value;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  out << "seed: " << seed << '\n';
  return seed;
}

std::vector<BigInt> parse_exponent_list(const std::string& text) {
  std::vector<BigInt> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_integer(item));
    } catch (const Error&) {
      throw ConfigError("bad exponent '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("exponent list is empty");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& v : parse_exponent_list(text)) {
    if (v < 1 || !v.fits_ulong_p()) throw ConfigError("bad list value " + v.get_str());
    out.push_back(v.get_ui());
  }
  return out;
}

// Writes CSV to `path`, or to `out` when path is empty.
template <typename Fn>
void emit_csv(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw ConfigError("cannot write " + path);
  fn(file);
  if (!file) throw Error("write failed: " + path);
}

struct SchedFlags {
  std::string config;
  double lambda = SchedulerConfig{}.lambda;
  double t_i = SchedulerConfig{}.t_i;
  double t_rsa_ms = SchedulerConfig{}.t_rsa * 1000.0;
  double k = SchedulerConfig{}.k;
  double n_scale = SchedulerConfig{}.n_scale;
  double poll_ms = SchedulerConfig{}.poll_granularity * 1000.0;
  double capacity_factor = SchedulerConfig{}.queue_capacity_factor;
  std::vector<const CLI::Option*> overrides;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Scheduler config file (key = value lines)");
    overrides = {
        app->add_option("--lambda", lambda, "Arrival rate, requests/s"),
        app->add_option("--t-i", t_i, "Tolerable waiting time T_i, s"),
        app->add_option("--t-rsa-ms", t_rsa_ms, "Conventional decryption time, ms"),
        app->add_option("--k", k, "Cost coefficient of the batch model"),
        app->add_option("--n-scale", n_scale, "Modulus size used by the batch model"),
        app->add_option("--poll-ms", poll_ms, "Scheduler poll granularity, ms"),
        app->add_option("--capacity-factor", capacity_factor, "Pending-request bound as a multiple of b"),
    };
  }

  // Config file first, explicit flags on top.
  SchedulerConfig resolve() const {
    SchedulerConfig cfg = config.empty() ? SchedulerConfig{} : load_scheduler_config(config);
    if (config.empty() || overrides[0]->count()) cfg.lambda = lambda;
    if (config.empty() || overrides[1]->count()) cfg.t_i = t_i;
    if (config.empty() || overrides[2]->count()) cfg.t_rsa = t_rsa_ms / 1000.0;
    if (config.empty() || overrides[3]->count()) cfg.k = k;
    if (config.empty() || overrides[4]->count()) cfg.n_scale = n_scale;
    if (config.empty() || overrides[5]->count()) cfg.poll_granularity = poll_ms / 1000.0;
    if (config.empty() || overrides[6]->count()) cfg.queue_capacity_factor = capacity_factor;
    cfg.validate();
    return cfg;
  }
};

void print_sieve(std::ostream& out, const KeyPair& key, std::size_t slot, const SieveReport& report) {
  out << "slot " << slot << " (e=" << key.slot(slot).e.get_str() << "): " << (report.pass() ? "PASS" : "FAIL")
      << '\n';
  print_report(out, report);
}

// ---- keygen ---------------------------------------------------------------

struct KeygenArgs {
  std::size_t bits = 1024;
  std::string exponents = "3,5,7,11";
  bool sieve = false;
  std::string weak;
  std::uint64_t bound = 65536;
  std::size_t d_bits = 0;
  std::size_t shared_bits = 16;
  std::size_t max_attempts = 200;
  std::string out_path;
  std::string csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_keygen(const KeygenArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, out);
  std::optional<KeyPair> key;
  std::vector<SieveReport> reports;
  const SievePolicy policy = SievePolicy::for_modulus_bits(a.bits);

  if (!a.weak.empty()) {
    if (a.weak == "close-primes") key = weak_keys::close_primes(a.bits, seed);
    else if (a.weak == "smooth") key = weak_keys::smooth_p_minus_1(a.bits, a.bound, seed);
    else if (a.weak == "small-d") key = weak_keys::small_d(a.bits, a.d_bits ? a.d_bits : a.bits / 5, seed);
    else if (a.weak == "shared-factor") key = weak_keys::shared_factor(a.bits, a.shared_bits, seed);
    else if (a.weak == "short-cycle") key = weak_keys::short_cycle(seed);
    else throw ConfigError("unknown weak key kind '" + a.weak + "'");
    if (a.sieve) {
      const SievePolicy weak_policy = SievePolicy::for_prime_bits(std::max(bit_length(key->p()), bit_length(key->q())));
      reports.push_back(sieve_keypair(*key, 0, weak_policy));
    }
  } else if (a.sieve) {
    SievedKey sk = generate_sieved_keypair(a.bits, parse_exponent_list(a.exponents), policy, seed, a.max_attempts);
    out << "sieve attempts: " << sk.attempts << '\n';
    key = std::move(sk.key);
    reports = std::move(sk.reports);
  } else {
    key = generate_keypair(a.bits, parse_exponent_list(a.exponents), seed);
  }

  out << "modulus bits: " << key->modulus_bits() << ", slots: " << key->slot_count() << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) print_sieve(out, *key, i, reports[i]);
  if (!a.csv.empty() && !reports.empty()) {
    emit_csv(a.csv, out, [&](std::ostream& o) {
      for (std::size_t i = 0; i < reports.size(); ++i) print_report_csv(o, reports[i], i == 0);
    });
  }
  if (a.out_path.empty()) write_key_file(out, *key);
  else {
    save_key_file(a.out_path, *key);
    out << "key written to " << a.out_path << '\n';
  }
  return kExitOk;
}

// ---- sieve ----------------------------------------------------------------

struct SieveArgs {
  std::string key;
  int slot = -1;
  std::size_t strong_bits = 0;
  std::size_t gap_bits = 0;
  std::string max_gcd;
  std::string csv;
};

int run_sieve(const SieveArgs& a, std::ostream& out) {
  const KeyPair key = load_key_file(a.key);
  SievePolicy policy = SievePolicy::for_prime_bits(std::max(bit_length(key.p()), bit_length(key.q())));
  if (a.strong_bits) policy.strong_factor_bits = a.strong_bits;
  if (a.gap_bits) policy.min_prime_gap_bits = a.gap_bits;
  if (!a.max_gcd.empty()) policy.max_gcd = parse_integer(a.max_gcd);
  policy.validate();

  std::vector<std::size_t> slots;
  if (a.slot >= 0) {
    if (static_cast<std::size_t>(a.slot) >= key.slot_count()) throw ConfigError("slot out of range");
    slots.push_back(static_cast<std::size_t>(a.slot));
  } else {
    for (std::size_t i = 0; i < key.slot_count(); ++i) slots.push_back(i);
  }
  bool all = true;
  std::vector<SieveReport> reports;
  for (const std::size_t s : slots) {
    reports.push_back(sieve_keypair(key, s, policy));
    print_sieve(out, key, s, reports.back());
    all = all && reports.back().pass();
  }
  if (!a.csv.empty()) {
    emit_csv(a.csv, out, [&](std::ostream& o) {
      for (std::size_t i = 0; i < reports.size(); ++i) print_report_csv(o, reports[i], i == 0);
    });
  }
  return all ? kExitOk : kExitFailure;
}

// ---- encrypt / decrypt ----------------------------------------------------

struct CryptArgs {
  std::string key;
  std::size_t slot = 0;
  std::string value;
  std::string batch;
};

std::size_t check_slot(const KeyPair& key, std::size_t slot) {
  if (slot >= key.slot_count()) throw ConfigError("slot " + std::to_string(slot) + " out of range");
  return slot;
}

BigInt parse_value(const std::string& text) {
  try {
    return parse_integer(text);
  } catch (const Error&) {
    throw ConfigError("bad integer '" + text + "'");
  }
}

int run_encrypt(const CryptArgs& a, std::ostream& out) {
  const KeyPair key = load_key_file(a.key);
  const BigInt m = parse_value(a.value);
  if (m < 0 || m >= key.n()) throw ConfigError("message must lie in [0, n)");
  out << encrypt(key, check_slot(key, a.slot), m).get_str() << '\n';
  return kExitOk;
}

int run_decrypt(const CryptArgs& a, std::ostream& out) {
  const KeyPair key = load_key_file(a.key);
  if (!a.batch.empty()) {
    const std::vector<BigInt> cts = parse_exponent_list(a.batch);
    if (cts.size() > key.slot_count()) throw ConfigError("more ciphertexts than key slots");
    std::vector<BigInt> exps;
    for (std::size_t i = 0; i < cts.size(); ++i) {
      if (cts[i] < 0 || cts[i] >= key.n()) throw ConfigError("ciphertext must lie in [0, n)");
      exps.push_back(key.slot(i).e);
    }
    const BatchContext ctx = BatchContext::build(exps);
    BatchJob job;
    job.ciphertexts = cts;
    try {
      for (const auto& m : batch_decrypt(ctx, key, job)) out << m.get_str() << '\n';
    } catch (const BatchError& e) {
      out << "batch failed: " << e.what() << '\n';
      return kExitFailure;
    }
    return kExitOk;
  }
  const BigInt c = parse_value(a.value);
  if (c < 0 || c >= key.n()) throw ConfigError("ciphertext must lie in [0, n)");
  out << decrypt_conventional(key, check_slot(key, a.slot), c).get_str() << '\n';
  return kExitOk;
}

// ---- batch-bench ----------------------------------------------------------

struct BenchArgs {
  std::size_t bits = 1024;
  std::string sizes = "2,4,8";
  std::size_t trials = 5;
  std::string csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_batch_bench(const BenchArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, out);
  const auto sizes = parse_size_list(a.sizes);
  std::size_t max_b = 1;
  for (auto b : sizes) max_b = std::max(max_b, b);
  const KeyPair key = generate_keypair(a.bits, default_batch_exponents(max_b), seed);
  std::vector<BenchReport> rows;
  for (auto b : sizes) {
    rows.push_back(bench_batch(key, b, a.trials, seed + b));
  }
  emit_csv(a.csv, out, [&](std::ostream& o) {
    o << "bits,b,batch_ms,conventional_ms,speedup\n" << std::fixed << std::setprecision(4);
    for (const auto& r : rows)
      o << r.bits << ',' << r.b << ',' << r.batch_ms << ',' << r.conventional_ms << ',' << r.speedup << '\n';
  });
  if (!a.csv.empty()) out << "wrote " << rows.size() << " rows to " << a.csv << '\n';
  return kExitOk;
}

// ---- simulate / compare ---------------------------------------------------

struct SimArgs {
  SchedFlags sched;
  std::string mode = "minibatch";
  double duration = 10.0;
  double burst_factor = 1.0;
  double burst_fraction = 0.0;
  std::string sweep;
  bool serial = false;
  std::string key;
  std::string csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

SimConfig sim_config(const SimArgs& a, std::optional<KeyPair>& key_store) {
  SimConfig cfg;
  cfg.sched = a.sched.resolve();
  cfg.mode = parse_sim_mode(a.mode);
  cfg.duration = a.duration;
  if (!a.key.empty()) {
    key_store = load_key_file(a.key);
    cfg.service = ServiceModel::Measured;
    cfg.key = &*key_store;
  }
  return cfg;
}

void print_metrics(std::ostream& out, const Metrics& m) {
  out << std::fixed << std::setprecision(3) << to_string(m.mode) << ": b=" << m.b << " arrivals=" << m.arrivals
      << " served=" << m.served << " queued=" << m.queued_at_horizon << " rejected=" << m.rejected
      << " mean=" << m.mean_response * 1000 << "ms p95=" << m.p95_response * 1000
      << "ms max_wait=" << m.max_wait * 1000 << "ms violations=" << m.violations << " ratio=" << m.ratio;
  if (m.model_vs_measured > 0) out << " model/measured=" << m.model_vs_measured;
  out << '\n' << std::defaultfloat;
}

int run_simulate(const SimArgs& a, std::ostream& out) {
  if (!a.sweep.empty()) {
    std::ifstream in(a.sweep);
    if (!in) throw ConfigError("cannot open sweep file " + a.sweep);
    const auto entries = parse_sweep(in);
    const auto results = a.serial ? run_sweep_serial(entries) : run_sweep_parallel(entries);
    for (const auto& m : results) print_metrics(out, m);
    if (!a.csv.empty()) {
      emit_csv(a.csv, out, [&](std::ostream& o) {
        write_metrics_csv_header(o);
        for (const auto& m : results) write_metrics_csv_row(o, m);
      });
    }
    return kExitOk;
  }
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, out);
  std::optional<KeyPair> key;
  const SimConfig cfg = sim_config(a, key);
  const ArrivalTrace trace = generate_trace(cfg.sched.lambda, cfg.duration, a.burst_factor, a.burst_fraction, seed);
  const Metrics m = run_simulation(trace, cfg);
  print_metrics(out, m);
  if (!a.csv.empty()) {
    emit_csv(a.csv, out, [&](std::ostream& o) {
      write_metrics_csv_header(o);
      write_metrics_csv_row(o, m);
    });
  }
  return kExitOk;
}

int run_compare(const SimArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, out);
  std::optional<KeyPair> key;
  const SimConfig cfg = sim_config(a, key);
  const ArrivalTrace trace = generate_trace(cfg.sched.lambda, cfg.duration, a.burst_factor, a.burst_fraction, seed);
  const auto rows = compare_modes(trace, cfg);
  for (const auto& m : rows) print_metrics(out, m);
  emit_csv(a.csv, out, [&](std::ostream& o) {
    write_metrics_csv_header(o);
    for (const auto& m : rows) write_metrics_csv_row(o, m);
  });
  return kExitOk;
}

// ---- attack ---------------------------------------------------------------

struct AttackArgs {
  std::string attack;
  std::string key;
  std::size_t slot = 0;
  std::uint64_t steps = 1'000'000;
  double seconds = 60.0;
  std::uint64_t bound = 65536;
  std::string ciphertext;
  std::string expect;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_attack(const AttackArgs& a, std::ostream& out) {
  if (!a.expect.empty() && a.expect != "broken" && a.expect != "resisted")
    throw ConfigError("--expect must be broken or resisted");
  const KeyPair key = load_key_file(a.key);
  const std::size_t slot = check_slot(key, a.slot);
  const BigInt& e = key.slot(slot).e;
  const BigInt& n = key.n();
  AttackBudget budget{a.steps, a.seconds};
  budget.validate();
  AttackTrace trace;
  bool broken = false;
  std::string detail;

  if (a.attack == "fermat") {
    if (auto f = fermat_factor(n, budget, &trace)) {
      broken = true;
      detail = "p=" + f->first.get_str() + " q=" + f->second.get_str();
    }
  } else if (a.attack == "pminus1") {
    if (auto f = pollard_p_minus_1(n, a.bound, budget, &trace)) {
      broken = true;
      detail = "factor=" + f->get_str();
    }
  } else if (a.attack == "wiener") {
    if (auto d = wiener_attack(e, n, budget, &trace)) {
      broken = true;
      detail = "d=" + d->get_str();
    }
  } else if (a.attack == "cycle" || a.attack == "exhaustive") {
    const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, out);
    Rng rng(seed);
    if (a.attack == "cycle") {
      BigInt m;
      BigInt c;
      if (a.ciphertext.empty()) {
        m = rng.below(n);
        c = encrypt(key, slot, m);
      } else {
        c = parse_value(a.ciphertext);
        if (c < 0 || c >= n) throw ConfigError("ciphertext must lie in [0, n)");
        m = decrypt_conventional(key, slot, c);
      }
      if (auto r = cycle_attack(c, e, n, budget, &trace)) {
        if (const auto* pt = std::get_if<BigInt>(&*r)) {
          broken = *pt == m;
          detail = "plaintext=" + pt->get_str();
        } else {
          broken = true;
          detail = "factor=" + std::get<CycleFactor>(*r).factor.get_str();
        }
      }
    } else {
      std::vector<Probe> probes;
      for (int i = 0; i < 2; ++i) {
        const BigInt m = rng.below(n - 2) + 2;
        probes.push_back({m, encrypt(key, slot, m)});
      }
      if (auto d = exhaustive_d_search(e, n, probes, budget, &trace)) {
        broken = true;
        detail = "d=" + d->get_str();
      }
    }
  } else {
    throw ConfigError("unknown attack '" + a.attack + "' (fermat|pminus1|wiener|cycle|exhaustive)");
  }

  out << a.attack << ": " << (broken ? "BROKEN" : "RESISTED") << " steps=" << trace.steps
      << (trace.budget_exhausted ? " (budget exhausted)" : "");
  if (!detail.empty()) out << ' ' << detail;
  out << '\n';
  if (!a.expect.empty()) return (a.expect == "broken") == broken ? kExitOk : kExitFailure;
  return broken ? kExitOk : kExitFailure;
}

// ---- table1 ---------------------------------------------------------------

struct Table1Args {
  std::size_t bits = 500;
  std::string profile = "standard";
  bool all = false;
  std::string csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_table1(const Table1Args& a, std::ostream& out) {
  if (a.profile != "standard" && a.profile != "table1")
    throw ConfigError("--profile must be standard or table1");
  const bool with_e = a.profile == "table1";
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, out);
  std::vector<Table1Row> rows;
  for (const auto& r : table1_reference()) {
    if (a.all || r.n_bits == a.bits) rows.push_back(r);
  }
  if (rows.empty()) throw ConfigError("no reference row for " + std::to_string(a.bits) + " bits");

  auto within = [](std::size_t got, std::size_t want) { return (got > want ? got - want : want - got) <= 1; };
  bool ok = true;
  std::ostringstream csv;
  csv << "bits,p,q,n,e,d,c,verdict\n";
  out << "bits      p     q     n     e     d     c\n";
  for (const auto& ref : rows) {
    const KeyPair key = with_e ? generate_profile_keypair(ref.n_bits, seed)
                               : generate_keypair(ref.n_bits, std::vector<BigInt>{65537}, seed);
    const DigitProfile got = measure_digit_profile(key, seed + 1);
    const bool pass = within(got.p, ref.p) && within(got.q, ref.q) && within(got.n, ref.n) &&
                      within(got.d, ref.d) && within(got.c, ref.c) && (!with_e || within(got.e, ref.e));
    ok = ok && pass;
    auto row = [&](const char* label, std::size_t p, std::size_t q, std::size_t n, std::size_t e, std::size_t d,
                   std::size_t c) {
      out << std::left << std::setw(8) << label << std::right << std::setw(5) << p << ' ' << std::setw(5) << q << ' '
          << std::setw(5) << n << ' ' << std::setw(5) << e << ' ' << std::setw(5) << d << ' ' << std::setw(5) << c
          << '\n';
    };
    const std::string label = std::to_string(ref.n_bits);
    row((label + " ref").c_str(), ref.p, ref.q, ref.n, ref.e, ref.d, ref.c);
    row((label + " got").c_str(), got.p, got.q, got.n, got.e, got.d, got.c);
    out << (pass ? "PASS" : "FAIL") << " (within 1 digit" << (with_e ? ", e included" : ", e not checked") << ")\n";
    csv << ref.n_bits << ',' << got.p << ',' << got.q << ',' << got.n << ',' << got.e << ',' << got.d << ','
        << got.c << ',' << (pass ? "PASS" : "FAIL") << '\n';
  }
  if (!a.csv.empty()) emit_csv(a.csv, out, [&](std::ostream& o) { o << csv.str(); });
  return ok ? kExitOk : kExitFailure;
}

// ---- serve / load ---------------------------------------------------------

struct ServeArgs {
  std::string listen = "127.0.0.1:7443";
  std::string key;
  SchedFlags sched;
  std::size_t workers = 0;
  double run_seconds = 0;
};

int run_serve(const ServeArgs& a, std::ostream& out) {
  KeyPair key = load_key_file(a.key);
  ServerOptions opts;
  opts.listen = proto::parse_endpoint(a.listen);
  opts.workers = a.workers;

  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);

  BatchServer server(std::move(key), a.sched.resolve(), opts);
  server.start();
  out << "listening on " << proto::to_string({opts.listen.host, server.port()}) << " b=" << server.batch_size()
      << '\n'
      << std::flush;

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(a.run_seconds);
  for (;;) {
    timespec ts{0, 200'000'000};
    if (sigtimedwait(&stop_signals, nullptr, &ts) > 0) break;
    if (a.run_seconds > 0 && std::chrono::steady_clock::now() >= deadline) break;
  }
  server.stop();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);

  const ServerStats s = server.stats();
  out << "connections=" << s.connections << " requests=" << s.requests << " ok=" << s.ok
      << " overloaded=" << s.overloaded << " malformed=" << s.malformed << " full=" << s.full_batches
      << " mini=" << s.mini_batches << " conventional=" << s.conventional << '\n';
  return kExitOk;
}

struct LoadArgs {
  std::string connect = "127.0.0.1:7443";
  std::size_t connections = 10;
  std::size_t requests = 100;
  double lambda = 50.0;
  double t_i = 0.0;
  double timeout = 30.0;
  std::string csv;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_load_cmd(const LoadArgs& a, std::ostream& out) {
  LoadOptions opts;
  opts.server = proto::parse_endpoint(a.connect);
  opts.connections = a.connections;
  opts.requests_per_connection = a.requests;
  opts.lambda = a.lambda;
  opts.t_i = a.t_i;
  opts.timeout = a.timeout;
  opts.seed = resolve_seed(a.seed_opt, a.seed, out);
  const LoadResult r = run_load(opts);
  out << std::fixed << std::setprecision(3) << "sent=" << r.sent << " ok=" << r.ok << " overloaded=" << r.overloaded
      << " malformed=" << r.malformed << " mismatches=" << r.mismatches
      << " transport_errors=" << r.transport_errors << " mean=" << r.metrics.mean_response * 1000
      << "ms p95=" << r.metrics.p95_response * 1000 << "ms\n"
      << std::defaultfloat;
  if (!a.csv.empty()) emit_csv(a.csv, out, [&](std::ostream& o) { write_load_csv(o, r); });
  return r.correct() ? kExitOk : kExitFailure;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Batch RSA decryption toolkit: keys, batching, scheduling, attacks and a batch server", "brsa"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  int result = kExitOk;
  std::function<int()> action;

  KeygenArgs kg;
  auto* keygen = app.add_subcommand("keygen", "Generate a multi-exponent key (optionally sieved or deliberately weak)");
  keygen->add_option("--bits", kg.bits, "Modulus bits");
  keygen->add_option("--exponents", kg.exponents, "Comma-separated pairwise coprime public exponents");
  keygen->add_flag("--sieve", kg.sieve, "Strong primes and the full security sieve");
  keygen->add_option("--weak", kg.weak, "Weak key: close-primes|smooth|small-d|shared-factor|short-cycle");
  keygen->add_option("--bound", kg.bound, "Smoothness bound for --weak smooth");
  keygen->add_option("--d-bits", kg.d_bits, "d length for --weak small-d (0: bits/5)");
  keygen->add_option("--shared-bits", kg.shared_bits, "Shared factor size for --weak shared-factor");
  keygen->add_option("--max-attempts", kg.max_attempts, "Sieve attempts before giving up");
  keygen->add_option("--out", kg.out_path, "Key file to write (stdout when empty)");
  keygen->add_option("--csv", kg.csv, "Sieve report CSV");
  kg.seed_opt = keygen->add_option("--seed", kg.seed, "Random seed (drawn and printed when absent)");
  keygen->callback([&] { action = [&] { return run_keygen(kg, out); }; });

  SieveArgs sv;
  auto* sieve = app.add_subcommand("sieve", "Run the security sieve over a key file");
  sieve->add_option("--key", sv.key, "Key file")->required();
  sieve->add_option("--slot", sv.slot, "Exponent slot (-1: all)");
  sieve->add_option("--strong-bits", sv.strong_bits, "Required largest-factor bits of p+-1, q+-1 (0: policy)");
  sieve->add_option("--gap-bits", sv.gap_bits, "Required bit length of |p-q| (0: policy)");
  sieve->add_option("--max-gcd", sv.max_gcd, "Largest allowed gcd(p-1, q-1) (empty: policy)");
  sieve->add_option("--csv", sv.csv, "Report CSV");
  sieve->callback([&] { action = [&] { return run_sieve(sv, out); }; });

  CryptArgs enc;
  auto* encrypt_cmd = app.add_subcommand("encrypt", "Encrypt an integer message under one exponent slot");
  encrypt_cmd->add_option("--key", enc.key, "Key file")->required();
  encrypt_cmd->add_option("--slot", enc.slot, "Exponent slot");
  encrypt_cmd->add_option("--message", enc.value, "Message, decimal or 0x hex")->required();
  encrypt_cmd->callback([&] { action = [&] { return run_encrypt(enc, out); }; });

  CryptArgs dec;
  auto* decrypt_cmd = app.add_subcommand("decrypt", "Decrypt conventionally, or a whole batch with --batch");
  decrypt_cmd->add_option("--key", dec.key, "Key file")->required();
  decrypt_cmd->add_option("--slot", dec.slot, "Exponent slot");
  auto* ct_opt = decrypt_cmd->add_option("--ciphertext", dec.value, "Ciphertext, decimal or 0x hex");
  auto* batch_opt =
      decrypt_cmd->add_option("--batch", dec.batch, "Comma-separated ciphertexts, the i-th under slot i");
  ct_opt->excludes(batch_opt);
  decrypt_cmd->callback([&] {
    if (ct_opt->count() + batch_opt->count() == 0) throw CLI::RequiredError("--ciphertext or --batch");
    action = [&] { return run_decrypt(dec, out); };
  });

  BenchArgs bb;
  auto* bench = app.add_subcommand("batch-bench", "Time batch decryption against conventional decryption");
  bench->add_option("--bits", bb.bits, "Modulus bits");
  bench->add_option("--b", bb.sizes, "Comma-separated batch sizes");
  bench->add_option("--trials", bb.trials, "Timed repetitions per size (median reported)");
  bench->add_option("--csv", bb.csv, "Output CSV (stdout when empty)");
  bb.seed_opt = bench->add_option("--seed", bb.seed, "Random seed (drawn and printed when absent)");
  bench->callback([&] { action = [&] { return run_batch_bench(bb, out); }; });

  auto add_sim_flags = [](CLI::App* cmd, SimArgs& s) {
    s.sched.add(cmd);
    cmd->add_option("--duration", s.duration, "Simulated horizon, s");
    cmd->add_option("--burst-factor", s.burst_factor, "Rate multiplier inside burst windows");
    cmd->add_option("--burst-fraction", s.burst_fraction, "Share of each cycle spent in a burst");
    cmd->add_option("--key", s.key, "Key file: time real decryptions instead of the cost model");
    cmd->add_option("--csv", s.csv, "Output CSV");
    s.seed_opt = cmd->add_option("--seed", s.seed, "Trace seed (drawn and printed when absent)");
  };

  SimArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate one scheduling policy, or a sweep file");
  add_sim_flags(simulate, sim);
  simulate->add_option("--mode", sim.mode, "nonbatching|batch|minibatch");
  simulate->add_option("--sweep", sim.sweep, "Sweep file, one key=value config per line");
  simulate->add_flag("--serial", sim.serial, "Run the sweep without OpenMP");
  simulate->callback([&] { action = [&] { return run_simulate(sim, out); }; });

  SimArgs cmp;
  auto* compare = app.add_subcommand("compare", "Run all three policies on one trace");
  add_sim_flags(compare, cmp);
  compare->callback([&] { action = [&] { return run_compare(cmp, out); }; });

  AttackArgs at;
  auto* attack = app.add_subcommand("attack", "Run an attack oracle against a key (exit 0 broken, 1 resisted)");
  attack->add_option("--attack", at.attack, "fermat|pminus1|wiener|cycle|exhaustive")->required();
  attack->add_option("--key", at.key, "Key file")->required();
  attack->add_option("--slot", at.slot, "Exponent slot");
  attack->add_option("--budget-steps", at.steps, "Step budget");
  attack->add_option("--budget-seconds", at.seconds, "Wall-clock budget, s");
  attack->add_option("--bound", at.bound, "Smoothness bound for pminus1");
  attack->add_option("--ciphertext", at.ciphertext, "Target for cycle (random message when empty)");
  attack->add_option("--expect", at.expect, "broken|resisted: exit 0 when the outcome matches");
  at.seed_opt = attack->add_option("--seed", at.seed, "Seed for cycle/exhaustive messages");
  attack->callback([&] {
    action = [&] {
      try {
        return run_attack(at, out);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    };
  });

  Table1Args t1;
  auto* table1 = app.add_subcommand("table1", "Decimal digit profile of generated keys against the reference table");
  table1->add_option("--bits", t1.bits, "Modulus bits (a reference row)");
  table1->add_option("--profile", t1.profile, "standard (e=65537, e unchecked) | table1 (66-bit e, e checked)");
  table1->add_flag("--all", t1.all, "Every reference row");
  table1->add_option("--csv", t1.csv, "Output CSV");
  t1.seed_opt = table1->add_option("--seed", t1.seed, "Random seed (drawn and printed when absent)");
  table1->callback([&] { action = [&] { return run_table1(t1, out); }; });

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Run the batch decryption server until SIGINT/SIGTERM");
  serve->add_option("--listen", sa.listen, "host:port (port 0: ephemeral)");
  serve->add_option("--key", sa.key, "Key file")->required();
  sa.sched.add(serve);
  serve->add_option("--workers", sa.workers, "Decryption threads (0: hardware concurrency)");
  serve->add_option("--run-seconds", sa.run_seconds, "Stop after this long (0: until signalled)");
  serve->callback([&] { action = [&] { return run_serve(sa, out); }; });

  LoadArgs la;
  auto* load = app.add_subcommand("load", "Drive a running server and verify every plaintext");
  load->add_option("--connect", la.connect, "host:port");
  load->add_option("--connections", la.connections, "Concurrent connections");
  load->add_option("--requests", la.requests, "Requests per connection");
  load->add_option("--lambda", la.lambda, "Aggregate request rate, requests/s");
  load->add_option("--t-i", la.t_i, "Deadline for the violations column (0: off)");
  load->add_option("--timeout", la.timeout, "Receive timeout, s");
  load->add_option("--csv", la.csv, "Output CSV");
  la.seed_opt = load->add_option("--seed", la.seed, "Random seed (drawn and printed when absent)");
  load->callback([&] { action = [&] { return run_load_cmd(la, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    result = action ? action() : kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return result;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace brsa::cli
