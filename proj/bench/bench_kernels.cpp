// Serial reference kernels against their OpenMP counterparts.

#include "brsa/batch.hpp"
#include "brsa/simulator.hpp"

#include <benchmark/benchmark.h>

using namespace brsa;

namespace {

struct Fixture {
  KeyPair key;
  std::shared_ptr<const BatchContext> ctx;
  std::vector<std::vector<BigInt>> jobs;
  std::vector<std::size_t> slots;
  std::vector<BigInt> flat;

  explicit Fixture(std::size_t bits) : key(generate_keypair(bits, default_batch_exponents(4), 5)) {
    ctx = std::make_shared<const BatchContext>(BatchContext::build(default_batch_exponents(4)));
    Rng rng(9);
    jobs.resize(64);
    for (auto& job : jobs) {
      for (std::size_t i = 0; i < 4; ++i) {
        job.push_back(encrypt(key, i, rng.below(key.n())));
        slots.push_back(i);
        flat.push_back(job.back());
      }
    }
  }
};

const Fixture& fixture() {
  static const Fixture f(1024);
  return f;
}

std::vector<SweepEntry> sweep() {
  std::vector<SweepEntry> out;
  for (int i = 0; i < 32; ++i) {
    SweepEntry e;
    e.config.sched.lambda = 20 + 10 * i;
    e.config.sched.t_i = 0.1;
    e.config.sched.t_rsa = 0.002;
    e.config.duration = 20;
    e.config.mode = static_cast<SimMode>(i % 3);
    e.seed = i;
    out.push_back(e);
  }
  return out;
}

void BM_BatchJobsSerial(benchmark::State& state) {
  const BoundBatch bound(fixture().ctx, fixture().key);
  for (auto _ : state) benchmark::DoNotOptimize(batch_decrypt_jobs_serial(bound, fixture().jobs));
}

void BM_BatchJobsParallel(benchmark::State& state) {
  const BoundBatch bound(fixture().ctx, fixture().key);
  for (auto _ : state) benchmark::DoNotOptimize(batch_decrypt_jobs_parallel(bound, fixture().jobs));
}

void BM_DecryptManySerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(decrypt_many_serial(f.key, f.slots, f.flat));
}

void BM_DecryptManyParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(decrypt_many_parallel(f.key, f.slots, f.flat));
}

void BM_SweepSerial(benchmark::State& state) {
  const auto entries = sweep();
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep_serial(entries));
}

void BM_SweepParallel(benchmark::State& state) {
  const auto entries = sweep();
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep_parallel(entries));
}

}  // namespace

BENCHMARK(BM_BatchJobsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchJobsParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DecryptManySerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DecryptManyParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
