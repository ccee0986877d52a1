#include "brsa/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace brsa;

namespace {

SimConfig analytic(double lambda, double t_i, double t_rsa, SimMode mode, double duration) {
  SimConfig c;
  c.sched.lambda = lambda;
  c.sched.t_i = t_i;
  c.sched.t_rsa = t_rsa;
  c.mode = mode;
  c.duration = duration;
  return c;
}

void expect_conserved(const Metrics& m) {
  EXPECT_EQ(m.arrivals, m.served + m.queued_at_horizon + m.rejected);
  std::size_t in_actions = 0;
  for (const auto& [size, count] : m.batch_histogram) in_actions += size * count;
  EXPECT_EQ(in_actions, m.served);
}

}  // namespace

TEST(Trace, DeterministicSortedAndBounded) {
  const ArrivalTrace a = generate_trace(50, 20, 1, 0, 3);
  const ArrivalTrace b = generate_trace(50, 20, 1, 0, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.arrivals[i].time, b.arrivals[i].time);
    EXPECT_EQ(a.arrivals[i].id, i);
    if (i) {
      EXPECT_GE(a.arrivals[i].time, a.arrivals[i - 1].time);
    }
    EXPECT_LT(a.arrivals[i].time, 20.0);
  }
  EXPECT_NE(generate_trace(50, 20, 1, 0, 4).arrivals.front().time, a.arrivals.front().time);
}

TEST(Trace, RateMatchesLambda) {
  const ArrivalTrace t = generate_trace(200, 100, 1, 0, 11);
  // Poisson count: mean 20000, sd ~141
  EXPECT_NEAR(static_cast<double>(t.size()), 20000.0, 5 * std::sqrt(20000.0));
  double sum = 0;
  for (std::size_t i = 1; i < t.size(); ++i) sum += t.arrivals[i].time - t.arrivals[i - 1].time;
  EXPECT_NEAR(sum / static_cast<double>(t.size() - 1), 1.0 / 200, 0.0002);
}

TEST(Trace, BurstsConcentrateArrivals) {
  const ArrivalTrace t = generate_trace(100, 100, 5, 0.2, 2);
  // bursts cover 20% of time at 5x rate: expected 100*(20*5 + 80) = 18000
  EXPECT_NEAR(static_cast<double>(t.size()), 18000.0, 5 * std::sqrt(18000.0));
  std::size_t in_burst = 0;
  for (const auto& a : t.arrivals) {
    if (std::fmod(a.time, 10.0) < 2.0) ++in_burst;
  }
  EXPECT_NEAR(static_cast<double>(in_burst) / static_cast<double>(t.size()), 100.0 / 180.0, 0.02);
}

TEST(Trace, RejectsBadParameters) {
  EXPECT_THROW(generate_trace(0, 10, 1, 0, 1), InvalidArgument);
  EXPECT_THROW(generate_trace(10, 10, 0.5, 0, 1), InvalidArgument);
  EXPECT_THROW(generate_trace(10, 10, 1, 1.5, 1), InvalidArgument);
  EXPECT_TRUE(generate_trace(10, 0, 1, 0, 1).arrivals.empty());
}

TEST(Modes, ParseAndNames) {
  EXPECT_EQ(parse_sim_mode("nonbatching"), SimMode::NonBatching);
  EXPECT_EQ(parse_sim_mode("batch"), SimMode::BatchNoMini);
  EXPECT_EQ(parse_sim_mode("batch-mini"), SimMode::BatchWithMini);
  EXPECT_STREQ(to_string(SimMode::BatchWithMini), "minibatch");
  EXPECT_THROW(parse_sim_mode("fast"), ConfigError);
}

TEST(Simulation, NonBatchingIsFifoQueue) {
  // hand-built trace: three arrivals at 0 with 10 ms service each
  ArrivalTrace t;
  t.arrivals = {{0.0, 0}, {0.0, 1}, {0.0, 2}};
  const Metrics m = run_simulation(t, analytic(100, 0.2, 0.01, SimMode::NonBatching, 1.0));
  EXPECT_EQ(m.served, 3u);
  EXPECT_NEAR(m.mean_response, (0.01 + 0.02 + 0.03) / 3, 1e-12);
  EXPECT_NEAR(m.p95_response, 0.03, 1e-12);
  EXPECT_NEAR(m.max_wait, 0.02, 1e-12);
  expect_conserved(m);
}

TEST(Simulation, FullBatchServesTogether) {
  // lambda 100, T_i 0.2: b = 9, nine simultaneous arrivals make one batch
  ArrivalTrace t;
  for (std::uint64_t i = 0; i < 9; ++i) t.arrivals.push_back({0.0, i});
  const SimConfig c = analytic(100, 0.2, 0.01, SimMode::BatchNoMini, 1.0);
  const Metrics m = run_simulation(t, c);
  EXPECT_EQ(m.b, 9u);
  EXPECT_EQ(m.actions, 1u);
  EXPECT_EQ(m.batch_histogram.at(9), 1u);
  EXPECT_NEAR(m.mean_response, compute_tb(9, c.sched), 1e-12);
}

TEST(Simulation, MinibatchFiresAtDeadline) {
  ArrivalTrace t;
  t.arrivals = {{0.0, 0}, {0.0, 1}};
  SimConfig c = analytic(100, 0.2, 0.01, SimMode::BatchWithMini, 2.0);
  const Metrics mini = run_simulation(t, c);
  EXPECT_EQ(mini.served, 2u);
  EXPECT_EQ(mini.batch_histogram.at(2), 1u);
  // idle since t = 0, so server wait plus head age reaches T_i at T_i / 2
  EXPECT_NEAR(mini.max_wait, 0.1, c.sched.poll_granularity + 1e-9);
  EXPECT_EQ(mini.late_beyond_grace, 0u);

  c.mode = SimMode::BatchNoMini;
  const Metrics full = run_simulation(t, c);
  EXPECT_EQ(full.served, 0u);
  EXPECT_EQ(full.queued_at_horizon, 2u);
  EXPECT_DOUBLE_EQ(full.violations, 1.0);
}

TEST(Simulation, ConservationAcrossModes) {
  const ArrivalTrace t = generate_trace(150, 30, 3, 0.3, 8);
  for (const SimMode mode : {SimMode::NonBatching, SimMode::BatchNoMini, SimMode::BatchWithMini}) {
    const Metrics m = run_simulation(t, analytic(150, 0.1, 0.004, mode, 30));
    expect_conserved(m);
    EXPECT_GT(m.served, 0u);
    EXPECT_LE(m.p95_response, m.max_wait + compute_tb(m.b, analytic(150, 0.1, 0.004, mode, 30).sched) + 1e-9);
  }
}

TEST(Simulation, OverloadRejectsBeyondCapacity) {
  // 10 ms service at lambda 500: b = 1 and the conventional server falls behind
  SimConfig c = analytic(500, 0.05, 0.01, SimMode::BatchWithMini, 5);
  c.sched.queue_capacity_factor = 4;
  const Metrics m = run_simulation(generate_trace(500, 5, 1, 0, 1), c);
  EXPECT_GT(m.rejected, 0u);
  expect_conserved(m);
}

TEST(Simulation, InputValidation) {
  ArrivalTrace unsorted;
  unsorted.arrivals = {{1.0, 0}, {0.5, 1}};
  EXPECT_THROW(run_simulation(unsorted, analytic(10, 0.2, 0.01, SimMode::BatchWithMini, 2)), InvalidArgument);
  SimConfig bad = analytic(10, 0.2, 0.01, SimMode::BatchWithMini, 0);
  EXPECT_THROW(run_simulation({}, bad), ConfigError);
  SimConfig measured = analytic(10, 0.2, 0.01, SimMode::BatchWithMini, 1);
  measured.service = ServiceModel::Measured;
  EXPECT_THROW(run_simulation({}, measured), ConfigError);
}

TEST(Simulation, MeasuredModeRunsRealDecryptions) {
  const KeyPair key = generate_keypair(512, default_batch_exponents(4), 3);
  SimConfig c = analytic(100, 0.075, 0.001, SimMode::BatchWithMini, 2);
  c.service = ServiceModel::Measured;
  c.key = &key;
  const Metrics m = run_simulation(generate_trace(100, 2, 1, 0, 5), c);
  expect_conserved(m);
  EXPECT_GT(m.model_vs_measured, 0);
}

TEST(Compare, RatiosAgainstNonBatching) {
  const ArrivalTrace t = generate_trace(120, 20, 1, 0, 9);
  const auto ms = compare_modes(t, analytic(120, 0.2, 0.01, SimMode::BatchWithMini, 20));
  ASSERT_EQ(ms.size(), 3u);
  EXPECT_EQ(ms[0].mode, SimMode::NonBatching);
  EXPECT_DOUBLE_EQ(ms[0].ratio, 1.0);
  for (const auto& m : ms) EXPECT_NEAR(m.ratio, m.mean_response / ms[0].mean_response, 1e-12);
  EXPECT_LT(ms[1].ratio, 1.0);
}

TEST(Sweep, ParseFile) {
  std::istringstream in("# sweep\nmode=batch lambda=50 t_i=0.1 t_rsa_ms=2 seed=4\n\nlambda=80 duration=3 # tail\n");
  const auto entries = parse_sweep(in);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].config.mode, SimMode::BatchNoMini);
  EXPECT_DOUBLE_EQ(entries[0].config.sched.t_rsa, 0.002);
  EXPECT_EQ(entries[0].seed, 4u);
  EXPECT_EQ(entries[1].config.duration, 3);
  std::istringstream bad("lambda=fast\n");
  EXPECT_THROW(parse_sweep(bad), ConfigError);
  std::istringstream unknown("speed=1\n");
  EXPECT_THROW(parse_sweep(unknown), ConfigError);
  std::istringstream bare("lambda\n");
  EXPECT_THROW(parse_sweep(bare), ConfigError);
}

TEST(Sweep, ParallelMatchesSerialExactly) {
  std::vector<SweepEntry> entries;
  for (int i = 0; i < 24; ++i) {
    SweepEntry e;
    e.config = analytic(20.0 + 15.0 * i, 0.05 + 0.01 * (i % 7), 0.002, static_cast<SimMode>(i % 3), 5);
    e.burst_factor = 1 + i % 4;
    e.burst_fraction = 0.1 * (i % 5);
    e.seed = 100 + i;
    entries.push_back(e);
  }
  const auto serial = run_sweep_serial(entries);
  const auto parallel = run_sweep_parallel(entries);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].served, parallel[i].served);
    EXPECT_EQ(serial[i].mean_response, parallel[i].mean_response);
    EXPECT_EQ(serial[i].p95_response, parallel[i].p95_response);
    EXPECT_EQ(serial[i].batch_histogram, parallel[i].batch_histogram);
  }
  entries[3].config.service = ServiceModel::Measured;
  EXPECT_THROW(run_sweep_parallel(entries), ConfigError);
}

TEST(Csv, HeaderAndRow) {
  std::ostringstream out;
  write_metrics_csv_header(out);
  Metrics m;
  m.mode = SimMode::BatchNoMini;
  m.lambda = 100;
  m.t_i = 0.2;
  m.b = 9;
  m.mean_response = 0.0125;
  m.p95_response = 0.02;
  m.violations = 0;
  m.throughput = 99.5;
  m.ratio = 0.5;
  write_metrics_csv_row(out, m);
  EXPECT_EQ(out.str(), "mode,lambda,t_i,b,mean_ms,p95_ms,violations,throughput,ratio\n"
                       "batch,100,0.2,9,12.5,20,0,99.5,0.5\n");
}
