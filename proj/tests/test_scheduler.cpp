#include "brsa/scheduler.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace brsa;

namespace {

SchedulerConfig config(double lambda, double t_i, double t_rsa = 0.01) {
  SchedulerConfig c;
  c.lambda = lambda;
  c.t_i = t_i;
  c.t_rsa = t_rsa;
  return c;
}

PendingRequest req(std::uint64_t id, std::size_t exponent) {
  PendingRequest r;
  r.id = id;
  r.exponent = exponent;
  return r;
}

}  // namespace

TEST(CostModel, MatchesExactFraction) {
  SchedulerConfig c;
  c.t_rsa = 1.0;
  for (std::size_t b = 1; b <= 16; ++b) {
    const auto [num, den] = oracle::tb_fraction(b, 1024, 1);
    EXPECT_NEAR(compute_tb(b, c), static_cast<double>(num) / static_cast<double>(den), 1e-12) << b;
  }
  EXPECT_NEAR(compute_tb(1, c), 1.0150, 5e-5);
  EXPECT_NEAR(compute_tb(4, c), 1.1204, 5e-5);
  c.t_rsa = 0.01;
  EXPECT_NEAR(compute_tb(4, c), 0.011204, 5e-7);
}

TEST(Optimizer, MaxBatchSize) {
  EXPECT_EQ(max_batch_size(100, 0.2), 9u);
  EXPECT_EQ(max_batch_size(2, 1), 1u);
  EXPECT_EQ(max_batch_size(10, 1), 5u);
  EXPECT_EQ(max_batch_size(1000, 0.2), 81u);
}

TEST(Optimizer, ReferenceCases) {
  EXPECT_EQ(find_optimal_batch_size(config(100, 0.2)), 9u);
  EXPECT_FALSE(find_optimal_batch_size(config(2, 1)).has_value());
  EXPECT_FALSE(find_optimal_batch_size(config(1000, 0.2)).has_value());
  EXPECT_EQ(effective_batch_size(config(1000, 0.2)), 1u);
}

TEST(Optimizer, LastFeasibleSizeWins) {
  // brute-force oracle over the same feasibility rule
  for (double lambda : {5.0, 20.0, 60.0, 100.0, 150.0, 300.0}) {
    for (double t_i : {0.05, 0.1, 0.2, 0.5}) {
      const SchedulerConfig c = config(lambda, t_i);
      std::optional<std::size_t> expect;
      for (std::size_t b = 2; b <= max_batch_size(lambda, t_i); ++b) {
        const auto [num, den] = oracle::tb_fraction(b, 1024, 1);
        if (static_cast<double>(num) / static_cast<double>(den) * c.t_rsa < static_cast<double>(b) / lambda) expect = b;
      }
      EXPECT_EQ(find_optimal_batch_size(c), expect) << lambda << " " << t_i;
    }
  }
}

TEST(Config, ParseWriteRoundTrip) {
  std::istringstream in("# scheduler\nlambda = 120\nt_i=0.3\nt_rsa = 0.002\nk = 2\nn_scale = 2048\n"
                        "poll_granularity_ms = 5\nqueue_capacity_factor = 4\nminibatch = false\n");
  const SchedulerConfig c = parse_scheduler_config(in);
  EXPECT_EQ(c.lambda, 120);
  EXPECT_EQ(c.t_i, 0.3);
  EXPECT_EQ(c.k, 2);
  EXPECT_DOUBLE_EQ(c.poll_granularity, 0.005);
  EXPECT_FALSE(c.minibatch);
  std::stringstream out;
  write_scheduler_config(out, c);
  const SchedulerConfig back = parse_scheduler_config(out);
  EXPECT_EQ(back.lambda, c.lambda);
  EXPECT_DOUBLE_EQ(back.poll_granularity, c.poll_granularity);
  EXPECT_EQ(back.minibatch, c.minibatch);
}

TEST(Config, RejectsBadInput) {
  std::istringstream unknown("lambda = 1\nfoo = 2\n");
  EXPECT_THROW(parse_scheduler_config(unknown), ConfigError);
  std::istringstream nonnum("lambda = fast\n");
  EXPECT_THROW(parse_scheduler_config(nonnum), ConfigError);
  std::istringstream negative("t_i = -1\n");
  EXPECT_THROW(parse_scheduler_config(negative), ConfigError);
  EXPECT_THROW(load_scheduler_config("/nonexistent.conf"), ConfigError);
}

TEST(QueueState, RoundRobinAssignment) {
  QueueState s(3, 10);
  EXPECT_EQ(s.assign_exponent(), 0u);
  EXPECT_EQ(s.assign_exponent(), 1u);
  EXPECT_EQ(s.assign_exponent(), 2u);
  EXPECT_EQ(s.assign_exponent(), 0u);
}

TEST(QueueState, FullBatchWhenEveryQueueHasWork) {
  const SchedulerConfig c = config(100, 0.2);
  QueueState s(3, 10);
  s.enqueue(req(1, 0), 0.0);
  s.enqueue(req(2, 1), 0.0);
  s.enqueue(req(3, 2), 0.01);
  s.enqueue(req(4, 0), 0.01);
  const Action a = s.poll(c, 0.01);
  EXPECT_EQ(a.kind, ActionKind::FullBatch);
  EXPECT_EQ(a.queues, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(a.request_ids, (std::vector<std::uint64_t>{1, 2, 3}));
  const auto done = s.complete_action(a, 0.01);
  EXPECT_EQ(done.size(), 3u);
  EXPECT_EQ(s.pending(), 1u);
  EXPECT_EQ(s.queue(0).front().id, 4u);
}

TEST(QueueState, WaitsWhileDeadlineFar) {
  const SchedulerConfig c = config(100, 0.2);
  QueueState s(3, 10, 0.0);
  s.enqueue(req(1, 0), 0.0);
  s.enqueue(req(2, 1), 0.0);
  const Action a = s.poll(c, 0.05);
  EXPECT_TRUE(a.is_wait());
  EXPECT_DOUBLE_EQ(a.wait, c.poll_granularity);
  EXPECT_TRUE(s.poll(c, 0.0).is_wait());
}

TEST(QueueState, MinibatchWhenHeadReachesDeadline) {
  const SchedulerConfig c = config(100, 0.2);
  // recent server activity, so only the head timer can trigger
  QueueState fresh(3, 10, 0.19);
  fresh.enqueue(req(1, 0), 0.0);
  fresh.enqueue(req(2, 2), 0.01);
  const Action a = fresh.poll(c, 0.2);
  EXPECT_EQ(a.kind, ActionKind::MiniBatch);
  EXPECT_EQ(a.queues, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(a.request_ids, (std::vector<std::uint64_t>{1, 2}));
}

TEST(QueueState, MinibatchWhenServerIdleLongEnough) {
  const SchedulerConfig c = config(100, 0.2);
  QueueState s(3, 10, 0.0);
  s.enqueue(req(7, 1), 0.09);
  // maxtimer = 0.01, server waiting 0.1: 0.1 < 0.19 -> wait
  EXPECT_TRUE(s.poll(c, 0.1).is_wait());
  // maxtimer = 0.11, server waiting 0.2 >= 0.09 -> run what is there
  const Action a = s.poll(c, 0.2);
  EXPECT_EQ(a.kind, ActionKind::Conventional);
  EXPECT_EQ(a.queues, (std::vector<std::size_t>{1}));
}

TEST(QueueState, WaitShrinksToDeadline) {
  SchedulerConfig c = config(100, 0.2);
  c.poll_granularity = 0.05;
  QueueState s(2, 10, 10.16);
  s.enqueue(req(1, 0), 10.0);
  const Action a = s.poll(c, 10.17);
  ASSERT_TRUE(a.is_wait());
  EXPECT_NEAR(a.wait, 0.03, 1e-9);
}

TEST(QueueState, NoMinibatchWithoutFlag) {
  SchedulerConfig c = config(100, 0.2);
  c.minibatch = false;
  QueueState s(2, 10, 0.0);
  s.enqueue(req(1, 0), 0.0);
  EXPECT_TRUE(s.poll(c, 5.0).is_wait());
  s.enqueue(req(2, 1), 5.0);
  EXPECT_EQ(s.poll(c, 5.0).kind, ActionKind::FullBatch);
}

TEST(QueueState, SingleQueueIsConventional) {
  QueueState s(1, 10);
  s.enqueue(req(1, 0), 0.0);
  EXPECT_EQ(s.poll(config(100, 0.2), 0.0).kind, ActionKind::Conventional);
}

TEST(QueueState, OverloadAndIntegrity) {
  QueueState s(2, 2);
  EXPECT_EQ(s.enqueue(req(1, 0), 0), EnqueueResult::Accepted);
  EXPECT_EQ(s.enqueue(req(2, 0), 0), EnqueueResult::Accepted);
  EXPECT_EQ(s.enqueue(req(3, 1), 0), EnqueueResult::Overloaded);
  EXPECT_THROW(s.enqueue(req(4, 5), 0), InvalidArgument);
  Action stale;
  stale.kind = ActionKind::Conventional;
  stale.queues = {0};
  stale.request_ids = {2};
  EXPECT_THROW(s.complete_action(stale, 0), IntegrityError);
  stale.request_ids = {1};
  EXPECT_EQ(s.complete_action(stale, 0).front().id, 1u);
  EXPECT_THROW(QueueState(0, 1), InvalidArgument);
}

TEST(Clock, ManualAndSteady) {
  ManualClock m;
  m.set(2.0);
  m.advance(0.5);
  EXPECT_EQ(m.now(), 2.5);
  SteadyClock s;
  const double a = s.now();
  EXPECT_GE(s.now(), a);
}

TEST(SubsetCache, ReusesAndEvicts) {
  const auto exps = default_batch_exponents(4);
  const KeyPair key = generate_keypair(256, exps, 2);
  SubsetBatchCache cache(key, 2);
  const auto a = cache.get({0, 1});
  EXPECT_EQ(cache.get({0, 1}), a);
  EXPECT_EQ(cache.hits(), 1u);
  cache.get({1, 2});
  cache.get({2, 3});
  EXPECT_EQ(cache.size(), 2u);
  EXPECT_NE(cache.get({0, 1}), a);
  EXPECT_EQ(cache.misses(), 4u);
  EXPECT_EQ(a->context().exponents(), (std::vector<BigInt>{3, 5}));
}
