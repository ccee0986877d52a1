#include "brsa/cli.hpp"
#include "brsa/rsa.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace brsa;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int rc;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "brsa");
  std::ostringstream out, err;
  const int rc = cli::dispatch(args, out, err);
  return {rc, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("brsa_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).rc, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).rc, cli::kExitUsage);
  EXPECT_EQ(run({"keygen", "--bits", "many"}).rc, cli::kExitUsage);
  EXPECT_EQ(run({"attack", "--attack", "fermat"}).rc, cli::kExitUsage);  // --key is required
}

TEST_F(CliTest, HelpShowsDefaults) {
  const CliRun r = run({"simulate", "--help"});
  EXPECT_EQ(r.rc, 0);
  EXPECT_TRUE(contains(r.out, "--lambda FLOAT [100]"));
  EXPECT_TRUE(contains(r.out, "--t-i FLOAT [0.2]"));
  EXPECT_TRUE(contains(r.out, "--t-rsa-ms FLOAT [10]"));
  EXPECT_TRUE(contains(r.out, "--mode TEXT [minibatch]"));
  const CliRun top = run({"--help"});
  EXPECT_EQ(top.rc, 0);
  for (const char* sub : {"keygen", "sieve", "encrypt", "decrypt", "batch-bench", "simulate", "compare", "attack",
                          "table1", "serve", "load"})
    EXPECT_TRUE(contains(top.out, sub)) << sub;
}

TEST_F(CliTest, KeygenGoldenAndRoundTrip) {
  const std::string key = path("k.key");
  const CliRun g = run({"keygen", "--bits", "256", "--exponents", "3,5", "--seed", "7", "--out", key});
  ASSERT_EQ(g.rc, 0) << g.err;
  EXPECT_EQ(g.out, "modulus bits: 256, slots: 2\nkey written to " + key + "\n");
  const std::string text = slurp(key);
  EXPECT_TRUE(contains(text, "n=a78470017ef3b224dba4f88e68bcd6f3a31d77b58c7f463c464db40c56fbf5ff\n"));
  EXPECT_TRUE(contains(text, "e0=3\n"));
  EXPECT_TRUE(contains(text, "e1=5\n"));

  const CliRun e = run({"encrypt", "--key", key, "--slot", "1", "--message", "12345"});
  ASSERT_EQ(e.rc, 0);
  EXPECT_EQ(e.out, "286718338524635465625\n");  // 12345^5 < n
  const CliRun d = run({"decrypt", "--key", key, "--slot", "1", "--ciphertext", "286718338524635465625"});
  EXPECT_EQ(d.out, "12345\n");

  const CliRun c0 = run({"encrypt", "--key", key, "--slot", "0", "--message", "99"});
  const std::string batch = c0.out.substr(0, c0.out.size() - 1) + ",286718338524635465625";
  const CliRun b = run({"decrypt", "--key", key, "--batch", batch});
  ASSERT_EQ(b.rc, 0) << b.err;
  EXPECT_EQ(b.out, "99\n12345\n");
}

TEST_F(CliTest, KeygenRandomSeedIsPrinted) {
  const CliRun g = run({"keygen", "--bits", "128", "--out", path("r.key")});
  ASSERT_EQ(g.rc, 0);
  EXPECT_EQ(g.out.rfind("seed: ", 0), 0u);
}

TEST_F(CliTest, EncryptAndDecryptErrors) {
  const std::string key = path("k.key");
  ASSERT_EQ(run({"keygen", "--bits", "128", "--exponents", "3", "--seed", "1", "--out", key}).rc, 0);
  EXPECT_EQ(run({"encrypt", "--key", key, "--slot", "0", "--message", "-1"}).rc, cli::kExitConfig);
  EXPECT_EQ(run({"encrypt", "--key", key, "--slot", "4", "--message", "1"}).rc, cli::kExitConfig);
  EXPECT_EQ(run({"encrypt", "--key", path("missing.key"), "--message", "1"}).rc, cli::kExitConfig);
  EXPECT_EQ(run({"decrypt", "--key", key, "--ciphertext", "zz"}).rc, cli::kExitConfig);
}

TEST_F(CliTest, SieveVerdictDrivesExitCode) {
  const std::string sieved = path("s.key");
  const CliRun g = run({"keygen", "--bits", "256", "--exponents", "3,5", "--sieve", "--seed", "1", "--out", sieved});
  ASSERT_EQ(g.rc, 0) << g.err;
  const CliRun ok = run({"sieve", "--key", sieved});
  EXPECT_EQ(ok.rc, 0);
  EXPECT_TRUE(contains(ok.out, "slot 0 (e=3): PASS\n"));
  EXPECT_TRUE(contains(ok.out, "CHECK strong_p: PASS"));

  const std::string plain = path("p.key");
  ASSERT_EQ(run({"keygen", "--bits", "256", "--exponents", "3,5", "--seed", "7", "--out", plain}).rc, 0);
  const CliRun bad = run({"sieve", "--key", plain, "--slot", "0"});
  EXPECT_EQ(bad.rc, 1);
  EXPECT_TRUE(contains(bad.out, "CHECK strong_p: FAIL measured=33 threshold=48\n"));

  const std::string csv = path("s.csv");
  EXPECT_EQ(run({"sieve", "--key", plain, "--slot", "0", "--csv", csv}).rc, 1);
  EXPECT_EQ(slurp(csv).substr(0, 32), "name,verdict,measured,threshold\n");
}

TEST_F(CliTest, WeakKeysAndAttacks) {
  struct Case {
    const char* weak;
    const char* attack;
    std::vector<std::string> extra;
  };
  const Case cases[] = {
      {"close-primes", "fermat", {"--bits", "128"}},
      {"smooth", "pminus1", {"--bits", "256"}},
      {"small-d", "wiener", {"--bits", "400", "--d-bits", "90"}},
      {"short-cycle", "cycle", {}},
  };
  for (const auto& c : cases) {
    const std::string key = path(std::string(c.weak) + ".key");
    std::vector<std::string> args = {"keygen", "--weak", c.weak, "--seed", "3", "--out", key};
    args.insert(args.end(), c.extra.begin(), c.extra.end());
    ASSERT_EQ(run(args).rc, 0) << c.weak;
    const CliRun a = run({"attack", "--attack", c.attack, "--key", key, "--seed", "1"});
    EXPECT_EQ(a.rc, 0) << c.weak << a.out << a.err;
    EXPECT_TRUE(contains(a.out, std::string(c.attack) + ": BROKEN")) << a.out;
    EXPECT_EQ(run({"attack", "--attack", c.attack, "--key", key, "--seed", "1", "--expect", "broken"}).rc, 0);
    EXPECT_EQ(run({"attack", "--attack", c.attack, "--key", key, "--seed", "1", "--expect", "resisted"}).rc, 1);
  }
  const std::string sieved = path("s.key");
  ASSERT_EQ(run({"keygen", "--bits", "128", "--exponents", "3", "--sieve", "--seed", "2", "--out", sieved}).rc, 0);
  const CliRun r = run({"attack", "--attack", "fermat", "--key", sieved, "--budget-steps", "10000"});
  EXPECT_EQ(r.rc, 1);
  EXPECT_TRUE(contains(r.out, "fermat: RESISTED"));
  EXPECT_EQ(run({"attack", "--attack", "rot13", "--key", sieved}).rc, 2);
}

TEST_F(CliTest, SimulateIsDeterministicGolden) {
  const CliRun a = run({"simulate", "--lambda", "100", "--t-i", "0.2", "--duration", "5", "--seed", "3"});
  ASSERT_EQ(a.rc, 0);
  EXPECT_EQ(a.out,
            "minibatch: b=9 arrivals=483 served=480 queued=3 rejected=0 mean=55.852ms p95=108.070ms "
            "max_wait=99.892ms violations=0.000 ratio=1.000\n");
  EXPECT_EQ(run({"simulate", "--lambda", "100", "--t-i", "0.2", "--duration", "5", "--seed", "3"}).out, a.out);
}

TEST_F(CliTest, CompareCsvGolden) {
  const std::string csv = path("c.csv");
  const CliRun r = run({"compare", "--lambda", "100", "--duration", "5", "--seed", "3", "--csv", csv});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_EQ(slurp(csv),
            "mode,lambda,t_i,b,mean_ms,p95_ms,violations,throughput,ratio\n"
            "nonbatching,100,0.2,1,68.04438932,148.6717914,0.002070393375,92.6,1\n"
            "batch,100,0.2,9,56.95408132,125.9260318,0,95.4,0.8370136301\n"
            "minibatch,100,0.2,9,55.85214308,108.0697105,0,96,0.8208192275\n");
}

TEST_F(CliTest, SimulateSweepSerialMatchesParallel) {
  const std::string sweep = path("sweep.txt");
  std::ofstream(sweep) << "# sweep\nmode=batch lambda=50 duration=3 seed=1\nmode=minibatch lambda=150 t_i=0.1 "
                          "duration=3 seed=2\nmode=nonbatching lambda=30 duration=3 seed=3\n";
  const std::string a = path("a.csv"), b = path("b.csv");
  ASSERT_EQ(run({"simulate", "--sweep", sweep, "--csv", a}).rc, 0);
  ASSERT_EQ(run({"simulate", "--sweep", sweep, "--serial", "--csv", b}).rc, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  std::ofstream(path("bad.txt")) << "lambda=x\n";
  EXPECT_EQ(run({"simulate", "--sweep", path("bad.txt")}).rc, cli::kExitConfig);
}

TEST_F(CliTest, SchedulerConfigFileAndValidation) {
  const std::string conf = path("s.conf");
  std::ofstream(conf) << "lambda = 100\nt_i = 0.2\n";
  EXPECT_EQ(run({"simulate", "--config", conf, "--duration", "2", "--seed", "1"}).rc, 0);
  EXPECT_EQ(run({"simulate", "--t-i", "-1", "--seed", "1"}).rc, cli::kExitConfig);
  EXPECT_EQ(run({"simulate", "--mode", "warp", "--seed", "1"}).rc, cli::kExitConfig);
}

TEST_F(CliTest, BatchBenchCsv) {
  const std::string csv = path("bb.csv");
  const CliRun r = run({"batch-bench", "--bits", "256", "--b", "2,4", "--trials", "2", "--seed", "1", "--csv", csv});
  ASSERT_EQ(r.rc, 0) << r.err;
  const std::string text = slurp(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "bits,b,batch_ms,conventional_ms,speedup");
  EXPECT_TRUE(contains(text, "\n256,2,"));
  EXPECT_TRUE(contains(text, "\n256,4,"));
}

TEST_F(CliTest, Table1Golden) {
  const CliRun r = run({"table1", "--bits", "500", "--seed", "1"});
  ASSERT_EQ(r.rc, 0);
  EXPECT_EQ(r.out,
            "bits      p     q     n     e     d     c\n"
            "500 ref    76    76   151    21   151   151\n"
            "500 got    76    76   151     5   151   151\n"
            "PASS (within 1 digit, e not checked)\n");
}

TEST_F(CliTest, ServeRequiresEnoughSlots) {
  const std::string key = path("k.key");
  ASSERT_EQ(run({"keygen", "--bits", "256", "--exponents", "3", "--seed", "1", "--out", key}).rc, 0);
  EXPECT_EQ(run({"serve", "--key", key, "--lambda", "100", "--t-i", "0.2", "--run-seconds", "1"}).rc,
            cli::kExitConfig);
  EXPECT_EQ(run({"load", "--connect", "nohost"}).rc, cli::kExitConfig);
}
