#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("blowlab_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = {}) const {
    const std::string cmd =
        "cd '" + dir_.string() + "' && " + env + " '" BLOWLAB_CLI_PATH "' " + args + " > out.txt 2> err.txt";
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  }
  std::string read(const std::string& name) const {
    std::ifstream is(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }
  void write(const std::string& name, const std::string& content) const {
    std::ofstream os(dir_ / name, std::ios::binary);
    os << content;
  }
  bool exists(const std::string& name) const { return fs::exists(dir_ / name); }

  fs::path dir_;
};

const std::string kSmallPolar = " --n-R 24 --n-beta 16 --log2-R-min -20 --log2-R-max 10 --u-extent 20";

}  // namespace

TEST_F(Cli, Build3dWritesFieldAndProvenance) {
  ASSERT_EQ(run("build --mode 3d --alpha 0.1 --epsilon 0.05 --M 64" + kSmallPolar + " --out b3"), 0) << read("err.txt");
  EXPECT_TRUE(exists("b3/F_tilde0.field"));
  const auto prov = nlohmann::json::parse(read("b3/provenance.json"));
  EXPECT_EQ(prov["mode"], "3d");
  EXPECT_EQ(prov["params"]["M"].get<double>(), 64.0);
  EXPECT_NE(read("b3/config.ini").find("build.mode=\"3d\""), std::string::npos);
}

TEST_F(Cli, Build2dWritesFourFields) {
  ASSERT_EQ(run("build --mode 2d --alpha 0.2 --epsilon 0.1 --M 16 --delta 0.01" + kSmallPolar + " --out b2"), 0)
      << read("err.txt");
  for (const char* f : {"Omega0", "eta0", "xi0", "theta0"}) EXPECT_TRUE(exists(std::string("b2/") + f + ".field")) << f;
  const auto prov = nlohmann::json::parse(read("b2/provenance.json"));
  EXPECT_EQ(prov["files"].size(), 4u);
  EXPECT_TRUE(prov.contains("delta_check"));
}

TEST_F(Cli, Build2dWithoutDeltaIsUsageError) {
  EXPECT_EQ(run("build --mode 2d --alpha 0.1 --epsilon 0.05 --M 64 --out missing"), 2);
  EXPECT_NE(read("err.txt").find("--delta"), std::string::npos);
  EXPECT_FALSE(exists("missing"));
}

TEST_F(Cli, StrictDeltaRejectsAndRemovesOutputs) {
  EXPECT_EQ(run("build --mode 2d --alpha 0.1 --epsilon 0.05 --M 64 --delta 0.1 --strict-delta" + kSmallPolar +
                " --out strict"),
            2);
  EXPECT_NE(read("err.txt").find("C1"), std::string::npos);
  EXPECT_FALSE(exists("strict"));
}

TEST_F(Cli, InvalidParameterIsUsageError) {
  EXPECT_EQ(run("build --mode 3d --alpha 1.5 --out bad"), 2);
  EXPECT_EQ(run("build --mode 4d"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, NormsOfBuiltField) {
  // the grid-route tail fits need the field resolved well past R = 2M
  ASSERT_EQ(run("build --mode 3d --alpha 0.2 --epsilon 0.1 --M 16 --n-R 128 --n-beta 32 --log2-R-min -20 "
                "--log2-R-max 40 --out b3"),
            0);
  ASSERT_EQ(run("norms --input b3/F_tilde0.field --out n"), 0) << read("err.txt");
  const auto j = nlohmann::json::parse(read("n/norms.json"));
  EXPECT_TRUE(j.contains("F_tilde0: ||.||_H3(phi)"));
  EXPECT_TRUE(j.contains("F_tilde0: ||.||_C1"));
  EXPECT_EQ(read("n/norms.csv").rfind("name,value,error_estimate,strategy\r\n", 0), 0u);
}

TEST_F(Cli, CorruptedFieldIsUsageError) {
  write("bad.field", "BLOWLAB-FIELD 1\n{\"grid\": 3}\ngarbage");
  EXPECT_EQ(run("norms --input bad.field --out n"), 2);
  EXPECT_EQ(run("verify --suite zero --input bad.field"), 2);
}

TEST_F(Cli, VerifyZeroSuitePasses) {
  ASSERT_EQ(run("verify --suite zero --out v"), 0) << read("out.txt");
  const auto j = nlohmann::json::parse(read("v/verify.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_GE(j["checks"].size(), 4u);
}

TEST_F(Cli, VerifyQuickSuitePasses) {
  EXPECT_EQ(run("verify --suite quick --out v"), 0) << read("out.txt");
}

TEST_F(Cli, VerifyRandomSuiteIsDeterministic) {
  ASSERT_EQ(run("verify --suite random --seed 7 --out a"), 0) << read("out.txt");
  ASSERT_EQ(run("verify --suite random --seed 7 --out b"), 0);
  EXPECT_EQ(read("a/verify.json"), read("b/verify.json"));
}

TEST_F(Cli, EvolveGaussianWritesDiagnostics) {
  ASSERT_EQ(run("evolve --init gaussian --n 32 --L 10 --horizon 0.05 --dt 0.01 --snapshot-every 2 --x-norm-k 0 --out e"),
            0)
      << read("err.txt");
  EXPECT_TRUE(exists("e/diagnostics.csv"));
  EXPECT_TRUE(exists("e/snap_000002_omega.field"));
  EXPECT_TRUE(exists("e/final_theta.field"));
  const auto s = nlohmann::json::parse(read("e/summary.json"));
  EXPECT_EQ(s["steps"], 5);
  EXPECT_TRUE(s["completed"].get<bool>());
  EXPECT_TRUE(s["bkm"].contains("verdict"));
}

TEST_F(Cli, EvolveFromSnapshotFiles) {
  ASSERT_EQ(run("evolve --init gaussian --n 32 --L 10 --horizon 0.02 --dt 0.01 --x-norm-k 0 --out e"), 0);
  ASSERT_EQ(run("evolve --init files --omega e/final_omega.field --theta e/final_theta.field --n 32 --L 10 "
                "--horizon 0.02 --dt 0.01 --x-norm-k 0 --out e2"),
            0)
      << read("err.txt");
  EXPECT_EQ(run("evolve --init files --omega e/final_omega.field --theta e/final_theta.field --n 64 --L 10 --out e3"),
            2);
}

TEST_F(Cli, EvolveCflViolationIsUsageError) {
  EXPECT_EQ(run("evolve --init gaussian --amplitude 50 --n 32 --horizon 0.5 --dt 0.5 --x-norm-k 0 --out e"), 2);
  EXPECT_NE(read("err.txt").find("use dt <="), std::string::npos);
}

TEST_F(Cli, EvolveConstructionData) {
  ASSERT_EQ(run("evolve --init construction --alpha 0.2 --epsilon 0.1 --M 16 --delta 0.01 --n 32 --L 10 "
                "--horizon 0.01 --dt 0.005 --x-norm-k 0 --out c"),
            0)
      << read("err.txt");
  const auto s = nlohmann::json::parse(read("c/summary.json"));
  EXPECT_EQ(s["initial"]["init"], "construction");
}

TEST_F(Cli, ReportIsByteIdenticalAcrossReruns) {
  ASSERT_EQ(run("report --kind 3d --alpha 0.2 --epsilon 0.1 --M 16 --out r1"), 0) << read("err.txt");
  ASSERT_EQ(run("report --kind 3d --alpha 0.2 --epsilon 0.1 --M 16 --out r2"), 0);
  EXPECT_EQ(read("r1/report.json"), read("r2/report.json"));
  EXPECT_EQ(read("r1/report.csv"), read("r2/report.csv"));
}

TEST_F(Cli, SweepHonoursWorkerCount) {
  const std::string args = "report --kind sweep3d --alphas 0.2 --epsilons 0.1 0.05 --Ms 16";
  ASSERT_EQ(run(args + " --out s1", "BLOWLAB_WORKERS=1"), 0) << read("err.txt");
  ASSERT_EQ(run(args + " --out s2", "BLOWLAB_WORKERS=2"), 0);
  EXPECT_EQ(read("s1/sweep.json"), read("s2/sweep.json"));
  EXPECT_EQ(read("s1/sweep.csv").rfind("alpha,epsilon,M,", 0), 0u);
  EXPECT_EQ(run(args + " --out s3", "BLOWLAB_WORKERS=many"), 2);
}

TEST_F(Cli, ConfigFileAndPersistedConfigRoundTrip) {
  write("cfg.ini", "[build]\nmode=3d\nalpha=0.2\nepsilon=0.1\nM=16\nn-R=24\nn-beta=16\nlog2-R-min=-20\nlog2-R-max=10\n");
  ASSERT_EQ(run("--config cfg.ini build --out a"), 0) << read("err.txt");
  // flags override the file
  ASSERT_EQ(run("--config cfg.ini build --M 32 --out b"), 0);
  EXPECT_EQ(nlohmann::json::parse(read("b/provenance.json"))["params"]["M"].get<double>(), 32.0);
  // the persisted config reproduces the run
  ASSERT_EQ(run("--config a/config.ini build --out c"), 0) << read("err.txt");
  EXPECT_EQ(read("a/provenance.json"), read("c/provenance.json"));
  EXPECT_EQ(read("a/F_tilde0.field"), read("c/F_tilde0.field"));
}
