#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "holokit/serialization.hpp"

#ifndef HOLOKIT_CLI_PATH
#error "HOLOKIT_CLI_PATH must name the command-line tool"
#endif

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string output;  // stdout and stderr
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("holokit_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args, const std::string& env = "") const {
    const fs::path log = dir_ / "log.txt";
    const std::string cmd = env + " '" + std::string(HOLOKIT_CLI_PATH) + "' " + args + " > '" + log.string() + "' 2>&1";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream text;
    text << in.rdbuf();
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, text.str()};
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, StabilizerWritesAReport) {
  const Outcome r = run("stabilizer --group spin7 --seed 5 --out " + path("s.json"));
  ASSERT_EQ(r.status, 0) << r.output;
  std::ifstream in(path("s.json"));
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("results").at("dim"), 21);
  EXPECT_EQ(j.at("seed"), 5);
  EXPECT_TRUE(j.at("pass").get<bool>());
}

TEST_F(Cli, CsvGoesToStdout) {
  const Outcome r = run("stabilizer --group g2 --format csv");
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("name,group,n,residual,tolerance,pass,seed"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("verify --suite no-such-suite").status, 1);
  EXPECT_EQ(run("verify --res 12").status, 1);
  EXPECT_EQ(run("stabilizer --group e8").status, 1);
  EXPECT_EQ(run("stabilizer --group g2", "HOLOKIT_THREADS=abc").status, 1);
}

TEST_F(Cli, FailedCheckExitsWithTwo) {
  const Outcome r = run("verify --suite bianchi --res 8 --tol bianchi_delta_star=1e-300");
  EXPECT_EQ(r.status, 2) << r.output;
  EXPECT_NE(r.output.find("bianchi_delta_star"), std::string::npos);
}

TEST_F(Cli, TorsionVerdicts) {
  ASSERT_EQ(run("generate --group g2 --res 8 --kind model --out " + path("model.json")).status, 0);
  EXPECT_EQ(run("torsion " + path("model.json")).status, 0);

  ASSERT_EQ(run("generate --group g2 --res 8 --kind closed --sidecar --out " + path("closed.json")).status, 0);
  const Outcome closed = run("torsion " + path("closed.json") + " --out " + path("verdict.json"));
  EXPECT_EQ(closed.status, 2) << closed.output;
  std::ifstream in(path("verdict.json"));
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("results").at("verdict"), "has-torsion");
  EXPECT_LT(j.at("results").at("residuals").at("dphi").get<double>(), 1e-12);
}

TEST_F(Cli, MalformedFieldFileExitsWithOne) {
  std::ofstream(path("bad.json")) << "{\"format\": \"holokit-field\", \"version\": 1";
  const Outcome r = run("torsion " + path("bad.json"));
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(run("torsion " + path("missing.json")).status, 1);
}

TEST_F(Cli, OffOrbitNodeExitsWithThree) {
  ASSERT_EQ(run("generate --group g2 --res 4 --kind model --out " + path("m.json")).status, 0);
  nlohmann::json j;
  {
    std::ifstream in(path("m.json"));
    j = nlohmann::json::parse(in);
  }
  ASSERT_EQ(j.at("encoding"), "base64-f64le");
  // Negate the 3-form at node 2: -phi_0 lies in the other open orbit.
  std::vector<double> values = holokit::base64_decode_doubles(j.at("data").get<std::string>());
  const std::size_t width = 35;
  ASSERT_EQ(values.size(), 16 * width);
  for (std::size_t c = 0; c < width; ++c) values[2 * width + c] = -values[2 * width + c];
  j["data"] = holokit::base64_encode_doubles(values);
  std::ofstream(path("m_bad.json")) << j.dump();
  const Outcome r = run("torsion " + path("m_bad.json"));
  EXPECT_EQ(r.status, 3) << r.output;
  EXPECT_NE(r.output.find("node 2"), std::string::npos) << r.output;
}
