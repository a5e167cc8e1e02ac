#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftguard/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("driftguard_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) {
    const std::string cmd = std::string(DRIFTGUARD_BIN) + " " + args + " >" + path("stdout.txt") + " 2>" +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out() const { return driftguard::read_text(path("stdout.txt")); }
  std::string err() const { return driftguard::read_text(path("stderr.txt")); }

  static std::size_t lines(const std::string& file) {
    std::ifstream in(file);
    std::size_t count = 0;
    for (std::string line; std::getline(in, line);) ++count;
    return count;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateLinearShape) {
  ASSERT_EQ(run("simulate --kind linear --n 2000 --seed 7 --out " + path("lin.csv")), 0) << err();
  EXPECT_EQ(lines(path("lin.csv")), 2001u);
  EXPECT_EQ(driftguard::read_text(path("lin.csv")).rfind("x1,y\n", 0), 0u);
  const json side = json::parse(driftguard::read_text(path("lin.csv.json")));
  EXPECT_EQ(side["details"]["seed"], 7);
  EXPECT_EQ(side["outputs"]["lin.csv"], driftguard::sha256_file(path("lin.csv")));
}

TEST_F(Cli, SimulateOscillatorShape) {
  ASSERT_EQ(run("simulate --kind oscillator --n 3000 --out " + path("osc.csv")), 0) << err();
  EXPECT_EQ(lines(path("osc.csv")), 3001u);
  EXPECT_EQ(driftguard::read_text(path("osc.csv")).rfind("x1,x2,x3,x4,y\n", 0), 0u);
  const json side = json::parse(driftguard::read_text(path("osc.csv.json")));
  EXPECT_EQ(side["details"]["state0"]["p1"], 1.0);
  EXPECT_EQ(side["details"]["sigma"], 0.03);
}

TEST_F(Cli, SimulateIsByteIdentical) {
  ASSERT_EQ(run("simulate --kind oscillator --n 500 --seed 3 --out " + path("a.csv")), 0);
  ASSERT_EQ(run("simulate --kind oscillator --n 500 --seed 3 --out " + path("b.csv")), 0);
  EXPECT_EQ(driftguard::read_text(path("a.csv")), driftguard::read_text(path("b.csv")));
  json a = json::parse(driftguard::read_text(path("a.csv.json")));
  json b = json::parse(driftguard::read_text(path("b.csv.json")));
  EXPECT_EQ(a["outputs"]["a.csv"], b["outputs"]["b.csv"]);
  a["config"].erase("out");
  b["config"].erase("out");
  EXPECT_EQ(a["config"], b["config"]);
}

TEST_F(Cli, CalibrateSmokeAndNaiveOrdering) {
  ASSERT_EQ(run("simulate --n 400 --seed 2 --out " + path("train.csv")), 0);
  const auto start = std::chrono::steady_clock::now();
  ASSERT_EQ(run("calibrate --data " + path("train.csv") + " --B-O 2 --B-I 2 --horizon 5 --out " + path("s.json")), 0)
      << err();
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 10.0);
  const json smoke = json::parse(driftguard::read_text(path("s.json")));
  EXPECT_EQ(smoke["version"], "driftguard-cal/1");
  EXPECT_EQ(smoke["cl"].size(), 5u);

  const std::string common = "calibrate --data " + path("train.csv") + " --B-O 10 --B-I 50 --horizon 300 --seed 4";
  ASSERT_EQ(run(common + " --out " + path("c.json")), 0);
  ASSERT_EQ(run(common + " --naive --out " + path("n.json")), 0);
  const json c = json::parse(driftguard::read_text(path("c.json")));
  const json n = json::parse(driftguard::read_text(path("n.json")));
  ASSERT_EQ(c["cl"].size(), 300u);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_GE(n["cl"][i].get<double>(), c["cl"][i].get<double>());
  EXPECT_TRUE(n["naive"].get<bool>());
}

TEST_F(Cli, MonitorRowsAndSignals) {
  ASSERT_EQ(run("simulate --n 500 --seed 2 --out " + path("train.csv")), 0);
  ASSERT_EQ(run("simulate --n 300 --seed 3 --mode mixture --shift-at 101 --out " + path("stream.csv")), 0);
  ASSERT_EQ(run("calibrate --data " + path("train.csv") +
                " --B-O 10 --B-I 50 --alpha 0.01 --horizon 300 --out " + path("cal.json")),
            0);
  ASSERT_EQ(run("monitor --calibration " + path("cal.json") + " --stream " + path("stream.csv") + " --out " +
                path("mon.csv")),
            0)
      << err();
  std::ifstream in(path("mon.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "i,t2,cl,signal");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string i, t2, cl, signal;
    std::getline(ss, i, ',');
    std::getline(ss, t2, ',');
    std::getline(ss, cl, ',');
    std::getline(ss, signal, ',');
    EXPECT_EQ(signal == "1", std::stod(t2) > std::stod(cl)) << line;
    EXPECT_GT(std::stod(cl), 0.0);
    ++rows;
  }
  EXPECT_EQ(rows, 300);
  EXPECT_TRUE(out().find("signal") != std::string::npos);
  const json side = json::parse(driftguard::read_text(path("mon.csv.json")));
  EXPECT_EQ(side["inputs"]["cal.json"], driftguard::sha256_file(path("cal.json")));
}

TEST_F(Cli, ConfigFileAndOverride) {
  ASSERT_EQ(run("simulate --n 300 --seed 2 --out " + path("train.csv")), 0);
  driftguard::write_text(path("cfg.json"), R"({"B-O": 3, "B-I": 7, "horizon": 9, "lambda": 0.05, "naive": true})");
  ASSERT_EQ(run("calibrate --config " + path("cfg.json") + " --data " + path("train.csv") + " --horizon 4 --out " +
                path("cal.json")),
            0)
      << err();
  const json cal = json::parse(driftguard::read_text(path("cal.json")));
  EXPECT_EQ(cal["B_O"], 3);
  EXPECT_EQ(cal["B_I"], 7);
  EXPECT_EQ(cal["horizon"], 4);
  EXPECT_EQ(cal["lambda"], 0.05);
  EXPECT_TRUE(cal["naive"].get<bool>());
}

TEST_F(Cli, CompareBaseline) {
  ASSERT_EQ(run("simulate --n 600 --seed 2 --out " + path("train.csv")), 0);
  ASSERT_EQ(run("simulate --n 200 --seed 3 --mode mixture --shift-at 51 --out " + path("stream.csv")), 0);
  ASSERT_EQ(run("compare-baseline --data " + path("train.csv") + " --stream " + path("stream.csv") +
                " --B-O 5 --B-I 20 --alpha 0.01 --horizon 200 --out " + path("cmp.csv")),
            0)
      << err();
  EXPECT_EQ(lines(path("cmp.csv")), 201u);
  EXPECT_EQ(driftguard::read_text(path("cmp.csv")).rfind("i,t2_bootstrap,cl_bootstrap,signal_bootstrap,t2_baseline", 0),
            0u);
}

TEST_F(Cli, FarStudySmoke) {
  ASSERT_EQ(run("far-study -R 1 --n-train 300 --stream-length 100 --B-O 3 --B-I 10 --horizon 100 --with-naive --out " +
                path("far")),
            0)
      << err();
  std::ifstream in(path("far_far.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "i,far_bootstrap,far_baseline,far_naive");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    while (std::getline(ss, field, ',')) EXPECT_TRUE(field == "0" || field == "1") << line;
    ++rows;
  }
  EXPECT_EQ(rows, 100);
  const json summary = json::parse(driftguard::read_text(path("far_summary.json")));
  EXPECT_EQ(summary["replicates"], 1);
}

TEST_F(Cli, DetectStudySmoke) {
  ASSERT_EQ(run("detect-study -R 2 --n-train 300 --stream-length 150 --shift-at 51 --B-O 3 --B-I 10 --horizon 150 "
                "--out " +
                path("det")),
            0)
      << err();
  EXPECT_EQ(lines(path("det_detect.csv")), 3u);
  EXPECT_TRUE(fs::exists(path("det_detect.csv.json")));
}

TEST_F(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(run("monitor --calibration " + path("none.json") + " --stream x.csv --out y.csv"), 2);
  EXPECT_NE(err().find("read calibration"), std::string::npos);
  EXPECT_EQ(run("simulate --kind pendulum --out " + path("p.csv")), 2);
  EXPECT_EQ(run("simulate --n 10"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  driftguard::write_text(path("bad.json"), "{not json");
  EXPECT_EQ(run("simulate --config " + path("bad.json") + " --out " + path("p.csv")), 2);
  driftguard::write_text(path("train.csv"), "x1,y\n1,2\n");
  EXPECT_EQ(run("calibrate --data " + path("train.csv") + " --out " + path("c.json")), 2);
  EXPECT_EQ(run("calibrate --data " + path("train.csv") + " --lambda 1.5 --out " + path("c.json")), 2);
}

TEST_F(Cli, NumericalErrorsExitThree) {
  std::string csv = "x1,y\n";
  for (int i = 0; i < 40; ++i) csv += "1," + std::to_string(i) + "\n";
  driftguard::write_text(path("flat.csv"), csv);
  EXPECT_EQ(run("calibrate --data " + path("flat.csv") + " --gamma 0 --B-O 2 --B-I 2 --out " + path("c.json")), 3);
  EXPECT_NE(err().find("calibrate"), std::string::npos);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }
