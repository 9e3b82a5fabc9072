// Copyright 2026 The imc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "imc/io.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(IMC_CLI_PATH) + " " + args + " 2>&1";
  Outcome out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return out;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.output.append(buf.data(), n);
  const int status = pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

constexpr const char* kSmall = "--d1 40 --d2 40 --n1 6 --n2 6 --rank 2";

TEST_F(Cli, CheckReportsEveryOracle) {
  const Outcome o = run("check");
  EXPECT_EQ(o.code, 0) << o.output;
  for (const char* name : {"gradient ok", "unbiasedness ok", "procrustes ok", "perturbation-bound ok"}) {
    EXPECT_NE(o.output.find(name), std::string::npos) << o.output;
  }
}

TEST_F(Cli, DivergenceExitsWithEpoch) {
  const Outcome o = run(std::string("solve ") + kSmall + " --sample-rate 0.5 --tau 1e6 --out " + at("d"));
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("diverged"), std::string::npos) << o.output;
  EXPECT_NE(o.output.find("epoch 1"), std::string::npos) << o.output;
  EXPECT_FALSE(fs::exists(dir_ / "d" / "trace.csv"));
}

TEST_F(Cli, UsageErrors) {
  for (const std::string& args :
       {std::string("solve --bogus 1 --out ") + at("u"),
        std::string("solve --sample-rate 0.3 --samples 100 --out ") + at("u"),
        std::string("solve --sample-rate 0.3"),  // no --out
        std::string("solve --algo sgd --sample-rate 0.3 --out ") + at("u"),
        std::string("frobnicate"),
        std::string("")}) {
    const Outcome o = run(args);
    EXPECT_EQ(o.code, 1) << args << "\n" << o.output;
    EXPECT_FALSE(o.output.empty()) << args;
  }
  const Outcome one = run("solve --bogus 1 --out " + at("u"));
  EXPECT_EQ(one.output.find('\n'), one.output.size() - 1) << "diagnostic must be one line";
}

TEST_F(Cli, GenerateSampleInitShareSeeding) {
  const std::string flags = std::string(kSmall) + " --seed 5 --sample-rate 0.5";
  ASSERT_EQ(run("generate " + flags + " --out " + at("g")).code, 0);
  ASSERT_EQ(run("sample " + flags + " --out " + at("s")).code, 0);
  ASSERT_EQ(run("init " + flags + " --out " + at("i")).code, 0);
  const imc::DenseMatrix xl = imc::read_matrix(dir_ / "g" / "x_left.txt");
  const imc::DenseMatrix xr = imc::read_matrix(dir_ / "g" / "x_right.txt");
  const imc::DenseMatrix m = imc::read_matrix(dir_ / "g" / "m_star.txt");
  const imc::DenseMatrix l = imc::read_matrix(dir_ / "g" / "l_star.txt");
  EXPECT_LE((xl * m * xr.transpose() - l).norm(), 1e-12);
  const imc::ObservationSet o =
      imc::parse_observations(imc::read_file(dir_ / "s" / "observations.txt"));
  for (std::size_t k = 0; k < o.size(); ++k) {
    EXPECT_EQ(o.values[k], l(o.indices[k].row, o.indices[k].col));
  }
  EXPECT_EQ(imc::read_matrix(dir_ / "i" / "u0.txt").rows(), 6);
  EXPECT_TRUE(fs::exists(dir_ / "i" / "manifest.json"));
}

TEST_F(Cli, SolveRerunFromManifestIsByteIdentical) {
  ASSERT_EQ(run(std::string("solve ") + kSmall + " --sample-rate 0.4 --seed 3 --out " + at("a")).code, 0);
  ASSERT_EQ(run("solve --manifest " + at("a/manifest.json") + " --out " + at("b")).code, 0);
  for (const char* f : {"trace.csv", "u.txt", "v.txt", "manifest.json"}) {
    EXPECT_EQ(imc::read_file(dir_ / "a" / f), imc::read_file(dir_ / "b" / f)) << f;
  }
  const imc::Table trace = imc::parse_csv(imc::read_file(dir_ / "a" / "trace.csv"));
  EXPECT_EQ(trace.header[0], "epoch");
  EXPECT_EQ(trace.header.size(), 7u);
}

TEST_F(Cli, TauSweepWritesTable) {
  ASSERT_EQ(run(std::string("solve ") + kSmall + " --sample-rate 0.4 --tau-mult 8,32 --out " + at("w")).code, 0);
  const imc::Table sweep = imc::parse_csv(imc::read_file(dir_ / "w" / "sweep.csv"));
  EXPECT_EQ(sweep.rows.size(), 2u);
}

TEST_F(Cli, ManifestMisuse) {
  ASSERT_EQ(run(std::string("solve ") + kSmall + " --sample-rate 0.4 --out " + at("a")).code, 0);
  EXPECT_EQ(run("solve --manifest " + at("a/manifest.json") + " --seed 2 --out " + at("b")).code, 1);
  EXPECT_EQ(run("phase --manifest " + at("a/manifest.json") + " --out " + at("b")).code, 1);
  EXPECT_EQ(run("solve --manifest " + at("missing.json") + " --out " + at("b")).code, 1);
}

TEST_F(Cli, PhaseAndConvergeRerunsAreByteIdentical) {
  ASSERT_EQ(run("phase --datasets 40x8x2 --multiples 1,3 --trials 2 --epochs 100 --threads 2 --out " +
                at("p1")).code, 0);
  ASSERT_EQ(run("phase --manifest " + at("p1/manifest.json") + " --threads 1 --out " + at("p2")).code, 0);
  EXPECT_EQ(imc::read_file(dir_ / "p1" / "phase.csv"), imc::read_file(dir_ / "p2" / "phase.csv"));
  EXPECT_EQ(imc::read_file(dir_ / "p1" / "phase_trials.csv"),
            imc::read_file(dir_ / "p2" / "phase_trials.csv"));
  const imc::Table phase = imc::parse_csv(imc::read_file(dir_ / "p1" / "phase.csv"));
  EXPECT_EQ(phase.header, (std::vector<std::string>{"dataset", "d", "n", "r", "multiple", "samples",
                                                    "trials", "successes", "success_rate"}));

  ASSERT_EQ(run("converge --d1 50 --d2 50 --n1 6 --n2 6 --rank 2 --rates 0.4 --trials 2 "
                "--pass-budget 40 --out " + at("c1")).code, 0);
  ASSERT_EQ(run("converge --manifest " + at("c1/manifest.json") + " --out " + at("c2")).code, 0);
  EXPECT_EQ(imc::read_file(dir_ / "c1" / "converge.csv"), imc::read_file(dir_ / "c2" / "converge.csv"));
}

}  // namespace
