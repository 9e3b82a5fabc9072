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

#include <filesystem>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "imc/errors.hpp"
#include "imc/experiments.hpp"
#include "imc/io.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using imc::DenseMatrix;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imc_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string error_of(const std::string& text) {
  try {
    imc::parse_matrix(text, "m");
  } catch (const imc::IoError& e) {
    return e.what();
  }
  return "";
}

using MatrixFile = TempDir;

TEST_F(MatrixFile, RoundTripIsBitExact) {
  DenseMatrix m = oracle::random_matrix(5, 3, 1);
  m(0, 0) = 0.1;
  m(1, 1) = -std::numeric_limits<double>::denorm_min();
  m(2, 2) = std::numeric_limits<double>::max();
  m(3, 0) = 1e-300;
  imc::write_matrix(m, dir_ / "m.txt");
  const DenseMatrix back = imc::read_matrix(dir_ / "m.txt");
  ASSERT_EQ(back.rows(), 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(back(i, j), m(i, j));
  }
  EXPECT_FALSE(fs::exists(dir_ / "m.txt.tmp"));
}

TEST(MatrixFormat, ZeroScalar) {
  EXPECT_EQ(imc::format_matrix(DenseMatrix::Zero(1, 1)), "1 1\n0.0000000000000000e+00\n");
}

TEST(MatrixFormat, ErrorsNameTheLine) {
  EXPECT_NE(error_of("2 2\n1 2\n3 4\n5 6\n").find("line 4"), std::string::npos);
  EXPECT_NE(error_of("2 2\n1 2\n3 x\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("2 2\n1 2\n3\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("2\n1 2\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("a b\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("2 2\n1 2\n").find("expected 2 rows"), std::string::npos);
  EXPECT_NE(error_of("1 1\nnan\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("").find("line 1"), std::string::npos);
}

TEST(Observations, RoundTripAndErrors) {
  const imc::GroundTruth t = imc::generate_instance({12, 10, 4, 3, 2}, 2.0, 1);
  const imc::ObservationSet o = imc::bernoulli_sample(t, 0.3, 2);
  const imc::ObservationSet back = imc::parse_observations(imc::format_observations(o));
  EXPECT_EQ(back.indices, o.indices);
  EXPECT_EQ(back.values, o.values);
  EXPECT_EQ(back.p, o.p);
  EXPECT_THROW(imc::parse_observations("2 2 2\n1 1 1.0\n0 0 2.0\n"), imc::IoError);  // unsorted
  EXPECT_THROW(imc::parse_observations("2 2 1\n2 0 1.0\n"), imc::IoError);           // bounds
  EXPECT_THROW(imc::parse_observations("2 2 2\n0 0 1.0\n"), imc::IoError);           // count
}

using ResultsFile = TempDir;

TEST_F(ResultsFile, EmptyTableIsHeaderOnly) {
  imc::Table t;
  t.header = {"a", "b"};
  imc::write_results(t, dir_ / "t.csv");
  EXPECT_EQ(imc::read_file(dir_ / "t.csv"), "a,b\n");
}

TEST_F(ResultsFile, UnwritablePath) {
  imc::Table t;
  t.header = {"a"};
  EXPECT_THROW(imc::write_results(t, dir_ / "missing" / "t.csv"), imc::IoError);
  EXPECT_THROW(imc::read_file(dir_ / "nope.txt"), imc::IoError);
}

TEST_F(ResultsFile, ConvergeCsvIsDeterministicAndMonotone) {
  imc::ConvergenceConfig cfg;
  cfg.dataset = {50, 6, 2};
  cfg.rates = {0.5};
  cfg.trials = 2;
  cfg.pass_budget = 30;
  cfg.threads = 2;
  const std::string a = imc::format_csv(imc::run_convergence_study(cfg).table());
  const std::string b = imc::format_csv(imc::run_convergence_study(cfg).table());
  EXPECT_EQ(a, b);
  imc::write_file_atomic(dir_ / "c.csv", a);
  const imc::Table back = imc::parse_csv(imc::read_file(dir_ / "c.csv"));
  ASSERT_EQ(back.header, (std::vector<std::string>{"dataset", "p", "algo", "trial", "pass",
                                                   "log2_rel_err", "rel_err", "dist"}));
  std::string prev_key;
  double prev_pass = -1.0;
  for (const auto& row : back.rows) {
    const std::string key = row[1] + "/" + row[2] + "/" + row[3];
    const double pass = std::stod(row[4]);
    if (key == prev_key) {
      EXPECT_GT(pass, prev_pass);
    }
    prev_key = key;
    prev_pass = pass;
  }
}

using ManifestFile = TempDir;

TEST_F(ManifestFile, RoundTrip) {
  imc::RunManifest m;
  m.command = "solve";
  m.seed = 0xfedcba9876543210ULL;
  m.version = "test";
  m.config["tau"] = 0.1;
  m.config["rates"] = {0.2, 0.30000000000000004};
  m.inputs["x.txt"] = imc::digest("hello");
  imc::write_manifest(m, dir_ / "manifest.json");
  const imc::RunManifest back = imc::read_manifest(dir_ / "manifest.json");
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.config["rates"][1].get<double>(), 0.30000000000000004);
  EXPECT_EQ(back.inputs, m.inputs);
  imc::write_file_atomic(dir_ / "bad.json", "{\"command\": 1}");
  EXPECT_THROW(imc::read_manifest(dir_ / "bad.json"), imc::IoError);
  imc::write_file_atomic(dir_ / "worse.json", "{");
  EXPECT_THROW(imc::read_manifest(dir_ / "worse.json"), imc::IoError);
}

TEST(Digest, KnownValue) {
  // FNV-1a 64 of the empty string is the offset basis.
  EXPECT_EQ(imc::digest(""), "cbf29ce484222325");
  EXPECT_NE(imc::digest("a"), imc::digest("b"));
}

}  // namespace
