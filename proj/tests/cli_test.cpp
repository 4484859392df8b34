// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

// Drives the socattn binary and checks exit codes and diagnostics.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "test_support.hpp"

namespace {

struct Outcome {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = socattn::testing::scratch_dir(std::string("cli_") +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
  }

  Outcome invoke(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + SOCATTN_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
  }

  static void expect_error(const Outcome& o, const std::string& code) {
    EXPECT_NE(o.exit_code, 0);
    EXPECT_TRUE(std::regex_match(o.err, std::regex("error\\[" + code + "\\]: [^\n]*\n")))
        << "stderr was: " << o.err;
  }

  std::string small() const {
    return "--n_layers 4 --n_heads 4 --model_dim 32 --layer_range 1-2 ";
  }

  std::filesystem::path dir_;
};

TEST_F(CliTest, MissingSubcommand) { expect_error(invoke(""), "E_USAGE"); }

TEST_F(CliTest, UnknownFlag) { expect_error(invoke("run --out x --colour red"), "E_USAGE"); }

TEST_F(CliTest, BadLambda) { expect_error(invoke("run --lambda much --out " + dir_.string()), "E_USAGE"); }

TEST_F(CliTest, LayerRangeBeyondStack) {
  expect_error(invoke("run --n_layers 4 --n_heads 4 --model_dim 32 --out " + dir_.string()), "E_CONTRACT");
}

TEST_F(CliTest, MissingSceneFile) {
  expect_error(invoke("run --scene nowhere.json --embeddings nowhere.bin --out " + dir_.string()), "E_IO");
}

TEST_F(CliTest, SceneAndDumpAreExclusive) {
  expect_error(invoke("run --scene a.json --embeddings b.bin --dump m.json --out " + dir_.string()), "E_USAGE");
}

TEST_F(CliTest, RunWritesReport) {
  const auto o = invoke("run --scenes 2 " + small() + "--lambda 0 --out " + (dir_ / "r").string());
  ASSERT_EQ(o.exit_code, 0) << o.err;
  EXPECT_TRUE(o.err.empty());
  EXPECT_TRUE(std::filesystem::exists(dir_ / "r" / "report.json"));
  EXPECT_NE(o.out.find("mode: biased"), std::string::npos);
}

TEST_F(CliTest, SweepWritesCsv) {
  const auto o = invoke("sweep --scenes 1 " + std::string("--n_layers 4 --n_heads 4 --model_dim 32 ") +
                        "--lambdas 0,inf --alphas 0.5,1 --ranges 1-2,0-3 --out " + dir_.string());
  ASSERT_EQ(o.exit_code, 0) << o.err;
  const auto csv = slurp(dir_ / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST_F(CliTest, SynthThenIngestWeightsIsAnalysisOnly) {
  ASSERT_EQ(invoke("synth --n_layers 4 --n_heads 4 --model_dim 32 --dump_payload weights --out " +
                   dir_.string()).exit_code,
            0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "scene.json"));
  const auto o = invoke("ingest " + (dir_ / "dump" / "manifest.json").string() +
                        " --layer_range 1-2 --out " + (dir_ / "i").string());
  ASSERT_EQ(o.exit_code, 0) << o.err;
  EXPECT_NE(o.out.find("analysis-only"), std::string::npos);
}

TEST_F(CliTest, IngestScoresRunsBias) {
  ASSERT_EQ(invoke("synth --n_layers 4 --n_heads 4 --model_dim 32 --dump_payload scores --out " +
                   dir_.string()).exit_code,
            0);
  const auto o = invoke("ingest " + (dir_ / "dump" / "manifest.json").string() +
                        " --layer_range 1-2 --lambda 0 --out " + (dir_ / "i").string());
  ASSERT_EQ(o.exit_code, 0) << o.err;
  EXPECT_NE(o.out.find("biased    AttnMax"), std::string::npos);
}

TEST_F(CliTest, IngestDiagnosticsAreDistinct) {
  ASSERT_EQ(invoke("synth --n_layers 2 --n_heads 2 --model_dim 32 --dump_payload scores --out " +
                   dir_.string()).exit_code,
            0);
  const auto manifest = dir_ / "dump" / "manifest.json";
  const std::string text = slurp(manifest);

  const auto payload = dir_ / "dump" / "l01_h01.f32";
  std::filesystem::resize_file(payload, std::filesystem::file_size(payload) - 1);
  auto o = invoke("ingest " + manifest.string() + " --layer_range 0-1 --out " + dir_.string());
  expect_error(o, "E_DUMP_TRUNCATED");
  EXPECT_NE(o.err.find("layer 1, head 1"), std::string::npos);

  std::ofstream(payload, std::ios::binary | std::ios::app) << "xxxxx";
  expect_error(invoke("ingest " + manifest.string() + " --layer_range 0-1 --out " + dir_.string()), "E_DUMP_SHAPE");

  std::string bumped = text;
  bumped.replace(bumped.find("\"version\": 1"), 12, "\"version\": 9");
  std::ofstream(manifest, std::ios::binary | std::ios::trunc) << bumped;
  expect_error(invoke("ingest " + manifest.string() + " --out " + dir_.string()), "E_DUMP_VERSION");

  expect_error(invoke("ingest " + (dir_ / "absent.json").string() + " --out " + dir_.string()), "E_IO");
}

TEST_F(CliTest, HeatmapWritesImages) {
  const auto o = invoke("heatmap " + small() + "--lambda 0 --layer 1 --head 2 --out " + dir_.string());
  ASSERT_EQ(o.exit_code, 0) << o.err;
  EXPECT_FALSE(std::filesystem::is_empty(dir_ / "heatmaps"));
}

TEST_F(CliTest, VerifyPasses) {
  const auto o = invoke("verify --instances 10 --scenes 2");
  ASSERT_EQ(o.exit_code, 0) << o.err;
  EXPECT_NE(o.out.find("verify: ok"), std::string::npos);
}

}  // namespace
