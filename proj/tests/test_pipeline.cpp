// Copyright 2026 The olr-toolkit Authors.
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

// End-to-end checks that drive the installed `olr` executable.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "olr/pipeline.hpp"
#include "support/oracles.hpp"

#ifndef OLR_CLI_PATH
#error "OLR_CLI_PATH must point at the olr executable"
#endif

namespace olr {
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OLR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json tiny_config(const fs::path& root) {
  return Json{
      {"corpus_dir", (root / "corpus").string()},
      {"work_dir", (root / "work").string()},
      {"rng_seed", 5},
      {"synth",
       {{"n_languages", 3},
        {"speakers_per_language_train", 3},
        {"speakers_per_language_test", 1},
        {"utts_per_speaker", 2},
        {"utt_seconds", 0.5}}},
      {"ubm", {{"n_components", 4}, {"n_iterations", 3}}},
      {"tv", {{"rank", 2}, {"n_iterations", 2}}},
      {"backend", {{"lda_dim", 2}}},
  };
}

fs::path write_config(const fs::path& root, const Json& j) {
  const fs::path p = root / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

TEST(Cli, ExitCodes) {
  const auto root = testing::scratch_dir("cli-exit");
  Json bad = tiny_config(root);
  bad["ubm"]["mixtures"] = 8;
  EXPECT_EQ(run_cli("train --config " + write_config(root, bad).string()), 2);
  EXPECT_EQ(run_cli("train --config " + (root / "absent.json").string()), 2);

  const auto cfg = write_config(root, tiny_config(root));
  EXPECT_EQ(run_cli("train --config " + cfg.string()), 3);  // no manifest yet
  EXPECT_EQ(run_cli("synth --config " + cfg.string()), 0);

  Json stiff = tiny_config(root);
  stiff["backend"]["smo_max_iterations"] = 1;
  stiff["backend"]["smo_tolerance"] = 1e-12;
  stiff["systems"] = {"ivector-svm-linear"};
  EXPECT_EQ(run_cli("train --config " + write_config(root, stiff).string()), 4);

  EXPECT_EQ(run_cli("evaluate --scores " + (root / "missing.txt").string() + " --manifest " +
                    (root / "corpus" / "manifest.txt").string()),
            3);
  EXPECT_NE(run_cli("frobnicate"), 0);
}

TEST(Cli, EvaluateOracleFileGivesZeroCavg) {
  const auto root = testing::scratch_dir("cli-oracle");
  const auto cfg = write_config(root, tiny_config(root));
  ASSERT_EQ(run_cli("synth --config " + cfg.string()), 0);
  const auto manifest = load_manifest(root / "corpus" / "manifest.txt");
  TrialScores t;
  t.languages = manifest.languages;
  for (const auto* r : manifest.split(Split::kTest)) {
    Vector v = Vector::Constant(static_cast<Eigen::Index>(t.languages.size()), -3.0);
    v(static_cast<Eigen::Index>(manifest.column_of(r->language))) = 3.0;
    t.add(r->segment_id, v, manifest.column_of(r->language));
  }
  write_score_file(t, root / "oracle.txt");
  ASSERT_EQ(run_cli("evaluate --config " + cfg.string() + " --scores " + (root / "oracle.txt").string() + " --out " +
                    (root / "rep").string()),
            0);
  const auto kv = testing::read_file(root / "rep.kv");
  EXPECT_NE(kv.find("cavg=0"), std::string::npos) << kv;
  const auto report = cmd_evaluate(root / "oracle.txt", manifest, MetricConfig{}, {}, "oracle");
  EXPECT_EQ(report.cavg, 0.0);
  EXPECT_EQ(report.idr, 1.0);
}

TEST(Cli, RetrainingIsByteIdenticalAndBaselineHasAllRows) {
  const auto root = testing::scratch_dir("cli-determinism");
  Json j = tiny_config(root);
  const auto cfg = write_config(root, j);
  ASSERT_EQ(run_cli("baseline --synth --config " + cfg.string()), 0);
  const auto work = root / "work";
  const std::vector<std::string> models = {"ubm.json", "tv.json", "lda.json", "backend/lvector-svm-rbf.json",
                                           "scores/lvector.txt"};
  std::vector<std::string> first;
  for (const auto& m : models) first.push_back(testing::read_file(work / m));
  ASSERT_EQ(run_cli("train --workers 3 --config " + cfg.string()), 0);
  ASSERT_EQ(run_cli("score --config " + cfg.string()), 0);
  for (std::size_t i = 0; i < models.size(); ++i) EXPECT_EQ(testing::read_file(work / models[i]), first[i]) << models[i];

  const auto report = testing::read_file(work / "report.txt");
  for (const auto& s : all_systems()) EXPECT_NE(report.find(s.label), std::string::npos) << s.label;
}

}  // namespace
}  // namespace olr
