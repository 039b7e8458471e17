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

#include <gtest/gtest.h>

#include <sstream>

#include "olr/challenge.hpp"
#include "support/oracles.hpp"

namespace olr {
namespace {

/// Test-only manifest: `per_lang` test segments for each of the 7 languages.
CorpusManifest test_manifest(std::size_t per_lang) {
  std::ostringstream m;
  for (std::size_t l = 0; l < 7; ++l)
    for (std::size_t i = 0; i < per_lang; ++i) {
      const std::string code(LanguageCode::from_index(l).str());
      m << "seg_" << code << "_" << i << " a.wav " << code << " spk-" << code << " test quiet\n";
    }
  std::istringstream in(m.str());
  return parse_manifest(in);
}

TrialScores oracle_scores(const CorpusManifest& m) {
  TrialScores t;
  t.languages = m.languages;
  for (const auto* r : m.split(Split::kTest)) {
    Vector v = Vector::Constant(7, -1.0);
    v(static_cast<Eigen::Index>(m.column_of(r->language))) = 1.0;
    t.add(r->segment_id, v, m.column_of(r->language));
  }
  return t;
}

TEST(ScoreFile, ExampleLineShape) {
  TrialScores t;
  for (std::size_t l = 0; l < 7; ++l) t.languages.push_back(LanguageCode::from_index(l));
  Vector v(7);
  v << 0.5, -0.2, -0.3, 0.1, -9.2, -0.1, -5.1;
  t.add("seg_1", v, 0);
  std::ostringstream out;
  write_score_file(t, out);
  EXPECT_NE(out.str().find("seg_1 0.500000 -0.200000 -0.300000 0.100000 -9.200000 -0.100000 -5.100000\n"),
            std::string::npos);
}

TEST(ScoreFile, ParsesExampleBlock) {
  std::istringstream m(
      "seg_1 a.wav ct-cn s1 test quiet\nseg_2 b.wav id-id s2 test quiet\n"
      "seg_3 c.wav zh-cn s3 test quiet\nseg_4 d.wav ja-jp s4 test quiet\nseg_5 e.wav ru-ru s5 test quiet\n"
      "seg_6 f.wav ko-kr s6 test quiet\nseg_7 g.wav vi-vn s7 test quiet\n");
  const auto manifest = parse_manifest(m);
  std::istringstream block(
      "seg_1 0.5  -0.2 -0.3 0.1 -9.2 -0.1 -5.1\n"
      "seg_2 -0.1 -0.3 0.5  0.3 -0.5 -0.9 -3.2\n");
  const auto t = parse_score_file(block, manifest);
  ASSERT_EQ(t.size(), 7U);
  EXPECT_EQ(t.scores[0](0), 0.5);
  EXPECT_EQ(t.scores[0](4), -9.2);
  EXPECT_EQ(t.scores[1](2), 0.5);
  EXPECT_EQ(t.scores[1](6), -3.2);
  EXPECT_FALSE(t.lost[0]);
  EXPECT_FALSE(t.lost[1]);
  for (std::size_t s = 2; s < 7; ++s) EXPECT_TRUE(t.lost[s]);
}

TEST(ScoreFile, RoundTrip) {
  const auto m = test_manifest(3);
  Rng rng(1);
  TrialScores t;
  t.languages = m.languages;
  for (const auto* r : m.split(Split::kTest)) {
    Vector v(7);
    for (Eigen::Index i = 0; i < 7; ++i) v(i) = rng.normal() * 5.0;
    v(3) = -kInf;
    t.add(r->segment_id, v, m.column_of(r->language));
  }
  std::stringstream buf;
  write_score_file(t, buf);
  const auto back = parse_score_file(buf, m);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    EXPECT_EQ(back.segment_ids[s], t.segment_ids[s]);
    EXPECT_EQ(back.truth[s], t.truth[s]);
    EXPECT_EQ(back.scores[s](3), -kInf);
    for (Eigen::Index i = 0; i < 7; ++i)
      if (i != 3) EXPECT_NEAR(back.scores[s](i), t.scores[s](i), 1e-6);
  }
}

TEST(ScoreFile, EmptyTrialSetWritesOnlyHeader) {
  TrialScores t;
  std::ostringstream out;
  write_score_file(t, out);
  EXPECT_EQ(out.str(), "#languages:\n");
}

TEST(ScoreFile, MissingLineBecomesLostTrial) {
  const auto m = test_manifest(2);
  const auto full = oracle_scores(m);
  std::ostringstream out;
  write_score_file(full, out);
  std::istringstream in(out.str());
  std::string text, line;
  std::size_t dropped = 0;
  while (std::getline(in, line))
    if (line.rfind("seg_ja-jp_1 ", 0) == 0) {
      ++dropped;
    } else {
      text += line + "\n";
    }
  ASSERT_EQ(dropped, 1U);
  std::istringstream partial(text);
  const auto t = parse_score_file(partial, m);
  std::size_t lost = 0;
  for (std::size_t s = 0; s < t.size(); ++s) {
    if (!t.lost[s]) continue;
    ++lost;
    EXPECT_EQ(t.segment_ids[s], "seg_ja-jp_1");
    EXPECT_TRUE((t.scores[s].array() == -kInf).all());
  }
  EXPECT_EQ(lost, 1U);
  const auto r = compute_cavg(t);
  EXPECT_EQ(r.p_miss(3), 0.5);
}

TEST(ScoreFile, WrongColumnCountReportsLine) {
  const auto m = test_manifest(1);
  std::istringstream in("seg_ct-cn_0 1 -1 -1 -1 -1 -1 -1\nseg_zh-cn_0 1 2 3 4 5 6\n");
  try {
    parse_score_file(in, m, "sub.txt");
    FAIL() << "expected a parse error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("sub.txt:2"), std::string::npos);
  }
}

TEST(ScoreFile, RejectsBadInput) {
  const auto m = test_manifest(1);
  auto parse = [&](const std::string& s) {
    std::istringstream in(s);
    return parse_score_file(in, m);
  };
  EXPECT_THROW(parse("nope 1 1 1 1 1 1 1\n"), DataError);
  EXPECT_THROW(parse("seg_ct-cn_0 1 1 1 1 1 1 1\nseg_ct-cn_0 1 1 1 1 1 1 1\n"), DataError);
  EXPECT_THROW(parse("seg_ct-cn_0 1 1 1 x 1 1 1\n"), DataError);
  EXPECT_THROW(parse("seg_ct-cn_0 1 1 1 nan 1 1 1\n"), DataError);
  EXPECT_THROW(parse("seg_ct-cn_0 1 1 1 inf 1 1 1\n"), DataError);
  EXPECT_THROW(parse("seg_ct-cn_0 1 1 1 0x1p3 1 1 1\n"), DataError);
  EXPECT_THROW(parse("#languages: zh-cn ct-cn id-id ja-jp ru-ru ko-kr vi-vn\n"), DataError);
  EXPECT_NO_THROW(parse("# comment\n\nseg_ct-cn_0 1 1 1 -inf 1 1 1e-3\n"));
}

TEST(Evaluate, OracleEmptyAndRandomSubmissions) {
  const auto m = test_manifest(100);
  const auto dir = testing::scratch_dir("challenge-eval");
  write_score_file(oracle_scores(m), dir / "oracle.txt");
  const auto perfect = evaluate_submission(dir / "oracle.txt", m);
  EXPECT_EQ(perfect.cavg, 0.0);
  EXPECT_EQ(perfect.eer, 0.0);
  EXPECT_EQ(perfect.idr, 1.0);

  { std::ofstream(dir / "empty.txt"); }
  const auto empty = evaluate_submission(dir / "empty.txt", m);
  EXPECT_EQ(empty.cavg, 0.5);
  EXPECT_EQ(empty.lost, 700U);

  Rng rng(2016);
  TrialScores random;
  random.languages = m.languages;
  for (const auto* r : m.split(Split::kTest)) {
    Vector v(7);
    for (Eigen::Index i = 0; i < 7; ++i) v(i) = rng.normal() - 1.8;  // about 1/7 acceptance
    random.add(r->segment_id, v, m.column_of(r->language));
  }
  write_score_file(random, dir / "random.txt");
  const double cavg = evaluate_submission(dir / "random.txt", m).cavg;
  EXPECT_GE(cavg, 0.45);
  EXPECT_LE(cavg, 0.55);
}

TEST(Evaluate, RemovingLinesNeverHelps) {
  const auto m = test_manifest(4);
  Rng rng(6);
  TrialScores t;
  t.languages = m.languages;
  for (const auto* r : m.split(Split::kTest)) {
    Vector v(7);
    for (Eigen::Index i = 0; i < 7; ++i) v(i) = rng.normal();
    t.add(r->segment_id, v, m.column_of(r->language));
  }
  const auto base = compute_cavg(t);
  for (std::size_t drop = 0; drop < t.size(); ++drop) {
    auto u = t;
    u.scores[drop] = Vector::Constant(7, -kInf);
    u.lost[drop] = true;
    const auto r = compute_cavg(u);
    for (Eigen::Index a = 0; a < 7; ++a) {
      EXPECT_GE(r.p_miss(a), base.p_miss(a));
      for (Eigen::Index b = 0; b < 7; ++b) EXPECT_LE(r.p_fa(a, b), base.p_fa(a, b));
    }
  }
}

TEST(Evaluate, PureFunctionOfInputs) {
  const auto m = test_manifest(3);
  const auto dir = testing::scratch_dir("challenge-pure");
  Rng rng(7);
  TrialScores t;
  t.languages = m.languages;
  for (const auto* r : m.split(Split::kTest)) {
    Vector v(7);
    for (Eigen::Index i = 0; i < 7; ++i) v(i) = rng.normal();
    t.add(r->segment_id, v, m.column_of(r->language));
  }
  write_score_file(t, dir / "s.txt");
  const auto a = evaluate_submission(dir / "s.txt", m);
  const auto b = evaluate_submission(dir / "s.txt", m);
  EXPECT_EQ(format_key_values(a), format_key_values(b));
  EXPECT_EQ(format_det(a.det), format_det(b.det));
}

}  // namespace
}  // namespace olr
