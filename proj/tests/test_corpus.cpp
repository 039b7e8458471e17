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

#include <map>
#include <sstream>

#include "olr/corpus.hpp"
#include "support/oracles.hpp"

namespace olr {
namespace {

std::string error_of(const std::string& manifest_text) {
  std::istringstream in(manifest_text);
  try {
    parse_manifest(in, "m.txt");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(Manifest, ParsesAndOrdersLanguagesCanonically) {
  std::istringstream in(
      "# comment\n"
      "a wav/a.wav vi-vn s1 train quiet\n"
      "\n"
      "b wav/b.wav ct-cn s2 test noisy\n");
  const auto m = parse_manifest(in);
  ASSERT_EQ(m.records.size(), 2U);
  ASSERT_EQ(m.languages.size(), 2U);
  EXPECT_EQ(m.languages[0].str(), "ct-cn");
  EXPECT_EQ(m.languages[1].str(), "vi-vn");
  EXPECT_EQ(m.records[1].session, Session::kNoisy);
  EXPECT_EQ(m.column_of(LanguageCode::parse("vi-vn")), 1U);
}

TEST(Manifest, Errors) {
  EXPECT_NE(error_of("a x.wav zh-cn s1 train quiet\na y.wav zh-cn s1 train quiet\n").find("m.txt:2"),
            std::string::npos);
  EXPECT_NE(error_of("a x.wav zh-cn s1 train quiet\na y.wav zh-cn s1 train quiet\n").find("duplicate"),
            std::string::npos);
  EXPECT_NE(error_of("a x.wav en-us s1 train quiet\n").find("m.txt:1"), std::string::npos);
  EXPECT_NE(error_of("a x.wav en-us s1 train quiet\n").find("en-us"), std::string::npos);
  EXPECT_NE(error_of("a x.wav zh-cn s1 train quiet\nb y.wav zh-cn s1 test quiet\n").find("both"), std::string::npos);
  EXPECT_NE(error_of("a x.wav zh-cn s1 train\n").find("m.txt:1"), std::string::npos);
  EXPECT_NE(error_of("a x.wav zh-cn s1 dev quiet\n").find("split"), std::string::npos);
  EXPECT_NE(error_of("a x.wav zh-cn s1 train loud\n").find("session"), std::string::npos);
}

TEST(Manifest, WriteParseRoundTrip) {
  std::istringstream in("a wav/a.wav zh-cn s1 train quiet\nb wav/b.wav ko-kr s2 test noisy\n");
  const auto m = parse_manifest(in);
  std::ostringstream out;
  write_manifest(m, out);
  std::istringstream again(out.str());
  const auto m2 = parse_manifest(again);
  ASSERT_EQ(m2.records.size(), 2U);
  EXPECT_EQ(m2.records[1].segment_id, "b");
  EXPECT_EQ(m2.records[1].language.str(), "ko-kr");
  EXPECT_EQ(m2.records[1].split, Split::kTest);
}

TEST(Wav, TwoSecondFileHas32000Samples) {
  Waveform w;
  w.samples.assign(32000, 0);
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = static_cast<std::int16_t>((i * 37) % 2000 - 1000);
  const auto back = decode_wav(encode_wav(w));
  EXPECT_EQ(back.samples.size(), 32000U);
  EXPECT_EQ(back.samples, w.samples);
  EXPECT_DOUBLE_EQ(back.seconds(), 2.0);
}

TEST(Wav, RejectsWrongFormat) {
  Waveform w;
  w.samples.assign(8000, 1);
  w.sample_rate = 8000;
  try {
    decode_wav(encode_wav(w), "x.wav");
    FAIL() << "expected a format error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("sample rate"), std::string::npos);
  }
  std::string stereo = encode_wav(Waveform{{1, 2, 3, 4}, kSampleRate});
  stereo[22] = 2;
  EXPECT_THROW(decode_wav(stereo), DataError);
  const std::string good = encode_wav(Waveform{{1, 2, 3, 4}, kSampleRate});
  EXPECT_THROW(decode_wav(good.substr(0, good.size() - 3)), DataError);
  EXPECT_THROW(decode_wav("RIFF"), DataError);
}

TEST(Wav, AllZeroFileIsValid) {
  Waveform w;
  w.samples.assign(16000, 0);
  EXPECT_EQ(decode_wav(encode_wav(w)).samples.size(), 16000U);
}

TEST(Synth, RejectsZeroSeparation) {
  SynthSpec s;
  s.language_separation = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.language_separation = 1.0;
  s.n_languages = 8;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Synth, DefaultShapeAndSpeakerDisjointness) {
  SynthSpec s;
  s.utt_seconds = 0.1;  // shape only; keep it fast
  const auto dir = testing::scratch_dir("synth-shape");
  const auto m = synth_corpus(s, dir);
  EXPECT_EQ(m.records.size(), 7U * 11U * 10U);
  std::map<std::string, Split> spk;
  for (const auto& r : m.records) {
    auto [it, fresh] = spk.emplace(r.speaker_id, r.split);
    EXPECT_TRUE(fresh || it->second == r.split);
  }
  EXPECT_EQ(spk.size(), 77U);
  EXPECT_EQ(m.split(Split::kTest).size(), 7U * 3U * 10U);
  const auto w = read_wav(m.resolve(m.records.front()));
  EXPECT_EQ(w.samples.size(), 1600U);
  const auto reloaded = load_manifest(dir / "manifest.txt");
  EXPECT_EQ(reloaded.records.size(), m.records.size());
}

TEST(Synth, SameSeedGivesByteIdenticalOutput) {
  SynthSpec s;
  s.n_languages = 2;
  s.speakers_per_language_train = 2;
  s.speakers_per_language_test = 1;
  s.utts_per_speaker = 2;
  s.utt_seconds = 0.5;
  s.noisy_fraction = 0.5;
  const auto a = testing::scratch_dir("synth-a");
  const auto b = testing::scratch_dir("synth-b");
  const auto m = synth_corpus(s, a);
  set_num_workers(3);
  synth_corpus(s, b);
  set_num_workers(1);
  EXPECT_EQ(testing::read_file(a / "manifest.txt"), testing::read_file(b / "manifest.txt"));
  for (const auto& r : m.records) EXPECT_EQ(testing::read_file(a / r.audio_path), testing::read_file(b / r.audio_path));

  s.rng_seed = 43;
  const auto c = testing::scratch_dir("synth-c");
  synth_corpus(s, c);
  EXPECT_NE(testing::read_file(a / m.records[0].audio_path), testing::read_file(c / m.records[0].audio_path));
}

TEST(Synth, SpecJsonRoundTrip) {
  SynthSpec s;
  s.n_languages = 3;
  s.snr_db = 5.0;
  Json j = s;
  const auto back = j.get<SynthSpec>();
  EXPECT_EQ(back.n_languages, 3U);
  EXPECT_EQ(back.snr_db, 5.0);
}

}  // namespace
}  // namespace olr
