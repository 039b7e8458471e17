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

// Corpus manifests, 16 kHz PCM WAV I/O and the synthetic multilingual corpus
// generator.
//
// Manifest format, one record per line, single-space separated:
//
//   segment_id audio_path language speaker split session
//
// e.g. "seg001 wav/seg001.wav zh-cn spk03 train quiet". Lines starting with
// '#' are comments. Relative audio paths resolve against the manifest's
// directory.

#pragma once

#include <array>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "olr/common.hpp"

namespace olr {

// ---------------------------------------------------------------------------
// Languages

inline constexpr std::size_t kNumCanonicalLanguages = 7;
inline constexpr std::array<std::string_view, kNumCanonicalLanguages> kLanguageCodes = {
    "ct-cn", "zh-cn", "id-id", "ja-jp", "ru-ru", "ko-kr", "vi-vn"};

/// One of the seven target languages, identified by its canonical index.
class LanguageCode {
 public:
  constexpr LanguageCode() = default;

  static LanguageCode from_index(std::size_t index) {
    if (index >= kNumCanonicalLanguages) throw DataError(strprintf("language index %zu out of range", index));
    LanguageCode code;
    code.index_ = static_cast<std::uint8_t>(index);
    return code;
  }

  static LanguageCode parse(std::string_view text) {
    for (std::size_t i = 0; i < kLanguageCodes.size(); ++i)
      if (kLanguageCodes[i] == text) return from_index(i);
    throw DataError("unknown language code '" + std::string(text) + "'");
  }

  constexpr std::size_t index() const { return index_; }
  std::string_view str() const { return kLanguageCodes[index_]; }

  friend constexpr bool operator==(LanguageCode a, LanguageCode b) = default;
  friend constexpr auto operator<=>(LanguageCode a, LanguageCode b) = default;

 private:
  std::uint8_t index_ = 0;
};

enum class Split { kTrain, kTest };
enum class Session { kQuiet, kNoisy };

inline std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }
inline std::string_view to_string(Session s) { return s == Session::kQuiet ? "quiet" : "noisy"; }

struct SegmentRecord {
  std::string segment_id;
  std::string audio_path;
  LanguageCode language;
  std::string speaker_id;
  Split split = Split::kTrain;
  Session session = Session::kQuiet;
};

struct CorpusManifest {
  std::vector<SegmentRecord> records;
  /// Languages present, in canonical order.
  std::vector<LanguageCode> languages;
  /// Directory that relative audio paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  std::vector<const SegmentRecord*> split(Split which) const {
    std::vector<const SegmentRecord*> out;
    for (const auto& r : records)
      if (r.split == which) out.push_back(&r);
    return out;
  }

  /// Column position of a language in score vectors (canonical order among
  /// the manifest's languages).
  std::size_t column_of(LanguageCode code) const {
    for (std::size_t i = 0; i < languages.size(); ++i)
      if (languages[i] == code) return i;
    throw DataError("language '" + std::string(code.str()) + "' not in manifest");
  }

  std::filesystem::path resolve(const SegmentRecord& r) const {
    std::filesystem::path p(r.audio_path);
    return p.is_absolute() ? p : base_dir / p;
  }
};

/// Recomputes `languages` and checks id uniqueness and speaker-disjoint splits.
inline void validate_manifest(CorpusManifest& manifest) {
  std::unordered_map<std::string, std::size_t> seen;
  std::unordered_map<std::string, Split> speaker_split;
  std::set<LanguageCode> langs;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (!seen.emplace(r.segment_id, i).second) throw DataError("duplicate segment_id '" + r.segment_id + "'");
    auto [it, inserted] = speaker_split.emplace(r.speaker_id, r.split);
    if (!inserted && it->second != r.split)
      throw DataError("speaker '" + r.speaker_id + "' appears in both train and test splits");
    langs.insert(r.language);
  }
  manifest.languages.assign(langs.begin(), langs.end());
}

inline CorpusManifest parse_manifest(std::istream& in, const std::string& source = "<manifest>") {
  CorpusManifest manifest;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    auto fail = [&](const std::string& why) {
      return DataError(strprintf("%s:%zu: %s", source.c_str(), line_no, why.c_str()));
    };
    if (fields.size() != 6) throw fail(strprintf("expected 6 fields, found %zu", fields.size()));
    SegmentRecord rec;
    rec.segment_id = fields[0];
    rec.audio_path = fields[1];
    try {
      rec.language = LanguageCode::parse(fields[2]);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    rec.speaker_id = fields[3];
    if (fields[4] == "train") {
      rec.split = Split::kTrain;
    } else if (fields[4] == "test") {
      rec.split = Split::kTest;
    } else {
      throw fail("split must be 'train' or 'test', found '" + fields[4] + "'");
    }
    if (fields[5] == "quiet") {
      rec.session = Session::kQuiet;
    } else if (fields[5] == "noisy") {
      rec.session = Session::kNoisy;
    } else {
      throw fail("session must be 'quiet' or 'noisy', found '" + fields[5] + "'");
    }
    if (!seen.emplace(rec.segment_id, line_no).second)
      throw fail("duplicate segment_id '" + rec.segment_id + "'");
    manifest.records.push_back(std::move(rec));
  }
  validate_manifest(manifest);
  return manifest;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  CorpusManifest m = parse_manifest(in, path.string());
  m.base_dir = path.parent_path();
  return m;
}

inline void write_manifest(const CorpusManifest& manifest, std::ostream& out) {
  for (const auto& r : manifest.records)
    out << r.segment_id << ' ' << r.audio_path << ' ' << r.language.str() << ' ' << r.speaker_id << ' '
        << to_string(r.split) << ' ' << to_string(r.session) << '\n';
}

inline void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_manifest(manifest, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// WAV

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<std::int16_t> samples;
  int sample_rate = kSampleRate;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

namespace detail {

inline std::uint32_t read_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_le32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_le16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace detail

/// Decodes a RIFF/WAVE buffer holding mono 16-bit 16 kHz PCM.
inline Waveform decode_wav(std::string_view bytes, const std::string& source = "<wav>") {
  auto parse_error = [&](const std::string& why) { return DataError(source + ": " + why); };
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw parse_error("not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  Waveform wav;
  while (true) {
    if (pos + 8 > bytes.size()) throw parse_error(have_fmt ? "truncated file: no data chunk" : "truncated file: no fmt chunk");
    const std::uint32_t size = detail::read_le32(p + pos + 4);
    const std::string_view id(bytes.data() + pos, 4);
    pos += 8;
    if (id == "fmt ") {
      if (size < 16 || pos + size > bytes.size()) throw parse_error("truncated fmt chunk");
      const std::uint16_t format = detail::read_le16(p + pos);
      const std::uint16_t channels = detail::read_le16(p + pos + 2);
      const std::uint32_t rate = detail::read_le32(p + pos + 4);
      const std::uint16_t bits = detail::read_le16(p + pos + 14);
      if (format != 1) throw parse_error(strprintf("unsupported audio format %u (PCM required)", format));
      if (channels != 1) throw parse_error(strprintf("unsupported channel count %u (mono required)", channels));
      if (rate != kSampleRate) throw parse_error(strprintf("unsupported sample rate %u Hz (16000 required)", rate));
      if (bits != 16) throw parse_error(strprintf("unsupported bit depth %u (16 required)", bits));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw parse_error("data chunk before fmt chunk");
      if (pos + size > bytes.size()) throw parse_error("truncated data chunk");
      if (size % 2 != 0) throw parse_error("odd data chunk size for 16-bit samples");
      wav.samples.resize(size / 2);
      for (std::size_t i = 0; i < wav.samples.size(); ++i)
        wav.samples[i] = static_cast<std::int16_t>(detail::read_le16(p + pos + 2 * i));
      if (wav.samples.empty()) throw parse_error("empty data chunk");
      return wav;
    }
    pos += size + (size & 1);
  }
}

inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

inline std::string encode_wav(const Waveform& wav) {
  const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_le32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put_le32(out, 16);
  detail::put_le16(out, 1);
  detail::put_le16(out, 1);
  detail::put_le32(out, static_cast<std::uint32_t>(wav.sample_rate));
  detail::put_le32(out, static_cast<std::uint32_t>(wav.sample_rate) * 2);
  detail::put_le16(out, 2);
  detail::put_le16(out, 16);
  out += "data";
  detail::put_le32(out, data_bytes);
  for (std::int16_t s : wav.samples) detail::put_le16(out, static_cast<std::uint16_t>(s));
  return out;
}

inline void write_wav(const Waveform& wav, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_wav(wav);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Synthetic corpus
//
// A "language" is an inventory of phone-like states, each a cascade of three
// two-pole resonators (formants). All languages perturb one shared base
// inventory; language_separation scales the perturbation. Utterances are
// white-noise excitation pushed through a random phone sequence. Speakers
// apply a vocal-tract-length factor and small per-phone offsets to the
// formants, their own speaking rate and phone-usage skew, a first-order
// channel tilt and a gain.

struct SynthSpec {
  std::size_t n_languages = 7;
  std::size_t speakers_per_language_train = 8;
  std::size_t speakers_per_language_test = 3;
  std::size_t utts_per_speaker = 10;
  double utt_seconds = 2.0;
  double language_separation = 1.0;
  double noisy_fraction = 0.2;
  double snr_db = 10.0;
  std::uint64_t rng_seed = 42;

  void validate() const {
    if (n_languages < 1 || n_languages > kNumCanonicalLanguages)
      throw ConfigError(strprintf("n_languages must be in [1, 7], got %zu", n_languages));
    if (speakers_per_language_train < 1 || speakers_per_language_test < 1 || utts_per_speaker < 1)
      throw ConfigError("speaker and utterance counts must be >= 1");
    if (!(utt_seconds > 0.0)) throw ConfigError("utt_seconds must be > 0");
    if (!(language_separation > 0.0)) throw ConfigError("language_separation must be > 0");
    if (!(noisy_fraction >= 0.0 && noisy_fraction <= 1.0)) throw ConfigError("noisy_fraction must be in [0, 1]");
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  }
};

inline void to_json(Json& j, const SynthSpec& s) {
  j = Json{{"n_languages", s.n_languages},
           {"speakers_per_language_train", s.speakers_per_language_train},
           {"speakers_per_language_test", s.speakers_per_language_test},
           {"utts_per_speaker", s.utts_per_speaker},
           {"utt_seconds", s.utt_seconds},
           {"language_separation", s.language_separation},
           {"noisy_fraction", s.noisy_fraction},
           {"snr_db", s.snr_db},
           {"rng_seed", s.rng_seed}};
}

inline void from_json(const Json& j, SynthSpec& s) {
  s.n_languages = j.value("n_languages", s.n_languages);
  s.speakers_per_language_train = j.value("speakers_per_language_train", s.speakers_per_language_train);
  s.speakers_per_language_test = j.value("speakers_per_language_test", s.speakers_per_language_test);
  s.utts_per_speaker = j.value("utts_per_speaker", s.utts_per_speaker);
  s.utt_seconds = j.value("utt_seconds", s.utt_seconds);
  s.language_separation = j.value("language_separation", s.language_separation);
  s.noisy_fraction = j.value("noisy_fraction", s.noisy_fraction);
  s.snr_db = j.value("snr_db", s.snr_db);
  s.rng_seed = j.value("rng_seed", s.rng_seed);
}

namespace synth {

inline constexpr std::size_t kPhones = 6;
inline constexpr std::size_t kFormants = 3;

struct Phone {
  std::array<double, kFormants> freq{};
  std::array<double, kFormants> bandwidth{};
};

struct Language {
  std::array<Phone, kPhones> phones{};
  std::array<double, kPhones> phone_cdf{};
};

template <typename T, std::size_t N>
constexpr std::array<T, N> filled(const T& v) {
  std::array<T, N> a{};
  for (auto& x : a) x = v;
  return a;
}

struct Speaker {
  double vtl_factor = 1.0;
  double tilt = 0.0;
  double gain = 1.0;
  double rate = 1.0;
  std::array<std::array<double, kFormants>, kPhones> formant_scale = filled<std::array<double, kFormants>, kPhones>(filled<double, kFormants>(1.0));
  std::array<double, kPhones> phone_skew = filled<double, kPhones>(1.0);
};

inline std::vector<Language> make_languages(const SynthSpec& spec) {
  Rng base_rng(derive_seed(spec.rng_seed, 0x1000));
  constexpr std::array<double, kFormants> lo = {300.0, 900.0, 2300.0};
  constexpr std::array<double, kFormants> hi = {850.0, 2300.0, 3400.0};
  constexpr std::array<double, kFormants> spread = {143.0, 338.0, 338.0};
  constexpr std::array<double, kFormants> bw = {90.0, 130.0, 180.0};
  std::array<Phone, kPhones> base{};
  for (auto& ph : base)
    for (std::size_t k = 0; k < kFormants; ++k) {
      ph.freq[k] = base_rng.uniform(lo[k], hi[k]);
      ph.bandwidth[k] = bw[k];
    }
  std::vector<Language> langs(spec.n_languages);
  for (std::size_t l = 0; l < spec.n_languages; ++l) {
    Rng rng(derive_seed(spec.rng_seed, 0x2000 + l));
    double total = 0.0;
    std::array<double, kPhones> weight{};
    for (std::size_t p = 0; p < kPhones; ++p) {
      Phone ph = base[p];
      for (std::size_t k = 0; k < kFormants; ++k) {
        ph.freq[k] += spec.language_separation * spread[k] * rng.uniform(-1.0, 1.0);
        ph.freq[k] = std::clamp(ph.freq[k], 150.0, 7000.0);
      }
      langs[l].phones[p] = ph;
      weight[p] = rng.uniform(0.3, 1.0);
      total += weight[p];
    }
    double acc = 0.0;
    for (std::size_t p = 0; p < kPhones; ++p) {
      acc += weight[p] / total;
      langs[l].phone_cdf[p] = acc;
    }
    langs[l].phone_cdf.back() = 1.0;
  }
  return langs;
}

inline Speaker make_speaker(const SynthSpec& spec, std::size_t language, std::size_t speaker) {
  Rng rng(derive_seed(spec.rng_seed, 0x3000 + language * 1000 + speaker));
  Speaker s;
  s.vtl_factor = std::clamp(1.0 + 0.05 * rng.normal(), 0.75, 1.25);
  s.tilt = rng.uniform(-0.6, 0.6);
  s.gain = std::pow(10.0, rng.uniform(-6.0, 6.0) / 20.0);
  // Speaker idiosyncrasies: speaking rate, per-phone formant offsets and a
  // skewed phone usage relative to the language's phonotactics.
  s.rate = std::clamp(1.0 + 0.3 * rng.normal(), 0.5, 1.8);
  for (auto& ph : s.formant_scale)
    for (double& f : ph) f = 1.0 + 0.02 * rng.normal();
  for (double& w : s.phone_skew) w = std::exp(rng.normal());
  return s;
}

/// Renders one utterance; `rng` is the utterance's private stream.
inline Waveform render_utterance(const Language& lang, const Speaker& spk, std::size_t n_samples, bool noisy,
                                 double snr_db, Rng& rng) {
  std::vector<double> y(n_samples, 0.0);
  std::array<double, kFormants> s1{}, s2{};
  std::size_t pos = 0;
  while (pos < n_samples) {
    std::array<double, kPhones> cdf{};
    double acc = 0.0;
    for (std::size_t q = 0; q < kPhones; ++q) {
      acc += (lang.phone_cdf[q] - (q ? lang.phone_cdf[q - 1] : 0.0)) * spk.phone_skew[q];
      cdf[q] = acc;
    }
    const double u = rng.uniform() * acc;
    std::size_t p = 0;
    while (p + 1 < kPhones && u > cdf[p]) ++p;
    const Phone& ph = lang.phones[p];
    const auto len = static_cast<std::size_t>(rng.uniform(0.06, 0.16) * spk.rate * kSampleRate);
    const double amp = std::pow(10.0, rng.uniform(-4.0, 4.0) / 20.0);
    std::array<double, kFormants> a1{}, a2{}, g{};
    for (std::size_t k = 0; k < kFormants; ++k) {
      const double f = std::min(ph.freq[k] * spk.vtl_factor * spk.formant_scale[p][k], 7600.0);
      const double r = std::exp(-M_PI * ph.bandwidth[k] / kSampleRate);
      const double theta = 2.0 * M_PI * f / kSampleRate;
      a1[k] = 2.0 * r * std::cos(theta);
      a2[k] = -r * r;
      g[k] = 1.0 - r;  // rough peak-gain normalization
    }
    const std::size_t end = std::min(n_samples, pos + len);
    for (; pos < end; ++pos) {
      double x = amp * rng.normal();
      for (std::size_t k = 0; k < kFormants; ++k) {
        const double out = g[k] * x + a1[k] * s1[k] + a2[k] * s2[k];
        s2[k] = s1[k];
        s1[k] = out;
        x = out;
      }
      y[pos] = x;
    }
  }
  // Channel tilt, then level normalization.
  double prev = 0.0;
  for (double& v : y) {
    const double in = v;
    v = in + spk.tilt * prev;
    prev = in;
  }
  double power = 0.0;
  for (double v : y) power += v * v;
  power /= static_cast<double>(std::max<std::size_t>(1, n_samples));
  const double target_rms = 1500.0 * spk.gain;
  const double scale = power > 0.0 ? target_rms / std::sqrt(power) : 0.0;
  for (double& v : y) v *= scale;
  if (noisy) {
    const double noise_rms = target_rms / std::pow(10.0, snr_db / 20.0);
    for (double& v : y) v += noise_rms * rng.normal();
  }
  Waveform wav;
  wav.samples.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    wav.samples[i] = static_cast<std::int16_t>(std::clamp(std::lround(y[i]), -32768L, 32767L));
  return wav;
}

}  // namespace synth

/// Generates audio under `out_dir/wav/` plus `out_dir/manifest.txt`.
/// Output is a pure function of the spec (seed included).
inline CorpusManifest synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw DataError("cannot create '" + (out_dir / "wav").string() + "': " + ec.message());

  const auto langs = synth::make_languages(spec);
  const std::size_t spk_total = spec.speakers_per_language_train + spec.speakers_per_language_test;
  const auto n_samples = static_cast<std::size_t>(std::llround(spec.utt_seconds * kSampleRate));

  CorpusManifest manifest;
  manifest.base_dir = out_dir;
  struct Job {
    std::size_t language, speaker, utt;
  };
  std::vector<Job> jobs;
  for (std::size_t l = 0; l < spec.n_languages; ++l) {
    const auto code = LanguageCode::from_index(l);
    for (std::size_t s = 0; s < spk_total; ++s) {
      const bool train = s < spec.speakers_per_language_train;
      for (std::size_t u = 0; u < spec.utts_per_speaker; ++u) {
        SegmentRecord r;
        r.language = code;
        r.speaker_id = strprintf("%s-spk%02zu", std::string(code.str()).c_str(), s);
        r.segment_id = strprintf("%s-%s-spk%02zu-u%03zu", std::string(code.str()).c_str(), train ? "tr" : "te", s, u);
        r.audio_path = "wav/" + r.segment_id + ".wav";
        r.split = train ? Split::kTrain : Split::kTest;
        manifest.records.push_back(std::move(r));
        jobs.push_back({l, s, u});
      }
    }
  }
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    Rng rng(derive_seed(spec.rng_seed, 0x100000 + i));
    const bool noisy = rng.uniform() < spec.noisy_fraction;
    manifest.records[i].session = noisy ? Session::kNoisy : Session::kQuiet;
    const auto spk = synth::make_speaker(spec, job.language, job.speaker);
    const Waveform wav = synth::render_utterance(langs[job.language], spk, n_samples, noisy, spec.snr_db, rng);
    write_wav(wav, out_dir / manifest.records[i].audio_path);
  });
  validate_manifest(manifest);
  write_manifest(manifest, out_dir / "manifest.txt");
  return manifest;
}

}  // namespace olr
