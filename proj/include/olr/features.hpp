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

// MFCC + log-energy front end with regression deltas.

#pragma once

#include <complex>
#include <filesystem>

#include <unsupported/Eigen/FFT>

#include "olr/common.hpp"
#include "olr/corpus.hpp"

namespace olr {

/// Frames x dims, one acoustic vector per row.
using FeatureMatrix = RowMatrix;

enum class CmvnMode { kOff, kPerUtteranceMean };

struct FeatureConfig {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  double pre_emphasis = 0.97;
  std::size_t n_mel_filters = 23;
  std::size_t n_cepstra = 19;  // c1..cN, c0 excluded
  bool include_log_energy = true;
  std::size_t delta_window = 2;
  double energy_floor = 1e-10;
  double low_freq_hz = 20.0;
  double high_freq_hz = 8000.0;
  CmvnMode cmvn = CmvnMode::kPerUtteranceMean;

  std::size_t frame_length() const { return static_cast<std::size_t>(std::lround(frame_length_ms * kSampleRate / 1000.0)); }
  std::size_t frame_shift() const { return static_cast<std::size_t>(std::lround(frame_shift_ms * kSampleRate / 1000.0)); }
  std::size_t fft_size() const {
    std::size_t n = 1;
    while (n < frame_length()) n <<= 1;
    return n;
  }
  std::size_t base_dim() const { return n_cepstra + (include_log_energy ? 1 : 0); }
  std::size_t output_dim() const { return 3 * base_dim(); }

  void validate() const {
    if (!(frame_length_ms > 0.0) || !(frame_shift_ms > 0.0)) throw ConfigError("frame length/shift must be > 0");
    if (frame_shift() > frame_length()) throw ConfigError("frame_shift must not exceed frame_length");
    if (frame_shift() == 0) throw ConfigError("frame_shift rounds to zero samples");
    if (n_cepstra < 1 || n_cepstra >= n_mel_filters) throw ConfigError("need 1 <= n_cepstra < n_mel_filters");
    if (!(energy_floor > 0.0)) throw ConfigError("energy_floor must be > 0");
    if (!(low_freq_hz >= 0.0 && high_freq_hz > low_freq_hz && high_freq_hz <= kSampleRate / 2.0))
      throw ConfigError("mel band edges must satisfy 0 <= low < high <= 8000");
    if (delta_window < 1) throw ConfigError("delta_window must be >= 1");
  }
};

inline void to_json(Json& j, const FeatureConfig& c) {
  j = Json{{"frame_length_ms", c.frame_length_ms},
           {"frame_shift_ms", c.frame_shift_ms},
           {"pre_emphasis", c.pre_emphasis},
           {"n_mel_filters", c.n_mel_filters},
           {"n_cepstra", c.n_cepstra},
           {"include_log_energy", c.include_log_energy},
           {"delta_window", c.delta_window},
           {"energy_floor", c.energy_floor},
           {"low_freq_hz", c.low_freq_hz},
           {"high_freq_hz", c.high_freq_hz},
           {"cmvn", c.cmvn == CmvnMode::kOff ? "off" : "per_utterance_mean"}};
}

inline void from_json(const Json& j, FeatureConfig& c) {
  c.frame_length_ms = j.value("frame_length_ms", c.frame_length_ms);
  c.frame_shift_ms = j.value("frame_shift_ms", c.frame_shift_ms);
  c.pre_emphasis = j.value("pre_emphasis", c.pre_emphasis);
  c.n_mel_filters = j.value("n_mel_filters", c.n_mel_filters);
  c.n_cepstra = j.value("n_cepstra", c.n_cepstra);
  c.include_log_energy = j.value("include_log_energy", c.include_log_energy);
  c.delta_window = j.value("delta_window", c.delta_window);
  c.energy_floor = j.value("energy_floor", c.energy_floor);
  c.low_freq_hz = j.value("low_freq_hz", c.low_freq_hz);
  c.high_freq_hz = j.value("high_freq_hz", c.high_freq_hz);
  const std::string cmvn = j.value("cmvn", std::string("per_utterance_mean"));
  if (cmvn == "off") {
    c.cmvn = CmvnMode::kOff;
  } else if (cmvn == "per_utterance_mean") {
    c.cmvn = CmvnMode::kPerUtteranceMean;
  } else {
    throw ConfigError("cmvn must be 'off' or 'per_utterance_mean'");
  }
}

inline double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

/// Triangular mel filterbank, n_mel_filters x (fft_size/2 + 1).
inline Matrix mel_filterbank(const FeatureConfig& cfg) {
  const std::size_t n_bins = cfg.fft_size() / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.low_freq_hz);
  const double mel_hi = hz_to_mel(cfg.high_freq_hz);
  const double step = (mel_hi - mel_lo) / static_cast<double>(cfg.n_mel_filters + 1);
  Matrix bank = Matrix::Zero(static_cast<Eigen::Index>(cfg.n_mel_filters), static_cast<Eigen::Index>(n_bins));
  for (std::size_t m = 0; m < cfg.n_mel_filters; ++m) {
    const double left = mel_lo + step * static_cast<double>(m);
    const double center = left + step;
    const double right = center + step;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * kSampleRate / static_cast<double>(cfg.fft_size()));
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      bank(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = w;
    }
  }
  return bank;
}

/// Orthonormal DCT-II rows 1..n_cepstra over n_mel_filters inputs.
inline Matrix dct_matrix(const FeatureConfig& cfg) {
  const auto n_in = static_cast<double>(cfg.n_mel_filters);
  Matrix dct(static_cast<Eigen::Index>(cfg.n_cepstra), static_cast<Eigen::Index>(cfg.n_mel_filters));
  for (std::size_t k = 1; k <= cfg.n_cepstra; ++k)
    for (std::size_t m = 0; m < cfg.n_mel_filters; ++m)
      dct(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(m)) =
          std::sqrt(2.0 / n_in) * std::cos(M_PI * static_cast<double>(k) * (static_cast<double>(m) + 0.5) / n_in);
  return dct;
}

inline std::size_t num_frames(std::size_t n_samples, const FeatureConfig& cfg) {
  if (n_samples < cfg.frame_length()) return 0;
  return (n_samples - cfg.frame_length()) / cfg.frame_shift() + 1;
}

/// Static features, T x base_dim: columns c1..cN then (optionally) log energy.
inline FeatureMatrix compute_mfcc(const Waveform& wav, const FeatureConfig& cfg = {}) {
  cfg.validate();
  if (wav.sample_rate != kSampleRate)
    throw DataError(strprintf("feature extraction requires 16000 Hz audio, got %d Hz", wav.sample_rate));
  const std::size_t frame_len = cfg.frame_length();
  const std::size_t shift = cfg.frame_shift();
  const std::size_t n_fft = cfg.fft_size();
  const std::size_t n_frames = num_frames(wav.samples.size(), cfg);
  if (n_frames == 0)
    throw DataError(strprintf("waveform too short: %zu samples, need at least %zu", wav.samples.size(), frame_len));

  const Matrix bank = mel_filterbank(cfg);
  const Matrix dct = dct_matrix(cfg);
  std::vector<double> window(frame_len);
  for (std::size_t i = 0; i < frame_len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(frame_len - 1));

  FeatureMatrix out(static_cast<Eigen::Index>(n_frames), static_cast<Eigen::Index>(cfg.base_dim()));
  Eigen::FFT<double> fft;
  std::vector<double> frame(n_fft, 0.0);
  std::vector<std::complex<double>> spectrum;
  Vector power(static_cast<Eigen::Index>(n_fft / 2 + 1));
  const double log_floor = std::log(cfg.energy_floor);

  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::int16_t* x = wav.samples.data() + t * shift;
    double energy = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) energy += static_cast<double>(x[i]) * x[i];
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t i = frame_len; i-- > 0;) {
      const double prev = i > 0 ? static_cast<double>(x[i - 1]) : static_cast<double>(x[0]);
      frame[i] = (static_cast<double>(x[i]) - cfg.pre_emphasis * prev) * window[i];
    }
    fft.fwd(spectrum, frame);
    for (std::size_t k = 0; k <= n_fft / 2; ++k) power(static_cast<Eigen::Index>(k)) = std::norm(spectrum[k]);
    Vector log_mel = bank * power;
    for (Eigen::Index m = 0; m < log_mel.size(); ++m) log_mel(m) = std::max(std::log(log_mel(m)), log_floor);
    const auto row = static_cast<Eigen::Index>(t);
    out.row(row).head(static_cast<Eigen::Index>(cfg.n_cepstra)) = (dct * log_mel).transpose();
    if (cfg.include_log_energy)
      out(row, static_cast<Eigen::Index>(cfg.n_cepstra)) = std::max(std::log(energy), log_floor);
  }
  if (cfg.cmvn == CmvnMode::kPerUtteranceMean) out.rowwise() -= out.colwise().mean();
  return out;
}

namespace detail {

inline FeatureMatrix regression_delta(const FeatureMatrix& in, std::size_t window) {
  const Eigen::Index n = in.rows();
  const auto w = static_cast<Eigen::Index>(window);
  double denom = 0.0;
  for (Eigen::Index k = 1; k <= w; ++k) denom += static_cast<double>(k * k);
  denom *= 2.0;
  FeatureMatrix out = FeatureMatrix::Zero(n, in.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index k = 1; k <= w; ++k) {
      const Eigen::Index ahead = std::min(t + k, n - 1);
      const Eigen::Index behind = std::max<Eigen::Index>(t - k, 0);
      out.row(t) += static_cast<double>(k) * (in.row(ahead) - in.row(behind));
    }
  }
  return out / denom;
}

}  // namespace detail

/// [static, delta, delta-delta], edges replicated.
inline FeatureMatrix append_deltas(const FeatureMatrix& base, std::size_t window) {
  if (base.rows() < 1) throw DataError("append_deltas needs at least one frame");
  if (window < 1) throw ConfigError("delta window must be >= 1");
  const FeatureMatrix delta = detail::regression_delta(base, window);
  const FeatureMatrix delta2 = detail::regression_delta(delta, window);
  FeatureMatrix out(base.rows(), 3 * base.cols());
  out << base, delta, delta2;
  return out;
}

/// Full front end: MFCC (+ log energy) with deltas.
inline FeatureMatrix extract_features(const Waveform& wav, const FeatureConfig& cfg = {}) {
  return append_deltas(compute_mfcc(wav, cfg), cfg.delta_window);
}

// Feature dump: int32 LE rows, int32 LE cols, then row-major float32 LE.

inline void write_feature_dump(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::string bytes;
  bytes.reserve(8 + static_cast<std::size_t>(m.size()) * 4);
  detail::put_le32(bytes, static_cast<std::uint32_t>(m.rows()));
  detail::put_le32(bytes, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto f = static_cast<float>(m(r, c));
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, 4);
      detail::put_le32(bytes, bits);
    }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline FeatureMatrix read_feature_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature dump '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8) throw DataError(path.string() + ": truncated feature dump header");
  const std::uint32_t rows = detail::read_le32(p);
  const std::uint32_t cols = detail::read_le32(p + 4);
  if (bytes.size() != 8 + static_cast<std::size_t>(rows) * cols * 4)
    throw DataError(path.string() + ": feature dump size does not match header");
  FeatureMatrix m(rows, cols);
  std::size_t off = 8;
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c, off += 4) {
      const std::uint32_t bits = detail::read_le32(p + off);
      float f = 0.0F;
      std::memcpy(&f, &bits, 4);
      m(r, c) = f;
    }
  return m;
}

}  // namespace olr
