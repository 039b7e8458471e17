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

// Nearest-spectral-template language classifier, used only to check that the
// synthetic corpus is separable independently of the recognition pipeline.
// Templates are the nominal (speaker-free) resonator responses of each
// language's phones. A test utterance is scored per language by summing, over
// frames, the distance to that language's closest phone template. Frame
// spectra come from a direct DFT and share no code with the feature front end.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "olr/corpus.hpp"

namespace olr::testing {

inline constexpr std::size_t kTemplateFrame = 256;
inline constexpr std::size_t kTemplateHop = 160;
inline constexpr std::size_t kTemplateBands = 32;

/// Log band power, floored 15 dB below the strongest band so that spectral
/// valleys (dominated by noise in real frames) do not drive the distance.
inline std::vector<double> band_log_power(const std::vector<double>& power) {
  const std::size_t per_band = power.size() / kTemplateBands;
  std::vector<double> bands(kTemplateBands);
  double peak = 0.0;
  for (std::size_t b = 0; b < kTemplateBands; ++b) {
    double s = 0.0;
    for (std::size_t k = b * per_band; k < (b + 1) * per_band; ++k) s += power[k];
    bands[b] = s;
    peak = std::max(peak, s);
  }
  for (double& v : bands) v = std::log(std::max(v, 3e-2 * peak) + 1e-300);
  return bands;
}

/// Log band power of each frame (bins 1..128 of a 256-point Hann-windowed DFT).
inline std::vector<std::vector<double>> frame_band_spectra(const Waveform& wav) {
  const std::size_t n_bins = kTemplateFrame / 2;
  std::vector<double> window(kTemplateFrame), cos_t(kTemplateFrame), sin_t(kTemplateFrame);
  for (std::size_t i = 0; i < kTemplateFrame; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / kTemplateFrame);
    cos_t[i] = std::cos(2.0 * M_PI * static_cast<double>(i) / kTemplateFrame);
    sin_t[i] = std::sin(2.0 * M_PI * static_cast<double>(i) / kTemplateFrame);
  }
  std::vector<std::vector<double>> out;
  std::vector<double> x(kTemplateFrame), power(n_bins);
  for (std::size_t start = 0; start + kTemplateFrame <= wav.samples.size(); start += kTemplateHop) {
    for (std::size_t i = 0; i < kTemplateFrame; ++i) x[i] = window[i] * wav.samples[start + i];
    for (std::size_t k = 1; k <= n_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < kTemplateFrame; ++i) {
        const std::size_t idx = (k * i) % kTemplateFrame;
        re += x[i] * cos_t[idx];
        im -= x[i] * sin_t[idx];
      }
      power[k - 1] = re * re + im * im;
    }
    out.push_back(band_log_power(power));
  }
  return out;
}

/// Nominal log band response of a phone: the resonator cascade evaluated on
/// the DFT bin frequencies.
inline std::vector<double> phone_template(const synth::Phone& ph) {
  const std::size_t n_bins = kTemplateFrame / 2;
  std::vector<double> power(n_bins);
  for (std::size_t k = 1; k <= n_bins; ++k) {
    const double w = 2.0 * M_PI * static_cast<double>(k) / kTemplateFrame;
    const std::complex<double> z1 = std::polar(1.0, -w);
    std::complex<double> h = 1.0;
    for (std::size_t f = 0; f < synth::kFormants; ++f) {
      const double r = std::exp(-M_PI * ph.bandwidth[f] / kSampleRate);
      const double theta = 2.0 * M_PI * ph.freq[f] / kSampleRate;
      h *= (1.0 - r) / (1.0 - 2.0 * r * std::cos(theta) * z1 + r * r * z1 * z1);
    }
    power[k - 1] = std::norm(h);
  }
  return band_log_power(power);
}

/// Removes each row's own mean (per-frame gain).
inline void subtract_row_means(std::vector<std::vector<double>>& rows) {
  for (auto& r : rows) {
    double m = 0.0;
    for (double v : r) m += v / static_cast<double>(r.size());
    for (double& v : r) v -= m;
  }
}

/// Log band response of the first-order channel 1 + a z^-1.
inline std::vector<double> tilt_response(double a) {
  const std::size_t n_bins = kTemplateFrame / 2;
  std::vector<double> power(n_bins);
  for (std::size_t k = 1; k <= n_bins; ++k) {
    const double w = 2.0 * M_PI * static_cast<double>(k) / kTemplateFrame;
    power[k - 1] = std::norm(1.0 + a * std::polar(1.0, -w));
  }
  return band_log_power(power);
}

/// Identification rate on the manifest's test split for a corpus generated
/// from `spec`. Channel tilt is unknown to the classifier and searched on a
/// grid per (utterance, language).
inline double template_classifier_idr(const CorpusManifest& manifest, const SynthSpec& spec) {
  const auto langs = synth::make_languages(spec);
  std::vector<std::vector<double>> tilts;
  for (int i = -14; i <= 14; ++i) tilts.push_back(tilt_response(0.05 * i));
  // templates[l][a][p]: phone p of language l through tilt a, frame-gain removed.
  std::vector<std::vector<std::vector<std::vector<double>>>> templates(langs.size());
  for (std::size_t l = 0; l < langs.size(); ++l)
    for (const auto& tilt : tilts) {
      std::vector<std::vector<double>> set;
      for (std::size_t p = 0; p < synth::kPhones; ++p) {
        auto t = phone_template(langs[l].phones[p]);
        for (std::size_t i = 0; i < kTemplateBands; ++i) t[i] += tilt[i];
        set.push_back(std::move(t));
      }
      subtract_row_means(set);
      templates[l].push_back(std::move(set));
    }
  std::size_t correct = 0, total = 0;
  for (const auto* r : manifest.split(Split::kTest)) {
    auto frames = frame_band_spectra(read_wav(manifest.resolve(*r)));
    subtract_row_means(frames);
    std::size_t best = 0;
    double best_cost = INFINITY;
    for (std::size_t l = 0; l < langs.size(); ++l) {
      for (const auto& set : templates[l]) {
        double cost = 0.0;
        for (const auto& f : frames) {
          double nearest = INFINITY;
          for (const auto& t : set) {
            double d = 0.0;
            for (std::size_t i = 0; i < kTemplateBands; ++i) d += (f[i] - t[i]) * (f[i] - t[i]);
            nearest = std::min(nearest, d);
          }
          cost += nearest;
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = l;
        }
      }
    }
    correct += best == manifest.column_of(r->language) ? 1 : 0;
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace olr::testing
