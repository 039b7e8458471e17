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

// Submission score files and the evaluation harness.
//
// Score file: one line per test segment, `segment_id l_1 ... l_N`, the N
// columns in canonical language order (ct-cn zh-cn id-id ja-jp ru-ru ko-kr
// vi-vn, restricted to the manifest's languages). Scores are decimal reals or
// the literal `-inf`. Lines starting with '#' are comments, except that
// `#languages: <codes...>` asserts the column order. Test segments missing
// from the file are lost trials and score -inf in every column.

#pragma once

#include <filesystem>
#include <unordered_map>

#include "olr/common.hpp"
#include "olr/corpus.hpp"
#include "olr/metrics.hpp"

namespace olr {

inline std::string format_score(double v) {
  if (v == -kInf) return "-inf";
  return strprintf("%.6f", v);
}

inline void write_score_file(const TrialScores& trials, std::ostream& out) {
  out << "#languages:";
  for (const auto& l : trials.languages) out << ' ' << l.str();
  out << '\n';
  for (std::size_t s = 0; s < trials.size(); ++s) {
    out << trials.segment_ids[s];
    for (Eigen::Index i = 0; i < trials.scores[s].size(); ++i) out << ' ' << format_score(trials.scores[s](i));
    out << '\n';
  }
}

inline void write_score_file(const TrialScores& trials, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_score_file(trials, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

/// Finite decimal real or the literal "-inf".
inline std::optional<double> parse_score_token(const std::string& tok) {
  if (tok == "-inf") return -kInf;
  if (tok.empty()) return std::nullopt;
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  // strtod also takes hex floats; submissions are decimal.
  if (tok.find_first_of("xX") != std::string::npos) return std::nullopt;
  return v;
}

/// Reads a submission against the manifest's test split (manifest order).
inline TrialScores parse_score_file(std::istream& in, const CorpusManifest& manifest,
                                    const std::string& source = "<scores>") {
  TrialScores trials;
  trials.languages = manifest.languages;
  const std::size_t n_cols = manifest.languages.size();
  std::unordered_map<std::string, std::size_t> test_index;
  for (const SegmentRecord* r : manifest.split(Split::kTest)) {
    test_index.emplace(r->segment_id, trials.size());
    trials.add(r->segment_id, Vector::Constant(static_cast<Eigen::Index>(n_cols), -kInf), manifest.column_of(r->language),
               true);
  }
  std::vector<bool> seen(trials.size(), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fail = [&](const std::string& why) {
      return DataError(strprintf("%s:%zu: %s", source.c_str(), line_no, why.c_str()));
    };
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields[0][0] == '#') {
      if (fields[0] == "#languages:") {
        if (fields.size() - 1 != n_cols) throw fail("#languages header does not match the manifest's languages");
        for (std::size_t i = 0; i < n_cols; ++i)
          if (fields[i + 1] != manifest.languages[i].str())
            throw fail("#languages header does not match the manifest's canonical column order");
      }
      continue;
    }
    if (fields.size() != n_cols + 1)
      throw fail(strprintf("expected segment id and %zu scores, found %zu scores", n_cols, fields.size() - 1));
    const auto it = test_index.find(fields[0]);
    if (it == test_index.end()) throw fail("unknown test segment '" + fields[0] + "'");
    if (seen[it->second]) throw fail("duplicate line for segment '" + fields[0] + "'");
    seen[it->second] = true;
    Vector& row = trials.scores[it->second];
    for (std::size_t i = 0; i < n_cols; ++i) {
      const auto v = parse_score_token(fields[i + 1]);
      if (!v) throw fail("malformed score '" + fields[i + 1] + "'");
      row(static_cast<Eigen::Index>(i)) = *v;
    }
    trials.lost[it->second] = false;
  }
  return trials;
}

inline TrialScores parse_score_file(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file '" + path.string() + "'");
  return parse_score_file(in, manifest, path.string());
}

inline MetricReport evaluate_submission(const std::filesystem::path& score_path, const CorpusManifest& manifest,
                                        const MetricConfig& cfg = {}) {
  if (manifest.split(Split::kTest).empty()) throw DataError("manifest has no test segments to evaluate");
  return compute_report(parse_score_file(score_path, manifest), cfg);
}

}  // namespace olr
