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

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace olr {

using Json = nlohmann::json;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. The CLI maps each category to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (caller mistake).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, missing or inconsistent input data (files, manifests, scores).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-convergence, non-normalizable vector).
class NumericError : public Error {
 public:
  using Error::Error;
};

inline std::string strprintf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  int n = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(n > 0 ? static_cast<std::size_t>(n) : 0, '\0');
  if (n > 0) std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

inline std::atomic<int>& log_level_storage() {
  static std::atomic<int> level{static_cast<int>(LogLevel::kInfo)};
  return level;
}

inline void set_log_level(LogLevel level) { log_level_storage() = static_cast<int>(level); }

inline void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > log_level_storage().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::clog << "[olr] " << msg << '\n';
}

inline void log_info(const std::string& msg) { log_message(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::kDebug, msg); }

// ---------------------------------------------------------------------------
// Random numbers
//
// Everything is derived from raw 64-bit mt19937_64 output, so generated data
// is identical across standard library implementations (std::*_distribution
// is not).

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mix a parent seed with a stream index to get an independent child seed.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Parallelism
//
// Work is cut into blocks whose boundaries do not depend on the worker count,
// and block results are combined in block order. Results are therefore
// bit-identical for any number of workers.

inline std::atomic<std::size_t>& worker_storage() {
  static std::atomic<std::size_t> workers{1};
  return workers;
}

inline void set_num_workers(std::size_t n) { worker_storage() = std::max<std::size_t>(1, n); }
inline std::size_t num_workers() { return worker_storage().load(); }

/// Calls fn(i) for i in [0, n) on up to num_workers() threads.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(num_workers(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Deterministic map-reduce over [0, n): `make()` builds an empty accumulator,
/// `add(acc, i)` folds item i, `merge(acc, other)` combines two accumulators.
template <typename Acc, typename Make, typename Add, typename Merge>
Acc block_reduce(std::size_t n, std::size_t block_size, Make&& make, Add&& add, Merge&& merge) {
  block_size = std::max<std::size_t>(1, block_size);
  const std::size_t n_blocks = (n + block_size - 1) / block_size;
  std::vector<Acc> partial;
  partial.reserve(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) partial.push_back(make());
  parallel_for(n_blocks, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * block_size);
    for (std::size_t i = b * block_size; i < end; ++i) add(partial[b], i);
  });
  Acc total = make();
  for (auto& p : partial) merge(total, p);
  return total;
}

// ---------------------------------------------------------------------------
// Numerics

/// log(sum(exp(values))) without overflow; -inf for an empty or all -inf input.
template <typename Range>
double log_sum_exp(const Range& values) {
  double peak = -kInf;
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// ---------------------------------------------------------------------------
// JSON model envelope: {"format": "olr-model", "type": ..., "version": ...,
// ...payload}. Matrices are flattened row-major.

inline constexpr int kEnvelopeVersion = 1;

inline Json make_envelope(std::string_view type) {
  Json j;
  j["format"] = "olr-model";
  j["type"] = std::string(type);
  j["version"] = kEnvelopeVersion;
  return j;
}

inline void check_envelope(const Json& j, std::string_view type) {
  if (!j.is_object() || j.value("format", "") != "olr-model")
    throw DataError("not an olr-model JSON envelope");
  if (j.value("type", "") != type)
    throw DataError("expected model type '" + std::string(type) + "', found '" + j.value("type", "") + "'");
  if (j.value("version", 0) != kEnvelopeVersion)
    throw DataError(strprintf("unsupported %s envelope version %d", std::string(type).c_str(), j.value("version", 0)));
}

inline Json matrix_to_json(const Eigen::Ref<const Matrix>& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

inline Matrix matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows * cols))
    throw DataError(strprintf("matrix payload size mismatch: expected %lld values", static_cast<long long>(rows * cols)));
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[k++].get<double>();
  return m;
}

inline Json vector_to_json(const Eigen::Ref<const Vector>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector vector_from_json(const Json& j, Eigen::Index size) {
  if (!j.is_array() || (size >= 0 && j.size() != static_cast<std::size_t>(size)))
    throw DataError("vector payload size mismatch");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << j.dump(1) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError("invalid JSON in '" + path + "': " + e.what());
  }
}

/// Splits on runs of spaces/tabs.
inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace olr
