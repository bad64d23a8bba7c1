/*
 * Copyright 2026 The memfail Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MEMFAIL_COMMON_H_
#define MEMFAIL_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace memfail {

// Minutes since the dataset epoch.
using Minute = std::int64_t;

inline constexpr Minute kMinutesPerDay = 1440;

// Bad input data: malformed files, schema violations, unknown servers,
// incompatible model files. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// An invalid configuration value. `field()` names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Portable seeded generator. Every random decision in the library goes
// through this class so results are identical across standard libraries
// (std::uniform_int_distribution and std::shuffle are implementation
// defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // splitmix64.
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Derives an independent stream, e.g. one per server.
  Rng fork(std::uint64_t salt) {
    Rng child(next() ^ (salt * 0xD1B54A32D192ED03ULL));
    child.next();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace memfail

#endif  // MEMFAIL_COMMON_H_
