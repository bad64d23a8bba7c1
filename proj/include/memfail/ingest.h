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

#ifndef MEMFAIL_INGEST_H_
#define MEMFAIL_INGEST_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "memfail/common.h"

namespace memfail {

// Location field value for an address the MCA could not resolve.
inline constexpr std::int64_t kUnknownLocation = -1;

inline constexpr std::size_t kNumKernelFlags = 11;
inline constexpr std::array<std::string_view, kNumKernelFlags> kKernelFlagNames =
    {"sel",      "hwerr_n",  "hwerr_s", "hwerr_m",  "hwerr_p", "hwerr_fl",
     "hwerr_r",  "hwerr_cd", "cmci_sub", "hwerr_pi", "hwerr_o"};

inline constexpr std::size_t kNumLocationLevels = 5;
inline constexpr std::array<std::string_view, kNumLocationLevels>
    kLocationLevelNames = {"memory", "rank", "bank", "row", "col"};

struct MceEvent {
  std::string server_id;
  Minute ts = 0;
  std::string mca_id;
  std::string transaction;

  bool operator==(const MceEvent&) const = default;
};

struct AddressEvent {
  std::string server_id;
  Minute ts = 0;
  // memory_id, rank_id, bank_id, row, col; kUnknownLocation when unresolved.
  std::array<std::int64_t, kNumLocationLevels> location{};

  bool complete() const {
    for (auto v : location) {
      if (v < 0) return false;
    }
    return true;
  }

  bool operator==(const AddressEvent&) const = default;
};

struct KernelEvent {
  std::string server_id;
  Minute ts = 0;
  std::array<std::uint8_t, kNumKernelFlags> flags{};

  bool operator==(const KernelEvent&) const = default;
};

struct FailureTicket {
  std::string server_id;
  Minute failure_ts = 0;

  bool operator==(const FailureTicket&) const = default;
};

struct ServerMeta {
  std::string server_id;
  std::string manufacturer;
  std::string vendor;

  bool operator==(const ServerMeta&) const = default;
};

// The three event tables plus metadata and tickets. Event lists are sorted by
// (ts, server_id), stable with respect to input order; tickets by server_id.
struct EventStore {
  std::vector<MceEvent> mce;
  std::vector<AddressEvent> address;
  std::vector<KernelEvent> kernel;
  std::map<std::string, ServerMeta> meta;
  std::vector<FailureTicket> tickets;
  std::string epoch = "synthetic";

  bool operator==(const EventStore&) const = default;

  // Sorts every table into canonical order.
  void Canonicalize();

  // Throws DataError when an invariant is broken (negative ts, unknown
  // server, bad location value, unsorted table, duplicate ticket).
  void Validate() const;

  // Total number of event rows across the three tables.
  std::size_t num_events() const {
    return mce.size() + address.size() + kernel.size();
  }
};

// Canonical file names inside a dataset directory.
struct DatasetPaths {
  std::filesystem::path mce;
  std::filesystem::path address;
  std::filesystem::path kernel;
  std::filesystem::path failure;
  std::filesystem::path meta;

  static DatasetPaths InDirectory(const std::filesystem::path& dir);
};

// Parses the five CSV tables. Malformed rows raise DataError naming the file,
// line and column. Several tickets for one server keep the earliest and print
// a warning to stderr.
EventStore ParseTables(const DatasetPaths& paths);

inline EventStore LoadDataset(const std::filesystem::path& dir) {
  return ParseTables(DatasetPaths::InDirectory(dir));
}

// Writes the five CSV tables in canonical order. Creates `dir` if needed.
void WriteTables(const EventStore& store, const std::filesystem::path& dir);

struct SyntheticConfig {
  int n_servers = 50;
  int n_days = 30;
  double fail_fraction = 0.2;
  Minute precursor_window_minutes = 540;
  // Event-rate multiplier inside the precursor window.
  double burst_intensity = 40.0;
  int mca_vocab_size = 6;
  int transaction_vocab_size = 4;
  // Background MCE events per server per day.
  double background_events_per_day = 6.0;
  // Healthy servers that also get an error burst, but with scattered
  // addresses instead of the concentrated row/column repeats of a failing
  // DIMM.
  double decoy_fraction = 0.15;
  // Plants a spurious address pattern whose only visible effect is the
  // distinct complete quintuple count. Before `drift_day` the pattern marks
  // servers about to fail, afterwards it marks healthy ones. Half of the
  // pre-drift failures also lose their burst, leaving the pattern as their
  // only sign.
  bool plant_quintuple_drift = false;
  int drift_day = 20;
};

// Throws ConfigError naming the first invalid field.
void ValidateSyntheticConfig(const SyntheticConfig& config);

// Deterministic for a fixed (config, seed).
EventStore GenerateSynthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace memfail

#endif  // MEMFAIL_INGEST_H_
