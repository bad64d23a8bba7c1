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

#ifndef MEMFAIL_FEATURES_H_
#define MEMFAIL_FEATURES_H_

#include <array>
#include <bitset>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memfail/common.h"
#include "memfail/ingest.h"
#include "memfail/labeling.h"

namespace memfail {

// Feature families:
//   1 per-code MCA id / transaction counts
//   2 per location level: row count, distinct values, variance
//   3 per kernel flag: count of true values
//   4 manufacturer / vendor codes
//   5 ratios among MCA, address and kernel error counts
//   6 inter-arrival gap mean / variance per table
//   7 per location level: errors at the most-hit value
//   8 distinct complete quintuples
inline constexpr int kNumFamilies = 8;
using FamilySet = std::bitset<kNumFamilies + 1>;  // bit f = family f

FamilySet AllFamilies();
FamilySet FamiliesUpTo(int last);
FamilySet ParseFamilies(const std::string& text);  // "1-4", "1,2,5", "1-8"
std::string FamiliesToString(const FamilySet& families);

enum class Scope { kCumulative, kTrailingDay, kStatic };

const char* ScopeName(Scope scope);

// Trailing-day scope covers (ts - kTrailingWindow, ts].
inline constexpr Minute kTrailingWindow = kMinutesPerDay;

struct FeatureSpec {
  std::string name;
  int family = 0;
  Scope scope = Scope::kCumulative;

  // Name without the scope prefix; features that differ only in scope share
  // a group.
  std::string group() const;
};

// Categorical values frozen at training time. Codes start at 1; 0 is the
// reserved UNKNOWN code.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> sorted_values);

  // 1-based code, or 0 for a value not seen at build time.
  int Encode(const std::string& value) const;
  // 0-based slot in `values()`, or -1.
  int Slot(const std::string& value) const { return Encode(value) - 1; }
  const std::vector<std::string>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const Vocabulary& other) const {
    return values_ == other.values_;
  }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, int> codes_;
};

// Ordered list of features plus the vocabularies that define them.
class FeatureSchema {
 public:
  FeatureSchema() = default;  // empty, zero features

  // Vocabularies are taken from `store`; only `families` are emitted.
  static FeatureSchema Build(const EventStore& store,
                             FamilySet families = AllFamilies());

  std::size_t size() const { return specs_.size(); }
  const std::vector<FeatureSpec>& specs() const { return specs_; }
  const FeatureSpec& spec(std::size_t i) const { return specs_[i]; }
  std::optional<std::size_t> IndexOf(const std::string& name) const;
  const FamilySet& families() const { return families_; }

  const Vocabulary& mca_codes() const { return mca_codes_; }
  const Vocabulary& transaction_codes() const { return transaction_codes_; }
  const Vocabulary& manufacturers() const { return manufacturers_; }
  const Vocabulary& vendors() const { return vendors_; }

  // FNV-1a over the feature names and categorical vocabularies.
  std::uint64_t fingerprint() const { return fingerprint_; }

  // Text format: a header, the vocabularies, then one tab-separated
  // "index name family scope" line per feature.
  void Write(std::ostream& out) const;
  static FeatureSchema Read(std::istream& in);

  bool operator==(const FeatureSchema& other) const {
    return fingerprint_ == other.fingerprint_ && specs_.size() == other.specs_.size();
  }

  // Start offset of each block in a vector, -1 when the family is absent.
  struct ScopeLayout {
    int mca = -1, txn = -1;       // family 1
    int location = -1;            // family 2: 3 per level
    int kernel = -1;              // family 3
    int ratio = -1;               // family 5: 3 ratios
    int gap = -1;                 // family 6: mean, var per table
    int top_count = -1;           // family 7
    int quintuple = -1;           // family 8
  };
  const ScopeLayout& layout(Scope scope) const {
    return scope == Scope::kCumulative ? cumulative_ : trailing_;
  }
  int meta_offset() const { return meta_offset_; }  // family 4

 private:
  FeatureSchema(FamilySet families, Vocabulary mca, Vocabulary txn,
                Vocabulary manufacturers, Vocabulary vendors);

  FamilySet families_;
  Vocabulary mca_codes_;
  Vocabulary transaction_codes_;
  Vocabulary manufacturers_;
  Vocabulary vendors_;
  std::vector<FeatureSpec> specs_;
  std::unordered_map<std::string, std::size_t> index_;
  ScopeLayout cumulative_;
  ScopeLayout trailing_;
  int meta_offset_ = -1;
  std::uint64_t fingerprint_ = 0;
};

// Feature names of the three ratios (family 5).
inline constexpr std::array<const char*, 3> kRatioNames = {
    "ratio.mce_per_addr", "ratio.addr_per_kernel", "ratio.kernel_per_mce"};

// Per-server event lists, for repeated batch extraction over one store.
class ServerEventIndex {
 public:
  explicit ServerEventIndex(const EventStore& store);

  struct Events {
    std::vector<const MceEvent*> mce;
    std::vector<const AddressEvent*> address;
    std::vector<const KernelEvent*> kernel;
  };
  // nullptr for a server without events.
  const Events* Find(const std::string& server_id) const;
  const EventStore& store() const { return *store_; }

 private:
  const EventStore* store_;
  std::unordered_map<std::string, Events> by_server_;
};

// Features of `server_id` observed at minute `ts`, recomputed from the raw
// events with ts' <= ts. Throws DataError for an unknown server.
std::vector<double> Extract(const ServerEventIndex& index,
                            const FeatureSchema& schema,
                            const std::string& server_id, Minute ts);
std::vector<double> Extract(const EventStore& store, const FeatureSchema& schema,
                            const std::string& server_id, Minute ts);

using FeatureMask = std::vector<std::uint8_t>;

// Zeroes positions whose mask entry is 0. Throws on a length mismatch.
std::vector<double> ApplyMask(std::span<const double> vector,
                              const FeatureMask& mask);
void ApplyMaskInPlace(std::span<double> vector, const FeatureMask& mask);

inline FeatureMask FullMask(const FeatureSchema& schema) {
  return FeatureMask(schema.size(), 1);
}

// Drops the kernel/MCA ratio and the distinct-quintuple count in both scopes.
FeatureMask OverfitRemovalMask(const FeatureSchema& schema);

// Running per-server aggregates fed one minute at a time. Produces the same
// vectors as Extract without rescanning history. Events must be added in
// non-decreasing ts order per server.
class StreamingFeatureState {
 public:
  explicit StreamingFeatureState(const FeatureSchema& schema,
                                 const std::map<std::string, ServerMeta>& meta);
  ~StreamingFeatureState();
  StreamingFeatureState(StreamingFeatureState&&) noexcept;
  StreamingFeatureState& operator=(StreamingFeatureState&&) noexcept;

  void Add(const MceEvent& e);
  void Add(const AddressEvent& e);
  void Add(const KernelEvent& e);

  // Features of `server_id` at `ts`; `ts` must not precede any added event
  // of that server. Unknown servers raise DataError.
  void Compute(const std::string& server_id, Minute ts, std::span<double> out);
  std::vector<double> Compute(const std::string& server_id, Minute ts);

  // Largest event ts accepted so far, -1 before any event.
  Minute max_event_ts() const { return max_event_ts_; }

 private:
  struct ServerState;
  ServerState& StateFor(const std::string& server_id, Minute ts);

  const FeatureSchema* schema_;
  const std::map<std::string, ServerMeta>* meta_;
  std::unordered_map<std::string, std::unique_ptr<ServerState>> servers_;
  Minute max_event_ts_ = -1;
};

// Fills `features` for every sample with one chronological pass over the
// store.
void ExtractAll(const EventStore& store, const FeatureSchema& schema,
                std::span<LabeledSample> samples);

// Population variance of n integers from their sum and sum of squares.
double PopulationVariance(std::int64_t n, std::int64_t sum, std::int64_t sum_sq);

}  // namespace memfail

#endif  // MEMFAIL_FEATURES_H_
