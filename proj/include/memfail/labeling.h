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

#ifndef MEMFAIL_LABELING_H_
#define MEMFAIL_LABELING_H_

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "memfail/common.h"
#include "memfail/ingest.h"

namespace memfail {

// ati of a sample from a server that never fails.
inline constexpr Minute kNegativeAti = -1;

inline constexpr Minute kDefaultWindowMinutes = 1440;
inline constexpr Minute kReducedWindowMinutes = 540;
inline constexpr double kDefaultKeepFraction = 0.5;

using TicketIndex = std::unordered_map<std::string, Minute>;

// server_id -> failure_ts. Expects at most one ticket per server.
TicketIndex IndexTickets(const std::vector<FailureTicket>& tickets);

// Minutes from `ts` until the server's failure, kNegativeAti for a server
// without a ticket, or nullopt when the server has already failed at `ts`.
std::optional<Minute> ComputeAti(const std::string& server_id, Minute ts,
                                 const TicketIndex& tickets);

struct LabeledSample {
  std::string server_id;
  Minute ts = 0;
  std::vector<double> features;
  int label = 0;
  Minute ati = kNegativeAti;

  bool operator==(const LabeledSample&) const = default;
};

// One sample per (server, minute) with at least one event in any table,
// ordered by (ts, server_id). Minutes with 1 <= ati <= window_minutes are
// positive, ati == -1 negative; everything else is dropped.
std::vector<LabeledSample> LabelDataset(const EventStore& store,
                                        Minute window_minutes);

// Keeps every positive and exactly round(keep_fraction * negatives)
// negatives, chosen without replacement. Relative order is preserved.
std::vector<LabeledSample> DownsampleNegatives(
    const std::vector<LabeledSample>& samples, double keep_fraction,
    std::uint64_t seed);

struct AtiSummary {
  std::size_t count = 0;
  Minute max = 0;
  Minute p25 = 0;
  Minute p50 = 0;
  Minute p75 = 0;
};

// Nearest-rank quartiles over the ati of positive samples.
AtiSummary SummarizeAti(const std::vector<LabeledSample>& samples);

}  // namespace memfail

#endif  // MEMFAIL_LABELING_H_
