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

#include "memfail/labeling.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace memfail {

TicketIndex IndexTickets(const std::vector<FailureTicket>& tickets) {
  TicketIndex index;
  index.reserve(tickets.size());
  for (const auto& t : tickets) {
    auto [it, inserted] = index.emplace(t.server_id, t.failure_ts);
    if (!inserted) it->second = std::min(it->second, t.failure_ts);
  }
  return index;
}

std::optional<Minute> ComputeAti(const std::string& server_id, Minute ts,
                                 const TicketIndex& tickets) {
  auto it = tickets.find(server_id);
  if (it == tickets.end()) return kNegativeAti;
  if (it->second <= ts) return std::nullopt;
  return it->second - ts;
}

std::vector<LabeledSample> LabelDataset(const EventStore& store,
                                        Minute window_minutes) {
  if (window_minutes < 1) {
    throw ConfigError("window_minutes", "must be >= 1");
  }
  std::set<std::pair<Minute, std::string>> minutes;
  for (const auto& e : store.mce) minutes.emplace(e.ts, e.server_id);
  for (const auto& e : store.address) minutes.emplace(e.ts, e.server_id);
  for (const auto& e : store.kernel) minutes.emplace(e.ts, e.server_id);

  const TicketIndex tickets = IndexTickets(store.tickets);
  std::vector<LabeledSample> samples;
  samples.reserve(minutes.size());
  for (const auto& [ts, server] : minutes) {
    const auto ati = ComputeAti(server, ts, tickets);
    if (!ati) continue;
    LabeledSample s;
    s.server_id = server;
    s.ts = ts;
    s.ati = *ati;
    if (*ati == kNegativeAti) {
      s.label = 0;
    } else if (*ati <= window_minutes) {
      s.label = 1;
    } else {
      continue;
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<LabeledSample> DownsampleNegatives(
    const std::vector<LabeledSample>& samples, double keep_fraction,
    std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("keep_fraction", "must be in (0, 1]");
  }
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label == 0) negatives.push_back(i);
  }
  const auto keep = static_cast<std::size_t>(
      std::llround(keep_fraction * static_cast<double>(negatives.size())));

  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(negatives.size() - i);
    std::swap(negatives[i], negatives[j]);
  }
  std::vector<bool> retained(samples.size(), false);
  for (std::size_t i = 0; i < keep; ++i) retained[negatives[i]] = true;

  std::vector<LabeledSample> out;
  out.reserve(samples.size() - negatives.size() + keep);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label == 1 || retained[i]) out.push_back(samples[i]);
  }
  return out;
}

AtiSummary SummarizeAti(const std::vector<LabeledSample>& samples) {
  std::vector<Minute> atis;
  for (const auto& s : samples) {
    if (s.label == 1) atis.push_back(s.ati);
  }
  if (atis.empty()) throw DataError("ati summary: no positive samples");
  std::sort(atis.begin(), atis.end());
  const auto nearest_rank = [&](int percent) {
    const std::size_t n = atis.size();
    // ceil(percent / 100 * n), computed in integers.
    std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
    rank = std::clamp<std::size_t>(rank, 1, n);
    return atis[rank - 1];
  };
  AtiSummary out;
  out.count = atis.size();
  out.max = atis.back();
  out.p25 = nearest_rank(25);
  out.p50 = nearest_rank(50);
  out.p75 = nearest_rank(75);
  return out;
}

}  // namespace memfail
