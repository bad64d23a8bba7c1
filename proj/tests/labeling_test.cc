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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "test_util.h"

namespace memfail {
namespace {

using testing::AddServer;
using testing::Mce;

LabeledSample Sample(int label, Minute ati = kNegativeAti) {
  LabeledSample s;
  s.label = label;
  s.ati = label ? ati : kNegativeAti;
  return s;
}

TEST(ComputeAtiTest, Examples) {
  const TicketIndex tickets = IndexTickets({{"S1", 1000}});
  EXPECT_EQ(ComputeAti("S1", 940, tickets), std::optional<Minute>(60));
  EXPECT_EQ(ComputeAti("S2", 940, tickets), std::optional<Minute>(kNegativeAti));
  EXPECT_EQ(ComputeAti("S1", 1005, tickets), std::nullopt);
  // Events in the failure minute are excluded too.
  EXPECT_EQ(ComputeAti("S1", 1000, tickets), std::nullopt);
}

EventStore WindowStore() {
  EventStore store;
  AddServer(&store, "S1");
  AddServer(&store, "S2");
  store.tickets = {{"S1", 1000}};
  store.mce = {Mce("S1", 400), Mce("S2", 500), Mce("S1", 900), Mce("S1", 1000),
               Mce("S1", 1200)};
  store.Canonicalize();
  return store;
}

TEST(LabelDatasetTest, ReducedWindowDropsDistantPositives) {
  const auto samples = LabelDataset(WindowStore(), kReducedWindowMinutes);
  // S1@400 has ati 600 > 540 and is dropped; S1@1000 and S1@1200 are past
  // the failure.
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].server_id, "S2");
  EXPECT_EQ(samples[0].label, 0);
  EXPECT_EQ(samples[0].ati, kNegativeAti);
  EXPECT_EQ(samples[1].server_id, "S1");
  EXPECT_EQ(samples[1].ts, 900);
  EXPECT_EQ(samples[1].ati, 100);
  EXPECT_EQ(samples[1].label, 1);
}

TEST(LabelDatasetTest, DefaultWindowKeepsBoth) {
  const auto samples = LabelDataset(WindowStore(), kDefaultWindowMinutes);
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0].ati, 600);
  EXPECT_EQ(samples[0].label, 1);
  EXPECT_EQ(samples[2].ati, 100);
}

TEST(LabelDatasetTest, OneSamplePerServerMinuteAcrossTables) {
  EventStore store;
  AddServer(&store, "S1");
  store.mce = {Mce("S1", 5), Mce("S1", 5)};
  store.address = {testing::Address("S1", 5, {1, 1, 1, 1, 1}),
                   testing::Address("S1", 7, {1, 1, 1, 1, 1})};
  store.kernel = {testing::Kernel("S1", 9)};
  store.Canonicalize();
  const auto samples = LabelDataset(store, kDefaultWindowMinutes);
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0].ts, 5);
  EXPECT_EQ(samples[1].ts, 7);
  EXPECT_EQ(samples[2].ts, 9);
  for (const auto& s : samples) EXPECT_EQ(s.label, 0);
}

// Independent re-derivation of the labeling rule from raw events.
std::map<std::pair<std::string, Minute>, Minute> OracleLabels(const EventStore& store,
                                                             Minute window) {
  std::map<std::string, Minute> failure;
  for (const auto& t : store.tickets) failure[t.server_id] = t.failure_ts;
  std::set<std::pair<std::string, Minute>> minutes;
  for (const auto& e : store.mce) minutes.insert({e.server_id, e.ts});
  for (const auto& e : store.address) minutes.insert({e.server_id, e.ts});
  for (const auto& e : store.kernel) minutes.insert({e.server_id, e.ts});
  std::map<std::pair<std::string, Minute>, Minute> out;
  for (const auto& key : minutes) {
    auto it = failure.find(key.first);
    if (it == failure.end()) {
      out[key] = -1;
    } else if (it->second - key.second >= 1 && it->second - key.second <= window) {
      out[key] = it->second - key.second;
    }
  }
  return out;
}

TEST(LabelDatasetTest, MatchesOracleOnSyntheticStore) {
  SyntheticConfig config;
  config.n_servers = 20;
  config.n_days = 6;
  config.fail_fraction = 0.3;
  const EventStore store = GenerateSynthetic(config, 21);
  for (Minute window : {Minute{60}, kReducedWindowMinutes, kDefaultWindowMinutes}) {
    const auto samples = LabelDataset(store, window);
    const auto oracle = OracleLabels(store, window);
    ASSERT_EQ(samples.size(), oracle.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const auto it = oracle.find({s.server_id, s.ts});
      ASSERT_NE(it, oracle.end());
      EXPECT_EQ(s.ati, it->second);
      // Label/ati consistency.
      EXPECT_EQ(s.label == 1, s.ati >= 1 && s.ati <= window);
      EXPECT_EQ(s.label == 0, s.ati == kNegativeAti);
      if (i > 0) {
        const auto& p = samples[i - 1];
        EXPECT_TRUE(p.ts < s.ts || (p.ts == s.ts && p.server_id < s.server_id));
      }
    }
  }
}

TEST(LabelDatasetTest, PositivesMonotoneInWindow) {
  SyntheticConfig config;
  config.n_servers = 20;
  config.n_days = 6;
  config.fail_fraction = 0.3;
  const EventStore store = GenerateSynthetic(config, 22);
  const auto positives = [&](Minute w) {
    std::set<std::pair<std::string, Minute>> out;
    for (const auto& s : LabelDataset(store, w)) {
      if (s.label == 1) out.insert({s.server_id, s.ts});
    }
    return out;
  };
  const auto narrow = positives(kReducedWindowMinutes);
  const auto wide = positives(kDefaultWindowMinutes);
  EXPECT_FALSE(narrow.empty());
  for (const auto& key : narrow) EXPECT_TRUE(wide.contains(key));
  EXPECT_GT(wide.size(), narrow.size());
}

TEST(DownsampleTest, KeepsAllPositivesAndRoundedNegatives) {
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(Sample(0));
  for (int i = 0; i < 10; ++i) samples.push_back(Sample(1, 5 + i));
  const auto kept = DownsampleNegatives(samples, 0.5, 9);
  int pos = 0, neg = 0;
  for (const auto& s : kept) (s.label ? pos : neg)++;
  EXPECT_EQ(pos, 10);
  EXPECT_EQ(neg, 50);
}

TEST(DownsampleTest, RoundingAndIdentity) {
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 7; ++i) samples.push_back(Sample(0));
  samples.push_back(Sample(1, 3));
  // round(0.5 * 7) = 4 (half away from zero).
  EXPECT_EQ(DownsampleNegatives(samples, 0.5, 1).size(), 5u);
  EXPECT_EQ(DownsampleNegatives(samples, 0.3, 1).size(), 3u);  // round(2.1) = 2
  EXPECT_EQ(DownsampleNegatives(samples, 1.0, 1), samples);
  EXPECT_THROW(DownsampleNegatives(samples, 0.0, 1), ConfigError);
  EXPECT_THROW(DownsampleNegatives(samples, 1.5, 1), ConfigError);
}

TEST(DownsampleTest, DeterministicAndOrderPreserving) {
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 200; ++i) {
    LabeledSample s = Sample(i % 9 == 0 ? 1 : 0, 10);
    s.ts = i;
    samples.push_back(s);
  }
  const auto a = DownsampleNegatives(samples, 0.5, 42);
  const auto b = DownsampleNegatives(samples, 0.5, 42);
  const auto c = DownsampleNegatives(samples, 0.5, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].ts, a[i].ts);
}

TEST(DownsampleTest, PropertyOverRandomSizes) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_neg = 1 + static_cast<int>(rng.below(300));
    const int n_pos = static_cast<int>(rng.below(20));
    const double keep = 0.05 + 0.95 * rng.uniform();
    std::vector<LabeledSample> samples;
    for (int i = 0; i < n_neg + n_pos; ++i) {
      samples.push_back(Sample(rng.below(n_neg + n_pos) < static_cast<unsigned>(n_pos)));
    }
    int pos = 0, neg = 0;
    for (const auto& s : samples) (s.label ? pos : neg)++;
    const auto kept = DownsampleNegatives(samples, keep, trial);
    int kpos = 0, kneg = 0;
    for (const auto& s : kept) (s.label ? kpos : kneg)++;
    EXPECT_EQ(kpos, pos);
    EXPECT_EQ(kneg, std::llround(keep * neg));
  }
}

TEST(AtiSummaryTest, NearestRankQuartiles) {
  const std::vector<LabeledSample> samples = {Sample(1, 300), Sample(0), Sample(1, 100),
                                              Sample(1, 400), Sample(1, 200)};
  const AtiSummary s = SummarizeAti(samples);
  EXPECT_EQ(s.count, 4u);
  EXPECT_EQ(s.max, 400);
  EXPECT_EQ(s.p25, 100);
  EXPECT_EQ(s.p50, 200);
  EXPECT_EQ(s.p75, 300);
}

TEST(AtiSummaryTest, SingleAndConstant) {
  const AtiSummary one = SummarizeAti({Sample(1, 60)});
  EXPECT_EQ(one.p25, 60);
  EXPECT_EQ(one.p50, 60);
  EXPECT_EQ(one.p75, 60);
  EXPECT_EQ(one.max, 60);
  const AtiSummary same = SummarizeAti({Sample(1, 7), Sample(1, 7), Sample(1, 7)});
  EXPECT_EQ(same.p25, 7);
  EXPECT_EQ(same.max, 7);
}

TEST(AtiSummaryTest, NoPositivesIsError) {
  EXPECT_THROW(SummarizeAti({Sample(0), Sample(0)}), DataError);
}

TEST(AtiSummaryTest, QuartilesOrdered) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabeledSample> samples;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) samples.push_back(Sample(1, 1 + rng.below(1440)));
    const AtiSummary s = SummarizeAti(samples);
    EXPECT_LE(s.p25, s.p50);
    EXPECT_LE(s.p50, s.p75);
    EXPECT_LE(s.p75, s.max);
  }
}

}  // namespace
}  // namespace memfail
