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

#include "memfail/features.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "test_util.h"

namespace memfail {
namespace {

using testing::AddServer;
using testing::Address;
using testing::Kernel;
using testing::Mce;

double PopVar(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(xs.size());
}

// Recomputes one feature from its name by scanning the raw tables.
double OracleFeature(const EventStore& store, const FeatureSchema& schema,
                     const std::string& server, Minute ts, const FeatureSpec& spec) {
  const std::string& name = spec.name;
  if (spec.scope == Scope::kStatic) {
    const ServerMeta& m = store.meta.at(server);
    if (name == "meta.manufacturer") return schema.manufacturers().Encode(m.manufacturer);
    return schema.vendors().Encode(m.vendor);
  }
  const Minute lo = spec.scope == Scope::kCumulative ? -1 : ts - kMinutesPerDay;
  const auto in_scope = [&](const auto& e) {
    return e.server_id == server && e.ts > lo && e.ts <= ts;
  };
  std::vector<MceEvent> mce;
  std::vector<AddressEvent> addr;
  std::vector<KernelEvent> kernel;
  for (const auto& e : store.mce) if (in_scope(e)) mce.push_back(e);
  for (const auto& e : store.address) if (in_scope(e)) addr.push_back(e);
  for (const auto& e : store.kernel) if (in_scope(e)) kernel.push_back(e);

  const std::string body = name.substr(name.find('.') + 1);
  const auto starts = [&](const std::string& p) { return body.rfind(p, 0) == 0; };
  const auto code_of = [](const std::string& s) { return s == "(empty)" ? "" : s; };
  if (starts("mca.")) {
    const std::string code = code_of(body.substr(4));
    return static_cast<double>(std::count_if(mce.begin(), mce.end(),
                                             [&](auto& e) { return e.mca_id == code; }));
  }
  if (starts("txn.")) {
    const std::string code = code_of(body.substr(4));
    return static_cast<double>(std::count_if(
        mce.begin(), mce.end(), [&](auto& e) { return e.transaction == code; }));
  }
  if (starts("loc.")) {
    const std::string rest = body.substr(4);
    const std::string level = rest.substr(0, rest.find('.'));
    const std::string stat = rest.substr(rest.find('.') + 1);
    const auto l = static_cast<std::size_t>(
        std::find(kLocationLevelNames.begin(), kLocationLevelNames.end(), level) -
        kLocationLevelNames.begin());
    std::vector<double> known;
    std::map<std::int64_t, int> counts;
    for (const auto& e : addr) {
      if (e.location[l] >= 0) {
        known.push_back(static_cast<double>(e.location[l]));
        ++counts[e.location[l]];
      }
    }
    if (stat == "count") return static_cast<double>(addr.size());
    if (stat == "distinct") return static_cast<double>(counts.size());
    if (stat == "var") return PopVar(known);
    int top = 0;
    for (const auto& [v, c] : counts) top = std::max(top, c);
    return top;  // top_count
  }
  if (starts("kernel.")) {
    const std::string flag = body.substr(7);
    const auto f = static_cast<std::size_t>(
        std::find(kKernelFlagNames.begin(), kKernelFlagNames.end(), flag) -
        kKernelFlagNames.begin());
    double n = 0;
    for (const auto& e : kernel) n += e.flags[f];
    return n;
  }
  const double m = static_cast<double>(mce.size());
  const double a = static_cast<double>(addr.size());
  const double k = static_cast<double>(kernel.size());
  if (body == "ratio.mce_per_addr") return m / std::max(a, 1.0);
  if (body == "ratio.addr_per_kernel") return a / std::max(k, 1.0);
  if (body == "ratio.kernel_per_mce") return k / std::max(m, 1.0);
  if (starts("gap.")) {
    const std::string table = body.substr(4, body.find('.', 4) - 4);
    std::vector<Minute> times;
    if (table == "mce") for (const auto& e : mce) times.push_back(e.ts);
    if (table == "addr") for (const auto& e : addr) times.push_back(e.ts);
    if (table == "kernel") for (const auto& e : kernel) times.push_back(e.ts);
    std::sort(times.begin(), times.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < times.size(); ++i) {
      gaps.push_back(static_cast<double>(times[i] - times[i - 1]));
    }
    if (gaps.empty()) return 0.0;
    if (body.ends_with(".mean")) {
      double s = 0;
      for (double g : gaps) s += g;
      return s / static_cast<double>(gaps.size());
    }
    return PopVar(gaps);
  }
  if (body == "quintuple.distinct") {
    std::set<std::array<std::int64_t, kNumLocationLevels>> q;
    for (const auto& e : addr) {
      if (e.complete()) q.insert(e.location);
    }
    return static_cast<double>(q.size());
  }
  ADD_FAILURE() << "oracle does not know feature " << name;
  return 0.0;
}

void ExpectMatchesOracle(const EventStore& store, const FeatureSchema& schema,
                         const std::string& server, Minute ts,
                         const std::vector<double>& got) {
  ASSERT_EQ(got.size(), schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const double want = OracleFeature(store, schema, server, ts, schema.spec(i));
    EXPECT_NEAR(got[i], want, 1e-9 * std::max(1.0, std::abs(want)))
        << schema.spec(i).name << " server=" << server << " ts=" << ts;
  }
}

EventStore SmallStore() {
  EventStore store;
  AddServer(&store, "S1", "Acme", "Hynix");
  AddServer(&store, "S2", "Bolt", "Micron");
  store.mce = {Mce("S1", 0, "Z", "T1"), Mce("S1", 10, "Z", "T2"), Mce("S1", 30, "AE", ""),
               Mce("S2", 10, "AE", "T1")};
  store.address = {Address("S1", 0, {1, 0, 5, 100, 7}), Address("S1", 10, {1, 0, 5, 100, 7}),
                   Address("S1", 30, {1, 1, 9, -1, 8}), Address("S1", 31, {-1, -1, -1, -1, -1})};
  store.kernel = {Kernel("S1", 10, 0), Kernel("S1", 30, 3), Kernel("S2", 10, 10)};
  store.Canonicalize();
  return store;
}

TEST(FamilySetTest, ParseAndFormat) {
  EXPECT_EQ(FamiliesToString(ParseFamilies("1-4")), "1-4");
  EXPECT_EQ(FamiliesToString(ParseFamilies("1,2,5")), "1-2,5");
  EXPECT_EQ(ParseFamilies("1-8"), AllFamilies());
  EXPECT_EQ(FamiliesUpTo(4), ParseFamilies("1,2,3,4"));
  EXPECT_THROW(ParseFamilies("0-3"), ConfigError);
  EXPECT_THROW(ParseFamilies("9"), ConfigError);
  EXPECT_THROW(ParseFamilies("x"), ConfigError);
}

TEST(SchemaTest, VocabularyDrivenNames) {
  const FeatureSchema schema = FeatureSchema::Build(SmallStore());
  for (const char* name : {"cum.mca.Z", "cum.mca.AE", "day.mca.Z", "day.mca.AE",
                           "cum.txn.(empty)", "meta.manufacturer", "meta.vendor",
                           "day.quintuple.distinct", "cum.ratio.kernel_per_mce"}) {
    EXPECT_TRUE(schema.IndexOf(name).has_value()) << name;
  }
  std::set<std::string> names;
  int kernel_cum = 0, kernel_day = 0;
  for (const auto& spec : schema.specs()) {
    EXPECT_TRUE(names.insert(spec.name).second) << "duplicate " << spec.name;
    if (spec.family == 3) (spec.scope == Scope::kCumulative ? kernel_cum : kernel_day)++;
  }
  EXPECT_EQ(kernel_cum, 11);
  EXPECT_EQ(kernel_day, 11);
  // 2 mca + 3 txn + 15 + 11 + 3 + 6 + 5 + 1 per scope, 2 static.
  EXPECT_EQ(schema.size(), 2u * (2 + 3 + 15 + 11 + 3 + 6 + 5 + 1) + 2);
}

TEST(SchemaTest, FamilySubsetAndDeterminism) {
  const EventStore store = SmallStore();
  const FeatureSchema a = FeatureSchema::Build(store, FamiliesUpTo(4));
  const FeatureSchema b = FeatureSchema::Build(store, FamiliesUpTo(4));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.spec(i).name, b.spec(i).name);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  for (const auto& spec : a.specs()) EXPECT_LE(spec.family, 4);
  EXPECT_NE(a.fingerprint(), FeatureSchema::Build(store).fingerprint());
}

TEST(SchemaTest, EmptyStoreIsError) {
  EXPECT_THROW(FeatureSchema::Build(EventStore{}), DataError);
}

TEST(SchemaTest, WriteReadRoundTrip) {
  const FeatureSchema schema = FeatureSchema::Build(SmallStore());
  std::stringstream text;
  schema.Write(text);
  const FeatureSchema back = FeatureSchema::Read(text);
  ASSERT_EQ(back.size(), schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    EXPECT_EQ(back.spec(i).name, schema.spec(i).name);
    EXPECT_EQ(back.spec(i).family, schema.spec(i).family);
    EXPECT_EQ(back.spec(i).scope, schema.spec(i).scope);
  }
  EXPECT_EQ(back.fingerprint(), schema.fingerprint());
  EXPECT_EQ(back.mca_codes(), schema.mca_codes());
  std::stringstream again;
  back.Write(again);
  EXPECT_EQ(again.str(), text.str());

  std::stringstream bad("memfail-feature-schema 2\n");
  EXPECT_THROW(FeatureSchema::Read(bad), DataError);
}

TEST(ExtractTest, LocationStatsIgnoreSentinel) {
  EventStore store;
  AddServer(&store, "S1");
  store.address = {Address("S1", 1, {5, 0, 0, 0, 0}), Address("S1", 2, {5, 0, 0, 0, 0}),
                   Address("S1", 3, {9, 0, 0, 0, 0}), Address("S1", 4, {-1, 0, 0, 0, 0})};
  const FeatureSchema schema = FeatureSchema::Build(store);
  const auto v = Extract(store, schema, "S1", 4);
  EXPECT_EQ(v[*schema.IndexOf("cum.loc.memory.count")], 4.0);
  EXPECT_EQ(v[*schema.IndexOf("cum.loc.memory.distinct")], 2.0);
  // {5, 5, 9}: population variance 32/9.
  EXPECT_NEAR(v[*schema.IndexOf("cum.loc.memory.var")], 3.5556, 1e-3);
  EXPECT_DOUBLE_EQ(v[*schema.IndexOf("cum.loc.memory.var")], 32.0 / 9.0);
  EXPECT_EQ(v[*schema.IndexOf("cum.loc.memory.top_count")], 2.0);
  // Only the first three rows are complete, two of them identical.
  EXPECT_EQ(v[*schema.IndexOf("cum.quintuple.distinct")], 2.0);
}

TEST(ExtractTest, InterArrivalStats) {
  EventStore store;
  AddServer(&store, "S1");
  store.mce = {Mce("S1", 0), Mce("S1", 10), Mce("S1", 30)};
  const FeatureSchema schema = FeatureSchema::Build(store);
  const auto v = Extract(store, schema, "S1", 30);
  EXPECT_DOUBLE_EQ(v[*schema.IndexOf("cum.gap.mce.mean")], 15.0);
  EXPECT_DOUBLE_EQ(v[*schema.IndexOf("cum.gap.mce.var")], 25.0);
  EXPECT_EQ(v[*schema.IndexOf("cum.mca.Z")], 3.0);
  // Fewer than two events: zero.
  const auto early = Extract(store, schema, "S1", 5);
  EXPECT_EQ(early[*schema.IndexOf("cum.gap.mce.mean")], 0.0);
  EXPECT_EQ(early[*schema.IndexOf("cum.gap.mce.var")], 0.0);
  EXPECT_EQ(early[*schema.IndexOf("cum.gap.addr.mean")], 0.0);
}

TEST(ExtractTest, RatiosUseFlooredDenominator) {
  const EventStore store = SmallStore();
  const FeatureSchema schema = FeatureSchema::Build(store);
  const auto v = Extract(store, schema, "S2", 10);
  EXPECT_EQ(v[*schema.IndexOf("cum.ratio.mce_per_addr")], 1.0);  // 1 / max(0, 1)
  EXPECT_EQ(v[*schema.IndexOf("cum.ratio.addr_per_kernel")], 0.0);
  EXPECT_EQ(v[*schema.IndexOf("cum.ratio.kernel_per_mce")], 1.0);
}

TEST(ExtractTest, TrailingDayBoundary) {
  EventStore store;
  AddServer(&store, "S1");
  store.mce = {Mce("S1", 100), Mce("S1", 1540)};
  const FeatureSchema schema = FeatureSchema::Build(store);
  const auto day = *schema.IndexOf("day.mca.Z");
  // (ts - 1440, ts]: the event at 100 is in scope at 1539 but not at 1540.
  EXPECT_EQ(Extract(store, schema, "S1", 1539)[day], 1.0);
  EXPECT_EQ(Extract(store, schema, "S1", 1540)[day], 1.0);
  EXPECT_EQ(Extract(store, schema, "S1", 1541)[day], 1.0);
  EXPECT_EQ(Extract(store, schema, "S1", 2980)[day], 0.0);
  EXPECT_EQ(Extract(store, schema, "S1", 2979)[day], 1.0);
  EXPECT_EQ(Extract(store, schema, "S1", 1540)[*schema.IndexOf("cum.mca.Z")], 2.0);
}

TEST(ExtractTest, MetaCodesAndUnknownFallback) {
  const EventStore train = SmallStore();
  const FeatureSchema schema = FeatureSchema::Build(train);
  const auto v = Extract(train, schema, "S1", 0);
  EXPECT_EQ(v[*schema.IndexOf("meta.manufacturer")], 1.0);  // "Acme" sorts first
  EXPECT_EQ(v[*schema.IndexOf("meta.vendor")], 1.0);

  EventStore other = train;
  other.meta.at("S1").manufacturer = "Never";
  other.mce.push_back(Mce("S1", 40, "QQ", "T9"));
  const auto u = Extract(other, schema, "S1", 40);
  EXPECT_EQ(u[*schema.IndexOf("meta.manufacturer")], 0.0);
  // The unseen code counts toward totals but has no per-code slot.
  EXPECT_EQ(u[*schema.IndexOf("cum.mca.Z")], 2.0);
  EXPECT_EQ(u[*schema.IndexOf("cum.ratio.mce_per_addr")], 4.0 / 4.0);
}

TEST(ExtractTest, UnknownServerIsError) {
  const EventStore store = SmallStore();
  const FeatureSchema schema = FeatureSchema::Build(store);
  EXPECT_THROW(Extract(store, schema, "S9", 10), DataError);
}

TEST(ExtractTest, SmallStoreMatchesOracle) {
  const EventStore store = SmallStore();
  const FeatureSchema schema = FeatureSchema::Build(store);
  for (const char* server : {"S1", "S2"}) {
    for (Minute ts : {0, 5, 10, 30, 31, 1000, 1450, 1471, 5000}) {
      ExpectMatchesOracle(store, schema, server, ts, Extract(store, schema, server, ts));
    }
  }
}

EventStore SyntheticStore(std::uint64_t seed) {
  SyntheticConfig config;
  config.n_servers = 12;
  config.n_days = 5;
  config.fail_fraction = 0.25;
  config.decoy_fraction = 0.2;
  config.plant_quintuple_drift = true;
  config.drift_day = 2;
  return GenerateSynthetic(config, seed);
}

TEST(ExtractTest, RandomProbesMatchOracle) {
  const EventStore store = SyntheticStore(31);
  const FeatureSchema schema = FeatureSchema::Build(store);
  const ServerEventIndex index(store);
  std::vector<std::string> servers;
  for (const auto& [id, m] : store.meta) servers.push_back(id);
  Rng rng(4);
  for (int probe = 0; probe < 60; ++probe) {
    const std::string& server = servers[rng.below(servers.size())];
    const Minute ts = static_cast<Minute>(rng.below(5 * kMinutesPerDay));
    ExpectMatchesOracle(store, schema, server, ts, Extract(index, schema, server, ts));
  }
}

TEST(ExtractTest, CausalityUnderFutureDeletion) {
  const EventStore store = SyntheticStore(32);
  const FeatureSchema schema = FeatureSchema::Build(store);
  Rng rng(8);
  for (int probe = 0; probe < 20; ++probe) {
    const Minute t = static_cast<Minute>(rng.below(5 * kMinutesPerDay));
    EventStore past = store;
    std::erase_if(past.mce, [&](const auto& e) { return e.ts > t; });
    std::erase_if(past.address, [&](const auto& e) { return e.ts > t; });
    std::erase_if(past.kernel, [&](const auto& e) { return e.ts > t; });
    for (const auto& [id, m] : store.meta) {
      EXPECT_EQ(Extract(store, schema, id, t), Extract(past, schema, id, t));
    }
  }
}

TEST(ExtractTest, CumulativeCountsMonotoneAndAllFinite) {
  const EventStore store = SyntheticStore(33);
  const FeatureSchema schema = FeatureSchema::Build(store);
  const ServerEventIndex index(store);
  const std::set<std::string> count_suffixes = {".count", ".top_count", ".distinct"};
  for (const auto& [id, m] : store.meta) {
    std::vector<double> prev;
    for (Minute t = 0; t < 5 * kMinutesPerDay; t += 97) {
      const auto v = Extract(index, schema, id, t);
      for (double x : v) ASSERT_TRUE(std::isfinite(x));
      if (!prev.empty()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          const auto& spec = schema.spec(i);
          const bool count = spec.family == 1 || spec.family == 3 ||
                             spec.name.ends_with(".count") ||
                             spec.name.ends_with(".distinct");
          if (spec.scope == Scope::kCumulative && count) {
            EXPECT_GE(v[i], prev[i]) << spec.name;
          }
        }
      }
      prev = v;
    }
  }
}

TEST(MaskTest, ApplyMaskExamples) {
  const std::vector<double> v = {1.5, -2.0, 3.0};
  EXPECT_EQ(ApplyMask(v, {1, 1, 1}), v);
  EXPECT_EQ(ApplyMask(v, {0, 0, 0}), std::vector<double>(3, 0.0));
  EXPECT_EQ(ApplyMask(v, {1, 0, 1}), (std::vector<double>{1.5, 0.0, 3.0}));
  EXPECT_THROW(ApplyMask(v, {1, 1}), DataError);
  std::vector<double> w = v;
  EXPECT_THROW(ApplyMaskInPlace(w, {1}), DataError);
}

TEST(MaskTest, OverfitRemovalZeroesExactlyFour) {
  const FeatureSchema schema = FeatureSchema::Build(SmallStore());
  const FeatureMask mask = OverfitRemovalMask(schema);
  ASSERT_EQ(mask.size(), schema.size());
  std::set<std::string> zeroed;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) zeroed.insert(schema.spec(i).name);
  }
  EXPECT_EQ(zeroed, (std::set<std::string>{"cum.ratio.kernel_per_mce",
                                           "day.ratio.kernel_per_mce",
                                           "cum.quintuple.distinct",
                                           "day.quintuple.distinct"}));
  const auto v = Extract(SmallStore(), schema, "S1", 40);
  const auto once = ApplyMask(v, mask);
  EXPECT_EQ(ApplyMask(once, mask), once);
  // Without families 5 and 8 nothing is removed.
  const FeatureMask narrow = OverfitRemovalMask(FeatureSchema::Build(SmallStore(), FamiliesUpTo(4)));
  EXPECT_EQ(std::count(narrow.begin(), narrow.end(), 0), 0);
}

TEST(StreamingTest, MatchesBatchAtEveryEventMinute) {
  const EventStore store = SyntheticStore(34);
  const FeatureSchema schema = FeatureSchema::Build(store);
  const ServerEventIndex index(store);
  StreamingFeatureState state(schema, store.meta);
  std::size_t m = 0, a = 0, k = 0;
  int checked = 0;
  while (m < store.mce.size() || a < store.address.size() || k < store.kernel.size()) {
    Minute t = std::numeric_limits<Minute>::max();
    if (m < store.mce.size()) t = std::min(t, store.mce[m].ts);
    if (a < store.address.size()) t = std::min(t, store.address[a].ts);
    if (k < store.kernel.size()) t = std::min(t, store.kernel[k].ts);
    std::set<std::string> touched;
    for (; m < store.mce.size() && store.mce[m].ts == t; ++m) {
      state.Add(store.mce[m]);
      touched.insert(store.mce[m].server_id);
    }
    for (; a < store.address.size() && store.address[a].ts == t; ++a) {
      state.Add(store.address[a]);
      touched.insert(store.address[a].server_id);
    }
    for (; k < store.kernel.size() && store.kernel[k].ts == t; ++k) {
      state.Add(store.kernel[k]);
      touched.insert(store.kernel[k].server_id);
    }
    for (const auto& id : touched) {
      const auto inc = state.Compute(id, t);
      const auto batch = Extract(index, schema, id, t);
      for (std::size_t i = 0; i < inc.size(); ++i) {
        ASSERT_NEAR(inc[i], batch[i], 1e-9) << schema.spec(i).name << " t=" << t;
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
  EXPECT_EQ(state.max_event_ts(), std::max({store.mce.back().ts, store.address.back().ts,
                                            store.kernel.back().ts}));
}

TEST(StreamingTest, ComputeAtLaterIdleMinuteEvictsTrailingWindow) {
  EventStore store;
  AddServer(&store, "S1");
  store.mce = {Mce("S1", 10), Mce("S1", 20)};
  const FeatureSchema schema = FeatureSchema::Build(store);
  StreamingFeatureState state(schema, store.meta);
  for (const auto& e : store.mce) state.Add(e);
  for (Minute t : {20, 1449, 1450, 1459, 1460, 4000}) {
    EXPECT_EQ(state.Compute("S1", t), Extract(store, schema, "S1", t)) << t;
  }
}

TEST(StreamingTest, RejectsOutOfOrderAndUnknownServer) {
  EventStore store;
  AddServer(&store, "S1");
  store.mce = {Mce("S1", 10)};
  const FeatureSchema schema = FeatureSchema::Build(store);
  StreamingFeatureState state(schema, store.meta);
  state.Add(Mce("S1", 10));
  EXPECT_THROW(state.Add(Mce("S1", 5)), DataError);
  EXPECT_THROW(state.Add(Mce("S7", 12)), DataError);
  EXPECT_THROW(state.Compute("S1", 3), DataError);
}

TEST(ExtractAllTest, EqualsPerSampleExtract) {
  const EventStore store = SyntheticStore(35);
  const FeatureSchema schema = FeatureSchema::Build(store);
  auto samples = LabelDataset(store, kDefaultWindowMinutes);
  ExtractAll(store, schema, samples);
  const ServerEventIndex index(store);
  for (std::size_t i = 0; i < samples.size(); i += 7) {
    const auto want = Extract(index, schema, samples[i].server_id, samples[i].ts);
    ASSERT_EQ(samples[i].features.size(), want.size());
    for (std::size_t j = 0; j < want.size(); ++j) {
      ASSERT_NEAR(samples[i].features[j], want[j], 1e-9);
    }
  }
}

TEST(PopulationVarianceTest, MatchesTwoPass) {
  EXPECT_EQ(PopulationVariance(0, 0, 0), 0.0);
  EXPECT_EQ(PopulationVariance(1, 7, 49), 0.0);
  EXPECT_DOUBLE_EQ(PopulationVariance(3, 19, 131), 32.0 / 9.0);
  EXPECT_NEAR(PopulationVariance(3, 3, 5), PopVar({0, 1, 2}), 1e-12);
  // Row values near the top of the synthetic range.
  EXPECT_NEAR(PopulationVariance(4, 65535 * 2, 2LL * 65535 * 65535),
              PopVar({0, 0, 65535, 65535}), 1e-9);
}

}  // namespace
}  // namespace memfail
