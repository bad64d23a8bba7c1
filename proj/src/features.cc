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

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace memfail {
namespace {

constexpr std::array<const char*, 3> kTableNames = {"mce", "addr", "kernel"};
constexpr const char* kEmptyCode = "(empty)";

std::string CodeLabel(const std::string& code) {
  return code.empty() ? kEmptyCode : code;
}

std::string ScopePrefix(Scope scope) {
  switch (scope) {
    case Scope::kCumulative:
      return "cum.";
    case Scope::kTrailingDay:
      return "day.";
    case Scope::kStatic:
      return "meta.";
  }
  return "";
}

// The integers every feature of one scope is computed from. Batch extraction
// fills this by scanning raw events; the streaming state maintains it.
struct ScopeValues {
  std::int64_t mce = 0;
  std::int64_t addr = 0;
  std::int64_t kernel = 0;
  std::vector<std::int64_t> mca_counts;
  std::vector<std::int64_t> txn_counts;
  std::array<std::int64_t, kNumKernelFlags> flag_counts{};

  struct Level {
    std::int64_t known = 0;
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;
    std::int64_t distinct = 0;
    std::int64_t top = 0;
  };
  std::array<Level, kNumLocationLevels> levels{};

  struct Gaps {
    std::int64_t n = 0;  // events
    Minute first = 0;
    Minute last = 0;
    std::int64_t sum_sq = 0;  // squared gaps between consecutive events
  };
  std::array<Gaps, 3> gaps{};

  std::int64_t quintuples = 0;

  explicit ScopeValues(const FeatureSchema& schema)
      : mca_counts(schema.mca_codes().size(), 0),
        txn_counts(schema.transaction_codes().size(), 0) {}
};

double Ratio(std::int64_t num, std::int64_t den) {
  return static_cast<double>(num) / static_cast<double>(std::max<std::int64_t>(den, 1));
}

void WriteScope(const ScopeValues& v, const FeatureSchema::ScopeLayout& layout,
                std::span<double> out) {
  if (layout.mca >= 0) {
    for (std::size_t i = 0; i < v.mca_counts.size(); ++i) {
      out[layout.mca + i] = static_cast<double>(v.mca_counts[i]);
    }
    for (std::size_t i = 0; i < v.txn_counts.size(); ++i) {
      out[layout.txn + i] = static_cast<double>(v.txn_counts[i]);
    }
  }
  if (layout.location >= 0) {
    for (std::size_t l = 0; l < kNumLocationLevels; ++l) {
      const auto& lv = v.levels[l];
      double* dst = &out[layout.location + 3 * l];
      dst[0] = static_cast<double>(v.addr);
      dst[1] = static_cast<double>(lv.distinct);
      dst[2] = PopulationVariance(lv.known, lv.sum, lv.sum_sq);
    }
  }
  if (layout.kernel >= 0) {
    for (std::size_t i = 0; i < kNumKernelFlags; ++i) {
      out[layout.kernel + i] = static_cast<double>(v.flag_counts[i]);
    }
  }
  if (layout.ratio >= 0) {
    out[layout.ratio + 0] = Ratio(v.mce, v.addr);
    out[layout.ratio + 1] = Ratio(v.addr, v.kernel);
    out[layout.ratio + 2] = Ratio(v.kernel, v.mce);
  }
  if (layout.gap >= 0) {
    for (std::size_t t = 0; t < 3; ++t) {
      const auto& g = v.gaps[t];
      double mean = 0.0;
      double var = 0.0;
      if (g.n >= 2) {
        const std::int64_t n_gaps = g.n - 1;
        const std::int64_t span = g.last - g.first;
        mean = static_cast<double>(span) / static_cast<double>(n_gaps);
        var = PopulationVariance(n_gaps, span, g.sum_sq);
      }
      out[layout.gap + 2 * t] = mean;
      out[layout.gap + 2 * t + 1] = var;
    }
  }
  if (layout.top_count >= 0) {
    for (std::size_t l = 0; l < kNumLocationLevels; ++l) {
      out[layout.top_count + l] = static_cast<double>(v.levels[l].top);
    }
  }
  if (layout.quintuple >= 0) {
    out[layout.quintuple] = static_cast<double>(v.quintuples);
  }
}

void WriteMeta(const FeatureSchema& schema, const ServerMeta& meta,
               std::span<double> out) {
  if (schema.meta_offset() < 0) return;
  out[schema.meta_offset()] = schema.manufacturers().Encode(meta.manufacturer);
  out[schema.meta_offset() + 1] = schema.vendors().Encode(meta.vendor);
}

std::uint64_t Fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

double PopulationVariance(std::int64_t n, std::int64_t sum, std::int64_t sum_sq) {
  if (n <= 0) return 0.0;
  const __int128 num = static_cast<__int128>(n) * sum_sq -
                       static_cast<__int128>(sum) * sum;
  if (num <= 0) return 0.0;
  return static_cast<double>(num) /
         (static_cast<double>(n) * static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Families

FamilySet AllFamilies() { return FamiliesUpTo(kNumFamilies); }

FamilySet FamiliesUpTo(int last) {
  FamilySet f;
  for (int i = 1; i <= std::min(last, kNumFamilies); ++i) f.set(i);
  return f;
}

FamilySet ParseFamilies(const std::string& text) {
  FamilySet f;
  std::stringstream ss(text);
  std::string part;
  auto parse_int = [&](const std::string& s) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v < 1 || v > kNumFamilies) {
      throw ConfigError("feature_families", "bad family '" + s + "'");
    }
    return v;
  };
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      f.set(parse_int(part));
    } else {
      const int lo = parse_int(part.substr(0, dash));
      const int hi = parse_int(part.substr(dash + 1));
      if (lo > hi) throw ConfigError("feature_families", "empty range " + part);
      for (int i = lo; i <= hi; ++i) f.set(i);
    }
  }
  if (f.none()) throw ConfigError("feature_families", "no family selected");
  return f;
}

std::string FamiliesToString(const FamilySet& families) {
  std::string out;
  int i = 1;
  while (i <= kNumFamilies) {
    if (!families.test(i)) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 <= kNumFamilies && families.test(j + 1)) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(i);
    if (j > i) out += "-" + std::to_string(j);
    i = j + 1;
  }
  return out;
}

const char* ScopeName(Scope scope) {
  switch (scope) {
    case Scope::kCumulative:
      return "cumulative";
    case Scope::kTrailingDay:
      return "trailing_day";
    case Scope::kStatic:
      return "static";
  }
  return "?";
}

std::string FeatureSpec::group() const {
  const auto dot = name.find('.');
  return scope == Scope::kStatic || dot == std::string::npos
             ? name
             : name.substr(dot + 1);
}

// ---------------------------------------------------------------------------
// Vocabulary / schema

Vocabulary::Vocabulary(std::vector<std::string> sorted_values)
    : values_(std::move(sorted_values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    codes_.emplace(values_[i], static_cast<int>(i) + 1);
  }
}

int Vocabulary::Encode(const std::string& value) const {
  auto it = codes_.find(value);
  return it == codes_.end() ? 0 : it->second;
}

FeatureSchema::FeatureSchema(FamilySet families, Vocabulary mca, Vocabulary txn,
                             Vocabulary manufacturers, Vocabulary vendors)
    : families_(families),
      mca_codes_(std::move(mca)),
      transaction_codes_(std::move(txn)),
      manufacturers_(std::move(manufacturers)),
      vendors_(std::move(vendors)) {
  auto add = [&](std::string name, int family, Scope scope) {
    specs_.push_back({ScopePrefix(scope) + name, family, scope});
  };
  for (Scope scope : {Scope::kCumulative, Scope::kTrailingDay}) {
    ScopeLayout& layout = scope == Scope::kCumulative ? cumulative_ : trailing_;
    if (families_.test(1)) {
      layout.mca = static_cast<int>(specs_.size());
      for (const auto& c : mca_codes_.values()) add("mca." + CodeLabel(c), 1, scope);
      layout.txn = static_cast<int>(specs_.size());
      for (const auto& c : transaction_codes_.values()) {
        add("txn." + CodeLabel(c), 1, scope);
      }
    }
    if (families_.test(2)) {
      layout.location = static_cast<int>(specs_.size());
      for (auto level : kLocationLevelNames) {
        const std::string base = "loc." + std::string(level);
        add(base + ".count", 2, scope);
        add(base + ".distinct", 2, scope);
        add(base + ".var", 2, scope);
      }
    }
    if (families_.test(3)) {
      layout.kernel = static_cast<int>(specs_.size());
      for (auto flag : kKernelFlagNames) add("kernel." + std::string(flag), 3, scope);
    }
    if (families_.test(5)) {
      layout.ratio = static_cast<int>(specs_.size());
      for (auto name : kRatioNames) add(name, 5, scope);
    }
    if (families_.test(6)) {
      layout.gap = static_cast<int>(specs_.size());
      for (auto table : kTableNames) {
        add("gap." + std::string(table) + ".mean", 6, scope);
        add("gap." + std::string(table) + ".var", 6, scope);
      }
    }
    if (families_.test(7)) {
      layout.top_count = static_cast<int>(specs_.size());
      for (auto level : kLocationLevelNames) {
        add("loc." + std::string(level) + ".top_count", 7, scope);
      }
    }
    if (families_.test(8)) {
      layout.quintuple = static_cast<int>(specs_.size());
      add("quintuple.distinct", 8, scope);
    }
  }
  if (families_.test(4)) {
    meta_offset_ = static_cast<int>(specs_.size());
    add("manufacturer", 4, Scope::kStatic);
    add("vendor", 4, Scope::kStatic);
  }

  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    index_.emplace(specs_[i].name, i);
    h = Fnv1a(h, specs_[i].name);
    h = Fnv1a(h, "\n");
  }
  for (const Vocabulary* v : {&manufacturers_, &vendors_}) {
    h = Fnv1a(h, "#");
    for (const auto& value : v->values()) {
      h = Fnv1a(h, value);
      h = Fnv1a(h, "\n");
    }
  }
  fingerprint_ = h;
}

FeatureSchema FeatureSchema::Build(const EventStore& store, FamilySet families) {
  if (store.num_events() == 0) throw DataError("feature schema: empty store");
  families.reset(0);
  if (families.none()) throw ConfigError("feature_families", "no family selected");
  std::set<std::string> mca;
  std::set<std::string> txn;
  for (const auto& e : store.mce) {
    mca.insert(e.mca_id);
    txn.insert(e.transaction);
  }
  std::set<std::string> manufacturers;
  std::set<std::string> vendors;
  for (const auto& [id, m] : store.meta) {
    manufacturers.insert(m.manufacturer);
    vendors.insert(m.vendor);
  }
  auto vocab = [](const std::set<std::string>& s) {
    return Vocabulary(std::vector<std::string>(s.begin(), s.end()));
  };
  return FeatureSchema(families, vocab(mca), vocab(txn), vocab(manufacturers),
                       vocab(vendors));
}

std::optional<std::size_t> FeatureSchema::IndexOf(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void FeatureSchema::Write(std::ostream& out) const {
  out << "memfail-feature-schema 1\n";
  out << "families " << FamiliesToString(families_) << '\n';
  const std::array<std::pair<const char*, const Vocabulary*>, 4> vocabs = {
      std::pair{"mca", &mca_codes_}, std::pair{"transaction", &transaction_codes_},
      std::pair{"manufacturer", &manufacturers_}, std::pair{"vendor", &vendors_}};
  for (const auto& [name, v] : vocabs) {
    out << "vocab " << name << ' ' << v->size() << '\n';
    for (const auto& value : v->values()) out << '=' << value << '\n';
  }
  out << "features " << specs_.size() << '\n';
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    out << i << '\t' << specs_[i].name << '\t' << specs_[i].family << '\t'
        << ScopeName(specs_[i].scope) << '\n';
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fingerprint_));
  out << "fingerprint " << hex << '\n';
}

FeatureSchema FeatureSchema::Read(std::istream& in) {
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw DataError(std::string("feature schema: truncated before ") + what);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  auto expect_prefix = [&](const std::string& prefix) {
    if (line.rfind(prefix, 0) != 0) {
      throw DataError("feature schema: expected '" + prefix + "', got '" + line + "'");
    }
    return line.substr(prefix.size());
  };
  auto to_size = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw DataError("feature schema: bad count '" + s + "'");
  };

  next("header");
  if (line != "memfail-feature-schema 1") {
    throw DataError("feature schema: unsupported header '" + line + "'");
  }
  next("families");
  FamilySet families;
  try {
    families = ParseFamilies(expect_prefix("families "));
  } catch (const ConfigError& e) {
    throw DataError(std::string("feature schema: ") + e.what());
  }
  std::array<Vocabulary, 4> vocabs;
  const std::array<const char*, 4> names = {"mca", "transaction", "manufacturer",
                                            "vendor"};
  for (std::size_t k = 0; k < vocabs.size(); ++k) {
    next("vocabulary");
    const std::size_t n = to_size(expect_prefix(std::string("vocab ") + names[k] + " "));
    std::vector<std::string> values;
    for (std::size_t i = 0; i < n; ++i) {
      next("vocabulary value");
      values.push_back(expect_prefix("="));
    }
    if (!std::is_sorted(values.begin(), values.end()) ||
        std::adjacent_find(values.begin(), values.end()) != values.end()) {
      throw DataError(std::string("feature schema: vocabulary ") + names[k] +
                      " not sorted/unique");
    }
    vocabs[k] = Vocabulary(std::move(values));
  }
  FeatureSchema schema(families, vocabs[0], vocabs[1], vocabs[2], vocabs[3]);

  next("features");
  const std::size_t n = to_size(expect_prefix("features "));
  if (n != schema.size()) throw DataError("feature schema: feature count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    next("feature row");
    const FeatureSpec& s = schema.specs_[i];
    const std::string want = std::to_string(i) + '\t' + s.name + '\t' +
                             std::to_string(s.family) + '\t' + ScopeName(s.scope);
    if (line != want) {
      throw DataError("feature schema: row " + std::to_string(i) +
                      " does not match its vocabulary: '" + line + "'");
    }
  }
  next("fingerprint");
  const std::string fp = expect_prefix("fingerprint ");
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(schema.fingerprint_));
  if (fp != hex) throw DataError("feature schema: fingerprint mismatch");
  return schema;
}

// ---------------------------------------------------------------------------
// Batch extraction

ServerEventIndex::ServerEventIndex(const EventStore& store) : store_(&store) {
  for (const auto& e : store.mce) by_server_[e.server_id].mce.push_back(&e);
  for (const auto& e : store.address) by_server_[e.server_id].address.push_back(&e);
  for (const auto& e : store.kernel) by_server_[e.server_id].kernel.push_back(&e);
}

const ServerEventIndex::Events* ServerEventIndex::Find(
    const std::string& server_id) const {
  auto it = by_server_.find(server_id);
  return it == by_server_.end() ? nullptr : &it->second;
}

namespace {

template <typename Event>
std::vector<const Event*> InRange(const std::vector<const Event*>& events,
                                  Minute lo_exclusive, Minute hi) {
  std::vector<const Event*> out;
  for (const Event* e : events) {
    if (e->ts > lo_exclusive && e->ts <= hi) out.push_back(e);
  }
  return out;
}

template <typename Event>
ScopeValues::Gaps GapsOf(const std::vector<const Event*>& events) {
  std::vector<Minute> ts;
  for (const Event* e : events) ts.push_back(e->ts);
  std::sort(ts.begin(), ts.end());
  ScopeValues::Gaps g;
  g.n = static_cast<std::int64_t>(ts.size());
  if (!ts.empty()) {
    g.first = ts.front();
    g.last = ts.back();
  }
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const std::int64_t d = ts[i] - ts[i - 1];
    g.sum_sq += d * d;
  }
  return g;
}

ScopeValues BatchScope(const FeatureSchema& schema,
                       const ServerEventIndex::Events& all, Minute lo_exclusive,
                       Minute hi) {
  const auto mce = InRange(all.mce, lo_exclusive, hi);
  const auto addr = InRange(all.address, lo_exclusive, hi);
  const auto kernel = InRange(all.kernel, lo_exclusive, hi);

  ScopeValues v(schema);
  v.mce = static_cast<std::int64_t>(mce.size());
  v.addr = static_cast<std::int64_t>(addr.size());
  v.kernel = static_cast<std::int64_t>(kernel.size());
  for (const MceEvent* e : mce) {
    const int m = schema.mca_codes().Slot(e->mca_id);
    if (m >= 0) ++v.mca_counts[m];
    const int t = schema.transaction_codes().Slot(e->transaction);
    if (t >= 0) ++v.txn_counts[t];
  }
  for (const KernelEvent* e : kernel) {
    for (std::size_t i = 0; i < kNumKernelFlags; ++i) v.flag_counts[i] += e->flags[i];
  }
  for (std::size_t l = 0; l < kNumLocationLevels; ++l) {
    std::map<std::int64_t, std::int64_t> hits;
    auto& lv = v.levels[l];
    for (const AddressEvent* e : addr) {
      const std::int64_t x = e->location[l];
      if (x == kUnknownLocation) continue;
      ++lv.known;
      lv.sum += x;
      lv.sum_sq += x * x;
      ++hits[x];
    }
    lv.distinct = static_cast<std::int64_t>(hits.size());
    for (const auto& [value, count] : hits) lv.top = std::max(lv.top, count);
  }
  std::set<std::array<std::int64_t, kNumLocationLevels>> quintuples;
  for (const AddressEvent* e : addr) {
    if (e->complete()) quintuples.insert(e->location);
  }
  v.quintuples = static_cast<std::int64_t>(quintuples.size());
  v.gaps[0] = GapsOf(mce);
  v.gaps[1] = GapsOf(addr);
  v.gaps[2] = GapsOf(kernel);
  return v;
}

}  // namespace

std::vector<double> Extract(const ServerEventIndex& index,
                            const FeatureSchema& schema,
                            const std::string& server_id, Minute ts) {
  const auto& meta = index.store().meta;
  auto it = meta.find(server_id);
  if (it == meta.end()) throw DataError("extract: unknown server '" + server_id + "'");
  if (ts < 0) throw DataError("extract: negative timestamp");

  std::vector<double> out(schema.size(), 0.0);
  static const ServerEventIndex::Events kNoEvents;
  const auto* events = index.Find(server_id);
  if (events == nullptr) events = &kNoEvents;
  WriteScope(BatchScope(schema, *events, -1, ts), schema.layout(Scope::kCumulative),
             out);
  WriteScope(BatchScope(schema, *events, ts - kTrailingWindow, ts),
             schema.layout(Scope::kTrailingDay), out);
  WriteMeta(schema, it->second, out);
  return out;
}

std::vector<double> Extract(const EventStore& store, const FeatureSchema& schema,
                            const std::string& server_id, Minute ts) {
  return Extract(ServerEventIndex(store), schema, server_id, ts);
}

// ---------------------------------------------------------------------------
// Masks

std::vector<double> ApplyMask(std::span<const double> vector,
                              const FeatureMask& mask) {
  std::vector<double> out(vector.begin(), vector.end());
  ApplyMaskInPlace(out, mask);
  return out;
}

void ApplyMaskInPlace(std::span<double> vector, const FeatureMask& mask) {
  if (vector.size() != mask.size()) {
    throw DataError("feature mask length " + std::to_string(mask.size()) +
                    " does not match vector length " + std::to_string(vector.size()));
  }
  for (std::size_t i = 0; i < vector.size(); ++i) {
    if (mask[i] == 0) vector[i] = 0.0;
  }
}

FeatureMask OverfitRemovalMask(const FeatureSchema& schema) {
  FeatureMask mask = FullMask(schema);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const std::string group = schema.spec(i).group();
    if (group == "ratio.kernel_per_mce" || group == "quintuple.distinct") mask[i] = 0;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Streaming state

namespace {

// Multiset of location values at one level, supporting removal and O(1)
// most-hit queries.
class LevelCounter {
 public:
  void Add(std::int64_t x, ScopeValues::Level* lv) {
    ++lv->known;
    lv->sum += x;
    lv->sum_sq += x * x;
    const std::int64_t c = ++mult_[x];
    if (c > 1) --count_of_count_[c - 1];
    ++count_of_count_[c];
    lv->top = std::max(lv->top, c);
    lv->distinct = static_cast<std::int64_t>(mult_.size());
  }

  void Remove(std::int64_t x, ScopeValues::Level* lv) {
    --lv->known;
    lv->sum -= x;
    lv->sum_sq -= x * x;
    auto it = mult_.find(x);
    const std::int64_t c = it->second;
    --count_of_count_[c];
    if (c > 1) {
      it->second = c - 1;
      ++count_of_count_[c - 1];
    } else {
      mult_.erase(it);
    }
    if (c == lv->top && count_of_count_[c] == 0) lv->top = c - 1;
    lv->distinct = static_cast<std::int64_t>(mult_.size());
  }

 private:
  std::unordered_map<std::int64_t, std::int64_t> mult_;
  std::unordered_map<std::int64_t, std::int64_t> count_of_count_;
};

struct QuintupleHash {
  std::size_t operator()(const std::array<std::int64_t, kNumLocationLevels>& q) const {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (auto v : q) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Gap accounting for one table. Removal always takes the oldest event.
class GapCounter {
 public:
  void Add(Minute ts, ScopeValues::Gaps* g) {
    if (g->n == 0) {
      g->first = ts;
    } else {
      const std::int64_t d = ts - g->last;
      g->sum_sq += d * d;
    }
    g->last = ts;
    ++g->n;
    if (!minutes_.empty() && minutes_.back().first == ts) {
      ++minutes_.back().second;
    } else {
      minutes_.emplace_back(ts, 1);
    }
  }

  void RemoveOldest(ScopeValues::Gaps* g) {
    auto& front = minutes_.front();
    --g->n;
    if (--front.second > 0) return;  // a zero-length gap went away
    const Minute old = front.first;
    minutes_.pop_front();
    if (minutes_.empty()) {
      *g = ScopeValues::Gaps{};
      return;
    }
    const std::int64_t d = minutes_.front().first - old;
    g->sum_sq -= d * d;
    g->first = minutes_.front().first;
  }

 private:
  std::deque<std::pair<Minute, std::int64_t>> minutes_;
};

// Aggregates of one scope. With `track_order` false nothing is ever removed,
// so per-minute bookkeeping is skipped.
class ScopeAggregate {
 public:
  explicit ScopeAggregate(const FeatureSchema& schema) : values_(schema) {}

  void AddMce(int mca_slot, int txn_slot, Minute ts) {
    ++values_.mce;
    if (mca_slot >= 0) ++values_.mca_counts[mca_slot];
    if (txn_slot >= 0) ++values_.txn_counts[txn_slot];
    gaps_[0].Add(ts, &values_.gaps[0]);
  }
  void RemoveMce(int mca_slot, int txn_slot) {
    --values_.mce;
    if (mca_slot >= 0) --values_.mca_counts[mca_slot];
    if (txn_slot >= 0) --values_.txn_counts[txn_slot];
    gaps_[0].RemoveOldest(&values_.gaps[0]);
  }

  void AddAddress(const std::array<std::int64_t, kNumLocationLevels>& loc, Minute ts) {
    ++values_.addr;
    for (std::size_t l = 0; l < kNumLocationLevels; ++l) {
      if (loc[l] != kUnknownLocation) levels_[l].Add(loc[l], &values_.levels[l]);
    }
    if (IsComplete(loc) && ++quintuples_[loc] == 1) ++values_.quintuples;
    gaps_[1].Add(ts, &values_.gaps[1]);
  }
  void RemoveAddress(const std::array<std::int64_t, kNumLocationLevels>& loc) {
    --values_.addr;
    for (std::size_t l = 0; l < kNumLocationLevels; ++l) {
      if (loc[l] != kUnknownLocation) levels_[l].Remove(loc[l], &values_.levels[l]);
    }
    if (IsComplete(loc)) {
      auto it = quintuples_.find(loc);
      if (--it->second == 0) {
        quintuples_.erase(it);
        --values_.quintuples;
      }
    }
    gaps_[1].RemoveOldest(&values_.gaps[1]);
  }

  void AddKernel(const std::array<std::uint8_t, kNumKernelFlags>& flags, Minute ts) {
    ++values_.kernel;
    for (std::size_t i = 0; i < kNumKernelFlags; ++i) values_.flag_counts[i] += flags[i];
    gaps_[2].Add(ts, &values_.gaps[2]);
  }
  void RemoveKernel(const std::array<std::uint8_t, kNumKernelFlags>& flags) {
    --values_.kernel;
    for (std::size_t i = 0; i < kNumKernelFlags; ++i) values_.flag_counts[i] -= flags[i];
    gaps_[2].RemoveOldest(&values_.gaps[2]);
  }

  const ScopeValues& values() const { return values_; }

 private:
  static bool IsComplete(const std::array<std::int64_t, kNumLocationLevels>& loc) {
    return std::all_of(loc.begin(), loc.end(), [](auto v) { return v >= 0; });
  }

  ScopeValues values_;
  std::array<LevelCounter, kNumLocationLevels> levels_;
  std::array<GapCounter, 3> gaps_;
  std::unordered_map<std::array<std::int64_t, kNumLocationLevels>, std::int64_t,
                     QuintupleHash>
      quintuples_;
};

// Compact copy of an event kept until it leaves the trailing day.
struct WindowEntry {
  Minute ts = 0;
  std::uint8_t table = 0;
  int mca_slot = -1;
  int txn_slot = -1;
  std::array<std::int64_t, kNumLocationLevels> location{};
  std::array<std::uint8_t, kNumKernelFlags> flags{};
};

}  // namespace

struct StreamingFeatureState::ServerState {
  explicit ServerState(const FeatureSchema& schema)
      : cumulative(schema), trailing(schema) {}

  void Evict(Minute now) {
    while (!window.empty() && window.front().ts <= now - kTrailingWindow) {
      const WindowEntry& e = window.front();
      switch (e.table) {
        case 0:
          trailing.RemoveMce(e.mca_slot, e.txn_slot);
          break;
        case 1:
          trailing.RemoveAddress(e.location);
          break;
        default:
          trailing.RemoveKernel(e.flags);
          break;
      }
      window.pop_front();
    }
  }

  ScopeAggregate cumulative;
  ScopeAggregate trailing;
  std::deque<WindowEntry> window;
  Minute last_ts = -1;
  const ServerMeta* meta = nullptr;
};

StreamingFeatureState::StreamingFeatureState(
    const FeatureSchema& schema, const std::map<std::string, ServerMeta>& meta)
    : schema_(&schema), meta_(&meta) {}

StreamingFeatureState::~StreamingFeatureState() = default;
StreamingFeatureState::StreamingFeatureState(StreamingFeatureState&&) noexcept =
    default;
StreamingFeatureState& StreamingFeatureState::operator=(
    StreamingFeatureState&&) noexcept = default;

StreamingFeatureState::ServerState& StreamingFeatureState::StateFor(
    const std::string& server_id, Minute ts) {
  auto it = servers_.find(server_id);
  if (it == servers_.end()) {
    auto m = meta_->find(server_id);
    if (m == meta_->end()) {
      throw DataError("features: unknown server '" + server_id + "'");
    }
    it = servers_.emplace(server_id, std::make_unique<ServerState>(*schema_)).first;
    it->second->meta = &m->second;
  }
  ServerState& s = *it->second;
  if (ts < s.last_ts) {
    throw DataError("features: out-of-order event for '" + server_id + "'");
  }
  s.last_ts = ts;
  return s;
}

void StreamingFeatureState::Add(const MceEvent& e) {
  ServerState& s = StateFor(e.server_id, e.ts);
  WindowEntry w;
  w.ts = e.ts;
  w.table = 0;
  w.mca_slot = schema_->mca_codes().Slot(e.mca_id);
  w.txn_slot = schema_->transaction_codes().Slot(e.transaction);
  s.cumulative.AddMce(w.mca_slot, w.txn_slot, e.ts);
  s.trailing.AddMce(w.mca_slot, w.txn_slot, e.ts);
  s.window.push_back(w);
  max_event_ts_ = std::max(max_event_ts_, e.ts);
}

void StreamingFeatureState::Add(const AddressEvent& e) {
  ServerState& s = StateFor(e.server_id, e.ts);
  WindowEntry w;
  w.ts = e.ts;
  w.table = 1;
  w.location = e.location;
  s.cumulative.AddAddress(e.location, e.ts);
  s.trailing.AddAddress(e.location, e.ts);
  s.window.push_back(w);
  max_event_ts_ = std::max(max_event_ts_, e.ts);
}

void StreamingFeatureState::Add(const KernelEvent& e) {
  ServerState& s = StateFor(e.server_id, e.ts);
  WindowEntry w;
  w.ts = e.ts;
  w.table = 2;
  w.flags = e.flags;
  s.cumulative.AddKernel(e.flags, e.ts);
  s.trailing.AddKernel(e.flags, e.ts);
  s.window.push_back(w);
  max_event_ts_ = std::max(max_event_ts_, e.ts);
}

void StreamingFeatureState::Compute(const std::string& server_id, Minute ts,
                                    std::span<double> out) {
  if (out.size() != schema_->size()) {
    throw DataError("features: output length does not match schema");
  }
  std::fill(out.begin(), out.end(), 0.0);
  ServerState& s = StateFor(server_id, ts);
  s.Evict(ts);
  WriteScope(s.cumulative.values(), schema_->layout(Scope::kCumulative), out);
  WriteScope(s.trailing.values(), schema_->layout(Scope::kTrailingDay), out);
  WriteMeta(*schema_, *s.meta, out);
}

std::vector<double> StreamingFeatureState::Compute(const std::string& server_id,
                                                   Minute ts) {
  std::vector<double> out(schema_->size(), 0.0);
  Compute(server_id, ts, out);
  return out;
}

void ExtractAll(const EventStore& store, const FeatureSchema& schema,
                std::span<LabeledSample> samples) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].ts < samples[b].ts;
  });
  StreamingFeatureState state(schema, store.meta);
  std::size_t im = 0, ia = 0, ik = 0;
  for (std::size_t idx : order) {
    LabeledSample& s = samples[idx];
    // Feed whole minutes so each server sees its events in time order.
    while (true) {
      Minute t = std::numeric_limits<Minute>::max();
      if (im < store.mce.size()) t = std::min(t, store.mce[im].ts);
      if (ia < store.address.size()) t = std::min(t, store.address[ia].ts);
      if (ik < store.kernel.size()) t = std::min(t, store.kernel[ik].ts);
      if (t > s.ts) break;
      while (im < store.mce.size() && store.mce[im].ts == t) state.Add(store.mce[im++]);
      while (ia < store.address.size() && store.address[ia].ts == t) {
        state.Add(store.address[ia++]);
      }
      while (ik < store.kernel.size() && store.kernel[ik].ts == t) {
        state.Add(store.kernel[ik++]);
      }
    }
    s.features.assign(schema.size(), 0.0);
    state.Compute(s.server_id, s.ts, s.features);
  }
}

}  // namespace memfail
