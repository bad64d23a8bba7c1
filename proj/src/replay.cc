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

#include "memfail/replay.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>
#include <set>

#include "format.h"

namespace memfail {

std::vector<std::string> MinuteBatch::Servers() const {
  std::vector<std::string> out;
  out.reserve(mce.size() + address.size() + kernel.size());
  for (const auto& e : mce) out.push_back(e.server_id);
  for (const auto& e : address) out.push_back(e.server_id);
  for (const auto& e : kernel) out.push_back(e.server_id);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MinuteCursor::MinuteCursor(const EventStore& store) : store_(&store) {}

template <typename Event>
void MinuteCursor::Take(const std::vector<Event>& table, std::size_t* pos, Minute ts,
                        std::vector<Event>* out) {
  while (*pos < table.size() && table[*pos].ts == ts) {
    const Event& e = table[(*pos)++];
    ++rows_read_;
    if (e.ts != released_through_) ++violations_;
    out->push_back(e);
  }
}

bool MinuteCursor::Next(MinuteBatch* batch) {
  Minute ts = std::numeric_limits<Minute>::max();
  if (mce_ < store_->mce.size()) ts = std::min(ts, store_->mce[mce_].ts);
  if (address_ < store_->address.size()) ts = std::min(ts, store_->address[address_].ts);
  if (kernel_ < store_->kernel.size()) ts = std::min(ts, store_->kernel[kernel_].ts);
  if (ts == std::numeric_limits<Minute>::max()) return false;
  if (ts <= released_through_) {
    throw DataError("replay: store is not sorted by timestamp");
  }
  released_through_ = ts;
  batch->ts = ts;
  batch->mce.clear();
  batch->address.clear();
  batch->kernel.clear();
  Take(store_->mce, &mce_, ts, &batch->mce);
  Take(store_->address, &address_, ts, &batch->address);
  Take(store_->kernel, &kernel_, ts, &batch->kernel);
  return true;
}

const MinuteBatch* ReplayContext::History(Minute ts) const {
  if (ts > current_ts_) {
    ++violations_;
    return nullptr;
  }
  auto it = history_.find(ts);
  return it == history_.end() ? nullptr : &it->second;
}

Clock SteadyClock() {
  return [] {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  };
}

void ReplayStats::Write(std::ostream& out, const std::string& prefix) const {
  using internal::FormatDouble;
  out << prefix << "minutes_processed=" << minutes_processed << '\n'
      << prefix << "servers_seen=" << servers_seen << '\n'
      << prefix << "server_minutes=" << server_minutes << '\n'
      << prefix << "wall_seconds=" << FormatDouble(wall_seconds) << '\n'
      << prefix << "smps=" << FormatDouble(smps) << '\n'
      << prefix << "deadline_violations=" << deadline_violations << '\n'
      << prefix << "causality_violations=" << causality_violations << '\n'
      << prefix << "budget_seconds=" << FormatDouble(budget_seconds) << '\n'
      << prefix << "timing_scope=predictor_callback\n";
}

class ReplayRunner {
 public:
  static ReplayResult Run(const EventStore& store, const Predictor& predictor,
                          const ReplayOptions& options) {
    if (!(options.budget_seconds > 0.0)) {
      throw ConfigError("budget_seconds", "must be > 0");
    }
    const Clock clock = options.clock ? options.clock : SteadyClock();
    ReplayResult result;
    ReplayStats& stats = result.stats;
    stats.budget_seconds = options.budget_seconds;

    ReplayContext context;
    context.keep_history_ = options.keep_history;
    MinuteCursor cursor(store);
    std::set<std::string> servers;
    MinuteBatch batch;
    while (cursor.Next(&batch)) {
      context.current_ts_ = batch.ts;
      const auto batch_servers = batch.Servers();
      servers.insert(batch_servers.begin(), batch_servers.end());
      stats.server_minutes += static_cast<std::int64_t>(batch_servers.size());
      ++stats.minutes_processed;

      std::vector<Prediction> out;
      const double start = clock();
      try {
        out = predictor(batch, context);
      } catch (const std::exception& e) {
        throw ReplayError(batch.ts, e.what());
      }
      const double elapsed = clock() - start;
      stats.wall_seconds += elapsed;
      if (elapsed > options.budget_seconds) ++stats.deadline_violations;
      for (auto& p : out) result.predictions.push_back(std::move(p));
      if (context.keep_history_) context.history_.emplace(batch.ts, batch);
    }
    stats.servers_seen = servers.size();
    stats.causality_violations =
        cursor.causality_violations() + context.causality_violations();
    stats.smps = stats.wall_seconds > 0.0
                     ? static_cast<double>(stats.server_minutes) / stats.wall_seconds
                     : 0.0;
    return result;
  }
};

ReplayResult RunReplay(const EventStore& store, const Predictor& predictor,
                       const ReplayOptions& options) {
  return ReplayRunner::Run(store, predictor, options);
}

StreamingPredictor::StreamingPredictor(const Ensemble& ensemble,
                                       const FeatureSchema& schema,
                                       const std::map<std::string, ServerMeta>& meta,
                                       double threshold, FeatureMask mask,
                                       const GbdtModel* regressor,
                                       Minute window_minutes)
    : ensemble_(&ensemble),
      schema_(&schema),
      threshold_(threshold),
      mask_(std::move(mask)),
      regressor_(regressor),
      window_minutes_(window_minutes),
      state_(schema, meta),
      buffer_(schema.size(), 0.0) {
  if (ensemble.members.empty()) throw DataError("predictor: empty ensemble");
  for (const auto& m : ensemble.members) m.CheckFingerprint(schema.fingerprint());
  if (ensemble.n_features() != schema.size()) {
    throw DataError("predictor: model feature count differs from schema");
  }
  if (regressor != nullptr) regressor->CheckFingerprint(schema.fingerprint());
  if (mask_.size() != schema.size()) {
    throw DataError("predictor: mask length differs from schema");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold", "must be in (0, 1)");
  }
}

std::vector<Prediction> StreamingPredictor::operator()(const MinuteBatch& batch,
                                                       const ReplayContext&) {
  for (const auto& e : batch.mce) state_.Add(e);
  for (const auto& e : batch.address) state_.Add(e);
  for (const auto& e : batch.kernel) state_.Add(e);

  std::vector<Prediction> out;
  for (const auto& server : batch.Servers()) {
    if (predicted_.contains(server) && !observer_) continue;
    state_.Compute(server, batch.ts, buffer_);
    if (observer_) observer_(server, batch.ts, buffer_);
    if (predicted_.contains(server)) continue;
    ApplyMaskInPlace(buffer_, mask_);
    const auto pti =
        TwoStagePredict(*ensemble_, regressor_, buffer_, threshold_, window_minutes_);
    if (!pti) continue;
    predicted_.insert(server);
    out.push_back({server, batch.ts, *pti});
  }
  return out;
}

}  // namespace memfail
