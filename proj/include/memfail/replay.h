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

#ifndef MEMFAIL_REPLAY_H_
#define MEMFAIL_REPLAY_H_

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "memfail/boosting.h"
#include "memfail/common.h"
#include "memfail/features.h"
#include "memfail/ingest.h"
#include "memfail/metrics.h"

namespace memfail {

// Every event row of one minute, across all servers.
struct MinuteBatch {
  Minute ts = 0;
  std::vector<MceEvent> mce;
  std::vector<AddressEvent> address;
  std::vector<KernelEvent> kernel;

  // Sorted, unique ids of servers with at least one event.
  std::vector<std::string> Servers() const;
  bool empty() const { return mce.empty() && address.empty() && kernel.empty(); }
};

// Releases a store one minute at a time. A batch is only assembled when
// requested, and every event row read is logged against the minute being
// released.
class MinuteCursor {
 public:
  explicit MinuteCursor(const EventStore& store);

  // Assembles the next non-empty minute. False when the store is exhausted.
  bool Next(MinuteBatch* batch);

  // Rows read whose ts differs from the minute they were released in.
  std::int64_t causality_violations() const { return violations_; }
  std::int64_t rows_read() const { return rows_read_; }
  Minute released_through() const { return released_through_; }

 private:
  template <typename Event>
  void Take(const std::vector<Event>& table, std::size_t* pos, Minute ts,
            std::vector<Event>* out);

  const EventStore* store_;
  std::size_t mce_ = 0;
  std::size_t address_ = 0;
  std::size_t kernel_ = 0;
  Minute released_through_ = -1;
  std::int64_t violations_ = 0;
  std::int64_t rows_read_ = 0;
};

// What a predictor may look at besides the current batch.
class ReplayContext {
 public:
  Minute current_ts() const { return current_ts_; }

  // Earlier batch (only when the replay keeps history). Asking for a minute
  // after current_ts() is a causality violation: it is counted and nullptr is
  // returned.
  const MinuteBatch* History(Minute ts) const;

  std::int64_t causality_violations() const { return violations_; }

 private:
  friend class ReplayRunner;
  Minute current_ts_ = -1;
  bool keep_history_ = false;
  std::map<Minute, MinuteBatch> history_;
  mutable std::int64_t violations_ = 0;
};

using Predictor =
    std::function<std::vector<Prediction>(const MinuteBatch&, const ReplayContext&)>;

// Monotonic seconds.
using Clock = std::function<double()>;
Clock SteadyClock();

inline constexpr double kDefaultBudgetSeconds = 5.0;

struct ReplayOptions {
  double budget_seconds = kDefaultBudgetSeconds;
  Clock clock;  // SteadyClock() when empty
  bool keep_history = false;
};

struct ReplayStats {
  std::int64_t minutes_processed = 0;
  std::size_t servers_seen = 0;
  std::int64_t server_minutes = 0;
  double wall_seconds = 0.0;  // predictor callback time only
  double smps = 0.0;
  std::int64_t deadline_violations = 0;
  std::int64_t causality_violations = 0;
  double budget_seconds = kDefaultBudgetSeconds;

  // key=value lines. Timing-dependent keys are wall_seconds and smps.
  void Write(std::ostream& out, const std::string& prefix = "") const;
};

// Raised when the predictor throws; carries the minute being processed.
class ReplayError : public std::runtime_error {
 public:
  ReplayError(Minute ts, const std::string& what)
      : std::runtime_error("replay aborted at minute " + std::to_string(ts) + ": " +
                           what),
        ts_(ts) {}
  Minute ts() const { return ts_; }

 private:
  Minute ts_;
};

struct ReplayResult {
  std::vector<Prediction> predictions;
  ReplayStats stats;
};

// Feeds `store` to `predictor` minute by minute. Batch t+1 is assembled only
// after the predictor returns for batch t. Over-budget batches are counted,
// not fatal.
ReplayResult RunReplay(const EventStore& store, const Predictor& predictor,
                       const ReplayOptions& options = {});

// Online model: incremental features, mask, classifier, and one prediction
// per server. Wrap in std::ref to pass to RunReplay.
class StreamingPredictor {
 public:
  // `meta` is the replayed store's server metadata. Throws DataError when the
  // ensemble was trained on a different schema or the mask length differs.
  StreamingPredictor(const Ensemble& ensemble, const FeatureSchema& schema,
                     const std::map<std::string, ServerMeta>& meta, double threshold,
                     FeatureMask mask, const GbdtModel* regressor = nullptr,
                     Minute window_minutes = kReducedWindowMinutes);

  std::vector<Prediction> operator()(const MinuteBatch& batch,
                                     const ReplayContext& context);

  // Called with the unmasked vector of every (server, minute) evaluated.
  using FeatureObserver =
      std::function<void(const std::string&, Minute, std::span<const double>)>;
  void set_feature_observer(FeatureObserver observer) {
    observer_ = std::move(observer);
  }

  // Largest event ts this predictor has seen.
  Minute max_observed_ts() const { return state_.max_event_ts(); }

 private:
  const Ensemble* ensemble_;
  const FeatureSchema* schema_;
  double threshold_;
  FeatureMask mask_;
  const GbdtModel* regressor_;
  Minute window_minutes_;
  StreamingFeatureState state_;
  std::unordered_set<std::string> predicted_;
  std::vector<double> buffer_;
  FeatureObserver observer_;
};

}  // namespace memfail

#endif  // MEMFAIL_REPLAY_H_
