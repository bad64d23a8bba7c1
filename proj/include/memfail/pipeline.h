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

#ifndef MEMFAIL_PIPELINE_H_
#define MEMFAIL_PIPELINE_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "memfail/boosting.h"
#include "memfail/features.h"
#include "memfail/ingest.h"
#include "memfail/labeling.h"
#include "memfail/metrics.h"
#include "memfail/replay.h"

namespace memfail {

enum class SplitMode { kByServer, kByTime };
enum class MaskKind { kNone, kOverfitRemoval };

struct ExperimentConfig {
  std::string name = "custom";
  Minute window_minutes = kDefaultWindowMinutes;
  double keep_fraction = 1.0;
  FamilySet families = FamiliesUpTo(4);
  MaskKind mask = MaskKind::kNone;
  // Extra feature groups (names without scope prefix) to mask.
  std::vector<std::string> masked_groups;
  bool two_stage = false;
  GbdtParams params;
  int k_folds = 5;
  double threshold = 0.5;
  SplitMode split = SplitMode::kByServer;
  double holdout_fraction = 0.2;  // kByServer
  int holdout_days = 10;          // kByTime
  std::uint64_t seed = 1;

  // baseline, objectives_optimized, interval_reduced, resampled, derived,
  // overfit_solved. Throws ConfigError for other names.
  static ExperimentConfig Preset(const std::string& name);
  static std::vector<std::string> PresetNames();

  void Validate() const;
  void Write(std::ostream& out, const std::string& prefix = "config.") const;
};

struct DataSplit {
  EventStore train;
  EventStore holdout;
};

// kByServer: label-stratified 80/20 split of servers. kByTime: the last
// holdout_days of the timeline form the holdout; each side keeps only its own
// events and tickets.
DataSplit SplitData(const EventStore& store, const ExperimentConfig& config);

// Everything needed to replay a trained configuration.
struct TrainedModel {
  std::string preset;
  FeatureSchema schema;
  FeatureMask mask;
  Ensemble classifier;
  std::optional<GbdtModel> regressor;
  Minute window_minutes = kDefaultWindowMinutes;
  double threshold = 0.5;

  // Writes `path` (model) and `path` + ".schema".
  void Save(const std::filesystem::path& path) const;
  static TrainedModel Load(const std::filesystem::path& path,
                           const std::filesystem::path& schema_path = {});
};

struct TrainingSummary {
  std::size_t samples = 0;
  std::size_t positives = 0;
  std::size_t negatives_before_downsampling = 0;
};

TrainedModel TrainModel(const EventStore& train, const ExperimentConfig& config,
                        TrainingSummary* summary = nullptr);

struct Evaluation {
  std::vector<Prediction> predictions;
  ReplayStats stats;
  ScoreReport score;
};

// Streams `store` through the model and scores against its tickets.
Evaluation Evaluate(const TrainedModel& model, const EventStore& store,
                    double budget_seconds = kDefaultBudgetSeconds);

struct ImportanceRow {
  std::string name;
  int family = 0;
  double percent = 0.0;
};
std::vector<ImportanceRow> ImportanceTable(const TrainedModel& model);
void WriteImportanceCsv(const std::vector<ImportanceRow>& rows, std::ostream& out);

struct ExperimentReport {
  ExperimentConfig config;
  TrainingSummary training;
  std::size_t train_servers = 0;
  std::size_t holdout_servers = 0;
  ScoreReport train_score;
  ScoreReport holdout_score;
  ReplayStats replay;  // holdout stream
  std::vector<ImportanceRow> importance;
  std::vector<Prediction> holdout_predictions;
  TrainedModel model;
  DataSplit split;

  // key=value text. Only replay.wall_seconds and replay.smps depend on the
  // clock.
  void Write(std::ostream& out) const;
};

// Throws DataError when the holdout contains no failing server.
ExperimentReport RunExperiment(const EventStore& store, const ExperimentConfig& config);

// pti = 1 for every server with events. Failing servers are flagged at their
// last event before the failure, everyone else at their first event: the best
// any flag-everything strategy can score.
std::vector<Prediction> PredictEveryone(const EventStore& store);

struct AblationStep {
  std::vector<std::string> masked_groups;
  double train_score = 0.0;
  double holdout_score = 0.0;
  double gap = 0.0;  // train - holdout
};

struct AblationReport {
  double baseline_gap = 0.0;
  std::vector<AblationStep> steps;  // steps[0] is the unmasked baseline
  // Groups whose masking shrinks the gap; empty when none was found.
  std::vector<std::string> removal_set;
  // Every group with the smallest gap measured while it was masked
  // (baseline gap if never masked), ascending.
  std::vector<std::pair<std::string, double>> ranked_groups;
  int trainings = 0;
  bool complete = true;

  void Write(std::ostream& out) const;
};

// Bisection over feature groups: mask one half, keep it if the train-holdout
// gap shrinks by at least `min_gap_improvement` score points, otherwise
// continue in the other half. Throws ConfigError when budget < 2.
AblationReport Ablate(const EventStore& store, const ExperimentConfig& config,
                      int budget, double min_gap_improvement = 1.0);

}  // namespace memfail

#endif  // MEMFAIL_PIPELINE_H_
