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

#include "memfail/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "format.h"

namespace memfail {

namespace {

enum SeedStream : std::uint64_t {
  kSplitStream = 1,
  kDownsampleStream = 2,
  kFoldStream = 3,
};

std::uint64_t StreamSeed(std::uint64_t seed, SeedStream stream) {
  return Rng(seed).fork(stream).next();
}

const char* MaskName(MaskKind mask) {
  return mask == MaskKind::kOverfitRemoval ? "overfit_removal" : "none";
}

const char* SplitName(SplitMode split) {
  return split == SplitMode::kByTime ? "time" : "server";
}

std::string Join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

template <typename Event, typename Keep>
std::vector<Event> FilterEvents(const std::vector<Event>& events, Keep keep) {
  std::vector<Event> out;
  for (const auto& e : events) {
    if (keep(e.server_id, e.ts)) out.push_back(e);
  }
  return out;
}

EventStore Subset(const EventStore& store,
                  const std::function<bool(const std::string&, Minute)>& keep_event,
                  const std::function<bool(const FailureTicket&)>& keep_ticket,
                  const std::function<bool(const std::string&)>& keep_server) {
  EventStore out;
  out.epoch = store.epoch;
  out.mce = FilterEvents(store.mce, keep_event);
  out.address = FilterEvents(store.address, keep_event);
  out.kernel = FilterEvents(store.kernel, keep_event);
  for (const auto& [id, meta] : store.meta) {
    if (keep_server(id)) out.meta.emplace(id, meta);
  }
  for (const auto& t : store.tickets) {
    if (keep_ticket(t)) out.tickets.push_back(t);
  }
  return out;
}

std::set<std::string> EventServers(const EventStore& store) {
  std::set<std::string> out;
  for (const auto& e : store.mce) out.insert(e.server_id);
  for (const auto& e : store.address) out.insert(e.server_id);
  for (const auto& e : store.kernel) out.insert(e.server_id);
  return out;
}

Minute LastMinute(const EventStore& store) {
  Minute last = -1;
  if (!store.mce.empty()) last = std::max(last, store.mce.back().ts);
  if (!store.address.empty()) last = std::max(last, store.address.back().ts);
  if (!store.kernel.empty()) last = std::max(last, store.kernel.back().ts);
  for (const auto& t : store.tickets) last = std::max(last, t.failure_ts);
  return last;
}

// Picks round(fraction * n) ids uniformly without replacement.
std::set<std::string> Pick(std::vector<std::string> ids, double fraction, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(fraction * ids.size()));
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
  }
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n)};
}

void CheckNoLeakage(const DataSplit& split) {
  const auto train = EventServers(split.train);
  for (const auto& id : EventServers(split.holdout)) {
    if (train.contains(id)) {
      throw std::logic_error("leakage guard: server " + id +
                             " has events in both train and holdout");
    }
  }
}

FeatureMask BuildMask(const FeatureSchema& schema, const ExperimentConfig& config) {
  FeatureMask mask = config.mask == MaskKind::kOverfitRemoval ? OverfitRemovalMask(schema)
                                                               : FullMask(schema);
  const std::set<std::string> groups(config.masked_groups.begin(),
                                     config.masked_groups.end());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (groups.contains(schema.spec(i).group())) mask[i] = 0;
  }
  return mask;
}

void Expect(std::istream& in, const std::string& key, std::string* value) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("model: missing '" + key + "'");
  const auto space = line.find(' ');
  if (line.substr(0, space) != key) {
    throw DataError("model: expected '" + key + "', got '" + line + "'");
  }
  *value = space == std::string::npos ? "" : line.substr(space + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<std::string> ExperimentConfig::PresetNames() {
  return {"baseline", "objectives_optimized", "interval_reduced",
          "resampled", "derived", "overfit_solved"};
}

ExperimentConfig ExperimentConfig::Preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "baseline") return c;
  if (name == "objectives_optimized") {
    c.two_stage = true;
    return c;
  }
  c.window_minutes = kReducedWindowMinutes;
  if (name == "interval_reduced") return c;
  c.keep_fraction = kDefaultKeepFraction;
  if (name == "resampled") return c;
  c.families = AllFamilies();
  if (name == "derived") return c;
  c.mask = MaskKind::kOverfitRemoval;
  if (name == "overfit_solved") return c;
  throw ConfigError("preset", "unknown preset '" + name + "' (expected one of " +
                                  Join(PresetNames(), ',') + ")");
}

void ExperimentConfig::Validate() const {
  if (window_minutes < 1) throw ConfigError("window_minutes", "must be >= 1");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("keep_fraction", "must be in (0, 1]");
  }
  if (families.none()) throw ConfigError("feature_families", "must not be empty");
  params.Validate();
  if (k_folds < 2) throw ConfigError("k_folds", "must be >= 2");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold", "must be in (0, 1)");
  }
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction", "must be in (0, 1)");
  }
  if (holdout_days < 1) throw ConfigError("holdout_days", "must be >= 1");
}

void ExperimentConfig::Write(std::ostream& out, const std::string& prefix) const {
  using internal::FormatDouble;
  out << prefix << "name=" << name << '\n'
      << prefix << "window_minutes=" << window_minutes << '\n'
      << prefix << "keep_fraction=" << FormatDouble(keep_fraction) << '\n'
      << prefix << "feature_families=" << FamiliesToString(families) << '\n'
      << prefix << "mask=" << MaskName(mask) << '\n'
      << prefix << "masked_groups=" << Join(masked_groups, ',') << '\n'
      << prefix << "two_stage=" << (two_stage ? 1 : 0) << '\n'
      << prefix << "n_trees=" << params.n_trees << '\n'
      << prefix << "max_depth=" << params.max_depth << '\n'
      << prefix << "learning_rate=" << FormatDouble(params.learning_rate) << '\n'
      << prefix << "lambda_l2=" << FormatDouble(params.lambda_l2) << '\n'
      << prefix << "min_child_hessian=" << FormatDouble(params.min_child_hessian) << '\n'
      << prefix << "n_bins=" << params.n_bins << '\n'
      << prefix << "k_folds=" << k_folds << '\n'
      << prefix << "threshold=" << FormatDouble(threshold) << '\n'
      << prefix << "split=" << SplitName(split) << '\n'
      << prefix << "holdout_fraction=" << FormatDouble(holdout_fraction) << '\n'
      << prefix << "holdout_days=" << holdout_days << '\n'
      << prefix << "seed=" << seed << '\n';
}

// ---------------------------------------------------------------------------
// Split

DataSplit SplitData(const EventStore& store, const ExperimentConfig& config) {
  DataSplit split;
  if (config.split == SplitMode::kByTime) {
    const Minute days = LastMinute(store) / kMinutesPerDay + 1;
    const Minute cut = std::max<Minute>(0, days - config.holdout_days) * kMinutesPerDay;
    split.train = Subset(
        store, [&](const std::string&, Minute ts) { return ts < cut; },
        [&](const FailureTicket& t) { return t.failure_ts < cut; },
        [](const std::string&) { return true; });
    split.holdout = Subset(
        store, [&](const std::string&, Minute ts) { return ts >= cut; },
        [&](const FailureTicket& t) { return t.failure_ts >= cut; },
        [](const std::string&) { return true; });
    return split;
  }

  const TicketIndex tickets = IndexTickets(store.tickets);
  std::vector<std::string> failing, healthy;
  for (const auto& [id, meta] : store.meta) {
    (tickets.contains(id) ? failing : healthy).push_back(id);
  }
  Rng rng(StreamSeed(config.seed, kSplitStream));
  std::set<std::string> holdout = Pick(failing, config.holdout_fraction, rng);
  holdout.merge(Pick(healthy, config.holdout_fraction, rng));
  const auto in_holdout = [&](const std::string& id) { return holdout.contains(id); };
  const auto in_train = [&](const std::string& id) { return !holdout.contains(id); };
  split.train = Subset(
      store, [&](const std::string& id, Minute) { return in_train(id); },
      [&](const FailureTicket& t) { return in_train(t.server_id); }, in_train);
  split.holdout = Subset(
      store, [&](const std::string& id, Minute) { return in_holdout(id); },
      [&](const FailureTicket& t) { return in_holdout(t.server_id); }, in_holdout);
  CheckNoLeakage(split);
  return split;
}

// ---------------------------------------------------------------------------
// Model bundle

void TrainedModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << "memfail-model 1\n"
      << "preset " << preset << '\n'
      << "window_minutes " << window_minutes << '\n'
      << "threshold " << internal::FormatDouble(threshold) << '\n'
      << "mask ";
  for (auto m : mask) out << (m ? '1' : '0');
  out << '\n' << "regressor " << (regressor ? 1 : 0) << '\n';
  classifier.Write(out);
  if (regressor) regressor->Write(out);
  if (!out) throw DataError("failed writing model file " + path.string());

  auto schema_path = path;
  schema_path += ".schema";
  std::ofstream schema_out(schema_path);
  if (!schema_out) throw DataError("cannot write schema file " + schema_path.string());
  schema.Write(schema_out);
  if (!schema_out) throw DataError("failed writing schema file " + schema_path.string());
}

TrainedModel TrainedModel::Load(const std::filesystem::path& path,
                                const std::filesystem::path& schema_path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  TrainedModel model;
  std::string value;
  Expect(in, "memfail-model", &value);
  if (value != "1") throw DataError("model: unsupported version '" + value + "'");
  Expect(in, "preset", &model.preset);
  Expect(in, "window_minutes", &value);
  model.window_minutes = internal::ParseInt(value, "model window_minutes");
  Expect(in, "threshold", &value);
  model.threshold = internal::ParseDouble(value, "model threshold");
  Expect(in, "mask", &value);
  for (char c : value) {
    if (c != '0' && c != '1') throw DataError("model: bad mask character");
    model.mask.push_back(c == '1');
  }
  Expect(in, "regressor", &value);
  const bool has_regressor = internal::ParseInt(value, "model regressor") != 0;
  model.classifier = Ensemble::Read(in);
  if (has_regressor) model.regressor = GbdtModel::Read(in);

  auto resolved = schema_path;
  if (resolved.empty()) {
    resolved = path;
    resolved += ".schema";
  }
  std::ifstream schema_in(resolved);
  if (!schema_in) throw DataError("cannot open schema file " + resolved.string());
  model.schema = FeatureSchema::Read(schema_in);

  if (model.classifier.members.empty()) throw DataError("model: empty ensemble");
  for (const auto& m : model.classifier.members) {
    m.CheckFingerprint(model.schema.fingerprint());
  }
  if (model.regressor) model.regressor->CheckFingerprint(model.schema.fingerprint());
  if (model.mask.size() != model.schema.size()) {
    throw DataError("model: mask length differs from schema");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training and evaluation

TrainedModel TrainModel(const EventStore& train, const ExperimentConfig& config,
                        TrainingSummary* summary) {
  config.Validate();
  auto samples = LabelDataset(train, config.window_minutes);
  const auto negatives = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(),
                    [](const LabeledSample& s) { return s.label == 0; }));
  if (config.keep_fraction < 1.0) {
    samples = DownsampleNegatives(samples, config.keep_fraction,
                                  StreamSeed(config.seed, kDownsampleStream));
  }

  TrainedModel model;
  model.preset = config.name;
  model.window_minutes = config.window_minutes;
  model.threshold = config.threshold;
  model.schema = FeatureSchema::Build(train, config.families);
  model.mask = BuildMask(model.schema, config);
  ExtractAll(train, model.schema, samples);

  FeatureMatrix x(samples.size(), model.schema.size());
  std::vector<double> targets(samples.size());
  std::vector<int> labels(samples.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto row = ApplyMask(samples[i].features, model.mask);
    std::copy(row.begin(), row.end(), x.row(i).begin());
    labels[i] = samples[i].label;
    targets[i] = samples[i].label;
    positives += samples[i].label;
  }
  if (summary != nullptr) {
    summary->samples = samples.size();
    summary->positives = positives;
    summary->negatives_before_downsampling = negatives;
  }
  if (positives < static_cast<std::size_t>(config.k_folds)) {
    throw DataError("training split has " + std::to_string(positives) +
                    " positive samples, fewer than k_folds=" +
                    std::to_string(config.k_folds));
  }
  const std::uint64_t fingerprint = model.schema.fingerprint();
  model.classifier = KFoldEnsemble(x, targets, labels, config.k_folds, LogLoss(),
                                   config.params, StreamSeed(config.seed, kFoldStream),
                                   fingerprint);

  if (config.two_stage) {
    FeatureMatrix xp(positives, model.schema.size());
    std::vector<double> ati;
    ati.reserve(positives);
    for (std::size_t i = 0, r = 0; i < samples.size(); ++i) {
      if (labels[i] != 1) continue;
      std::copy(x.row(i).begin(), x.row(i).end(), xp.row(r++).begin());
      ati.push_back(static_cast<double>(samples[i].ati));
    }
    model.regressor = Fit(xp, ati, DirectedSquaredError(), config.params, fingerprint);
  }
  return model;
}

Evaluation Evaluate(const TrainedModel& model, const EventStore& store,
                    double budget_seconds) {
  StreamingPredictor predictor(model.classifier, model.schema, store.meta,
                               model.threshold, model.mask,
                               model.regressor ? &*model.regressor : nullptr,
                               model.window_minutes);
  ReplayOptions options;
  options.budget_seconds = budget_seconds;
  auto result = RunReplay(store, std::ref(predictor), options);
  Evaluation eval;
  eval.score = ScorePredictions(result.predictions, store.tickets);
  eval.predictions = std::move(result.predictions);
  eval.stats = result.stats;
  return eval;
}

std::vector<ImportanceRow> ImportanceTable(const TrainedModel& model) {
  const auto percents = FeatureImportance(model.classifier);
  std::vector<ImportanceRow> rows;
  rows.reserve(percents.size());
  for (std::size_t i = 0; i < percents.size(); ++i) {
    rows.push_back({model.schema.spec(i).name, model.schema.spec(i).family, percents[i]});
  }
  return rows;
}

void WriteImportanceCsv(const std::vector<ImportanceRow>& rows, std::ostream& out) {
  out << "feature,family,importance\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.family << ',' << internal::FormatDouble(r.percent) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiments

void ExperimentReport::Write(std::ostream& out) const {
  config.Write(out, "config.");
  out << "data.train_servers=" << train_servers << '\n'
      << "data.holdout_servers=" << holdout_servers << '\n'
      << "data.train_samples=" << training.samples << '\n'
      << "data.train_positives=" << training.positives << '\n'
      << "data.train_negatives_before_downsampling="
      << training.negatives_before_downsampling << '\n'
      << "data.features=" << model.schema.size() << '\n'
      << "data.schema_fingerprint=" << std::hex << model.schema.fingerprint()
      << std::dec << '\n';
  train_score.Write(out, "train.");
  holdout_score.Write(out, "holdout.");
  replay.Write(out, "replay.");
  for (const auto& r : importance) {
    out << "importance." << r.name << '=' << internal::FormatDouble(r.percent) << '\n';
  }
}

ExperimentReport RunExperiment(const EventStore& store, const ExperimentConfig& config) {
  config.Validate();
  ExperimentReport report;
  report.config = config;
  report.split = SplitData(store, config);
  if (report.split.holdout.tickets.empty()) {
    throw DataError(
        "holdout contains no failing server; try a different seed or a larger "
        "fail_fraction");
  }
  report.train_servers = report.split.train.meta.size();
  report.holdout_servers = report.split.holdout.meta.size();
  if (config.split == SplitMode::kByTime) {
    report.train_servers = EventServers(report.split.train).size();
    report.holdout_servers = EventServers(report.split.holdout).size();
  }

  report.model = TrainModel(report.split.train, config, &report.training);
  report.train_score = Evaluate(report.model, report.split.train).score;
  auto holdout = Evaluate(report.model, report.split.holdout);
  report.holdout_score = holdout.score;
  report.replay = holdout.stats;
  report.holdout_predictions = std::move(holdout.predictions);
  report.importance = ImportanceTable(report.model);
  return report;
}

std::vector<Prediction> PredictEveryone(const EventStore& store) {
  const TicketIndex tickets = IndexTickets(store.tickets);
  std::map<std::string, Minute> issue;
  const auto see = [&](const std::string& id, Minute ts) {
    auto [it, inserted] = issue.emplace(id, ts);
    if (inserted) return;
    const auto ticket = tickets.find(id);
    if (ticket == tickets.end()) {
      it->second = std::min(it->second, ts);
    } else if (ts < ticket->second && (it->second >= ticket->second || ts > it->second)) {
      it->second = ts;
    }
  };
  for (const auto& e : store.mce) see(e.server_id, e.ts);
  for (const auto& e : store.address) see(e.server_id, e.ts);
  for (const auto& e : store.kernel) see(e.server_id, e.ts);
  std::vector<Prediction> out;
  for (const auto& [id, ts] : issue) out.push_back({id, ts, 1});
  return out;
}

// ---------------------------------------------------------------------------
// Ablation

void AblationReport::Write(std::ostream& out) const {
  using internal::FormatDouble;
  out << "ablation.baseline_gap=" << FormatDouble(baseline_gap) << '\n'
      << "ablation.trainings=" << trainings << '\n'
      << "ablation.complete=" << (complete ? 1 : 0) << '\n'
      << "ablation.removal_set=" << Join(removal_set, ',') << '\n';
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string p = "ablation.step" + std::to_string(i) + ".";
    out << p << "masked=" << Join(s.masked_groups, ',') << '\n'
        << p << "train_score=" << FormatDouble(s.train_score) << '\n'
        << p << "holdout_score=" << FormatDouble(s.holdout_score) << '\n'
        << p << "gap=" << FormatDouble(s.gap) << '\n';
  }
  for (std::size_t i = 0; i < ranked_groups.size(); ++i) {
    out << "ablation.rank" << i << '=' << ranked_groups[i].first << ','
        << FormatDouble(ranked_groups[i].second) << '\n';
  }
}

AblationReport Ablate(const EventStore& store, const ExperimentConfig& config,
                      int budget, double min_gap_improvement) {
  if (budget < 2) throw ConfigError("budget", "must be >= 2");
  config.Validate();
  const DataSplit split = SplitData(store, config);
  if (split.holdout.tickets.empty()) {
    throw DataError(
        "holdout contains no failing server; try a different seed or a larger "
        "fail_fraction");
  }

  AblationReport report;
  const auto train = [&](const std::vector<std::string>& masked) {
    ExperimentConfig c = config;
    c.masked_groups.insert(c.masked_groups.end(), masked.begin(), masked.end());
    const TrainedModel model = TrainModel(split.train, c);
    AblationStep step;
    step.masked_groups = masked;
    step.train_score = Evaluate(model, split.train).score.score;
    step.holdout_score = Evaluate(model, split.holdout).score.score;
    step.gap = step.train_score - step.holdout_score;
    report.steps.push_back(step);
    ++report.trainings;
    return step.gap;
  };

  // Candidate groups in schema order, minus those the config already masks.
  const FeatureSchema schema = FeatureSchema::Build(split.train, config.families);
  const FeatureMask base_mask = BuildMask(schema, config);
  std::vector<std::string> candidates;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const std::string group = schema.spec(i).group();
    if (base_mask[i] && seen.insert(group).second) candidates.push_back(group);
  }

  report.baseline_gap = train({});
  double current_gap = report.baseline_gap;
  std::optional<double> single_gap;  // gap with exactly `candidates` masked
  while (candidates.size() > 1) {
    if (report.trainings >= budget) {
      report.complete = false;
      break;
    }
    const auto mid = candidates.begin() + static_cast<std::ptrdiff_t>(candidates.size() / 2);
    std::vector<std::string> first(candidates.begin(), mid);
    std::vector<std::string> second(mid, candidates.end());
    const double gap = train(first);
    if (gap <= current_gap - min_gap_improvement) {
      candidates = std::move(first);
      current_gap = gap;
      single_gap = gap;
    } else {
      candidates = std::move(second);
      single_gap.reset();
    }
  }
  if (report.complete && candidates.size() == 1) {
    if (!single_gap) {
      if (report.trainings >= budget) {
        report.complete = false;
      } else {
        single_gap = train(candidates);
      }
    }
    if (single_gap && *single_gap <= report.baseline_gap - min_gap_improvement) {
      report.removal_set = candidates;
    }
  }

  std::map<std::string, double> best;
  for (const auto& group : seen) best[group] = report.baseline_gap;
  for (const auto& step : report.steps) {
    for (const auto& group : step.masked_groups) {
      best[group] = std::min(best[group], step.gap);
    }
  }
  report.ranked_groups.assign(best.begin(), best.end());
  std::stable_sort(report.ranked_groups.begin(), report.ranked_groups.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  return report;
}

}  // namespace memfail
