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

// memfail: command-line driver.
//
// Exit codes: 0 ok, 1 usage or invalid configuration, 2 data error,
// 3 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "memfail/boosting.h"
#include "memfail/ingest.h"
#include "memfail/metrics.h"
#include "memfail/pipeline.h"
#include "memfail/replay.h"

namespace {

namespace fs = std::filesystem;
using namespace memfail;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

struct CommonFlags {
  std::string data;
  std::string preset;
  std::uint64_t seed = 1;
  std::string split = "server";
};

ExperimentConfig MakeConfig(const CommonFlags& flags) {
  ExperimentConfig config = ExperimentConfig::Preset(flags.preset);
  config.seed = flags.seed;
  if (flags.split == "time") {
    config.split = SplitMode::kByTime;
  } else if (flags.split != "server") {
    throw ConfigError("split", "expected 'server' or 'time'");
  }
  return config;
}

void AddCommon(CLI::App* cmd, CommonFlags* flags, bool with_split) {
  cmd->add_option("--data", flags->data, "dataset directory")->required();
  cmd->add_option("--preset", flags->preset, "experiment preset")
      ->required()
      ->check(CLI::IsMember(ExperimentConfig::PresetNames()));
  cmd->add_option("--seed", flags->seed, "random seed");
  if (with_split) {
    cmd->add_option("--split", flags->split, "holdout split: server or time")
        ->check(CLI::IsMember({"server", "time"}));
  }
}

void RunGen(const SyntheticConfig& config, std::uint64_t seed, const fs::path& out) {
  const EventStore store = GenerateSynthetic(config, seed);
  WriteTables(store, out);
  std::cout << "mce_rows=" << store.mce.size() << '\n'
            << "address_rows=" << store.address.size() << '\n'
            << "kernel_rows=" << store.kernel.size() << '\n'
            << "ticket_rows=" << store.tickets.size() << '\n'
            << "server_rows=" << store.meta.size() << '\n';
}

void RunTrain(const CommonFlags& flags, const fs::path& model_out) {
  const ExperimentConfig config = MakeConfig(flags);
  const EventStore store = LoadDataset(flags.data);
  TrainingSummary summary;
  const TrainedModel model = TrainModel(store, config, &summary);
  model.Save(model_out);
  const auto importance = ImportanceTable(model);
  {
    auto csv = OpenOut(fs::path(model_out.string() + ".importance.csv"));
    WriteImportanceCsv(importance, csv);
  }
  const Evaluation eval = Evaluate(model, store);
  config.Write(std::cout, "config.");
  std::cout << "data.train_samples=" << summary.samples << '\n'
            << "data.train_positives=" << summary.positives << '\n'
            << "data.features=" << model.schema.size() << '\n';
  eval.score.Write(std::cout, "train.");
}

void RunExperimentCmd(const CommonFlags& flags, const fs::path& out_dir) {
  const ExperimentConfig config = MakeConfig(flags);
  const EventStore store = LoadDataset(flags.data);
  const ExperimentReport report = RunExperiment(store, config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError(out_dir.string() + ": " + ec.message());
  {
    auto out = OpenOut(out_dir / "report.txt");
    report.Write(out);
  }
  {
    auto out = OpenOut(out_dir / "importance.csv");
    WriteImportanceCsv(report.importance, out);
  }
  WritePredictions(report.holdout_predictions, out_dir / "predictions.csv");
  report.model.Save(out_dir / "model.txt");
  WriteTables(report.split.holdout, out_dir / "holdout");
  report.Write(std::cout);
}

void RunReplayCmd(const fs::path& data, const fs::path& model_path,
                  const fs::path& schema_path, double budget, const fs::path& out) {
  const TrainedModel model = TrainedModel::Load(model_path, schema_path);
  const EventStore store = LoadDataset(data);
  const Evaluation eval = Evaluate(model, store, budget);
  WritePredictions(eval.predictions, out);
  eval.stats.Write(std::cout);
}

void RunScore(const fs::path& predictions, const fs::path& tickets, Minute horizon) {
  const auto report =
      ScorePredictions(ReadPredictions(predictions), ReadTickets(tickets), horizon);
  report.Write(std::cout);
}

void RunImportance(const fs::path& model_path, const fs::path& schema_path) {
  const TrainedModel model = TrainedModel::Load(model_path, schema_path);
  WriteImportanceCsv(ImportanceTable(model), std::cout);
}

void RunAblate(const CommonFlags& flags, int budget, double min_improvement) {
  const ExperimentConfig config = MakeConfig(flags);
  const EventStore store = LoadDataset(flags.data);
  Ablate(store, config, budget, min_improvement).Write(std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRAM failure prediction toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset");
  SyntheticConfig gen_config;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--servers", gen_config.n_servers, "number of servers");
  gen->add_option("--days", gen_config.n_days, "days of logs");
  gen->add_option("--fail-fraction", gen_config.fail_fraction,
                  "fraction of servers with a failure ticket");
  gen->add_option("--precursor-minutes", gen_config.precursor_window_minutes,
                  "length of the pre-failure error burst");
  gen->add_flag("--plant-drift", gen_config.plant_quintuple_drift,
                "plant a quintuple pattern whose meaning flips at --drift-day");
  gen->add_option("--drift-day", gen_config.drift_day, "day the planted pattern flips");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train a model on a whole dataset");
  CommonFlags train_flags;
  std::string model_out;
  AddCommon(train, &train_flags, false);
  train->add_option("--model-out", model_out, "model file (schema goes to FILE.schema)")
      ->required();

  // experiment
  auto* experiment =
      app.add_subcommand("experiment", "train/holdout split, training, replay, scoring");
  CommonFlags experiment_flags;
  std::string experiment_out;
  AddCommon(experiment, &experiment_flags, true);
  experiment->add_option("--out", experiment_out, "output directory")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "stream a dataset through a model");
  std::string replay_data, replay_model, replay_schema, replay_out;
  double budget = kDefaultBudgetSeconds;
  replay->add_option("--data", replay_data, "dataset directory")->required();
  replay->add_option("--model", replay_model, "model file")->required();
  replay->add_option("--schema", replay_schema, "schema file (default MODEL.schema)");
  replay->add_option("--budget-seconds", budget, "per-minute latency budget");
  replay->add_option("--out", replay_out, "predictions.csv to write")->required();

  // score
  auto* score = app.add_subcommand("score", "score predictions against tickets");
  std::string score_predictions, score_tickets;
  Minute horizon = kDefaultHorizonMinutes;
  score->add_option("--predictions", score_predictions, "predictions.csv")->required();
  score->add_option("--tickets", score_tickets, "failure_tag.csv")->required();
  score->add_option("--horizon-minutes", horizon, "scoring horizon");

  // importance
  auto* importance = app.add_subcommand("importance", "print split-gain importance");
  std::string importance_model, importance_schema;
  importance->add_option("--model", importance_model, "model file")->required();
  importance->add_option("--schema", importance_schema,
                         "schema file (default MODEL.schema)");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "bisect feature groups by overfitting gap");
  CommonFlags ablate_flags;
  int ablate_budget = 8;
  double min_improvement = 1.0;
  AddCommon(ablate, &ablate_flags, true);
  ablate->add_option("--budget", ablate_budget, "maximum number of trainings");
  ablate->add_option("--min-gap-improvement", min_improvement,
                     "score points a masked half must shave off the gap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      RunGen(gen_config, gen_seed, gen_out);
    } else if (*train) {
      RunTrain(train_flags, model_out);
    } else if (*experiment) {
      RunExperimentCmd(experiment_flags, experiment_out);
    } else if (*replay) {
      RunReplayCmd(replay_data, replay_model, replay_schema, budget, replay_out);
    } else if (*score) {
      RunScore(score_predictions, score_tickets, horizon);
    } else if (*importance) {
      RunImportance(importance_model, importance_schema);
    } else if (*ablate) {
      RunAblate(ablate_flags, ablate_budget, min_improvement);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
