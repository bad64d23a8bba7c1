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

#ifndef MEMFAIL_BOOSTING_H_
#define MEMFAIL_BOOSTING_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memfail/common.h"

namespace memfail {

struct LossValue {
  double value = 0.0;
  double grad = 0.0;
  double hess = 0.0;
};

// Binary cross-entropy on a raw margin, y in {0, 1}. Hessian floored at
// 1e-16.
LossValue LogLossAt(double margin, double label);

// Directed square error: squared error, ten times heavier when the
// prediction overshoots the target. p == t takes the lighter branch.
LossValue DirectedSquaredErrorAt(double prediction, double target);

// Sum of sigmoid(p / t) over pairs with p <= t. Throws for t <= 0.
double TruePositiveScore(std::span<const double> predictions,
                         std::span<const double> truths);

enum class Task { kClassifier, kRegressor };

const char* TaskName(Task task);

// Second-order loss plugged into the booster.
class Loss {
 public:
  virtual ~Loss() = default;
  virtual std::string name() const = 0;
  virtual Task task() const = 0;
  virtual LossValue Eval(double prediction, double target) const = 0;
  // Constant starting margin.
  virtual double BaseScore(std::span<const double> targets) const = 0;
};

class LogLoss final : public Loss {
 public:
  std::string name() const override { return "logloss"; }
  Task task() const override { return Task::kClassifier; }
  LossValue Eval(double margin, double label) const override {
    return LogLossAt(margin, label);
  }
  // Log-odds of the positive rate.
  double BaseScore(std::span<const double> labels) const override;
};

class DirectedSquaredError final : public Loss {
 public:
  std::string name() const override { return "dse"; }
  Task task() const override { return Task::kRegressor; }
  LossValue Eval(double prediction, double target) const override {
    return DirectedSquaredErrorAt(prediction, target);
  }
  // Mean target.
  double BaseScore(std::span<const double> targets) const override;
};

// "logloss" or "dse"; throws ConfigError otherwise.
std::unique_ptr<Loss> MakeLoss(const std::string& name);

// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// A node is a leaf when `feature < 0`. Values <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf output, learning rate already applied
  double gain = 0.0;    // split gain, 0 for leaves

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double Predict(std::span<const double> x) const;
  int Depth() const;
  bool operator==(const Tree&) const = default;
};

struct GbdtParams {
  int n_trees = 200;
  int max_depth = 6;
  double learning_rate = 0.1;
  double lambda_l2 = 1.0;
  double min_child_hessian = 1.0;
  int n_bins = 64;

  void Validate() const;  // throws ConfigError
};

class GbdtModel {
 public:
  Task task = Task::kClassifier;
  std::string loss = "logloss";
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::size_t n_features = 0;
  std::uint64_t fingerprint = 0;
  std::vector<Tree> trees;

  // base_score plus the sum of tree outputs. Throws DataError when the
  // vector length differs from n_features.
  double PredictRaw(std::span<const double> x) const;
  // sigmoid(PredictRaw) for classifiers, PredictRaw for regressors.
  double Predict(std::span<const double> x) const;

  // Throws DataError unless `schema_fingerprint` matches.
  void CheckFingerprint(std::uint64_t schema_fingerprint) const;

  void Write(std::ostream& out) const;
  static GbdtModel Read(std::istream& in);

  bool operator==(const GbdtModel&) const = default;
};

// Newton boosting with histogram split search. `loss_history`, when given,
// receives the summed training loss before the first tree and after each
// tree.
GbdtModel Fit(const FeatureMatrix& x, std::span<const double> targets,
              const Loss& loss, const GbdtParams& params,
              std::uint64_t fingerprint = 0,
              std::vector<double>* loss_history = nullptr);

// Best split of one node over histogram bins. Exposed for tests.
struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};
SplitCandidate FindBestSplit(const FeatureMatrix& x, std::span<const double> grad,
                             std::span<const double> hess, const GbdtParams& params);

// Upper bin edges of one feature column. A value goes to the first bin
// whose edge is >= the value; values above the last edge form a final bin.
std::vector<double> BinEdges(std::vector<double> column, int n_bins);

class Ensemble {
 public:
  std::vector<GbdtModel> members;
  std::uint64_t fold_seed = 0;

  // Mean of the members' raw outputs.
  double PredictRaw(std::span<const double> x) const;
  // sigmoid(PredictRaw) for classifiers.
  double Predict(std::span<const double> x) const;
  Task task() const { return members.at(0).task; }
  std::uint64_t fingerprint() const { return members.at(0).fingerprint; }
  std::size_t n_features() const { return members.at(0).n_features; }

  void Write(std::ostream& out) const;
  static Ensemble Read(std::istream& in);

  bool operator==(const Ensemble&) const = default;
};

// Label-stratified fold ids in [0, k), deterministic per seed.
std::vector<int> StratifiedFolds(std::span<const int> labels, int k,
                                 std::uint64_t seed);

// Trains member i on every fold except i.
Ensemble KFoldEnsemble(const FeatureMatrix& x, std::span<const double> targets,
                       std::span<const int> labels, int k, const Loss& loss,
                       const GbdtParams& params, std::uint64_t seed,
                       std::uint64_t fingerprint = 0);

// Split-gain importance per feature, normalized to sum to 100 (all zeros
// when no split exists). Ensemble gains are summed across members.
std::vector<double> FeatureImportance(const GbdtModel& model);
std::vector<double> FeatureImportance(const Ensemble& ensemble);

// Classifier gate followed by an optional remaining-time regressor. Without a
// regressor every flagged server gets pti = 1.
std::optional<Minute> TwoStagePredict(const Ensemble& classifier,
                                      const GbdtModel* regressor,
                                      std::span<const double> x, double threshold,
                                      Minute window_minutes);

}  // namespace memfail

#endif  // MEMFAIL_BOOSTING_H_
