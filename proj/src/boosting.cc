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

#include "memfail/boosting.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "format.h"
#include "memfail/metrics.h"

namespace memfail {

// ---------------------------------------------------------------------------
// Losses

LossValue LogLossAt(double margin, double label) {
  const double q = Sigmoid(margin);
  // -[y ln q + (1-y) ln(1-q)] with ln q = -log1p(e^-m), ln(1-q) = -log1p(e^m).
  const double log_q = margin >= 0 ? -std::log1p(std::exp(-margin))
                                   : margin - std::log1p(std::exp(margin));
  const double log_1mq = margin >= 0 ? -margin - std::log1p(std::exp(-margin))
                                     : -std::log1p(std::exp(margin));
  LossValue v;
  v.value = -(label * log_q + (1.0 - label) * log_1mq);
  v.grad = q - label;
  v.hess = std::max(q * (1.0 - q), 1e-16);
  return v;
}

LossValue DirectedSquaredErrorAt(double prediction, double target) {
  const double d = prediction - target;
  if (prediction <= target) return {d * d, 2.0 * d, 2.0};
  return {10.0 * d * d, 20.0 * d, 20.0};
}

double TruePositiveScore(std::span<const double> predictions,
                         std::span<const double> truths) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("tps: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!(truths[i] > 0.0)) throw std::invalid_argument("tps: truth must be > 0");
    if (predictions[i] <= truths[i]) total += Sigmoid(predictions[i] / truths[i]);
  }
  return total;
}

const char* TaskName(Task task) {
  return task == Task::kClassifier ? "classifier" : "regressor";
}

double LogLoss::BaseScore(std::span<const double> labels) const {
  if (labels.empty()) return 0.0;
  double pos = 0.0;
  for (double y : labels) pos += y;
  const double rate =
      std::clamp(pos / static_cast<double>(labels.size()), 1e-12, 1.0 - 1e-12);
  return std::log(rate / (1.0 - rate));
}

double DirectedSquaredError::BaseScore(std::span<const double> targets) const {
  if (targets.empty()) return 0.0;
  double sum = 0.0;
  for (double t : targets) sum += t;
  return sum / static_cast<double>(targets.size());
}

std::unique_ptr<Loss> MakeLoss(const std::string& name) {
  if (name == "logloss") return std::make_unique<LogLoss>();
  if (name == "dse") return std::make_unique<DirectedSquaredError>();
  throw ConfigError("loss", "unknown loss '" + name + "'");
}

void GbdtParams::Validate() const {
  if (n_trees < 0) throw ConfigError("n_trees", "must be >= 0");
  if (max_depth < 0) throw ConfigError("max_depth", "must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate", "must be finite and > 0");
  }
  if (!(lambda_l2 >= 0.0)) throw ConfigError("lambda_l2", "must be >= 0");
  if (!(min_child_hessian >= 0.0)) {
    throw ConfigError("min_child_hessian", "must be >= 0");
  }
  if (n_bins < 2 || n_bins > 65535) throw ConfigError("n_bins", "must be in [2, 65535]");
}

// ---------------------------------------------------------------------------
// Trees

double Tree::Predict(std::span<const double> x) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].weight;
}

int Tree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int max_depth = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    max_depth = std::max(max_depth, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return max_depth;
}

std::vector<double> BinEdges(std::vector<double> column, int n_bins) {
  std::sort(column.begin(), column.end());
  std::vector<double> distinct = column;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> edges;
  if (distinct.size() <= 1) return edges;
  if (distinct.size() <= static_cast<std::size_t>(n_bins)) {
    edges.assign(distinct.begin(), distinct.end() - 1);
    return edges;
  }
  // Quantile edges over the sample mass.
  const std::size_t n = column.size();
  const double max = distinct.back();
  for (int b = 1; b < n_bins; ++b) {
    const double v = column[(static_cast<std::size_t>(b) * n) / n_bins];
    if (v >= max) break;
    if (edges.empty() || v > edges.back()) edges.push_back(v);
  }
  return edges;
}

namespace {

constexpr double kMinSplitGain = 1e-12;

struct BinnedColumn {
  std::vector<double> edges;
  std::vector<std::uint16_t> bins;
  std::size_t n_bins() const { return edges.size() + 1; }
};

std::vector<BinnedColumn> BinColumns(const FeatureMatrix& x, int n_bins) {
  std::vector<BinnedColumn> cols(x.cols);
  std::vector<double> column(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) {
    for (std::size_t i = 0; i < x.rows; ++i) column[i] = x.at(i, j);
    cols[j].edges = BinEdges(column, n_bins);
    const auto& edges = cols[j].edges;
    cols[j].bins.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      cols[j].bins[i] = static_cast<std::uint16_t>(
          std::lower_bound(edges.begin(), edges.end(), column[i]) - edges.begin());
    }
  }
  return cols;
}

struct NodeSums {
  double g = 0.0;
  double h = 0.0;
};

double Score(double g, double h, double lambda) { return g * g / (h + lambda); }

class SplitFinder {
 public:
  SplitFinder(const std::vector<BinnedColumn>& cols, std::span<const double> grad,
              std::span<const double> hess, const GbdtParams& params)
      : cols_(cols), grad_(grad), hess_(hess), params_(params) {}

  SplitCandidate Find(std::span<const std::uint32_t> rows, NodeSums total) {
    SplitCandidate best;
    best.gain = kMinSplitGain;
    const double lambda = params_.lambda_l2;
    const double parent = Score(total.g, total.h, lambda);
    const auto n = static_cast<std::int64_t>(rows.size());
    for (std::size_t f = 0; f < cols_.size(); ++f) {
      const BinnedColumn& col = cols_[f];
      const std::size_t nb = col.n_bins();
      if (nb < 2) continue;
      g_.assign(nb, 0.0);
      h_.assign(nb, 0.0);
      c_.assign(nb, 0);
      for (std::uint32_t r : rows) {
        const std::uint16_t b = col.bins[r];
        g_[b] += grad_[r];
        h_[b] += hess_[r];
        ++c_[b];
      }
      double gl = 0.0;
      double hl = 0.0;
      std::int64_t nl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += g_[b];
        hl += h_[b];
        nl += c_[b];
        if (nl == 0) continue;
        if (nl == n) break;
        const double gr = total.g - gl;
        const double hr = total.h - hl;
        if (hl < params_.min_child_hessian || hr < params_.min_child_hessian) continue;
        const double gain = Score(gl, hl, lambda) + Score(gr, hr, lambda) - parent;
        if (gain > best.gain) {
          best.feature = static_cast<int>(f);
          best.threshold = col.edges[b];
          best.gain = gain;
        }
      }
    }
    if (best.feature < 0) best.gain = 0.0;
    return best;
  }

 private:
  const std::vector<BinnedColumn>& cols_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const GbdtParams& params_;
  std::vector<double> g_;
  std::vector<double> h_;
  std::vector<std::int64_t> c_;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<BinnedColumn>& cols, std::span<const double> grad,
              std::span<const double> hess, const GbdtParams& params,
              std::span<double> margins)
      : cols_(cols),
        grad_(grad),
        hess_(hess),
        params_(params),
        margins_(margins),
        finder_(cols, grad, hess, params) {}

  Tree Build(std::vector<std::uint32_t> rows) {
    tree_ = Tree{};
    Grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int Grow(std::vector<std::uint32_t> rows, int depth) {
    NodeSums sums;
    for (std::uint32_t r : rows) {
      sums.g += grad_[r];
      sums.h += hess_[r];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    SplitCandidate split;
    if (depth < params_.max_depth && rows.size() >= 2) split = finder_.Find(rows, sums);
    if (split.feature < 0) {
      const double w =
          -sums.g / (sums.h + params_.lambda_l2) * params_.learning_rate;
      tree_.nodes[id].weight = w;
      for (std::uint32_t r : rows) margins_[r] += w;
      return id;
    }

    const BinnedColumn& col = cols_[split.feature];
    const auto edge_bin = static_cast<std::uint16_t>(
        std::lower_bound(col.edges.begin(), col.edges.end(), split.threshold) -
        col.edges.begin());
    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    for (std::uint32_t r : rows) {
      (col.bins[r] <= edge_bin ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    tree_.nodes[id].gain = split.gain;
    const int l = Grow(std::move(left), depth + 1);
    const int r = Grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const std::vector<BinnedColumn>& cols_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const GbdtParams& params_;
  std::span<double> margins_;
  SplitFinder finder_;
  Tree tree_;
};

double TotalLoss(const Loss& loss, std::span<const double> margins,
                 std::span<const double> targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    total += loss.Eval(margins[i], targets[i]).value;
  }
  return total;
}

}  // namespace

SplitCandidate FindBestSplit(const FeatureMatrix& x, std::span<const double> grad,
                             std::span<const double> hess, const GbdtParams& params) {
  params.Validate();
  const auto cols = BinColumns(x, params.n_bins);
  std::vector<std::uint32_t> rows(x.rows);
  NodeSums total;
  for (std::uint32_t i = 0; i < x.rows; ++i) {
    rows[i] = i;
    total.g += grad[i];
    total.h += hess[i];
  }
  SplitFinder finder(cols, grad, hess, params);
  return finder.Find(rows, total);
}

GbdtModel Fit(const FeatureMatrix& x, std::span<const double> targets,
              const Loss& loss, const GbdtParams& params, std::uint64_t fingerprint,
              std::vector<double>* loss_history) {
  params.Validate();
  if (x.rows == 0) throw DataError("fit: no samples");
  if (targets.size() != x.rows) throw DataError("fit: target count mismatch");
  if (x.rows > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("fit: too many samples");
  }
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    if (!std::isfinite(x.values[i])) {
      throw DataError("fit: non-finite feature at row " + std::to_string(i / x.cols) +
                      ", column " + std::to_string(i % x.cols));
    }
  }

  GbdtModel model;
  model.task = loss.task();
  model.loss = loss.name();
  model.base_score = loss.BaseScore(targets);
  model.learning_rate = params.learning_rate;
  model.n_features = x.cols;
  model.fingerprint = fingerprint;

  const auto cols = BinColumns(x, params.n_bins);
  std::vector<double> margins(x.rows, model.base_score);
  std::vector<double> grad(x.rows);
  std::vector<double> hess(x.rows);
  std::vector<std::uint32_t> all_rows(x.rows);
  for (std::uint32_t i = 0; i < x.rows; ++i) all_rows[i] = i;

  if (loss_history) {
    loss_history->clear();
    loss_history->push_back(TotalLoss(loss, margins, targets));
  }
  for (int t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const LossValue v = loss.Eval(margins[i], targets[i]);
      grad[i] = v.grad;
      hess[i] = v.hess;
    }
    TreeBuilder builder(cols, grad, hess, params, margins);
    model.trees.push_back(builder.Build(all_rows));
    if (loss_history) loss_history->push_back(TotalLoss(loss, margins, targets));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Models

double GbdtModel::PredictRaw(std::span<const double> x) const {
  if (x.size() != n_features) {
    throw DataError("predict: vector has " + std::to_string(x.size()) +
                    " features, model expects " + std::to_string(n_features));
  }
  double out = base_score;
  for (const Tree& t : trees) out += t.Predict(x);
  return out;
}

double GbdtModel::Predict(std::span<const double> x) const {
  const double raw = PredictRaw(x);
  return task == Task::kClassifier ? Sigmoid(raw) : raw;
}

void GbdtModel::CheckFingerprint(std::uint64_t schema_fingerprint) const {
  if (schema_fingerprint != fingerprint) {
    throw DataError("model was trained on a different feature schema");
  }
}

namespace {

std::string Hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> Next(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw DataError(std::string("model file: truncated before ") + what);
    }
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> tokens;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    return tokens;
  }

  // "key value" line.
  std::string Value(const std::string& key) {
    auto t = Next(key.c_str());
    if (t.size() != 2 || t[0] != key) Fail("expected '" + key + " <value>'");
    return t[1];
  }

  [[noreturn]] void Fail(const std::string& what) const {
    throw DataError("model file line " + std::to_string(line_no_) + ": " + what);
  }

  std::string context() const { return "model file line " + std::to_string(line_no_); }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

GbdtModel ReadModel(LineReader& r) {
  auto header = r.Next("header");
  if (header.size() != 2 || header[0] != "memfail-gbdt" || header[1] != "1") {
    r.Fail("expected 'memfail-gbdt 1'");
  }
  GbdtModel m;
  const std::string task = r.Value("task");
  if (task == "classifier") {
    m.task = Task::kClassifier;
  } else if (task == "regressor") {
    m.task = Task::kRegressor;
  } else {
    r.Fail("unknown task '" + task + "'");
  }
  m.loss = r.Value("loss");
  m.base_score = internal::ParseDouble(r.Value("base_score"), r.context());
  m.learning_rate = internal::ParseDouble(r.Value("learning_rate"), r.context());
  m.n_features = static_cast<std::size_t>(
      internal::ParseInt(r.Value("n_features"), r.context()));
  {
    const std::string fp = r.Value("fingerprint");
    try {
      std::size_t pos = 0;
      m.fingerprint = std::stoull(fp, &pos, 16);
      if (pos != fp.size()) r.Fail("bad fingerprint");
    } catch (const std::logic_error&) {
      r.Fail("bad fingerprint");
    }
  }
  const auto n_trees = internal::ParseInt(r.Value("trees"), r.context());
  for (long long t = 0; t < n_trees; ++t) {
    auto head = r.Next("tree");
    if (head.size() != 3 || head[0] != "tree" ||
        internal::ParseInt(head[1], r.context()) != t) {
      r.Fail("expected 'tree " + std::to_string(t) + " <nodes>'");
    }
    const auto n_nodes = internal::ParseInt(head[2], r.context());
    if (n_nodes < 1) r.Fail("tree without nodes");
    Tree tree;
    tree.nodes.resize(static_cast<std::size_t>(n_nodes));
    for (long long i = 0; i < n_nodes; ++i) {
      auto tok = r.Next("node");
      if (tok.empty() || internal::ParseInt(tok[0], r.context()) != i) {
        r.Fail("expected node " + std::to_string(i));
      }
      TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
      if (tok.size() == 3 && tok[1] == "leaf") {
        node.weight = internal::ParseDouble(tok[2], r.context());
      } else if (tok.size() == 7 && tok[1] == "split") {
        node.feature = static_cast<int>(internal::ParseInt(tok[2], r.context()));
        node.threshold = internal::ParseDouble(tok[3], r.context());
        node.left = static_cast<int>(internal::ParseInt(tok[4], r.context()));
        node.right = static_cast<int>(internal::ParseInt(tok[5], r.context()));
        node.gain = internal::ParseDouble(tok[6], r.context());
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= m.n_features ||
            node.left <= i || node.right <= i || node.left >= n_nodes ||
            node.right >= n_nodes) {
          r.Fail("split references an invalid feature or child");
        }
      } else {
        r.Fail("malformed node");
      }
    }
    m.trees.push_back(std::move(tree));
  }
  auto end = r.Next("end");
  if (end.size() != 1 || end[0] != "end") r.Fail("expected 'end'");
  return m;
}

}  // namespace

void GbdtModel::Write(std::ostream& out) const {
  using internal::FormatDouble;
  out << "memfail-gbdt 1\n"
      << "task " << TaskName(task) << '\n'
      << "loss " << loss << '\n'
      << "base_score " << FormatDouble(base_score) << '\n'
      << "learning_rate " << FormatDouble(learning_rate) << '\n'
      << "n_features " << n_features << '\n'
      << "fingerprint " << Hex(fingerprint) << '\n'
      << "trees " << trees.size() << '\n';
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& nodes = trees[t].nodes;
    out << "tree " << t << ' ' << nodes.size() << '\n';
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      if (n.is_leaf()) {
        out << i << " leaf " << FormatDouble(n.weight) << '\n';
      } else {
        out << i << " split " << n.feature << ' ' << FormatDouble(n.threshold) << ' '
            << n.left << ' ' << n.right << ' ' << FormatDouble(n.gain) << '\n';
      }
    }
  }
  out << "end\n";
}

GbdtModel GbdtModel::Read(std::istream& in) {
  LineReader r(in);
  return ReadModel(r);
}

// ---------------------------------------------------------------------------
// Ensembles

double Ensemble::PredictRaw(std::span<const double> x) const {
  if (members.empty()) throw DataError("ensemble: no members");
  double sum = 0.0;
  for (const auto& m : members) sum += m.PredictRaw(x);
  return sum / static_cast<double>(members.size());
}

double Ensemble::Predict(std::span<const double> x) const {
  const double raw = PredictRaw(x);
  return task() == Task::kClassifier ? Sigmoid(raw) : raw;
}

void Ensemble::Write(std::ostream& out) const {
  out << "memfail-ensemble 1\n"
      << "fold_seed " << fold_seed << '\n'
      << "members " << members.size() << '\n';
  for (const auto& m : members) m.Write(out);
}

Ensemble Ensemble::Read(std::istream& in) {
  LineReader r(in);
  auto header = r.Next("header");
  if (header.size() != 2 || header[0] != "memfail-ensemble" || header[1] != "1") {
    r.Fail("expected 'memfail-ensemble 1'");
  }
  Ensemble e;
  {
    const std::string seed = r.Value("fold_seed");
    try {
      std::size_t pos = 0;
      e.fold_seed = std::stoull(seed, &pos);
      if (pos != seed.size()) r.Fail("bad fold_seed");
    } catch (const std::logic_error&) {
      r.Fail("bad fold_seed");
    }
  }
  const auto n = internal::ParseInt(r.Value("members"), r.context());
  if (n < 1) r.Fail("ensemble without members");
  for (long long i = 0; i < n; ++i) e.members.push_back(ReadModel(r));
  for (const auto& m : e.members) {
    if (m.fingerprint != e.members[0].fingerprint ||
        m.n_features != e.members[0].n_features || m.task != e.members[0].task) {
      throw DataError("ensemble members disagree on schema or task");
    }
  }
  return e;
}

std::vector<int> StratifiedFolds(std::span<const int> labels, int k,
                                 std::uint64_t seed) {
  if (k < 2) throw ConfigError("k", "must be >= 2");
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  Rng rng(seed);
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[rng.below(i)]);
    }
  };
  shuffle(pos);
  shuffle(neg);
  std::vector<int> folds(labels.size(), 0);
  std::size_t slot = 0;
  for (std::size_t i : pos) folds[i] = static_cast<int>(slot++ % k);
  for (std::size_t i : neg) folds[i] = static_cast<int>(slot++ % k);
  return folds;
}

Ensemble KFoldEnsemble(const FeatureMatrix& x, std::span<const double> targets,
                       std::span<const int> labels, int k, const Loss& loss,
                       const GbdtParams& params, std::uint64_t seed,
                       std::uint64_t fingerprint) {
  if (k < 2) throw ConfigError("k", "must be >= 2");
  if (labels.size() != x.rows || targets.size() != x.rows) {
    throw DataError("kfold: label/target count mismatch");
  }
  if (x.rows < static_cast<std::size_t>(k)) {
    throw DataError("kfold: fewer samples than folds");
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives < k) {
    throw DataError("kfold: " + std::to_string(positives) +
                    " positive samples, need at least k = " + std::to_string(k));
  }
  const auto folds = StratifiedFolds(labels, k, seed);

  Ensemble ensemble;
  ensemble.fold_seed = seed;
  for (int f = 0; f < k; ++f) {
    std::size_t n = 0;
    for (int id : folds) n += id != f;
    FeatureMatrix sub(n, x.cols);
    std::vector<double> sub_targets;
    sub_targets.reserve(n);
    std::size_t out = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (folds[i] == f) continue;
      std::copy(x.row(i).begin(), x.row(i).end(), sub.row(out++).begin());
      sub_targets.push_back(targets[i]);
    }
    ensemble.members.push_back(Fit(sub, sub_targets, loss, params, fingerprint));
  }
  return ensemble;
}

std::vector<double> FeatureImportance(const Ensemble& ensemble) {
  if (ensemble.members.empty()) return {};
  std::vector<double> gains(ensemble.n_features(), 0.0);
  for (const auto& m : ensemble.members) {
    for (const auto& t : m.trees) {
      for (const auto& n : t.nodes) {
        if (!n.is_leaf()) gains[n.feature] += n.gain;
      }
    }
  }
  double total = 0.0;
  for (double g : gains) total += g;
  if (total <= 0.0) return std::vector<double>(gains.size(), 0.0);
  for (double& g : gains) g = 100.0 * g / total;
  return gains;
}

std::vector<double> FeatureImportance(const GbdtModel& model) {
  Ensemble single;
  single.members.push_back(model);
  return FeatureImportance(single);
}

std::optional<Minute> TwoStagePredict(const Ensemble& classifier,
                                      const GbdtModel* regressor,
                                      std::span<const double> x, double threshold,
                                      Minute window_minutes) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold", "must be in (0, 1)");
  }
  if (classifier.task() != Task::kClassifier) {
    throw DataError("two-stage: first stage must be a classifier");
  }
  if (regressor != nullptr && regressor->fingerprint != classifier.fingerprint()) {
    throw DataError("two-stage: regressor and classifier schemas differ");
  }
  if (classifier.Predict(x) < threshold) return std::nullopt;
  if (regressor == nullptr) return Minute{1};
  const double raw = regressor->PredictRaw(x);
  const double clamped =
      std::clamp(std::round(raw), 1.0, static_cast<double>(std::max<Minute>(1, window_minutes)));
  return static_cast<Minute>(clamped);
}

}  // namespace memfail
