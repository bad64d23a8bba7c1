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

#include "memfail/metrics.h"

#include <cmath>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include "csv.h"
#include "format.h"

namespace memfail {

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (e + 1.0);
}

ScoreReport ScorePredictions(const std::vector<Prediction>& predictions,
                             const std::vector<FailureTicket>& tickets,
                             Minute horizon_minutes) {
  std::unordered_map<std::string, Minute> failure;
  for (const auto& t : tickets) {
    if (!failure.emplace(t.server_id, t.failure_ts).second) {
      throw DataError("score: duplicate ticket for '" + t.server_id + "'");
    }
  }

  std::unordered_map<std::string, const Prediction*> earliest;
  for (const auto& p : predictions) {
    if (p.pti < 1) {
      throw DataError("score: pti < 1 for '" + p.server_id + "'");
    }
    auto [it, inserted] = earliest.emplace(p.server_id, &p);
    if (!inserted && p.issued_ts < it->second->issued_ts) it->second = &p;
  }

  ScoreReport r;
  r.n_pp = earliest.size();
  r.n_pr = failure.size();
  for (const auto& [server, p] : earliest) {
    auto f = failure.find(server);
    if (f == failure.end()) continue;
    const Minute ati = f->second - p->issued_ts;
    if (ati <= 0 || ati > horizon_minutes) continue;
    ++r.n_tpr;
    if (p->pti <= ati) {
      r.n_tpp += Sigmoid(static_cast<double>(p->pti) / static_cast<double>(ati));
    }
  }
  r.precision = r.n_pp == 0 ? 0.0 : r.n_tpp / static_cast<double>(r.n_pp);
  r.recall = r.n_pr == 0 ? 0.0
                         : static_cast<double>(r.n_tpr) / static_cast<double>(r.n_pr);
  const double denom = r.precision + r.recall;
  r.f1 = denom == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / denom;
  r.score = 100.0 * r.f1;
  return r;
}

void ScoreReport::Write(std::ostream& out, const std::string& prefix) const {
  out << prefix << "n_pp=" << n_pp << '\n'
      << prefix << "n_pr=" << n_pr << '\n'
      << prefix << "n_tpr=" << n_tpr << '\n'
      << prefix << "n_tpp=" << internal::FormatDouble(n_tpp) << '\n'
      << prefix << "precision=" << internal::FormatDouble(precision) << '\n'
      << prefix << "recall=" << internal::FormatDouble(recall) << '\n'
      << prefix << "f1=" << internal::FormatDouble(f1) << '\n'
      << prefix << "score=" << internal::FormatDouble(score) << '\n';
}

std::vector<Prediction> ReadPredictions(const std::filesystem::path& path) {
  internal::CsvReader reader(path.string(), {"server_id", "issued_ts", "pti"});
  std::vector<Prediction> out;
  while (reader.Next()) {
    Prediction p{reader.String(0, false), reader.Int(1), reader.Int(2)};
    if (p.issued_ts < 0) reader.Fail(1, "negative timestamp");
    if (p.pti < 1) reader.Fail(2, "pti must be >= 1");
    out.push_back(std::move(p));
  }
  return out;
}

void WritePredictions(const std::vector<Prediction>& predictions, std::ostream& out) {
  out << "server_id,issued_ts,pti\n";
  for (const auto& p : predictions) {
    out << p.server_id << ',' << p.issued_ts << ',' << p.pti << '\n';
  }
}

void WritePredictions(const std::vector<Prediction>& predictions,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  WritePredictions(predictions, out);
  if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<FailureTicket> ReadTickets(const std::filesystem::path& path) {
  internal::CsvReader reader(path.string(), {"server_id", "failure_ts"});
  std::vector<FailureTicket> out;
  while (reader.Next()) {
    FailureTicket t{reader.String(0, false), reader.Int(1)};
    if (t.failure_ts < 0) reader.Fail(1, "negative timestamp");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace memfail
