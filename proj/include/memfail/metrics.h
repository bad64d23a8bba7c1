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

#ifndef MEMFAIL_METRICS_H_
#define MEMFAIL_METRICS_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "memfail/common.h"
#include "memfail/ingest.h"

namespace memfail {

// 7 days.
inline constexpr Minute kDefaultHorizonMinutes = 7 * kMinutesPerDay;

// e^x / (e^x + 1), evaluated without overflow.
double Sigmoid(double x);

struct Prediction {
  std::string server_id;
  Minute issued_ts = 0;
  Minute pti = 1;

  bool operator==(const Prediction&) const = default;
};

struct ScoreReport {
  std::size_t n_pp = 0;   // servers predicted to fail
  std::size_t n_pr = 0;   // servers that fail
  std::size_t n_tpr = 0;  // predicted servers failing within the horizon
  double n_tpp = 0.0;     // sigmoid-weighted true positives
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double score = 0.0;  // 100 * f1; at most about 84.4641

  // key=value lines.
  void Write(std::ostream& out, const std::string& prefix = "") const;
};

// Scores the earliest prediction per server. A kept prediction counts when
// the server fails 0 < ati <= horizon minutes after it was issued; it then
// adds sigmoid(pti / ati) to n_tpp if pti <= ati.
ScoreReport ScorePredictions(const std::vector<Prediction>& predictions,
                             const std::vector<FailureTicket>& tickets,
                             Minute horizon_minutes = kDefaultHorizonMinutes);

// predictions.csv: server_id,issued_ts,pti
std::vector<Prediction> ReadPredictions(const std::filesystem::path& path);
void WritePredictions(const std::vector<Prediction>& predictions,
                      const std::filesystem::path& path);
void WritePredictions(const std::vector<Prediction>& predictions, std::ostream& out);

// failure_tag.csv on its own. Unlike the dataset loader, duplicate tickets are
// kept so that scoring can reject them.
std::vector<FailureTicket> ReadTickets(const std::filesystem::path& path);

}  // namespace memfail

#endif  // MEMFAIL_METRICS_H_
