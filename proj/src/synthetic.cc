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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "memfail/ingest.h"

namespace memfail {
namespace {

constexpr std::array<std::string_view, 12> kMcaCodes = {
    "Z", "AE", "AZ", "BC", "AF", "BB", "CD", "DA", "EA", "FF", "GB", "HC"};

// Location space of a synthetic server.
constexpr std::array<std::int64_t, kNumLocationLevels> kLocationRange = {
    8, 2, 16, 65536, 1024};

constexpr double kAddressGivenMce = 0.7;
constexpr double kKernelGivenMce = 0.25;
constexpr double kBurstKernelGivenMce = 0.4;
constexpr double kFieldUnknown = 0.03;
constexpr double kRowUnknown = 0.05;
// With the drift plant, share of pre-drift failures that show no burst.
constexpr double kSilentFraction = 0.5;

std::string CodeName(int i) {
  if (i < static_cast<int>(kMcaCodes.size())) return std::string(kMcaCodes[i]);
  return "C" + std::to_string(i);
}

std::string ServerName(int i, int n) {
  const int width = std::max<int>(4, static_cast<int>(std::to_string(n).size()));
  std::string digits = std::to_string(i + 1);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return "S" + digits;
}

// Minute of the next arrival after `t` for a process with `rate` events per
// minute. At most one arrival per minute.
Minute NextArrival(Rng& rng, Minute t, double rate) {
  const double gap = -std::log(1.0 - rng.uniform()) / rate;
  return t + 1 + static_cast<Minute>(gap);
}

struct ServerPlan {
  std::string id;
  bool failing = false;
  bool decoy = false;
  bool silent = false;  // fails without a burst
  Minute failure_ts = 0;
  Minute burst_start = 0;  // decoys and failing servers
  Minute burst_end = 0;
  std::array<std::int64_t, kNumLocationLevels> weak_cell{};
};

class ServerSimulator {
 public:
  ServerSimulator(const SyntheticConfig& config, const ServerPlan& plan,
                  Rng rng, EventStore* out)
      : config_(config), plan_(plan), rng_(rng), out_(out) {}

  void Run(Minute horizon) {
    const Minute end = plan_.failing ? plan_.failure_ts : horizon;
    const double base_rate = config_.background_events_per_day / kMinutesPerDay;
    const double burst_rate = base_rate * config_.burst_intensity;
    const bool has_burst = (plan_.failing && !plan_.silent) || plan_.decoy;

    struct Segment {
      Minute begin, end;
      bool burst;
    };
    std::vector<Segment> segments;
    if (has_burst) {
      segments = {{0, plan_.burst_start, false},
                  {plan_.burst_start, plan_.burst_end, true},
                  {plan_.burst_end, end, false}};
    } else {
      segments = {{0, end, false}};
    }
    // Arrivals are memoryless, so each segment restarts the process.
    for (const auto& seg : segments) {
      const Minute seg_end = std::min(seg.end, end);
      Minute t = seg.begin - 1;
      while (true) {
        t = NextArrival(rng_, t, seg.burst ? burst_rate : base_rate);
        if (t >= seg_end) break;
        EmitError(t, seg.burst && plan_.failing, seg.burst && plan_.decoy);
      }
    }
  }

 private:
  std::array<std::int64_t, kNumLocationLevels> RandomLocation() {
    std::array<std::int64_t, kNumLocationLevels> loc{};
    for (std::size_t i = 0; i < kNumLocationLevels; ++i) {
      loc[i] = static_cast<std::int64_t>(rng_.below(kLocationRange[i]));
    }
    return loc;
  }

  void MaybeBlank(std::array<std::int64_t, kNumLocationLevels>* loc) {
    if (rng_.bernoulli(kRowUnknown)) {
      loc->fill(kUnknownLocation);
      return;
    }
    for (auto& v : *loc) {
      if (rng_.bernoulli(kFieldUnknown)) v = kUnknownLocation;
    }
  }

  void EmitError(Minute t, bool failing_burst, bool decoy_burst) {
    MceEvent mce;
    mce.server_id = plan_.id;
    mce.ts = t;
    if (failing_burst && rng_.bernoulli(0.5)) {
      mce.mca_id = CodeName(0);
    } else {
      mce.mca_id = CodeName(static_cast<int>(rng_.below(config_.mca_vocab_size)));
    }
    mce.transaction =
        "T" + std::to_string(1 + rng_.below(config_.transaction_vocab_size));
    out_->mce.push_back(std::move(mce));

    if (rng_.bernoulli(failing_burst ? 0.85 : kAddressGivenMce)) {
      AddressEvent addr;
      addr.server_id = plan_.id;
      addr.ts = t;
      addr.location = RandomLocation();
      if (failing_burst) {
        for (std::size_t i = 0; i < 3; ++i) {
          if (rng_.bernoulli(0.9)) addr.location[i] = plan_.weak_cell[i];
        }
        if (rng_.bernoulli(0.55)) addr.location[3] = plan_.weak_cell[3];
        if (rng_.bernoulli(0.55)) addr.location[4] = plan_.weak_cell[4];
      }
      MaybeBlank(&addr.location);
      out_->address.push_back(std::move(addr));
    }

    const bool bursting = failing_burst || decoy_burst;
    if (rng_.bernoulli(bursting ? kBurstKernelGivenMce : kKernelGivenMce)) {
      KernelEvent k;
      k.server_id = plan_.id;
      k.ts = t;
      for (std::size_t i = 0; i < kNumKernelFlags; ++i) {
        const double p = (i == 0) ? 0.5 : (failing_burst ? 0.3 : 0.15);
        k.flags[i] = rng_.bernoulli(p) ? 1 : 0;
      }
      out_->kernel.push_back(std::move(k));
    }
  }

  const SyntheticConfig& config_;
  const ServerPlan& plan_;
  Rng rng_;
  EventStore* out_;
};

// Sixteen address rows over four row values and four column values. The
// diagonal pattern yields 4 distinct quintuples, the cross pattern 16; the
// per-level counts, distinct counts, variances and most-hit counts are the
// same for both.
void PlantQuintuplePattern(const std::string& server_id, Minute start,
                           bool cross, Rng& rng, EventStore* out) {
  constexpr int kSide = 4;
  constexpr Minute kSpacing = 20;
  std::array<std::int64_t, 3> prefix{};
  for (std::size_t i = 0; i < 3; ++i) {
    prefix[i] = static_cast<std::int64_t>(rng.below(kLocationRange[i]));
  }
  std::array<std::int64_t, kSide> rows{};
  std::array<std::int64_t, kSide> cols{};
  for (int k = 0; k < kSide; ++k) {
    rows[k] = static_cast<std::int64_t>(rng.below(kLocationRange[3] / kSide)) *
                  kSide + k;
    cols[k] = static_cast<std::int64_t>(rng.below(kLocationRange[4] / kSide)) *
                  kSide + k;
  }
  for (int j = 0; j < kSide * kSide; ++j) {
    AddressEvent e;
    e.server_id = server_id;
    e.ts = start + j * kSpacing;
    e.location = {prefix[0], prefix[1], prefix[2], rows[j % kSide],
                  cross ? cols[j / kSide] : cols[j % kSide]};
    out->address.push_back(std::move(e));
  }
}

}  // namespace

void ValidateSyntheticConfig(const SyntheticConfig& c) {
  if (c.n_servers < 1) throw ConfigError("n_servers", "must be >= 1");
  if (c.n_days < 1) throw ConfigError("n_days", "must be >= 1");
  if (!(c.fail_fraction >= 0.0 && c.fail_fraction <= 1.0)) {
    throw ConfigError("fail_fraction", "must be in [0, 1]");
  }
  if (c.precursor_window_minutes < 1) {
    throw ConfigError("precursor_window_minutes", "must be >= 1");
  }
  if (!(c.burst_intensity > 1.0) || !std::isfinite(c.burst_intensity)) {
    throw ConfigError("burst_intensity", "must be finite and > 1");
  }
  if (c.mca_vocab_size < 1) throw ConfigError("mca_vocab_size", "must be >= 1");
  if (c.transaction_vocab_size < 1) {
    throw ConfigError("transaction_vocab_size", "must be >= 1");
  }
  if (!(c.background_events_per_day > 0.0) ||
      !std::isfinite(c.background_events_per_day)) {
    throw ConfigError("background_events_per_day", "must be finite and > 0");
  }
  if (!(c.decoy_fraction >= 0.0 && c.decoy_fraction <= 1.0)) {
    throw ConfigError("decoy_fraction", "must be in [0, 1]");
  }
  if (c.plant_quintuple_drift && (c.drift_day < 1 || c.drift_day >= c.n_days)) {
    throw ConfigError("drift_day", "must be in [1, n_days)");
  }
}

EventStore GenerateSynthetic(const SyntheticConfig& config, std::uint64_t seed) {
  ValidateSyntheticConfig(config);
  Rng rng(seed);
  const Minute horizon = static_cast<Minute>(config.n_days) * kMinutesPerDay;
  const Minute window = config.precursor_window_minutes;

  EventStore store;
  std::vector<ServerPlan> plans(config.n_servers);
  for (int i = 0; i < config.n_servers; ++i) {
    plans[i].id = ServerName(i, config.n_servers);
    ServerMeta meta{plans[i].id, "M" + std::to_string(rng.below(4)),
                    "V" + std::to_string(rng.below(3))};
    store.meta.emplace(plans[i].id, std::move(meta));
  }

  // Partial Fisher-Yates: the first n_fail entries fail, the next n_decoy
  // are healthy servers with scattered bursts.
  std::vector<int> order(config.n_servers);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < config.n_servers; ++i) {
    const auto j = i + static_cast<int>(rng.below(config.n_servers - i));
    std::swap(order[i], order[j]);
  }
  const int n_fail =
      static_cast<int>(std::llround(config.n_servers * config.fail_fraction));
  const int n_decoy = static_cast<int>(
      std::llround((config.n_servers - n_fail) * config.decoy_fraction));

  const Minute earliest_failure = std::min(horizon - 1, window);
  for (int r = 0; r < config.n_servers; ++r) {
    ServerPlan& plan = plans[order[r]];
    if (r < n_fail) {
      plan.failing = true;
      plan.failure_ts = earliest_failure +
                        static_cast<Minute>(rng.below(horizon - earliest_failure));
      plan.burst_start = std::max<Minute>(0, plan.failure_ts - window);
      plan.burst_end = plan.failure_ts;
      if (config.plant_quintuple_drift &&
          plan.failure_ts < static_cast<Minute>(config.drift_day) * kMinutesPerDay) {
        plan.silent = rng.bernoulli(kSilentFraction);
      }
      for (std::size_t i = 0; i < kNumLocationLevels; ++i) {
        plan.weak_cell[i] = static_cast<std::int64_t>(rng.below(kLocationRange[i]));
      }
      store.tickets.push_back({plan.id, plan.failure_ts});
    } else if (r < n_fail + n_decoy) {
      plan.decoy = true;
      const Minute span = std::max<Minute>(1, horizon - window);
      plan.burst_start = static_cast<Minute>(rng.below(span));
      plan.burst_end = std::min(horizon, plan.burst_start + window);
    }
  }

  for (int i = 0; i < config.n_servers; ++i) {
    ServerSimulator sim(config, plans[i], rng.fork(static_cast<std::uint64_t>(i)),
                        &store);
    sim.Run(horizon);
  }

  if (config.plant_quintuple_drift) {
    const Minute drift = static_cast<Minute>(config.drift_day) * kMinutesPerDay;
    const std::array<std::pair<Minute, Minute>, 2> eras = {
        std::pair{Minute{0}, drift}, std::pair{drift, horizon}};
    constexpr Minute kPatternSpan = 16 * 20;
    for (int i = 0; i < config.n_servers; ++i) {
      const ServerPlan& plan = plans[i];
      Rng prng = rng.fork(0x5EED0000ULL + static_cast<std::uint64_t>(i));
      for (std::size_t era = 0; era < eras.size(); ++era) {
        const auto [lo, hi] = eras[era];
        if (plan.failing && plan.failure_ts < lo) break;
        const bool fails_here =
            plan.failing && plan.failure_ts >= lo && plan.failure_ts < hi;
        const bool cross = (era == 0) ? fails_here : !fails_here;
        Minute start;
        if (fails_here) {
          start = std::max(lo, plan.failure_ts - window);
          if (start + kPatternSpan >= plan.failure_ts) continue;
        } else {
          if (hi - lo <= kPatternSpan) continue;
          start = lo + static_cast<Minute>(prng.below(hi - lo - kPatternSpan));
        }
        PlantQuintuplePattern(plan.id, start, cross, prng, &store);
      }
    }
  }

  store.Canonicalize();
  return store;
}

}  // namespace memfail
