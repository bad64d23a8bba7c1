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

#include "memfail/ingest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_map>

#include "csv.h"

namespace memfail {
namespace {

template <typename Event>
void SortByTimeThenServer(std::vector<Event>* events) {
  std::stable_sort(events->begin(), events->end(),
                   [](const Event& a, const Event& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     return a.server_id < b.server_id;
                   });
}

template <typename Event>
bool IsSortedByTimeThenServer(const std::vector<Event>& events) {
  return std::is_sorted(events.begin(), events.end(),
                        [](const Event& a, const Event& b) {
                          if (a.ts != b.ts) return a.ts < b.ts;
                          return a.server_id < b.server_id;
                        });
}

Minute ParseTs(const internal::CsvReader& reader, std::size_t col) {
  const std::int64_t ts = reader.Int(col);
  if (ts < 0) reader.Fail(col, "negative timestamp");
  return ts;
}

void RequireKnownServer(const internal::CsvReader& reader,
                        const std::map<std::string, ServerMeta>& meta,
                        const std::string& server_id) {
  if (!meta.contains(server_id)) {
    reader.Fail(0, "unknown server '" + server_id + "' (not in server_meta)");
  }
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  return out;
}

}  // namespace

void EventStore::Canonicalize() {
  SortByTimeThenServer(&mce);
  SortByTimeThenServer(&address);
  SortByTimeThenServer(&kernel);
  std::stable_sort(tickets.begin(), tickets.end(),
                   [](const FailureTicket& a, const FailureTicket& b) {
                     return a.server_id < b.server_id;
                   });
}

void EventStore::Validate() const {
  auto check_server = [&](const std::string& id, const char* table) {
    if (id.empty()) throw DataError(std::string(table) + ": empty server_id");
    if (!meta.contains(id)) {
      throw DataError(std::string(table) + ": unknown server '" + id + "'");
    }
  };
  auto check_ts = [](Minute ts, const char* table) {
    if (ts < 0) throw DataError(std::string(table) + ": negative timestamp");
  };
  for (const auto& e : mce) {
    check_server(e.server_id, "mce_log");
    check_ts(e.ts, "mce_log");
  }
  for (const auto& e : address) {
    check_server(e.server_id, "address_log");
    check_ts(e.ts, "address_log");
    for (auto v : e.location) {
      if (v < kUnknownLocation) {
        throw DataError("address_log: location value below -1");
      }
    }
  }
  for (const auto& e : kernel) {
    check_server(e.server_id, "kernel_log");
    check_ts(e.ts, "kernel_log");
    for (auto f : e.flags) {
      if (f > 1) throw DataError("kernel_log: flag value not 0/1");
    }
  }
  if (!IsSortedByTimeThenServer(mce) || !IsSortedByTimeThenServer(address) ||
      !IsSortedByTimeThenServer(kernel)) {
    throw DataError("event tables not sorted by (ts, server_id)");
  }
  std::set<std::string> ticketed;
  for (const auto& t : tickets) {
    check_server(t.server_id, "failure_tag");
    check_ts(t.failure_ts, "failure_tag");
    if (!ticketed.insert(t.server_id).second) {
      throw DataError("failure_tag: duplicate ticket for '" + t.server_id + "'");
    }
  }
  for (const auto& [id, m] : meta) {
    if (id != m.server_id) throw DataError("server_meta: key mismatch");
  }
}

DatasetPaths DatasetPaths::InDirectory(const std::filesystem::path& dir) {
  return {dir / "mce_log.csv", dir / "address_log.csv", dir / "kernel_log.csv",
          dir / "failure_tag.csv", dir / "server_meta.csv"};
}

EventStore ParseTables(const DatasetPaths& paths) {
  EventStore store;

  {
    internal::CsvReader reader(paths.meta.string(),
                               {"server_id", "manufacturer", "vendor"});
    while (reader.Next()) {
      ServerMeta m{reader.String(0, false), reader.String(1), reader.String(2)};
      if (store.meta.contains(m.server_id)) {
        reader.Fail(0, "duplicate server '" + m.server_id + "'");
      }
      store.meta.emplace(m.server_id, std::move(m));
    }
  }

  {
    internal::CsvReader reader(paths.mce.string(),
                               {"server_id", "ts", "mca_id", "transaction"});
    while (reader.Next()) {
      MceEvent e{reader.String(0, false), ParseTs(reader, 1), reader.String(2),
                 reader.String(3)};
      RequireKnownServer(reader, store.meta, e.server_id);
      store.mce.push_back(std::move(e));
    }
  }

  {
    internal::CsvReader reader(
        paths.address.string(),
        {"server_id", "ts", "memory_id", "rank_id", "bank_id", "row", "col"});
    while (reader.Next()) {
      AddressEvent e;
      e.server_id = reader.String(0, false);
      e.ts = ParseTs(reader, 1);
      for (std::size_t i = 0; i < kNumLocationLevels; ++i) {
        e.location[i] = reader.Int(2 + i);
        if (e.location[i] < kUnknownLocation) {
          reader.Fail(2 + i, "location must be -1 or >= 0");
        }
      }
      RequireKnownServer(reader, store.meta, e.server_id);
      store.address.push_back(std::move(e));
    }
  }

  {
    std::vector<std::string_view> header = {"server_id", "ts"};
    header.insert(header.end(), kKernelFlagNames.begin(),
                  kKernelFlagNames.end());
    internal::CsvReader reader(paths.kernel.string(), header);
    while (reader.Next()) {
      KernelEvent e;
      e.server_id = reader.String(0, false);
      e.ts = ParseTs(reader, 1);
      for (std::size_t i = 0; i < kNumKernelFlags; ++i) {
        const auto v = reader.Int(2 + i);
        if (v != 0 && v != 1) reader.Fail(2 + i, "flag must be 0 or 1");
        e.flags[i] = static_cast<std::uint8_t>(v);
      }
      RequireKnownServer(reader, store.meta, e.server_id);
      store.kernel.push_back(std::move(e));
    }
  }

  {
    internal::CsvReader reader(paths.failure.string(),
                               {"server_id", "failure_ts"});
    std::unordered_map<std::string, std::size_t> seen;
    while (reader.Next()) {
      FailureTicket t{reader.String(0, false), ParseTs(reader, 1)};
      RequireKnownServer(reader, store.meta, t.server_id);
      auto it = seen.find(t.server_id);
      if (it == seen.end()) {
        seen.emplace(t.server_id, store.tickets.size());
        store.tickets.push_back(std::move(t));
        continue;
      }
      FailureTicket& kept = store.tickets[it->second];
      std::cerr << "warning: " << reader.path() << ":" << reader.line_no()
                << ": extra ticket for '" << t.server_id
                << "', keeping the earliest\n";
      kept.failure_ts = std::min(kept.failure_ts, t.failure_ts);
    }
  }

  store.Canonicalize();
  return store;
}

void WriteTables(const EventStore& store, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": " + ec.message());
  const auto paths = DatasetPaths::InDirectory(dir);

  {
    auto out = OpenForWrite(paths.mce);
    out << "server_id,ts,mca_id,transaction\n";
    for (const auto& e : store.mce) {
      out << e.server_id << ',' << e.ts << ',' << e.mca_id << ','
          << e.transaction << '\n';
    }
  }
  {
    auto out = OpenForWrite(paths.address);
    out << "server_id,ts,memory_id,rank_id,bank_id,row,col\n";
    for (const auto& e : store.address) {
      out << e.server_id << ',' << e.ts;
      for (auto v : e.location) out << ',' << v;
      out << '\n';
    }
  }
  {
    auto out = OpenForWrite(paths.kernel);
    out << "server_id,ts";
    for (auto name : kKernelFlagNames) out << ',' << name;
    out << '\n';
    for (const auto& e : store.kernel) {
      out << e.server_id << ',' << e.ts;
      for (auto f : e.flags) out << ',' << static_cast<int>(f);
      out << '\n';
    }
  }
  {
    auto out = OpenForWrite(paths.failure);
    out << "server_id,failure_ts\n";
    for (const auto& t : store.tickets) {
      out << t.server_id << ',' << t.failure_ts << '\n';
    }
  }
  {
    auto out = OpenForWrite(paths.meta);
    out << "server_id,manufacturer,vendor\n";
    for (const auto& [id, m] : store.meta) {
      out << id << ',' << m.manufacturer << ',' << m.vendor << '\n';
    }
    if (!out) throw DataError(paths.meta.string() + ": write failed");
  }
}

}  // namespace memfail
