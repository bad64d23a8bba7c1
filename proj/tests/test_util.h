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

#ifndef MEMFAIL_TESTS_TEST_UTIL_H_
#define MEMFAIL_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <unistd.h>

#include "memfail/ingest.h"

namespace memfail::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("memfail_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline const char* kMceHeader = "server_id,ts,mca_id,transaction\n";
inline const char* kAddressHeader = "server_id,ts,memory_id,rank_id,bank_id,row,col\n";
inline const char* kKernelHeader =
    "server_id,ts,sel,hwerr_n,hwerr_s,hwerr_m,hwerr_p,hwerr_fl,hwerr_r,hwerr_cd,"
    "cmci_sub,hwerr_pi,hwerr_o\n";
inline const char* kTicketHeader = "server_id,failure_ts\n";
inline const char* kMetaHeader = "server_id,manufacturer,vendor\n";

// Writes a dataset directory from table bodies (rows only, headers added).
inline void WriteDataset(const std::filesystem::path& dir, const std::string& mce,
                         const std::string& address, const std::string& kernel,
                         const std::string& tickets, const std::string& meta) {
  std::filesystem::create_directories(dir);
  WriteFile(dir / "mce_log.csv", kMceHeader + mce);
  WriteFile(dir / "address_log.csv", kAddressHeader + address);
  WriteFile(dir / "kernel_log.csv", kKernelHeader + kernel);
  WriteFile(dir / "failure_tag.csv", kTicketHeader + tickets);
  WriteFile(dir / "server_meta.csv", kMetaHeader + meta);
}

inline MceEvent Mce(const std::string& server, Minute ts, const std::string& code = "Z",
                    const std::string& txn = "T1") {
  return {server, ts, code, txn};
}

inline AddressEvent Address(const std::string& server, Minute ts,
                            std::array<std::int64_t, kNumLocationLevels> loc) {
  return {server, ts, loc};
}

inline KernelEvent Kernel(const std::string& server, Minute ts, std::size_t flag = 0) {
  KernelEvent e{server, ts, {}};
  e.flags[flag] = 1;
  return e;
}

inline void AddServer(EventStore* store, const std::string& id,
                      const std::string& manufacturer = "M0",
                      const std::string& vendor = "V0") {
  store->meta.emplace(id, ServerMeta{id, manufacturer, vendor});
}

}  // namespace memfail::testing

#endif  // MEMFAIL_TESTS_TEST_UTIL_H_
