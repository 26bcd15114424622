/*
 * Copyright 2026 The Attrshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ATTRSHIELD_TESTS_SUPPORT_TEST_UTIL_H_
#define ATTRSHIELD_TESTS_SUPPORT_TEST_UTIL_H_

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "attrshield/corpus.h"
#include "attrshield/embeddings.h"

namespace attrshield::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("attrshield_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<emb::EmbeddingTable> MakeTable(
    std::vector<std::pair<std::string, std::vector<double>>> rows) {
  auto table = std::make_shared<emb::EmbeddingTable>(rows.empty() ? 0 : rows.front().second.size());
  for (const auto& [tok, vec] : rows) table->Add(tok, vec);
  return table;
}

inline corpus::TokenizedDocument Doc(const std::string& text, int label = 0,
                                     std::uint64_t origin = 0) {
  return corpus::TokenizedDocument(corpus::Tokenize(text), label, origin);
}

struct CommandResult {
  int code = -1;
  std::string out;
};

// Runs a shell command, capturing stdout; stderr is discarded.
inline CommandResult RunCommand(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace attrshield::testing

#endif  // ATTRSHIELD_TESTS_SUPPORT_TEST_UTIL_H_
