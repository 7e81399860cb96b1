// Copyright 2026 The armstab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ARMSTAB_CSV_HPP_
#define ARMSTAB_CSV_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace armstab::csv {

/// Shortest round-trip decimal form of a double. Locale independent; the same
/// value always prints the same bytes, which is what keeps re-runs of a
/// command byte-identical.
std::string format_double(double v);

std::string format_int(std::int64_t v);

/// Line-oriented CSV writer with '\n' endings.
class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::string& header);

  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  /// Pre-formatted cells (for mixed string/number rows).
  void raw_row(const std::vector<std::string>& cells);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Reads a numeric CSV with a single header line. Throws ValidationError on
/// ragged rows or non-numeric cells, IoError if the file cannot be opened.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
Table read_table(const std::filesystem::path& path);

}  // namespace armstab::csv

#endif  // ARMSTAB_CSV_HPP_
