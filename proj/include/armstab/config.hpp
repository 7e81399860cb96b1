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

#ifndef ARMSTAB_CONFIG_HPP_
#define ARMSTAB_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace armstab {

/// Human-readable `key = value` configuration file.
///
///   # comment
///   motion.kind = sinusoid
///   motion.amplitude = 0.05
///   arm.extrinsics = 0 0 0 1 0 0 0
///
/// Values are scalars, words, or space-separated number tuples. Typed getters
/// mark keys as consumed; require_all_consumed() rejects unknown keys so that
/// config typos fail loudly instead of silently using defaults.
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  double require_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  /// Throws ValidationError listing keys that no getter ever touched.
  void require_all_consumed() const;

  /// Original file text (for embedding in run manifests).
  const std::string& text() const { return text_; }

  /// FNV-1a 64-bit hash of the raw text, hex encoded.
  std::string hash() const;

 private:
  std::string raw(const std::string& key) const;

  std::string text_;
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> consumed_;
};

}  // namespace armstab

#endif  // ARMSTAB_CONFIG_HPP_
