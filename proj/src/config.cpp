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

#include "armstab/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "armstab/errors.hpp"

namespace armstab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ValidationError("config key '" + key + "': expected a number, got '" +
                          value + "'");
  }
  return v;
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file: " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string Config::raw(const std::string& key) const {
  consumed_[key] = true;
  const auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const std::string v = raw(key);
  return v.empty() ? fallback : parse_double(key, v);
}

double Config::require_double(const std::string& key) const {
  const std::string v = raw(key);
  if (v.empty()) throw ValidationError("config key '" + key + "' is required");
  return parse_double(key, v);
}

std::int64_t Config::get_int(const std::string& key,
                             std::int64_t fallback) const {
  const std::string v = raw(key);
  if (v.empty()) return fallback;
  const double d = parse_double(key, v);
  const auto i = static_cast<std::int64_t>(d);
  if (static_cast<double>(i) != d) {
    throw ValidationError("config key '" + key + "': expected an integer");
  }
  return i;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const std::string v = raw(key);
  if (v.empty()) return fallback;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ValidationError("config key '" + key + "': expected a boolean, got '" +
                        v + "'");
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const std::string v = raw(key);
  return v.empty() ? fallback : v;
}

std::string Config::require_string(const std::string& key) const {
  const std::string v = raw(key);
  if (v.empty()) throw ValidationError("config key '" + key + "' is required");
  return v;
}

std::vector<double> Config::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  const std::string v = raw(key);
  if (v.empty()) return fallback;
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(key, tok));
  return out;
}

void Config::require_all_consumed() const {
  std::string unknown;
  for (const auto& [key, _] : values_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw ValidationError("unknown config keys: " + unknown);
  }
}

std::string Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text_) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}


}  // namespace armstab
