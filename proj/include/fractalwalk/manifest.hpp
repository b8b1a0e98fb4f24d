#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "fractalwalk/common.hpp"

namespace fractalwalk {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Run parameters echoed into every output file, with a stable hash so that
/// reruns can be compared byte for byte.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value) {
    for (auto& e : entries)
      if (e.first == key) {
        e.second = value;
        return;
      }
    entries.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set(const std::string& key, long value) { set(key, std::to_string(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  void set(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
  }

  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : entries) s += k + "=" + v + ";";
    return s;
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }

  std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash()));
    return buf;
  }

  /// One "<prefix> key=value" line per entry plus the hash line.
  std::string comment_block(const std::string& prefix) const {
    std::string s;
    for (const auto& [k, v] : entries) s += prefix + " " + k + "=" + v + "\n";
    s += prefix + " config_hash=" + hash_hex() + "\n";
    return s;
  }
};

}  // namespace fractalwalk
