#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace spikehar {

// Flat key=value configuration. Later layers override earlier ones:
// file, then SPIKEHAR_<KEY> environment variables, then explicit sets.
class Config {
 public:
  // `#` starts a comment; blank lines are ignored; keys are case-sensitive.
  static Config parse(const std::string& text, const std::string& origin = "<text>");
  static Config load(const std::filesystem::path& path);

  // Overrides every known key, and any listed extra key, from the environment.
  void apply_env(const std::initializer_list<std::string>& keys = {});
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// SPIKEHAR_ + key upper-cased with '.' and '-' mapped to '_'.
std::string env_name(const std::string& key);

}  // namespace spikehar
