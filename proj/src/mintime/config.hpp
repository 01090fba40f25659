#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mintime {

// Flat key=value run configuration. Every pipeline knob lives here; CLI
// flags and config files write the same keys. Unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  bool has(const std::string& key) const;

  const std::string& get(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  // value must be one of `options`, else ConfigError
  std::string get_enum(const std::string& key, const std::vector<std::string>& options) const;

  uint64_t seed() const;
  int jobs() const;

  // All keys with current values, registration order, one `key=value` per line.
  std::string dump() const;
  std::vector<std::string> keys() const;
  const std::string& describe(const std::string& key) const;

 private:
  struct Entry {
    std::string key;
    std::string value;
    std::string description;
  };
  Entry* find(const std::string& key);
  const Entry* find(const std::string& key) const;
  void add(const std::string& key, const std::string& def, const std::string& desc);

  std::vector<Entry> entries_;
};

}  // namespace mintime
