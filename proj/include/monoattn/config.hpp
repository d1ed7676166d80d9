#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "monoattn/model.hpp"
#include "monoattn/task.hpp"
#include "monoattn/train.hpp"

namespace monoattn {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string description;
};

// The full key table with defaults; single source of truth for --help and
// unknown-key checking.
const std::vector<ConfigKey>& configKeys();

// Flat `key = value` configuration. Every key belongs to exactly one module;
// unknown keys are an error.
class RunConfig {
 public:
  // Defaults only.
  RunConfig();
  // File (optional) + `key=value` overrides, which win over file values.
  static RunConfig resolve(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  int getInt(const std::string& key) const;
  double getDouble(const std::string& key) const;
  std::uint64_t getU64(const std::string& key) const;

  ModelConfig modelConfig() const;
  TaskConfig taskConfig() const;
  TrainOptions trainOptions() const;

  // `key = value` lines, sorted by key, echoed into run directories.
  std::vector<std::string> lines() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace monoattn
