#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "monoattn/rng.hpp"
#include "monoattn/tape.hpp"

namespace monoattn::ad {

// Named parameter collection with deterministic (name-ordered) iteration.
// Lookup of a missing name throws; creation of a duplicate name throws.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, Matrix init);
  Parameter& createUniform(const std::string& name, Eigen::Index rows,
                           Eigen::Index cols, double scale, Rng& rng);
  Parameter& createZeros(const std::string& name, Eigen::Index rows,
                         Eigen::Index cols);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::map<std::string, Parameter>& entries() { return entries_; }
  const std::map<std::string, Parameter>& entries() const { return entries_; }
  std::size_t count() const { return entries_.size(); }
  std::size_t coordCount() const;

  void zeroGrad();

  // Plain-text checkpoint, `monoattn-ckpt v1`. Values are written with 17
  // significant digits, which round-trips IEEE doubles exactly.
  void save(const std::filesystem::path& file) const;
  void load(const std::filesystem::path& file);  // shapes must match
  static ParameterStore loaded(const std::filesystem::path& file);

 private:
  std::map<std::string, Parameter> entries_;
};

}  // namespace monoattn::ad
