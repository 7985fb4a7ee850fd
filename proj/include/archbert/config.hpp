#pragma once

#include <string>
#include <vector>

#include "archbert/datagen.hpp"
#include "archbert/model.hpp"
#include "archbert/training.hpp"

namespace archbert {

/// Merged generator, model and training settings.
///
/// File format: `key = value` lines under `[gen]`, `[model]` or `[train]`
/// headers; `#` starts a comment. Unknown sections or keys are rejected.
struct RunConfig {
  GenConfig gen;
  ModelConfig model;
  TrainConfig train;

  void set(const std::string& section, const std::string& key, const std::string& value);
  std::string get(const std::string& section, const std::string& key) const;
  static const std::vector<std::string>& keys(const std::string& section);
  void validate() const;
  /// Seeds every random stream from one value.
  void set_seed(std::uint64_t seed);

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string serialize() const;
};

}  // namespace archbert
