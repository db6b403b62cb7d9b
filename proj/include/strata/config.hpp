#pragma once

#include "strata/io.hpp"
#include "strata/train.hpp"
#include "strata/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace strata {

/// Every setting of a pipeline run. Serialized as a flat key=value file; each
/// key is also a command-line flag (dashes and underscores are interchangeable).
struct RunConfig {
  // paths
  std::string plots;       // directory of point files
  std::string prepared;    // output of `prepare` for the training plots
  std::string reference;   // fully labeled point files
  std::string test_plots;  // held-out point files
  std::string truth;       // prepared directory of the held-out plots
  std::string pred;        // prediction directory to evaluate
  std::string checkpoint;
  std::string out;

  // synthetic data
  int train_plots = 6;
  int test_plots_count = 1;
  double plot_size = 20.0;
  double pulse_density = 30.0;
  double ground_unlabeled_fraction = 0.5;

  TrainConfig train;
  LayerSpec layers;
  bool flat_mesh = false;

  bool baseline_logistic = true;
  bool baseline_forest = true;

  // ablation sweep
  std::string param;
  std::string values;

  void validate() const;
};

/// Names of all keys, in file order.
std::vector<std::string> config_keys();
/// Canonical key for a flag or key spelling ("pixel-size" -> "pixel_size"); empty if unknown.
std::string canonical_key(std::string_view name);

/// Throws ConfigError on unknown keys or malformed values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& cfg, std::string_view key);

KeyValueList to_key_values(const RunConfig& cfg);
RunConfig from_key_values(const KeyValueList& kv, RunConfig base = {});

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path,
                 const std::vector<std::string>& comments = {});

}  // namespace strata
