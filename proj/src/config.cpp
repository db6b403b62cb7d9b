#include "strata/config.hpp"

#include "strata/error.hpp"

#include <algorithm>
#include <charconv>
#include <variant>

namespace strata {

namespace {

using Field = std::variant<std::string RunConfig::*, int RunConfig::*, double RunConfig::*, bool RunConfig::*,
                           int TrainConfig::*, double TrainConfig::*, bool TrainConfig::*,
                           std::uint64_t TrainConfig::*, double LossWeights::*, double LayerSpec::*>;

struct Binding {
  const char* key;
  Field field;
};

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b = {
      {"plots", &RunConfig::plots},
      {"prepared", &RunConfig::prepared},
      {"reference", &RunConfig::reference},
      {"test_plots", &RunConfig::test_plots},
      {"truth", &RunConfig::truth},
      {"pred", &RunConfig::pred},
      {"checkpoint", &RunConfig::checkpoint},
      {"out", &RunConfig::out},
      {"train_plots", &RunConfig::train_plots},
      {"test_plots_count", &RunConfig::test_plots_count},
      {"plot_size", &RunConfig::plot_size},
      {"pulse_density", &RunConfig::pulse_density},
      {"ground_unlabeled_fraction", &RunConfig::ground_unlabeled_fraction},
      {"epochs", &TrainConfig::epochs},
      {"cylinders_per_epoch", &TrainConfig::cylinders_per_epoch},
      {"batch_size", &TrainConfig::batch_size},
      {"weight_decay", &TrainConfig::weight_decay},
      {"lr", &TrainConfig::lr},
      {"lr_halving_period", &TrainConfig::lr_halving_period},
      {"subsample", &TrainConfig::S},
      {"radius", &TrainConfig::radius},
      {"pixel_size", &TrainConfig::pixel_size},
      {"lambda", &LossWeights::lambda_2d},
      {"mu", &LossWeights::mu_elev},
      {"supervise_gv_3d", &TrainConfig::supervise_gv},
      {"seed", &TrainConfig::seed},
      {"noise_sigma", &TrainConfig::noise_sigma},
      {"noise_clip", &TrainConfig::noise_clip},
      {"min_points", &TrainConfig::min_points},
      {"checkpoint_every", &TrainConfig::checkpoint_every},
      {"gv_low", &LayerSpec::gv_low},
      {"gv_high", &LayerSpec::gv_high},
      {"under_high", &LayerSpec::under_high},
      {"flat_mesh", &RunConfig::flat_mesh},
      {"baseline_logistic", &RunConfig::baseline_logistic},
      {"baseline_forest", &RunConfig::baseline_forest},
      {"param", &RunConfig::param},
      {"values", &RunConfig::values},
  };
  return b;
}

const Binding* find(std::string_view key) {
  const std::string k = canonical_key(key);
  for (const auto& b : bindings())
    if (k == b.key) return &b;
  return nullptr;
}

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + std::string(v) + "'");
}

int to_int(std::string_view v, std::string_view key) {
  try {
    const long long x = parse_int(v, key);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) throw FormatError("");
    return static_cast<int>(x);
  } catch (const FormatError&) {
    throw ConfigError("invalid integer for " + std::string(key) + ": '" + std::string(v) + "'");
  }
}

double to_double(std::string_view v, std::string_view key) {
  try {
    return parse_double(v, key);
  } catch (const FormatError&) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + std::string(v) + "'");
  }
}

std::uint64_t to_u64(std::string_view v, std::string_view key) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("invalid unsigned integer for " + std::string(key) + ": '" + std::string(v) + "'");
  return x;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  layers.validate();
  if (train_plots < 1 || test_plots_count < 0) throw ConfigError("train_plots must be positive");
  if (!(plot_size > 0.0) || !(pulse_density > 0.0)) throw ConfigError("plot_size and pulse_density must be positive");
  if (!(ground_unlabeled_fraction >= 0.0 && ground_unlabeled_fraction <= 1.0))
    throw ConfigError("ground_unlabeled_fraction must lie in [0, 1]");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& b : bindings()) out.emplace_back(b.key);
  return out;
}

std::string canonical_key(std::string_view name) {
  while (!name.empty() && name.front() == '-') name.remove_prefix(1);
  std::string k(name);
  std::replace(k.begin(), k.end(), '-', '_');
  for (const auto& b : bindings())
    if (k == b.key) return k;
  return {};
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const Binding* b = find(key);
  if (!b) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  std::visit(
      [&](auto field) {
        using F = decltype(field);
        if constexpr (std::is_same_v<F, std::string RunConfig::*>) cfg.*field = std::string(value);
        else if constexpr (std::is_same_v<F, int RunConfig::*>) cfg.*field = to_int(value, b->key);
        else if constexpr (std::is_same_v<F, double RunConfig::*>) cfg.*field = to_double(value, b->key);
        else if constexpr (std::is_same_v<F, bool RunConfig::*>) cfg.*field = parse_bool(value, b->key);
        else if constexpr (std::is_same_v<F, int TrainConfig::*>) cfg.train.*field = to_int(value, b->key);
        else if constexpr (std::is_same_v<F, double TrainConfig::*>) cfg.train.*field = to_double(value, b->key);
        else if constexpr (std::is_same_v<F, bool TrainConfig::*>) cfg.train.*field = parse_bool(value, b->key);
        else if constexpr (std::is_same_v<F, std::uint64_t TrainConfig::*>) cfg.train.*field = to_u64(value, b->key);
        else if constexpr (std::is_same_v<F, double LossWeights::*>) cfg.train.weights.*field = to_double(value, b->key);
        else cfg.layers.*field = to_double(value, b->key);
      },
      b->field);
}

std::string get_config_value(const RunConfig& cfg, std::string_view key) {
  const Binding* b = find(key);
  if (!b) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  return std::visit(
      [&](auto field) -> std::string {
        using F = decltype(field);
        if constexpr (std::is_same_v<F, std::string RunConfig::*>) return cfg.*field;
        else if constexpr (std::is_same_v<F, int RunConfig::*>) return std::to_string(cfg.*field);
        else if constexpr (std::is_same_v<F, double RunConfig::*>) return format_double(cfg.*field);
        else if constexpr (std::is_same_v<F, bool RunConfig::*>) return cfg.*field ? "true" : "false";
        else if constexpr (std::is_same_v<F, int TrainConfig::*>) return std::to_string(cfg.train.*field);
        else if constexpr (std::is_same_v<F, double TrainConfig::*>) return format_double(cfg.train.*field);
        else if constexpr (std::is_same_v<F, bool TrainConfig::*>) return cfg.train.*field ? "true" : "false";
        else if constexpr (std::is_same_v<F, std::uint64_t TrainConfig::*>) return std::to_string(cfg.train.*field);
        else if constexpr (std::is_same_v<F, double LossWeights::*>) return format_double(cfg.train.weights.*field);
        else return format_double(cfg.layers.*field);
      },
      b->field);
}

KeyValueList to_key_values(const RunConfig& cfg) {
  KeyValueList kv;
  for (const auto& b : bindings()) kv.emplace_back(b.key, get_config_value(cfg, b.key));
  return kv;
}

RunConfig from_key_values(const KeyValueList& kv, RunConfig base) {
  for (const auto& [k, v] : kv) set_config_value(base, k, v);
  return base;
}

RunConfig load_config(const std::filesystem::path& path) { return from_key_values(read_key_values(path)); }

void save_config(const RunConfig& cfg, const std::filesystem::path& path, const std::vector<std::string>& comments) {
  write_key_values(to_key_values(cfg), path, comments);
}

}  // namespace strata
