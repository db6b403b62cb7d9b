#pragma once

#include "strata/cylinder.hpp"
#include "strata/elevation.hpp"
#include "strata/losses.hpp"
#include "strata/raster.hpp"
#include "strata/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace strata {

// Architecture constants.
inline constexpr int kSa1Centroids = 1024;
inline constexpr double kSa1Radius = 0.75;
inline constexpr int kSa2Centroids = 256;
inline constexpr double kSa2Radius = 2.0;
inline constexpr int kGroupSize = 16;
inline constexpr int kInterpNeighbors = 3;
inline constexpr int kMinSubsample = 8;

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// Fixed parameter layout: weights are (in x out), biases (1 x out), row-major.
const std::vector<ParamBlock>& net_layout();
std::size_t param_count();

struct NetParams {
  std::vector<double> values;
  std::uint64_t seed = 0;

  const std::vector<ParamBlock>& layout() const { return net_layout(); }
  RowMatrix block(std::size_t i) const;
  friend bool operator==(const NetParams&, const NetParams&) = default;
};

/// He fan-in initialization (normal, std sqrt(2 / fan_in)); biases zero.
NetParams init_params(std::uint64_t seed);

/// "STRNETCK" magic, u32 version, u64 seed, layout table, u64 count, f64 payload (all little-endian).
void save_params(const NetParams& params, const std::filesystem::path& path);
NetParams load_params(const std::filesystem::path& path);

/// Class probabilities for every cylinder point (M x 6).
RowMatrix forward(const NetParams& params, const Cylinder& cylinder, int S, std::uint64_t seed);

/// One supervised cylinder. Pointers must outlive the call.
struct TrainingSample {
  const Cylinder* cylinder = nullptr;
  std::vector<Label> labels;             // one per cylinder point
  const LayerTruth* truth = nullptr;     // plot-level truth; 2D term skipped when null
  const GammaMixture* mixture = nullptr; // elevation term skipped when null
  std::uint64_t seed = 0;                // subsampling seed
};

struct LossSpec {
  LossWeights weights;
  Loss3dOptions loss3d;
};

struct LossBreakdown {
  double l3d = 0.0;
  double l2d = 0.0;
  double lelev = 0.0;
  double total = 0.0;
};

struct ValueAndGrad {
  LossBreakdown loss;          // batch means
  std::vector<double> grad;    // d total / d params, same layout as NetParams::values
  std::uint64_t structure = 0; // digest of all non-smooth branch choices
};

/// Batch-mean loss and its exact gradient. Per-sample gradients are summed in
/// sample order. Throws NumericError naming the term when a loss is non-finite.
ValueAndGrad value_and_grad(const NetParams& params, std::span<const TrainingSample> batch, int S,
                            const LossSpec& spec);

}  // namespace strata
