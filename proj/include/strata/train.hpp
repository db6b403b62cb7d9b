#pragma once

#include "strata/cylinder.hpp"
#include "strata/elevation.hpp"
#include "strata/losses.hpp"
#include "strata/network.hpp"
#include "strata/raster.hpp"
#include "strata/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace strata {

struct TrainConfig {
  int epochs = 100;
  int cylinders_per_epoch = 1000;
  int batch_size = 5;
  double weight_decay = 1e-3;
  double lr = 5e-4;
  int lr_halving_period = 20;
  int S = 16384;
  double radius = 5.0;
  double pixel_size = 0.5;
  LossWeights weights;
  bool supervise_gv = false;
  std::uint64_t seed = 0;
  double noise_sigma = 0.01;
  double noise_clip = 0.03;
  int min_points = 64;        // cylinders with fewer points are skipped
  int checkpoint_every = 10;  // epochs; 0 disables periodic checkpoints

  void validate() const;
};

/// Step schedule: lr / 2^floor(epoch / halving_period), epochs counted from 0.
double learning_rate(const TrainConfig& cfg, int epoch);

/// Random z-rotation of (dx, dy) and clipped Gaussian noise on normalized intensity.
Cylinder augment(const Cylinder& cylinder, std::uint64_t seed, double sigma = 0.01, double clip = 0.03);
/// Deterministic core of augment: rotate by theta, add noise[i] to point i's intensity.
Cylinder augment_with(const Cylinder& cylinder, double theta, std::span<const double> noise);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Adam with decoupled weight decay. Throws NumericError naming the block of a
/// non-finite gradient (parameters untouched in that case).
void optimizer_step(NetParams& params, std::span<const double> grad, AdamState& state, double lr,
                    double weight_decay);

/// A plot ready for training.
struct TrainingPlot {
  PlotCloud cloud;
  LayerTruth truth;
  GammaMixture mixture;
};

struct EpochLog {
  int epoch = 0;
  double l3d = 0.0, l2d = 0.0, lelev = 0.0, total = 0.0;
  double lr = 0.0;
  int cylinders = 0;
  double seconds = 0.0;
};

struct FitOptions {
  std::filesystem::path out_dir;  // empty: nothing written
  std::function<void(const EpochLog&)> on_epoch;
};

struct FitResult {
  NetParams params;
  std::vector<EpochLog> log;
};

/// Trains from init_params(cfg.seed). Writes train_log.jsonl, periodic
/// checkpoint_eNNN.bin and the final checkpoint.bin when out_dir is set.
FitResult fit(std::span<const TrainingPlot> plots, const TrainConfig& cfg, const FitOptions& opts = {});

}  // namespace strata
