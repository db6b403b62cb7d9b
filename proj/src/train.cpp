#include "strata/train.hpp"

#include "strata/error.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace strata {

namespace {

// Seed streams.
constexpr std::uint64_t kStreamCenters = 1;
constexpr std::uint64_t kStreamSubsample = 2;
constexpr std::uint64_t kStreamAugment = 3;

struct Candidate {
  std::size_t plot;
  Vec2 center;
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || cylinders_per_epoch < 1 || batch_size < 1 || lr_halving_period < 1)
    throw ConfigError("epochs, cylinders_per_epoch, batch_size and lr_halving_period must be positive");
  if (batch_size > cylinders_per_epoch) throw ConfigError("batch_size must not exceed cylinders_per_epoch");
  if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw ConfigError("lr must be positive and weight_decay non-negative");
  if (S < kMinSubsample) throw ConfigError("subsample size must be at least 8");
  if (!(radius > 0.0) || !(pixel_size > 0.0)) throw ConfigError("radius and pixel_size must be positive");
  if (!(noise_sigma >= 0.0) || !(noise_clip >= 0.0)) throw ConfigError("noise parameters must be non-negative");
  if (min_points < 1 || checkpoint_every < 0) throw ConfigError("min_points must be positive");
  weights.validate();
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  return std::ldexp(cfg.lr, -(epoch / cfg.lr_halving_period));
}

Cylinder augment_with(const Cylinder& cylinder, double theta, std::span<const double> noise) {
  if (noise.size() != cylinder.size()) throw ConfigError("noise length does not match cylinder");
  Cylinder out = cylinder;
  const double c = std::cos(theta), s = std::sin(theta);
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    const double x = cylinder.features(i, kDx), y = cylinder.features(i, kDy);
    out.features(i, kDx) = c * x - s * y;
    out.features(i, kDy) = s * x + c * y;
    out.features(i, kIntensity) += noise[static_cast<std::size_t>(i)];
  }
  return out;
}

Cylinder augment(const Cylinder& cylinder, std::uint64_t seed, double sigma, double clip) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double theta = angle(rng);
  std::vector<double> noise(cylinder.size(), 0.0);
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& v : noise) v = std::clamp(n(rng), -clip, clip);
  }
  return augment_with(cylinder, theta, noise);
}

void optimizer_step(NetParams& params, std::span<const double> grad, AdamState& state, double lr,
                    double weight_decay) {
  const std::size_t n = params.values.size();
  if (grad.size() != n) throw ConfigError("gradient length does not match parameters");
  for (const auto& b : net_layout())
    for (std::size_t k = 0; k < b.size(); ++k)
      if (!std::isfinite(grad[b.offset + k])) throw NumericError("non-finite gradient in block " + b.name);
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    const double mh = state.m[i] / c1;
    const double vh = state.v[i] / c2;
    const double p = params.values[i];
    params.values[i] = p - lr * (mh / (std::sqrt(vh) + kAdamEps)) - lr * weight_decay * p;
  }
}

FitResult fit(std::span<const TrainingPlot> plots, const TrainConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  if (plots.empty()) throw ConfigError("no trainable plots");
  std::vector<Candidate> candidates;
  std::vector<std::vector<Label>> labels;
  for (std::size_t p = 0; p < plots.size(); ++p) {
    const auto& plot = plots[p];
    if (plot.cloud.empty()) throw ConfigError("training plot " + plot.cloud.plot_id() + " is empty");
    if (!plot.mixture.fitted) throw ConfigError("training plot " + plot.cloud.plot_id() + " has no fitted mixture");
    if (!(plot.truth.geometry() == RasterGeometry::for_cloud(plot.cloud, cfg.pixel_size)))
      throw ConfigError("truth raster of " + plot.cloud.plot_id() + " does not match the pixel size");
    for (const auto& c : training_grid(plot.cloud, cfg.radius)) candidates.push_back({p, c});
    labels.push_back(plot.cloud.labels());
  }

  std::ofstream log_file;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    log_file.open(opts.out_dir / "train_log.jsonl");
    if (!log_file) throw FormatError("cannot write the training log in " + opts.out_dir.string());
  }

  FitResult result;
  result.params = init_params(cfg.seed);
  AdamState adam;
  LossSpec spec;
  spec.weights = cfg.weights;
  spec.loss3d.supervise_gv = cfg.supervise_gv;
  const auto n_per_epoch = static_cast<std::size_t>(cfg.cylinders_per_epoch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = learning_rate(cfg, epoch);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, kStreamCenters, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    // Cylinders of this epoch, taken from the shuffled grid; centers are reused
    // (reshuffled) only when the grid has fewer usable centers than N.
    std::vector<Cylinder> cyls;
    std::vector<std::size_t> owner;
    std::size_t pos = 0, usable_seen = 0;
    while (cyls.size() < n_per_epoch) {
      if (pos == order.size()) {
        if (usable_seen == 0) throw ConfigError("every training cylinder has fewer than min_points points");
        std::shuffle(order.begin(), order.end(), rng);
        pos = 0;
      }
      const auto& cand = candidates[order[pos++]];
      Cylinder cyl = extract_cylinder(plots[cand.plot].cloud, cand.center, cfg.radius);
      if (cyl.size() < static_cast<std::size_t>(cfg.min_points)) continue;
      ++usable_seen;
      cyls.push_back(std::move(cyl));
      owner.push_back(cand.plot);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < cyls.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(cyls.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Cylinder> augmented;
      augmented.reserve(end - start);
      std::vector<TrainingSample> batch;
      for (std::size_t i = start; i < end; ++i) {
        const std::uint64_t tag = static_cast<std::uint64_t>(epoch) * n_per_epoch + i;
        augmented.push_back(augment(cyls[i], derive_seed(cfg.seed, kStreamAugment, tag), cfg.noise_sigma,
                                    cfg.noise_clip));
      }
      for (std::size_t i = start; i < end; ++i) {
        const auto& plot = plots[owner[i]];
        TrainingSample s;
        s.cylinder = &augmented[i - start];
        s.labels.reserve(cyls[i].size());
        for (std::size_t idx : cyls[i].point_indices) s.labels.push_back(labels[owner[i]][idx]);
        s.truth = &plot.truth;
        s.mixture = &plot.mixture;
        s.seed = derive_seed(cfg.seed, kStreamSubsample, static_cast<std::uint64_t>(epoch) * n_per_epoch + i);
        batch.push_back(std::move(s));
      }
      const auto vg = value_and_grad(result.params, batch, cfg.S, spec);
      optimizer_step(result.params, vg.grad, adam, lr, cfg.weight_decay);
      entry.l3d += vg.loss.l3d;
      entry.l2d += vg.loss.l2d;
      entry.lelev += vg.loss.lelev;
      entry.total += vg.loss.total;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    entry.l3d *= inv;
    entry.l2d *= inv;
    entry.lelev *= inv;
    entry.total *= inv;
    entry.cylinders = static_cast<int>(cyls.size());
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);

    if (log_file.is_open()) {
      nlohmann::json j = {{"epoch", entry.epoch}, {"l3d", entry.l3d},     {"l2d", entry.l2d},
                          {"lelev", entry.lelev}, {"total", entry.total}, {"lr", entry.lr},
                          {"cylinders", entry.cylinders}, {"seconds", entry.seconds}};
      log_file << j.dump() << '\n' << std::flush;
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs) {
        char name[40];
        std::snprintf(name, sizeof(name), "checkpoint_e%03d.bin", epoch + 1);
        save_params(result.params, opts.out_dir / name);
      }
    }
    if (opts.on_epoch) opts.on_epoch(entry);
  }
  if (!opts.out_dir.empty()) save_params(result.params, opts.out_dir / "checkpoint.bin");
  return result;
}

}  // namespace strata
