#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace strata {

/// Elevations at or below this height are bare ground and excluded from fitting.
inline constexpr double kGroundFloor = 0.01;

struct GammaComponent {
  double shape = 1.0;
  double scale = 1.0;
  double mean() const { return shape * scale; }
};

/// Two-component Gamma model of point elevations: a lower stratum (ground and
/// ground vegetation) and a higher stratum (everything above).
struct GammaMixture {
  GammaComponent lower;
  GammaComponent higher;
  double weight_lower = 0.5;  // mixing weight of the lower component

  // Fit diagnostics.
  bool fitted = false;
  int iterations = 0;
  double log_likelihood = 0.0;              // total over the fitted sample
  std::vector<double> log_likelihood_trace; // one entry per E-step

  /// Positivity, weight in (0, 1), lower mean <= higher mean. Throws ConfigError.
  void validate() const;
  /// Mixture log density at z > 0.
  double log_pdf(double z) const;
};

/// ln Gamma(x) for x > 0 (Lanczos approximation, g = 7, 9 terms).
double log_gamma(double x);

/// Log density of Gamma(shape, scale) at z. Throws ConfigError on non-positive arguments.
double gamma_log_pdf(double z, double shape, double scale);

struct EcmOptions {
  int max_iter = 200;
  double tol = 1e-6;       // on the mean per-point log-likelihood
  int newton_iter = 25;
};

/// Expectation / conditional-maximization fit starting from `init`.
/// Samples with z <= kGroundFloor are discarded first; at least 100 must remain.
GammaMixture ecm_fit(std::span<const double> z, const GammaMixture& init, const EcmOptions& opts = {});

/// Moment-matched start: lower from z < 1 m, higher from z >= 2 m, weight = fraction below 1 m.
GammaMixture default_init(std::span<const double> z);

/// Key-value persistence: pi, k_lower, theta_lower, k_higher, theta_higher.
void write_mixture(const GammaMixture& m, const std::filesystem::path& path);
GammaMixture read_mixture(const std::filesystem::path& path);

}  // namespace strata
