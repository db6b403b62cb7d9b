#include "strata/elevation.hpp"

#include "strata/error.hpp"
#include "strata/io.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace strata {

namespace {

constexpr double kShapeMin = 1e-3;
constexpr double kShapeMax = 1e3;
constexpr double kWeightClamp = 1e-9;

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::vector<double> filter_ground(std::span<const double> z) {
  std::vector<double> out;
  out.reserve(z.size());
  for (double v : z)
    if (v > kGroundFloor && std::isfinite(v)) out.push_back(v);
  return out;
}

// Solves ln k - digamma(k) = s for the shape of a scale-profiled Gamma MLE.
double solve_shape(double s, double start, int newton_iter) {
  if (!(s > 0.0) || !std::isfinite(s)) return kShapeMax;
  auto f = [s](double k) { return std::log(k) - boost::math::digamma(k) - s; };
  double k = start;
  if (!(k > kShapeMin && k < kShapeMax)) k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  bool ok = false;
  for (int i = 0; i < newton_iter; ++i) {
    const double fk = f(k);
    const double dk = 1.0 / k - boost::math::trigamma(k);
    const double next = k - fk / dk;
    if (!std::isfinite(next) || next <= kShapeMin || next >= kShapeMax) break;
    const bool converged = std::abs(next - k) <= 1e-12 * k;
    k = next;
    if (converged) {
      ok = true;
      break;
    }
  }
  if (ok) return k;
  // Bisection fallback in log space; f is decreasing in k.
  double lo = kShapeMin, hi = kShapeMax;
  if (f(hi) >= 0.0) return kShapeMax;
  if (f(lo) <= 0.0) return kShapeMin;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * lo; ++i) {
    const double mid = std::sqrt(lo * hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

GammaComponent weighted_update(std::span<const double> z, std::span<const double> lnz,
                               std::span<const double> w, GammaComponent current, int newton_iter) {
  double sw = 0.0, swz = 0.0, swl = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    sw += w[i];
    swz += w[i] * z[i];
    swl += w[i] * lnz[i];
  }
  if (sw < 1e-10) return current;
  const double mean = swz / sw;
  const double s = std::log(mean) - swl / sw;
  GammaComponent out;
  out.shape = solve_shape(s, current.shape, newton_iter);
  out.scale = mean / out.shape;
  return out;
}

std::optional<GammaComponent> moments(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= static_cast<double>(v.size());
  if (!(var > 0.0) || !(m > 0.0)) return std::nullopt;
  return GammaComponent{m * m / var, var / m};
}

}  // namespace

void GammaMixture::validate() const {
  for (const auto* c : {&lower, &higher})
    if (!(c->shape > 0.0) || !(c->scale > 0.0) || !std::isfinite(c->shape) || !std::isfinite(c->scale))
      throw ConfigError("gamma mixture parameters must be positive and finite");
  if (!(weight_lower > 0.0 && weight_lower < 1.0)) throw ConfigError("mixture weight must lie in (0, 1)");
  if (lower.mean() > higher.mean()) throw ConfigError("lower component mean exceeds higher component mean");
}

double GammaMixture::log_pdf(double z) const {
  return log_sum_exp(std::log(weight_lower) + gamma_log_pdf(z, lower.shape, lower.scale),
                     std::log1p(-weight_lower) + gamma_log_pdf(z, higher.shape, higher.scale));
}

double log_gamma(double x) {
  static constexpr double kCoef[9] = {0.99999999999980993,     676.5203681218851,
                                      -1259.1392167224028,     771.32342877765313,
                                      -176.61502916214059,     12.507343278686905,
                                      -0.13857109526572012,    9.9843695780195716e-6,
                                      1.5056327351493116e-7};
  if (!(x > 0.0)) throw ConfigError("log_gamma requires x > 0");
  if (x < 0.5) return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  x -= 1.0;
  double a = kCoef[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += kCoef[i] / (x + i);
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

double gamma_log_pdf(double z, double shape, double scale) {
  if (!(z > 0.0) || !(shape > 0.0) || !(scale > 0.0))
    throw ConfigError("gamma_log_pdf requires z, shape and scale > 0");
  return (shape - 1.0) * std::log(z) - z / scale - shape * std::log(scale) - log_gamma(shape);
}

GammaMixture ecm_fit(std::span<const double> samples, const GammaMixture& init, const EcmOptions& opts) {
  const auto z = filter_ground(samples);
  if (z.size() < 100) throw ConfigError("ecm_fit needs at least 100 samples above the ground floor");
  if (std::all_of(z.begin(), z.end(), [&](double v) { return v == z.front(); }))
    throw NumericError("ecm_fit: degenerate sample (all values equal)");
  init.validate();

  const std::size_t n = z.size();
  std::vector<double> lnz(n), r(n), rc(n);
  for (std::size_t i = 0; i < n; ++i) lnz[i] = std::log(z[i]);

  GammaMixture m = init;
  m.log_likelihood_trace.clear();

  // One E-step: fills responsibilities of the lower component, returns total log-likelihood.
  auto e_step = [&](const GammaMixture& cur) {
    const double lw = std::log(cur.weight_lower), hw = std::log1p(-cur.weight_lower);
    const double lc = -cur.lower.shape * std::log(cur.lower.scale) - log_gamma(cur.lower.shape);
    const double hc = -cur.higher.shape * std::log(cur.higher.scale) - log_gamma(cur.higher.shape);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = lw + (cur.lower.shape - 1.0) * lnz[i] - z[i] / cur.lower.scale + lc;
      const double b = hw + (cur.higher.shape - 1.0) * lnz[i] - z[i] / cur.higher.scale + hc;
      const double t = log_sum_exp(a, b);
      r[i] = std::exp(a - t);
      ll += t;
    }
    return ll;
  };

  double ll = e_step(m);
  if (!std::isfinite(ll)) throw NumericError("ecm_fit: non-finite initial log-likelihood");
  m.log_likelihood_trace.push_back(ll);
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    double sr = 0.0;
    for (double v : r) sr += v;
    m.weight_lower = std::clamp(sr / static_cast<double>(n), kWeightClamp, 1.0 - kWeightClamp);
    for (std::size_t i = 0; i < n; ++i) rc[i] = 1.0 - r[i];
    m.lower = weighted_update(z, lnz, r, m.lower, opts.newton_iter);
    m.higher = weighted_update(z, lnz, rc, m.higher, opts.newton_iter);
    const double next = e_step(m);
    if (!std::isfinite(next)) throw NumericError("ecm_fit: non-finite log-likelihood");
    m.log_likelihood_trace.push_back(next);
    const double gain = (next - ll) / static_cast<double>(n);
    ll = next;
    if (gain < opts.tol) break;
  }
  m.iterations = it;
  m.log_likelihood = ll;
  m.fitted = true;
  if (m.lower.mean() > m.higher.mean()) {
    std::swap(m.lower, m.higher);
    m.weight_lower = 1.0 - m.weight_lower;
  }
  return m;
}

GammaMixture default_init(std::span<const double> samples) {
  const auto z = filter_ground(samples);
  if (z.empty()) throw ConfigError("default_init: no samples above the ground floor");
  std::vector<double> low, high;
  for (double v : z) {
    if (v < 1.0) low.push_back(v);
    else if (v >= 2.0) high.push_back(v);
  }
  const GammaComponent lower_fallback{1.5, 0.3}, higher_fallback{3.0, 4.0};
  GammaMixture m;
  const auto lo = moments(low);
  const auto hi = moments(high);
  m.lower = lo.value_or(lower_fallback);
  m.higher = hi.value_or(higher_fallback);
  if (low.empty() || high.empty()) {
    m.weight_lower = 0.3;
  } else {
    m.weight_lower = static_cast<double>(low.size()) / static_cast<double>(z.size());
  }
  if (m.lower.mean() > m.higher.mean()) std::swap(m.lower, m.higher);
  return m;
}

void write_mixture(const GammaMixture& m, const std::filesystem::path& path) {
  m.validate();
  KeyValueList kv = {
      {"pi", format_double(m.weight_lower)},
      {"k_lower", format_double(m.lower.shape)},
      {"theta_lower", format_double(m.lower.scale)},
      {"k_higher", format_double(m.higher.shape)},
      {"theta_higher", format_double(m.higher.scale)},
      {"iterations", std::to_string(m.iterations)},
      {"log_likelihood", format_double(m.log_likelihood)},
  };
  write_key_values(kv, path, {"two-component gamma elevation mixture"});
}

GammaMixture read_mixture(const std::filesystem::path& path) {
  GammaMixture m;
  bool seen[5] = {};
  for (const auto& [key, value] : read_key_values(path)) {
    const std::string ctx = path.string() + ":" + key;
    if (key == "pi") { m.weight_lower = parse_double(value, ctx); seen[0] = true; }
    else if (key == "k_lower") { m.lower.shape = parse_double(value, ctx); seen[1] = true; }
    else if (key == "theta_lower") { m.lower.scale = parse_double(value, ctx); seen[2] = true; }
    else if (key == "k_higher") { m.higher.shape = parse_double(value, ctx); seen[3] = true; }
    else if (key == "theta_higher") { m.higher.scale = parse_double(value, ctx); seen[4] = true; }
    else if (key == "iterations") m.iterations = static_cast<int>(parse_double(value, ctx));
    else if (key == "log_likelihood") m.log_likelihood = parse_double(value, ctx);
    else throw FormatError(path.string() + ": unknown mixture key '" + key + "'");
  }
  if (!std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; }))
    throw FormatError(path.string() + ": missing mixture parameters");
  m.validate();
  m.fitted = true;
  return m;
}

}  // namespace strata
