#pragma once

// Lorenz closed forms and the finite-horizon numerics behind them: the
// stability/dimension dichotomy, the phase-volume identity
// sum log alpha_i(T_x F^t) = -(sigma + b + 1) t, the expansion-rate estimate a,
// and the resulting bound 2 + a / (sigma + b + 1 + a).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attrdim/dynsys.hpp"
#include "attrdim/errors.hpp"
#include "attrdim/flow.hpp"
#include "attrdim/parallel.hpp"

namespace attrdim {

struct LorenzVerdict {
  double ratio = 0.0;  ///< 2 (sigma + b + 1) / (sigma + 1 + sqrt((sigma - 1)^2 + 4 sigma r))
  bool stable = false;  ///< every solution tends to an equilibrium
  std::optional<double> dimension;  ///< 3 - ratio when !stable
  std::vector<std::string> warnings;
};

inline double lorenz_ratio(double sigma, double r, double b) {
  const double disc = (sigma - 1.0) * (sigma - 1.0) + 4.0 * sigma * r;
  if (disc < 0) throw ArgumentError("lorenz ratio: (sigma - 1)^2 + 4 sigma r is negative");
  const double den = sigma + 1.0 + std::sqrt(disc);
  if (den == 0) throw ArgumentError("lorenz ratio: zero denominator");
  return 2.0 * (sigma + b + 1.0) / den;
}

inline LorenzVerdict lorenz_dim_formula(double sigma, double r, double b) {
  LorenzVerdict v;
  v.warnings = lorenz_param_warnings(sigma, r, b);
  v.ratio = lorenz_ratio(sigma, r, b);
  v.stable = v.ratio > 1.0;
  if (!v.stable) v.dimension = 3.0 - v.ratio;
  return v;
}

/// |sum log_svals + (sigma + b + 1) t| / ((sigma + b + 1) t)
inline double volume_identity_residual(double sigma, double r, double b, std::span<const double> x0, double t,
                                       double step) {
  if (!(t > 0)) throw ArgumentError("volume_identity_residual: t must be > 0");
  const double trace = sigma + b + 1.0;
  auto res = tangent_map(lorenz(sigma, r, b), x0, t, step);
  double sum = 0.0;
  for (double l : res.log_svals) sum += l;
  return std::abs(sum + trace * t) / (trace * t);
}

/// Deterministic uniform in [0, 1) from a 64-bit engine (53-bit mantissa).
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct AttractorSampling {
  double warmup = 100.0;
  double stride = 1.0;
  double step = 1e-3;
  std::uint64_t seed = 0;
  double jitter = 1e-3;  ///< half-width of the uniform perturbation of (1, 1, 1)
};

/// Start (1, 1, 1) plus seeded jitter.
inline Vector lorenz_initial_state(std::uint64_t seed, double jitter) {
  std::mt19937_64 rng(seed);
  Vector x0{1.0, 1.0, 1.0};
  for (double& v : x0) v += jitter * (2.0 * unit_uniform(rng) - 1.0);
  return x0;
}

/// `count` points from one trajectory after warmup, `stride` time units apart.
inline PointSet sample_lorenz_attractor(double sigma, double r, double b, std::size_t count,
                                        const AttractorSampling& cfg = {}) {
  const Vector x0 = lorenz_initial_state(cfg.seed, cfg.jitter);
  return sample_attractor(lorenz(sigma, r, b), x0, cfg.warmup, count, cfg.stride, cfg.step);
}

/// (1/horizon) log alpha_1(T_x F^horizon) for each sample.
inline std::vector<double> alpha1_rates(const SystemDef& sys, const PointSet& samples, double horizon, double step,
                                        int reorth_every = 10) {
  if (!(horizon > 0)) throw ArgumentError("alpha1_rates: horizon must be > 0");
  if (samples.empty()) throw ArgumentError("alpha1_rates: no samples");
  std::vector<double> rates(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    try {
      rates[i] = tangent_map(sys, samples.point(i), horizon, step, reorth_every).log_svals[0] / horizon;
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (sample " + std::to_string(i) + ")", e.last_state(),
                            e.last_time(), i);
    }
  });
  return rates;
}

struct RateEstimate {
  double value = 0.0;  ///< max (estimate_a) or min (inf_alpha1_rate) of the per-sample rates
  double horizon = 0.0;
  std::size_t sample_count = 0;
  std::size_t extremal_sample = 0;
  std::vector<double> rates;
};

inline RateEstimate reduce_rates(std::vector<double> rates, double horizon, bool take_max) {
  RateEstimate e;
  auto it = take_max ? std::max_element(rates.begin(), rates.end()) : std::min_element(rates.begin(), rates.end());
  e.value = *it;
  e.extremal_sample = static_cast<std::size_t>(it - rates.begin());
  e.horizon = horizon;
  e.sample_count = rates.size();
  e.rates = std::move(rates);
  return e;
}

/// Finite-horizon stand-in for the uniform bound sup_K alpha_1(T_x F^t) <= e^{a t}.
inline RateEstimate estimate_a(const SystemDef& sys, const PointSet& samples, double horizon, double step) {
  return reduce_rates(alpha1_rates(sys, samples, horizon, step), horizon, true);
}

inline RateEstimate estimate_a(double sigma, double r, double b, std::size_t n_samples, double horizon, double step,
                               std::uint64_t seed) {
  if (n_samples < 1) throw ArgumentError("estimate_a: n_samples must be >= 1");
  if (!(horizon > 0)) throw ArgumentError("estimate_a: horizon must be > 0");
  AttractorSampling cfg;
  cfg.seed = seed;
  cfg.step = step;
  auto samples = sample_lorenz_attractor(sigma, r, b, n_samples, cfg);
  return estimate_a(lorenz(sigma, r, b), samples, horizon, step);
}

/// 2 + a / (sigma + b + 1 + a)
inline double hl_bound_from_a(double a, double sigma, double b) {
  if (!(a >= 0)) throw ArgumentError("hl_bound_from_a: a must be >= 0");
  return 2.0 + a / (sigma + b + 1.0 + a);
}

}  // namespace attrdim
