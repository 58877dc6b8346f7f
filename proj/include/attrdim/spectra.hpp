#pragma once

// Singular spectra, the singular value function omega_d, and Lyapunov
// dimensions (local, and sup over a sample set at finite horizons).
//
// Everything is evaluated on log singular values; the linear-domain entry
// points convert once. Tangent maps at t ~ 20 for Lorenz already have
// singular values near exp(-290).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "attrdim/dynsys.hpp"
#include "attrdim/errors.hpp"
#include "attrdim/flow.hpp"
#include "attrdim/linalg.hpp"
#include "attrdim/parallel.hpp"

namespace attrdim {

/// Singular values alpha_1 >= ... >= alpha_n >= 0, held as natural logs
/// (log 0 = -inf).
class SingularSpectrum {
 public:
  SingularSpectrum() = default;

  static SingularSpectrum from_values(std::span<const double> svals) {
    Vector logs(svals.size());
    for (std::size_t i = 0; i < svals.size(); ++i) {
      if (!(svals[i] >= 0) || !std::isfinite(svals[i]))
        throw ArgumentError("singular values must be finite and >= 0");
      logs[i] = std::log(svals[i]);
    }
    return from_logs(logs);
  }

  static SingularSpectrum from_logs(std::span<const double> logs) {
    if (logs.empty()) throw ArgumentError("empty singular spectrum");
    for (std::size_t i = 0; i < logs.size(); ++i) {
      if (std::isnan(logs[i]) || logs[i] == std::numeric_limits<double>::infinity())
        throw ArgumentError("log singular values must be < +inf and not NaN");
      if (i > 0 && logs[i] > logs[i - 1]) throw ArgumentError("singular values must be sorted descending");
    }
    SingularSpectrum s;
    s.logs_.assign(logs.begin(), logs.end());
    return s;
  }

  std::size_t size() const noexcept { return logs_.size(); }
  std::span<const double> logs() const noexcept { return logs_; }
  double log(std::size_t i) const { return logs_.at(i); }
  double value(std::size_t i) const { return std::exp(logs_.at(i)); }
  Vector values() const {
    Vector v(logs_.size());
    std::transform(logs_.begin(), logs_.end(), v.begin(), [](double l) { return std::exp(l); });
    return v;
  }

 private:
  Vector logs_;
};

/// Descending singular values of A (one-sided Jacobi, i.e. implicit Jacobi
/// diagonalization of A^T A).
inline SingularSpectrum singular_values(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw ArgumentError("singular_values: empty matrix");
  if (!a.all_finite()) throw ArgumentError("singular_values: non-finite entries");
  return SingularSpectrum::from_values(jacobi_singular_values(a));
}

/// log omega_d = log alpha_1 + ... + log alpha_k + s log alpha_{k+1},
/// d = k + s with s in (0, 1].
inline double log_omega_d(const SingularSpectrum& spec, double d) {
  const double n = static_cast<double>(spec.size());
  if (!(d > 0) || d > n) throw ArgumentError("omega_d: d must lie in (0, n]");
  const auto k = static_cast<std::size_t>(std::ceil(d) - 1.0);
  const double s = d - static_cast<double>(k);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += spec.log(i);
  if (s > 0) acc += s * spec.log(k);
  return acc;
}

inline double omega_d(const SingularSpectrum& spec, double d) { return std::exp(log_omega_d(spec, d)); }

struct LocalDim {
  std::size_t j = 0;
  double s = 0.0;
  double value = 0.0;
};

/// Local Lyapunov dimension j + s of a linear map with the given spectrum:
/// j is the largest index with alpha_1 ... alpha_j >= 1 and
/// alpha_1 ... alpha_j alpha_{j+1}^s = 1. Returns 0 when alpha_1 < 1 and n when
/// the full product is >= 1. A zero alpha_{j+1} gives s = 0.
inline LocalDim local_lyapunov_dim(const SingularSpectrum& spec) {
  const std::size_t n = spec.size();
  if (spec.log(0) < 0) return {0, 0.0, 0.0};
  double sum = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sum + spec.log(i) < 0) break;
    sum += spec.log(i);
    j = i + 1;
  }
  if (j == n) return {n, 0.0, static_cast<double>(n)};
  const double next = spec.log(j);
  double s = std::isinf(next) ? 0.0 : -sum / next;
  s = std::clamp(s, 0.0, 1.0);
  return {j, s, static_cast<double>(j) + s};
}

struct LyapunovDimRow {
  std::size_t sample_index = 0;
  double horizon = 0.0;
  LocalDim dim;
};

struct LyapunovDimResult {
  double value = 0.0;           ///< sup over samples at the largest horizon
  std::size_t argmax_sample = 0;
  std::size_t sample_count = 0;
  std::vector<double> horizons;
  std::vector<LyapunovDimRow> table;  ///< sample-major, horizons ascending
};

/// Lyapunov dimension of the time-t maps over a sample set: local dimensions
/// of T_x F^t for each sample and horizon, reduced by max over samples at the
/// largest horizon. The full table is kept to inspect convergence in t.
inline LyapunovDimResult lyapunov_dim_on_set(const SystemDef& sys, const PointSet& samples,
                                             std::span<const double> horizons, double step,
                                             int reorth_every = 10) {
  if (samples.empty()) throw ArgumentError("lyapunov_dim_on_set: no samples");
  if (samples.dim() != sys.state_dim) throw ArgumentError("lyapunov_dim_on_set: sample dimension mismatch");
  if (horizons.empty()) throw ArgumentError("lyapunov_dim_on_set: no horizons");
  for (std::size_t i = 0; i < horizons.size(); ++i)
    if (!(horizons[i] > 0) || (i > 0 && !(horizons[i] > horizons[i - 1])))
      throw ArgumentError("lyapunov_dim_on_set: horizons must be positive and increasing");

  const std::size_t m = samples.size();
  const std::size_t h = horizons.size();
  std::vector<LyapunovDimRow> table(m * h);
  parallel_for(m, [&](std::size_t i) {
    std::vector<TangentResult> res;
    try {
      res = tangent_map_checkpoints(sys, samples.point(i), horizons, step, reorth_every);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (sample " + std::to_string(i) + ")", e.last_state(),
                            e.last_time(), i);
    }
    for (std::size_t k = 0; k < h; ++k)
      table[i * h + k] = {i, horizons[k], local_lyapunov_dim(SingularSpectrum::from_logs(res[k].log_svals))};
  });

  LyapunovDimResult out;
  out.sample_count = m;
  out.horizons.assign(horizons.begin(), horizons.end());
  out.value = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = table[i * h + h - 1].dim.value;
    if (v > out.value) {
      out.value = v;
      out.argmax_sample = i;
    }
  }
  out.table = std::move(table);
  return out;
}

/// CSV with header `sample_index,horizon,j,s,dim`.
inline void write_lyapunov_table_csv(std::ostream& os, const LyapunovDimResult& r) {
  os << "sample_index,horizon,j,s,dim\n";
  os.precision(17);
  for (const auto& row : r.table)
    os << row.sample_index << ',' << row.horizon << ',' << row.dim.j << ',' << row.dim.s << ','
       << row.dim.value << '\n';
}

}  // namespace attrdim
