#pragma once

// Trajectories and finite-time tangent maps T_x F^t.
//
// Flows use fixed-step classical RK4; maps are iterated. The tangent map is
// propagated together with the state and periodically re-orthonormalized
// (Y = QR, continue with Q). The accumulated triangular factors are kept as
// D * N with D = diag(exp(L)) and N unit upper triangular, which represents
// the full tangent map without overflow; log singular values are read from
// that representation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "attrdim/dynsys.hpp"
#include "attrdim/errors.hpp"
#include "attrdim/linalg.hpp"

namespace attrdim {

/// Any state component beyond this magnitude is treated as blow-up.
inline constexpr double kDivergenceThreshold = 1e8;

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;

  std::size_t size() const noexcept { return times.size(); }
  const Vector& final_state() const { return states.back(); }
};

struct TangentResult {
  Vector x0;
  double t = 0.0;
  Vector log_svals;     ///< log singular values of T_{x0} F^t, descending
  Vector qr_log_diag;   ///< accumulated log|R_ii| from re-orthonormalization, descending
  Vector final_state;
};

namespace detail {

inline bool state_ok(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v) && std::abs(v) <= kDivergenceThreshold; });
}

[[noreturn]] inline void diverged(const SystemDef& sys, const Vector& last, double t) {
  std::ostringstream os;
  os << sys.name << ": trajectory diverged near t = " << t;
  throw DivergenceError(os.str(), last, t);
}

/// Number of uniform steps (of size <= step) covering [0, t].
inline std::size_t step_count(double t, double step) {
  if (!(t >= 0) || !std::isfinite(t)) throw ArgumentError("integration time must be finite and >= 0");
  if (!(step > 0)) throw ArgumentError("step must be > 0");
  if (t == 0) return 0;
  return static_cast<std::size_t>(std::ceil(t / step - 1e-9));
}

inline std::size_t iterate_count(double t) {
  if (!(t >= 0) || !std::isfinite(t)) throw ArgumentError("iteration count must be finite and >= 0");
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9) throw ArgumentError("map systems need an integer iteration count");
  return static_cast<std::size_t>(r);
}

inline void rk4_step(const SystemDef& sys, Vector& x, double h, Vector& tmp) {
  const std::size_t n = x.size();
  Vector k1 = sys.field(x);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  Vector k2 = sys.field(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  Vector k3 = sys.field(tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  Vector k4 = sys.field(tmp);
  for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// One RK4 step of x' = f(x), Y' = J(x) Y.
inline void rk4_variational_step(const SystemDef& sys, Vector& x, Matrix& y, double h) {
  const std::size_t n = x.size();
  Vector xs(n);
  Matrix ys(y.rows(), y.cols());

  auto stage = [&](const Vector& xa, const Matrix& ya, Vector& kx, Matrix& ky) {
    kx = sys.field(xa);
    ky = sys.jacobian(xa) * ya;
  };
  auto offset = [&](const Vector& kx, const Matrix& ky, double c) {
    for (std::size_t i = 0; i < n; ++i) xs[i] = x[i] + c * kx[i];
    auto yd = ys.data();
    auto y0 = y.data();
    auto kd = ky.data();
    for (std::size_t k = 0; k < yd.size(); ++k) yd[k] = y0[k] + c * kd[k];
  };

  Vector k1x, k2x, k3x, k4x;
  Matrix k1y, k2y, k3y, k4y;
  stage(x, y, k1x, k1y);
  offset(k1x, k1y, 0.5 * h);
  stage(xs, ys, k2x, k2y);
  offset(k2x, k2y, 0.5 * h);
  stage(xs, ys, k3x, k3y);
  offset(k3x, k3y, h);
  stage(xs, ys, k4x, k4y);
  for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
  auto yd = y.data();
  for (std::size_t k = 0; k < yd.size(); ++k)
    yd[k] += h / 6.0 * (k1y.data()[k] + 2.0 * k2y.data()[k] + 2.0 * k3y.data()[k] + k4y.data()[k]);
}

/// Accumulated triangular part of a tangent map: R_acc = diag(exp(log_diag)) * unit.
struct GradedFactor {
  Vector log_diag;
  Matrix unit;  // unit upper triangular
  bool representable = true;

  explicit GradedFactor(std::size_t n) : log_diag(n, 0.0), unit(Matrix::identity(n)) {}

  /// R_acc <- r * R_acc for upper triangular r with positive diagonal.
  void absorb(const Matrix& r) {
    const std::size_t n = log_diag.size();
    // m = diag(1/r_ii) * D^{-1} r D, unit upper triangular
    Matrix m = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        m(i, j) = r(i, j) / r(i, i) * std::exp(log_diag[j] - log_diag[i]);
    if (representable) {
      unit = m * unit;
      if (!unit.all_finite()) representable = false;
    }
    for (std::size_t i = 0; i < n; ++i) log_diag[i] += std::log(r(i, i));
  }
};

/// QR of y with R's diagonal made non-negative; y is replaced by Q.
inline Matrix orthonormalize(Matrix& y) {
  QR qr = householder_qr(y);
  const std::size_t n = y.rows();
  for (std::size_t i = 0; i < n; ++i)
    if (qr.r(i, i) < 0)
      for (std::size_t k = 0; k < n; ++k) {
        qr.r(i, k) = -qr.r(i, k);
        qr.q(k, i) = -qr.q(k, i);
      }
  y = std::move(qr.q);
  return std::move(qr.r);
}

/// Rows scaled below exp(-kGradedFloor) relative to the largest are not
/// resolved by the Jacobi step; the sorted QR logs are used instead.
inline constexpr double kGradedFloor = 330.0;

inline TangentResult finish_tangent(const Vector& x0, double t, const Vector& x, const Matrix& y,
                                    const GradedFactor& acc) {
  const std::size_t n = x.size();
  Matrix yc = y;
  GradedFactor g = acc;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(g.log_diag[i])) g.representable = false;
  Matrix r = orthonormalize(yc);
  bool singular = false;
  for (std::size_t i = 0; i < n; ++i) singular = singular || !(r(i, i) > 0);
  TangentResult res;
  res.x0 = x0;
  res.t = t;
  res.final_state = x;
  if (singular) {
    // Exactly singular tangent map (possible for maps): fall back to direct logs.
    for (std::size_t i = 0; i < n; ++i) g.log_diag[i] += std::log(std::abs(r(i, i)));
    res.qr_log_diag = g.log_diag;
    std::sort(res.qr_log_diag.begin(), res.qr_log_diag.end(), std::greater<>());
    res.log_svals = res.qr_log_diag;
    return res;
  }
  g.absorb(r);
  res.qr_log_diag = g.log_diag;
  std::sort(res.qr_log_diag.begin(), res.qr_log_diag.end(), std::greater<>());

  const double top = *std::max_element(g.log_diag.begin(), g.log_diag.end());
  bool resolvable = g.representable;
  for (double l : g.log_diag) resolvable = resolvable && (l - top > -kGradedFloor);
  if (!resolvable) {
    res.log_svals = res.qr_log_diag;
    return res;
  }
  // Rows of D*N as columns, scaled so the largest diagonal weight is 1.
  Matrix bt(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(g.log_diag[i] - top);
    for (std::size_t j = 0; j < n; ++j) bt(j, i) = w * g.unit(i, j);
  }
  Vector sv = jacobi_singular_values(bt);
  res.log_svals.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.log_svals[i] = top + std::log(sv[i]);
  return res;
}

inline void check_tangent_args(const SystemDef& sys, std::span<const double> x0, int reorth_every) {
  detail::check_dim(sys, x0.size());
  if (reorth_every < 1) throw ArgumentError("reorth_every must be >= 1");
}

}  // namespace detail

/// Samples x(t) from x0 over [0, t]. Flows: RK4 with uniform steps of size
/// t / ceil(t / step) <= step, so the last sample sits at t. Maps: t is an
/// integer iteration count and step is ignored. Every `record_every`-th state
/// is stored, plus the final one.
inline Trajectory integrate(const SystemDef& sys, std::span<const double> x0, double t, double step,
                            std::size_t record_every = 1) {
  detail::check_dim(sys, x0.size());
  if (record_every == 0) throw ArgumentError("record_every must be >= 1");
  Vector x(x0.begin(), x0.end());
  if (!detail::state_ok(x)) throw ArgumentError("initial state is not finite or exceeds the divergence threshold");
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(x);

  if (sys.kind == SystemKind::Map) {
    const std::size_t steps = detail::iterate_count(t);
    for (std::size_t k = 1; k <= steps; ++k) {
      Vector next = sys.field(x);
      if (!detail::state_ok(next)) detail::diverged(sys, x, static_cast<double>(k - 1));
      x = std::move(next);
      if (k % record_every == 0 || k == steps) {
        tr.times.push_back(static_cast<double>(k));
        tr.states.push_back(x);
      }
    }
    return tr;
  }

  const std::size_t steps = detail::step_count(t, step);
  if (steps == 0) return tr;
  const double h = t / static_cast<double>(steps);
  Vector tmp(x.size());
  for (std::size_t k = 1; k <= steps; ++k) {
    Vector prev = x;
    detail::rk4_step(sys, x, h, tmp);
    if (!detail::state_ok(x)) detail::diverged(sys, prev, static_cast<double>(k - 1) * h);
    if (k % record_every == 0 || k == steps) {
      tr.times.push_back(k == steps ? t : static_cast<double>(k) * h);
      tr.states.push_back(x);
    }
  }
  return tr;
}

/// Final state after time t (no trajectory storage).
inline Vector advance(const SystemDef& sys, std::span<const double> x0, double t, double step) {
  detail::check_dim(sys, x0.size());
  Vector x(x0.begin(), x0.end());
  if (sys.kind == SystemKind::Map) {
    const std::size_t steps = detail::iterate_count(t);
    for (std::size_t k = 0; k < steps; ++k) {
      Vector next = sys.field(x);
      if (!detail::state_ok(next)) detail::diverged(sys, x, static_cast<double>(k));
      x = std::move(next);
    }
    return x;
  }
  const std::size_t steps = detail::step_count(t, step);
  if (steps == 0) return x;
  const double h = t / static_cast<double>(steps);
  Vector tmp(x.size());
  for (std::size_t k = 0; k < steps; ++k) {
    Vector prev = x;
    detail::rk4_step(sys, x, h, tmp);
    if (!detail::state_ok(x)) detail::diverged(sys, prev, static_cast<double>(k) * h);
  }
  return x;
}

/// Tangent maps at several increasing times from one co-integration. The
/// step size is fixed by the last checkpoint: h = T / ceil(T / step), and each
/// checkpoint is taken at the nearest step boundary.
inline std::vector<TangentResult> tangent_map_checkpoints(const SystemDef& sys, std::span<const double> x0,
                                                          std::span<const double> times, double step,
                                                          int reorth_every = 10) {
  detail::check_tangent_args(sys, x0, reorth_every);
  if (times.empty()) return {};
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0)) throw ArgumentError("tangent_map: times must be >= 0");
    if (i > 0 && !(times[i] > times[i - 1])) throw ArgumentError("tangent_map: times must be increasing");
  }
  const std::size_t n = sys.state_dim;
  const Vector start(x0.begin(), x0.end());
  if (!detail::state_ok(start)) throw ArgumentError("initial state is not finite or exceeds the divergence threshold");

  const bool is_map = sys.kind == SystemKind::Map;
  const double t_end = times.back();
  const std::size_t total = is_map ? detail::iterate_count(t_end) : detail::step_count(t_end, step);
  const double h = total == 0 ? 0.0 : (is_map ? 1.0 : t_end / static_cast<double>(total));

  std::vector<std::size_t> marks;
  for (double t : times) {
    if (is_map) {
      marks.push_back(detail::iterate_count(t));
    } else {
      marks.push_back(total == 0 ? 0 : static_cast<std::size_t>(std::llround(t / h)));
    }
  }

  Vector x = start;
  Matrix y = Matrix::identity(n);
  detail::GradedFactor acc(n);
  std::vector<TangentResult> out;
  out.reserve(times.size());
  std::size_t next_mark = 0;
  auto emit = [&](std::size_t k) {
    while (next_mark < marks.size() && marks[next_mark] == k) {
      out.push_back(detail::finish_tangent(start, times[next_mark], x, y, acc));
      ++next_mark;
    }
  };
  emit(0);
  for (std::size_t k = 1; k <= total; ++k) {
    Vector prev = x;
    if (is_map) {
      Matrix jac = sys.jacobian(x);
      x = sys.field(x);
      y = jac * y;
    } else {
      detail::rk4_variational_step(sys, x, y, h);
    }
    if (!detail::state_ok(x) || !y.all_finite())
      detail::diverged(sys, prev, static_cast<double>(k - 1) * h);
    if (k % static_cast<std::size_t>(reorth_every) == 0 && k != total) {
      Matrix r = detail::orthonormalize(y);
      bool ok = true;
      for (std::size_t i = 0; i < n; ++i) ok = ok && r(i, i) > 0;
      if (ok) acc.absorb(r);
      else {
        // Rank loss: keep accumulating the raw product instead.
        y = y * r;
      }
    }
    emit(k);
  }
  return out;
}

/// T_{x0} F^t for flows (step = RK4 step) or maps (t = iteration count).
/// At t = 0 all logs are zero. The sum of log_svals equals log|det T| up to
/// rounding, independent of reorth_every.
inline TangentResult tangent_map(const SystemDef& sys, std::span<const double> x0, double t, double step,
                                 int reorth_every = 10) {
  const double times[] = {t};
  return tangent_map_checkpoints(sys, x0, times, step, reorth_every).front();
}

/// Points on an attractor: integrate for `warmup`, then record `count` states
/// spaced `stride` apart (for maps, warmup and stride are iteration counts).
inline PointSet sample_attractor(const SystemDef& sys, std::span<const double> x0, double warmup,
                                 std::size_t count, double stride, double step) {
  detail::check_dim(sys, x0.size());
  if (count == 0) throw ArgumentError("sample_attractor: count must be >= 1");
  if (!(stride > 0)) throw ArgumentError("sample_attractor: stride must be > 0");
  Vector x = advance(sys, x0, warmup, step);
  PointSet ps(sys.state_dim, sys.name + "-attractor");
  ps.reserve(count);
  ps.push_back(x);
  for (std::size_t i = 1; i < count; ++i) {
    try {
      x = advance(sys, x, stride, step);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.what(), e.last_state(), warmup + static_cast<double>(i - 1) * stride + e.last_time());
    }
    ps.push_back(x);
  }
  return ps;
}

/// CSV with header `t,x1,...,xn`.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const std::size_t n = tr.states.empty() ? 0 : tr.states.front().size();
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << tr.times[k];
    for (double v : tr.states[k]) os << ',' << v;
    os << '\n';
  }
}

}  // namespace attrdim
