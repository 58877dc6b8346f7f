#pragma once

// Stretching of curves under a flow: a segment K1 is carried by F^tau and its
// length is measured on an adaptively refined polyline. Growth of the length
// at an exponential rate is the numerical face of the lower bound that rules
// out a smooth compact manifold as the attractor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "attrdim/dynsys.hpp"
#include "attrdim/errors.hpp"
#include "attrdim/flow.hpp"
#include "attrdim/lorenz_analysis.hpp"
#include "attrdim/parallel.hpp"

namespace attrdim {

/// Polyline with a parameter value in [0, 1] per vertex.
struct Curve {
  std::vector<Vector> points;
  std::vector<double> params;
  double resolution = 1e-3;  ///< target max gap between consecutive vertices

  std::size_t size() const noexcept { return points.size(); }
};

inline double curve_length(const Curve& c) {
  if (c.points.size() < 2) throw ArgumentError("curve_length: need at least two vertices");
  double len = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i) len += distance(c.points[i - 1], c.points[i]);
  return len;
}

inline double max_gap(const Curve& c) {
  double g = 0.0;
  for (std::size_t i = 1; i < c.points.size(); ++i) g = std::max(g, distance(c.points[i - 1], c.points[i]));
  return g;
}

/// Straight segment from a to b with vertices no farther apart than resolution.
inline Curve make_segment(std::span<const double> a, std::span<const double> b, double resolution) {
  if (a.size() != b.size() || a.empty()) throw ArgumentError("make_segment: endpoint dimensions differ");
  if (!(resolution > 0)) throw ArgumentError("make_segment: resolution must be > 0");
  const double len = distance(a, b);
  if (len == 0) throw ArgumentError("make_segment: endpoints coincide");
  const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / resolution - 1e-12)));
  Curve c;
  c.resolution = resolution;
  for (std::size_t k = 0; k <= pieces; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(pieces);
    Vector p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] + u * (b[i] - a[i]);
    c.points.push_back(std::move(p));
    c.params.push_back(u);
  }
  return c;
}

/// Segment of the given length centred at `center`, along `direction`
/// projected orthogonally to the vector field at the centre.
inline Curve transverse_segment(const SystemDef& sys, std::span<const double> center, std::span<const double> direction,
                                double length, double resolution) {
  detail::check_dim(sys, center.size());
  detail::check_dim(sys, direction.size());
  Vector f = eval_field(sys, center);
  Vector d(direction.begin(), direction.end());
  const double ff = dot(f, f);
  if (ff > 0) axpy(-dot(d, f) / ff, f, d);
  const double nd = norm(d);
  if (!(nd > 0)) throw ArgumentError("transverse_segment: direction is parallel to the flow");
  Vector a(center.begin(), center.end()), b(center.begin(), center.end());
  axpy(-0.5 * length / nd, d, a);
  axpy(0.5 * length / nd, d, b);
  return make_segment(a, b, resolution);
}

/// Tangent vector v carried along x' = f(x), v' = J(x) v for time t.
inline Vector push_forward(const SystemDef& sys, std::span<const double> x0, std::span<const double> v0, double t,
                           double step) {
  detail::check_dim(sys, x0.size());
  detail::check_dim(sys, v0.size());
  Vector x(x0.begin(), x0.end());
  Matrix v(v0.size(), 1);
  for (std::size_t i = 0; i < v0.size(); ++i) v(i, 0) = v0[i];
  const std::size_t steps = detail::step_count(t, step);
  const double h = steps == 0 ? 0.0 : t / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    detail::rk4_variational_step(sys, x, v, h);
    double nv = 0.0;
    for (std::size_t i = 0; i < v.rows(); ++i) nv += v(i, 0) * v(i, 0);
    nv = std::sqrt(nv);
    if (!(nv > 0) || !std::isfinite(nv)) throw DivergenceError("push_forward: tangent vector degenerate", x, k * h);
    v *= 1.0 / nv;
  }
  Vector out(v0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v(i, 0);
  return out;
}

struct SegmentPlacement {
  Vector target{-10.0, -10.0, 25.0};
  double length = 0.1;
  double resolution = 1e-3;
  std::uint64_t seed = 0;
  double warmup = 100.0;
  double search_time = 200.0;  ///< trajectory span searched for the nearest point
  double spacing = 0.01;       ///< time between searched states
  double history = 5.0;        ///< time over which the unstable direction is grown
  double step = 1e-3;
};

/// Segment lying on the attractor near `target`: centred at the closest state
/// of a seeded trajectory (after warmup), along the leading unstable direction
/// at that state (a generic vector carried over the previous `history` time
/// units), projected orthogonally to the field.
inline Curve attractor_segment_near(const SystemDef& sys, std::span<const double> x0, const SegmentPlacement& cfg) {
  detail::check_dim(sys, cfg.target.size());
  if (sys.kind != SystemKind::Flow) throw ArgumentError("attractor_segment_near: flows only");
  if (!(cfg.spacing > 0) || !(cfg.search_time > cfg.history)) throw ArgumentError("attractor_segment_near: bad search window");
  const auto stride = static_cast<std::size_t>(std::llround(cfg.spacing / cfg.step));
  if (stride == 0) throw ArgumentError("attractor_segment_near: spacing below step");
  const Vector start = advance(sys, x0, cfg.warmup, cfg.step);
  const Trajectory tr = integrate(sys, start, cfg.search_time, cfg.step, stride);
  std::size_t best = tr.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.times[i] < cfg.history) continue;
    const double d = distance(tr.states[i], cfg.target);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (best == tr.size()) throw ArgumentError("attractor_segment_near: search window too short");
  const auto back = static_cast<std::size_t>(std::llround(cfg.history / (tr.times[1] - tr.times[0])));
  const Vector& past = tr.states[best - back];
  const Vector generic(sys.state_dim, 1.0);
  Vector dir = push_forward(sys, past, generic, tr.times[best] - tr.times[best - back], cfg.step);
  return transverse_segment(sys, tr.states[best], dir, cfg.length, cfg.resolution);
}

/// Default Lorenz segment: length 0.1 on the attractor near (-10, -10, 25),
/// resolution 1e-3, trajectory started from the seeded (1, 1, 1) state.
inline Curve default_lorenz_segment(const SystemDef& sys, const SegmentPlacement& cfg = {}) {
  return attractor_segment_near(sys, lorenz_initial_state(cfg.seed, 1e-3), cfg);
}

namespace detail {
/// Position on the original polyline at parameter u (linear between vertices).
inline Vector curve_at(const Curve& c, double u) {
  auto it = std::upper_bound(c.params.begin(), c.params.end(), u);
  if (it == c.params.begin()) return c.points.front();
  if (it == c.params.end()) return c.points.back();
  const std::size_t j = static_cast<std::size_t>(it - c.params.begin());
  const double u0 = c.params[j - 1], u1 = c.params[j];
  const double w = u1 > u0 ? (u - u0) / (u1 - u0) : 0.0;
  Vector p = c.points[j - 1];
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += w * (c.points[j][i] - p[i]);
  return p;
}

inline void check_curve(const Curve& c) {
  if (c.points.size() < 2) throw ArgumentError("curve needs at least two vertices");
  if (c.params.size() != c.points.size()) throw ArgumentError("curve params and points differ in length");
  if (!(c.resolution > 0)) throw ArgumentError("curve resolution must be > 0");
  for (std::size_t i = 1; i < c.params.size(); ++i)
    if (!(c.params[i] > c.params[i - 1])) throw ArgumentError("curve params must be increasing");
}
}  // namespace detail

inline constexpr std::size_t kDefaultVertexBudget = 10'000'000;

/// Image of the curve under the time-tau map. Gaps above the resolution are
/// filled by advancing points taken at parameter midpoints of the input curve,
/// so folds of the image are followed rather than cut by chords.
inline Curve evolve_curve(const SystemDef& sys, const Curve& curve, double tau, double step,
                          std::size_t vertex_budget = kDefaultVertexBudget) {
  detail::check_curve(curve);
  if (!(tau >= 0)) throw ArgumentError("evolve_curve: tau must be >= 0");
  if (tau == 0) return curve;

  auto image = [&](double u) { return advance(sys, detail::curve_at(curve, u), tau, step); };

  Curve out;
  out.resolution = curve.resolution;
  out.params = curve.params;
  out.points.resize(curve.size());
  parallel_for(curve.size(), [&](std::size_t i) { out.points[i] = advance(sys, curve.points[i], tau, step); });

  constexpr double kMinParamGap = 1e-15;
  for (;;) {
    std::vector<std::size_t> split;  // gap index i means between i and i + 1
    for (std::size_t i = 0; i + 1 < out.size(); ++i)
      if (distance(out.points[i], out.points[i + 1]) > out.resolution &&
          out.params[i + 1] - out.params[i] > kMinParamGap)
        split.push_back(i);
    if (split.empty()) break;
    if (out.size() + split.size() > vertex_budget)
      throw BudgetError("evolve_curve: refinement needs more than " + std::to_string(vertex_budget) + " vertices");
    std::vector<double> mid_u(split.size());
    std::vector<Vector> mid_p(split.size());
    for (std::size_t k = 0; k < split.size(); ++k)
      mid_u[k] = 0.5 * (out.params[split[k]] + out.params[split[k] + 1]);
    parallel_for(split.size(), [&](std::size_t k) { mid_p[k] = image(mid_u[k]); });

    Curve next;
    next.resolution = out.resolution;
    next.points.reserve(out.size() + split.size());
    next.params.reserve(out.size() + split.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      next.points.push_back(std::move(out.points[i]));
      next.params.push_back(out.params[i]);
      if (k < split.size() && split[k] == i) {
        next.points.push_back(std::move(mid_p[k]));
        next.params.push_back(mid_u[k]);
        ++k;
      }
    }
    out = std::move(next);
  }
  return out;
}

struct StretchFit {
  std::vector<double> taus;
  std::vector<double> lengths;
  std::vector<std::size_t> vertices;
  double initial_length = 0.0;
  double rate = 0.0;       ///< slope of ln L against tau
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Lengths of the evolved curve at each tau and the log-linear growth rate.
inline StretchFit stretch_rate(const SystemDef& sys, const Curve& curve, std::span<const double> taus, double step,
                               std::size_t vertex_budget = kDefaultVertexBudget) {
  if (taus.size() < 2) throw InsufficientDataError("stretch_rate: need at least two tau values");
  StretchFit f;
  f.initial_length = curve_length(curve);
  for (double tau : taus) {
    Curve img = evolve_curve(sys, curve, tau, step, vertex_budget);
    f.taus.push_back(tau);
    f.lengths.push_back(curve_length(img));
    f.vertices.push_back(img.size());
  }
  const double k = static_cast<double>(taus.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    mx += f.taus[i] / k;
    my += std::log(f.lengths[i]) / k;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double dx = f.taus[i] - mx, dy = std::log(f.lengths[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) throw InsufficientDataError("stretch_rate: tau values are not distinct");
  f.rate = sxy / sxx;
  f.intercept = my - f.rate * mx;
  f.r2 = syy <= 0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return f;
}

/// min over samples of (1/tau) log alpha_1(T_x F^tau); companion of estimate_a.
inline RateEstimate inf_alpha1_rate(const SystemDef& sys, const PointSet& samples, double tau, double step) {
  return reduce_rates(alpha1_rates(sys, samples, tau, step), tau, false);
}

inline RateEstimate inf_alpha1_rate(double sigma, double r, double b, std::size_t n_samples, double tau, double step,
                                    std::uint64_t seed) {
  if (n_samples < 1) throw ArgumentError("inf_alpha1_rate: n_samples must be >= 1");
  if (!(tau > 0)) throw ArgumentError("inf_alpha1_rate: tau must be > 0");
  AttractorSampling cfg;
  cfg.seed = seed;
  cfg.step = step;
  auto samples = sample_lorenz_attractor(sigma, r, b, n_samples, cfg);
  return inf_alpha1_rate(lorenz(sigma, r, b), samples, tau, step);
}

/// R nu / (2^k n^{k/2}): lower bound on the k-measure of the image after the
/// time at which inf omega_k >= R.
inline double stretch_lower_bound(double nu, double R, int k, int n) {
  if (!(nu > 0) || !(R > 0)) throw ArgumentError("stretch_lower_bound: nu and R must be > 0");
  if (k < 1 || n < 1 || k > n) throw ArgumentError("stretch_lower_bound: need 1 <= k <= n");
  return R * nu / (std::pow(2.0, k) * std::pow(static_cast<double>(n), 0.5 * k));
}

/// CSV with header `t_param,x1,...,xn`.
inline void write_curve_csv(std::ostream& os, const Curve& c) {
  const std::size_t n = c.points.empty() ? 0 : c.points.front().size();
  os << "t_param";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < c.size(); ++k) {
    os << c.params[k];
    for (double v : c.points[k]) os << ',' << v;
    os << '\n';
  }
}

}  // namespace attrdim
