#pragma once

// Coverings by disjoint cubes of side 2*eps on an anchored grid, the
// Hausdorff-Lebesgue fractal measure sums N(eps) * eps^d, box-counting fits,
// and the cube-count bound for images of oriented cubes.
//
// Cubes are half-open per axis, [anchor + 2 eps k, anchor + 2 eps (k + 1)).
// A point lying on a shared face (to within a relative 1e-9 of the grid
// coordinate) may be claimed by either neighbour; it goes to a cube that is
// already occupied when one exists, otherwise to the upper one. So the grid
// {0, 1/4, ..., 1} is covered by four cubes of side 1/4, and a lone point on a
// face lands in the upper cube.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "attrdim/dynsys.hpp"
#include "attrdim/errors.hpp"
#include "attrdim/linalg.hpp"
#include "attrdim/spectra.hpp"

namespace attrdim {

using CubeIndex = std::vector<std::int64_t>;

struct GridCovering {
  double eps = 0.0;  ///< half-side; cube side is 2 * eps
  Vector anchor;
  std::size_t n = 0;
  std::vector<CubeIndex> occupied;       ///< sorted, unique
  std::vector<std::size_t> assignment;  ///< point i lies in occupied[assignment[i]]

  double side() const noexcept { return 2.0 * eps; }
  std::size_t count() const noexcept { return occupied.size(); }
};

namespace detail {

inline constexpr double kFaceTolerance = 1e-9;

struct GridCoordinate {
  std::int64_t cell;
  bool on_face;  ///< grid coordinate is an integer: cell and cell - 1 both qualify
};

inline GridCoordinate grid_coordinate(double x, double anchor, double side) {
  const double q = (x - anchor) / side;
  if (!std::isfinite(q) || std::abs(q) > 9e15) throw ArgumentError("grid_cover: coordinate out of range");
  const double r = std::round(q);
  if (std::abs(q - r) <= kFaceTolerance * std::max(1.0, std::abs(q)))
    return {static_cast<std::int64_t>(r), true};
  return {static_cast<std::int64_t>(std::floor(q)), false};
}

inline Vector resolve_anchor(std::span<const double> anchor, std::size_t n) {
  if (anchor.empty()) return Vector(n, 0.0);
  if (anchor.size() != n) throw ArgumentError("grid_cover: anchor length differs from ambient dimension");
  return Vector(anchor.begin(), anchor.end());
}

}  // namespace detail

/// Covers `points` by disjoint grid cubes of side 2 * eps. An empty anchor
/// means the origin.
inline GridCovering grid_cover(const PointSet& points, double eps, std::span<const double> anchor = {}) {
  if (!(eps > 0) || !std::isfinite(eps)) throw ArgumentError("grid_cover: eps must be > 0");
  const std::size_t n = points.dim();
  const std::size_t m = points.size();
  GridCovering cov;
  cov.eps = eps;
  cov.n = n;
  cov.anchor = detail::resolve_anchor(anchor, n);
  const double side = 2.0 * eps;

  std::vector<CubeIndex> base(m, CubeIndex(n));
  std::vector<std::uint32_t> face_mask(m, 0);
  if (n > 31) throw ArgumentError("grid_cover: ambient dimension above 31 not supported");
  for (std::size_t i = 0; i < m; ++i) {
    auto p = points.point(i);
    for (std::size_t a = 0; a < n; ++a) {
      auto gc = detail::grid_coordinate(p[a], cov.anchor[a], side);
      base[i][a] = gc.cell;
      if (gc.on_face) face_mask[i] |= (1U << a);
    }
  }

  // Cubes forced by points off every face.
  std::vector<CubeIndex> forced;
  forced.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    if (face_mask[i] == 0) forced.push_back(base[i]);
  std::sort(forced.begin(), forced.end());
  forced.erase(std::unique(forced.begin(), forced.end()), forced.end());
  std::set<CubeIndex> extra;
  auto occupied_now = [&](const CubeIndex& c) {
    return std::binary_search(forced.begin(), forced.end(), c) || extra.count(c) > 0;
  };

  std::vector<CubeIndex> chosen(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t mask = face_mask[i];
    if (mask == 0) {
      chosen[i] = base[i];
      continue;
    }
    // Enumerate sub-masks of the face axes; sub-mask 0 is the upper cube.
    std::optional<CubeIndex> pick;
    for (std::uint32_t sub = 0;; sub = (sub - mask) & mask) {
      CubeIndex c = base[i];
      for (std::size_t a = 0; a < n; ++a)
        if (sub & (1U << a)) c[a] -= 1;
      if (occupied_now(c)) {
        pick = std::move(c);
        break;
      }
      if (((sub - mask) & mask) == 0) break;
    }
    if (!pick) {
      pick = base[i];
      extra.insert(base[i]);
    }
    chosen[i] = std::move(*pick);
  }

  cov.occupied = forced;
  cov.occupied.insert(cov.occupied.end(), extra.begin(), extra.end());
  std::sort(cov.occupied.begin(), cov.occupied.end());
  cov.assignment.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    cov.assignment[i] = static_cast<std::size_t>(
        std::lower_bound(cov.occupied.begin(), cov.occupied.end(), chosen[i]) - cov.occupied.begin());
  return cov;
}

/// Cube count only; same assignment rule as grid_cover.
inline std::size_t cover_count(const PointSet& points, double eps, std::span<const double> anchor = {}) {
  return grid_cover(points, eps, anchor).count();
}

struct CountRow {
  double eps = 0.0;
  std::size_t count = 0;
};

struct CountTable {
  std::vector<CountRow> rows;  ///< eps strictly decreasing
  Vector anchor;
  std::size_t point_count = 0;
};

inline CountTable count_scales(const PointSet& points, std::span<const double> eps_list,
                               std::span<const double> anchor = {}) {
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0)) throw ArgumentError("count_scales: eps values must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw ArgumentError("count_scales: eps values must be strictly decreasing");
  }
  CountTable t;
  t.anchor = detail::resolve_anchor(anchor, points.dim());
  t.point_count = points.size();
  t.rows.resize(eps_list.size());
  parallel_for(eps_list.size(), [&](std::size_t i) { t.rows[i] = {eps_list[i], cover_count(points, eps_list[i], t.anchor)}; });
  return t;
}

/// Halving ladder eps_max, eps_max/2, ... continued while the average number
/// of points per occupied cube stays >= min_points_per_cube (the sampling
/// floor) and at most max_scales rows.
inline CountTable count_scales_to_floor(const PointSet& points, double eps_max, double min_points_per_cube,
                                        std::size_t max_scales = 40, std::span<const double> anchor = {}) {
  if (!(eps_max > 0)) throw ArgumentError("count_scales_to_floor: eps_max must be > 0");
  CountTable t;
  t.anchor = detail::resolve_anchor(anchor, points.dim());
  t.point_count = points.size();
  double eps = eps_max;
  for (std::size_t k = 0; k < max_scales; ++k, eps *= 0.5) {
    const std::size_t c = cover_count(points, eps, t.anchor);
    if (static_cast<double>(points.size()) / static_cast<double>(c) < min_points_per_cube) break;
    t.rows.push_back({eps, c});
  }
  return t;
}

/// One term N(eps) * eps^d of the limsup sequence defining the fractal measure.
inline double fhl_measure_estimate(const PointSet& points, double eps, double d, std::span<const double> anchor = {}) {
  if (!(d >= 0)) throw ArgumentError("fhl_measure_estimate: d must be >= 0");
  return static_cast<double>(cover_count(points, eps, anchor)) * std::pow(eps, d);
}

struct DimensionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double eps_min = 0.0;
  double eps_max = 0.0;
  std::size_t rows_used = 0;
};

/// Least squares of ln N against ln(1/eps) over rows with eps in
/// [eps_min, eps_max]. The slope estimates the box-counting dimension.
inline DimensionFit dim_fit(const CountTable& table, double eps_min, double eps_max) {
  std::vector<double> xs, ys;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& row : table.rows) {
    if (row.eps < eps_min * (1 - 1e-12) || row.eps > eps_max * (1 + 1e-12) || row.count == 0) continue;
    xs.push_back(-std::log(row.eps));
    ys.push_back(std::log(static_cast<double>(row.count)));
    lo = std::min(lo, row.eps);
    hi = std::max(hi, row.eps);
  }
  if (xs.size() < 3)
    throw InsufficientDataError("dim_fit: " + std::to_string(xs.size()) + " usable scales, need at least 3");
  const double k = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0) throw InsufficientDataError("dim_fit: scales are not distinct");
  DimensionFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += e * e;
  }
  f.r2 = syy <= 1e-300 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  f.eps_min = lo;
  f.eps_max = hi;
  f.rows_used = xs.size();
  return f;
}

inline DimensionFit dim_fit(const CountTable& table) {
  return dim_fit(table, 0.0, std::numeric_limits<double>::infinity());
}

/// Upper bound on the number of cubes of side 2 sqrt(n) delta alpha_{k+1}
/// needed to cover a parallelepiped with sides 2 sqrt(n) delta alpha_j:
/// prod_{i <= k} (alpha_i / alpha_{k+1} + 1).
inline double theorem1_cube_bound(const SingularSpectrum& spec, std::size_t k) {
  if (k < 1 || k >= spec.size()) throw ArgumentError("cube bound: k must satisfy 1 <= k < n");
  const double ref = spec.log(k);
  if (std::isinf(ref)) throw UnboundedError("cube bound: alpha_{k+1} = 0, the image is flat");
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log1p(std::exp(spec.log(i) - ref));
  return std::exp(acc);
}

enum class Relation { LessEqual, Equal };

inline const char* to_string(Relation r) { return r == Relation::Equal ? "=" : "<="; }

struct AdditivityResult {
  double lhs = 0.0;  ///< N(union of parts)
  double rhs = 0.0;  ///< sum of N(part)
  Relation relation = Relation::LessEqual;
  bool separated = false;  ///< parts pairwise farther apart than the cube diagonal 2 eps sqrt(n)
};

namespace detail {
inline bool farther_than(const PointSet& a, const PointSet& b, double gap) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (distance(a.point(i), b.point(j)) <= gap) return false;
  return true;
}
}  // namespace detail

/// Count-level analogue of sub-additivity over a union and additivity over
/// well-separated parts. The separation test is a pairwise scan, quadratic in
/// the part sizes.
inline AdditivityResult additivity_check(std::span<const PointSet> parts, double eps, std::span<const double> anchor = {}) {
  if (parts.empty()) throw ArgumentError("additivity_check: no parts");
  const std::size_t n = parts.front().dim();
  PointSet all(n, "union");
  double rhs = 0.0;
  for (const auto& p : parts) {
    if (p.dim() != n) throw ArgumentError("additivity_check: parts live in different dimensions");
    for (std::size_t i = 0; i < p.size(); ++i) all.push_back(p.point(i));
    rhs += static_cast<double>(cover_count(p, eps, anchor));
  }
  AdditivityResult r;
  r.lhs = static_cast<double>(cover_count(all, eps, anchor));
  r.rhs = rhs;
  const double gap = 2.0 * eps * std::sqrt(static_cast<double>(n));
  r.separated = true;
  for (std::size_t i = 0; i < parts.size() && r.separated; ++i)
    for (std::size_t j = i + 1; j < parts.size() && r.separated; ++j)
      r.separated = detail::farther_than(parts[i], parts[j], gap);
  r.relation = r.separated ? Relation::Equal : Relation::LessEqual;
  return r;
}

/// CSV with header `eps,side,N` followed by one `N_eps_d_<d>` column per d.
inline void write_count_table_csv(std::ostream& os, const CountTable& t, std::span<const double> ds = {}) {
  os.precision(17);
  os << "eps,side,N";
  for (double d : ds) os << ",N_eps_d_" << d;
  os << '\n';
  for (const auto& row : t.rows) {
    os << row.eps << ',' << 2.0 * row.eps << ',' << row.count;
    for (double d : ds) os << ',' << static_cast<double>(row.count) * std::pow(row.eps, d);
    os << '\n';
  }
}

}  // namespace attrdim
