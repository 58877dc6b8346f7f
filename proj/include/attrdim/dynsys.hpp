#pragma once

// Catalog of dynamical systems (Lorenz flow, Henon map, linear systems) and
// prefractal point sets with known dimension.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrdim/errors.hpp"
#include "attrdim/linalg.hpp"

namespace attrdim {

enum class SystemKind { Flow, Map };

struct SystemDef {
  using FieldFn = std::function<Vector(std::span<const double>)>;
  using JacobianFn = std::function<Matrix(std::span<const double>)>;

  std::string name;
  SystemKind kind = SystemKind::Flow;
  std::size_t state_dim = 0;
  std::map<std::string, double> params;
  FieldFn field;        ///< derivative for flows, image for maps
  JacobianFn jacobian;  ///< d field / dx
  std::vector<std::string> warnings;

  double param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw ArgumentError(name + ": no parameter '" + key + "'");
    return it->second;
  }
};

namespace detail {
inline void check_dim(const SystemDef& sys, std::size_t got) {
  if (got != sys.state_dim)
    throw ArgumentError(sys.name + ": state has length " + std::to_string(got) + ", expected " +
                        std::to_string(sys.state_dim));
}
}  // namespace detail

inline Vector eval_field(const SystemDef& sys, std::span<const double> x) {
  detail::check_dim(sys, x.size());
  return sys.field(x);
}

inline Matrix eval_jacobian(const SystemDef& sys, std::span<const double> x) {
  detail::check_dim(sys, x.size());
  return sys.jacobian(x);
}

/// Parameter-range notes for Lorenz (sigma > 0, r > 1, b in [0, 4]).
/// Out-of-range values are allowed; the returned strings describe them.
inline std::vector<std::string> lorenz_param_warnings(double sigma, double r, double b) {
  std::vector<std::string> w;
  if (!(sigma > 0)) w.push_back("sigma <= 0 is outside the studied range sigma > 0");
  if (!(r > 1)) w.push_back("r <= 1 is outside the studied range r > 1");
  if (!(b >= 0 && b <= 4)) w.push_back("b outside the studied range [0, 4]");
  return w;
}

/// x' = -sigma (x - y), y' = r x - y - x z, z' = -b z + x y
inline SystemDef lorenz(double sigma = 10.0, double r = 28.0, double b = 8.0 / 3.0) {
  SystemDef s;
  s.name = "lorenz";
  s.kind = SystemKind::Flow;
  s.state_dim = 3;
  s.params = {{"sigma", sigma}, {"r", r}, {"b", b}};
  s.warnings = lorenz_param_warnings(sigma, r, b);
  s.field = [=](std::span<const double> x) {
    return Vector{-sigma * (x[0] - x[1]), r * x[0] - x[1] - x[0] * x[2], -b * x[2] + x[0] * x[1]};
  };
  s.jacobian = [=](std::span<const double> x) {
    return Matrix{{-sigma, sigma, 0.0}, {r - x[2], -1.0, -x[0]}, {x[1], x[0], -b}};
  };
  return s;
}

/// (x, y) -> (1 - a x^2 + y, b x)
inline SystemDef henon(double a = 1.4, double b = 0.3) {
  SystemDef s;
  s.name = "henon";
  s.kind = SystemKind::Map;
  s.state_dim = 2;
  s.params = {{"a", a}, {"b", b}};
  s.field = [=](std::span<const double> x) { return Vector{1.0 - a * x[0] * x[0] + x[1], b * x[0]}; };
  s.jacobian = [=](std::span<const double> x) { return Matrix{{-2.0 * a * x[0], 1.0}, {b, 0.0}}; };
  return s;
}

/// x' = A x (flow) or x -> A x (map).
inline SystemDef linear(const Matrix& a, SystemKind kind = SystemKind::Flow) {
  if (!a.square() || a.rows() == 0) throw ArgumentError("linear: A must be square and non-empty");
  SystemDef s;
  s.name = kind == SystemKind::Flow ? "linear" : "linear-map";
  s.kind = kind;
  s.state_dim = a.rows();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      s.params["a" + std::to_string(i + 1) + std::to_string(j + 1)] = a(i, j);
  s.field = [a](std::span<const double> x) { return a * x; };
  s.jacobian = [a](std::span<const double>) { return a; };
  return s;
}

inline SystemDef linear_diag(std::span<const double> rates, SystemKind kind = SystemKind::Flow) {
  return linear(Matrix::diagonal(rates), kind);
}

// ---------------------------------------------------------------------------
// Point sets

/// Finite point cloud in R^n, stored flat (point i occupies [i*n, (i+1)*n)).
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t n, std::string label = {}) : n_(n), label_(std::move(label)) {
    if (n == 0) throw ArgumentError("PointSet: ambient dimension must be >= 1");
  }
  PointSet(std::size_t n, std::vector<double> coords, std::string label = {})
      : n_(n), coords_(std::move(coords)), label_(std::move(label)) {
    if (n == 0) throw ArgumentError("PointSet: ambient dimension must be >= 1");
    if (coords_.size() % n != 0) throw ArgumentError("PointSet: coordinate count not a multiple of n");
  }

  std::size_t dim() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ == 0 ? 0 : coords_.size() / n_; }
  bool empty() const noexcept { return coords_.empty(); }
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * n_, n_}; }
  std::span<const double> coords() const noexcept { return coords_; }

  void push_back(std::span<const double> p) {
    if (p.size() != n_) throw ArgumentError("PointSet: point has wrong length");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  void reserve(std::size_t count) { coords_.reserve(count * n_); }

  /// Union of two point sets in the same ambient space (concatenation).
  friend PointSet merge(const PointSet& a, const PointSet& b) {
    if (a.dim() != b.dim()) throw ArgumentError("merge: ambient dimensions differ");
    PointSet out(a.dim(), a.coords_, a.label_ + "+" + b.label_);
    out.coords_.insert(out.coords_.end(), b.coords_.begin(), b.coords_.end());
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> coords_;
  std::string label_;
};

enum class FractalKind { Cantor, Sierpinski, Square, Interval };

inline FractalKind parse_fractal_kind(const std::string& s) {
  if (s == "cantor") return FractalKind::Cantor;
  if (s == "sierpinski") return FractalKind::Sierpinski;
  if (s == "square" || s == "square-grid") return FractalKind::Square;
  if (s == "interval" || s == "interval-grid") return FractalKind::Interval;
  throw ArgumentError("unknown point-set kind '" + s + "'");
}

inline std::size_t natural_dim(FractalKind k) {
  return (k == FractalKind::Cantor || k == FractalKind::Interval) ? 1 : 2;
}

/// Largest supported level; keeps point counts below about 2e7.
inline int max_fractal_level(FractalKind k) {
  switch (k) {
    case FractalKind::Sierpinski: return 14;
    case FractalKind::Square: return 11;
    default: return 24;
  }
}

/// Prefractal vertex sets, padded with zero coordinates up to ambient dimension n
/// (n = 0 selects the natural dimension).
///
///  - cantor: left endpoints of the 2^level surviving middle-thirds intervals
///  - sierpinski: lower-left corners of the 3^level subtriangles of the right
///    gasket with corners (0,0), (1,0), (0,1); that is {(i, j)/2^level : i & j = 0}
///  - square: the (2^level + 1)^2 grid {k/2^level}^2
///  - interval: the 2^level + 1 points {k/2^level}
///
/// Coordinates are integer ratios, so points are exactly reproducible.
inline PointSet fractal_points(FractalKind kind, int level, std::size_t n = 0) {
  if (level < 0) throw ArgumentError("fractal_points: level must be >= 0");
  const std::size_t nat = natural_dim(kind);
  if (n == 0) n = nat;
  if (n < nat) throw ArgumentError("fractal_points: ambient dimension below the set's own dimension");
  const int max_level = max_fractal_level(kind);
  if (level > max_level)
    throw ArgumentError("fractal_points: level " + std::to_string(level) + " exceeds limit " +
                        std::to_string(max_level));

  PointSet ps(n);
  Vector p(n, 0.0);
  switch (kind) {
    case FractalKind::Cantor: {
      ps.set_label("cantor-" + std::to_string(level));
      const auto count = std::uint64_t{1} << level;
      double denom = std::pow(3.0, level);
      ps.reserve(count);
      for (std::uint64_t m = 0; m < count; ++m) {
        // binary digits of m select ternary digit 0 or 2, most significant first
        std::uint64_t num = 0;
        for (int i = level - 1; i >= 0; --i) num = num * 3 + (((m >> i) & 1U) ? 2 : 0);
        p[0] = static_cast<double>(num) / denom;
        ps.push_back(p);
      }
      break;
    }
    case FractalKind::Sierpinski: {
      ps.set_label("sierpinski-" + std::to_string(level));
      const std::uint64_t side = std::uint64_t{1} << level;
      const double denom = static_cast<double>(side);
      for (std::uint64_t j = 0; j < side; ++j)
        for (std::uint64_t i = 0; i < side; ++i)
          if ((i & j) == 0) {
            p[0] = static_cast<double>(i) / denom;
            p[1] = static_cast<double>(j) / denom;
            ps.push_back(p);
          }
      break;
    }
    case FractalKind::Square: {
      ps.set_label("square-" + std::to_string(level));
      const std::uint64_t side = std::uint64_t{1} << level;
      const double denom = static_cast<double>(side);
      ps.reserve((side + 1) * (side + 1));
      for (std::uint64_t j = 0; j <= side; ++j)
        for (std::uint64_t i = 0; i <= side; ++i) {
          p[0] = static_cast<double>(i) / denom;
          p[1] = static_cast<double>(j) / denom;
          ps.push_back(p);
        }
      break;
    }
    case FractalKind::Interval: {
      ps.set_label("interval-" + std::to_string(level));
      const std::uint64_t side = std::uint64_t{1} << level;
      for (std::uint64_t i = 0; i <= side; ++i) {
        p[0] = static_cast<double>(i) / static_cast<double>(side);
        ps.push_back(p);
      }
      break;
    }
  }
  return ps;
}

inline PointSet fractal_points(const std::string& kind, int level, std::size_t n = 0) {
  return fractal_points(parse_fractal_kind(kind), level, n);
}

}  // namespace attrdim
