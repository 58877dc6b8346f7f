// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attrdim/attrdim.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace attrdim;

namespace {

int failures = 0;

struct Check {
  std::ostringstream detail;
  bool ok = true;

  void require(bool cond, const std::string& what) {
    detail << (detail.tellp() > 0 ? "; " : "") << what << (cond ? "" : " [fail]");
    ok = ok && cond;
  }
};

void criterion(const char* id, const char* title, const std::function<void(Check&)>& body) {
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  if (!c.ok) ++failures;
  std::printf("%s criterion %s (%s): %s\n", c.ok ? "PASS" : "FAIL", id, title, c.detail.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

bool near(double v, double target, double tol) { return std::abs(v - target) <= tol; }

PointSet lorenz_samples(double b, std::size_t n) {
  AttractorSampling cfg;
  cfg.seed = 0;
  return sample_lorenz_attractor(10.0, 28.0, b, n, cfg);
}

}  // namespace

int main() {
  const double b83 = 8.0 / 3.0;

  criterion("1", "Lorenz closed form", [&](Check& c) {
    auto v = lorenz_dim_formula(10.0, 28.0, b83);
    c.require(v.dimension && near(*v.dimension, 2.4013, 5e-4), "dim = " + fmt(v.dimension.value_or(NAN), 8) + " vs 2.4013 +- 5e-4");
  });

  criterion("2", "volume identity residual", [&](Check& c) {
    auto pts = lorenz_samples(b83, 10);
    double worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      worst = std::max(worst, volume_identity_residual(10.0, 28.0, b83, pts.point(i), 5.0, 1e-3));
    c.require(worst <= 1e-4, "max residual over 10 points = " + fmt(worst, 3) + " <= 1e-4");
  });

  // Shared by criteria 3 and 6: 200 samples, horizon 20.
  const SystemDef lz = lorenz(10.0, 28.0, b83);
  const PointSet rate_samples = lorenz_samples(b83, 200);
  const std::vector<double> rates = alpha1_rates(lz, rate_samples, 20.0, 1e-3);

  criterion("3", "hl bound from a", [&](Check& c) {
    const double fixed = hl_bound_from_a(0.829, 10.0, b83);
    c.require(near(fixed, 2.0572, 5e-4), "bound(0.829) = " + fmt(fixed, 8) + " vs 2.0572 +- 5e-4");
    auto a = reduce_rates(rates, 20.0, true);
    const double bound = hl_bound_from_a(a.value, 10.0, b83);
    c.require(bound >= 2.05 && bound <= 2.07,
              "pipeline a = " + fmt(a.value) + " (horizon 20, 200 samples) gives bound " + fmt(bound, 8) +
                  " in [2.05, 2.07]");
  });

  criterion("4", "covering oracle suite", [&](Check& c) {
    auto dyadic = [](int levels) {
      std::vector<double> e;
      for (int m = 1; m <= levels; ++m) e.push_back(std::ldexp(1.0, -m) / 2.0);
      return e;
    };
    std::vector<double> triadic;
    for (int m = 1; m <= 10; ++m) triadic.push_back(std::pow(3.0, -m) / 2.0);
    // Lattice sets are built finer than the finest cube, so no cube is met
    // only at a corner.
    const double sq = dim_fit(count_scales(fractal_points(FractalKind::Square, 11), dyadic(9))).slope;
    const double ca = dim_fit(count_scales(fractal_points(FractalKind::Cantor, 10), triadic)).slope;
    const double si = dim_fit(count_scales(fractal_points(FractalKind::Sierpinski, 10), dyadic(8))).slope;
    c.require(near(sq, 2.0, 0.02), "square " + fmt(sq) + " vs 2 +- 0.02");
    c.require(near(ca, std::log(2.0) / std::log(3.0), 0.01), "cantor " + fmt(ca) + " vs 0.6309 +- 0.01");
    c.require(near(si, std::log(3.0) / std::log(2.0), 0.05), "sierpinski " + fmt(si) + " vs 1.585 +- 0.05");
  });

  criterion("5", "dimension ordering", [&](Check& c) {
    AttractorSampling cfg;
    cfg.stride = 0.01;
    auto cloud = sample_lorenz_attractor(10.0, 28.0, b83, 1'000'000, cfg);
    auto table = count_scales_to_floor(cloud, 8.0, 10.0);
    const std::size_t octaves = table.rows.empty() ? 0 : table.rows.size() - 1;
    c.require(octaves >= 3, "ladder spans " + std::to_string(octaves) + " octaves above the floor");
    const double box = dim_fit(table).slope;
    auto samples = lorenz_samples(b83, 50);
    const std::vector<double> horizons{5.0, 10.0, 20.0};
    const double lyap = lyapunov_dim_on_set(lz, samples, horizons, 1e-3).value;
    const double closed = *lorenz_dim_formula(10.0, 28.0, b83).dimension;
    c.require(box <= lyap + 0.05, "box " + fmt(box) + " <= lyapunov " + fmt(lyap) + " + 0.05");
    c.require(lyap <= closed + 0.05 && box <= closed + 0.05, "both <= closed form " + fmt(closed) + " + 0.05");
  });

  criterion("6", "curve stretching", [&](Check& c) {
    const Curve seg = default_lorenz_segment(lz);
    const std::vector<double> taus{1, 2, 3, 4, 5};
    auto fit = stretch_rate(lz, seg, taus, 1e-3);
    c.require(fit.rate >= 0.7, "length growth rate over tau 1..5 = " + fmt(fit.rate) + " >= 0.7");
    const double inf83 = reduce_rates(rates, 20.0, false).value;
    c.require(near(inf83, 0.788, 0.15), "inf rate b=8/3 = " + fmt(inf83) + " vs 0.788 +- 0.15");
    const SystemDef lz23 = lorenz(10.0, 28.0, 2.0 / 3.0);
    const double inf23 = inf_alpha1_rate(lz23, lorenz_samples(2.0 / 3.0, 200), 20.0, 1e-3).value;
    c.require(near(inf23, 0.788, 0.15), "inf rate b=2/3 = " + fmt(inf23) + " vs 0.788 +- 0.15");
  });

  criterion("7", "property suites", [&](Check& c) {
    std::mt19937_64 rng(7);
    std::size_t violations = 0;
    std::uniform_real_distribution<double> ud(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
      Matrix a = testkit::random_matrix(rng, 3), b = testkit::random_matrix(rng, 3);
      const double d = ud(rng);
      const double lhs = log_omega_d(singular_values(a * b), d);
      const double rhs = log_omega_d(singular_values(a), d) + log_omega_d(singular_values(b), d);
      if (lhs > rhs + std::log1p(1e-9)) ++violations;
    }
    c.require(violations == 0, "omega_d sub-multiplicativity violations " + std::to_string(violations) + "/1000");

    std::size_t refine_bad = 0, sets = 0;
    std::vector<PointSet> all{fractal_points(FractalKind::Square, 6), fractal_points(FractalKind::Cantor, 8),
                              fractal_points(FractalKind::Sierpinski, 6), fractal_points(FractalKind::Interval, 8),
                              lorenz_samples(b83, 2000)};
    for (const auto& ps : all) {
      ++sets;
      for (double eps = 4.0; eps > 1e-3; eps *= 0.5)
        if (cover_count(ps, eps) > (std::size_t{1} << ps.dim()) * cover_count(ps, 2 * eps)) ++refine_bad;
    }
    c.require(refine_bad == 0, "dyadic refinement violations " + std::to_string(refine_bad) + " over " +
                                   std::to_string(sets) + " sets");

    std::size_t local_bad = 0;
    std::uniform_real_distribution<double> ul(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> logs{ul(rng), ul(rng), ul(rng)};
      std::sort(logs.begin(), logs.end(), std::greater<>());
      auto spec = SingularSpectrum::from_logs(logs);
      auto ld = local_lyapunov_dim(spec);
      const double total = logs[0] + logs[1] + logs[2];
      if (logs[0] < 0) local_bad += ld.value != 0.0;
      else if (total >= 0) local_bad += ld.value != 3.0;
      else local_bad += std::abs(log_omega_d(spec, ld.value)) > 1e-9;
    }
    c.require(local_bad == 0, "local dimension case violations " + std::to_string(local_bad) + "/1000");

    const auto r1 = estimate_a(10.0, 28.0, b83, 8, 2.0, 1e-3, 5);
    const auto r2 = estimate_a(10.0, 28.0, b83, 8, 2.0, 1e-3, 5);
    const auto cl1 = lorenz_samples(b83, 500), cl2 = lorenz_samples(b83, 500);
    const bool same = r1.rates == r2.rates && cover_count(cl1, 0.5) == cover_count(cl2, 0.5) &&
                      std::equal(cl1.coords().begin(), cl1.coords().end(), cl2.coords().begin());
    c.require(same, "seeded runs repeat bit for bit");
  });

  criterion("8", "cube-count bound", [&](Check& c) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.25, 3.0);
    std::size_t bad = 0, cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + trial % 2;
      std::vector<double> sv(n);
      for (auto& v : sv) v = u(rng);
      std::sort(sv.begin(), sv.end(), std::greater<>());
      auto spec = SingularSpectrum::from_values(sv);
      for (std::size_t k = 1; k < n; ++k) {
        std::vector<double> sides(n);
        for (std::size_t i = 0; i < n; ++i) sides[i] = sv[i] / sv[k];
        ++cases;
        if (theorem1_cube_bound(spec, k) < static_cast<double>(oracle::min_tiling_count(sides))) ++bad;
      }
    }
    c.require(bad == 0, std::to_string(bad) + " of " + std::to_string(cases) + " cases below the brute-force tiling");
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
