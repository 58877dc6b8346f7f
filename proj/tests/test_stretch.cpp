#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "attrdim/stretch.hpp"

using namespace attrdim;

namespace {
const double kSaddle[] = {1.0, -1.0};
}

TEST(CurveLength, Examples) {
  Curve c;
  c.points = {{0, 0}, {3, 4}};
  c.params = {0, 1};
  EXPECT_DOUBLE_EQ(curve_length(c), 5.0);

  Curve sq;
  sq.points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}};
  sq.params = {0, 0.25, 0.5, 0.75, 1};
  EXPECT_DOUBLE_EQ(curve_length(sq), 4.0);

  Curve one;
  one.points = {{1, 1}};
  one.params = {0};
  EXPECT_THROW(curve_length(one), ArgumentError);
}

TEST(EvolveCurve, LinearSaddleStretchesByE) {
  auto sys = linear_diag(kSaddle);
  auto seg = make_segment(std::vector<double>{0, 0}, std::vector<double>{1, 0}, 0.05);
  auto img = evolve_curve(sys, seg, 1.0, 1e-3);
  EXPECT_NEAR(curve_length(img), std::exp(1.0), 1e-6);
  EXPECT_LE(max_gap(img), img.resolution);
}

TEST(EvolveCurve, StretchFactorMatchesExponential) {
  auto sys = linear_diag(kSaddle);
  auto seg = make_segment(std::vector<double>{0.2, 0.3}, std::vector<double>{0.5, 0.3}, 0.01);
  const double l0 = curve_length(seg);
  for (double t : {0.5, 1.0, 2.0, 3.0}) {
    const double factor = curve_length(evolve_curve(sys, seg, t, 1e-3)) / l0;
    EXPECT_NEAR(factor / std::exp(t), 1.0, 1e-5) << "t = " << t;
  }
}

TEST(EvolveCurve, ZeroTauIsIdentity) {
  auto seg = make_segment(std::vector<double>{0, 0, 0}, std::vector<double>{0.1, 0, 0}, 0.01);
  auto img = evolve_curve(lorenz(), seg, 0.0, 1e-3);
  EXPECT_EQ(img.points, seg.points);
  EXPECT_EQ(img.params, seg.params);
}

TEST(EvolveCurve, RefinementNeverShortens) {
  auto sys = lorenz();
  auto coarse = default_lorenz_segment(sys, {.length = 0.1, .resolution = 1e3});
  auto fine = coarse;
  fine.resolution = 1e-3;
  const double unrefined = curve_length(evolve_curve(sys, coarse, 2.0, 1e-3));
  const double refined = curve_length(evolve_curve(sys, fine, 2.0, 1e-3));
  EXPECT_GE(refined, unrefined);
}

// Measured for the default segment: the image stays longer than the
// original at every tau in 1..5 and grows by more than an order of
// magnitude by tau = 4. Length is not monotone in tau (1.95 at tau 4,
// 1.68 at tau 5).
TEST(EvolveCurve, LorenzSegmentGrows) {
  auto sys = lorenz();
  auto seg = default_lorenz_segment(sys);
  const double l0 = curve_length(seg);
  EXPECT_NEAR(l0, 0.1, 1e-12);
  double longest = 0;
  for (double tau : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    const double l = curve_length(evolve_curve(sys, seg, tau, 1e-3));
    EXPECT_GT(l, l0) << "tau = " << tau;
    longest = std::max(longest, l);
  }
  EXPECT_GT(longest, 10 * l0);
}

TEST(EvolveCurve, BudgetExceeded) {
  auto sys = linear_diag(kSaddle);
  auto seg = make_segment(std::vector<double>{0, 0}, std::vector<double>{1, 0}, 0.1);
  EXPECT_THROW(evolve_curve(sys, seg, 5.0, 1e-3, 50), BudgetError);
}

TEST(EvolveCurve, SegmentIsTransverse) {
  auto sys = lorenz();
  auto seg = default_lorenz_segment(sys);
  const auto& a = seg.points.front();
  const auto& b = seg.points.back();
  Vector mid(3), d(3);
  for (std::size_t i = 0; i < 3; ++i) {
    mid[i] = 0.5 * (a[i] + b[i]);
    d[i] = b[i] - a[i];
  }
  auto f = eval_field(sys, mid);
  EXPECT_NEAR(dot(f, d) / (norm(f) * norm(d)), 0.0, 1e-12);
  EXPECT_LE(max_gap(seg), 1e-3 * (1 + 1e-9));  // rounding of coordinates near 25
}

TEST(StretchRate, LinearSaddleRateIsOne) {
  auto sys = linear_diag(kSaddle);
  auto seg = make_segment(std::vector<double>{0, 0}, std::vector<double>{0.1, 0}, 0.01);
  const double taus[] = {1, 2, 3};
  auto f = stretch_rate(sys, seg, taus, 1e-3);
  EXPECT_NEAR(f.rate, 1.0, 1e-6);
  EXPECT_NEAR(f.r2, 1.0, 1e-9);
}

TEST(InfAlpha1Rate, LinearStandIn) {
  const double rates[] = {0.5, -1.0};
  PointSet samples(2);
  samples.push_back(std::vector<double>{1.0, 1.0});
  samples.push_back(std::vector<double>{0.0, 3.0});
  EXPECT_NEAR(inf_alpha1_rate(linear_diag(rates), samples, 4.0, 1e-3).value, 0.5, 1e-9);
}

TEST(InfAlpha1Rate, NotAboveSupOnSameSamples) {
  auto samples = sample_lorenz_attractor(10, 28, 8.0 / 3.0, 12, {.seed = 3});
  auto sys = lorenz();
  auto lo = inf_alpha1_rate(sys, samples, 3.0, 1e-3);
  auto hi = estimate_a(sys, samples, 3.0, 1e-3);
  EXPECT_LE(lo.value, hi.value);
  EXPECT_EQ(lo.rates, hi.rates);
  EXPECT_THROW(inf_alpha1_rate(10, 28, 8.0 / 3.0, 5, 0.0, 1e-3, 0), ArgumentError);
}

TEST(StretchLowerBound, Examples) {
  EXPECT_NEAR(stretch_lower_bound(1, 8, 1, 2), 8 / (2 * std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(stretch_lower_bound(1, 8, 1, 2), 2.8284, 1e-4);
  EXPECT_NEAR(stretch_lower_bound(1, 24, 1, 2), 3 * stretch_lower_bound(1, 8, 1, 2), 1e-12);
  EXPECT_NEAR(stretch_lower_bound(0.3, 5, 1, 1), 0.3 * 5 / 2, 1e-12);
  EXPECT_NEAR(stretch_lower_bound(2, 3, 2, 3), 2 * 3 / (4.0 * 3.0), 1e-12);
  EXPECT_THROW(stretch_lower_bound(0, 1, 1, 2), ArgumentError);
  EXPECT_THROW(stretch_lower_bound(1, 1, 0, 2), ArgumentError);
  EXPECT_THROW(stretch_lower_bound(1, 1, 3, 2), ArgumentError);
}

TEST(CurveIo, CsvHeader) {
  auto seg = make_segment(std::vector<double>{0, 0}, std::vector<double>{1, 0}, 0.5);
  std::ostringstream os;
  write_curve_csv(os, seg);
  EXPECT_EQ(os.str(), "t_param,x1,x2\n0,0,0\n0.5,0.5,0\n1,1,0\n");
}
