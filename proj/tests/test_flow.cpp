#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "attrdim/flow.hpp"
#include "test_support.hpp"

using namespace attrdim;

namespace {
double sum(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

bool descending(const Vector& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

const double kDecay[] = {-1.0};
}  // namespace

TEST(Integrate, ExponentialDecay) {
  auto tr = integrate(linear_diag(kDecay), Vector{1.0}, 1.0, 1e-3);
  EXPECT_NEAR(tr.final_state()[0], std::exp(-1.0), 1e-8);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
}

TEST(Integrate, FinalTimeWithinOneStep) {
  auto tr = integrate(linear_diag(kDecay), Vector{1.0}, 0.0105, 1e-3);
  EXPECT_LE(std::abs(tr.times.back() - 0.0105), 1e-3);
  EXPECT_EQ(tr.size(), 12u);
}

TEST(Integrate, LorenzEquilibriumStays) {
  auto tr = integrate(lorenz(), Vector{0, 0, 0}, 3.0, 1e-3);
  EXPECT_EQ(tr.final_state(), (Vector{0, 0, 0}));
}

TEST(Integrate, MapAtZeroIsInitialState) {
  auto tr = integrate(henon(), Vector{0.1, 0.2}, 0, 1.0);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.states[0], (Vector{0.1, 0.2}));
}

TEST(Integrate, MapIterates) {
  auto sys = henon();
  auto tr = integrate(sys, Vector{0.1, 0.2}, 3, 123.0);
  ASSERT_EQ(tr.size(), 4u);
  Vector x{0.1, 0.2};
  for (int k = 0; k < 3; ++k) x = eval_field(sys, x);
  EXPECT_EQ(tr.final_state(), x);
  EXPECT_THROW(integrate(sys, Vector{0.1, 0.2}, 2.5, 1.0), ArgumentError);
}

TEST(Integrate, DivergenceCarriesLastFiniteState) {
  const double growth[] = {1.0};
  try {
    integrate(linear_diag(growth), Vector{1.0}, 30.0, 1e-2);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_LE(std::abs(e.last_state()[0]), kDivergenceThreshold);
    EXPECT_NEAR(e.last_time(), std::log(1e8), 0.05);
  }
}

TEST(Integrate, ArgumentErrors) {
  EXPECT_THROW(integrate(lorenz(), Vector{1, 1, 1}, -1.0, 1e-3), ArgumentError);
  EXPECT_THROW(integrate(lorenz(), Vector{1, 1, 1}, 1.0, 0.0), ArgumentError);
  EXPECT_THROW(integrate(lorenz(), Vector{1, 1}, 1.0, 1e-3), ArgumentError);
}

// Fourth-order convergence on x' = -x: the error ratio between step h and h/2
// is about 2^4.
TEST(Integrate, StepHalvingOrder) {
  auto sys = linear_diag(kDecay);
  auto err = [&](double h) { return std::abs(integrate(sys, Vector{1.0}, 1.0, h).final_state()[0] - std::exp(-1.0)); };
  const double order = std::log2(err(0.1) / err(0.05));
  EXPECT_GE(order, 3.5);
  EXPECT_LE(order, 4.5);
}

TEST(Integrate, TrajectoryCsv) {
  std::ostringstream os;
  write_trajectory_csv(os, integrate(lorenz(), Vector{1, 2, 3}, 0, 1e-3));
  EXPECT_EQ(os.str().substr(0, 12), "t,x1,x2,x3\n0");
}

TEST(TangentMap, DiagonalLinearFlow) {
  const double rates[] = {1.0, -1.0};
  auto r = tangent_map(linear_diag(rates), Vector{0.3, -2.0}, 1.0, 1e-3);
  EXPECT_NEAR(r.log_svals[0], 1.0, 1e-6);
  EXPECT_NEAR(r.log_svals[1], -1.0, 1e-6);
}

TEST(TangentMap, ZeroTimeIsIdentity) {
  auto r = tangent_map(lorenz(), Vector{1, 2, 3}, 0.0, 1e-3);
  EXPECT_EQ(r.log_svals, (Vector{0, 0, 0}));
  auto m = tangent_map(henon(), Vector{0.1, 0.1}, 0, 1);
  EXPECT_EQ(m.log_svals, (Vector{0, 0}));
}

TEST(TangentMap, LorenzVolumeIdentityAtFive) {
  auto sys = lorenz();
  auto x = advance(sys, Vector{1, 1, 1}, 50.0, 1e-3);
  auto r = tangent_map(sys, x, 5.0, 1e-3);
  const double want = -(10 + 8.0 / 3.0 + 1) * 5.0;
  EXPECT_NEAR(sum(r.log_svals), want, 1e-4 * std::abs(want));
  EXPECT_TRUE(descending(r.log_svals));
}

TEST(TangentMap, LorenzVolumeIdentityAcrossHorizons) {
  auto sys = lorenz();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    auto x = testkit::random_vector(rng, 3, -15, 15);
    const double times[] = {1, 2, 5, 10, 20};
    auto rs = tangent_map_checkpoints(sys, x, times, 1e-3);
    ASSERT_EQ(rs.size(), 5u);
    for (const auto& r : rs) {
      const double trace_t = (10 + 8.0 / 3.0 + 1) * r.t;
      EXPECT_LE(std::abs(sum(r.log_svals) + trace_t) / trace_t, 1e-4) << "t = " << r.t;
      EXPECT_LE(std::abs(sum(r.qr_log_diag) + trace_t) / trace_t, 1e-4);
      EXPECT_TRUE(descending(r.log_svals));
    }
  }
}

TEST(TangentMap, CheckpointsMatchSingleRuns) {
  auto sys = lorenz();
  const double times[] = {2.0, 4.0};
  auto rs = tangent_map_checkpoints(sys, Vector{-3, 2, 20}, times, 1e-3);
  auto single = tangent_map(sys, Vector{-3, 2, 20}, 4.0, 1e-3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(rs[1].log_svals[i], single.log_svals[i], 1e-9);
}

TEST(TangentMap, LogSumIndependentOfReorthInterval) {
  auto sys = lorenz();
  Vector x{-5, -6, 22};
  auto a = tangent_map(sys, x, 3.0, 1e-3, 1);
  auto b = tangent_map(sys, x, 3.0, 1e-3, 10);
  auto c = tangent_map(sys, x, 3.0, 1e-3, 250);
  EXPECT_NEAR(sum(a.log_svals), sum(b.log_svals), 1e-9);
  EXPECT_NEAR(sum(a.log_svals), sum(c.log_svals), 1e-9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.log_svals[i], c.log_svals[i], 1e-7);
  EXPECT_THROW(tangent_map(sys, x, 1.0, 1e-3, 0), ArgumentError);
}

// Oracle: direct product of p Jacobians, singular values from Eigen.
static Eigen::VectorXd direct_svals(const SystemDef& sys, Vector x, int p) {
  const auto n = static_cast<Eigen::Index>(sys.state_dim);
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < p; ++k) {
    Matrix j = eval_jacobian(sys, x);
    Eigen::MatrixXd je(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) je(r, c) = j(r, c);
    prod = je * prod;
    x = eval_field(sys, x);
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(prod).singularValues();
}

static void check_against_direct(const SystemDef& sys, const Vector& x, int p, int reorth) {
  auto r = tangent_map(sys, x, p, 1.0, reorth);
  auto sv = direct_svals(sys, x, p);
  double direct_sum = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) direct_sum += std::log(sv[i]);
  EXPECT_LE(std::abs(sum(r.log_svals) - direct_sum), 1e-8 * std::max(1.0, std::abs(direct_sum)))
      << sys.name << " p=" << p;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    EXPECT_LE(std::abs(std::exp(r.log_svals[static_cast<std::size_t>(i)]) / sv[i] - 1.0), 1e-3)
        << sys.name << " p=" << p << " entry " << i;
}

TEST(TangentMap, MapsMatchDirectProductSvd) {
  auto h = henon();
  Vector x = advance(h, Vector{0.1, 0.1}, 100, 1.0);
  for (int p = 1; p <= 10; ++p)
    for (int reorth : {1, 3, 10}) check_against_direct(h, x, p, reorth);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 3;
    auto sys = linear(testkit::random_matrix(rng, n, -1.5, 1.5), SystemKind::Map);
    for (int p = 1; p <= 10; ++p) check_against_direct(sys, Vector(n, 0.1), p, 2);
  }
}

TEST(SampleAttractor, StridedPointsAreDeterministic) {
  auto a = sample_attractor(lorenz(), Vector{1, 1, 1}, 10.0, 20, 1.0, 1e-3);
  auto b = sample_attractor(lorenz(), Vector{1, 1, 1}, 10.0, 20, 1.0, 1e-3);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.coords().size(); ++i) EXPECT_EQ(a.coords()[i], b.coords()[i]);
  auto x = advance(lorenz(), Vector{1, 1, 1}, 10.0, 1e-3);
  x = advance(lorenz(), x, 1.0, 1e-3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.point(1)[i], x[i]);
}
