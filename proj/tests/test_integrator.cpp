#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "smallcar/models.hpp"
#include "smallcar/reference.hpp"
#include "smallcar/sim/integrator.hpp"

using namespace smallcar;
using namespace smallcar::sim;

namespace {

double decay_error(double dt) {
  std::array<double, 1> y{1.0};
  const auto n = static_cast<int>(std::llround(1.0 / dt));
  for (int k = 0; k < n; ++k) {
    y = integrate_rk4<1>([](const std::array<double, 1>& x) { return std::array<double, 1>{-x[0]}; }, y, dt);
  }
  return std::abs(y[0] - std::exp(-1.0));
}

}  // namespace

TEST(Rk4, FourthOrderOnExponentialDecay) {
  const double e1 = decay_error(0.01);
  const double e2 = decay_error(0.005);
  const double e3 = decay_error(0.0025);
  const double p1 = std::log2(e1 / e2);
  const double p2 = std::log2(e2 / e3);
  EXPECT_GT(p1, 3.8);
  EXPECT_LT(p1, 4.2);
  EXPECT_GT(p2, 3.8);
  EXPECT_LT(p2, 4.2);
}

TEST(Rk4, SingleStepMatchesTaylorSeries) {
  // For y' = y one RK4 step reproduces exp(h) through the h^4 term.
  const double h = 0.1;
  const auto y = integrate_rk4<1>([](const std::array<double, 1>& x) { return x; }, {1.0}, h);
  EXPECT_NEAR(y[0], 1 + h + h * h / 2 + h * h * h / 6 + h * h * h * h / 24, 1e-15);
}

TEST(Rk4, KinematicCircleCloses) {
  const auto g = reference::geometry();
  const double delta = 0.3;
  const double v = 1.2;
  const double radius = g.l / std::tan(delta);
  const double period = 2.0 * std::numbers::pi * radius / v;
  const int n = 2000;
  const double dt = period / n;
  KinematicState s{0.0, 0.0, 0.0, v};
  auto rhs = [&](const std::array<double, 4>& x) {
    return kinematic_rhs(KinematicState::from_array(x), delta, 0.0, g);
  };
  for (int k = 0; k < n; ++k) s = KinematicState::from_array(integrate_rk4<4>(rhs, s.to_array(), dt));
  EXPECT_LT(std::hypot(s.x, s.y), 1e-6 * radius);
  EXPECT_NEAR(s.eta, 2.0 * std::numbers::pi, 1e-9);
  EXPECT_DOUBLE_EQ(s.v, v);
}

TEST(Rk4, RejectsBadStepAndNonFiniteDerivative) {
  auto identity = [](const std::array<double, 1>& x) { return x; };
  EXPECT_THROW(integrate_rk4<1>(identity, {1.0}, 0.0), IntegrationError);
  EXPECT_THROW(integrate_rk4<1>(identity, {1.0}, -0.1), IntegrationError);
  auto bad = [](const std::array<double, 1>&) { return std::array<double, 1>{std::numeric_limits<double>::quiet_NaN()}; };
  try {
    integrate_rk4<1>(bad, {1.0}, 0.01, 2.5);
    FAIL();
  } catch (const IntegrationError& e) {
    EXPECT_EQ(e.time(), 2.5);
  }
}
