#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smallcar/reference.hpp"
#include "smallcar/sysid/optim.hpp"
#include "smallcar/sysid/pipeline.hpp"

using namespace smallcar;
using namespace smallcar::sysid;

namespace {

Objective quadratic(std::vector<double> center, std::vector<double> weight) {
  return [center, weight](std::span<const double> p, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double r = p[i] - center[i];
      f += weight[i] * r * r;
      g[i] = 2.0 * weight[i] * r;
    }
    return f;
  };
}

FitConfig box(std::vector<double> init, std::vector<double> lo, std::vector<double> hi) {
  FitConfig c;
  c.initial = std::move(init);
  c.lower = std::move(lo);
  c.upper = std::move(hi);
  return c;
}

template <SubModel M>
Dataset synthesize(const M& model, std::span<const double> truth, const std::vector<std::vector<double>>& rows) {
  std::vector<ColumnInfo> in;
  for (std::size_t k = 0; k < rows.front().size(); ++k) in.push_back({"x" + std::to_string(k), ""});
  Dataset d(in, {{"y", ""}});
  for (const auto& r : rows) d.add_row(r, std::vector<double>{model.predict(r, truth)});
  return d;
}

std::vector<std::vector<double>> column(const std::vector<double>& xs) {
  std::vector<std::vector<double>> out;
  for (double x : xs) out.push_back({x});
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::vector<std::vector<double>> motor_rows() {
  std::vector<std::vector<double>> rows;
  for (double tau : linspace(0.15, 0.4, 6)) {
    for (double v : linspace(0.1, 3.0, 30)) rows.push_back({tau, v});
  }
  return rows;
}

template <SubModel M>
double curve_rms(const M& model, std::span<const double> fit, const Dataset& data) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double r = model.predict(data.x(i), fit) - data.y(i)[0];
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(data.rows()));
}

// Central-difference gradient check with the step taken on normalized
// parameters p_i / scale_i.
template <SubModel M>
void check_gradient(const M& model, const Dataset& data, const FitConfig& cfg, unsigned seed) {
  const auto scale = parameter_scales(cfg);
  std::mt19937 rng(seed);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> p(M::kParamCount);
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::uniform_real_distribution<double> u(cfg.lower[i] + 0.1 * scale[i], cfg.upper[i] - 0.1 * scale[i]);
      p[i] = u(rng);
    }
    std::vector<double> g(p.size());
    squared_error_loss_and_gradient(model, p, data, g);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double h = 1e-6;
      auto q = p;
      q[i] = p[i] + h * scale[i];
      const double up = squared_error_loss([&](auto x, auto pp) { return model.predict(x, pp); }, q, data);
      q[i] = p[i] - h * scale[i];
      const double dn = squared_error_loss([&](auto x, auto pp) { return model.predict(x, pp); }, q, data);
      const double fd = (up - dn) / (2.0 * h);  // derivative w.r.t. normalized parameter
      const double an = g[i] * scale[i];
      EXPECT_LT(std::abs(an - fd) / std::max(std::abs(fd), 1.0), 1e-5)
          << "param " << i << " trial " << trial << " analytic " << an << " fd " << fd;
    }
  }
}

// Long runs for the identifiability checks: no early stop, and a patient
// learning-rate schedule so the step size is not cut while Adam oscillates.
FitConfig tight(FitConfig c) {
  c.max_iterations = 200000;
  c.tolerance = 0.0;
  c.plateau_patience = 1000;
  return c;
}

}  // namespace

// --- loss -------------------------------------------------------------------

TEST(Loss, PerfectPredictorIsZero) {
  Dataset d({{"x", ""}}, {{"y", ""}});
  for (double x : linspace(-1, 1, 10)) d.add_row({x}, {2.0 * x});
  const std::vector<double> p{2.0};
  EXPECT_EQ(squared_error_loss([](auto x, auto q) { return q[0] * x[0]; }, p, d), 0.0);
}

TEST(Loss, ZeroPredictorOnOnesCountsRows) {
  Dataset d({{"x", ""}}, {{"y", ""}});
  for (int i = 0; i < 17; ++i) d.add_row({double(i)}, {1.0});
  const std::vector<double> p{0.0};
  EXPECT_EQ(squared_error_loss([](auto, auto) { return 0.0; }, p, d), 17.0);
}

TEST(Loss, DoublingResidualsQuadruples) {
  Dataset d({{"x", ""}}, {{"y", ""}});
  for (double x : linspace(0, 1, 9)) d.add_row({x}, {x * x});
  const std::vector<double> p{0.3};
  auto pred = [](auto x, auto q) { return q[0] + x[0]; };
  const double base = squared_error_loss(pred, p, d);
  const std::vector<double> p2{0.3};
  auto pred2 = [&](auto x, auto q) { return 2.0 * (q[0] + x[0]) - x[0] * x[0]; };
  EXPECT_NEAR(squared_error_loss(pred2, p2, d), 4.0 * base, 1e-12);
}

TEST(Loss, VectorLabels) {
  Dataset d({{"x", ""}}, {{"a", ""}, {"b", ""}});
  d.add_row({1.0}, {1.0, 2.0});
  const std::vector<double> p{0.0};
  auto pred = [](auto, auto) { return std::vector<double>{0.0, 0.0}; };
  EXPECT_EQ(squared_error_loss(pred, p, d), 5.0);
}

// --- Adam -------------------------------------------------------------------

TEST(Adam, ScalarQuadratic) {
  auto cfg = box({0.0}, {-10.0}, {10.0});
  const auto r = adam_fit(quadratic({3.0}, {1.0}), cfg);
  EXPECT_NEAR(r.params[0], 3.0, 1e-4);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.loss_trace.size(), r.iterations + 1);
}

TEST(Adam, ActiveBound) {
  const auto r = adam_fit(quadratic({3.0}, {1.0}), box({0.0}, {0.0}, {1.0}));
  EXPECT_EQ(r.params[0], 1.0);
}

TEST(Adam, NeverLeavesBounds) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> center{u(rng), u(rng), u(rng)};
    auto cfg = box({0.0, 0.0, 0.0}, {-1.0, -0.5, 0.0}, {1.0, 0.5, 2.0});
    cfg.learning_rate = 0.2;
    cfg.max_iterations = 500;
    std::vector<std::vector<double>> visited;
    auto base = quadratic(center, {1.0, 10.0, 0.1});
    Objective spy = [&](std::span<const double> p, std::span<double> g) {
      visited.emplace_back(p.begin(), p.end());
      return base(p, g);
    };
    const auto r = adam_fit(spy, cfg);
    visited.push_back(r.params);
    for (const auto& p : visited) {
      for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_GE(p[i], cfg.lower[i]);
        EXPECT_LE(p[i], cfg.upper[i]);
      }
    }
  }
}

TEST(Adam, LossNonIncreasingOverWindowsOnQuadratics) {
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> cases = {
      {{3.0}, {1.0}}, {{-2.0, 0.5}, {1.0, 100.0}}, {{0.3, -0.7, 4.0}, {0.01, 1.0, 5.0}}};
  for (const auto& [center, weight] : cases) {
    FitConfig cfg;
    cfg.initial.assign(center.size(), 0.0);
    cfg.lower.assign(center.size(), -10.0);
    cfg.upper.assign(center.size(), 10.0);
    const auto r = adam_fit(quadratic(center, weight), cfg);
    // Adam oscillates about the minimum, so compare consecutive 50-iteration
    // windows by their worst loss rather than point to point.
    const auto& tr = r.loss_trace;
    for (std::size_t i = 0; i + 100 <= tr.size(); ++i) {
      const double before = *std::max_element(tr.begin() + i, tr.begin() + i + 50);
      const double after = *std::max_element(tr.begin() + i + 50, tr.begin() + i + 100);
      ASSERT_LE(after, before) << "window at " << i;
    }
  }
}

TEST(Adam, UnboundedScaleFromInitial) {
  auto cfg = box({1.0}, {-INFINITY}, {INFINITY});
  cfg.max_iterations = 20000;
  const auto r = adam_fit(quadratic({-40.0}, {1.0}), cfg);
  EXPECT_NEAR(r.params[0], -40.0, 1e-3);
}

TEST(Adam, NonFiniteLossReportsIteration) {
  auto cfg = box({0.0}, {-10.0}, {10.0});
  Objective f = [](std::span<const double> p, std::span<double> g) {
    g[0] = -1.0;
    return p[0] > 0.05 ? NAN : -p[0];
  };
  try {
    adam_fit(f, cfg);
    FAIL() << "no FitError";
  } catch (const FitError& e) {
    EXPECT_GT(e.iteration(), 0u);
  }
}

TEST(Adam, NonFiniteGradientAtStart) {
  Objective f = [](std::span<const double>, std::span<double> g) {
    g[0] = INFINITY;
    return 1.0;
  };
  try {
    adam_fit(f, box({0.0}, {-1.0}, {1.0}));
    FAIL() << "no FitError";
  } catch (const FitError& e) {
    EXPECT_EQ(e.iteration(), 0u);
  }
}

TEST(Adam, ConfigValidation) {
  auto bad = box({2.0}, {0.0}, {1.0});
  EXPECT_THROW(adam_fit(quadratic({0.0}, {1.0}), bad), ConfigError);
  auto lr = box({0.5}, {0.0}, {1.0});
  lr.learning_rate = 0.0;
  EXPECT_THROW(adam_fit(quadratic({0.0}, {1.0}), lr), ConfigError);
  auto beta = box({0.5}, {0.0}, {1.0});
  beta.beta2 = 1.0;
  EXPECT_THROW(adam_fit(quadratic({0.0}, {1.0}), beta), ConfigError);
  auto len = box({0.5}, {0.0, 0.0}, {1.0});
  EXPECT_THROW(adam_fit(quadratic({0.0}, {1.0}), len), ConfigError);
  EXPECT_THROW(adam_fit(quadratic({0.0}, {1.0}), FitConfig{}), ConfigError);
}

// --- gradient checks --------------------------------------------------------

TEST(GradientCheck, Friction) {
  const auto truth = FrictionModel::pack(reference::friction());
  const auto data = synthesize(FrictionModel{}, truth, column(linspace(0.05, 3.0, 60)));
  check_gradient(FrictionModel{}, data, default_friction_fit(), 1);
}

TEST(GradientCheck, Motor) {
  const auto truth = MotorModel::pack(reference::motor());
  const auto data = synthesize(MotorModel{}, truth, motor_rows());
  check_gradient(MotorModel{}, data, default_motor_fit(), 2);
}

TEST(GradientCheck, Steering) {
  const auto truth = SteeringModel::pack(reference::steering());
  const auto data = synthesize(SteeringModel{}, truth, column(linspace(-1.0, 1.0, 41)));
  check_gradient(SteeringModel{}, data, default_steering_fit(), 3);
}

TEST(GradientCheck, FrontTire) {
  const auto truth = FrontTireModel::pack(reference::tire());
  const auto data = synthesize(FrontTireModel{}, truth, column(linspace(-0.6, 0.6, 41)));
  check_gradient(FrontTireModel{}, data, default_front_tire_fit(), 4);
}

TEST(GradientCheck, RearTire) {
  const std::vector<double> truth{0.39};
  const auto data = synthesize(RearTireModel{}, truth, column(linspace(-0.3, 0.3, 21)));
  check_gradient(RearTireModel{}, data, default_rear_tire_fit(), 5);
}

TEST(Submodels, PredictMatchesOracle) {
  for (double v : linspace(-2.0, 2.0, 9)) {
    const std::vector<double> x{v};
    const auto p = FrictionModel::pack(reference::friction());
    EXPECT_NEAR(FrictionModel{}.predict(x, p), double(oracle::friction(v, 1.72L, 13.32L, 0.29L)), 1e-13);
  }
  for (double s : linspace(-1.0, 1.0, 9)) {
    const std::vector<double> x{s};
    const auto p = SteeringModel::pack(reference::steering());
    EXPECT_NEAR(SteeringModel{}.predict(x, p), double(oracle::steering(s, 1.64L, 0.33L, 0.02L, 1.66L, 0.38L)),
                1e-14);
  }
}

// --- round-trip identifiability -----------------------------------------------

TEST(RoundTrip, Friction) {
  const auto truth = FrictionModel::pack(reference::friction());
  const auto data = synthesize(FrictionModel{}, truth, column(linspace(0.05, 3.0, 60)));
  const auto r = adam_fit(make_objective(FrictionModel{}, data), tight(default_friction_fit()));
  EXPECT_LT(curve_rms(FrictionModel{}, r.params, data), 1e-6);
}

TEST(RoundTrip, Motor) {
  const auto truth = MotorModel::pack(reference::motor());
  const auto data = synthesize(MotorModel{}, truth, motor_rows());
  const auto r = adam_fit(make_objective(MotorModel{}, data), tight(default_motor_fit()));
  EXPECT_LT(curve_rms(MotorModel{}, r.params, data), 1e-6);
}

TEST(RoundTrip, Steering) {
  const auto truth = SteeringModel::pack(reference::steering());
  const auto data = synthesize(SteeringModel{}, truth, column(linspace(-1.0, 1.0, 41)));
  const auto r = adam_fit(make_objective(SteeringModel{}, data), tight(default_steering_fit()));
  EXPECT_LT(curve_rms(SteeringModel{}, r.params, data), 1e-6);
}

// Over small slip ranges only the product D*C*B is visible in the curve and
// Adam crawls along that valley, so the check samples the full slip domain.
TEST(RoundTrip, FrontTire) {
  const auto truth = FrontTireModel::pack(reference::tire());
  const auto data = synthesize(FrontTireModel{}, truth, column(linspace(-1.5, 1.5, 41)));
  const auto r = adam_fit(make_objective(FrontTireModel{}, data), tight(default_front_tire_fit()));
  EXPECT_LT(curve_rms(FrontTireModel{}, r.params, data), 1e-6);
}

TEST(RoundTrip, RearTire) {
  const std::vector<double> truth{0.39};
  const auto data = synthesize(RearTireModel{}, truth, column(linspace(-0.3, 0.3, 21)));
  const auto r = adam_fit(make_objective(RearTireModel{}, data), tight(default_rear_tire_fit()));
  EXPECT_LT(curve_rms(RearTireModel{}, r.params, data), 1e-6);
  EXPECT_NEAR(r.params[0], 0.39, 1e-6);
}

TEST(RoundTrip, FrictionDefaultConfigReachesSmallLoss) {
  const auto truth = FrictionModel::pack(reference::friction());
  const auto data = synthesize(FrictionModel{}, truth, column(linspace(0.05, 3.0, 60)));
  const auto r = adam_fit(make_objective(FrictionModel{}, data), default_friction_fit());
  EXPECT_LT(r.final_loss, 1e-8);
  EXPECT_NEAR(r.params[0], 1.72, 1e-3);
  EXPECT_NEAR(r.params[1], 13.32, 1e-2);
  EXPECT_NEAR(r.params[2], 0.29, 1e-3);
}
