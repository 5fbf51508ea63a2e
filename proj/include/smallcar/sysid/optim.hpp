#pragma once

// Squared-error loss over a Dataset and a box-constrained Adam optimizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "smallcar/sysid/dataset.hpp"
#include "smallcar/sysid/errors.hpp"
#include "smallcar/sysid/submodels.hpp"

namespace smallcar::sysid {

/// Sum over rows of the squared residual norm. `predict(x_row, params)` returns
/// either a double (single label column) or a std::vector<double>.
template <typename Predict>
double squared_error_loss(Predict&& predict, std::span<const double> params, const Dataset& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto y = data.y(i);
    using Out = std::invoke_result_t<Predict&, std::span<const double>, std::span<const double>>;
    if constexpr (std::is_convertible_v<Out, double>) {
      const double r = static_cast<double>(predict(data.x(i), params)) - y[0];
      loss += r * r;
    } else {
      const auto pred = predict(data.x(i), params);
      for (std::size_t k = 0; k < y.size(); ++k) {
        const double r = pred[k] - y[k];
        loss += r * r;
      }
    }
  }
  return loss;
}

/// Squared-error loss of a sub-model together with its analytic gradient.
template <SubModel M>
double squared_error_loss_and_gradient(const M& model, std::span<const double> params,
                                       const Dataset& data, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::array<double, 8> row_grad{};
  const std::span<double> rg(row_grad.data(), M::kParamCount);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.x(i);
    const double r = model.predict(x, params) - data.y(i)[0];
    loss += r * r;
    model.gradient(x, params, rg);
    for (std::size_t k = 0; k < M::kParamCount; ++k) grad[k] += 2.0 * r * rg[k];
  }
  return loss;
}

/// Loss value and gradient at `params`; the gradient is written into `grad`.
using Objective = std::function<double(std::span<const double> params, std::span<double> grad)>;

template <SubModel M>
Objective make_objective(M model, const Dataset& data) {
  return [model, &data](std::span<const double> p, std::span<double> g) {
    return squared_error_loss_and_gradient(model, p, data, g);
  };
}

struct FitConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_iterations = 5000;
  double tolerance = 1e-10;  // on |loss delta|
  std::size_t tolerance_streak = 10;  // consecutive iterations below tolerance
  // Learning-rate reduction when the best loss stalls.
  std::size_t plateau_patience = 100;
  double plateau_factor = 0.5;
  double min_learning_rate = 1e-7;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> initial;
};

struct FitResult {
  std::vector<double> params;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

inline void validate(const FitConfig& c) {
  if (!(c.learning_rate > 0.0)) throw ConfigError("FitConfig: learning rate must be > 0");
  if (!(c.beta1 > 0.0 && c.beta1 < 1.0) || !(c.beta2 > 0.0 && c.beta2 < 1.0)) {
    throw ConfigError("FitConfig: decay rates must lie in (0, 1)");
  }
  if (!(c.plateau_factor > 0.0 && c.plateau_factor <= 1.0)) {
    throw ConfigError("FitConfig: plateau factor must lie in (0, 1]");
  }
  const std::size_t n = c.initial.size();
  if (n == 0) throw ConfigError("FitConfig: no parameters");
  if (c.lower.size() != n || c.upper.size() != n) {
    throw ConfigError("FitConfig: bounds and initial values differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c.lower[i] <= c.initial[i] && c.initial[i] <= c.upper[i])) {
      throw ConfigError("FitConfig: parameter " + std::to_string(i) +
                        " violates lower <= initial <= upper");
    }
  }
}

/// Per-parameter scale used to normalize the search space: the box width when
/// both bounds are finite, otherwise the initial magnitude (at least 1).
inline std::vector<double> parameter_scales(const FitConfig& c) {
  std::vector<double> scale(c.initial.size());
  for (std::size_t i = 0; i < scale.size(); ++i) {
    const double width = c.upper[i] - c.lower[i];
    scale[i] = (std::isfinite(width) && width > 0.0) ? width : std::max(std::abs(c.initial[i]), 1.0);
  }
  return scale;
}

/// Adam with bias correction on normalized parameters p_i / scale_i, followed
/// by clamping to the box after every step.
inline FitResult adam_fit(const Objective& objective, const FitConfig& config) {
  validate(config);
  const std::size_t n = config.initial.size();
  const std::vector<double> scale = parameter_scales(config);

  FitResult result;
  std::vector<double> p = config.initial;
  std::vector<double> grad(n, 0.0);
  std::vector<double> m(n, 0.0);
  std::vector<double> v(n, 0.0);

  auto evaluate = [&](std::size_t iteration) {
    const double loss = objective(p, grad);
    if (!std::isfinite(loss)) throw FitError(iteration, "non-finite loss");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(grad[i])) {
        throw FitError(iteration, "non-finite gradient component " + std::to_string(i));
      }
    }
    return loss;
  };

  double lr = config.learning_rate;
  double loss = evaluate(0);
  result.loss_trace.push_back(loss);
  double best = loss;
  std::size_t since_best = 0;
  std::size_t streak = 0;
  double b1_pow = 1.0;
  double b2_pow = 1.0;

  std::size_t it = 0;
  while (it < config.max_iterations) {
    ++it;
    b1_pow *= config.beta1;
    b2_pow *= config.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      const double gu = grad[i] * scale[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gu;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gu * gu;
      const double m_hat = m[i] / (1.0 - b1_pow);
      const double v_hat = v[i] / (1.0 - b2_pow);
      p[i] -= scale[i] * lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
      p[i] = std::clamp(p[i], config.lower[i], config.upper[i]);
    }

    const double next = evaluate(it);
    result.loss_trace.push_back(next);
    const double delta = std::abs(next - loss);
    loss = next;

    streak = delta < config.tolerance ? streak + 1 : 0;
    if (streak >= config.tolerance_streak) {
      result.converged = true;
      break;
    }

    if (loss < best) {
      best = loss;
      since_best = 0;
    } else if (++since_best >= config.plateau_patience) {
      lr = std::max(lr * config.plateau_factor, config.min_learning_rate);
      since_best = 0;
    }
  }

  result.params = std::move(p);
  result.final_loss = loss;
  result.iterations = it;
  return result;
}

}  // namespace smallcar::sysid
