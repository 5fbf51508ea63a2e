#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace smallcar::sim {

class IntegrationError : public std::runtime_error {
public:
  IntegrationError(double time, const std::string& what)
      : std::runtime_error("t=" + std::to_string(time) + ": " + what), time_(time) {}
  [[nodiscard]] double time() const { return time_; }

private:
  double time_;
};

template <std::size_t N>
using StateVector = std::array<double, N>;

namespace detail {

template <std::size_t N>
StateVector<N> axpy(const StateVector<N>& x, double h, const StateVector<N>& k) {
  StateVector<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + h * k[i];
  return out;
}

template <std::size_t N>
void check_finite(const StateVector<N>& k, double time) {
  for (double v : k) {
    if (!std::isfinite(v)) throw IntegrationError(time, "non-finite state derivative");
  }
}

}  // namespace detail

/// One classical Runge-Kutta step; `rhs(state)` returns the derivative with
/// the inputs held constant over the step. `time` only labels errors.
template <std::size_t N, typename Rhs>
StateVector<N> integrate_rk4(Rhs&& rhs, const StateVector<N>& x, double dt, double time = 0.0) {
  if (!(dt > 0.0)) throw IntegrationError(time, "dt must be > 0");
  const StateVector<N> k1 = rhs(x);
  detail::check_finite(k1, time);
  const StateVector<N> k2 = rhs(detail::axpy(x, 0.5 * dt, k1));
  detail::check_finite(k2, time);
  const StateVector<N> k3 = rhs(detail::axpy(x, 0.5 * dt, k2));
  detail::check_finite(k3, time);
  const StateVector<N> k4 = rhs(detail::axpy(x, dt, k3));
  detail::check_finite(k4, time);
  StateVector<N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace smallcar::sim
