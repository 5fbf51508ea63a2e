#pragma once

// Numerical preprocessing of logged series: moving-average smoothing, finite
// differences, and delay estimation by normalized cross-correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "smallcar/sysid/errors.hpp"

namespace smallcar::sysid {

/// Centered moving average. Near the ends the window shrinks symmetrically so
/// that constant and linear series pass through unchanged.
inline std::vector<double> smooth(std::span<const double> series, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw ConfigError("smooth: window must be a positive odd sample count");
  }
  if (window > series.size()) {
    throw ConfigError("smooth: window exceeds series length");
  }
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + series[i];

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min({half, i, n - 1 - i});
    out[i] = (prefix[i + h + 1] - prefix[i - h]) / static_cast<double>(2 * h + 1);
  }
  return out;
}

/// Central differences on interior samples, three-point one-sided differences
/// at the ends. Handles non-uniform (strictly increasing) time stamps.
inline std::vector<double> differentiate(std::span<const double> series, std::span<const double> t) {
  const std::size_t n = series.size();
  if (t.size() != n) throw ConfigError("differentiate: series and time lengths differ");
  if (n < 3) throw InsufficientDataError("differentiate: need at least 3 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) throw ConfigError("differentiate: time must be strictly increasing");
  }

  std::vector<double> out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = (series[i + 1] - series[i - 1]) / (t[i + 1] - t[i - 1]);
  }
  // Second-order one-sided stencils (Lagrange derivative at the end node).
  {
    const double h1 = t[1] - t[0];
    const double h2 = t[2] - t[1];
    out[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * series[0] + (h1 + h2) / (h1 * h2) * series[1] -
             h1 / (h2 * (h1 + h2)) * series[2];
  }
  {
    const double h1 = t[n - 2] - t[n - 3];
    const double h2 = t[n - 1] - t[n - 2];
    out[n - 1] = h2 / (h1 * (h1 + h2)) * series[n - 3] - (h1 + h2) / (h1 * h2) * series[n - 2] +
                 (2.0 * h2 + h1) / (h2 * (h1 + h2)) * series[n - 1];
  }
  return out;
}

struct DelayEstimate {
  std::size_t lag_samples = 0;
  double delay = 0.0;        // seconds
  double correlation = 0.0;  // peak normalized correlation
};

namespace detail {

/// Pearson correlation of a[0..len) and b[0..len); NaN when either is flat.
inline double pearson(const double* a, const double* b, std::size_t len) {
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(len);
  mb /= static_cast<double>(len);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nan("");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

inline constexpr double kDefaultMaxDelay = 0.5;  // seconds

/// Lag (>= 0) by which `measured` trails `command`, chosen as the peak of the
/// normalized cross-correlation over lags in [0, max_delay].
inline DelayEstimate estimate_delay_xcorr_detailed(std::span<const double> command,
                                                   std::span<const double> measured, double dt,
                                                   double max_delay = kDefaultMaxDelay) {
  const std::size_t n = command.size();
  if (measured.size() != n) throw ConfigError("estimate_delay_xcorr: series lengths differ");
  if (n < 10) throw InsufficientDataError("estimate_delay_xcorr: need at least 10 samples");
  if (!(dt > 0.0)) throw ConfigError("estimate_delay_xcorr: dt must be > 0");

  auto variance_is_zero = [](std::span<const double> xs) {
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return *lo == *hi;
  };
  if (variance_is_zero(command) || variance_is_zero(measured)) {
    throw UndefinedCorrelationError("estimate_delay_xcorr: zero-variance series");
  }

  const auto max_lag = std::min(static_cast<std::size_t>(std::llround(max_delay / dt)), n - 2);
  DelayEstimate best;
  best.correlation = -2.0;
  for (std::size_t k = 0; k <= max_lag; ++k) {
    const double r = detail::pearson(command.data(), measured.data() + k, n - k);
    if (std::isnan(r)) continue;
    if (r > best.correlation) {
      best.correlation = r;
      best.lag_samples = k;
    }
  }
  if (best.correlation < -1.5) {
    throw UndefinedCorrelationError("estimate_delay_xcorr: no lag with defined correlation");
  }
  best.delay = static_cast<double>(best.lag_samples) * dt;
  return best;
}

inline double estimate_delay_xcorr(std::span<const double> command, std::span<const double> measured,
                                   double dt, double max_delay = kDefaultMaxDelay) {
  return estimate_delay_xcorr_detailed(command, measured, dt, max_delay).delay;
}

}  // namespace smallcar::sysid
