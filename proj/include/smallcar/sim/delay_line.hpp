#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace smallcar::sim {

/// Fixed transport delay for a sampled command, rounded to whole steps.
class DelayLine {
public:
  DelayLine(double delay, double dt, double fill = 0.0) : dt_(dt), fill_(fill) {
    if (!(dt > 0.0)) throw std::invalid_argument("DelayLine: dt must be > 0");
    if (!(delay >= 0.0) || !std::isfinite(delay)) {
      throw std::invalid_argument("DelayLine: delay must be finite and >= 0");
    }
    buffer_.assign(static_cast<std::size_t>(std::llround(delay / dt)), fill);
  }

  /// Enqueues `command` and returns the command issued `length()` steps ago.
  double push_pop(double command) {
    if (buffer_.empty()) return command;
    const double out = buffer_[head_];
    buffer_[head_] = command;
    head_ = (head_ + 1) % buffer_.size();
    return out;
  }

  [[nodiscard]] std::size_t length() const { return buffer_.size(); }
  [[nodiscard]] double realized_delay() const { return static_cast<double>(buffer_.size()) * dt_; }
  [[nodiscard]] double fill_value() const { return fill_; }

private:
  double dt_;
  double fill_;
  std::vector<double> buffer_;
  std::size_t head_ = 0;
};

}  // namespace smallcar::sim
