#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace rdlab {

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;  ///< log-space intercept at t = 0
  double r2 = 0.0;
  double rms_residual = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log(y) = intercept - rate * t.
///
/// Only the leading run of samples with y > floor is used (values below the
/// floor are treated as round-off), and of that run only the final
/// window_fraction.  Throws std::domain_error on a degenerate window.
inline DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> y,
                               double window_fraction, double floor) {
  if (t.size() != y.size()) throw std::invalid_argument("time and value series differ in length");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw std::invalid_argument("window fraction must lie in (0, 1]");

  std::size_t usable = 0;
  while (usable < y.size() && std::isfinite(y[usable]) && y[usable] > floor) ++usable;
  const auto count = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(usable)));
  if (count < 3) throw std::domain_error("degenerate window: fewer than 3 samples above floor");
  const std::size_t first = usable - count;

  double st = 0.0, sl = 0.0;
  double ymin = y[first], ymax = y[first];
  for (std::size_t i = first; i < usable; ++i) {
    st += t[i];
    sl += std::log(y[i]);
    ymin = std::min(ymin, y[i]);
    ymax = std::max(ymax, y[i]);
  }
  if (ymin == ymax) throw std::domain_error("degenerate window: series is constant");
  const double n = static_cast<double>(count);
  const double tbar = st / n;
  const double lbar = sl / n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = first; i < usable; ++i) {
    const double dt = t[i] - tbar;
    const double dl = std::log(y[i]) - lbar;
    stt += dt * dt;
    stl += dt * dl;
    sll += dl * dl;
  }
  if (!(stt > 0.0)) throw std::domain_error("degenerate window: zero time span");
  if (!(sll > 0.0)) throw std::domain_error("degenerate window: series is constant");

  DecayFit fit;
  const double slope = stl / stt;
  fit.rate = -slope;
  fit.intercept = lbar - slope * tbar;
  double ss_res = 0.0;
  for (std::size_t i = first; i < usable; ++i) {
    const double r = std::log(y[i]) - (fit.intercept + slope * t[i]);
    ss_res += r * r;
  }
  fit.r2 = std::max(0.0, 1.0 - ss_res / sll);
  fit.rms_residual = std::sqrt(ss_res / n);
  fit.points = count;
  return fit;
}

}  // namespace rdlab
