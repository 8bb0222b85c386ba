#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta for scalar ODEs with
// threshold-crossing events.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "adm/roots.hpp"

namespace adm::ode {

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0;  // 0: pick from the interval length
  std::size_t max_steps = 2'000'000;
};

struct Result {
  double t = 0;  // where integration stopped (event time if one fired)
  double y = 0;
  bool event = false;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

/// Integrates y' = f(t, y) from (t0, y0) to t1. If `level` is set, stops at the
/// first upward crossing of y = level.
/// Accepted points are appended to `path` when given.
template <class Rate>
Result integrate(Rate&& f, double t0, double y0, double t1, const Options& opt,
                 std::optional<double> level = std::nullopt,
                 std::vector<std::pair<double, double>>* path = nullptr) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  Result res;
  res.t = t0;
  res.y = y0;
  if (path) path->emplace_back(t0, y0);
  if (t1 <= t0) return res;
  if (level && y0 >= *level) {
    res.event = true;
    return res;
  }

  const double span = t1 - t0;
  double h = opt.initial_step > 0 ? opt.initial_step : span * 1e-3;
  double t = t0, y = y0;
  double k1 = f(t, y);

  for (std::size_t n = 0; n < opt.max_steps; ++n) {
    if (t >= t1) return res;
    const double h_min = std::max(1e-15 * std::fabs(t), std::numeric_limits<double>::min());
    const bool last = h >= t1 - t;
    if (last) h = t1 - t;
    if (h < h_min && !last) throw StepFailure("ode: step size underflow at t=" + std::to_string(t));

    auto step = [&](double hh, double* k7_out) {
      const double k2 = f(t + c2 * hh, y + hh * a21 * k1);
      const double k3 = f(t + c3 * hh, y + hh * (a31 * k1 + a32 * k2));
      const double k4 = f(t + c4 * hh, y + hh * (a41 * k1 + a42 * k2 + a43 * k3));
      const double k5 = f(t + c5 * hh, y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const double k6 = f(t + hh, y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const double y1 = y + hh * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      if (k7_out) {
        const double k7 = f(t + hh, y1);
        *k7_out = std::fabs(hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        return std::pair{y1, k7};
      }
      return std::pair{y1, 0.0};
    };
    double err_abs = 0;
    const auto [y1, k7] = step(h, &err_abs);
    const double scale = opt.atol + opt.rtol * std::max(std::fabs(y), std::fabs(y1));
    const double err = err_abs / scale;
    if (!std::isfinite(y1) || !std::isfinite(err)) {
      h *= 0.1;
      ++res.rejected_steps;
      if (h < h_min) throw StepFailure("ode: non-finite state at t=" + std::to_string(t));
      continue;
    }
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      ++res.rejected_steps;
      continue;
    }

    ++res.accepted_steps;
    if (level && y1 >= *level) {
      // the crossing is where a single full step of length tau reaches the level
      auto g = [&](double tau) { return tau <= 0 ? y - *level : step(tau, nullptr).first - *level; };
      const double tau = solve_increasing(g, Bracket{0.0, h}, 1e-15 * std::max(std::fabs(t), h));
      res.t = t + tau;
      res.y = *level;
      res.event = true;
      if (path) path->emplace_back(res.t, res.y);
      return res;
    }

    t = last ? t1 : t + h;
    y = y1;
    k1 = k7;
    res.t = t;
    res.y = y;
    if (path) path->emplace_back(t, y);
    const double fac = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }
  throw StepFailure("ode: step budget exhausted");
}

}  // namespace adm::ode
