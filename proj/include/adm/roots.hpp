#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

namespace adm {

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bracket {
  double lo;
  double hi;
};

/// Finds x in [lo, hi] with f(x) = 0 for an increasing f, given f(lo) < 0 <= f(hi).
/// Illinois-modified false position with a bisection step whenever the
/// interpolant stalls. Stops when the bracket is narrower than `abs_tol`.
template <class F>
double solve_increasing(F&& f, Bracket b, double abs_tol, int max_iter = 300) {
  double lo = b.lo, hi = b.hi;
  double flo = f(lo), fhi = f(hi);
  if (!(flo < 0) || !(fhi >= 0)) throw std::invalid_argument("solve_increasing: root not bracketed");
  int side = 0;
  for (int it = 0; it < max_iter; ++it) {
    if (hi - lo <= abs_tol) return 0.5 * (lo + hi);
    double x = (std::isfinite(flo) && std::isfinite(fhi)) ? (lo * fhi - hi * flo) / (fhi - flo) : 0.5 * (lo + hi);
    // keep the interpolant away from the ends so the bracket always shrinks
    const double w = hi - lo;
    if (!(x > lo + 0.01 * w && x < hi - 0.01 * w) || it % 8 == 7) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (std::isnan(fx)) throw ConvergenceFailure("solve_increasing: NaN objective");
    if (fx < 0) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (fx == 0) return x;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
  }
  throw ConvergenceFailure("solve_increasing: iteration budget exhausted with open bracket");
}

/// Expands geometrically (additively in log space) from `start` until an
/// increasing f changes sign. Returns nullopt if f stays negative up to
/// `upper_limit`; throws if f stays non-negative down to `lower_limit`.
template <class F>
std::optional<Bracket> bracket_increasing(F&& f, double start, double step, double lower_limit, double upper_limit) {
  double x = start;
  double fx = f(x);
  if (std::isnan(fx)) throw ConvergenceFailure("bracket_increasing: NaN objective");
  if (fx < 0) {
    while (true) {
      if (x >= upper_limit) return std::nullopt;
      const double next = std::min(x + step, upper_limit);
      const double fn = f(next);
      if (std::isnan(fn)) throw ConvergenceFailure("bracket_increasing: NaN objective");
      if (fn >= 0) return Bracket{x, next};
      x = next;
    }
  }
  while (true) {
    if (x <= lower_limit) throw ConvergenceFailure("bracket_increasing: no sign change above lower limit");
    const double next = std::max(x - step, lower_limit);
    const double fn = f(next);
    if (std::isnan(fn)) throw ConvergenceFailure("bracket_increasing: NaN objective");
    if (fn < 0) return Bracket{next, x};
    x = next;
  }
}

}  // namespace adm
