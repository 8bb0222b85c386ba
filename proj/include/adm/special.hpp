#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adm::special {

/// log(gamma(s, x)) - s*log(x), where gamma is the lower incomplete gamma
/// function, taking log(x) as input so that x may underflow.
///
/// Series for x < s + 1 and a Lentz continued fraction for the upper
/// function otherwise; relative accuracy target 1e-12. As x -> 0 the result
/// tends to -log(s).
inline double log_lower_gamma_scaled(double s, double log_x) {
  if (!(s > 0)) throw std::domain_error("log_lower_gamma_scaled: s must be positive");
  constexpr double eps = 1e-15;
  constexpr int max_iter = 100000;
  if (log_x == -std::numeric_limits<double>::infinity()) return -std::log(s);
  const double x = std::exp(log_x);

  if (x < s + 1.0) {
    // gamma(s,x) = x^s e^-x sum_k x^k / (s (s+1) ... (s+k))
    double term = 1.0 / s;
    double sum = term;
    for (int k = 1; k < max_iter; ++k) {
      term *= x / (s + k);
      sum += term;
      if (term < sum * eps) return std::log(sum) - x;
    }
    throw std::runtime_error("log_lower_gamma_scaled: series did not converge");
  }

  // Gamma(s,x) = x^s e^-x / (x + 1 - s - 1(1-s)/(x + 3 - s - ...))
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) {
      // upper regularized Q = exp(s log x - x - lgamma(s)) * h
      const double log_upper = s * log_x - x + std::log(h);
      const double lg = std::lgamma(s);
      const double q = std::exp(log_upper - lg);
      return lg + std::log1p(-q) - s * log_x;
    }
  }
  throw std::runtime_error("log_lower_gamma_scaled: continued fraction did not converge");
}

/// log of the lower incomplete gamma function gamma(s, x) for x > 0.
inline double log_lower_gamma(double s, double x) {
  if (x <= 0) return -std::numeric_limits<double>::infinity();
  const double lx = std::log(x);
  return log_lower_gamma_scaled(s, lx) + s * lx;
}

}  // namespace adm::special
