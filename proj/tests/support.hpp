#pragma once

// Helpers shared by the sampler tests and the acceptance run.

#include "adm/likelihood.hpp"
#include "adm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace adm::test_support {

// Prior N(0, 1) on every coordinate; likelihood N(y_j; x_j, s^2) per coordinate.
// Optional multiplicative log-normal noise with unit mean turns it into a
// pseudo-marginal target with the same posterior.
struct GaussianToy {
  std::vector<double> y{1.5, -0.5};
  double s = 0.5;
  double noise = 0;
  bool flat = false;

  std::size_t dimension() const { return y.size(); }
  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (std::size_t j = 0; j < y.size(); ++j) n.push_back("x" + std::to_string(j));
    return n;
  }
  double log_prior(std::span<const double> x) const {
    double l = 0;
    for (double v : x) l += -0.5 * v * v - 0.5 * std::log(2 * std::numbers::pi);
    return l;
  }
  double exact_log_likelihood(std::span<const double> x) const {
    if (flat) return 0;
    double l = 0;
    for (std::size_t j = 0; j < y.size(); ++j)
      l += -0.5 * (y[j] - x[j]) * (y[j] - x[j]) / (s * s) - 0.5 * std::log(2 * std::numbers::pi * s * s);
    return l;
  }
  double log_likelihood(std::span<const double> x, StreamKey key) const {
    const double l = exact_log_likelihood(x);
    if (noise == 0) return l;
    return l + noise * Stream(key).normal() - 0.5 * noise * noise;
  }
  std::vector<double> to_natural(std::span<const double> x) const { return {x.begin(), x.end()}; }
  std::vector<std::vector<double>> initial_candidates() const { return {std::vector<double>(y.size(), 0.1)}; }

  // exact quantities for the power posterior at temperature t
  double post_mean(std::size_t j, double t) const { return (t / (s * s)) * y[j] / (1 + t / (s * s)); }
  double post_var(double t) const { return 1 / (1 + t / (s * s)); }
  double mean_log_likelihood(double t) const {
    double l = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double m = post_mean(j, t);
      l += -0.5 * ((y[j] - m) * (y[j] - m) + post_var(t)) / (s * s) - 0.5 * std::log(2 * std::numbers::pi * s * s);
    }
    return l;
  }
  double log_evidence() const {
    double l = 0;
    for (double v : y) l += -0.5 * v * v / (1 + s * s) - 0.5 * std::log(2 * std::numbers::pi * (1 + s * s));
    return l;
  }
};

// Kolmogorov-Smirnov statistic against a continuous CDF and its asymptotic p-value.
template <class Cdf>
double ks_p_value(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k) p += 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

inline std::vector<double> thin(const std::vector<double>& v, std::size_t every) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); i += every) out.push_back(v[i]);
  return out;
}

}  // namespace adm::test_support
