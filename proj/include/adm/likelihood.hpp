#pragma once

// Hierarchical random-effects model for ramp-load failure times.
//
// Population parameters come in (mu, sigma) pairs, one pair per random effect:
//   US         A, B ~ log-normal
//   Canadian   a~, c~ ~ Normal;  b, n ~ log-normal;  sigma0 ~ logit-normal
//   Canadian2  a, c ~ log-normal; b, n ~ log-normal;  sigma0 ~ logit-normal
//
// The likelihood of specimen i is estimated by the fraction of N effect draws
// whose ramp failure time lies within +-window of the observed T_i.

#include "adm/damage.hpp"
#include "adm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct USParams {
  double mu_A = 0, sigma_A = 1;
  double mu_B = 0, sigma_B = 1;
};

/// mu_a, sigma_a, mu_c, sigma_c carry units of inverse stress for the Canadian
/// model and are on the log scale (dimensionless) for Canadian2.
struct CanadianParams {
  double mu_a = 0, sigma_a = 1;
  double mu_b = 0, sigma_b = 1;
  double mu_c = 0, sigma_c = 1;
  double mu_n = 0, sigma_n = 1;
  double mu_s0 = 0, sigma_s0 = 1;
};

inline const std::vector<std::string>& parameter_names(ModelId model) {
  static const std::vector<std::string> us{"mu_A", "sigma_A", "mu_B", "sigma_B"};
  static const std::vector<std::string> canadian{"mu_a", "sigma_a", "mu_b", "sigma_b", "mu_c",
                                                 "sigma_c", "mu_n", "sigma_n", "mu_s0", "sigma_s0"};
  return model == ModelId::us ? us : canadian;
}

/// Population parameters as a flat vector laid out (mu_0, sigma_0, mu_1, sigma_1, ...).
class Params {
 public:
  Params(ModelId model, std::vector<double> values) : model_(model), values_(std::move(values)) {
    if (values_.size() != parameter_names(model_).size())
      throw std::invalid_argument("Params: model " + std::string(to_string(model_)) + " takes " +
                                  std::to_string(parameter_names(model_).size()) + " values");
  }
  Params(const USParams& p) : Params(ModelId::us, std::vector<double>{p.mu_A, p.sigma_A, p.mu_B, p.sigma_B}) {}
  Params(ModelId model, const CanadianParams& p)
      : Params(model, std::vector<double>{p.mu_a, p.sigma_a, p.mu_b, p.sigma_b, p.mu_c, p.sigma_c, p.mu_n, p.sigma_n, p.mu_s0,
                       p.sigma_s0}) {
    if (model == ModelId::us) throw std::invalid_argument("Params: Canadian parameters given for the US model");
  }

  ModelId model() const noexcept { return model_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t effects() const noexcept { return values_.size() / 2; }
  double mu(std::size_t effect) const { return values_.at(2 * effect); }
  double sigma(std::size_t effect) const { return values_.at(2 * effect + 1); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<std::string>& names() const { return parameter_names(model_); }

  USParams us() const {
    if (model_ != ModelId::us) throw std::logic_error("Params: not a US parameter set");
    return {values_[0], values_[1], values_[2], values_[3]};
  }
  CanadianParams canadian() const {
    if (model_ == ModelId::us) throw std::logic_error("Params: not a Canadian parameter set");
    const auto& v = values_;
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
  }

  bool operator==(const Params&) const = default;

 private:
  ModelId model_;
  std::vector<double> values_;
};

/// Draws one specimen's random effects. sigma = 0 gives the degenerate law.
inline AnyEffects sample_effects(const Params& p, Stream& rng) {
  auto draw = [&](std::size_t g) { return p.mu(g) + p.sigma(g) * rng.normal(); };
  switch (p.model()) {
    case ModelId::us: {
      const double A = std::exp(draw(0));
      const double B = std::exp(draw(1));
      return USEffects{A, B};
    }
    case ModelId::canadian: {
      CanadianEffects e;
      e.a_tilde = draw(0);
      e.b = std::exp(draw(1));
      e.c_tilde = draw(2);
      e.n = std::exp(draw(3));
      e.sigma0 = logistic(draw(4));
      return e;
    }
    case ModelId::canadian2: {
      Canadian2Effects e;
      e.a = std::exp(draw(0));
      e.b = std::exp(draw(1));
      e.c = std::exp(draw(2));
      e.n = std::exp(draw(3));
      e.sigma0 = logistic(draw(4));
      return e;
    }
  }
  throw std::logic_error("sample_effects: unknown model");
}

// ---------------------------------------------------------------------------
// Data

struct Record {
  std::string id;
  double time = 0;  // seconds
  double rate = 0;  // psi per second
};

struct Dataset {
  std::vector<Record> records;
  double mu_s = 0;  // reference mean failure time, seconds

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  double mean_time() const {
    if (records.empty()) throw std::invalid_argument("Dataset: no records");
    double s = 0;
    for (const auto& r : records) s += r.time;
    return s / static_cast<double>(records.size());
  }

  void validate() const {
    if (!(mu_s > 0)) throw std::invalid_argument("Dataset: mu_s must be positive");
    for (std::size_t i = 0; i < records.size(); ++i)
      if (!(records[i].time > 0) || !(records[i].rate > 0))
        throw std::invalid_argument("Dataset: record " + std::to_string(i) + " has a non-positive time or rate");
  }
};

struct LikelihoodConfig {
  std::size_t draws = 10000;  // N
  double window = 0.5;        // seconds
  SolverOptions solver;

  void validate() const {
    if (draws < 1) throw std::invalid_argument("LikelihoodConfig: draws must be >= 1");
    if (!(window > 0)) throw std::invalid_argument("LikelihoodConfig: window must be positive");
  }
};

/// Number of the N draws for specimen i whose failure time lies in
/// [T_i - window, T_i + window]. Draws for specimen i come from key.sub(i).
inline std::size_t specimen_count(const Params& p, const Dataset& data, std::size_t i, const LikelihoodConfig& cfg,
                                  StreamKey key) {
  const auto& r = data.records[i];
  const RampContext ctx{r.rate, data.mu_s};
  Stream rng(key.sub(i));
  std::size_t count = 0;
  for (std::size_t j = 0; j < cfg.draws; ++j) {
    const auto e = sample_effects(p, rng);
    if (fails_within(e, ctx, r.time - cfg.window, r.time + cfg.window, cfg.solver)) ++count;
  }
  return count;
}

inline std::vector<std::size_t> mc_interval_counts(const Params& p, const Dataset& data, const LikelihoodConfig& cfg,
                                                   StreamKey key) {
  std::vector<std::size_t> counts(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) counts[i] = specimen_count(p, data, i, cfg, key);
  return counts;
}

/// Sum over specimens of log(count_i / N); -inf as soon as one count is zero.
inline double mc_log_likelihood(const Params& p, const Dataset& data, const LikelihoodConfig& cfg, StreamKey key) {
  const double log_n = std::log(static_cast<double>(cfg.draws));
  double total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t c = specimen_count(p, data, i, cfg, key);
    if (c == 0) return kNegInf;
    total += std::log(static_cast<double>(c)) - log_n;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Priors

struct PriorSpec {
  double mu_sd = 100.0;       // Normal(0, mu_sd^2) on every mu
  double ig_shape = 0.001;    // Inverse-Gamma(shape, scale) on every sigma^2
  double ig_scale = 0.001;
};

inline double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2 * std::numbers::pi);
}

inline double inverse_gamma_logpdf(double v, double shape, double scale) {
  if (!(v > 0) || !std::isfinite(v)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1) * std::log(v) - scale / v;
}

/// Density in the natural coordinates (mu, sigma^2).
inline double log_prior(const Params& p, const PriorSpec& prior = {}) {
  double lp = 0;
  for (std::size_t g = 0; g < p.effects(); ++g) {
    if (!(p.sigma(g) > 0)) return kNegInf;
    lp += normal_logpdf(p.mu(g), 0.0, prior.mu_sd);
    lp += inverse_gamma_logpdf(p.sigma(g) * p.sigma(g), prior.ig_shape, prior.ig_scale);
  }
  return lp;
}

/// Density in the sampler's coordinates (mu, log sigma): adds log|d sigma^2 / d log sigma| = log(2 sigma^2).
inline double log_prior_walk(const Params& p, const PriorSpec& prior = {}) {
  double lp = log_prior(p, prior);
  if (lp == kNegInf) return lp;
  for (std::size_t g = 0; g < p.effects(); ++g) lp += std::log(2.0) + 2 * std::log(p.sigma(g));
  return lp;
}

/// t * logL-hat + log prior. At t = 0 no likelihood draws are made.
inline double log_power_posterior(const Params& p, const Dataset& data, const LikelihoodConfig& cfg, double t,
                                  StreamKey key, const PriorSpec& prior = {}) {
  if (!(t >= 0 && t <= 1)) throw std::invalid_argument("log_power_posterior: temperature outside [0, 1]");
  const double lp = log_prior(p, prior);
  if (t == 0 || lp == kNegInf) return lp;
  const double ll = mc_log_likelihood(p, data, cfg, key);
  if (ll == kNegInf) return kNegInf;
  return t * ll + lp;
}

// ---------------------------------------------------------------------------
// Sampler target

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// a~ such that the c~ = 0 Canadian ramp failure time equals t at rate k.
inline double canadian_a_for(double t, double k, double b, double s0, double mu) {
  return std::pow(mu * (b + 1) / std::pow(t * (1 - s0), b + 1), 1.0 / b) / k;
}

}  // namespace detail

/// The hierarchical model seen by the sampler: coordinates x are (mu, log sigma)
/// pairs; log_prior includes the Jacobian of that change of variables.
class HierarchicalModel {
 public:
  HierarchicalModel(ModelId model, Dataset data, LikelihoodConfig cfg, PriorSpec prior = {})
      : model_(model), data_(std::move(data)), cfg_(cfg), prior_(prior) {
    if (data_.empty()) throw std::invalid_argument("HierarchicalModel: empty dataset");
    data_.validate();
    cfg_.validate();
  }

  ModelId model() const noexcept { return model_; }
  const Dataset& data() const noexcept { return data_; }
  const LikelihoodConfig& likelihood_config() const noexcept { return cfg_; }

  std::size_t dimension() const { return parameter_names(model_).size(); }
  const std::vector<std::string>& names() const { return parameter_names(model_); }
  static bool is_log_coordinate(std::size_t j) { return j % 2 == 1; }

  Params natural(std::span<const double> x) const {
    std::vector<double> v(x.begin(), x.end());
    for (std::size_t j = 1; j < v.size(); j += 2) v[j] = std::exp(v[j]);
    return Params(model_, std::move(v));
  }
  std::vector<double> to_natural(std::span<const double> x) const { return natural(x).values(); }
  std::vector<double> coordinates(const Params& p) const {
    std::vector<double> x = p.values();
    for (std::size_t j = 1; j < x.size(); j += 2) x[j] = std::log(x[j]);
    return x;
  }

  double log_prior(std::span<const double> x) const { return log_prior_walk(natural(x), prior_); }
  double log_likelihood(std::span<const double> x, StreamKey key) const {
    return mc_log_likelihood(natural(x), data_, cfg_, key);
  }

  /// Starting points, most plausible first: parameters whose deterministic
  /// (all sigma -> 0) failure time matches the data median, over a grid of
  /// shapes and spreads.
  std::vector<std::vector<double>> initial_candidates() const {
    std::vector<double> times, rates;
    for (const auto& r : data_.records) {
      times.push_back(r.time);
      rates.push_back(r.rate);
    }
    const double t_med = detail::median_of(times);
    const double k_med = detail::median_of(rates);
    const double mu = data_.mu_s;
    std::vector<std::vector<double>> out;
    if (model_ == ModelId::us) {
      for (double spread : {0.3, 0.1, 1.0})
        for (double B : {2.0, 4.0, 1.0, 8.0, 0.5, 16.0}) {
          // T = mu e^A B / (e^B - 1)  =>  A = log(T/mu) + log((e^B - 1)/B)
          const double A = std::log(t_med / mu) + std::log(std::expm1(B) / B);
          if (!(A > 0)) continue;
          out.push_back({std::log(A), std::log(spread), std::log(B), std::log(spread)});
        }
      return out;
    }
    for (double spread : {0.3, 0.1})
      for (double b : {5.0, 10.0, 2.0, 20.0})
        for (double s0 : {0.3, 0.6})
          for (double n : {1.0, 3.0}) {
            const double logit_s0 = std::log(s0 / (1 - s0));
            if (model_ == ModelId::canadian) {
              // c~ = 0 start; c~ then spread around a small positive value
              const double a = detail::canadian_a_for(t_med, k_med, b, s0, mu);
              const double c = 0.2 * a;
              out.push_back({a, std::log(spread * a), std::log(b), std::log(spread), c, std::log(spread * c),
                             std::log(n), std::log(spread), logit_s0, std::log(spread)});
            } else {
              const double a = mu * (b + 1) / (t_med * std::pow(1 - s0, b + 1));
              out.push_back({std::log(a), std::log(spread), std::log(b), std::log(spread), std::log(0.2 * a),
                             std::log(spread), std::log(n), std::log(spread), logit_s0, std::log(spread)});
            }
          }
    return out;
  }

 private:
  ModelId model_;
  Dataset data_;
  LikelihoodConfig cfg_;
  PriorSpec prior_;
};

}  // namespace adm
