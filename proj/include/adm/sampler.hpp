#pragma once

// Pseudo-marginal Metropolis-Hastings within parallel tempering.
//
// Rung r targets L-hat(x)^t_r p(x), with L-hat an unbiased Monte-Carlo
// estimate. A chain keeps the estimate it was accepted with; only proposals
// get fresh draws. All randomness is keyed by (seed, rung, iteration), and
// swaps run serially between iterations, so results do not depend on the
// number of worker threads.

#include "adm/random.hpp"
#include "adm/roots.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <concepts>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace adm {

/// What the sampler needs from a model: a prior density in its own
/// (unconstrained) coordinates, a likelihood estimate driven by a stream key,
/// a map to reported coordinates, and candidate starting points.
template <class T>
concept SamplerTarget = requires(const T& t, std::span<const double> x, StreamKey key) {
  { t.dimension() } -> std::convertible_to<std::size_t>;
  { t.names() } -> std::convertible_to<std::vector<std::string>>;
  { t.log_prior(x) } -> std::convertible_to<double>;
  { t.log_likelihood(x, key) } -> std::convertible_to<double>;
  { t.to_natural(x) } -> std::convertible_to<std::vector<double>>;
  { t.initial_candidates() } -> std::convertible_to<std::vector<std::vector<double>>>;
};

class InitializationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemperatureLadder {
 public:
  explicit TemperatureLadder(std::vector<double> t) : t_(std::move(t)) {
    if (t_.size() < 2) throw std::invalid_argument("TemperatureLadder: need at least two rungs");
    if (t_.front() != 0.0 || t_.back() != 1.0) throw std::invalid_argument("TemperatureLadder: must run from 0 to 1");
    for (std::size_t i = 1; i < t_.size(); ++i)
      if (!(t_[i] > t_[i - 1])) throw std::invalid_argument("TemperatureLadder: must be strictly increasing");
  }

  /// t_i = (i / (K - 1))^exponent
  static TemperatureLadder power(std::size_t rungs, double exponent) {
    if (rungs < 2) throw std::invalid_argument("TemperatureLadder: need at least two rungs");
    if (!(exponent > 0)) throw std::invalid_argument("TemperatureLadder: exponent must be positive");
    std::vector<double> t(rungs);
    for (std::size_t i = 0; i < rungs; ++i) t[i] = std::pow(static_cast<double>(i) / (rungs - 1), exponent);
    t.back() = 1.0;
    return TemperatureLadder(std::move(t));
  }

  std::size_t size() const noexcept { return t_.size(); }
  double operator[](std::size_t i) const { return t_[i]; }
  const std::vector<double>& temperatures() const noexcept { return t_; }

 private:
  std::vector<double> t_;
};

struct SamplerConfig {
  std::size_t iterations = 10000;  // per rung, including burn-in
  std::size_t burn_in = 1000;
  std::size_t rungs = 20;
  double ladder_exponent = 5;
  std::optional<std::vector<double>> temperatures;  // overrides rungs/exponent
  double initial_scale = 0.1;                       // relative to |x0|, or absolute when x0 = 0
  std::optional<std::vector<double>> proposal_scales;
  double target_acceptance = 0.25;
  bool adapt = true;
  std::size_t swap_stride = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;  // 0: one per hardware thread
  std::size_t init_budget = 200;

  TemperatureLadder ladder() const {
    return temperatures ? TemperatureLadder(*temperatures) : TemperatureLadder::power(rungs, ladder_exponent);
  }

  void validate() const {
    if (!(burn_in < iterations)) throw std::invalid_argument("SamplerConfig: burn_in must be below iterations");
    if (!temperatures && rungs < 2) throw std::invalid_argument("SamplerConfig: need at least two rungs");
    if (swap_stride < 1) throw std::invalid_argument("SamplerConfig: swap_stride must be >= 1");
    if (!(target_acceptance > 0 && target_acceptance < 1))
      throw std::invalid_argument("SamplerConfig: target_acceptance must lie in (0, 1)");
    if (!(initial_scale > 0)) throw std::invalid_argument("SamplerConfig: initial_scale must be positive");
    ladder();
  }
};

struct ChainState {
  std::vector<double> x;  // sampler coordinates
  double log_likelihood = 0;
  double log_prior = 0;
};

/// t * logL + log prior, with 0 * (-inf) taken as 0 so the t = 0 rung is the prior.
inline double tempered_log_density(double t, double log_likelihood, double log_prior) {
  if (t == 0) return log_prior;
  if (log_likelihood == -std::numeric_limits<double>::infinity()) return log_likelihood;
  return t * log_likelihood + log_prior;
}

struct StepOutcome {
  ChainState state;
  bool accepted = false;
  bool solver_failure = false;
};

/// One random-walk Metropolis-Hastings update of every coordinate jointly,
/// with independent Gaussian increments of the given scales.
template <SamplerTarget T>
StepOutcome mh_step(const ChainState& current, double t, const T& target, std::span<const double> scales,
                    StreamKey key) {
  Stream rng(key.sub("propose"));
  ChainState prop;
  prop.x = current.x;
  for (std::size_t j = 0; j < prop.x.size(); ++j) prop.x[j] += scales[j] * rng.normal();
  prop.log_prior = target.log_prior(prop.x);
  StepOutcome out{current, false, false};
  if (prop.log_prior == -std::numeric_limits<double>::infinity() || std::isnan(prop.log_prior)) return out;
  try {
    prop.log_likelihood = target.log_likelihood(prop.x, key.sub("likelihood"));
  } catch (const ConvergenceFailure&) {
    out.solver_failure = true;
    return out;
  }
  if (std::isnan(prop.log_likelihood)) return out;
  if (t > 0 && prop.log_likelihood == -std::numeric_limits<double>::infinity()) return out;
  const double log_ratio = tempered_log_density(t, prop.log_likelihood, prop.log_prior) -
                           tempered_log_density(t, current.log_likelihood, current.log_prior);
  const double u = Stream(key.sub("accept")).uniform();
  if (std::log(u) < log_ratio) {
    out.state = std::move(prop);
    out.accepted = true;
  }
  return out;
}

/// Exchange probability for states at temperatures t_i and t_j.
inline double swap_probability(double t_i, double log_lik_i, double t_j, double log_lik_j) {
  if (t_i == t_j || log_lik_i == log_lik_j) return 1.0;
  const double e = (t_i - t_j) * (log_lik_j - log_lik_i);
  if (std::isnan(e)) return 0.0;
  return e >= 0 ? 1.0 : std::exp(e);
}

/// Swaps the two states with swap_probability; returns whether they were exchanged.
inline bool swap_step(ChainState& a, double t_a, ChainState& b, double t_b, StreamKey key) {
  const double p = swap_probability(t_a, a.log_likelihood, t_b, b.log_likelihood);
  if (p < 1.0 && !(Stream(key).uniform() < p)) return false;
  std::swap(a, b);
  return true;
}

struct RungSamples {
  double temperature = 0;
  std::vector<std::vector<double>> draws;  // reported coordinates, one row per retained iteration
  std::vector<double> log_likelihood;
  std::size_t proposed = 0;  // counts over retained iterations
  std::size_t accepted = 0;
  std::size_t solver_failures = 0;
  std::vector<double> proposal_scales;  // frozen scales used after burn-in

  double acceptance_rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
  std::vector<double> column(std::size_t j) const {
    std::vector<double> c;
    c.reserve(draws.size());
    for (const auto& row : draws) c.push_back(row[j]);
    return c;
  }
};

struct PosteriorSamples {
  std::vector<std::string> names;
  std::vector<RungSamples> rungs;
  std::vector<std::size_t> swap_attempts;  // per adjacent pair (r, r+1)
  std::vector<std::size_t> swap_accepts;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;

  const RungSamples& posterior() const { return rungs.back(); }
  std::vector<double> temperatures() const {
    std::vector<double> t;
    for (const auto& r : rungs) t.push_back(r.temperature);
    return t;
  }
  double swap_rate(std::size_t pair) const {
    return swap_attempts[pair] ? static_cast<double>(swap_accepts[pair]) / swap_attempts[pair] : 0.0;
  }
};

/// Best of the target's candidate starts, then random perturbations of them,
/// by likelihood estimate. Throws InitializationFailure if none has a finite estimate.
template <SamplerTarget T>
ChainState find_initial_state(const T& target, const SamplerConfig& cfg) {
  const StreamKey key = StreamKey(cfg.seed).sub("init");
  const auto candidates = target.initial_candidates();
  std::optional<ChainState> best;
  std::size_t evaluated = 0;
  auto consider = [&](std::vector<double> x) {
    ++evaluated;
    ChainState s{std::move(x), 0, 0};
    s.log_prior = target.log_prior(s.x);
    if (!std::isfinite(s.log_prior)) return;
    try {
      s.log_likelihood = target.log_likelihood(s.x, key.sub(evaluated));
    } catch (const ConvergenceFailure&) {
      return;
    }
    if (!std::isfinite(s.log_likelihood)) return;
    if (!best || s.log_likelihood > best->log_likelihood) best = std::move(s);
  };
  for (const auto& c : candidates) {
    if (evaluated >= cfg.init_budget) break;
    consider(c);
  }
  Stream rng(key.sub("perturb"));
  for (std::size_t j = 0; !best && !candidates.empty() && evaluated < cfg.init_budget; ++j) {
    auto x = candidates[j % candidates.size()];
    const double width = 0.5 * (1.0 + static_cast<double>(j / candidates.size()));
    for (auto& v : x) v += width * std::max(std::fabs(v), 0.1) * rng.normal();
    consider(std::move(x));
  }
  if (!best)
    throw InitializationFailure("no starting point with a finite likelihood estimate after " +
                                std::to_string(evaluated) + " evaluations");
  return *best;
}

namespace detail {

struct RungRunner {
  double t = 0;
  ChainState state;
  std::vector<double> base;  // per-coordinate scale before the global factor
  double log_lambda = 0;
  // running moments of the rung's states during burn-in
  std::size_t n = 0;
  std::vector<double> mean, m2;
  std::size_t proposed = 0, accepted = 0, failures = 0;

  std::vector<double> scales() const {
    std::vector<double> s(base.size());
    const double f = std::exp(log_lambda);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = f * base[j];
    return s;
  }
};

}  // namespace detail

/// Runs all rungs in lockstep for cfg.iterations, with one even-then-odd sweep
/// of adjacent swaps every swap_stride iterations, and returns post-burn-in draws.
template <SamplerTarget T>
PosteriorSamples run_parallel_tempering(const T& target, const SamplerConfig& cfg,
                                        std::optional<ChainState> start = std::nullopt) {
  cfg.validate();
  const TemperatureLadder ladder = cfg.ladder();
  const std::size_t K = ladder.size();
  const std::size_t d = target.dimension();
  const ChainState init = start ? *start : find_initial_state(target, cfg);
  if (init.x.size() != d) throw std::invalid_argument("run_parallel_tempering: start has the wrong dimension");
  if (cfg.proposal_scales && cfg.proposal_scales->size() != d)
    throw std::invalid_argument("run_parallel_tempering: proposal_scales has the wrong dimension");

  const StreamKey root(cfg.seed);
  const StreamKey mh_key = root.sub("mh"), swap_key = root.sub("swap");

  std::vector<detail::RungRunner> runners(K);
  for (std::size_t r = 0; r < K; ++r) {
    auto& rr = runners[r];
    rr.t = ladder[r];
    rr.state = init;
    rr.base.resize(d);
    for (std::size_t j = 0; j < d; ++j)
      rr.base[j] = cfg.proposal_scales ? (*cfg.proposal_scales)[j]
                                       : cfg.initial_scale * (init.x[j] != 0 ? std::fabs(init.x[j]) : 1.0);
    rr.mean.assign(d, 0.0);
    rr.m2.assign(d, 0.0);
  }

  PosteriorSamples out;
  out.names = target.names();
  out.iterations = cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.rungs.resize(K);
  out.swap_attempts.assign(K - 1, 0);
  out.swap_accepts.assign(K - 1, 0);
  const std::size_t kept = cfg.iterations - cfg.burn_in;
  for (std::size_t r = 0; r < K; ++r) {
    out.rungs[r].temperature = ladder[r];
    out.rungs[r].draws.reserve(kept);
    out.rungs[r].log_likelihood.reserve(kept);
  }

  const std::size_t adapt_start = cfg.burn_in / 10;
  const std::size_t adapt_every = 50;
  const double optimal = 2.38 / std::sqrt(static_cast<double>(d));

  auto advance = [&](std::size_t r, std::size_t it) {
    auto& rr = runners[r];
    const auto scales = rr.scales();
    auto step = mh_step(rr.state, rr.t, target, scales, mh_key.sub(r).sub(it));
    rr.state = std::move(step.state);
    if (it >= cfg.burn_in) {
      ++rr.proposed;
      rr.accepted += step.accepted;
      rr.failures += step.solver_failure;
      return;
    }
    if (!cfg.adapt) return;
    // Robbins-Monro on the global factor, empirical spread for the shape
    const double gain = 1.0 / std::pow(static_cast<double>(it + 1), 0.6);
    rr.log_lambda += gain * ((step.accepted ? 1.0 : 0.0) - cfg.target_acceptance);
    if (it < adapt_start) return;
    ++rr.n;
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = rr.state.x[j] - rr.mean[j];
      rr.mean[j] += delta / static_cast<double>(rr.n);
      rr.m2[j] += delta * (rr.state.x[j] - rr.mean[j]);
    }
    if (rr.n >= 2 * adapt_every && rr.n % adapt_every == 0) {
      bool moved = true;
      for (std::size_t j = 0; j < d; ++j) moved = moved && rr.m2[j] > 0;
      if (moved) {
        for (std::size_t j = 0; j < d; ++j) rr.base[j] = optimal * std::sqrt(rr.m2[j] / static_cast<double>(rr.n - 1));
        rr.log_lambda = 0;
      }
    }
  };

  auto synchronize = [&](std::size_t it) {
    if (it % cfg.swap_stride == 0) {
      for (std::size_t parity = 0; parity < 2; ++parity)
        for (std::size_t r = parity; r + 1 < K; r += 2) {
          const bool swapped = swap_step(runners[r].state, runners[r].t, runners[r + 1].state, runners[r + 1].t,
                                         swap_key.sub(it).sub(r));
          if (it >= cfg.burn_in) {
            ++out.swap_attempts[r];
            out.swap_accepts[r] += swapped;
          }
        }
    }
    if (it >= cfg.burn_in)
      for (std::size_t r = 0; r < K; ++r) {
        out.rungs[r].draws.push_back(target.to_natural(runners[r].state.x));
        out.rungs[r].log_likelihood.push_back(runners[r].state.log_likelihood);
      }
  };

  std::size_t workers = cfg.workers ? cfg.workers : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, K);
  if (workers == 1) {
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      for (std::size_t r = 0; r < K; ++r) advance(r, it);
      synchronize(it);
    }
  } else {
    std::size_t it = 0;
    std::atomic<bool> failed = false;
    std::exception_ptr error;
    std::mutex error_mutex;
    auto record_error = [&] {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    };
    auto on_barrier = [&]() noexcept {
      if (!failed) {
        try {
          synchronize(it);
        } catch (...) {
          record_error();
        }
      }
      ++it;
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(workers), on_barrier);
    auto work = [&](std::size_t w) {
      while (it < cfg.iterations && !failed) {
        for (std::size_t r = w; r < K; r += workers) {
          if (failed) break;
          try {
            advance(r, it);
          } catch (...) {
            record_error();
          }
        }
        sync.arrive_and_wait();
      }
    };
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
      work(0);
    }
    if (error) std::rethrow_exception(error);
  }

  for (std::size_t r = 0; r < K; ++r) {
    out.rungs[r].proposed = runners[r].proposed;
    out.rungs[r].accepted = runners[r].accepted;
    out.rungs[r].solver_failures = runners[r].failures;
    out.rungs[r].proposal_scales = runners[r].scales();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evidence

struct EvidenceEstimate {
  double log_marginal = 0;
  std::vector<double> temperatures;
  std::vector<double> rung_means;  // mean log-likelihood estimate per rung
  double standard_error = 0;
  std::vector<std::size_t> substituted;  // rungs whose mean was not finite and took the next rung's
};

/// Trapezoid rule over the ladder: sum_i (t_{i+1} - t_i) (E_{i+1} + E_i) / 2.
inline double thermodynamic_integral(std::span<const double> t, std::span<const double> means) {
  if (t.size() != means.size() || t.size() < 2)
    throw std::invalid_argument("thermodynamic_integral: need matching temperature and mean lists");
  double z = 0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) z += (t[i + 1] - t[i]) * 0.5 * (means[i + 1] + means[i]);
  return z;
}

/// Thermodynamic integration of the per-rung mean log-likelihood estimates.
/// The standard error combines batch-means variances of the rung means.
inline EvidenceEstimate estimate_log_marginal(const PosteriorSamples& samples, std::size_t batches = 20) {
  const std::size_t K = samples.rungs.size();
  if (K < 2) throw std::invalid_argument("estimate_log_marginal: need at least two rungs");
  EvidenceEstimate ev;
  ev.temperatures = samples.temperatures();
  ev.rung_means.assign(K, 0.0);
  std::vector<double> var(K, 0.0);
  for (std::size_t r = 0; r < K; ++r) {
    const auto& ll = samples.rungs[r].log_likelihood;
    if (ll.empty()) throw std::invalid_argument("estimate_log_marginal: rung without samples");
    double s = 0;
    for (double v : ll) s += v;
    ev.rung_means[r] = s / static_cast<double>(ll.size());
    const std::size_t B = std::min(batches, ll.size());
    const std::size_t len = ll.size() / B;
    if (B >= 2 && len >= 1 && std::isfinite(ev.rung_means[r])) {
      std::vector<double> bm(B, 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) bm[b] += ll[i];
        bm[b] /= static_cast<double>(len);
      }
      double m = 0;
      for (double v : bm) m += v;
      m /= static_cast<double>(B);
      double ss = 0;
      for (double v : bm) ss += (v - m) * (v - m);
      var[r] = ss / static_cast<double>(B - 1) / static_cast<double>(B);
    }
  }
  for (std::size_t r = K; r-- > 0;) {
    if (std::isfinite(ev.rung_means[r])) continue;
    if (r + 1 == K) throw std::runtime_error("estimate_log_marginal: posterior rung mean is not finite");
    ev.rung_means[r] = ev.rung_means[r + 1];
    var[r] = var[r + 1];
    ev.substituted.push_back(r);
  }
  ev.log_marginal = thermodynamic_integral(ev.temperatures, ev.rung_means);
  double v = 0;
  const auto& t = ev.temperatures;
  for (std::size_t r = 0; r < K; ++r) {
    const double w = 0.5 * ((r + 1 < K ? t[r + 1] - t[r] : 0.0) + (r > 0 ? t[r] - t[r - 1] : 0.0));
    v += w * w * var[r];
  }
  ev.standard_error = std::sqrt(v);
  return ev;
}

struct BayesFactor {
  double log_value;  // log Z1 - log Z2
  double value;      // may overflow to inf; log_value is always usable
};

inline BayesFactor bayes_factor(double log_z1, double log_z2) {
  const double l = log_z1 - log_z2;
  return {l, std::exp(l)};
}
inline BayesFactor bayes_factor(const EvidenceEstimate& e1, const EvidenceEstimate& e2) {
  return bayes_factor(e1.log_marginal, e2.log_marginal);
}

// ---------------------------------------------------------------------------
// Summaries

/// Linear-interpolation sample quantile (Hyndman-Fan type 7).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("quantile: p outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct QuantileRow {
  std::string name;
  double q025, q50, q975;
};

inline std::vector<QuantileRow> summarize_posterior(const RungSamples& rung, const std::vector<std::string>& names) {
  if (rung.draws.empty()) throw std::invalid_argument("summarize_posterior: no samples");
  std::vector<QuantileRow> rows;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto c = rung.column(j);
    rows.push_back({names[j], quantile(c, 0.025), quantile(c, 0.5), quantile(c, 0.975)});
  }
  return rows;
}

}  // namespace adm
