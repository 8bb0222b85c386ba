#pragma once

// Posterior predictive failure times: draw theta uniformly from retained
// posterior rows, then a specimen's effects, then solve the ramp failure time.

#include "adm/likelihood.hpp"
#include "adm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace adm {

struct PredictiveSample {
  double failure_time;  // seconds
  double load;          // psi, k * failure_time
  std::size_t theta_index;
};

struct PredictiveResult {
  std::vector<PredictiveSample> samples;  // failing draws only
  std::size_t non_failing = 0;
  std::size_t solver_failures = 0;
  double mean_time = 0;
  double mean_load = 0;
  double se_time = 0;  // standard error of the means over failing draws
  double se_load = 0;
};

/// Rows of natural-coordinate posterior draws as Params for `model`.
inline std::vector<Params> posterior_params(const RungSamples& rung, ModelId model) {
  std::vector<Params> out;
  out.reserve(rung.draws.size());
  for (const auto& row : rung.draws) out.emplace_back(model, row);
  return out;
}

inline PredictiveResult predict_failure(const std::vector<Params>& posterior, double k, double mu_s,
                                        std::size_t n_draws, StreamKey key, const SolverOptions& opt = {}) {
  if (posterior.empty()) throw std::invalid_argument("predict_failure: empty posterior");
  const RampContext ctx{k, mu_s};
  ctx.validate();
  PredictiveResult res;
  res.samples.reserve(n_draws);
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < n_draws; ++i) {
    Stream rng(key.sub(i));
    const std::size_t j = rng.index(posterior.size());
    const auto e = sample_effects(posterior[j], rng);
    FailureOutcome out = FailureOutcome::non_failing();
    try {
      out = failure_time(e, ctx, opt);
    } catch (const ConvergenceFailure&) {
      ++res.solver_failures;
      continue;
    }
    if (!out) {
      ++res.non_failing;
      continue;
    }
    res.samples.push_back({out.time(), k * out.time(), j});
    const double delta = out.time() - mean;
    mean += delta / static_cast<double>(res.samples.size());
    m2 += delta * (out.time() - mean);
  }
  const auto m = static_cast<double>(res.samples.size());
  res.mean_time = mean;
  res.mean_load = k * mean;
  if (m > 1) {
    res.se_time = std::sqrt(m2 / (m - 1) / m);
    res.se_load = k * res.se_time;
  }
  return res;
}

struct ReplicateSet {
  std::vector<Dataset> replicates;
  std::vector<std::size_t> theta_index;  // posterior row behind each replicate
  std::size_t redrawn = 0;               // non-failing specimen draws replaced by fresh effects
};

/// R synthetic copies of `template_data`: one theta per replicate, then one
/// failure time per template record at that record's loading rate. Non-failing
/// draws are redrawn from the same theta, up to `max_redraws` per specimen.
inline ReplicateSet replicate_datasets(const std::vector<Params>& posterior, const Dataset& template_data,
                                       std::size_t reps, StreamKey key, const SolverOptions& opt = {},
                                       std::size_t max_redraws = 1000) {
  if (posterior.empty()) throw std::invalid_argument("replicate_datasets: empty posterior");
  if (reps < 1) throw std::invalid_argument("replicate_datasets: need at least one replicate");
  ReplicateSet out;
  for (std::size_t r = 0; r < reps; ++r) {
    Stream pick(key.sub(r).sub("theta"));
    const std::size_t j = pick.index(posterior.size());
    Dataset d;
    d.mu_s = template_data.mu_s;
    for (std::size_t i = 0; i < template_data.size(); ++i) {
      const auto& rec = template_data.records[i];
      Stream rng(key.sub(r).sub(i));
      const RampContext ctx{rec.rate, template_data.mu_s};
      std::optional<double> t;
      for (std::size_t attempt = 0; attempt <= max_redraws && !t; ++attempt) {
        const auto outcome = failure_time(sample_effects(posterior[j], rng), ctx, opt);
        if (outcome)
          t = outcome.time();
        else
          ++out.redrawn;
      }
      if (!t) throw std::runtime_error("replicate_datasets: posterior draw almost never fails");
      d.records.push_back({rec.id, *t, rec.rate});
    }
    out.replicates.push_back(std::move(d));
    out.theta_index.push_back(j);
  }
  return out;
}

/// Right-continuous empirical CDF of `times` evaluated on `grid`.
inline std::vector<double> ecdf(std::vector<double> times, const std::vector<double>& grid) {
  std::sort(times.begin(), times.end());
  std::vector<double> f;
  f.reserve(grid.size());
  const double n = static_cast<double>(times.size());
  for (double g : grid)
    f.push_back(n > 0 ? static_cast<double>(std::upper_bound(times.begin(), times.end(), g) - times.begin()) / n
                      : 0.0);
  return f;
}

struct EcdfBand {
  std::vector<double> grid;
  std::vector<double> observed;
  std::vector<double> lower;  // pointwise min over replicates
  std::vector<double> upper;  // pointwise max
  std::vector<double> central_lower;  // optional central-quantile band
  std::vector<double> central_upper;
};

inline std::vector<double> failure_times(const Dataset& d) {
  std::vector<double> t;
  for (const auto& r : d.records) t.push_back(r.time);
  return t;
}

inline EcdfBand ecdf_band(const std::vector<Dataset>& replicates, const Dataset& observed, std::vector<double> grid,
                          std::optional<double> central = std::nullopt) {
  if (grid.empty()) throw std::invalid_argument("ecdf_band: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("ecdf_band: grid must be increasing");
  if (replicates.empty()) throw std::invalid_argument("ecdf_band: no replicates");
  if (central && !(*central > 0 && *central <= 1)) throw std::invalid_argument("ecdf_band: central mass in (0, 1]");

  EcdfBand band;
  band.observed = ecdf(failure_times(observed), grid);
  std::vector<std::vector<double>> curves;
  for (const auto& r : replicates) curves.push_back(ecdf(failure_times(r), grid));
  const std::size_t G = grid.size();
  band.lower.assign(G, 1.0);
  band.upper.assign(G, 0.0);
  for (const auto& c : curves)
    for (std::size_t g = 0; g < G; ++g) {
      band.lower[g] = std::min(band.lower[g], c[g]);
      band.upper[g] = std::max(band.upper[g], c[g]);
    }
  if (central) {
    const double tail = 0.5 * (1 - *central);
    for (std::size_t g = 0; g < G; ++g) {
      std::vector<double> col;
      for (const auto& c : curves) col.push_back(c[g]);
      band.central_lower.push_back(quantile(col, tail));
      band.central_upper.push_back(quantile(col, 1 - tail));
    }
  }
  band.grid = std::move(grid);
  return band;
}

}  // namespace adm
