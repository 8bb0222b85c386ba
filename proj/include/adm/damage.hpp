#pragma once

// Non-dimensional accumulated-damage models.
//
// Time enters every rate only through t/mu (mu a reference mean failure time)
// and stress only through the ratio tau(t)/tau_s, so solved failure times are
// equivariant under a change of time unit.
//
//   US:         mu * dalpha/dt = exp(-A + B tau/tau_s)
//   Canadian:   mu * dalpha/dt = [a~ tau_s (tau/tau_s - s0)_+]^b + [c~ tau_s (tau/tau_s - s0)_+]^n alpha
//   Canadian2:  mu * dalpha/dt = a (tau/tau_s - s0)_+^b + c (tau/tau_s - s0)_+^n alpha
//
// Under a ramp tau(t) = k t the short-term strength is tau_s = k T_s, where
// T_s is the failure time itself, so each ramp failure time is a fixed point.

#include "adm/ode.hpp"
#include "adm/roots.hpp"
#include "adm/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace adm {

enum class ModelId { us, canadian, canadian2 };

inline std::string_view to_string(ModelId m) {
  switch (m) {
    case ModelId::us:
      return "us";
    case ModelId::canadian:
      return "canadian";
    case ModelId::canadian2:
      return "canadian2";
  }
  return "?";
}

inline ModelId parse_model(std::string_view name) {
  if (name == "us") return ModelId::us;
  if (name == "canadian") return ModelId::canadian;
  if (name == "canadian2") return ModelId::canadian2;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected us, canadian or canadian2)");
}

class InvalidEffect : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct USEffects {
  double A = 0;
  double B = 1;
};

/// a_tilde and c_tilde carry units of inverse stress (psi^-1).
struct CanadianEffects {
  double a_tilde = 0;
  double b = 1;
  double c_tilde = 0;
  double n = 1;
  double sigma0 = 0.5;
};

/// Variant with dimensionless a and c; the rate does not involve the loading rate.
struct Canadian2Effects {
  double a = 0;
  double b = 1;
  double c = 0;
  double n = 1;
  double sigma0 = 0.5;
};

using AnyEffects = std::variant<USEffects, CanadianEffects, Canadian2Effects>;

/// Loading rate k (stress per second) and reference mean failure time (seconds).
struct RampContext {
  double k = 1;
  double mu_ref = 1;

  void validate() const {
    if (!(k > 0)) throw std::invalid_argument("RampContext: loading rate must be positive");
    if (!(mu_ref > 0)) throw std::invalid_argument("RampContext: reference time must be positive");
  }
};

class FailureOutcome {
 public:
  static FailureOutcome fails_at(double t) {
    if (!(t > 0)) throw std::invalid_argument("FailureOutcome: failure time must be positive");
    return FailureOutcome(t);
  }
  static FailureOutcome non_failing() { return FailureOutcome(); }

  bool fails() const noexcept { return time_.has_value(); }
  explicit operator bool() const noexcept { return fails(); }
  double time() const {
    if (!time_) throw std::logic_error("FailureOutcome: specimen does not fail");
    return *time_;
  }
  std::optional<double> time_if_fails() const noexcept { return time_; }

 private:
  FailureOutcome() = default;
  explicit FailureOutcome(double t) : time_(t) {}
  std::optional<double> time_;
};

struct Geometry {
  double span = 0;     // inches between supports
  double breadth = 0;  // inches
  double depth = 0;    // inches
};

/// Loading rate (lb/s) under a constant mid-span deflection rate for a
/// third-point bending test: D = C F / E with C = 276 L^3 / (1296 b d^3).
inline double deflection_loading_rate(double modulus, double deflection_rate, const Geometry& g) {
  if (!(modulus > 0)) throw std::invalid_argument("deflection_loading_rate: modulus must be positive");
  if (!(deflection_rate >= 0)) throw std::invalid_argument("deflection_loading_rate: deflection rate must be >= 0");
  if (!(g.span > 0 && g.breadth > 0 && g.depth > 0))
    throw std::invalid_argument("deflection_loading_rate: geometry must be positive");
  const double c = 276.0 * g.span * g.span * g.span / (1296.0 * g.breadth * g.depth * g.depth * g.depth);
  return modulus * deflection_rate / c;
}

// ---------------------------------------------------------------------------
// Load profiles

/// Piecewise-linear stress history starting at (0, 0).
class LoadProfile {
 public:
  enum class Beyond { hold, extrapolate };

  LoadProfile(std::vector<std::pair<double, double>> breakpoints, Beyond beyond = Beyond::hold)
      : points_(std::move(breakpoints)), beyond_(beyond) {
    if (points_.size() < 2) throw std::invalid_argument("LoadProfile: need at least two breakpoints");
    if (points_.front().first != 0.0 || points_.front().second != 0.0)
      throw std::invalid_argument("LoadProfile: first breakpoint must be (0, 0)");
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (!(points_[i].first > points_[i - 1].first))
        throw std::invalid_argument("LoadProfile: breakpoint times must be strictly increasing");
      if (!std::isfinite(points_[i].second)) throw std::invalid_argument("LoadProfile: stress must be finite");
    }
  }

  static LoadProfile ramp(double k) {
    if (!(k > 0)) throw std::invalid_argument("LoadProfile::ramp: rate must be positive");
    return LoadProfile({{0.0, 0.0}, {1.0, k}}, Beyond::extrapolate);
  }
  static LoadProfile zero() { return LoadProfile({{0.0, 0.0}, {1.0, 0.0}}, Beyond::hold); }

  const std::vector<std::pair<double, double>>& breakpoints() const noexcept { return points_; }

  bool is_ramp() const noexcept {
    return points_.size() == 2 && beyond_ == Beyond::extrapolate && points_[1].second > 0;
  }
  double ramp_rate() const { return points_[1].second / points_[1].first; }

  double stress(double t) const {
    if (t <= 0) return 0.0;
    const auto& last = points_.back();
    if (t >= last.first) {
      if (beyond_ == Beyond::hold) return last.second;
      const auto& prev = points_[points_.size() - 2];
      return last.second + (t - last.first) * (last.second - prev.second) / (last.first - prev.first);
    }
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return lo.second + (t - lo.first) * (hi.second - lo.second) / (hi.first - lo.first);
  }

  /// Breakpoint times and times where stress crosses `level`, inside (0, t_end), sorted.
  std::vector<double> knots(double t_end, std::optional<double> level = std::nullopt) const {
    std::vector<double> out;
    for (const auto& p : points_)
      if (p.first > 0 && p.first < t_end) out.push_back(p.first);
    if (level) {
      auto add_crossing = [&](double t0, double s0, double t1, double s1) {
        if ((s0 - *level) * (s1 - *level) < 0) {
          const double t = t0 + (*level - s0) * (t1 - t0) / (s1 - s0);
          if (t > 0 && t < t_end) out.push_back(t);
        }
      };
      for (std::size_t i = 1; i < points_.size(); ++i)
        add_crossing(points_[i - 1].first, points_[i - 1].second, points_[i].first, points_[i].second);
      const auto& last = points_.back();
      if (t_end > last.first) add_crossing(last.first, last.second, t_end, stress(t_end));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::vector<std::pair<double, double>> points_;
  Beyond beyond_;
};

// ---------------------------------------------------------------------------
// US model

/// Below this |B| the failure-time formula uses its Taylor expansion.
inline constexpr double kUsSmallB = 1e-8;

inline FailureOutcome us_failure_time(const USEffects& e, double mu_s) {
  if (!(mu_s > 0)) throw std::invalid_argument("us_failure_time: mu_s must be positive");
  if (std::isnan(e.A) || std::isnan(e.B)) throw InvalidEffect("us_failure_time: NaN effect");
  if (e.B <= -kUsSmallB) throw InvalidEffect("us_failure_time: B must be positive");
  // log(B / (e^B - 1))
  double log_ratio;
  if (std::fabs(e.B) < kUsSmallB)
    log_ratio = -0.5 * e.B;
  else if (e.B > 50)
    log_ratio = std::log(e.B) - e.B - std::log1p(-std::exp(-e.B));
  else
    log_ratio = std::log(e.B / std::expm1(e.B));
  const double log_t = std::log(mu_s) + e.A + log_ratio;
  if (!(log_t < std::log(std::numeric_limits<double>::max()))) return FailureOutcome::non_failing();
  const double t = std::exp(log_t);
  if (!(t > 0)) return FailureOutcome::non_failing();
  return FailureOutcome::fails_at(t);
}

/// Damage under a ramp at time t, given the specimen's failure time T_s.
inline double us_damage_ramp(double t, double t_s, double B) {
  if (!(t_s > 0)) throw DomainError("us_damage_ramp: T_s must be positive");
  if (!(t >= 0 && t <= t_s)) throw DomainError("us_damage_ramp: t outside [0, T_s]");
  const double x = t / t_s;
  double alpha;
  if (std::fabs(B) < kUsSmallB)
    alpha = x;
  else if (B > 30)
    alpha = std::exp(B * (x - 1)) * (-std::expm1(-B * x)) / (-std::expm1(-B));
  else
    alpha = std::expm1(B * x) / std::expm1(B);
  return std::clamp(alpha, 0.0, 1.0);
}

/// Initial damage rate 1 / (mu_s e^A) under a ramp.
inline double us_initial_rate(const USEffects& e, double mu_s) {
  if (!(mu_s > 0)) throw std::invalid_argument("us_initial_rate: mu_s must be positive");
  return std::exp(-e.A) / mu_s;
}

/// Damage rate at failure, (B / T_s) e^B / (e^B - 1).
inline double us_terminal_rate(double B, double t_s) {
  if (!(t_s > 0)) throw std::invalid_argument("us_terminal_rate: T_s must be positive");
  if (std::fabs(B) < kUsSmallB) return 1.0 / t_s;
  return (B / t_s) / (-std::expm1(-B));
}

// ---------------------------------------------------------------------------
// Canadian models

namespace detail {

inline double bracket_pow(double base, double power) { return base > 0 ? std::pow(base, power) : 0.0; }

/// log alpha(1) for dalpha/dy = C1 y^b + C2 y^n alpha, alpha(0) = 0, on y in
/// [0, 1], where y = x / (1 - s0) rescales the ramp variable x = t/T_s - s0.
/// With U = C2/(n+1):  alpha(1) = C1 e^U U^(-(b+1)/(n+1)) gamma((b+1)/(n+1), U) / (n+1).
inline double log_terminal_damage(double log_c1, double b, double log_c2, double n) {
  const double no_growth = log_c1 - std::log(b + 1);
  if (log_c2 == -std::numeric_limits<double>::infinity()) return no_growth;
  const double s = (b + 1) / (n + 1);
  const double log_u = log_c2 - std::log(n + 1);
  if (log_u > 700) return std::numeric_limits<double>::infinity();
  const double u = std::exp(log_u);
  return u + log_c1 - std::log(n + 1) + special::log_lower_gamma_scaled(s, log_u);
}

/// Cheap bounds on log_terminal_damage: [no_growth, no_growth + U].
struct DamageBounds {
  double lower;
  double upper;
};
inline DamageBounds terminal_damage_bounds(double log_c1, double b, double log_c2, double n) {
  const double lower = log_c1 - std::log(b + 1);
  if (log_c2 == -std::numeric_limits<double>::infinity()) return {lower, lower};
  return {lower, lower + std::exp(log_c2 - std::log(n + 1))};
}

/// Coefficients C1, C2 of the ramp damage ODE in y, as functions of log T_s.
/// Each exponent multiplies a single sum, so huge exponents give +-inf, never NaN.
struct RampCoefficients {
  double log_c1;
  double log_c2;
};

inline RampCoefficients ramp_coefficients(const CanadianEffects& e, double log_k, double log_mu, double log_ts) {
  const double log_w = std::log1p(-e.sigma0);
  const double log_r = log_ts - log_mu + log_w;
  const double log_c1 = log_r + e.b * (std::log(e.a_tilde) + log_k + log_ts + log_w);
  const double log_c2 = e.c_tilde > 0 ? log_r + e.n * (std::log(e.c_tilde) + log_k + log_ts + log_w)
                                      : -std::numeric_limits<double>::infinity();
  return {log_c1, log_c2};
}

inline RampCoefficients ramp_coefficients(const Canadian2Effects& e, double /*log_k*/, double log_mu,
                                          double log_ts) {
  const double log_w = std::log1p(-e.sigma0);
  const double log_r = log_ts - log_mu;
  const double log_c2 = e.c > 0 ? log_r + std::log(e.c) + (e.n + 1) * log_w : -std::numeric_limits<double>::infinity();
  return {log_r + std::log(e.a) + (e.b + 1) * log_w, log_c2};
}

/// First-term and second-term coefficients must be usable: returns false for
/// draws that can never fail (non-positive a, negative c, threshold >= 1).
template <class E>
bool canadian_can_fail(const E& e, double a, double c) {
  if (std::isnan(a) || std::isnan(c) || std::isnan(e.b) || std::isnan(e.n) || std::isnan(e.sigma0))
    throw InvalidEffect("canadian: NaN effect");
  if (!(e.b >= 0) || !(e.n >= 0)) throw InvalidEffect("canadian: exponents b and n must be non-negative");
  if (e.sigma0 < 0) throw InvalidEffect("canadian: sigma0 must lie in (0, 1)");
  if (!(a > 0) || c < 0 || !(e.sigma0 < 1)) return false;
  if (!std::isfinite(a) || !std::isfinite(c) || !std::isfinite(e.b) || !std::isfinite(e.n)) return false;
  return true;
}

template <class E>
double coefficient_a(const E& e) {
  if constexpr (std::is_same_v<E, CanadianEffects>)
    return e.a_tilde;
  else
    return e.a;
}
template <class E>
double coefficient_c(const E& e) {
  if constexpr (std::is_same_v<E, CanadianEffects>)
    return e.c_tilde;
  else
    return e.c;
}

}  // namespace detail

struct SolverOptions {
  double horizon_factor = 1e6;  // failure times beyond horizon_factor * mu_ref count as non-failing
  double rel_tol = 1e-12;
  int max_iter = 300;
};

/// log of the damage reached at t = T_s when the ramp strength is k T_s.
/// Increasing in T_s; the failure time is its zero.
template <class E>
double canadian_log_damage_at(const E& e, const RampContext& ctx, double t_s) {
  const auto c = detail::ramp_coefficients(e, std::log(ctx.k), std::log(ctx.mu_ref), std::log(t_s));
  return detail::log_terminal_damage(c.log_c1, e.b, c.log_c2, e.n);
}

namespace detail {

template <class E>
FailureOutcome canadian_solve(const E& e, const RampContext& ctx, const SolverOptions& opt) {
  ctx.validate();
  if (!canadian_can_fail(e, coefficient_a(e), coefficient_c(e))) return FailureOutcome::non_failing();
  const double log_k = std::log(ctx.k), log_mu = std::log(ctx.mu_ref);
  auto objective = [&](double log_ts) {
    const auto c = ramp_coefficients(e, log_k, log_mu, log_ts);
    return log_terminal_damage(c.log_c1, e.b, c.log_c2, e.n);
  };
  // c~ = 0 has a closed form; use it directly.
  if (coefficient_c(e) == 0) {
    if constexpr (std::is_same_v<E, CanadianEffects>) {
      const double log_ts = (log_mu + std::log(e.b + 1) - e.b * (std::log(e.a_tilde) + log_k) -
                             (e.b + 1) * std::log1p(-e.sigma0)) /
                            (e.b + 1);
      if (log_ts > log_mu + std::log(opt.horizon_factor)) return FailureOutcome::non_failing();
      return FailureOutcome::fails_at(std::exp(log_ts));
    } else {
      const double log_ts = log_mu + std::log(e.b + 1) - std::log(e.a) - (e.b + 1) * std::log1p(-e.sigma0);
      if (log_ts > log_mu + std::log(opt.horizon_factor)) return FailureOutcome::non_failing();
      return FailureOutcome::fails_at(std::exp(log_ts));
    }
  }
  const double start = log_mu - std::log(10.0);
  const auto bracket = bracket_increasing(objective, start, std::log(10.0), log_mu - 690.0,
                                          log_mu + std::log(opt.horizon_factor));
  if (!bracket) return FailureOutcome::non_failing();
  const double log_ts = solve_increasing(objective, *bracket, opt.rel_tol, opt.max_iter);
  return FailureOutcome::fails_at(std::exp(log_ts));
}

/// True iff the failure time lies in [lo, hi]; uses monotonicity of the
/// terminal damage in T_s, so no root solve is needed.
template <class E>
bool canadian_within(const E& e, const RampContext& ctx, double lo, double hi, const SolverOptions& opt) {
  if (!canadian_can_fail(e, coefficient_a(e), coefficient_c(e))) return false;
  hi = std::min(hi, ctx.mu_ref * opt.horizon_factor);
  if (!(hi > 0) || hi < lo) return false;
  const double log_k = std::log(ctx.k), log_mu = std::log(ctx.mu_ref);
  auto fails_by = [&](double t) {  // T_s <= t
    const double lt = std::log(t);
    const auto c = ramp_coefficients(e, log_k, log_mu, lt);
    const auto bounds = terminal_damage_bounds(c.log_c1, e.b, c.log_c2, e.n);
    if (bounds.lower >= 0) return true;
    if (bounds.upper < 0) return false;
    return log_terminal_damage(c.log_c1, e.b, c.log_c2, e.n) >= 0;
  };
  if (!fails_by(hi)) return false;
  if (lo <= 0) return true;
  // the boundary T_s == lo has measure zero
  return !fails_by(lo);
}

}  // namespace detail

/// Right-hand side of the Canadian ramp ODE, dalpha/dt in 1/s.
inline double canadian_rate(double t, double alpha, const CanadianEffects& e, const RampContext& ctx, double t_s) {
  if (!(t_s > 0)) throw std::invalid_argument("canadian_rate: T_s must be positive");
  const double x = t / t_s - e.sigma0;
  if (!(x > 0)) return 0.0;
  const double tau_s = ctx.k * t_s;
  return (detail::bracket_pow(e.a_tilde * tau_s * x, e.b) + detail::bracket_pow(e.c_tilde * tau_s * x, e.n) * alpha) /
         ctx.mu_ref;
}

inline double canadian2_rate(double t, double alpha, const Canadian2Effects& e, double mu_ref, double t_s) {
  if (!(t_s > 0)) throw std::invalid_argument("canadian2_rate: T_s must be positive");
  const double x = t / t_s - e.sigma0;
  if (!(x > 0)) return 0.0;
  const double p1 = e.a > 0 ? e.a * std::pow(x, e.b) : 0.0;
  const double p2 = e.c > 0 ? e.c * std::pow(x, e.n) : 0.0;
  return (p1 + p2 * alpha) / mu_ref;
}

/// Ramp failure time of the Canadian model. Non-failing when a~ <= 0, c~ < 0,
/// or no root below horizon_factor * mu_ref.
inline FailureOutcome canadian_failure_time(const CanadianEffects& e, const RampContext& ctx,
                                            const SolverOptions& opt = {}) {
  return detail::canadian_solve(e, ctx, opt);
}

/// Ramp failure time of the dimensionless-coefficient variant; independent of k.
inline FailureOutcome canadian2_failure_time(const Canadian2Effects& e, const RampContext& ctx,
                                             const SolverOptions& opt = {}) {
  return detail::canadian_solve(e, ctx, opt);
}

inline FailureOutcome failure_time(const AnyEffects& effects, const RampContext& ctx, const SolverOptions& opt = {}) {
  return std::visit(
      [&](const auto& e) -> FailureOutcome {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, USEffects>) {
          ctx.validate();
          auto out = us_failure_time(e, ctx.mu_ref);
          if (out && out.time() > ctx.mu_ref * opt.horizon_factor) return FailureOutcome::non_failing();
          return out;
        } else {
          return detail::canadian_solve(e, ctx, opt);
        }
      },
      effects);
}

/// True iff the ramp failure time lies in [lo, hi]. Equivalent to solving and
/// comparing, but the Canadian models need at most two damage evaluations.
inline bool fails_within(const AnyEffects& effects, const RampContext& ctx, double lo, double hi,
                         const SolverOptions& opt = {}) {
  return std::visit(
      [&](const auto& e) -> bool {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, USEffects>) {
          const auto out = failure_time(e, ctx, opt);
          return out && out.time() >= lo && out.time() <= hi;
        } else {
          return detail::canadian_within(e, ctx, lo, hi, opt);
        }
      },
      effects);
}

inline ModelId model_of(const AnyEffects& effects) {
  return static_cast<ModelId>(effects.index());
}

// ---------------------------------------------------------------------------
// General-profile integration (also the independent oracle for ramps)

struct IntegrateOptions {
  double tol = 1e-10;
  std::optional<double> horizon;  // seconds; default 1e6 * mu_ref
  std::optional<double> tau_s;    // strength; required unless the profile is a ramp
};

struct DamagePath {
  std::vector<std::pair<double, double>> trajectory;  // (t, alpha)
  FailureOutcome outcome = FailureOutcome::non_failing();
  double tau_s = 0;
};

/// Damage rate as a function of stress ratio and current damage.
inline double damage_rate(const AnyEffects& effects, double stress_ratio, double alpha, double tau_s, double mu_ref) {
  return std::visit(
      [&](const auto& e) -> double {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, USEffects>) {
          return std::exp(-e.A + e.B * stress_ratio) / mu_ref;
        } else if constexpr (std::is_same_v<E, CanadianEffects>) {
          const double x = stress_ratio - e.sigma0;
          if (!(x > 0)) return 0.0;
          return (detail::bracket_pow(e.a_tilde * tau_s * x, e.b) +
                  detail::bracket_pow(e.c_tilde * tau_s * x, e.n) * alpha) /
                 mu_ref;
        } else {
          const double x = stress_ratio - e.sigma0;
          if (!(x > 0)) return 0.0;
          const double p1 = e.a > 0 ? e.a * std::pow(x, e.b) : 0.0;
          const double p2 = e.c > 0 ? e.c * std::pow(x, e.n) : 0.0;
          return (p1 + p2 * alpha) / mu_ref;
        }
      },
      effects);
}

namespace detail {

inline std::optional<double> threshold_of(const AnyEffects& effects) {
  if (const auto* c = std::get_if<CanadianEffects>(&effects)) return c->sigma0;
  if (const auto* c = std::get_if<Canadian2Effects>(&effects)) return c->sigma0;
  return std::nullopt;
}

/// Integrates from 0 to t_end piecewise between load knots, stopping early if alpha reaches `stop_level`.
inline ode::Result integrate_piecewise(const AnyEffects& effects, const LoadProfile& profile, double tau_s,
                                       double mu_ref, double t_end, double tol, std::optional<double> stop_level,
                                       std::vector<std::pair<double, double>>* path) {
  std::optional<double> level;
  if (auto s0 = threshold_of(effects)) level = *s0 * tau_s;
  auto cuts = profile.knots(t_end, level);
  cuts.push_back(t_end);
  auto rate = [&](double t, double alpha) {
    return damage_rate(effects, profile.stress(t) / tau_s, alpha, tau_s, mu_ref);
  };
  ode::Options opt;
  opt.rtol = tol;
  opt.atol = tol * 1e-2;
  ode::Result total;
  double t0 = 0, y0 = 0;
  for (double t1 : cuts) {
    std::vector<std::pair<double, double>> seg;
    auto r = ode::integrate(rate, t0, y0, t1, opt, stop_level, path ? &seg : nullptr);
    if (path) path->insert(path->end(), seg.begin() + (path->empty() ? 0 : 1), seg.end());
    total.accepted_steps += r.accepted_steps;
    total.rejected_steps += r.rejected_steps;
    total.t = r.t;
    total.y = r.y;
    if (r.event) {
      total.event = true;
      return total;
    }
    t0 = t1;
    y0 = r.y;
  }
  return total;
}

}  // namespace detail

/// Integrates the damage ODE under an arbitrary piecewise-linear load. For a
/// ramp without explicit tau_s, the strength k T_s is found by an outer
/// bisection on T_s (damage at t = T_s increases with T_s).
inline DamagePath integrate_damage(const AnyEffects& effects, const LoadProfile& profile, double mu_ref,
                                   const IntegrateOptions& opt = {}) {
  if (!(mu_ref > 0)) throw std::invalid_argument("integrate_damage: mu_ref must be positive");
  if (!(opt.tol > 0)) throw std::invalid_argument("integrate_damage: tol must be positive");
  const double horizon = opt.horizon.value_or(1e6 * mu_ref);
  DamagePath out;

  double tau_s;
  if (opt.tau_s) {
    if (!(*opt.tau_s > 0)) throw std::invalid_argument("integrate_damage: tau_s must be positive");
    tau_s = *opt.tau_s;
  } else {
    if (!profile.is_ramp()) throw std::invalid_argument("integrate_damage: tau_s is required for non-ramp profiles");
    const double k = profile.ramp_rate();
    auto objective = [&](double log_ts) {
      const double ts = std::exp(log_ts);
      // capped so that trial values far above the root cannot overflow
      constexpr double cap = 1e6;
      const auto r = detail::integrate_piecewise(effects, profile, k * ts, mu_ref, ts, opt.tol * 1e-2, cap, nullptr);
      if (r.event) return std::log(cap) + (ts - r.t) / ts;
      return r.y > 0 ? std::log(r.y) : -std::numeric_limits<double>::infinity();
    };
    const double log_mu = std::log(mu_ref);
    const auto bracket =
        bracket_increasing(objective, log_mu - std::log(10.0), std::log(10.0), log_mu - 690.0, std::log(horizon));
    if (!bracket) {
      out.tau_s = k * horizon;
      detail::integrate_piecewise(effects, profile, out.tau_s, mu_ref, horizon, opt.tol, 1.0, &out.trajectory);
      return out;
    }
    tau_s = k * std::exp(solve_increasing(objective, *bracket, opt.tol * 1e-2));
  }

  out.tau_s = tau_s;
  const auto r = detail::integrate_piecewise(effects, profile, tau_s, mu_ref, horizon, opt.tol, 1.0, &out.trajectory);
  if (r.event) out.outcome = FailureOutcome::fails_at(r.t);
  return out;
}

}  // namespace adm
