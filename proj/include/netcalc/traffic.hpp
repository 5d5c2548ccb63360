// Traffic descriptors: rate-burst envelopes, EBB flows, sample-path
// envelopes built from EBB bounds, and the Markov-modulated On-Off source
// with its effective bandwidth.

#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "netcalc/core.hpp"
#include "netcalc/curve.hpp"

namespace netcalc {

/// Deterministic leaky-bucket envelope E(t) = rho t + sigma.
struct RateBurst {
  double rho = 0.0;    // bits/s
  double sigma = 0.0;  // bits

  void validate() const {
    detail::require(rho > 0 && std::isfinite(rho), "RateBurst needs rho > 0");
    detail::require(sigma >= 0 && std::isfinite(sigma), "RateBurst needs sigma >= 0");
  }
};

/// EBB flow A ~ (rho, alpha, M): P(A(s,t) - rho(t-s) > sigma) <= M exp(-alpha sigma).
struct EbbFlow {
  double rho = 0.0;    // bits/s
  double alpha = 0.0;  // 1/bit
  double m = 1.0;

  void validate() const {
    detail::require(rho > 0 && std::isfinite(rho), "EbbFlow needs rho > 0");
    detail::require(alpha > 0 && std::isfinite(alpha), "EbbFlow needs alpha > 0");
    detail::require(m > 0 && std::isfinite(m), "EbbFlow needs M > 0");
  }

  double bound(double sigma) const { return m * std::exp(-alpha * sigma); }
};

using FlowDescriptor = std::variant<RateBurst, EbbFlow>;

inline double rate_of(const FlowDescriptor& d) {
  return std::visit([](const auto& f) { return f.rho; }, d);
}

inline bool is_deterministic(const FlowDescriptor& d) { return std::holds_alternative<RateBurst>(d); }

inline Curve det_envelope(const RateBurst& rb) {
  rb.validate();
  return Curve::affine(rb.rho, rb.sigma);
}

/// N copies of the same regulated flow: (N rho, N sigma), no multiplexing gain.
inline RateBurst aggregate(const RateBurst& rb, std::size_t n) {
  detail::require(n >= 1, "aggregate needs n >= 1");
  return {static_cast<double>(n) * rb.rho, static_cast<double>(n) * rb.sigma};
}

/// G(t; sigma) = (rho + gamma) t + sigma, eps(sigma) = M e (1 + rho/gamma) exp(-alpha sigma).
struct SamplePathEnvelope {
  double rate = 0.0;
  double gamma = 0.0;
  double prefactor = 0.0;
  double decay = 0.0;

  Curve curve(double sigma) const { return Curve::affine(rate, sigma); }
  double bound(double sigma) const { return prefactor * std::exp(-decay * sigma); }
};

inline SamplePathEnvelope ebb_sample_path(const EbbFlow& f, double gamma) {
  f.validate();
  detail::require(gamma > 0, "sample-path envelope needs gamma > 0");
  return {f.rho + gamma, gamma, f.m * std::exp(1.0) * (1.0 + f.rho / gamma), f.alpha};
}

/// Discrete-time two-state Markov-modulated On-Off source.
struct MmooSource {
  double p_on_to_off = 0.9;
  double p_off_to_on = 0.1;
  double peak = 1.5 * units::kMbps;  // bits/s while On
  double slot = 1.0 * units::kMs;

  void validate() const {
    detail::require(p_on_to_off > 0 && p_on_to_off < 1, "p_on_to_off must be in (0,1)");
    detail::require(p_off_to_on > 0 && p_off_to_on < 1, "p_off_to_on must be in (0,1)");
    detail::require(peak > 0, "peak rate must be > 0");
    detail::require(slot > 0, "slot must be > 0");
  }

  double stationary_on() const { return p_off_to_on / (p_off_to_on + p_on_to_off); }
  double mean_rate() const { return peak * stationary_on(); }
  double bits_per_on_slot() const { return peak * slot; }
};

/// eb(alpha) = log(spectral radius of P diag(1, e^{alpha P slot})) / (alpha slot), in bits/s.
inline double mmoo_effective_bandwidth(const MmooSource& src, double alpha) {
  src.validate();
  detail::require(alpha > 0, "effective bandwidth needs alpha > 0");
  const double p00 = 1.0 - src.p_off_to_on;
  const double p01 = src.p_off_to_on;
  const double p10 = src.p_on_to_off;
  const double p11 = 1.0 - src.p_on_to_off;
  const double theta = alpha * src.bits_per_on_slot();
  // Factor e^theta out of the On column so large theta cannot overflow:
  // M = e^theta [[p00 e^-theta, p01], [p10 e^-theta, p11]].
  const double w = std::exp(-theta);
  const double a = p00 * w;
  const double d = p11;
  const double tr = a + d;
  const double det = a * d - p01 * p10 * w;
  const double disc = std::sqrt(std::fmax(tr * tr - 4.0 * det, 0.0));
  const double lambda = 0.5 * (tr + disc);
  const double log_radius = theta + std::log(lambda);
  double per_slot = log_radius;
  if (theta < 1.0) {
    // lambda = 1 + x with x -> 0 as theta -> 0. With e = expm1(theta) the
    // characteristic polynomial becomes x^2 - T x + c with
    // T = p11 e - p01 - p10 and c = -p01 e, free of cancellation.
    const double e = std::expm1(theta);
    const double t_coef = p11 * e - p01 - p10;
    const double c = -p01 * e;
    const double root = std::sqrt(t_coef * t_coef - 4.0 * c);
    const double x = t_coef >= 0 ? 0.5 * (t_coef + root) : 2.0 * c / (t_coef - root);
    per_slot = std::log1p(x);
  }
  return per_slot / (alpha * src.slot);
}

/// n independent copies: (n eb(alpha), alpha, 1).
inline EbbFlow aggregate_iid_ebb(const MmooSource& src, std::size_t n, double alpha) {
  detail::require(n >= 1, "aggregate needs n >= 1");
  return {static_cast<double>(n) * mmoo_effective_bandwidth(src, alpha), alpha, 1.0};
}

/// Logarithmic grid of n points between lo and hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  detail::require(lo > 0 && hi > lo && n >= 2, "log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

}  // namespace netcalc
