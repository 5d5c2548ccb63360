// End-to-end service for a tandem of Delta-schedulers.
//
// Per-node curves are relaxed by a common rate gamma, convolved with the
// sigma-carrying convolution rule (sigma_h enters the per-node curve before
// the convolution) and brought into the form
//   S_net(t; sigma) >= S~_net(t - shift) - drop,
// where S~_net is the pointwise minimum of concave two-piece curves S~_h.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "netcalc/minplus.hpp"
#include "netcalc/scheduler.hpp"
#include "netcalc/traffic.hpp"

namespace netcalc {

struct TimeModel {
  enum class Kind { kContinuous, kDiscrete };
  Kind kind = Kind::kContinuous;
  double slot = 0.0;  // seconds, discrete only

  static TimeModel continuous() { return {}; }
  static TimeModel discrete(double slot) {
    detail::require(slot > 0, "discrete time model needs slot > 0");
    return {Kind::kDiscrete, slot};
  }
  bool is_discrete() const { return kind == Kind::kDiscrete; }
};

/// min_h {C_h - rho_h} - rho_0.
inline double stability_slack(const PathSpec& path) {
  double m = kInf;
  for (const auto& n : path.nodes()) m = std::min(m, n.capacity - n.cross_rate());
  return m - path.through_rate();
}

struct StabilityViolation {
  std::size_t node;  // 1-based
  double through_rate;
  double residual_capacity;
};

inline std::optional<StabilityViolation> stability_report(const PathSpec& path) {
  const double rho0 = path.through_rate();
  for (std::size_t h = 0; h < path.hops(); ++h) {
    const auto& n = path.node(h);
    double residual = n.capacity - n.cross_rate();
    if (!(rho0 < residual)) return StabilityViolation{h + 1, rho0, residual};
  }
  return std::nullopt;
}

/// Throws Error(kUnstable) naming the first node with rho_0 >= C_h - rho_h.
inline void stability_check(const PathSpec& path) {
  if (auto v = stability_report(path)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "through rate %.9g >= residual capacity %.9g at node %zu", v->through_rate,
                  v->residual_capacity, v->node);
    throw Error(ErrorCode::kUnstable, buf, v->node);
  }
}

/// Default rate relaxation: half of the admissible interval (0, slack/H).
inline double default_gamma(const PathSpec& path) {
  return stability_slack(path) / (2.0 * static_cast<double>(path.hops()));
}

/// Derived constants for a statistical (all-EBB) path. Index 0 is the
/// through flow, indices 1..H the cross flows.
struct NetParams {
  double gamma = 0.0;
  double tau_net = 0.0;
  double alpha_net = 0.0;
  double c_net = 0.0;
  double m_net = 0.0;
  TimeModel time_model;
  std::vector<double> alphas;
  std::vector<double> ms;
  std::vector<double> rhos;
  std::vector<double> taus;  // tau_1..tau_{H-1}

  std::size_t hops() const { return alphas.size() - 1; }

  /// sigma_h = (alpha_net / alpha_h) sigma, h = 0..H.
  std::vector<double> sigma_split(double sigma) const {
    std::vector<double> out(alphas.size());
    for (std::size_t h = 0; h < alphas.size(); ++h) out[h] = alpha_net / alphas[h] * sigma;
    return out;
  }

  /// Per-slot rate relaxation used by the discrete-time bounding function.
  double gamma_step() const { return time_model.is_discrete() ? gamma * time_model.slot : gamma; }
};

inline NetParams net_params(const PathSpec& path, std::optional<double> gamma = std::nullopt,
                            TimeModel time_model = TimeModel::continuous()) {
  detail::require(path.statistical(), "net_params needs EBB descriptors on every flow");
  stability_check(path);
  const std::size_t H = path.hops();
  const double slack = stability_slack(path);
  NetParams p;
  p.gamma = gamma.value_or(default_gamma(path));
  if (!(p.gamma > 0 && static_cast<double>(H) * p.gamma < slack)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "gamma %.9g outside (0, %.9g)", p.gamma, slack / static_cast<double>(H));
    throw Error(ErrorCode::kGammaOutOfRange, buf);
  }
  p.time_model = time_model;

  auto push = [&p](const EbbFlow& f) {
    p.alphas.push_back(f.alpha);
    p.ms.push_back(f.m);
    p.rhos.push_back(f.rho);
  };
  push(std::get<EbbFlow>(path.through()));
  p.c_net = kInf;
  for (const auto& n : path.nodes()) {
    push(std::get<EbbFlow>(n.cross));
    p.c_net = std::min(p.c_net, n.capacity);
  }
  double inv_sum = 0.0;
  for (double a : p.alphas) inv_sum += 1.0 / a;
  p.alpha_net = 1.0 / inv_sum;
  p.tau_net = time_model.is_discrete() ? 0.0 : 1.0 / (p.alpha_net * p.c_net);

  double inv_inner = 0.0;
  for (std::size_t h = 1; h < H; ++h) inv_inner += 1.0 / p.alphas[h];
  for (std::size_t h = 1; h < H; ++h) p.taus.push_back((1.0 / p.alphas[h]) / inv_inner * p.tau_net);

  const double e = std::exp(1.0);
  if (time_model.is_discrete()) {
    const double g = p.gamma_step();
    auto geo = [g](double a) { return 1.0 / (-std::expm1(-a * g)); };
    p.m_net = p.ms[0] * geo(p.alphas[0]) + p.ms[H] * geo(p.alphas[H]);
    for (std::size_t h = 1; h < H; ++h) p.m_net += p.ms[h] * geo(p.alphas[h]) * geo(p.alphas[h]);
  } else {
    auto pref = [&](std::size_t h) { return p.ms[h] * e * (1.0 + p.rhos[h] / p.gamma); };
    p.m_net = pref(0) + pref(H);
    double mid = 0.0;
    for (std::size_t h = 1; h < H; ++h) mid += pref(h);
    p.m_net += p.c_net / p.gamma * mid;
  }
  return p;
}

/// Scalars of one node as seen by the closed forms.
struct NodeTerms {
  double capacity;
  double rho;    // cross rate
  double delta;  // +-inf allowed
  double sigma;  // cross burst parameter sigma_h
};

/// Everything the closed forms need at one value of sigma.
struct PathTerms {
  double gamma = 0.0;
  double tau_net = 0.0;
  double rho0 = 0.0;
  double sigma0 = 0.0;
  std::vector<NodeTerms> nodes;

  std::size_t hops() const { return nodes.size(); }
  double hm1() const { return static_cast<double>(nodes.size()) - 1.0; }
  /// sigma_0 + (H-1) gamma tau_net
  double through_burst() const { return sigma0 + hm1() * gamma * tau_net; }
};

inline PathTerms path_terms(const PathSpec& path, const NetParams& params, double sigma) {
  detail::require(sigma >= 0, "sigma must be >= 0");
  const auto split = params.sigma_split(sigma);
  PathTerms t;
  t.gamma = params.gamma;
  t.tau_net = params.tau_net;
  t.rho0 = path.through_rate();
  t.sigma0 = split[0];
  for (std::size_t h = 0; h < path.hops(); ++h) {
    const auto& n = path.node(h);
    t.nodes.push_back({n.capacity, n.cross_rate(), n.delta, split[h + 1]});
  }
  return t;
}

/// gamma = tau_net = 0 with the actual bursts of a deterministic path.
inline PathTerms deterministic_terms(const PathSpec& path) {
  detail::require(path.deterministic(), "deterministic analysis needs rate-burst descriptors on every flow");
  stability_check(path);
  PathTerms t;
  const auto& th = std::get<RateBurst>(path.through());
  t.rho0 = th.rho;
  t.sigma0 = th.sigma;
  for (const auto& n : path.nodes()) {
    const auto& c = std::get<RateBurst>(n.cross);
    t.nodes.push_back({n.capacity, c.rho, n.delta, c.sigma});
  }
  return t;
}

struct ThetaU {
  double theta;
  double u;
};

/// theta*_h = min{sigma_h/(C_h - rho_h - H gamma), [sigma_h + (rho_h+gamma) Delta^h]_+ / (C_h - (H-1) gamma)}
/// U*_h     = [sigma_h + (rho_h + gamma) Delta^h]_-
inline ThetaU theta_u_star(const NodeTerms& n, double gamma, std::size_t hops) {
  const double H = static_cast<double>(hops);
  const double slow = n.capacity - n.rho - H * gamma;
  const double fast = n.capacity - (H - 1.0) * gamma;
  if (!(slow > 0 && fast > 0)) throw Error(ErrorCode::kGammaOutOfRange, "theta* denominator is not positive");
  const double level = n.sigma + scale(n.rho + gamma, n.delta);
  return {std::min(n.sigma / slow, pos(level) / fast), neg(level)};
}

/// Intercept U_h(theta) = (C_h - (H-1) gamma) theta - (rho_h + gamma) Delta^h(theta) - sigma_h
/// of S~_h. Increasing in theta; U_h(theta*_h) = U*_h.
inline double u_of_theta(const NodeTerms& n, double gamma, std::size_t hops, double theta) {
  const double fast = n.capacity - (static_cast<double>(hops) - 1.0) * gamma;
  const double clip = delta_clip(theta, n.delta);
  if (clip == -kInf) return kInf;
  return fast * theta - scale(n.rho + gamma, clip) - n.sigma;
}

inline std::vector<ThetaU> theta_u_stars(const PathTerms& t) {
  std::vector<ThetaU> out;
  for (const auto& n : t.nodes) out.push_back(theta_u_star(n, t.gamma, t.hops()));
  return out;
}

/// S~_h(t) = min{(C_h - (H-1) gamma)(t + theta), (C_h - rho_h - H gamma) t + U} for t > 0.
inline Curve tilde_node_curve(const NodeTerms& n, double gamma, std::size_t hops, double theta) {
  const double H = static_cast<double>(hops);
  const double fast = n.capacity - (H - 1.0) * gamma;
  const double slow = n.capacity - n.rho - H * gamma;
  const double u = u_of_theta(n, gamma, hops, theta);
  const double start = fast * theta;
  if (std::isinf(u)) return Curve::affine(fast, start);
  if (u <= start) return Curve::affine(slow, std::max(u, 0.0));
  const double tc = (u - start) / (fast - slow);
  return Curve({{0.0, start, fast}, {tc, start + fast * tc, slow}});
}

struct TildeNet {
  Curve curve;  // S~_net
  double shift = 0.0;  // tau_net + sum theta_h
  double drop = 0.0;   // (H-1) gamma tau_net
  std::vector<double> thetas;

  /// [S~_net(t - shift) - drop]_+
  Curve service_curve() const {
    Curve shifted = curve.shifted_right(shift);
    if (drop == 0.0) return shifted;
    return detail::Pwl::from_curve(shifted).plus_linear(0.0, -drop).to_curve();
  }
};

/// Network curve with explicit theta_h (each >= theta*_h).
inline TildeNet tilde_net_curve(const PathTerms& t, std::span<const double> thetas) {
  detail::require(thetas.size() == t.hops(), "one theta per node required");
  std::vector<Curve> parts;
  TildeNet out;
  out.shift = t.tau_net;
  for (std::size_t h = 0; h < t.hops(); ++h) {
    const auto star = theta_u_star(t.nodes[h], t.gamma, t.hops());
    if (thetas[h] < star.theta * (1.0 - 1e-12) - 1e-15) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "theta %.9g below theta* %.9g", thetas[h], star.theta);
      throw Error(ErrorCode::kThetaBelowStar, buf, h + 1);
    }
    parts.push_back(tilde_node_curve(t.nodes[h], t.gamma, t.hops(), thetas[h]));
    out.shift += thetas[h];
  }
  out.curve = pointwise_min(parts);
  out.drop = t.hm1() * t.gamma * t.tau_net;
  out.thetas.assign(thetas.begin(), thetas.end());
  return out;
}

/// Network curve at theta_h = theta*_h.
inline TildeNet tilde_net_curve(const PathTerms& t) {
  std::vector<double> thetas;
  for (const auto& s : theta_u_stars(t)) thetas.push_back(s.theta);
  return tilde_net_curve(t, thetas);
}

struct EpsilonParts {
  double through = 0.0;  // eps_0(sigma_0), sample-path envelope of the through flow
  double network = 0.0;  // eps_net(sigma_1..sigma_H)
  double total() const { return through + network; }
};

/// Bounding functions at sigma with the sigma_h split. In continuous time the
/// total is at most M_net exp(-alpha_net sigma); in discrete time it is equal.
inline EpsilonParts epsilon_net(const NetParams& p, double sigma) {
  const auto s = p.sigma_split(sigma);
  const std::size_t H = p.hops();
  EpsilonParts out;
  auto decay = [&](std::size_t h) { return std::exp(-p.alphas[h] * s[h]); };
  if (p.time_model.is_discrete()) {
    const double g = p.gamma_step();
    auto geo = [g](double a) { return 1.0 / (-std::expm1(-a * g)); };
    out.through = p.ms[0] * geo(p.alphas[0]) * decay(0);
    out.network = p.ms[H] * geo(p.alphas[H]) * decay(H);
    for (std::size_t h = 1; h < H; ++h) out.network += p.ms[h] * geo(p.alphas[h]) * geo(p.alphas[h]) * decay(h);
    return out;
  }
  const double e = std::exp(1.0);
  auto pref = [&](std::size_t h) { return p.ms[h] * e * (1.0 + p.rhos[h] / p.gamma); };
  out.through = pref(0) * decay(0);
  out.network = pref(H) * decay(H);
  if (H > 1) {
    double inv_inner = 0.0;
    double sum = 0.0;
    for (std::size_t h = 1; h < H; ++h) {
      inv_inner += 1.0 / p.alphas[h];
      sum += pref(h) * decay(h);
    }
    out.network += inv_inner / (p.gamma * p.tau_net) * sum;
  }
  return out;
}

/// A per-node service curve family S(x; sigma).
using CurveFamily = std::function<double(double x, double sigma)>;

/// Closed-form evaluator of node_curve_ebb, usable as a CurveFamily.
inline CurveFamily node_family(const DeltaNode& node, double gamma, double theta) {
  const double rate = node.cross_rate() + gamma;
  const double clip = delta_clip(theta, node.delta);
  const double cap = node.capacity;
  return [=](double x, double sigma) {
    if (x <= theta) return 0.0;
    if (clip == -kInf) return cap * x;
    return pos(cap * x - pos(rate * (x - theta + clip) + sigma));
  };
}

/// Two-node network curve from the sigma-carrying convolution, evaluated on a grid in x2:
///   S_12(t) = inf_{x2 in [0, t - tau1]} { S_2(x2; sigma2) + S_1(t - tau1 - x2; sigma1 + gamma1 (tau1 + x2)) }.
/// Coarse sampling of x2 can only overestimate the infimum.
inline double thm1_pair_conv_at(const CurveFamily& s1, const CurveFamily& s2, double tau1, double gamma1,
                                double sigma1, double sigma2, double t, double step) {
  detail::require(tau1 > 0 && gamma1 > 0, "tau1 and gamma1 must be > 0");
  const double span = t - tau1;
  if (span <= 0) return 0.0;
  auto term = [&](double x2) { return s2(x2, sigma2) + s1(span - x2, sigma1 + gamma1 * (tau1 + x2)); };
  double best = term(span);
  const auto n = static_cast<long>(std::floor(span / step));
  for (long k = 0; k <= n; ++k) best = std::min(best, term(static_cast<double>(k) * step));
  return best;
}

/// thm1_pair_conv_at sampled at multiples of step up to horizon, interpolated linearly.
inline Curve thm1_pair_conv(const CurveFamily& s1, const CurveFamily& s2, double tau1, double gamma1, double sigma1,
                            double sigma2, double step, double horizon) {
  const auto n = static_cast<long>(std::ceil(horizon / step));
  std::vector<Segment> segs;
  double prev = 0.0;
  for (long k = 1; k <= n; ++k) {
    double v = thm1_pair_conv_at(s1, s2, tau1, gamma1, sigma1, sigma2, static_cast<double>(k) * step, step);
    v = std::max(v, prev);
    segs.push_back({static_cast<double>(k - 1) * step, prev, (v - prev) / step});
    prev = v;
  }
  segs.push_back({static_cast<double>(n) * step, prev, segs.empty() ? 0.0 : segs.back().slope});
  return Curve(std::move(segs));
}

/// Per-node curve with sigma outside the convolution:
/// [C t - (rho + gamma)[t - theta + Delta(theta)]_+ - sigma]_+ I_{t > theta}.
inline Curve pessimistic_node_curve(const NodeTerms& n, double gamma, double theta, double sigma) {
  const double rate = n.rho + gamma;
  const double lag = theta - delta_clip(theta, n.delta);
  detail::Pwl raw;
  if (std::isinf(lag)) {
    raw.segments = {{0.0, -sigma, n.capacity}};
  } else if (lag <= 0) {
    raw.segments = {{0.0, -sigma, n.capacity - rate}};
  } else {
    raw.segments = {{0.0, -sigma, n.capacity}, {lag, n.capacity * lag - sigma, n.capacity - rate}};
  }
  return Curve(raw.positive_part().zero_until(theta).monotone_lower().segments);
}

struct BaselineResult {
  Curve service;
  double theta = 0.0;  // common theta used at every node
  double delay = kInf;
  double backlog = kInf;
  double epsilon = 0.0;
  bool approximation = true;  // the prior method's own theta optimization is not reproduced
};

namespace detail {

inline Curve baseline_curve(const PathTerms& t, double theta) {
  std::vector<Curve> parts;
  double sigma_sum = 0.0;
  for (const auto& n : t.nodes) {
    parts.push_back(pessimistic_node_curve(n, t.gamma, theta, 0.0));
    sigma_sum += n.sigma;
  }
  Curve net = conv_all(parts);
  if (t.tau_net > 0) net = net.shifted_right(t.tau_net);
  return Pwl::from_curve(net).plus_linear(-t.hm1() * t.gamma, -sigma_sum).to_curve();
}

}  // namespace detail

/// Network curve of the older convolution, where each node curve has the form
/// [S_h(t) - sigma_h]_+, the sigma-free parts are convolved and the sigmas are
/// subtracted afterwards. A common theta is chosen by a 1-D search minimizing
/// the resulting delay bound.
inline BaselineResult old_conv_baseline(const PathTerms& t, double epsilon = 0.0) {
  const Curve arrival = Curve::affine(t.rho0 + t.gamma, t.sigma0);
  double sigma_sum = 0.0;
  double theta_max = 0.0;
  double c_min = kInf;
  std::vector<double> candidates{0.0};
  for (const auto& n : t.nodes) {
    sigma_sum += n.sigma;
    c_min = std::min(c_min, n.capacity);
    double star = theta_u_star(n, t.gamma, t.hops()).theta;
    candidates.push_back(star);
    theta_max = std::max(theta_max, star);
  }
  theta_max = 2.0 * std::max(theta_max, (t.sigma0 + sigma_sum) / c_min);
  constexpr int kGrid = 48;
  for (int k = 1; k <= kGrid; ++k) candidates.push_back(theta_max * k / kGrid);

  BaselineResult best;
  best.epsilon = epsilon;
  for (double theta : candidates) {
    Curve s = detail::baseline_curve(t, theta);
    double d = h_dev(arrival, s);
    if (d < best.delay) {
      best.delay = d;
      best.theta = theta;
      best.service = s;
      best.backlog = v_dev(arrival, s);
    }
  }
  return best;
}

/// Golden-section minimization of f over (lo, hi).
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, int iterations = 40) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace netcalc
