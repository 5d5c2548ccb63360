// End-to-end output, backlog and delay bounds: closed forms, the exact
// minimization of the delay bound over theta_h, deterministic limits and
// strict-priority forms.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <vector>

#include "netcalc/netservice.hpp"

namespace netcalc {

enum class BoundKind { kOutput, kBacklog, kDelay };
enum class BoundMethod { kClosedForm, kOptimized, kDeterministic, kPriority, kOldBaseline };

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::kOutput: return "output";
    case BoundKind::kBacklog: return "backlog";
    case BoundKind::kDelay: return "delay";
  }
  return "?";
}

inline const char* to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::kClosedForm: return "closed_form";
    case BoundMethod::kOptimized: return "optimized";
    case BoundMethod::kDeterministic: return "deterministic";
    case BoundMethod::kPriority: return "priority";
    case BoundMethod::kOldBaseline: return "old_baseline";
  }
  return "?";
}

struct BoundPoint {
  double sigma = 0.0;
  double value = 0.0;      // bits or seconds
  double violation = 0.0;  // probability, 0 for deterministic bounds
};

struct BoundReport {
  BoundKind kind = BoundKind::kDelay;
  BoundMethod method = BoundMethod::kClosedForm;
  std::vector<BoundPoint> points;  // sorted by sigma
  double alpha_net = 0.0;          // 0 for deterministic reports
  double m_net = 0.0;

  double value() const {
    detail::require(!points.empty(), "empty bound report");
    return points.front().value;
  }
};

/// sigma = ln(M_net / eps) / alpha_net, for 0 < eps <= M_net.
inline double sigma_for_epsilon(const NetParams& p, double epsilon) {
  if (!(epsilon > 0 && epsilon <= p.m_net)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "epsilon %.9g outside (0, %.9g]", epsilon, p.m_net);
    throw Error(ErrorCode::kEpsilonOutOfRange, buf);
  }
  return std::log(p.m_net / epsilon) / p.alpha_net;
}

inline double violation_bound(const NetParams& p, double sigma) { return p.m_net * std::exp(-p.alpha_net * sigma); }

struct ClosedForm {
  double backlog = 0.0;  // also the burst of the output envelope
  double delay = 0.0;
  std::vector<double> thetas;
  std::vector<double> us;
};

/// b_net = (rho_0 + H gamma) tau_net + sigma_0 + (rho_0 + gamma) sum theta*_h
/// d_net = tau_net + max_h max{K/(C_h - (H-1) gamma), (K - U*_h)/(C_h - rho_h - H gamma)} + sum theta*_h
/// with K = sigma_0 + (H-1) gamma tau_net. Both are +inf when some node rate
/// C_h - rho_h - H gamma does not exceed the through envelope rate rho_0 + gamma.
inline ClosedForm closed_form(const PathTerms& t) {
  const double H = static_cast<double>(t.hops());
  const double k = t.through_burst();
  ClosedForm out;
  double theta_sum = 0.0;
  double inner = 0.0;
  bool bounded = true;
  for (const auto& n : t.nodes) {
    const auto star = theta_u_star(n, t.gamma, t.hops());
    out.thetas.push_back(star.theta);
    out.us.push_back(star.u);
    theta_sum += star.theta;
    const double fast = n.capacity - (H - 1.0) * t.gamma;
    const double slow = n.capacity - n.rho - H * t.gamma;
    if (slow < t.rho0 + t.gamma) bounded = false;
    inner = std::max({inner, k / fast, (k - star.u) / slow});
  }
  if (!bounded) {
    out.backlog = out.delay = kInf;
    return out;
  }
  out.backlog = (t.rho0 + H * t.gamma) * t.tau_net + t.sigma0 + (t.rho0 + t.gamma) * theta_sum;
  out.delay = t.tau_net + inner + theta_sum;
  return out;
}

namespace detail {

/// Smallest theta >= 0 with U_h(theta) >= y (0 when the constraint is void).
inline double u_inverse(const NodeTerms& n, double gamma, std::size_t hops, double y) {
  if (n.delta == -kInf) return 0.0;
  if (u_of_theta(n, gamma, hops, 0.0) >= y) return 0.0;
  const double H = static_cast<double>(hops);
  const double fast = n.capacity - (H - 1.0) * gamma;
  const double slow = n.capacity - n.rho - H * gamma;  // slope of U_h below Delta
  if (n.delta <= 0) return (y + scale(n.rho + gamma, n.delta) + n.sigma) / fast;
  const double knee = u_of_theta(n, gamma, hops, std::isinf(n.delta) ? 0.0 : n.delta);
  if (std::isinf(n.delta) || y <= knee) return (y + n.sigma) / slow;
  return n.delta + (y - knee) / fast;
}

}  // namespace detail

struct OptimizedDelay {
  double delay = kInf;
  double x = 0.0;
  std::vector<double> thetas;
};

/// Minimizes tau_net + X + sum theta_h over X >= 0, theta_h >= theta*_h subject to
///   (C_h - (H-1) gamma)(X + theta_h) >= K and (C_h - rho_h - H gamma) X + U_h(theta_h) >= K.
/// For fixed X the smallest feasible theta_h is explicit; the objective is
/// piecewise linear in X and every breakpoint is enumerated.
inline OptimizedDelay delay_optimized(const PathTerms& t) {
  const std::size_t hops = t.hops();
  const double H = static_cast<double>(hops);
  const double k = t.through_burst();
  struct Node {
    NodeTerms terms;
    double star, fast, slow;
  };
  std::vector<Node> nodes;
  for (const auto& n : t.nodes) {
    const double fast = n.capacity - (H - 1.0) * t.gamma;
    const double slow = n.capacity - n.rho - H * t.gamma;
    if (slow < t.rho0 + t.gamma) return {};
    nodes.push_back({n, theta_u_star(n, t.gamma, hops).theta, fast, slow});
  }
  auto theta_at = [&](const Node& n, double x) {
    double th = std::max(n.star, k / n.fast - x);
    return std::max(th, detail::u_inverse(n.terms, t.gamma, hops, k - n.slow * x));
  };

  std::vector<double> xs{0.0};
  for (const auto& n : nodes) {
    xs.push_back(k / n.fast);
    xs.push_back(k / n.fast - n.star);
    if (n.terms.delta == -kInf) continue;
    xs.push_back((k - u_of_theta(n.terms, t.gamma, hops, n.star)) / n.slow);
    xs.push_back((k - u_of_theta(n.terms, t.gamma, hops, 0.0)) / n.slow);
    if (n.terms.delta > 0 && std::isfinite(n.terms.delta)) {
      const double knee = u_of_theta(n.terms, t.gamma, hops, n.terms.delta);
      xs.push_back((k - knee) / n.slow);
      // K/A - X = theta on the upper piece U = A theta + (knee - A Delta).
      const double c = knee - n.fast * n.terms.delta;
      if (n.slow != n.fast) xs.push_back((k - c - n.fast * k / n.fast) / (n.slow - n.fast));
    } else if (n.terms.delta <= 0) {
      // Single piece U = A theta + c: intersection with K/A - X needs B != A.
      const double c = u_of_theta(n.terms, t.gamma, hops, 0.0);
      if (n.slow != n.fast) xs.push_back((k - c - k) / (n.slow - n.fast));
    }
  }

  OptimizedDelay best;
  for (double x : xs) {
    if (!(x >= 0) || !std::isfinite(x)) continue;
    double total = t.tau_net + x;
    std::vector<double> thetas;
    for (const auto& n : nodes) {
      thetas.push_back(theta_at(n, x));
      total += thetas.back();
    }
    if (total < best.delay) best = {total, x, std::move(thetas)};
  }
  if (!std::isfinite(best.delay)) throw Error(ErrorCode::kInfeasible, "delay optimization found no feasible point");
  return best;
}

struct BoundTriple {
  BoundReport output;
  BoundReport backlog;
  BoundReport delay;
  EbbFlow output_flow;  // (rho_0 + gamma, alpha_net, M_net) for statistical paths
  std::vector<double> thetas;
};

namespace detail {

inline BoundReport single(BoundKind kind, BoundMethod method, double sigma, double value, double violation,
                          double alpha_net, double m_net) {
  return {kind, method, {{sigma, value, violation}}, alpha_net, m_net};
}

}  // namespace detail

inline BoundTriple closed_form_bounds(const PathSpec& path, const NetParams& params, double sigma) {
  const auto terms = path_terms(path, params, sigma);
  const auto cf = closed_form(terms);
  const double v = violation_bound(params, sigma);
  BoundTriple out;
  out.output = detail::single(BoundKind::kOutput, BoundMethod::kClosedForm, sigma, cf.backlog, v, params.alpha_net,
                              params.m_net);
  out.backlog = detail::single(BoundKind::kBacklog, BoundMethod::kClosedForm, sigma, cf.backlog, v,
                               params.alpha_net, params.m_net);
  out.delay = detail::single(BoundKind::kDelay, BoundMethod::kClosedForm, sigma, cf.delay, v, params.alpha_net,
                             params.m_net);
  out.output_flow = {terms.rho0 + terms.gamma, params.alpha_net, params.m_net};
  out.thetas = cf.thetas;
  return out;
}

inline BoundReport delay_optimized(const PathSpec& path, const NetParams& params, double sigma) {
  const auto opt = delay_optimized(path_terms(path, params, sigma));
  return detail::single(BoundKind::kDelay, BoundMethod::kOptimized, sigma, opt.delay, violation_bound(params, sigma),
                        params.alpha_net, params.m_net);
}

/// Closed forms with gamma = tau_net = 0.
inline BoundTriple deterministic_bounds(const PathSpec& path) {
  const auto terms = deterministic_terms(path);
  const auto cf = closed_form(terms);
  BoundTriple out;
  out.output = detail::single(BoundKind::kOutput, BoundMethod::kDeterministic, 0.0, cf.backlog, 0.0, 0.0, 0.0);
  out.backlog = detail::single(BoundKind::kBacklog, BoundMethod::kDeterministic, 0.0, cf.backlog, 0.0, 0.0, 0.0);
  out.delay = detail::single(BoundKind::kDelay, BoundMethod::kDeterministic, 0.0, cf.delay, 0.0, 0.0, 0.0);
  out.output_flow = {terms.rho0, kInf, 0.0};
  out.thetas = cf.thetas;
  return out;
}

enum class PriorityOrder {
  kThroughLow,   // Delta = +inf everywhere
  kThroughHigh,  // Delta = -inf everywhere
};

/// Strict-priority delay bounds:
///   through low:  sigma_0 / min_h(C_h - rho_h) + sum_h sigma_h / (C_h - rho_h)
///   through high: sigma_0 / min_h C_h
inline BoundReport priority_bounds(const PathSpec& path, PriorityOrder order) {
  const auto terms = deterministic_terms(path);
  const double want = order == PriorityOrder::kThroughLow ? kInf : -kInf;
  for (std::size_t h = 0; h < terms.hops(); ++h) {
    if (terms.nodes[h].delta != want) {
      throw Error(ErrorCode::kMixedSigns, "priority bounds need the same infinite Delta at every node", h + 1);
    }
  }
  double value = 0.0;
  if (order == PriorityOrder::kThroughLow) {
    double residual = kInf;
    for (const auto& n : terms.nodes) {
      residual = std::min(residual, n.capacity - n.rho);
      value += n.sigma / (n.capacity - n.rho);
    }
    value += terms.sigma0 / residual;
  } else {
    double c = kInf;
    for (const auto& n : terms.nodes) c = std::min(c, n.capacity);
    value = terms.sigma0 / c;
  }
  return detail::single(BoundKind::kDelay, BoundMethod::kPriority, 0.0, value, 0.0, 0.0, 0.0);
}

/// Bounds of one kind over a sigma grid.
inline BoundReport sweep_sigma(const PathSpec& path, const NetParams& params, std::span<const double> sigmas,
                               BoundKind kind, BoundMethod method) {
  detail::require(method == BoundMethod::kClosedForm || method == BoundMethod::kOptimized ||
                      method == BoundMethod::kOldBaseline,
                  "sigma sweeps need a statistical method");
  BoundReport out{kind, method, {}, params.alpha_net, params.m_net};
  std::vector<double> sorted(sigmas.begin(), sigmas.end());
  std::sort(sorted.begin(), sorted.end());
  for (double s : sorted) {
    const auto terms = path_terms(path, params, s);
    double value = 0.0;
    if (method == BoundMethod::kOldBaseline) {
      const auto base = old_conv_baseline(terms);
      value = kind == BoundKind::kDelay ? base.delay : base.backlog;
    } else if (method == BoundMethod::kOptimized && kind == BoundKind::kDelay) {
      value = delay_optimized(terms).delay;
    } else {
      const auto cf = closed_form(terms);
      value = kind == BoundKind::kDelay ? cf.delay : cf.backlog;
    }
    out.points.push_back({s, value, violation_bound(params, s)});
  }
  return out;
}

}  // namespace netcalc
