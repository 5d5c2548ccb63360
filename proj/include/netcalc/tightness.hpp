// Worst-case lower bounds for deterministic tandems and the arrival
// scenario that attains them.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "netcalc/bounds.hpp"
#include "netcalc/trace.hpp"

namespace netcalc {

/// L_h = min{sigma_h/(C_h - rho_h), [sigma_h + rho_h [Delta]_+ - C_h [Delta]_-]_+ / C_h}
inline double latency_lh(const DeltaNode& node) {
  node.validate();
  detail::require(is_deterministic(node.cross), "latency needs a rate-burst cross descriptor");
  const auto& c = std::get<RateBurst>(node.cross);
  if (!(c.rho < node.capacity)) throw Error(ErrorCode::kUnstable, "cross rate >= capacity");
  const double busy = c.sigma / (node.capacity - c.rho);
  const double level = c.sigma + scale(c.rho, pos(node.delta)) - scale(node.capacity, neg(node.delta));
  return std::min(busy, pos(level) / node.capacity);
}

struct LowerBounds {
  double backlog = 0.0;  // B_max >= sigma_0 + rho_0 sum L_h
  double delay = 0.0;    // W_max >= sigma_0 / min C_h + sum L_h
  std::vector<double> latencies;
};

inline LowerBounds lower_bounds(const PathSpec& path) {
  detail::require(path.deterministic(), "lower bounds need rate-burst descriptors on every flow");
  stability_check(path);
  const auto& th = std::get<RateBurst>(path.through());
  LowerBounds out;
  double sum = 0.0;
  double c_min = kInf;
  for (const auto& n : path.nodes()) {
    out.latencies.push_back(latency_lh(n));
    sum += out.latencies.back();
    c_min = std::min(c_min, n.capacity);
  }
  out.backlog = th.sigma + th.rho * sum;
  out.delay = th.sigma / c_min + sum;
  return out;
}

struct AdversarialScenario {
  double nu = 0.0;
  std::size_t origin = 0;  // slot index of t = 0
  TraceSet traces;
  std::vector<double> latencies;
  std::vector<std::size_t> burst_slots;  // cross burst slot per node
};

/// Through traffic follows its envelope from t = 0 with the full burst at
/// the origin slot. The cross burst at node h lands one slot (nu) before the
/// through burst can reach that node, sum_{k<h} L_k - [Delta^h]_-. Each burst
/// is delivered in a single slot and followed by rho * slot per slot, so the
/// slotted arrivals never exceed the envelopes.
inline AdversarialScenario adversarial_traces(const PathSpec& path, double nu, double slot, std::size_t horizon = 0) {
  detail::require(slot > 0, "slot must be > 0");
  detail::require(nu > 0, "nu must be > 0");
  const auto low = lower_bounds(path);
  const auto& th = std::get<RateBurst>(path.through());
  const double nu_slots = std::max(1.0, std::round(nu / slot));

  double lead = 0.0;  // slots needed before the origin
  for (const auto& n : path.nodes()) {
    if (std::isfinite(n.delta)) lead = std::max(lead, std::ceil(neg(n.delta) / slot - 1e-9));
  }
  AdversarialScenario out;
  out.nu = nu_slots * slot;
  out.origin = static_cast<std::size_t>(lead + nu_slots);
  out.latencies = low.latencies;
  if (horizon == 0) {
    const double d = deterministic_bounds(path).delay.value();
    horizon = out.origin + static_cast<std::size_t>(std::ceil(2.0 * d / slot)) + 16;
  }
  detail::require(horizon > out.origin, "horizon must extend past the origin slot");

  auto envelope_trace = [&](const RateBurst& rb, std::size_t first) {
    Trace t{slot, std::vector<double>(horizon, 0.0)};
    if (first < horizon) t.bits[first] = rb.sigma;
    for (std::size_t k = first + 1; k < horizon; ++k) t.bits[k] = rb.rho * slot;
    return t;
  };
  out.traces.through = envelope_trace(th, out.origin);

  double reach = 0.0;
  for (std::size_t h = 0; h < path.hops(); ++h) {
    const auto& n = path.node(h);
    const double offset = std::isfinite(n.delta) ? neg(n.delta) : 0.0;
    const double at = static_cast<double>(out.origin) + std::round((reach - offset) / slot) - nu_slots;
    const auto slot_index = static_cast<std::size_t>(std::max(0.0, at));
    out.burst_slots.push_back(slot_index);
    out.traces.cross.push_back(envelope_trace(std::get<RateBurst>(n.cross), slot_index));
    reach += low.latencies[h];
  }
  return out;
}

}  // namespace netcalc
