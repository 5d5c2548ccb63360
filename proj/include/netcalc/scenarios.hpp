// Standard scenarios: the 90%-load deterministic tandem and the aggregated
// On-Off tandem, plus the decay-rate search for statistical bounds.

#pragma once

#include <functional>
#include <optional>

#include "netcalc/bounds.hpp"

namespace netcalc {

/// C = 100 Mbps, through (1.5 Mbps, 300 Kb), cross (88.5 Mbps, 300 Kb) at every node.
inline PathSpec det90(std::size_t hops, double delta) {
  using namespace units;
  const DeltaNode node{100 * kMbps, delta, RateBurst{88.5 * kMbps, 300 * kKb}};
  return PathSpec::homogeneous(hops, node, RateBurst{1.5 * kMbps, 300 * kKb});
}

struct MmooScenario {
  MmooSource source;
  std::size_t n_through = 10;
  std::size_t n_cross = 590;
  double capacity = 100 * units::kMbps;
};

/// Homogeneous path of aggregated On-Off flows, EBB at decay rates alpha0 (through) and alpha (cross).
inline PathSpec mmoo_path(const MmooScenario& sc, std::size_t hops, double delta, double alpha0, double alpha) {
  const DeltaNode node{sc.capacity, delta, aggregate_iid_ebb(sc.source, sc.n_cross, alpha)};
  return PathSpec::homogeneous(hops, node, aggregate_iid_ebb(sc.source, sc.n_through, alpha0));
}

inline bool mmoo_stable(const MmooScenario& sc, double alpha) {
  const double load = static_cast<double>(sc.n_through + sc.n_cross) * mmoo_effective_bandwidth(sc.source, alpha);
  return load < sc.capacity;
}

struct AlphaChoice {
  double alpha = 0.0;
  double value = kInf;
};

/// Minimizes objective(alpha) over the grid, skipping unstable or failing points.
inline std::optional<AlphaChoice> choose_alpha(const std::vector<double>& grid,
                                               const std::function<double(double)>& objective) {
  std::optional<AlphaChoice> best;
  for (double a : grid) {
    double v = kInf;
    try {
      v = objective(a);
    } catch (const Error&) {
      continue;
    }
    if (std::isfinite(v) && (!best || v < best->value)) best = AlphaChoice{a, v};
  }
  return best;
}

inline std::vector<double> default_alpha_grid() { return log_grid(1e-7, 1e-3, 50); }

}  // namespace netcalc
