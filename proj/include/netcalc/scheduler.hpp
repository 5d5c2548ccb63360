// Delta-schedulers on a tandem path and their per-node (leftover) service curves.
//
// A Delta-scheduler serves through traffic arriving at time a ahead of cross
// traffic arriving at time b whenever b > a + delta. delta = 0 is FIFO,
// +inf gives the through flow lowest priority and -inf highest priority.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "netcalc/curve.hpp"
#include "netcalc/traffic.hpp"

namespace netcalc {

struct DeltaNode {
  double capacity = 0.0;  // bits/s
  double delta = 0.0;     // seconds, may be +-inf
  FlowDescriptor cross = RateBurst{};

  double cross_rate() const { return rate_of(cross); }

  void validate() const {
    detail::require(capacity > 0 && std::isfinite(capacity), "node capacity must be > 0");
    detail::require(!std::isnan(delta), "delta must not be NaN");
    std::visit([](const auto& f) { f.validate(); }, cross);
  }
};

class PathSpec {
 public:
  PathSpec(std::vector<DeltaNode> nodes, FlowDescriptor through)
      : nodes_(std::move(nodes)), through_(std::move(through)) {
    detail::require(!nodes_.empty(), "a path needs at least one node (H >= 1)");
    for (const auto& n : nodes_) n.validate();
    std::visit([](const auto& f) { f.validate(); }, through_);
  }

  /// H identical nodes.
  static PathSpec homogeneous(std::size_t hops, const DeltaNode& node, FlowDescriptor through) {
    detail::require(hops >= 1, "a path needs at least one node (H >= 1)");
    return PathSpec(std::vector<DeltaNode>(hops, node), std::move(through));
  }

  std::size_t hops() const noexcept { return nodes_.size(); }
  const std::vector<DeltaNode>& nodes() const noexcept { return nodes_; }
  const DeltaNode& node(std::size_t h) const { return nodes_.at(h); }
  const FlowDescriptor& through() const noexcept { return through_; }
  double through_rate() const { return rate_of(through_); }

  bool deterministic() const {
    if (!is_deterministic(through_)) return false;
    return std::all_of(nodes_.begin(), nodes_.end(), [](const DeltaNode& n) { return is_deterministic(n.cross); });
  }

  bool statistical() const {
    if (is_deterministic(through_)) return false;
    return std::none_of(nodes_.begin(), nodes_.end(), [](const DeltaNode& n) { return is_deterministic(n.cross); });
  }

  PathSpec with_delta(double delta) const {
    auto nodes = nodes_;
    for (auto& n : nodes) n.delta = delta;
    return PathSpec(std::move(nodes), through_);
  }

  /// First h nodes (h >= 1).
  PathSpec prefix(std::size_t h) const {
    detail::require(h >= 1 && h <= nodes_.size(), "prefix length out of range");
    return PathSpec(std::vector<DeltaNode>(nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(h)), through_);
  }

 private:
  std::vector<DeltaNode> nodes_;
  FlowDescriptor through_;
};

/// Delta(theta) = min{theta, Delta}.
inline double delta_clip(double theta, double delta) {
  detail::require(theta >= 0, "theta must be >= 0");
  return std::min(theta, delta);
}

/// [C t - G_c(t - theta + Delta(theta))]_+ I_{t > theta} for a cross envelope curve G_c.
///
/// If G_c grows faster than C somewhere, the result is replaced by its largest
/// nondecreasing minorant, which is still a service curve.
inline Curve leftover_curve(const DeltaNode& node, const Curve& cross_envelope, double theta) {
  node.validate();
  detail::require(!cross_envelope.has_infinite_tail(), "cross envelope must be finite");
  const double lag = theta - delta_clip(theta, node.delta);  // >= 0, +inf for Delta = -inf
  detail::Pwl raw;
  if (std::isinf(lag)) {
    raw.segments = {{0.0, 0.0, node.capacity}};
  } else {
    // C t - G_c(t - lag): G_c(t - lag) is the shifted envelope, 0 for t <= lag.
    const Curve shifted = cross_envelope.shifted_right(lag);
    detail::Pwl g = detail::Pwl::from_curve(shifted);
    for (auto& s : g.segments) {
      s.value = -s.value;
      s.slope = -s.slope;
    }
    raw = g.plus_linear(node.capacity, 0.0);
  }
  return Curve(raw.positive_part().zero_until(theta).monotone_lower().segments);
}

/// Leftover curve for an EBB/rate-burst cross flow with rate relaxation gamma:
/// [C t - [(rho + gamma)(t - theta + Delta(theta)) + sigma]_+]_+ I_{t > theta}.
///
/// gamma = 0 gives the deterministic form.
inline Curve node_curve_ebb(const DeltaNode& node, double gamma, double theta, double sigma) {
  node.validate();
  detail::require(gamma >= 0, "gamma must be >= 0");
  detail::require(theta >= 0, "theta must be >= 0");
  detail::require(sigma >= 0, "sigma must be >= 0");
  const double rate = node.cross_rate() + gamma;
  const double clip = delta_clip(theta, node.delta);
  detail::Pwl raw;
  if (clip == -kInf) {
    raw.segments = {{0.0, 0.0, node.capacity}};
  } else {
    // inner(t) = [rate (t - theta + clip) + sigma]_+ is zero up to t0, then linear.
    const double offset = sigma + rate * (clip - theta);
    const double t0 = rate > 0 ? -offset / rate : (offset > 0 ? 0.0 : kInf);
    if (t0 <= 0) {
      raw.segments = {{0.0, -offset, node.capacity - rate}};
    } else if (std::isinf(t0)) {
      raw.segments = {{0.0, 0.0, node.capacity}};
    } else {
      raw.segments = {{0.0, 0.0, node.capacity}, {t0, node.capacity * t0, node.capacity - rate}};
    }
  }
  return Curve(raw.positive_part().zero_until(theta).monotone_lower().segments);
}

}  // namespace netcalc
