// Piecewise-linear nondecreasing curves on t >= 0.
//
// A Curve is a list of segments (start, value, slope) where `value` is the
// right limit at `start`. Evaluation is left-continuous: at a breakpoint the
// left limit is returned, and every curve is 0 for t <= 0. A jump at the
// origin (first segment value > 0) models E(t) = rho t + sigma for t > 0.
// An optional finite horizon turns the curve into +inf for t > horizon,
// which is how the shift function delta_a is represented.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "netcalc/core.hpp"

namespace netcalc {

struct Segment {
  double start;
  double value;
  double slope;
};

class Curve {
 public:
  /// Breakpoints closer than this are merged.
  static constexpr double kTimeTolerance = 1e-12;

  Curve() : segments_{{0.0, 0.0, 0.0}} {}

  explicit Curve(std::vector<Segment> segments, double finite_until = kInf)
      : segments_(std::move(segments)), finite_until_(finite_until) {
    normalize();
  }

  static Curve zero() { return Curve(); }

  /// rate * t + burst for t > 0.
  static Curve affine(double rate, double burst) {
    detail::require(rate >= 0 && burst >= 0, "affine curve needs rate >= 0 and burst >= 0");
    return Curve({{0.0, burst, rate}});
  }

  /// rate * [t - latency]_+
  static Curve rate_latency(double rate, double latency) {
    detail::require(rate >= 0 && latency >= 0, "rate-latency curve needs nonnegative parameters");
    if (latency == 0.0) return Curve({{0.0, 0.0, rate}});
    return Curve({{0.0, 0.0, 0.0}, {latency, 0.0, rate}});
  }

  /// delta_a: 0 for t <= a, +inf afterwards.
  static Curve delay(double a) {
    detail::require(a >= 0 && std::isfinite(a), "delta_a needs a finite a >= 0");
    return Curve({{0.0, 0.0, 0.0}}, a);
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  double finite_until() const noexcept { return finite_until_; }
  bool has_infinite_tail() const noexcept { return std::isfinite(finite_until_); }

  /// Left-continuous evaluation.
  double operator()(double t) const { return eval(t); }

  double eval(double t) const {
    if (t <= 0.0) return 0.0;
    if (t > finite_until_) return kInf;
    auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                               [](const Segment& s, double x) { return s.start < x; });
    const Segment& s = *(it - 1);
    return s.value + s.slope * (t - s.start);
  }

  /// lim_{u -> t+} c(u).
  double right_limit(double t) const {
    if (t < 0.0) return 0.0;
    if (t >= finite_until_) return kInf;
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double x, const Segment& s) { return x < s.start; });
    const Segment& s = *(it - 1);
    return s.value + s.slope * (t - s.start);
  }

  /// Slope as t -> inf (+inf when the curve has an infinite tail).
  double asymptotic_slope() const {
    if (has_infinite_tail()) return kInf;
    return segments_.back().slope;
  }

  /// End time of segment i (next start, the horizon, or +inf).
  double segment_end(std::size_t i) const {
    if (i + 1 < segments_.size()) return segments_[i + 1].start;
    return finite_until_;
  }

  /// Left limit at the end of segment i.
  double segment_end_value(std::size_t i) const {
    const Segment& s = segments_[i];
    double end = segment_end(i);
    if (!std::isfinite(end)) return s.slope > 0 ? kInf : s.value;
    return s.value + s.slope * (end - s.start);
  }

  /// f(t - a): conv with delta_a.
  Curve shifted_right(double a) const {
    detail::require(a >= 0 && std::isfinite(a), "shift must be finite and >= 0");
    if (a == 0.0) return *this;
    std::vector<Segment> segs{{0.0, 0.0, 0.0}};
    for (const auto& s : segments_) segs.push_back({s.start + a, s.value, s.slope});
    return Curve(std::move(segs), finite_until_ + a);
  }

  /// c(t) + k for t > 0.
  Curve plus_constant(double k) const {
    detail::require(k >= 0, "vertical offset must be >= 0");
    auto segs = segments_;
    for (auto& s : segs) s.value += k;
    return Curve(std::move(segs), finite_until_);
  }

  bool operator==(const Curve& other) const {
    if (finite_until_ != other.finite_until_ || segments_.size() != other.segments_.size()) return false;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& a = segments_[i];
      const auto& b = other.segments_[i];
      if (a.start != b.start || a.value != b.value || a.slope != b.slope) return false;
    }
    return true;
  }

  std::string describe() const {
    std::string out = "Curve{";
    char buf[128];
    for (const auto& s : segments_) {
      std::snprintf(buf, sizeof buf, "(%.9g,%.9g,%.9g)", s.start, s.value, s.slope);
      out += buf;
    }
    if (has_infinite_tail()) {
      std::snprintf(buf, sizeof buf, " inf after %.9g", finite_until_);
      out += buf;
    }
    return out + "}";
  }

 private:
  void normalize() {
    detail::require(!segments_.empty(), "curve needs at least one segment");
    detail::require(finite_until_ >= 0, "curve horizon must be >= 0");
    detail::require(std::fabs(segments_.front().start) <= kTimeTolerance, "first segment must start at 0");
    segments_.front().start = 0.0;

    std::vector<Segment> out;
    out.reserve(segments_.size());
    for (const auto& raw : segments_) {
      Segment s = raw;
      detail::require(std::isfinite(s.start) && std::isfinite(s.value) && std::isfinite(s.slope),
                      "curve segments must be finite");
      if (s.start >= finite_until_ && !out.empty()) break;
      if (!out.empty()) {
        detail::require(s.start > out.back().start - kTimeTolerance, "segment starts must increase");
        if (s.start - out.back().start <= kTimeTolerance) {
          // Coincident breakpoint: the later segment wins.
          out.back() = {out.back().start, s.value, s.slope};
          continue;
        }
      }
      out.push_back(s);
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
      Segment& s = out[i];
      double tol = 1e-9 * std::fmax(1.0, std::fabs(s.value));
      if (s.slope < 0.0) {
        detail::require(s.slope > -1e-6 * std::fmax(1.0, std::fabs(s.value)), "curve slopes must be >= 0");
        s.slope = 0.0;
      }
      double left = 0.0;
      if (i > 0) {
        const Segment& p = out[i - 1];
        left = p.value + p.slope * (s.start - p.start);
      }
      if (s.value < left) {
        detail::require(s.value > left - tol, "curve must be nondecreasing");
        s.value = left;
      }
    }

    // Merge continuous collinear neighbours.
    std::vector<Segment> merged;
    merged.reserve(out.size());
    for (const auto& s : out) {
      if (!merged.empty()) {
        const Segment& p = merged.back();
        double left = p.value + p.slope * (s.start - p.start);
        double tol = 1e-12 * std::fmax(1.0, std::fabs(left));
        if (std::fabs(left - s.value) <= tol &&
            std::fabs(p.slope - s.slope) <= 1e-12 * std::fmax(1.0, std::fabs(p.slope))) {
          continue;
        }
      }
      merged.push_back(s);
    }
    segments_ = std::move(merged);
  }

  std::vector<Segment> segments_;
  double finite_until_ = kInf;
};

namespace detail {

/// Piecewise-linear function on t > 0 without monotonicity or sign
/// constraints; 0 for t <= 0. Used to assemble service curves before the
/// positive part and monotone closure turn them into Curves.
struct Pwl {
  std::vector<Segment> segments;  // first starts at 0, last extends to +inf

  static Pwl from_curve(const Curve& c) {
    require(!c.has_infinite_tail(), "cannot convert a curve with an infinite tail");
    return Pwl{c.segments()};
  }

  double end(std::size_t i) const { return i + 1 < segments.size() ? segments[i + 1].start : kInf; }

  /// f(t) + rate * t + offset on t > 0.
  Pwl plus_linear(double rate, double offset) const {
    Pwl out = *this;
    for (auto& s : out.segments) {
      s.value += rate * s.start + offset;
      s.slope += rate;
    }
    return out;
  }

  /// Insert a breakpoint at t (no-op if one exists).
  void split_at(double t) {
    if (t <= 0.0 || !std::isfinite(t)) return;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      double e = end(i);
      if (std::fabs(segments[i].start - t) <= Curve::kTimeTolerance) return;
      if (t > segments[i].start && t < e) {
        Segment s = segments[i];
        segments.insert(segments.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                        {t, s.value + s.slope * (t - s.start), s.slope});
        return;
      }
    }
  }

  /// Zero on (0, t].
  Pwl zero_until(double t) const {
    if (t <= 0.0) return *this;
    Pwl out = *this;
    out.split_at(t);
    for (auto& s : out.segments) {
      if (s.start < t - Curve::kTimeTolerance) s = {s.start, 0.0, 0.0};
    }
    return out;
  }

  /// [f]_+
  Pwl positive_part() const {
    Pwl tmp = *this;
    std::vector<double> crossings;
    for (std::size_t i = 0; i < tmp.segments.size(); ++i) {
      const Segment& s = tmp.segments[i];
      if (s.slope == 0.0) continue;
      double tc = s.start - s.value / s.slope;
      if (tc > s.start && tc < tmp.end(i)) crossings.push_back(tc);
    }
    for (double tc : crossings) tmp.split_at(tc);
    for (std::size_t i = 0; i < tmp.segments.size(); ++i) {
      Segment& s = tmp.segments[i];
      double e = tmp.end(i);
      double probe = std::isfinite(e) ? 0.5 * (s.start + e) : s.start + 1.0;
      if (s.value + s.slope * (probe - s.start) <= 0.0) s = {s.start, 0.0, 0.0};
      else if (s.value < 0.0) s.value = 0.0;  // rounding at a crossing
    }
    return tmp;
  }

  /// g(t) = inf_{u >= t} f(u), the largest nondecreasing minorant. Requires f >= 0.
  Pwl monotone_lower() const {
    std::vector<Segment> rev;
    const Segment& last = segments.back();
    double running = last.slope >= 0 ? last.value : 0.0;
    rev.push_back(last.slope >= 0 ? last : Segment{last.start, 0.0, 0.0});
    for (std::size_t k = segments.size() - 1; k-- > 0;) {
      const Segment& s = segments[k];
      double e_t = segments[k + 1].start;
      double end_value = s.value + s.slope * (e_t - s.start);
      if (s.slope < 0.0) {
        double v = std::fmin(end_value, running);
        rev.push_back({s.start, v, 0.0});
        running = v;
      } else if (s.value >= running) {
        rev.push_back({s.start, running, 0.0});
      } else if (end_value <= running) {
        rev.push_back(s);
        running = s.value;
      } else {
        double tc = s.start + (running - s.value) / s.slope;
        rev.push_back({tc, running, 0.0});
        rev.push_back(s);
        running = s.value;
      }
    }
    std::reverse(rev.begin(), rev.end());
    return Pwl{std::move(rev)};
  }

  Curve to_curve() const { return Curve(positive_part().monotone_lower().segments); }
};

}  // namespace detail

}  // namespace netcalc
