// Min-plus operators on piecewise-linear Curves.
//
// Convolution and deconvolution are computed exactly: each operator is
// expanded into a finite family of linear pieces (one per pair of input
// segments) and the result is the lower (conv) or upper (deconv) envelope
// of that family. conv_grid is the uniform-grid fallback and doubles as the
// reference the exact path is checked against.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "netcalc/curve.hpp"

namespace netcalc {

namespace detail {

/// Line on the open domain (lo, hi); value_lo is the limit at lo.
struct LinearPiece {
  double lo;
  double hi;
  double value_lo;
  double slope;

  double at(double t) const { return value_lo + slope * (t - lo); }
  bool covers(double t) const { return t > lo && t < hi; }
};

enum class EnvelopeSide { kLower, kUpper };

inline Curve envelope(std::span<const LinearPiece> pieces, EnvelopeSide side) {
  std::vector<double> cand{0.0};
  cand.reserve(pieces.size() * 4);
  for (const auto& p : pieces) {
    if (p.lo > 0 && std::isfinite(p.lo)) cand.push_back(p.lo);
    if (p.hi > 0 && std::isfinite(p.hi)) cand.push_back(p.hi);
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& a = pieces[i];
    for (std::size_t j = i + 1; j < pieces.size(); ++j) {
      const auto& b = pieces[j];
      if (a.slope == b.slope) continue;
      double lo = std::max(a.lo, b.lo);
      double hi = std::min(a.hi, b.hi);
      if (!(lo < hi)) continue;
      // a.at(t) == b.at(t)
      double t = (b.value_lo - b.slope * b.lo - a.value_lo + a.slope * a.lo) / (a.slope - b.slope);
      if (t > lo && t < hi && t > 0) cand.push_back(t);
    }
  }
  std::sort(cand.begin(), cand.end());
  std::vector<double> times;
  for (double t : cand) {
    if (times.empty() || t - times.back() > Curve::kTimeTolerance * std::fmax(1.0, std::fabs(t))) {
      times.push_back(t);
    }
  }

  std::vector<Segment> segs;
  double horizon = kInf;
  for (std::size_t k = 0; k < times.size(); ++k) {
    double t0 = times[k];
    double probe = k + 1 < times.size() ? 0.5 * (t0 + times[k + 1]) : t0 + 1.0;
    const LinearPiece* best = nullptr;
    double best_value = 0.0;
    for (const auto& p : pieces) {
      if (!p.covers(probe)) continue;
      double v = p.at(probe);
      bool better = best == nullptr || (side == EnvelopeSide::kLower ? v < best_value : v > best_value);
      if (better) {
        best = &p;
        best_value = v;
      }
    }
    if (best == nullptr) {
      require(side == EnvelopeSide::kLower && k > 0, "envelope has an uncovered gap");
      horizon = t0;
      break;
    }
    segs.push_back({t0, best->at(t0), best->slope});
  }
  return Curve(std::move(segs), horizon);
}

/// Closed pieces of a curve: the origin point (value 0) and every segment.
struct ClosedPiece {
  double lo;
  double hi;
  double value;
  double slope;
};

inline std::vector<ClosedPiece> closed_pieces(const Curve& c) {
  std::vector<ClosedPiece> out{{0.0, 0.0, 0.0, 0.0}};
  const auto& segs = c.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    out.push_back({segs[i].start, c.segment_end(i), segs[i].value, segs[i].slope});
  }
  return out;
}

}  // namespace detail

/// (f * g)(t) = inf_{0 <= s <= t} { f(s) + g(t - s) }, exact.
inline Curve conv(const Curve& f, const Curve& g) {
  using detail::LinearPiece;
  auto fp = detail::closed_pieces(f);
  auto gp = detail::closed_pieces(g);
  std::vector<LinearPiece> pieces;
  pieces.reserve(fp.size() * gp.size() * 2);
  for (const auto& a : fp) {
    for (const auto& b : gp) {
      const auto& first = a.slope <= b.slope ? a : b;
      const auto& second = a.slope <= b.slope ? b : a;
      double start = a.lo + b.lo;
      double v0 = a.value + b.value;
      double len1 = first.hi - first.lo;
      double len2 = second.hi - second.lo;
      if (len1 > 0) pieces.push_back({start, start + len1, v0, first.slope});
      if (len2 > 0 && std::isfinite(len1)) {
        double s2 = start + len1;
        pieces.push_back({s2, s2 + len2, v0 + first.slope * len1, second.slope});
      }
    }
  }
  return detail::envelope(pieces, detail::EnvelopeSide::kLower);
}

/// Left fold of conv over a non-empty list.
inline Curve conv_all(std::span<const Curve> curves) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "conv_all needs at least one curve");
  Curve acc = curves.front();
  for (std::size_t i = 1; i < curves.size(); ++i) acc = conv(acc, curves[i]);
  return acc;
}

/// Exact pointwise minimum.
inline Curve pointwise_min(std::span<const Curve> curves) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "pointwise_min needs at least one curve");
  if (curves.size() == 1) return curves.front();
  std::vector<detail::LinearPiece> pieces;
  for (const auto& c : curves) {
    const auto& segs = c.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      pieces.push_back({segs[i].start, c.segment_end(i), segs[i].value, segs[i].slope});
    }
  }
  return detail::envelope(pieces, detail::EnvelopeSide::kLower);
}

namespace detail {

inline void check_deviation_stable(const Curve& f, const Curve& g) {
  if (f.has_infinite_tail()) {
    throw Error(ErrorCode::kUnstableDeconvolution, "arrival curve has an infinite tail");
  }
  if (f.asymptotic_slope() > g.asymptotic_slope()) {
    throw Error(ErrorCode::kUnstableDeconvolution, "asymptotic slope of f exceeds that of g");
  }
}

}  // namespace detail

/// (f / g)(t) = sup_{s >= 0} { f(t + s) - g(s) }, exact on t > 0.
///
/// Equal asymptotic slopes are accepted (the supremum is then attained);
/// a strictly larger slope of f throws UnstableDeconvolution. The value at
/// t = 0 used for backlog bounds is v_dev(f, g), which equals the right
/// limit of the returned curve at 0.
inline Curve deconv(const Curve& f, const Curve& g) {
  detail::check_deviation_stable(f, g);
  using detail::LinearPiece;
  std::vector<LinearPiece> pieces;
  const auto& fs = f.segments();
  const auto& gs = g.segments();

  // s = 0 with g(0) = 0 contributes f itself.
  for (std::size_t i = 0; i < fs.size(); ++i) pieces.push_back({fs[i].start, f.segment_end(i), fs[i].value, fs[i].slope});

  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double b0 = fs[i].start;
    const double b1 = f.segment_end(i);
    const double p = fs[i].slope;
    auto fline = [&](double u) { return fs[i].value + p * (u - b0); };
    for (std::size_t j = 0; j < gs.size(); ++j) {
      const double c0 = gs[j].start;
      const double c1 = g.segment_end(j);
      const double q = gs[j].slope;
      auto gline = [&](double s) { return gs[j].value + q * (s - c0); };
      // s ranges over (max(c0, b0 - t), min(c1, b1 - t)), non-empty for t in (b0 - c1, b1 - c0).
      double dom_lo = std::max(0.0, b0 - c1);
      double dom_hi = b1 - c0;
      if (!(dom_lo < dom_hi)) continue;
      if (p - q <= 0) {
        // Supremum at the left end of the s-interval.
        double bp = b0 - c0;
        if (dom_lo < bp) {
          double hi = std::min(bp, dom_hi);
          // s = b0 - t: value f(b0+) - g(b0 - t), slope q in t.
          pieces.push_back({dom_lo, hi, fs[i].value - gline(b0 - dom_lo), q});
        }
        double lo = std::max(dom_lo, bp);
        if (lo < dom_hi) {
          // s = c0: value f(t + c0) - g(c0+), slope p.
          pieces.push_back({lo, dom_hi, fline(lo + c0) - gs[j].value, p});
        }
      } else {
        // Right end; both ends infinite was excluded by the stability check.
        double bp = b1 - c1;
        if (std::isfinite(c1) && dom_lo < bp) {
          double hi = std::min(bp, dom_hi);
          pieces.push_back({dom_lo, hi, fline(dom_lo + c1) - gline(c1), p});
        }
        double lo = std::max(dom_lo, bp);
        if (std::isfinite(b1) && lo < dom_hi) {
          pieces.push_back({lo, dom_hi, fline(b1) - gline(b1 - lo), q});
        }
      }
    }
  }
  return detail::envelope(pieces, detail::EnvelopeSide::kUpper);
}

/// Vertical deviation sup_{u >= 0} { g(u) - s(u) }: the backlog bound (g / s)(0).
inline double v_dev(const Curve& g, const Curve& s) {
  detail::check_deviation_stable(g, s);
  std::vector<double> cand{0.0};
  for (const auto& seg : g.segments()) cand.push_back(seg.start);
  for (const auto& seg : s.segments()) cand.push_back(seg.start);
  if (s.has_infinite_tail()) cand.push_back(s.finite_until());
  double best = 0.0;
  const double horizon = s.finite_until();
  for (double u : cand) {
    if (u > horizon) continue;
    best = std::max(best, g.eval(u) - s.eval(u));
    if (u < horizon) best = std::max(best, g.right_limit(u) - s.right_limit(u));
  }
  return best;
}

namespace detail {

/// inf{u >= 0 : s(u) >= y} (strict = false) or inf{u >= 0 : s(u) > y} (strict = true).
inline double pseudo_inverse(const Curve& s, double y, bool strict) {
  if (strict ? y < 0 : y <= 0) return 0.0;
  const auto& segs = s.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Segment& seg = segs[i];
    bool hit_start = strict ? seg.value > y : seg.value >= y;
    if (hit_start) return seg.start;
    double e = s.segment_end_value(i);
    bool hit_inside = strict ? e > y : e >= y;
    if (seg.slope > 0 && hit_inside) return seg.start + (y - seg.value) / seg.slope;
  }
  return s.finite_until();
}

}  // namespace detail

/// Horizontal deviation: the smallest d >= 0 with s(t + d) >= g(t) for all t >= 0.
inline double h_dev(const Curve& g, const Curve& s) {
  detail::check_deviation_stable(g, s);
  std::vector<double> levels;
  const auto& ss = s.segments();
  for (std::size_t i = 0; i < ss.size(); ++i) {
    levels.push_back(ss[i].value);
    double e = s.segment_end_value(i);
    if (std::isfinite(e)) levels.push_back(e);
  }
  double best = 0.0;
  auto consider = [&](double v) {
    if (std::isinf(v)) throw Error(ErrorCode::kUnstableDeconvolution, "service curve never reaches arrival curve");
    best = std::max(best, v);
  };
  const auto& gs = g.segments();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const Segment& seg = gs[i];
    const double b0 = seg.start;
    const double b1 = g.segment_end(i);
    const double p = seg.slope;
    // t -> b0+
    consider(detail::pseudo_inverse(s, seg.value, p > 0) - b0);
    if (std::isfinite(b1)) consider(detail::pseudo_inverse(s, g.segment_end_value(i), false) - b1);
    if (p > 0) {
      for (double y : levels) {
        double t = b0 + (y - seg.value) / p;
        if (t > b0 && t < b1) consider(detail::pseudo_inverse(s, y, true) - t);
      }
    }
  }
  return best;
}

/// Uniform-grid min-plus convolution evaluated at t (s sampled at multiples of step and at t).
inline double conv_grid_at(const Curve& f, const Curve& g, double t, double step) {
  if (t <= 0) return 0.0;
  double best = std::min(f.eval(t), g.eval(t));
  const auto n = static_cast<long>(std::floor(t / step));
  for (long k = 1; k <= n; ++k) {
    double s = static_cast<double>(k) * step;
    if (s > t) break;
    best = std::min(best, f.eval(s) + g.eval(t - s));
  }
  return best;
}

/// Grid fallback: samples conv at multiples of step up to horizon and
/// interpolates linearly; the tail continues with the smaller asymptotic slope.
/// Agrees with the exact result within step * (max slope) on continuous inputs.
inline Curve conv_grid(const Curve& f, const Curve& g, double step = 0.01 * units::kMs, double horizon = 0.0) {
  detail::require(step > 0, "grid step must be > 0");
  if (horizon <= 0) {
    double last = 0.0;
    for (const auto& s : f.segments()) last = std::max(last, s.start);
    for (const auto& s : g.segments()) last = std::max(last, s.start);
    horizon = 2.0 * last + 10.0 * step;
  }
  const auto n = static_cast<long>(std::ceil(horizon / step));
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = conv_grid_at(f, g, static_cast<double>(k) * step, step);
  std::vector<Segment> segs;
  for (long k = 0; k < n; ++k) {
    double a = v[static_cast<std::size_t>(k)];
    double b = v[static_cast<std::size_t>(k) + 1];
    double t0 = static_cast<double>(k) * step;
    if (!std::isfinite(b)) {
      if (segs.empty()) segs.push_back({0.0, 0.0, 0.0});
      return Curve(std::move(segs), t0);
    }
    segs.push_back({t0, a, (b - a) / step});
  }
  double tail = std::min(f.asymptotic_slope(), g.asymptotic_slope());
  segs.push_back({static_cast<double>(n) * step, v.back(), std::isfinite(tail) ? tail : 0.0});
  return Curve(std::move(segs));
}

}  // namespace netcalc
