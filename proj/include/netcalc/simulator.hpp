// Slotted fluid simulation of a tandem of Delta-scheduled links.
//
// Arrivals of a slot are available at its start. Every node transmits up to
// C_h * slot bits per slot in increasing tag order, where a through chunk
// arriving in slot a has tag a + Delta^h / slot and a cross chunk tag a.
// Equal tags go to cross traffic. Through departures of a slot reach the next
// node in the same slot.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <ostream>
#include <random>
#include <vector>

#include "netcalc/scheduler.hpp"
#include "netcalc/trace.hpp"

namespace netcalc {

struct SimOptions {
  std::size_t max_drain_slots = 1'000'000;  // extra empty slots to flush queues after the horizon
};

struct SimMetrics {
  double slot = 0.0;
  std::vector<double> backlog;  // B at the start of slot k, after its arrivals
  std::vector<double> delay;    // W at the start of slot k, seconds (+inf if never served)
  double b_max = 0.0;
  double w_max = 0.0;
  bool drained = true;
  // Per node, per simulated slot (horizon plus drain).
  std::vector<std::vector<double>> through_departures;
  std::vector<std::vector<double>> cross_departures;

  /// Fraction of slots in [first, end) with W > d.
  double delay_exceedance(double d, std::size_t first = 0) const { return exceed(delay, d, first); }
  double backlog_exceedance(double b, std::size_t first = 0) const { return exceed(backlog, b, first); }

 private:
  static double exceed(const std::vector<double>& v, double x, std::size_t first) {
    if (first >= v.size()) return 0.0;
    auto n = std::count_if(v.begin() + static_cast<std::ptrdiff_t>(first), v.end(), [x](double y) { return y > x; });
    return static_cast<double>(n) / static_cast<double>(v.size() - first);
  }
};

namespace detail {

struct Chunk {
  double tag;
  double bits;
};

/// Serves up to budget bits from two FIFO queues by tag; ties go to cross.
inline void serve_by_tag(std::deque<Chunk>& thr, std::deque<Chunk>& crs, double budget, double& thr_out,
                         double& crs_out) {
  while (budget > 0.0 && (!thr.empty() || !crs.empty())) {
    bool take_cross = thr.empty() || (!crs.empty() && crs.front().tag <= thr.front().tag);
    auto& q = take_cross ? crs : thr;
    Chunk& c = q.front();
    double served = std::min(budget, c.bits);
    budget -= served;
    c.bits -= served;
    (take_cross ? crs_out : thr_out) += served;
    if (c.bits <= 0.0) q.pop_front();
  }
}

/// Backlog and virtual delay of the through flow from per-slot arrivals and
/// network departures. D is interpolated linearly within a slot.
inline void through_metrics(const std::vector<double>& arrivals, const std::vector<double>& departures,
                            SimMetrics& m) {
  const std::size_t horizon = arrivals.size();
  std::vector<double> d_cum(departures.size() + 1, 0.0);
  for (std::size_t k = 0; k < departures.size(); ++k) d_cum[k + 1] = d_cum[k] + departures[k];
  m.backlog.assign(horizon, 0.0);
  m.delay.assign(horizon, 0.0);
  double a_cum = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < horizon; ++k) {
    a_cum += arrivals[k];
    m.backlog[k] = std::max(0.0, a_cum - d_cum[k]);
    const double target = a_cum - 1e-9 * std::max(1.0, a_cum);
    j = std::max(j, k);
    while (j < d_cum.size() && d_cum[j] < target) ++j;
    double w;
    if (j == d_cum.size()) {
      w = kInf;
    } else if (j == k) {
      w = 0.0;
    } else {
      const double step = d_cum[j] - d_cum[j - 1];
      const double frac = step > 0 ? std::clamp((a_cum - d_cum[j - 1]) / step, 0.0, 1.0) : 1.0;
      w = (static_cast<double>(j - 1 - k) + frac) * m.slot;
    }
    m.delay[k] = w;
    m.b_max = std::max(m.b_max, m.backlog[k]);
    m.w_max = std::max(m.w_max, w);
  }
}

}  // namespace detail

inline SimMetrics simulate_tandem(const PathSpec& path, const Trace& through, const std::vector<Trace>& cross,
                                  const SimOptions& options = {}) {
  through.validate();
  if (cross.size() != path.hops()) {
    throw Error(ErrorCode::kTraceMismatch, "need one cross trace per node");
  }
  for (const auto& c : cross) {
    c.validate();
    if (c.slot != through.slot || c.horizon() != through.horizon()) {
      throw Error(ErrorCode::kTraceMismatch, "traces must share slot and horizon");
    }
  }
  const std::size_t H = path.hops();
  const std::size_t horizon = through.horizon();
  const double slot = through.slot;

  std::vector<std::deque<detail::Chunk>> thr(H), crs(H);
  std::vector<double> budget(H), tag_offset(H);
  for (std::size_t h = 0; h < H; ++h) {
    budget[h] = path.node(h).capacity * slot;
    tag_offset[h] = path.node(h).delta / slot;  // +-inf stays infinite
  }

  SimMetrics m;
  m.slot = slot;
  m.through_departures.assign(H, {});
  m.cross_departures.assign(H, {});

  auto busy = [&] {
    for (std::size_t h = 0; h < H; ++h)
      if (!thr[h].empty() || !crs[h].empty()) return true;
    return false;
  };

  for (std::size_t k = 0; k < horizon + options.max_drain_slots; ++k) {
    if (k >= horizon && !busy()) break;
    const double now = static_cast<double>(k);
    double incoming = k < horizon ? through.bits[k] : 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      if (k < horizon && cross[h].bits[k] > 0.0) crs[h].push_back({now, cross[h].bits[k]});
      if (incoming > 0.0) thr[h].push_back({now + tag_offset[h], incoming});
      double thr_out = 0.0;
      double crs_out = 0.0;
      detail::serve_by_tag(thr[h], crs[h], budget[h], thr_out, crs_out);
      m.through_departures[h].push_back(thr_out);
      m.cross_departures[h].push_back(crs_out);
      incoming = thr_out;
    }
  }
  m.drained = !busy();
  detail::through_metrics(through.bits, m.through_departures.back(), m);
  return m;
}

inline SimMetrics simulate_tandem(const PathSpec& path, const TraceSet& traces, const SimOptions& options = {}) {
  return simulate_tandem(path, traces.through, traces.cross, options);
}

/// slot_index,backlog_bits,delay_s per slot, then a summary row with B_max and W_max.
inline void write_metrics_csv(std::ostream& os, const SimMetrics& m) {
  os << "slot_index,backlog_bits,delay_s\n";
  char buf[128];
  for (std::size_t k = 0; k < m.backlog.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", k, m.backlog[k], m.delay[k]);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "summary,%.9g,%.9g\n", m.b_max, m.w_max);
  os << buf;
}

/// Sum of n independent On-Off chains started in the stationary distribution.
/// Each On source emits peak * slot bits per slot.
inline Trace gen_mmoo_traces(const MmooSource& src, std::size_t n_flows, std::size_t horizon, std::uint64_t seed) {
  src.validate();
  detail::require(horizon >= 1, "horizon must be >= 1");
  std::mt19937_64 rng(seed);
  using Binomial = std::binomial_distribution<std::int64_t>;
  const auto n = static_cast<std::int64_t>(n_flows);
  std::int64_t on = Binomial(n, src.stationary_on())(rng);
  Trace t{src.slot, std::vector<double>(horizon, 0.0)};
  const double per_on = src.bits_per_on_slot();
  for (std::size_t k = 0; k < horizon; ++k) {
    t.bits[k] = static_cast<double>(on) * per_on;
    std::int64_t stay = on > 0 ? Binomial(on, 1.0 - src.p_on_to_off)(rng) : 0;
    std::int64_t wake = n - on > 0 ? Binomial(n - on, src.p_off_to_on)(rng) : 0;
    on = stay + wake;
  }
  return t;
}

/// Independent seed for (master seed, replication, stream).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t rep, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct MonteCarloSetup {
  MmooSource source;
  std::size_t n_through = 10;
  std::size_t n_cross = 590;
  std::size_t horizon = 1000;  // sampled slots per replication
  std::size_t warmup = 100;    // discarded leading slots
  std::size_t reps = 100;
  std::uint64_t seed = 1;
};

struct Proportion {
  std::size_t hits = 0;
  std::size_t samples = 0;

  double frequency() const { return samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0; }

  /// Wilson score interval at normal quantile z.
  std::pair<double, double> wilson(double z = 1.959963984540054) const {
    if (samples == 0) return {0.0, 1.0};
    const double n = static_cast<double>(samples);
    const double p = frequency();
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
  }
};

struct MonteCarloResult {
  Proportion delay;
  Proportion backlog;
  double w_max = 0.0;
  double b_max = 0.0;
};

/// Replication r uses derive_seed(seed, r, 0) for the through aggregate and
/// derive_seed(seed, r, h) for the cross aggregate at node h.
inline MonteCarloResult monte_carlo(const PathSpec& path, const MonteCarloSetup& setup, double delay_threshold,
                                    double backlog_threshold) {
  detail::require(setup.reps >= 1, "monte carlo needs reps >= 1");
  const std::size_t total = setup.warmup + setup.horizon;
  MonteCarloResult out;
  for (std::size_t r = 0; r < setup.reps; ++r) {
    Trace through = gen_mmoo_traces(setup.source, setup.n_through, total, derive_seed(setup.seed, r, 0));
    std::vector<Trace> cross;
    for (std::size_t h = 0; h < path.hops(); ++h) {
      cross.push_back(gen_mmoo_traces(setup.source, setup.n_cross, total, derive_seed(setup.seed, r, h + 1)));
    }
    const auto m = simulate_tandem(path, through, cross);
    for (std::size_t k = setup.warmup; k < total; ++k) {
      out.delay.hits += m.delay[k] > delay_threshold ? 1 : 0;
      out.backlog.hits += m.backlog[k] > backlog_threshold ? 1 : 0;
      out.w_max = std::max(out.w_max, m.delay[k]);
      out.b_max = std::max(out.b_max, m.backlog[k]);
    }
    out.delay.samples += setup.horizon;
    out.backlog.samples += setup.horizon;
  }
  return out;
}

}  // namespace netcalc
