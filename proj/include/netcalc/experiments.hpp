// Subcommand runners: each turns a ScenarioConfig into CSV tables.

#pragma once

#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "netcalc/config.hpp"
#include "netcalc/simulator.hpp"
#include "netcalc/tightness.hpp"

namespace netcalc {

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& os) const {
    auto line = [&](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n") == std::string::npos) {
          os << f;
          continue;
        }
        os << '"';
        for (char c : f) os << (c == '"' ? "\"\"" : std::string(1, c));
        os << '"';
      }
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }
};

/// 9 significant digits; +-inf spelled out, NaN as an empty field.
inline std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string csv_delta(const std::vector<double>& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) out += (i ? ";" : "") + csv_num(d[i]);
  return out;
}

namespace detail {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct StatPoint {
  double alpha = kNan;
  double gamma = kNan;
  double sigma = kNan;
  double closed_delay = kNan;
  double optimized_delay = kNan;
  double baseline_delay = kNan;
  double backlog = kNan;
  double output_rate = kNan;
};

enum class StatObjective { kClosedDelay, kOptimizedDelay, kBaselineDelay, kBacklog };

inline StatPoint stat_point_at(const ScenarioConfig& cfg, std::size_t h, const std::vector<double>& delta, double eps,
                               double alpha) {
  const auto path = cfg.stat_path(h, delta, alpha);
  const auto params = net_params(path, cfg.gamma, cfg.time_model);
  StatPoint p;
  p.alpha = alpha;
  p.gamma = params.gamma;
  p.sigma = sigma_for_epsilon(params, eps);
  const auto terms = path_terms(path, params, p.sigma);
  const auto cf = closed_form(terms);
  p.closed_delay = cf.delay;
  p.backlog = cf.backlog;
  p.optimized_delay = delay_optimized(terms).delay;
  p.baseline_delay = old_conv_baseline(terms).delay;
  p.output_rate = terms.rho0 + terms.gamma;
  return p;
}

inline double objective_value(const StatPoint& p, StatObjective o) {
  switch (o) {
    case StatObjective::kClosedDelay: return p.closed_delay;
    case StatObjective::kOptimizedDelay: return p.optimized_delay;
    case StatObjective::kBaselineDelay: return p.baseline_delay;
    case StatObjective::kBacklog: return p.backlog;
  }
  return kInf;
}

/// One evaluation per alpha on the grid; the best point per objective.
struct StatChoices {
  StatPoint closed, optimized, baseline, backlog;
};

inline StatChoices choose_stat(const ScenarioConfig& cfg, std::size_t h, const std::vector<double>& delta, double eps) {
  StatChoices best;
  bool any = false;
  for (double a : cfg.alpha_grid.values()) {
    if (!mmoo_stable(cfg.mmoo, a)) continue;
    StatPoint p;
    try {
      p = stat_point_at(cfg, h, delta, eps, a);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kConfig) throw;
      continue;
    }
    any = true;
    auto take = [&](StatPoint& slot, StatObjective o) {
      const double v = objective_value(p, o);
      if (std::isfinite(v) && !(objective_value(slot, o) <= v)) slot = p;
    };
    take(best.closed, StatObjective::kClosedDelay);
    take(best.optimized, StatObjective::kOptimizedDelay);
    take(best.baseline, StatObjective::kBaselineDelay);
    take(best.backlog, StatObjective::kBacklog);
  }
  if (!any) throw Error(ErrorCode::kUnstable, "no stable decay rate on the alpha grid", 1);
  return best;
}

inline void require_traffic(const ScenarioConfig& cfg, TrafficModel t, const char* what) {
  if (cfg.traffic != t) {
    throw Error(ErrorCode::kConfig, std::string("field 'traffic': ") + what + " needs traffic \"" +
                                        (t == TrafficModel::kMmoo ? "mmoo" : "deterministic") + "\"");
  }
}

inline bool all_equal(const std::vector<double>& d, double v, std::size_t h) {
  for (std::size_t k = 0; k < h; ++k)
    if ((d.size() == 1 ? d[0] : d[k]) != v) return false;
  return true;
}

}  // namespace detail

inline std::vector<CsvTable> run_bounds(const ScenarioConfig& cfg) {
  using namespace detail;
  CsvTable t{"bounds",
             {"H", "delta_s", "method", "epsilon", "alpha_per_bit", "gamma_bps", "sigma_bits", "output_rate_bps",
              "output_burst_bits", "backlog_bits", "delay_s"},
             {}};
  std::vector<CsvTable> out;
  if (!cfg.statistical()) {
    for (std::size_t h : cfg.hops) {
      for (const auto& d : cfg.deltas) {
        const auto path = cfg.det_path(h, d);
        const auto terms = deterministic_terms(path);
        const auto cf = closed_form(terms);
        const auto base = old_conv_baseline(terms);
        const auto low = lower_bounds(path);
        auto row = [&](const char* m, double rate, double burst, double backlog, double delay) {
          t.rows.push_back({std::to_string(h), csv_delta(d), m, "", "", "0", "", csv_num(rate), csv_num(burst),
                            csv_num(backlog), csv_num(delay)});
        };
        row("closed_form", terms.rho0, cf.backlog, cf.backlog, cf.delay);
        row("optimized", terms.rho0, kNan, kNan, delay_optimized(terms).delay);
        row("old_baseline", kNan, kNan, base.backlog, base.delay);
        row("lower_bound", kNan, kNan, low.backlog, low.delay);
        for (auto [order, v] : {std::pair{PriorityOrder::kThroughLow, kInf}, std::pair{PriorityOrder::kThroughHigh, -kInf}}) {
          if (all_equal(d, v, h)) row("priority", kNan, kNan, kNan, priority_bounds(path, order).value());
        }
      }
    }
    out.push_back(std::move(t));
    return out;
  }
  CsvTable sweep{"bounds_sigma",
                 {"H", "delta_s", "alpha_per_bit", "gamma_bps", "sigma_bits", "violation_bound", "backlog_bits",
                  "closed_form_delay_s", "optimized_delay_s"},
                 {}};
  for (double eps : cfg.epsilons) {
    for (std::size_t h : cfg.hops) {
      for (const auto& d : cfg.deltas) {
        const auto c = choose_stat(cfg, h, d, eps);
        auto row = [&](const char* m, const StatPoint& p, double backlog, double delay) {
          t.rows.push_back({std::to_string(h), csv_delta(d), m, csv_num(eps), csv_num(p.alpha), csv_num(p.gamma),
                            csv_num(p.sigma), csv_num(p.output_rate), csv_num(backlog), csv_num(backlog),
                            csv_num(delay)});
        };
        row("closed_form", c.closed, c.closed.backlog, c.closed.closed_delay);
        row("optimized", c.optimized, kNan, c.optimized.optimized_delay);
        row("old_baseline", c.baseline, kNan, c.baseline.baseline_delay);
        if (eps != cfg.epsilons.front() || cfg.sigma_grid.empty() || !std::isfinite(c.optimized.alpha)) continue;
        const auto path = cfg.stat_path(h, d, c.optimized.alpha);
        const auto params = net_params(path, cfg.gamma, cfg.time_model);
        const auto delays = sweep_sigma(path, params, cfg.sigma_grid, BoundKind::kDelay, BoundMethod::kClosedForm);
        const auto opt = sweep_sigma(path, params, cfg.sigma_grid, BoundKind::kDelay, BoundMethod::kOptimized);
        const auto backlogs = sweep_sigma(path, params, cfg.sigma_grid, BoundKind::kBacklog, BoundMethod::kClosedForm);
        for (std::size_t i = 0; i < delays.points.size(); ++i) {
          sweep.rows.push_back({std::to_string(h), csv_delta(d), csv_num(c.optimized.alpha), csv_num(params.gamma),
                                csv_num(delays.points[i].sigma), csv_num(delays.points[i].violation),
                                csv_num(backlogs.points[i].value), csv_num(delays.points[i].value),
                                csv_num(opt.points[i].value)});
        }
      }
    }
  }
  out.push_back(std::move(t));
  if (!cfg.sigma_grid.empty()) out.push_back(std::move(sweep));
  return out;
}

inline std::vector<CsvTable> run_delay_sweep(const ScenarioConfig& cfg) {
  using namespace detail;
  CsvTable t{"delay_sweep",
             {"H", "delta_s", "closed_form", "optimized", "lower_bound", "old_baseline", "epsilon", "gamma_bps",
              "alpha_closed_form", "alpha_optimized", "alpha_old_baseline"},
             {}};
  if (!cfg.statistical()) {
    for (std::size_t h : cfg.hops) {
      for (const auto& d : cfg.deltas) {
        const auto path = cfg.det_path(h, d);
        const auto terms = deterministic_terms(path);
        t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(closed_form(terms).delay),
                          csv_num(delay_optimized(terms).delay), csv_num(lower_bounds(path).delay),
                          csv_num(old_conv_baseline(terms).delay), "", "0", "", "", ""});
      }
    }
    return {t};
  }
  for (double eps : cfg.epsilons) {
    for (std::size_t h : cfg.hops) {
      for (const auto& d : cfg.deltas) {
        const auto c = choose_stat(cfg, h, d, eps);
        t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(c.closed.closed_delay),
                          csv_num(c.optimized.optimized_delay), "", csv_num(c.baseline.baseline_delay), csv_num(eps),
                          csv_num(c.optimized.gamma), csv_num(c.closed.alpha), csv_num(c.optimized.alpha),
                          csv_num(c.baseline.alpha)});
      }
    }
  }
  return {t};
}

namespace detail {

/// Largest sigma with closed-form backlog <= b, or -1 if even sigma = 0 exceeds b.
inline double sigma_for_backlog(const PathSpec& path, const NetParams& params, double b) {
  auto backlog = [&](double s) { return closed_form(path_terms(path, params, s)).backlog; };
  if (backlog(0.0) > b) return -1.0;
  double lo = 0.0, hi = std::max(1.0, b);
  while (backlog(hi) <= b) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-9 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (backlog(mid) <= b ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

/// P(B > b) bound per threshold, minimized over the alpha grid; capped at 1.
inline std::vector<CsvTable> run_backlog_tail(const ScenarioConfig& cfg) {
  using namespace detail;
  if (cfg.backlog_thresholds.empty()) throw Error(ErrorCode::kConfig, "field 'backlog_thresholds': required");
  CsvTable t{"backlog_tail",
             {"H", "delta_s", "threshold_bits", "violation_bound", "alpha_per_bit", "gamma_bps", "sigma_bits"},
             {}};
  for (std::size_t h : cfg.hops) {
    for (const auto& d : cfg.deltas) {
      for (double b : cfg.backlog_thresholds) {
        if (!cfg.statistical()) {
          const double bound = deterministic_bounds(cfg.det_path(h, d)).backlog.value();
          t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(b), b >= bound ? "0" : "1", "", "0", ""});
          continue;
        }
        double best = 1.0, alpha = kNan, gamma = kNan, sigma = kNan;
        for (double a : cfg.alpha_grid.values()) {
          if (!mmoo_stable(cfg.mmoo, a)) continue;
          try {
            const auto path = cfg.stat_path(h, d, a);
            const auto params = net_params(path, cfg.gamma, cfg.time_model);
            const double s = sigma_for_backlog(path, params, b);
            if (s < 0) continue;
            const double v = violation_bound(params, s);
            if (v < best) {
              best = v;
              alpha = a;
              gamma = params.gamma;
              sigma = s;
            }
          } catch (const Error& e) {
            if (e.code() == ErrorCode::kConfig) throw;
          }
        }
        t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(b), csv_num(best), csv_num(alpha), csv_num(gamma),
                          csv_num(sigma)});
      }
    }
  }
  return {t};
}

inline std::vector<CsvTable> run_output_burst(const ScenarioConfig& cfg) {
  using namespace detail;
  CsvTable t{"output_burst",
             {"H", "delta_s", "epsilon", "output_rate_bps", "output_burst_bits", "alpha_per_bit", "gamma_bps"},
             {}};
  if (!cfg.statistical()) {
    for (std::size_t h : cfg.hops)
      for (const auto& d : cfg.deltas) {
        const auto b = deterministic_bounds(cfg.det_path(h, d));
        t.rows.push_back({std::to_string(h), csv_delta(d), "", csv_num(b.output_flow.rho),
                          csv_num(b.output.value()), "", "0"});
      }
    return {t};
  }
  for (double eps : cfg.epsilons)
    for (std::size_t h : cfg.hops)
      for (const auto& d : cfg.deltas) {
        const auto c = choose_stat(cfg, h, d, eps).backlog;
        t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(eps), csv_num(c.output_rate), csv_num(c.backlog),
                          csv_num(c.alpha), csv_num(c.gamma)});
      }
  return {t};
}

inline std::vector<CsvTable> run_lower_bound(const ScenarioConfig& cfg) {
  using namespace detail;
  require_traffic(cfg, TrafficModel::kDeterministic, "lower-bound");
  CsvTable t{"lower_bound",
             {"H", "delta_s", "latency_sum_s", "backlog_lower_bits", "delay_lower_s", "backlog_upper_bits",
              "delay_upper_s"},
             {}};
  for (std::size_t h : cfg.hops)
    for (const auto& d : cfg.deltas) {
      const auto path = cfg.det_path(h, d);
      const auto low = lower_bounds(path);
      const auto up = deterministic_bounds(path);
      double sum = 0.0;
      for (double l : low.latencies) sum += l;
      t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(sum), csv_num(low.backlog), csv_num(low.delay),
                        csv_num(up.backlog.value()), csv_num(up.delay.value())});
    }
  return {t};
}

inline std::vector<CsvTable> run_simulate(const ScenarioConfig& cfg) {
  using namespace detail;
  if (cfg.simulate.mode == SimMode::kAdversarial) {
    require_traffic(cfg, TrafficModel::kDeterministic, "adversarial simulation");
    CsvTable sum{"simulate",
                 {"H", "delta_s", "slot_s", "nu_s", "w_max_s", "b_max_bits", "delay_lower_s", "delay_upper_s",
                  "backlog_lower_bits", "backlog_upper_bits", "drained"},
                 {}};
    CsvTable slots{"simulate_slots", {"H", "delta_s", "slot_index", "backlog_bits", "delay_s"}, {}};
    for (std::size_t h : cfg.hops)
      for (const auto& d : cfg.deltas) {
        const auto path = cfg.det_path(h, d);
        const auto sc = adversarial_traces(path, cfg.simulate.nu, cfg.slot);
        const auto m = simulate_tandem(path, sc.traces);
        const auto low = lower_bounds(path);
        const auto up = deterministic_bounds(path);
        sum.rows.push_back({std::to_string(h), csv_delta(d), csv_num(cfg.slot), csv_num(sc.nu), csv_num(m.w_max),
                            csv_num(m.b_max), csv_num(low.delay), csv_num(up.delay.value()), csv_num(low.backlog),
                            csv_num(up.backlog.value()), m.drained ? "1" : "0"});
        for (std::size_t k = 0; k < m.backlog.size(); ++k)
          slots.rows.push_back(
              {std::to_string(h), csv_delta(d), std::to_string(k), csv_num(m.backlog[k]), csv_num(m.delay[k])});
      }
    return {sum, slots};
  }
  require_traffic(cfg, TrafficModel::kMmoo, "monte carlo simulation");
  CsvTable t{"simulate",
             {"H", "delta_s", "epsilon", "alpha_per_bit", "gamma_bps", "delay_threshold_s", "backlog_threshold_bits",
              "delay_frequency", "delay_ci_low", "delay_ci_high", "backlog_frequency", "backlog_ci_low",
              "backlog_ci_high", "w_max_s", "b_max_bits", "samples", "seed"},
             {}};
  for (double eps : cfg.epsilons)
    for (std::size_t h : cfg.hops)
      for (const auto& d : cfg.deltas) {
        const auto c = choose_stat(cfg, h, d, eps).optimized;
        MonteCarloSetup setup;
        setup.source = cfg.mmoo.source;
        setup.n_through = cfg.mmoo.n_through;
        setup.n_cross = cfg.mmoo.n_cross;
        setup.horizon = cfg.simulate.horizon;
        setup.warmup = cfg.simulate.warmup;
        setup.reps = cfg.simulate.reps;
        setup.seed = cfg.seed;
        const auto r = monte_carlo(cfg.stat_path(h, d, c.alpha), setup, c.optimized_delay, c.backlog);
        const auto [dl, dh] = r.delay.wilson();
        const auto [bl, bh] = r.backlog.wilson();
        t.rows.push_back({std::to_string(h), csv_delta(d), csv_num(eps), csv_num(c.alpha), csv_num(c.gamma),
                          csv_num(c.optimized_delay), csv_num(c.backlog), csv_num(r.delay.frequency()), csv_num(dl),
                          csv_num(dh), csv_num(r.backlog.frequency()), csv_num(bl), csv_num(bh), csv_num(r.w_max),
                          csv_num(r.b_max), std::to_string(r.delay.samples), std::to_string(cfg.seed)});
      }
  return {t};
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"bounds",       "delay-sweep", "backlog-tail",
                                              "output-burst", "simulate",    "lower-bound"};
  return names;
}

inline std::vector<CsvTable> run_experiment(const std::string& subcommand, const ScenarioConfig& cfg) {
  if (subcommand == "bounds") return run_bounds(cfg);
  if (subcommand == "delay-sweep") return run_delay_sweep(cfg);
  if (subcommand == "backlog-tail") return run_backlog_tail(cfg);
  if (subcommand == "output-burst") return run_output_burst(cfg);
  if (subcommand == "simulate") return run_simulate(cfg);
  if (subcommand == "lower-bound") return run_lower_bound(cfg);
  throw Error(ErrorCode::kConfig, "unknown subcommand '" + subcommand + "'");
}

}  // namespace netcalc
