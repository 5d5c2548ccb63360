// Scenario configuration: JSON text with unit-tagged quantities.

#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "netcalc/netservice.hpp"
#include "netcalc/scenarios.hpp"

namespace netcalc {

enum class Dimension { kRate, kBits, kTime };

namespace detail {

[[noreturn]] inline void config_error(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::kConfig, "field '" + field + "': " + msg);
}

inline const char* unit_list(Dimension d) {
  switch (d) {
    case Dimension::kRate: return "bps, Kbps, Mbps, Gbps";
    case Dimension::kBits: return "b, Kb, Mb, Gb";
    case Dimension::kTime: return "s, ms, us";
  }
  return "";
}

inline std::optional<double> unit_factor(Dimension d, const std::string& u) {
  switch (d) {
    case Dimension::kRate:
      if (u == "bps") return 1.0;
      if (u == "Kbps" || u == "kbps") return 1e3;
      if (u == "Mbps") return 1e6;
      if (u == "Gbps") return 1e9;
      break;
    case Dimension::kBits:
      if (u == "b" || u == "bit" || u == "bits") return 1.0;
      if (u == "Kb" || u == "kb") return 1e3;
      if (u == "Mb") return 1e6;
      if (u == "Gb") return 1e9;
      break;
    case Dimension::kTime:
      if (u == "s") return 1.0;
      if (u == "ms") return 1e-3;
      if (u == "us") return 1e-6;
      break;
  }
  return std::nullopt;
}

}  // namespace detail

/// Parses "100 Mbps", "300Kb", "-10 ms", "+inf". A bare 0 needs no unit.
inline double parse_quantity(const std::string& text, Dimension dim, const std::string& field, bool allow_inf = false) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s == "+inf" || s == "inf" || s == "-inf") {
    if (!allow_inf) detail::config_error(field, "infinite value not allowed here");
    return s == "-inf" ? -kInf : kInf;
  }
  const char* begin = s.data() + (s.size() > 0 && s[0] == '+' ? 1 : 0);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || !std::isfinite(v)) detail::config_error(field, "cannot parse number in '" + text + "'");
  const std::string unit(ptr, static_cast<const char*>(s.data() + s.size()));
  if (unit.empty()) {
    if (v == 0.0) return 0.0;
    detail::config_error(field, "missing unit in '" + text + "' (expected one of " + detail::unit_list(dim) + ")");
  }
  auto f = detail::unit_factor(dim, unit);
  if (!f) detail::config_error(field, "unknown unit '" + unit + "' (expected one of " + detail::unit_list(dim) + ")");
  return v * *f;
}

struct AlphaGrid {
  double min = 1e-7;
  double max = 1e-3;
  std::size_t points = 50;

  std::vector<double> values() const { return log_grid(min, max, points); }
};

enum class SimMode { kAdversarial, kMonteCarlo };

struct SimulateConfig {
  SimMode mode = SimMode::kAdversarial;
  double nu = units::kMs;
  std::size_t horizon = 1000;
  std::size_t warmup = 100;
  std::size_t reps = 100;
};

enum class TrafficModel { kDeterministic, kMmoo };

struct ScenarioConfig {
  TrafficModel traffic = TrafficModel::kDeterministic;
  TimeModel time_model = TimeModel::continuous();
  double slot = units::kMs;
  double capacity = 100 * units::kMbps;
  std::vector<std::size_t> hops{10};
  std::vector<std::vector<double>> deltas{{0.0}};  // one entry per scenario, size 1 or H
  RateBurst through{1.5 * units::kMbps, 300 * units::kKb};
  RateBurst cross{88.5 * units::kMbps, 300 * units::kKb};
  MmooScenario mmoo;
  std::vector<double> epsilons{1e-9};
  std::vector<double> sigma_grid;
  std::vector<double> backlog_thresholds;
  std::optional<double> gamma;
  AlphaGrid alpha_grid;
  std::uint64_t seed = 1;
  SimulateConfig simulate;

  bool statistical() const { return traffic == TrafficModel::kMmoo; }

  /// Path for a deterministic scenario; statistical paths depend on alpha.
  PathSpec det_path(std::size_t h, const std::vector<double>& delta) const {
    std::vector<DeltaNode> nodes;
    for (std::size_t k = 0; k < h; ++k) nodes.push_back({capacity, delta.size() == 1 ? delta[0] : delta[k], cross});
    return PathSpec(nodes, through);
  }

  PathSpec stat_path(std::size_t h, const std::vector<double>& delta, double alpha) const {
    std::vector<DeltaNode> nodes;
    const EbbFlow c = aggregate_iid_ebb(mmoo.source, mmoo.n_cross, alpha);
    for (std::size_t k = 0; k < h; ++k) nodes.push_back({capacity, delta.size() == 1 ? delta[0] : delta[k], c});
    return PathSpec(nodes, aggregate_iid_ebb(mmoo.source, mmoo.n_through, alpha));
  }
};

namespace detail {

using Json = nlohmann::json;

inline std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

inline double quantity(const Json& j, Dimension d, const std::string& field, bool allow_inf = false) {
  if (j.is_string()) return parse_quantity(j.get<std::string>(), d, field, allow_inf);
  if (j.is_number() && j.get<double>() == 0.0) return 0.0;
  config_error(field, "expected a unit-tagged string such as \"" +
                          std::string(d == Dimension::kRate ? "100 Mbps" : d == Dimension::kBits ? "300 Kb" : "1 ms") +
                          "\"");
}

inline double number(const Json& j, const std::string& field) {
  if (!j.is_number()) config_error(field, "expected a number");
  return j.get<double>();
}

inline std::size_t count(const Json& j, const std::string& field, std::size_t min = 0) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min)) {
    config_error(field, "expected an integer >= " + std::to_string(min));
  }
  return j.get<std::size_t>();
}

inline void only_keys(const Json& j, const std::string& field, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_error(field.empty() ? "<root>" : field, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) config_error(join(field, k), "unknown key");
  }
}

// A list, a single value, or {"from", "to", "points"} (linear) for quantities.
inline std::vector<double> quantity_list(const Json& j, Dimension d, const std::string& field) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(quantity(j[i], d, field + "[" + std::to_string(i) + "]"));
  } else if (j.is_object()) {
    only_keys(j, field, {"from", "to", "points"});
    for (const char* k : {"from", "to", "points"})
      if (!j.contains(k)) config_error(join(field, k), "missing");
    const double a = quantity(j["from"], d, join(field, "from"));
    const double b = quantity(j["to"], d, join(field, "to"));
    const std::size_t n = count(j["points"], join(field, "points"), 2);
    for (std::size_t i = 0; i < n; ++i) out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    out.push_back(quantity(j, d, field));
  }
  return out;
}

inline std::vector<std::size_t> hops_list(const Json& j, const std::string& field) {
  std::vector<std::size_t> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(count(j[i], field + "[" + std::to_string(i) + "]", 1));
  } else if (j.is_object()) {
    only_keys(j, field, {"from", "to", "step"});
    if (!j.contains("from") || !j.contains("to")) config_error(field, "needs 'from' and 'to'");
    const std::size_t a = count(j["from"], join(field, "from"), 1);
    const std::size_t b = count(j["to"], join(field, "to"), 1);
    const std::size_t step = j.contains("step") ? count(j["step"], join(field, "step"), 1) : 1;
    if (b < a) config_error(join(field, "to"), "must be >= from");
    for (std::size_t h = a; h <= b; h += step) out.push_back(h);
  } else {
    out.push_back(count(j, field, 1));
  }
  if (out.empty()) config_error(field, "empty");
  return out;
}

inline RateBurst rate_burst(const Json& j, const std::string& field) {
  only_keys(j, field, {"rate", "burst"});
  if (!j.contains("rate") || !j.contains("burst")) config_error(field, "needs 'rate' and 'burst'");
  RateBurst rb{quantity(j["rate"], Dimension::kRate, join(field, "rate")),
               quantity(j["burst"], Dimension::kBits, join(field, "burst"))};
  if (rb.rho < 0) config_error(join(field, "rate"), "must be >= 0");
  if (rb.sigma < 0) config_error(join(field, "burst"), "must be >= 0");
  return rb;
}

inline double probability(const Json& j, const std::string& field) {
  const double p = number(j, field);
  if (!(p > 0 && p < 1)) config_error(field, "must be in (0, 1)");
  return p;
}

}  // namespace detail

/// Parses and validates a configuration. Throws Error(kConfig) with the field
/// path on malformed input and Error(kUnstable) for overloaded scenarios.
inline ScenarioConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  only_keys(j, "",
            {"traffic", "time_model", "slot", "capacity", "hops", "delta", "through", "cross", "source", "n_through",
             "n_cross", "epsilon", "sigma_grid", "backlog_thresholds", "gamma", "alpha_grid", "seed", "simulate"});
  ScenarioConfig c;
  if (j.contains("traffic")) {
    const auto& t = j["traffic"];
    if (t == "deterministic")
      c.traffic = TrafficModel::kDeterministic;
    else if (t == "mmoo")
      c.traffic = TrafficModel::kMmoo;
    else
      config_error("traffic", "expected \"deterministic\" or \"mmoo\"");
  }
  if (j.contains("slot")) {
    c.slot = quantity(j["slot"], Dimension::kTime, "slot");
    if (!(c.slot > 0)) config_error("slot", "must be > 0");
  }
  if (j.contains("time_model")) {
    const auto& t = j["time_model"];
    if (t == "continuous")
      c.time_model = TimeModel::continuous();
    else if (t == "discrete")
      c.time_model = TimeModel::discrete(c.slot);
    else
      config_error("time_model", "expected \"continuous\" or \"discrete\"");
  }
  if (j.contains("capacity")) {
    c.capacity = quantity(j["capacity"], Dimension::kRate, "capacity");
    if (!(c.capacity > 0)) config_error("capacity", "must be > 0");
  }
  if (j.contains("hops")) c.hops = hops_list(j["hops"], "hops");
  if (j.contains("delta")) {
    const auto& d = j["delta"];
    c.deltas.clear();
    auto one = [&](const Json& v, const std::string& f) {
      std::vector<double> out;
      if (v.is_array()) {
        if (v.empty()) config_error(f, "empty per-node list");
        for (std::size_t k = 0; k < v.size(); ++k)
          out.push_back(quantity(v[k], Dimension::kTime, f + "[" + std::to_string(k) + "]", true));
      } else {
        out.push_back(quantity(v, Dimension::kTime, f, true));
      }
      return out;
    };
    if (d.is_array()) {
      for (std::size_t i = 0; i < d.size(); ++i) c.deltas.push_back(one(d[i], "delta[" + std::to_string(i) + "]"));
    } else {
      c.deltas.push_back(one(d, "delta"));
    }
    if (c.deltas.empty()) config_error("delta", "empty");
  }
  for (std::size_t i = 0; i < c.deltas.size(); ++i) {
    if (c.deltas[i].size() == 1) continue;
    for (std::size_t h : c.hops)
      if (h != c.deltas[i].size())
        config_error("delta[" + std::to_string(i) + "]", "per-node list length differs from hops " + std::to_string(h));
  }
  if (j.contains("through")) c.through = rate_burst(j["through"], "through");
  if (j.contains("cross")) c.cross = rate_burst(j["cross"], "cross");
  if (j.contains("source")) {
    const auto& s = j["source"];
    only_keys(s, "source", {"peak", "p_on_to_off", "p_off_to_on"});
    if (s.contains("peak")) c.mmoo.source.peak = quantity(s["peak"], Dimension::kRate, "source.peak");
    if (!(c.mmoo.source.peak > 0)) config_error("source.peak", "must be > 0");
    if (s.contains("p_on_to_off")) c.mmoo.source.p_on_to_off = probability(s["p_on_to_off"], "source.p_on_to_off");
    if (s.contains("p_off_to_on")) c.mmoo.source.p_off_to_on = probability(s["p_off_to_on"], "source.p_off_to_on");
  }
  c.mmoo.source.slot = c.slot;
  c.mmoo.capacity = c.capacity;
  if (j.contains("n_through")) c.mmoo.n_through = count(j["n_through"], "n_through", 1);
  if (j.contains("n_cross")) c.mmoo.n_cross = count(j["n_cross"], "n_cross", 0);
  if (j.contains("epsilon")) {
    const auto& e = j["epsilon"];
    c.epsilons.clear();
    if (e.is_array()) {
      for (std::size_t i = 0; i < e.size(); ++i) c.epsilons.push_back(number(e[i], "epsilon[" + std::to_string(i) + "]"));
    } else {
      c.epsilons.push_back(number(e, "epsilon"));
    }
    if (c.epsilons.empty()) config_error("epsilon", "empty");
    for (std::size_t i = 0; i < c.epsilons.size(); ++i)
      if (!(c.epsilons[i] > 0 && c.epsilons[i] < 1)) config_error("epsilon[" + std::to_string(i) + "]", "must be in (0, 1)");
  }
  if (j.contains("sigma_grid")) {
    c.sigma_grid = quantity_list(j["sigma_grid"], Dimension::kBits, "sigma_grid");
    for (double s : c.sigma_grid)
      if (s < 0) config_error("sigma_grid", "values must be >= 0");
  }
  if (j.contains("backlog_thresholds")) {
    c.backlog_thresholds = quantity_list(j["backlog_thresholds"], Dimension::kBits, "backlog_thresholds");
    for (double s : c.backlog_thresholds)
      if (s < 0) config_error("backlog_thresholds", "values must be >= 0");
  }
  if (j.contains("gamma")) {
    c.gamma = quantity(j["gamma"], Dimension::kRate, "gamma");
    if (!(*c.gamma > 0)) config_error("gamma", "must be > 0");
  }
  if (j.contains("alpha_grid")) {
    const auto& a = j["alpha_grid"];
    only_keys(a, "alpha_grid", {"min", "max", "points"});
    if (a.contains("min")) c.alpha_grid.min = number(a["min"], "alpha_grid.min");
    if (a.contains("max")) c.alpha_grid.max = number(a["max"], "alpha_grid.max");
    if (a.contains("points")) c.alpha_grid.points = count(a["points"], "alpha_grid.points", 1);
    if (!(c.alpha_grid.min > 0)) config_error("alpha_grid.min", "must be > 0");
    if (!(c.alpha_grid.max >= c.alpha_grid.min)) config_error("alpha_grid.max", "must be >= min");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    only_keys(s, "simulate", {"mode", "nu", "horizon", "warmup", "reps"});
    if (s.contains("mode")) {
      if (s["mode"] == "adversarial")
        c.simulate.mode = SimMode::kAdversarial;
      else if (s["mode"] == "monte_carlo")
        c.simulate.mode = SimMode::kMonteCarlo;
      else
        config_error("simulate.mode", "expected \"adversarial\" or \"monte_carlo\"");
    }
    if (s.contains("nu")) {
      c.simulate.nu = quantity(s["nu"], Dimension::kTime, "simulate.nu");
      if (!(c.simulate.nu > 0)) config_error("simulate.nu", "must be > 0");
    }
    if (s.contains("horizon")) c.simulate.horizon = count(s["horizon"], "simulate.horizon", 0);
    if (s.contains("warmup")) c.simulate.warmup = count(s["warmup"], "simulate.warmup", 0);
    if (s.contains("reps")) c.simulate.reps = count(s["reps"], "simulate.reps", 1);
  }

  if (c.statistical()) {
    const double load = static_cast<double>(c.mmoo.n_through + c.mmoo.n_cross) * c.mmoo.source.mean_rate();
    if (!(load < c.capacity)) throw Error(ErrorCode::kUnstable, "mean load of the On-Off flows >= capacity", 1);
  } else {
    for (std::size_t h : c.hops)
      for (const auto& d : c.deltas) stability_check(c.det_path(h, d));
  }
  return c;
}

inline ScenarioConfig load_config(std::istream& is) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace netcalc
