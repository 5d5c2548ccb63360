// Slotted arrival traces and their CSV form (slot_index,flow_id,bits).

#pragma once

#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "netcalc/core.hpp"

namespace netcalc {

/// Amount arriving at the start of each slot.
struct Trace {
  double slot = units::kMs;
  std::vector<double> bits;

  std::size_t horizon() const noexcept { return bits.size(); }

  void validate() const {
    detail::require(slot > 0, "trace slot must be > 0");
    for (double b : bits) detail::require(b >= 0 && std::isfinite(b), "trace amounts must be finite and >= 0");
  }

  /// A(k): arrivals in slots 0..k-1.
  std::vector<double> cumulative() const {
    std::vector<double> out(bits.size() + 1, 0.0);
    for (std::size_t k = 0; k < bits.size(); ++k) out[k + 1] = out[k] + bits[k];
    return out;
  }
};

/// Through trace (flow 0) and one cross trace per node (flows 1..H).
struct TraceSet {
  Trace through;
  std::vector<Trace> cross;
};

inline void write_trace_csv(std::ostream& os, const TraceSet& set) {
  os << "slot_index,flow_id,bits\n";
  char buf[96];
  auto emit = [&](const Trace& t, std::size_t flow) {
    for (std::size_t k = 0; k < t.bits.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", k, flow, t.bits[k]);
      os << buf;
    }
  };
  emit(set.through, 0);
  for (std::size_t h = 0; h < set.cross.size(); ++h) emit(set.cross[h], h + 1);
}

/// Reads the CSV written by write_trace_csv. Missing (slot, flow) rows are 0.
inline TraceSet read_trace_csv(std::istream& is, double slot) {
  std::string line;
  detail::require(static_cast<bool>(std::getline(is, line)), "trace CSV is empty");
  std::map<std::size_t, std::map<std::size_t, double>> rows;
  std::size_t horizon = 0;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
      throw Error(ErrorCode::kTraceMismatch, "malformed trace CSV line " + std::to_string(lineno));
    }
    std::size_t k = 0, flow = 0;
    double bits = 0.0;
    try {
      k = std::stoul(a);
      flow = std::stoul(b);
      bits = std::stod(c);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kTraceMismatch, "bad number in trace CSV line " + std::to_string(lineno));
    }
    detail::require(bits >= 0, "trace amounts must be >= 0");
    rows[flow][k] += bits;
    horizon = std::max(horizon, k + 1);
  }
  detail::require(rows.count(0) == 1, "trace CSV has no through flow (flow_id 0)");
  const std::size_t flows = rows.rbegin()->first;
  TraceSet out;
  auto fill = [&](std::size_t flow) {
    Trace t{slot, std::vector<double>(horizon, 0.0)};
    for (const auto& [k, v] : rows[flow]) t.bits[k] = v;
    return t;
  };
  out.through = fill(0);
  for (std::size_t f = 1; f <= flows; ++f) out.cross.push_back(fill(f));
  return out;
}

}  // namespace netcalc
