#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "netcalc/experiments.hpp"

using namespace netcalc;
using namespace netcalc::units;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream is(text);
  return load_config(is);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return "";
}

std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  t.write(os);
  return os.str();
}

std::vector<std::string> column(const CsvTable& t, const std::string& name) {
  std::size_t idx = 0;
  while (idx < t.header.size() && t.header[idx] != name) ++idx;
  EXPECT_LT(idx, t.header.size()) << name;
  std::vector<std::string> out;
  for (const auto& r : t.rows) out.push_back(r.at(idx));
  return out;
}

}  // namespace

TEST(Quantity, UnitsAndInfinity) {
  EXPECT_DOUBLE_EQ(parse_quantity("100 Mbps", Dimension::kRate, "f"), 100 * kMbps);
  EXPECT_DOUBLE_EQ(parse_quantity("1.5Mbps", Dimension::kRate, "f"), 1.5 * kMbps);
  EXPECT_DOUBLE_EQ(parse_quantity("300 Kb", Dimension::kBits, "f"), 300 * kKb);
  EXPECT_DOUBLE_EQ(parse_quantity("-10 ms", Dimension::kTime, "f"), -10 * kMs);
  EXPECT_DOUBLE_EQ(parse_quantity("+10 ms", Dimension::kTime, "f"), 10 * kMs);
  EXPECT_EQ(parse_quantity("+inf", Dimension::kTime, "f", true), kInf);
  EXPECT_EQ(parse_quantity("-inf", Dimension::kTime, "f", true), -kInf);
  EXPECT_EQ(parse_quantity("0", Dimension::kTime, "f"), 0.0);
  EXPECT_THROW(parse_quantity("inf", Dimension::kRate, "f"), Error);
  EXPECT_THROW(parse_quantity("10", Dimension::kRate, "f"), Error);
  EXPECT_THROW(parse_quantity("10 MB", Dimension::kBits, "f"), Error);
  EXPECT_THROW(parse_quantity("abc", Dimension::kTime, "f"), Error);
}

TEST(Config, DefaultsAreTheNinetyPercentScenario) {
  const auto c = parse("{}");
  EXPECT_FALSE(c.statistical());
  EXPECT_EQ(c.hops, std::vector<std::size_t>{10});
  const auto b = deterministic_bounds(c.det_path(10, c.deltas[0]));
  EXPECT_NEAR(b.delay.value(), 56.087 * kMs, 1e-3 * kMs);
}

TEST(Config, ParsesFullScenarioFields) {
  const auto c = parse(R"({
    "traffic": "mmoo", "time_model": "discrete", "slot": "2 ms", "capacity": "100 Mbps",
    "source": {"peak": "1.5 Mbps", "p_on_to_off": 0.8, "p_off_to_on": 0.2},
    "n_through": 10, "n_cross": 300,
    "hops": 3,
    "delta": ["-inf", "-10 ms", ["0 ms", "1 ms", "+inf"]],
    "epsilon": [1e-9, 1e-3],
    "sigma_grid": ["0 Kb", "100 Kb"],
    "backlog_thresholds": {"from": "0 Kb", "to": "100 Kb", "points": 3},
    "gamma": "1 Mbps",
    "alpha_grid": {"min": 1e-6, "max": 1e-4, "points": 5},
    "seed": 7,
    "simulate": {"mode": "monte_carlo", "reps": 3}
  })");
  EXPECT_TRUE(c.statistical());
  EXPECT_TRUE(c.time_model.is_discrete());
  EXPECT_DOUBLE_EQ(c.time_model.slot, 2 * kMs);
  EXPECT_DOUBLE_EQ(c.mmoo.source.slot, 2 * kMs);
  EXPECT_EQ(c.mmoo.source.p_on_to_off, 0.8);
  EXPECT_EQ(c.mmoo.n_cross, 300u);
  ASSERT_EQ(c.deltas.size(), 3u);
  EXPECT_EQ(c.deltas[0][0], -kInf);
  EXPECT_EQ(c.deltas[2][2], kInf);
  EXPECT_EQ(c.epsilons.size(), 2u);
  EXPECT_EQ(c.backlog_thresholds, (std::vector<double>{0.0, 50e3, 100e3}));
  EXPECT_DOUBLE_EQ(*c.gamma, 1 * kMbps);
  EXPECT_EQ(c.alpha_grid.points, 5u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.simulate.mode, SimMode::kMonteCarlo);
  EXPECT_EQ(c.simulate.reps, 3u);
}

TEST(Config, HopRanges) {
  EXPECT_EQ(parse(R"({"hops": {"from": 2, "to": 8, "step": 3}})").hops, (std::vector<std::size_t>{2, 5, 8}));
  EXPECT_EQ(parse(R"({"hops": [1, 4]})").hops, (std::vector<std::size_t>{1, 4}));
}

TEST(Config, FieldLevelErrors) {
  EXPECT_NE(config_error(R"({"capacity": "100"})").find("'capacity'"), std::string::npos);
  EXPECT_NE(config_error(R"({"capacity": 100})").find("'capacity'"), std::string::npos);
  EXPECT_NE(config_error(R"({"through": {"rate": "1 Mbps", "burst": "-3 Kb"}})").find("'through.burst'"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"delta": ["0 ms", "3 parsecs"]})").find("'delta[1]'"), std::string::npos);
  EXPECT_NE(config_error(R"({"hops": 0})").find("'hops'"), std::string::npos);
  EXPECT_NE(config_error(R"({"epsilon": 2})").find("'epsilon[0]'"), std::string::npos);
  EXPECT_NE(config_error(R"({"source": {"p_on_to_off": 1.5}})").find("'source.p_on_to_off'"), std::string::npos);
  EXPECT_NE(config_error(R"({"simulate": {"mode": "replay"}})").find("'simulate.mode'"), std::string::npos);
  EXPECT_NE(config_error(R"({"hopz": 3})").find("'hopz'"), std::string::npos);
  EXPECT_NE(config_error(R"({"hops": 4, "delta": [["0 ms", "1 ms"]]})").find("'delta[0]'"), std::string::npos);
  EXPECT_NE(config_error("{ not json").find("parse error"), std::string::npos);
  EXPECT_NE(config_error(R"({"traffic": "poisson"})").find("'traffic'"), std::string::npos);
}

TEST(Config, UnstableScenariosAreRejected) {
  try {
    parse(R"({"cross": {"rate": "99 Mbps", "burst": "1 Kb"}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnstable);
  }
  EXPECT_THROW(parse(R"({"traffic": "mmoo", "n_cross": 700})"), Error);
}

TEST(Experiments, BoundsForHighPriorityIsThreeMs) {
  const auto c = parse(R"({"hops": [1, 10, 30], "delta": "-inf"})");
  const auto tables = run_experiment("bounds", c);
  ASSERT_EQ(tables.size(), 1u);
  const auto& t = tables[0];
  const auto methods = column(t, "method");
  const auto delays = column(t, "delay_s");
  int closed = 0, priority = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (methods[i] == "closed_form") {
      EXPECT_EQ(delays[i], "0.003");
      ++closed;
    }
    if (methods[i] == "priority") {
      EXPECT_EQ(delays[i], "0.003");
      ++priority;
    }
  }
  EXPECT_EQ(closed, 3);
  EXPECT_EQ(priority, 3);
}

TEST(Experiments, DelaySweepDeterministic) {
  const auto c = parse(R"({"hops": {"from": 1, "to": 30}, "delta": ["-inf", "-10 ms", "0 ms", "10 ms", "+inf"]})");
  const auto t = run_experiment("delay-sweep", c).at(0);
  ASSERT_EQ(t.rows.size(), 150u);
  EXPECT_EQ(t.header[0], "H");
  EXPECT_EQ(t.header[2], "closed_form");
  const auto closed = column(t, "closed_form");
  const auto lower = column(t, "lower_bound");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_LE(std::stod(lower[i]), std::stod(closed[i]) * (1 + 1e-8));
    if (i % 5 != 0) {
      EXPECT_GE(std::stod(closed[i]), std::stod(closed[i - 1]));
    }
  }
  // H = 10, Delta = 0
  EXPECT_EQ(t.rows[9 * 5 + 2][0], "10");
  EXPECT_NEAR(std::stod(t.rows[9 * 5 + 2][2]), 56.087e-3, 1e-6);
  EXPECT_EQ(t.rows[9 * 5 + 2][4], "0.033");
}

TEST(Experiments, StatisticalSweepEchoesChoices) {
  const auto c = parse(R"({"traffic": "mmoo", "time_model": "discrete", "hops": [2], "delta": ["0 ms", "+inf"],
                           "alpha_grid": {"min": 1e-7, "max": 1e-3, "points": 50}})");
  const auto t = run_experiment("delay-sweep", c).at(0);
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& r : t.rows) {
    EXPECT_FALSE(column(t, "alpha_optimized").front().empty());
    EXPECT_EQ(r[4], "");  // no lower bound for statistical scenarios
  }
  const double fifo_opt = std::stod(t.rows[0][3]);
  const double fifo_old = std::stod(t.rows[0][5]);
  EXPECT_LT(fifo_opt, fifo_old);
  EXPECT_NEAR(fifo_opt, 8.17e-3, 0.05e-3);
  EXPECT_EQ(t.rows[1][3], t.rows[1][5]);
}

TEST(Experiments, BacklogTailSplitsIntoTwoGroups) {
  const auto c = parse(R"({"traffic": "mmoo", "time_model": "discrete", "hops": 10,
                           "delta": ["-inf", "-10 ms", "0 ms", "10 ms", "+inf"],
                           "backlog_thresholds": ["1000 Kb", "2000 Kb"]})");
  const auto t = run_experiment("backlog-tail", c).at(0);
  ASSERT_EQ(t.rows.size(), 10u);
  const auto v = column(t, "violation_bound");
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> decades;
    for (std::size_t i = 0; i < 5; ++i) decades.push_back(std::log10(std::stod(v[i * 2 + k])));
    for (std::size_t i = 1; i < 5; ++i) EXPECT_LE(decades[i - 1], decades[i] + 1e-9);
    // Small and negative Delta stay together; the low-priority case is far apart.
    const double spread = decades[3] - decades[0];
    const double gap = decades[4] - decades[3];
    EXPECT_GT(gap, spread) << "threshold " << k;
  }
}

TEST(Experiments, OutputBurstAndLowerBound) {
  const auto c = parse(R"({"hops": [10], "delta": ["0 ms", "10 ms"]})");
  const auto ob = run_experiment("output-burst", c).at(0);
  EXPECT_EQ(column(ob, "output_burst_bits"), (std::vector<std::string>{"345000", "477750"}));
  const auto lb = run_experiment("lower-bound", c).at(0);
  EXPECT_EQ(column(lb, "backlog_lower_bits")[0], "345000");
  EXPECT_EQ(column(lb, "delay_lower_s")[0], "0.033");
}

TEST(Experiments, AdversarialSimulationIsBracketed) {
  const auto c = parse(R"({"hops": [3], "delta": ["0 ms"], "simulate": {"mode": "adversarial"}})");
  const auto tables = run_experiment("simulate", c);
  ASSERT_EQ(tables.size(), 2u);
  const auto& s = tables[0];
  const double w = std::stod(column(s, "w_max_s")[0]);
  EXPECT_LE(w, std::stod(column(s, "delay_upper_s")[0]));
  EXPECT_GE(w, std::stod(column(s, "delay_lower_s")[0]) - 1e-3);
  EXPECT_EQ(column(s, "drained")[0], "1");
  EXPECT_GT(tables[1].rows.size(), 10u);
}

TEST(Experiments, MonteCarloIsReproducible) {
  const auto text = R"({"traffic": "mmoo", "time_model": "discrete", "hops": 2, "delta": "0 ms", "epsilon": 1e-2,
                        "alpha_grid": {"min": 1e-6, "max": 1e-4, "points": 8},
                        "simulate": {"mode": "monte_carlo", "horizon": 200, "warmup": 20, "reps": 3}, "seed": 5})";
  const auto a = to_csv(run_experiment("simulate", parse(text)).at(0));
  const auto b = to_csv(run_experiment("simulate", parse(text)).at(0));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find(",600,5\n"), std::string::npos) << a;
}

TEST(Experiments, WrongTrafficOrSubcommand) {
  const auto det = parse("{}");
  EXPECT_THROW(run_experiment("frobnicate", det), Error);
  EXPECT_THROW(run_experiment("backlog-tail", det), Error);
  try {
    run_experiment("simulate", parse(R"({"traffic": "mmoo"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Csv, QuotingAndNumbers) {
  CsvTable t{"x", {"a", "b"}, {{"1,2", "say \"hi\""}, {csv_num(kInf), csv_num(std::nan(""))}}};
  EXPECT_EQ(to_csv(t), "a,b\n\"1,2\",\"say \"\"hi\"\"\"\ninf,\n");
  EXPECT_EQ(csv_num(0.1 + 0.2), "0.3");
  EXPECT_EQ(csv_num(56.08695652173913e-3), "0.0560869565");
}

TEST(Config, ShippedExamplesParse) {
  for (const char* name : {"det90_delay_sweep", "mmoo_delay_sweep", "mmoo_backlog_tail", "mmoo_output_burst",
                           "det90_adversarial", "mmoo_monte_carlo"}) {
    std::ifstream in(std::string(NETCALC_CONFIG_DIR) + "/" + name + ".json");
    ASSERT_TRUE(in) << name;
    EXPECT_NO_THROW(load_config(in)) << name;
  }
}
