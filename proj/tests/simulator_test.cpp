#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "netcalc/scenarios.hpp"
#include "netcalc/simulator.hpp"
#include "oracles.hpp"

using namespace netcalc;
using namespace netcalc::units;

namespace {

Trace constant(double bits, std::size_t n) { return Trace{kMs, std::vector<double>(n, bits)}; }

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Random trace clipped slot by slot to a token bucket (rho, sigma).
Trace bucket_trace(std::mt19937_64& rng, const RateBurst& rb, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Trace t{kMs, std::vector<double>(n, 0.0)};
  double tokens = rb.sigma;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) tokens = std::min(rb.sigma, tokens + rb.rho * kMs);
    const double want = u(rng) < 0.2 ? tokens : u(rng) * 2.0 * rb.rho * kMs;
    t.bits[k] = std::min(want, tokens);
    tokens -= t.bits[k];
  }
  return t;
}

}  // namespace

TEST(Simulator, UnderloadedPathDelayWithinOneSlot) {
  const auto path = det90(3, 0.0);
  std::vector<Trace> cross(3, constant(50 * kMbps * kMs, 100));
  const auto m = simulate_tandem(path, constant(10 * kMbps * kMs, 100), cross);
  EXPECT_TRUE(m.drained);
  // A batch finishes within its own slot; departures are spread over that slot.
  EXPECT_LE(m.w_max, kMs + 1e-12);
  for (double v : m.backlog) EXPECT_LE(v, 10 * kMbps * kMs + 1e-9);
}

TEST(Simulator, ConservesBitsAndIsWorkConserving) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double d : {-kInf, -2 * kMs, 0.0, 3 * kMs, kInf}) {
    const auto path = det90(4, d);
    Trace through{kMs, std::vector<double>(200)};
    std::vector<Trace> cross(4, Trace{kMs, std::vector<double>(200)});
    for (std::size_t k = 0; k < 200; ++k) {
      through.bits[k] = 20e3 * u(rng);
      for (auto& c : cross) c.bits[k] = 150e3 * u(rng);
    }
    const auto m = simulate_tandem(path, through, cross);
    ASSERT_TRUE(m.drained);
    EXPECT_NEAR(total(m.through_departures.back()), total(through.bits), 1e-6);
    const double cap = 100 * kMbps * kMs;
    std::vector<double> arriving = through.bits;
    arriving.resize(m.through_departures[0].size(), 0.0);
    for (std::size_t h = 0; h < 4; ++h) {
      EXPECT_NEAR(total(m.cross_departures[h]), total(cross[h].bits), 1e-6);
      double queue = 0.0;
      for (std::size_t k = 0; k < arriving.size(); ++k) {
        queue += arriving[k] + (k < 200 ? cross[h].bits[k] : 0.0);
        const double served = m.through_departures[h][k] + m.cross_departures[h][k];
        ASSERT_NEAR(served, std::min(cap, queue), 1e-6) << h << " " << k;
        queue -= served;
      }
      arriving = m.through_departures[h];
    }
  }
}

TEST(Simulator, RejectsMismatchedTraces) {
  const auto path = det90(2, 0.0);
  try {
    simulate_tandem(path, constant(1.0, 10), {constant(1.0, 10)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraceMismatch);
  }
  EXPECT_THROW(simulate_tandem(path, constant(1.0, 10), {constant(1.0, 10), constant(1.0, 9)}), Error);
}

TEST(Simulator, MatchesReferenceFifoAndPriority) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const std::size_t H = 1 + rng() % 4;
    Trace through{kMs, std::vector<double>(60)};
    std::vector<Trace> cross(H, Trace{kMs, std::vector<double>(60)});
    for (std::size_t k = 0; k < 60; ++k) {
      through.bits[k] = u(rng) < 0.3 ? 100e3 * u(rng) : 0.0;
      for (auto& c : cross) c.bits[k] = 120e3 * u(rng);
    }
    const std::vector<double> caps(H, 100 * kMbps * kMs);
    const struct {
      double delta;
      std::vector<std::vector<double>> want;
    } cases[] = {{0.0, oracle::reference_fifo(caps, through, cross, 400)},
                 {-kInf, oracle::reference_priority(caps, through, cross, 400, true)},
                 {kInf, oracle::reference_priority(caps, through, cross, 400, false)}};
    for (const auto& c : cases) {
      const auto m = simulate_tandem(det90(H, c.delta), through, cross);
      for (std::size_t h = 0; h < H; ++h) {
        auto got = m.through_departures[h];
        got.resize(400, 0.0);
        for (std::size_t k = 0; k < 400; ++k) ASSERT_EQ(got[k], c.want[h][k]) << c.delta << " " << h << " " << k;
      }
    }
  }
}

TEST(Simulator, HighPriorityDelayWithinOneSlotOfBound) {
  std::mt19937_64 rng(12);
  const auto path = det90(5, -kInf);
  for (int i = 0; i < 20; ++i) {
    std::vector<Trace> cross;
    for (std::size_t h = 0; h < 5; ++h) cross.push_back(bucket_trace(rng, {88.5 * kMbps, 300 * kKb}, 300));
    const auto m = simulate_tandem(path, bucket_trace(rng, {1.5 * kMbps, 300 * kKb}, 300), cross);
    EXPECT_LE(m.w_max, 3 * kMs + kMs);
  }
}

TEST(Simulator, TokenBucketTracesRespectDeterministicBounds) {
  std::mt19937_64 rng(13);
  for (double d : {-10 * kMs, -1 * kMs, 0.0, 2 * kMs, 10 * kMs, kInf}) {
    for (std::size_t H : {1, 3, 6}) {
      const auto path = det90(H, d);
      const auto ub = deterministic_bounds(path);
      for (int i = 0; i < 5; ++i) {
        std::vector<Trace> cross;
        for (std::size_t h = 0; h < H; ++h) cross.push_back(bucket_trace(rng, {88.5 * kMbps, 300 * kKb}, 400));
        const auto m = simulate_tandem(path, bucket_trace(rng, {1.5 * kMbps, 300 * kKb}, 400), cross);
        EXPECT_LE(m.w_max, ub.delay.value() + 1e-9) << d << " " << H;
        EXPECT_LE(m.b_max, ub.backlog.value() + 1e-6) << d << " " << H;
        EXPECT_EQ(m.delay_exceedance(ub.delay.value()), 0.0);
        EXPECT_EQ(m.backlog_exceedance(ub.backlog.value()), 0.0);
      }
    }
  }
}

TEST(Mmoo, LongRunMeanRate) {
  MmooSource src;
  const auto t = gen_mmoo_traces(src, 1, 1'000'000, 77);
  const double rate = total(t.bits) / (1e6 * kMs);
  EXPECT_NEAR(rate, 0.15 * kMbps, 0.02 * 0.15 * kMbps);
  for (double b : t.bits) EXPECT_EQ(std::fmod(b, src.bits_per_on_slot()), 0.0);
}

TEST(Mmoo, Reproducible) {
  MmooSource src;
  const auto a = gen_mmoo_traces(src, 590, 500, derive_seed(5, 1, 2));
  const auto b = gen_mmoo_traces(src, 590, 500, derive_seed(5, 1, 2));
  const auto c = gen_mmoo_traces(src, 590, 500, derive_seed(5, 1, 3));
  EXPECT_EQ(a.bits, b.bits);
  EXPECT_NE(a.bits, c.bits);
  EXPECT_NE(derive_seed(5, 0, 1), derive_seed(5, 1, 0));
}

TEST(MonteCarlo, SingleReplicationMatchesDirectSimulation) {
  MonteCarloSetup setup;
  setup.reps = 1;
  setup.horizon = 300;
  setup.warmup = 50;
  setup.seed = 99;
  const auto path = det90(2, 0.0);
  const auto res = monte_carlo(path, setup, 2 * kMs, 200 * kKb);

  const Trace through = gen_mmoo_traces(setup.source, setup.n_through, 350, derive_seed(99, 0, 0));
  std::vector<Trace> cross;
  for (std::size_t h = 0; h < 2; ++h) cross.push_back(gen_mmoo_traces(setup.source, setup.n_cross, 350, derive_seed(99, 0, h + 1)));
  const auto m = simulate_tandem(path, through, cross);
  std::size_t hits = 0;
  double w = 0.0;
  for (std::size_t k = 50; k < 350; ++k) {
    hits += m.delay[k] > 2 * kMs;
    w = std::max(w, m.delay[k]);
  }
  EXPECT_EQ(res.delay.hits, hits);
  EXPECT_EQ(res.delay.samples, 300u);
  EXPECT_EQ(res.w_max, w);
}

TEST(MonteCarlo, WilsonIntervalContainsFrequency) {
  Proportion p{7, 1000};
  const auto [lo, hi] = p.wilson();
  EXPECT_LT(lo, 0.007);
  EXPECT_GT(hi, 0.007);
  EXPECT_EQ(Proportion{}.wilson().second, 1.0);
}

TEST(TraceCsv, RoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1e5);
  TraceSet set{Trace{kMs, std::vector<double>(20)}, std::vector<Trace>(3, Trace{kMs, std::vector<double>(20)})};
  for (std::size_t k = 0; k < 20; ++k) {
    set.through.bits[k] = u(rng);
    for (auto& c : set.cross) c.bits[k] = u(rng);
  }
  std::stringstream ss;
  write_trace_csv(ss, set);
  const auto back = read_trace_csv(ss, kMs);
  EXPECT_EQ(back.through.bits, set.through.bits);
  ASSERT_EQ(back.cross.size(), 3u);
  for (std::size_t h = 0; h < 3; ++h) EXPECT_EQ(back.cross[h].bits, set.cross[h].bits);

  std::stringstream bad("slot_index,flow_id,bits\n0,0,x\n");
  try {
    read_trace_csv(bad, kMs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTraceMismatch);
  }
}

TEST(MetricsCsv, HeaderAndSummary) {
  const auto path = det90(1, 0.0);
  const auto m = simulate_tandem(path, constant(1e3, 3), {constant(1e3, 3)});
  std::stringstream ss;
  write_metrics_csv(ss, m);
  std::string first;
  std::getline(ss, first);
  EXPECT_EQ(first, "slot_index,backlog_bits,delay_s");
  EXPECT_NE(ss.str().find("summary,"), std::string::npos);
}
