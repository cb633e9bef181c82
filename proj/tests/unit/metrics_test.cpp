#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "qtmt/metrics.hpp"

#include "../support/oracles.hpp"

using namespace qtmt;
using oracle::analytic_bd;

namespace {

std::vector<RdPoint> curve(double scale, double q_shift = 0) {
  return {{1000 * scale, 32 + q_shift}, {1800 * scale, 34.6 + q_shift}, {3300 * scale, 37.1 + q_shift}, {6200 * scale, 39.5 + q_shift}};
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(TimeSaving, Fixtures) {
  EXPECT_DOUBLE_EQ(time_saving({{{100, 80}, {100, 80}, {100, 80}, {100, 80}}}), 0.20);
  EXPECT_DOUBLE_EQ(time_saving({{{50, 50}, {60, 60}, {70, 70}, {80, 80}}}), 0.0);
  EXPECT_EQ(time_saving({{{100, 90}, {100, 80}, {100, 70}, {100, 60}}}), 0.25);
  EXPECT_LT(time_saving({{{100, 120}, {100, 100}, {100, 100}, {100, 100}}}), 0.0);
  EXPECT_EQ(code_of([] { time_saving({{{0, 1}, {1, 1}, {1, 1}, {1, 1}}}); }), ErrorCode::NonPositiveTime);
  EXPECT_EQ(code_of([] { time_saving({{{1, -1}, {1, 1}, {1, 1}, {1, 1}}}); }), ErrorCode::NonPositiveTime);
}

TEST(TsProxy, Examples) {
  EXPECT_DOUBLE_EQ(ts_proxy(1000, 700), 0.3);
  EXPECT_DOUBLE_EQ(ts_proxy(1000, 1000), 0.0);
  EXPECT_EQ(code_of([] { ts_proxy(0, 0); }), ErrorCode::ZeroWork);
}

TEST(TsProxy, PerQpCrossCheck) {
  const std::array<std::uint64_t, 4> full{1000, 800, 600, 400}, pruned{700, 600, 480, 340};
  const double expect = (0.3 + 0.25 + 0.2 + 0.15) / 4;
  EXPECT_NEAR(time_saving(timing_from_counts(full, pruned)), expect, 1e-15);
}

TEST(BdRate, IdenticalCurvesAreZero) { EXPECT_NEAR(bd_rate(curve(1), curve(1)), 0.0, 1e-9); }

TEST(BdRate, UniformShift) {
  EXPECT_NEAR(bd_rate(curve(1), curve(1.05)), 5.0, 0.01);
  EXPECT_NEAR(bd_rate(curve(1), curve(0.9)), -10.0, 0.01);
}

TEST(BdRate, AntisymmetryForSmallGaps) {
  const double ab = bd_rate(curve(1), curve(1.01, 0.05));
  const double ba = bd_rate(curve(1.01, 0.05), curve(1));
  EXPECT_LE(std::abs(ab + ba), 0.05);
}

TEST(BdRate, MatchesAnalyticIntegration) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int t = 0; t < 100; ++t) {
    std::vector<RdPoint> a, b;
    double ra = 800, rb = 850, qa = 30 + u(rng), qb = 30 + u(rng);
    for (int i = 0; i < 4; ++i) {
      a.push_back({ra, qa});
      b.push_back({rb, qb});
      ra *= 1.7 + u(rng);
      rb *= 1.7 + u(rng);
      qa += 2.5 + u(rng);
      qb += 2.5 + u(rng);
    }
    EXPECT_NEAR(bd_rate(a, b), analytic_bd(a, b), 1e-4);
  }
}

TEST(BdRate, Errors) {
  EXPECT_EQ(code_of([] { bd_rate(curve(1), curve(1, 20)); }), ErrorCode::NonOverlappingCurves);
  EXPECT_EQ(code_of([] {
              auto c = curve(1);
              c.pop_back();
              bd_rate(c, curve(1));
            }),
            ErrorCode::DegenerateFit);
  EXPECT_EQ(code_of([] {
              auto c = curve(1);
              std::swap(c[0], c[1]);
              bd_rate(c, curve(1));
            }),
            ErrorCode::DegenerateFit);
}

TEST(RdCsv, RoundTrip) {
  std::stringstream ss;
  write_rd_csv(ss, curve(1));
  auto back = read_rd_csv(ss);
  ASSERT_EQ(back.size(), 4u);
  EXPECT_DOUBLE_EQ(back[2].rate, 3300);
  EXPECT_DOUBLE_EQ(back[2].quality, 37.1);
  std::stringstream bad("rate,quality\n1,2\nx,y\n");
  EXPECT_THROW(read_rd_csv(bad), Error);
}
