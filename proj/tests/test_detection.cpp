#include <gtest/gtest.h>

#include "oracles.hpp"

#include <random>

using namespace afcnet;

namespace {

constexpr Duration kTau = 10 * kMicrosecond;

DetectorConfig ideal() { return DetectorConfig{1.0, 0.0, 0, 0, false}; }

std::vector<TimeTag> tags_at(std::initializer_list<TimePoint> ts) {
  std::vector<TimeTag> v;
  for (TimePoint t : ts) v.push_back(TimeTag{t, kNoPair, 2, Origin::unknown});
  return v;
}

TEST(Detect, IdealDetectorCopiesPhotons) {
  std::vector<Photon> in;
  for (int i = 0; i < 100; ++i) in.push_back(Photon{i * 1000, static_cast<PairId>(i), Origin::pair});
  const auto out = detect(in, ideal(), GatingSchedule::always_open(kSecond), kSecond, 1, 7);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out[i].t, in[i].t);
    EXPECT_EQ(out[i].channel, 7);
    EXPECT_EQ(out[i].origin, Origin::pair);
  }
}

TEST(Detect, DarkCountsArePoisson) {
  DetectorConfig c = ideal();
  c.dark_rate = 10;
  const auto out = detect({}, c, GatingSchedule::always_open(kSecond), 100 * kSecond, 2);
  EXPECT_TRUE(oracle::within_sigma(static_cast<double>(out.size()), 1000, std::sqrt(1000.0)));
  for (const auto& t : out) EXPECT_EQ(t.origin, Origin::dark);
}

TEST(Detect, DeadTimeSwallowsSecondPhoton) {
  DetectorConfig c = ideal();
  c.dead_time = 50 * kNanosecond;
  const std::vector<Photon> in{{1000, 0, Origin::pair}, {2000, 1, Origin::pair}};
  EXPECT_EQ(detect(in, c, GatingSchedule::always_open(kSecond), kSecond, 3).size(), 1u);
}

TEST(Detect, SortedAndRespectsDeadTime) {
  DetectorConfig c{0.6, 5000, 2 * kNanosecond, 50 * kNanosecond, false};
  Rng rng = make_rng(4, Stage::test);
  std::vector<Photon> in;
  poisson_arrivals(2e5, GatingSchedule::always_open(kSecond), TimeRange{0, kSecond}, rng,
                   [&](TimePoint t) { in.push_back(Photon{t, in.size(), Origin::pair}); });
  const auto out = detect(in, c, GatingSchedule::square(2 * kTau, kTau), kSecond, 4);
  for (std::size_t i = 1; i < out.size(); ++i) ASSERT_GE(out[i].t - out[i - 1].t, c.dead_time);
}

TEST(Detect, ChopperDutyScalesPhotonsNotDarks) {
  DetectorConfig c{0.5, 100, 0, 0, false};
  Rng rng = make_rng(5, Stage::test);
  std::vector<Photon> in;
  const Duration T = 20 * kSecond;
  poisson_arrivals(5000, GatingSchedule::always_open(kSecond), TimeRange{0, T}, rng,
                   [&](TimePoint t) { in.push_back(Photon{t, in.size(), Origin::pair}); });
  const GatingSchedule chopper = GatingSchedule::square(kChopperPeriod, kChopperPeriod / 2);
  const auto out = detect(in, c, chopper, T, 5);
  const double mean = static_cast<double>(in.size()) * 0.5 * 0.5 + 100 * 20;
  EXPECT_TRUE(oracle::within_sigma(static_cast<double>(out.size()), mean, std::sqrt(mean)));

  c.dark_gated = true;
  const auto gated = detect({}, c, chopper, T, 6);
  EXPECT_TRUE(oracle::within_sigma(static_cast<double>(gated.size()), 1000, std::sqrt(1000.0)));
  for (const auto& t : gated) EXPECT_TRUE(is_open(chopper, t.t));
}

TEST(TdcGate, Examples) {
  const auto tags = tags_at({5 * kMicrosecond, 15 * kMicrosecond, 25 * kMicrosecond});
  EXPECT_EQ(tdc_gate(tags, GatingSchedule::always_open(2 * kTau)), tags);
  const auto kept = tdc_gate(tags, GatingSchedule::square(2 * kTau, kTau));
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[1].t, 25 * kMicrosecond);
}

TEST(TdcGate, RetainedFractionIsDuty) {
  Rng rng = make_rng(7, Stage::test);
  std::vector<TimeTag> tags;
  poisson_arrivals(1e4, GatingSchedule::always_open(kSecond), TimeRange{0, 10 * kSecond}, rng,
                   [&](TimePoint t) { tags.push_back(TimeTag{t, kNoPair, 2, Origin::dark}); });
  const GatingSchedule g = GatingSchedule::square(2 * kTau, kTau / 2, 3 * kMicrosecond);
  const auto kept = tdc_gate(tags, g);
  const double n = static_cast<double>(tags.size());
  EXPECT_TRUE(oracle::within_sigma(static_cast<double>(kept.size()), n * 0.25, std::sqrt(n * 0.25 * 0.75)));
}

TEST(CalibrateOffset, ClusteredTags) {
  std::vector<TimeTag> tags;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const TimePoint phase = 3 * kMicrosecond + static_cast<TimePoint>(rng() % (10 * kMicrosecond));
    tags.push_back(TimeTag{i * 2 * kTau + phase, kNoPair, 2, Origin::pair});
  }
  const GatingSchedule tmpl = GatingSchedule::square(2 * kTau, kTau);
  EXPECT_EQ(calibrate_offset(tags, tmpl, kMicrosecond), 3 * kMicrosecond);
}

TEST(CalibrateOffset, TiesGoToSmallestOffset) {
  std::vector<TimeTag> tags;
  for (int i = 0; i < 2000; ++i) tags.push_back(TimeTag{i * kMicrosecond, kNoPair, 2, Origin::dark});
  const GatingSchedule tmpl = GatingSchedule::square(2 * kTau, kTau);
  EXPECT_EQ(calibrate_offset(tags, tmpl, kMicrosecond), 0);
  EXPECT_EQ(calibrate_offset(tags_at({7 * kMicrosecond}), tmpl, kMicrosecond), 0);
}

TEST(CalibrateOffset, Errors) {
  const GatingSchedule tmpl = GatingSchedule::square(2 * kTau, kTau);
  EXPECT_THROW(calibrate_offset({}, tmpl, kMicrosecond), std::invalid_argument);
  EXPECT_THROW(calibrate_offset(tags_at({1}), tmpl, 3 * kMicrosecond), std::invalid_argument);
}

TEST(CalibrateOffset, EqualsExhaustiveScan) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Duration step = 1 + static_cast<Duration>(rng() % 7);
    const Duration period = step * (2 + static_cast<Duration>(rng() % 30));
    const Duration on = 1 + static_cast<Duration>(rng() % static_cast<std::uint64_t>(period));
    const GatingSchedule tmpl{period, on, 0};
    std::vector<TimeTag> tags;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) tags.push_back(TimeTag{static_cast<TimePoint>(rng() % 5000), kNoPair, 2, Origin::dark});
    std::sort(tags.begin(), tags.end(), [](const TimeTag& a, const TimeTag& b) { return a.t < b.t; });
    ASSERT_EQ(calibrate_offset(tags, tmpl, step), oracle::exhaustive_offset(tags, tmpl, step))
        << "period " << period << " on " << on << " step " << step;
  }
}

TEST(DetectorConfig, Validation) {
  DetectorConfig c{1.1, -1, -1, -1, false};
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 4u);
  }
}

}  // namespace
