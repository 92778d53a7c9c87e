#include <gtest/gtest.h>

#include <random>

#include "bta/performance.hpp"
#include "support.hpp"

using namespace bta;
using namespace std::chrono_literals;
using test::date;
using test::ts;

namespace {

// 2017-09-30 is a Saturday.
const Timestamp kSat = ts("2017-09-30T00:00:00Z");

double ramp_day(double hour) {
  if (hour < 6.0) return 20.0;
  if (hour < 14.0) return 20.0 + 1.5 * (hour - 6.0);
  return 32.0 - (hour - 14.0);
}

TimeSeries weekend_ramp(Timestamp day) {
  return test::regular("t", day, 10min, 144, [](std::size_t i) { return ramp_day(i / 6.0); });
}

/// Hourly clear weather over [from, from + days).
WeatherHistory clear_weather(Timestamp from, int days, double cloud) {
  std::vector<WeatherSample> v;
  for (int h = 0; h < days * 24; ++h) v.push_back({from + std::chrono::hours{h}, 20.0, 0.0, cloud});
  return WeatherHistory("A", std::move(v));
}

/// Event-free indoor baseline at 30 s with one window opening at `at`.
TimeSeries with_opening(Timestamp begin, std::size_t n, Timestamp at, double depth) {
  return test::regular("t", begin, 30s, n, [&](std::size_t i) {
    const double m = static_cast<double>((begin + 30s * static_cast<long>(i) - at).count()) / 60.0;
    if (m < 0) return 21.0;
    if (m < 10) return 21.0 - depth * m / 10.0;
    if (m < 20) return 21.0 - depth;
    if (m < 80) return 21.0 - depth + depth * (m - 20.0) / 60.0;
    return 21.0;
  });
}

}  // namespace

TEST(Swings, RampExample) {
  const auto r = weekend_daily_swings("R1", weekend_ramp(kSat), UtcOffset{0});
  ASSERT_EQ(r.swings.size(), 1u);
  EXPECT_DOUBLE_EQ(r.swings[0].swing, 12.0);
  EXPECT_DOUBLE_EQ(r.swings[0].min_c, 20.0);
  EXPECT_DOUBLE_EQ(r.swings[0].max_c, 32.0);
  EXPECT_DOUBLE_EQ(r.swings[0].rise_hours, 8.0);
  EXPECT_EQ(r.swings[0].date, date("2017-09-30"));
}

TEST(Swings, ConstantSeriesHasZeroSwing) {
  const auto r = weekend_daily_swings("R1", test::constant("t", kSat, 10min, 288, 21.0), UtcOffset{0});
  ASSERT_EQ(r.swings.size(), 2u);
  for (const auto& d : r.swings) EXPECT_EQ(d.swing, 0.0);
  EXPECT_FALSE(flag_poor_insulation(r.swings, 8.0, 1).has_value());
}

TEST(Swings, WeekdayOnlySeriesGivesNothing) {
  const auto r = weekend_daily_swings("R1", weekend_ramp(ts("2017-09-27T00:00:00Z")), UtcOffset{0});
  EXPECT_TRUE(r.swings.empty());
  EXPECT_TRUE(r.skipped.empty());
}

TEST(Swings, SparseDaysAreSkipped) {
  const auto r = weekend_daily_swings("R1", test::constant("t", kSat, 4h, 6, 21.0), UtcOffset{0});
  EXPECT_TRUE(r.swings.empty());
  EXPECT_EQ(r.skipped, std::vector<Date>{date("2017-09-30")});
}

TEST(Swings, LocalDayBoundaries) {
  // At UTC+3 the ramp starting at Friday 21:00 UTC falls on local Saturday.
  const auto r = weekend_daily_swings("R1", weekend_ramp(kSat - 3h), UtcOffset{180});
  ASSERT_EQ(r.swings.size(), 1u);
  EXPECT_EQ(r.swings[0].date, date("2017-09-30"));
  EXPECT_DOUBLE_EQ(r.swings[0].swing, 12.0);
}

TEST(Insulation, FlagsWithEvidence) {
  std::vector<DailySwing> swings{{"R1", date("2017-09-30"), 18, 30, 12, 8},
                                 {"R1", date("2017-10-01"), 20, 29, 9, 7},
                                 {"R1", date("2017-10-07"), 20, 23, 3, 4}};
  const auto f = flag_poor_insulation(swings, 8.0, 2);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->kind, AnomalyKind::PoorInsulation);
  EXPECT_EQ(f->room_id, "R1");
  EXPECT_EQ(f->evidence.size(), 2u);
  EXPECT_EQ(f->value, 12.0);
  EXPECT_FALSE(flag_poor_insulation(swings, 8.0, 3).has_value());
  EXPECT_THROW(flag_poor_insulation(swings, 0.0, 1), InvalidArgument);
}

TEST(Insulation, ThresholdMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 15.0);
  std::vector<DailySwing> swings;
  for (int i = 0; i < 10; ++i) swings.push_back({"R", add_days(date("2017-09-30"), 7 * i), 0, 0, u(rng), 0});
  for (double hi = 1.0; hi < 16.0; hi += 0.5) {
    if (!flag_poor_insulation(swings, hi, 2)) continue;
    for (double lo = 0.5; lo < hi; lo += 0.5) EXPECT_TRUE(flag_poor_insulation(swings, lo, 2).has_value());
  }
}

TEST(Orientation, GainTemplate) {
  EXPECT_EQ(orientation_gain(12.0, Orientation::N), 0.0);
  EXPECT_NEAR(orientation_gain(12.0, Orientation::S), 1.0, 1e-12);
  EXPECT_NEAR(orientation_gain(14.0, Orientation::SW), 1.0, 1e-12);
  EXPECT_NEAR(orientation_gain(8.0, Orientation::E), 0.8, 1e-12);
  EXPECT_EQ(orientation_gain(22.0, Orientation::S), 0.0);
  EXPECT_EQ(orientation_gain(2.0, Orientation::E), 0.0);
  EXPECT_GT(orientation_gain(9.0, Orientation::E), orientation_gain(9.0, Orientation::W));
}

TEST(Pearson, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_NEAR(pearson(x, std::vector<double>{2, 4, 6, 8, 10}), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0, 1e-12);
  // Hand-computed: sxy = 4, sxx = 10, syy = 3.2.
  EXPECT_NEAR(pearson(x, std::vector<double>{1, 3, 2, 3, 3}), 4.0 / std::sqrt(32.0), 1e-12);
  EXPECT_THROW(pearson(x, std::vector<double>{1, 1, 1, 1, 1}), AnalysisError);
}

TEST(Correlation, OvercastIsUndefined) {
  const auto indoor = test::regular("t", kSat, 10min, 288, [](std::size_t i) { return 20.0 + (i % 7) * 0.1; });
  EXPECT_THROW(solar_gain_correlation("R1", indoor, clear_weather(kSat, 2, 1.0), Orientation::S, UtcOffset{0}),
               AnalysisError);
}

TEST(Correlation, TooFewHoursIsAnError) {
  const auto indoor = test::regular("t", kSat, 10min, 60, [](std::size_t i) { return 20.0 + (i % 7) * 0.1; });
  EXPECT_THROW(solar_gain_correlation("R1", indoor, clear_weather(kSat, 2, 0.0), Orientation::S, UtcOffset{0}),
               AnalysisError);
}

TEST(Correlation, NullModelIsWeak) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.3);
  const int weeks = 8;
  std::vector<Sample> v;
  for (int w = 0; w < weeks; ++w) {
    for (int k = 0; k < 288; ++k) v.push_back({kSat + std::chrono::days{7 * w} + 10min * k, 21.0 + n(rng)});
  }
  const auto r = solar_gain_correlation("R1", TimeSeries("t", v), clear_weather(kSat, 7 * weeks, 0.2),
                                        Orientation::S, UtcOffset{0});
  EXPECT_LT(std::abs(r.r), 0.2);
  EXPECT_EQ(r.evidence.size(), 2u * weeks);
}

TEST(Correlation, SolarDrivenRoomCorrelates) {
  // Indoor temperature integrates the facade's gain: hourly rise tracks the proxy.
  std::vector<WeatherSample> weather;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> cloud(0.0, 1.0);
  for (int h = 0; h < 48; ++h) weather.push_back({kSat + std::chrono::hours{h}, 20.0, 0.0, cloud(rng)});
  const WeatherHistory wh("A", weather);
  std::vector<Sample> v;
  double t = 20.0;
  for (int h = 0; h < 48; ++h) {
    const double gain = (1.0 - weather[h].cloud_cover) * orientation_gain(h % 24, Orientation::W);
    for (int k = 0; k < 6; ++k) v.push_back({kSat + std::chrono::hours{h} + 10min * k, t + gain});
    t += gain - 0.1;
  }
  const auto r = solar_gain_correlation("R1", TimeSeries("t", v), wh, Orientation::W, UtcOffset{0});
  EXPECT_GT(r.r, 0.9);
  const auto wrong = solar_gain_correlation("R1", TimeSeries("t", v), wh, Orientation::E, UtcOffset{0});
  EXPECT_LT(wrong.r, r.r);
  const std::vector<CorrelationReport> both{wrong, r};
  const auto flags = flag_unshaded_rooms(both, 0.5);
  ASSERT_GE(flags.size(), 1u);
  EXPECT_EQ(flags[0].value, r.r);
  EXPECT_EQ(flags[0].kind, AnomalyKind::UnshadedSolarGain);
}

TEST(Events, WindowOpeningDetected) {
  const Timestamp begin = ts("2017-09-27T06:00:00Z");
  const Timestamp at = ts("2017-09-27T10:00:00Z");
  const auto events = detect_occupant_events(with_opening(begin, 960, at, 2.5));
  ASSERT_EQ(events.size(), 1u);
  EXPECT_NEAR(events[0].fall, 2.5, 1e-9);
  EXPECT_GE(events[0].start, at - 30s);
  EXPECT_LE(events[0].start, at);
  EXPECT_GE(events[0].trough, at + 10min);
  EXPECT_LE(events[0].trough, at + 20min);
  EXPECT_LE(events[0].recovered, at + 50min + 30s);
}

TEST(Events, SmallDropIgnored) {
  const Timestamp begin = ts("2017-09-27T06:00:00Z");
  EXPECT_TRUE(detect_occupant_events(with_opening(begin, 960, begin + 4h, 1.5)).empty());
}

TEST(Events, SlowDeclineAndFrontIgnored) {
  const Timestamp begin = ts("2017-09-27T06:00:00Z");
  const auto slow = test::regular("t", begin, 30s, 960, [](std::size_t i) { return 24.0 - i * 0.005; });
  EXPECT_TRUE(detect_occupant_events(slow).empty());
  const auto front = test::regular("t", begin, 30s, 960, [](std::size_t i) { return i < 400 ? 24.0 : 20.0; });
  EXPECT_TRUE(detect_occupant_events(front).empty());
}

TEST(Events, BriefDipIgnored) {
  const Timestamp begin = ts("2017-09-27T06:00:00Z");
  const auto blip = test::regular("t", begin, 30s, 960, [](std::size_t i) { return i == 300 ? 17.0 : 21.0; });
  EXPECT_TRUE(detect_occupant_events(blip).empty());
  EventConfig no_min;
  no_min.min_dip = 0s;
  EXPECT_EQ(detect_occupant_events(blip, no_min).size(), 1u);
}

TEST(Events, TwoSeparatedOpenings) {
  const Timestamp begin = ts("2017-09-27T06:00:00Z");
  const auto a = with_opening(begin, 1440, begin + 2h, 3.0);
  const auto b = with_opening(begin, 1440, begin + 7h, 2.2);
  std::vector<Sample> v;
  for (std::size_t i = 0; i < a.size(); ++i) v.push_back({a[i].at, a[i].value + b[i].value - 21.0});
  const auto events = detect_occupant_events(TimeSeries("t", v));
  ASSERT_EQ(events.size(), 2u);
  EXPECT_NEAR(events[0].fall, 3.0, 1e-9);
  EXPECT_NEAR(events[1].fall, 2.2, 1e-9);
}

TEST(Events, TranslationInvariant) {
  const Timestamp begin = ts("2017-09-27T06:00:00Z");
  const auto base = with_opening(begin, 960, begin + 3h, 2.6);
  const auto ref = detect_occupant_events(base);
  for (const double dv : {-15.0, 7.5}) {
    for (const auto dt : {Seconds{0}, Seconds{86400 * 3 + 90}}) {
      std::vector<Sample> v;
      for (const auto& s : base) v.push_back({s.at + dt, s.value + dv});
      const auto got = detect_occupant_events(TimeSeries("t", v));
      ASSERT_EQ(got.size(), ref.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].start, ref[i].start + dt);
        EXPECT_EQ(got[i].trough, ref[i].trough + dt);
        EXPECT_NEAR(got[i].fall, ref[i].fall, 1e-9);
      }
    }
  }
}

TEST(Reports, CsvAndRecords) {
  const std::vector<AnomalyReport> reports{
      {"A", "R1", AnomalyKind::PoorInsulation, "max_swing_c", 12.0, {{date("2017-09-30"), 12.0}, {date("2017-10-01"), 9.0}}},
      {"A", "R2", AnomalyKind::UnshadedSolarGain, "solar_correlation_r", 0.71234, {{date("2017-09-30"), 1.5}}}};
  const std::string csv = anomaly_csv(reports);
  EXPECT_EQ(csv,
            "site_id,room_id,kind,metric,value,dates\n"
            "A,R1,PoorInsulation,max_swing_c,12.0000,2017-09-30;2017-10-01\n"
            "A,R2,UnshadedSolarGain,solar_correlation_r,0.7123,2017-09-30\n");
  const std::string jsonl = anomaly_records(reports);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 2);
  const auto first = Json::parse(jsonl.substr(0, jsonl.find('\n')));
  EXPECT_EQ(first["kind"], "PoorInsulation");
  EXPECT_EQ(first["evidence"].size(), 2u);
}
