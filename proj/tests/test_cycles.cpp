#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "bikeflow/cycles.hpp"

using namespace bikeflow;
using Catch::Approx;

namespace {

constexpr DailyWindow kWindow{5 * 3600, 24 * 3600};
const std::set<Date> kNoHolidays;

// Full-grid series over consecutive days; fn(day, bin) yields bikes for the
// 570 in-window bins, negative means missing.
StationSeries make_series(Date start, int days,
                          const std::function<int(int, std::size_t)>& fn) {
  StationSeries s;
  s.station_id = "1";
  s.grid_start = at_midnight(start);
  s.step = 120;
  std::size_t per_day = kSecondsPerDay / 120;
  s.bikes.assign(per_day * days, std::nullopt);
  s.total_slots.assign(per_day * days, std::nullopt);
  std::size_t first_bin = kWindow.start / 120;
  std::size_t nbins = bins_per_day(kWindow, 120);
  for (int d = 0; d < days; ++d)
    for (std::size_t b = 0; b < nbins; ++b) {
      int v = fn(d, b);
      if (v < 0) continue;
      s.bikes[per_day * d + first_bin + b] = v;
      s.total_slots[per_day * d + first_bin + b] = 30;
    }
  return s;
}

DailyCycle flat_cycle(const std::string& id, double level) {
  DailyCycle c;
  c.station_id = id;
  std::size_t n = bins_per_day(kWindow, 120);
  c.mean.assign(n, level);
  c.stdev.assign(n, 0.0);
  c.support.assign(n, 1);
  return c;
}

}  // namespace

TEST_CASE("single day cycle is the median-filtered day") {
  auto series = make_series(make_date(2008, 5, 15), 1, [](int, std::size_t b) {
    return b == 10 ? 9 : 5;  // one spike
  });
  auto cycle = station_cycle(series, DayClass::Weekday, kNoHolidays);
  REQUIRE(cycle.size() == 570);
  REQUIRE(cycle.station_id == "1");
  REQUIRE(cycle.mean[9] == 5.0);
  REQUIRE(cycle.mean[10] == 5.0);  // spike removed by the median pass
  REQUIRE(cycle.stdev[10] == 0.0);
  REQUIRE(cycle.support[10] == 1);
}

TEST_CASE("two day cycle averages with population stdev") {
  auto series = make_series(make_date(2008, 5, 15), 2, [](int d, std::size_t) {
    return d == 0 ? 10 : 20;
  });
  auto cycle = station_cycle(series, DayClass::Weekday, kNoHolidays);
  for (std::size_t i : {std::size_t{0}, std::size_t{100}, std::size_t{569}}) {
    REQUIRE(cycle.mean[i] == Approx(15.0));
    REQUIRE(cycle.stdev[i] == Approx(5.0));
    REQUIRE(cycle.support[i] == 2);
  }
}

TEST_CASE("bins missing on every day have no support") {
  auto series = make_series(make_date(2008, 5, 15), 2, [](int, std::size_t b) {
    return b == 3 ? -1 : 7;
  });
  auto cycle = station_cycle(series, DayClass::Weekday, kNoHolidays);
  REQUIRE(cycle.support[3] == 0);
  REQUIRE(std::isnan(cycle.mean[3]));
  REQUIRE(std::isnan(cycle.stdev[3]));
  REQUIRE_FALSE(cycle.has(3));
  REQUIRE(cycle.has(4));
}

TEST_CASE("day class selects the matching days only") {
  // 2008-05-15 Thu, 16 Fri, 17 Sat, 18 Sun
  auto series = make_series(make_date(2008, 5, 15), 4, [](int d, std::size_t) {
    return d < 2 ? 10 : 30;
  });
  auto weekday = station_cycle(series, DayClass::Weekday, kNoHolidays);
  auto weekend = station_cycle(series, DayClass::Weekend, kNoHolidays);
  REQUIRE(weekday.mean[0] == Approx(10.0));
  REQUIRE(weekend.mean[0] == Approx(30.0));
  REQUIRE(weekday.day_class == DayClass::Weekday);
}

TEST_CASE("holidays move days to the weekend class") {
  // 2008-06-23 Mon, 24 Tue (holiday), 25 Wed
  auto series = make_series(make_date(2008, 6, 23), 3, [](int d, std::size_t) {
    return d == 1 ? 40 : 10;
  });
  std::set<Date> holidays{make_date(2008, 6, 24)};
  auto weekday = station_cycle(series, DayClass::Weekday, holidays);
  REQUIRE(weekday.mean[0] == Approx(10.0));  // the holiday Tuesday is excluded
  auto weekend = station_cycle(series, DayClass::Weekend, holidays);
  REQUIRE(weekend.mean[0] == Approx(40.0));
}

TEST_CASE("no matching days throws") {
  auto series = make_series(make_date(2008, 5, 17), 2,  // Sat, Sun
                            [](int, std::size_t) { return 5; });
  REQUIRE_THROWS_AS(station_cycle(series, DayClass::Weekday, kNoHolidays),
                    NoMatchingDays);
}

TEST_CASE("filter order changes when the median pass runs") {
  // day 0 has a spike at bin 5; day 1 is flat
  auto series = make_series(make_date(2008, 5, 15), 2, [](int d, std::size_t b) {
    if (d == 0) return b == 5 ? 18 : 6;
    return 6;
  });
  auto avg_then_med = station_cycle(series, DayClass::Weekday, kNoHolidays,
                                    kWindow, FilterOrder::AverageThenMedian);
  auto med_then_avg = station_cycle(series, DayClass::Weekday, kNoHolidays,
                                    kWindow, FilterOrder::MedianThenAverage);
  // averaging first: [6,6,...,12,...]; the median pass then flattens bin 5
  REQUIRE(avg_then_med.mean[5] == Approx(6.0));
  // filtering each day first removes the spike before averaging
  REQUIRE(med_then_avg.mean[5] == Approx(6.0));
  // stdev always reflects the raw samples
  REQUIRE(avg_then_med.stdev[5] == Approx(6.0));
  REQUIRE(med_then_avg.stdev[5] == Approx(6.0));
}

TEST_CASE("global cycle sums the network and respects the slots floor") {
  std::vector<Snapshot> snaps;
  TimePoint base = at_midnight(make_date(2008, 5, 15)) + 5 * 3600;
  // 267 stations x 30 slots = 8010 > 8000; bikes 4 each -> total 1068
  Snapshot big;
  big.timestamp = base;
  for (int i = 0; i < 267; ++i)
    big.observations.push_back({std::to_string(i), "n", 41.4, 2.1, 4, 26});
  snaps.push_back(big);
  // 400 stations x 20 slots = 8000, not above the floor: dropped
  Snapshot borderline;
  borderline.timestamp = base + 120;
  for (int i = 0; i < 400; ++i)
    borderline.observations.push_back({std::to_string(i), "n", 41.4, 2.1, 9, 11});
  snaps.push_back(borderline);
  auto cycle =
      global_cycle(snaps, DayClass::Weekday, kNoHolidays, 8000, kWindow, 120, 1);
  REQUIRE(cycle.station_id == kGlobalStation);
  REQUIRE(cycle.mean[0] == Approx(1068.0));
  REQUIRE(cycle.support[1] == 0);  // the 8000-slot snapshot was excluded
}

TEST_CASE("global cycle with threshold zero keeps everything") {
  std::vector<Snapshot> snaps;
  TimePoint base = at_midnight(make_date(2008, 5, 15)) + 5 * 3600;
  for (int day = 0; day < 2; ++day)
    for (int b = 0; b < 3; ++b) {
      Snapshot s;
      s.timestamp = base + day * kSecondsPerDay + b * 120;
      s.observations.push_back({"1", "n", 41.4, 2.1, 3 + day, 5});
      s.observations.push_back({"2", "n", 41.5, 2.2, 7, 5});
      snaps.push_back(s);
    }
  auto cycle =
      global_cycle(snaps, DayClass::Weekday, kNoHolidays, 0, kWindow, 120, 1);
  REQUIRE(cycle.mean[0] == Approx(10.5));  // (10 + 11) / 2
  REQUIRE(cycle.stdev[0] == Approx(0.5));
  REQUIRE(cycle.support[0] == 2);
  REQUIRE(cycle.support[3] == 0);
}

TEST_CASE("global cycle equals the sum of station means on complete data") {
  std::vector<Snapshot> snaps;
  TimePoint base = at_midnight(make_date(2008, 5, 15)) + 5 * 3600;
  std::mt19937_64 rng(42);
  for (int day = 0; day < 3; ++day)
    for (int b = 0; b < 10; ++b) {
      Snapshot s;
      s.timestamp = base + day * kSecondsPerDay + b * 120;
      for (int st = 0; st < 4; ++st)
        s.observations.push_back({std::to_string(st), "n", 41.4, 2.1,
                                  int(rng() % 20), 20});
      snaps.push_back(s);
    }
  auto global = global_cycle(snaps, DayClass::Weekday, kNoHolidays, 0, kWindow,
                             120, 1);
  double sum_of_means = 0.0;
  for (int st = 0; st < 4; ++st) {
    auto series = regularize(snaps, std::to_string(st), 120,
                             snaps.front().timestamp,
                             snaps.back().timestamp + 1);
    auto cycle = station_cycle(series, DayClass::Weekday, kNoHolidays, kWindow,
                               FilterOrder::AverageThenMedian, 1);
    sum_of_means += cycle.mean[4];
  }
  REQUIRE(global.mean[4] == Approx(sum_of_means));
}

TEST_CASE("weekly pattern indexes Monday first") {
  // 2008-05-05 is a Monday; value encodes the weekday
  auto series = make_series(make_date(2008, 5, 5), 7, [](int d, std::size_t) {
    return 10 + d;
  });
  auto weekly = weekly_pattern(series);
  for (int wd = 0; wd < 7; ++wd) {
    REQUIRE(weekly[wd].mean[0] == Approx(10.0 + wd));
    REQUIRE(weekly[wd].support[0] == 1);
    REQUIRE(weekly[wd].stdev[0] == 0.0);
  }
  REQUIRE(weekly[5].day_class == DayClass::Weekend);
  REQUIRE(weekly[0].day_class == DayClass::Weekday);
}

TEST_CASE("an odd Tuesday shows up as Tuesday variance") {
  // two weeks from Monday 2008-05-05; the second Tuesday runs high
  auto series = make_series(make_date(2008, 5, 5), 14, [](int d, std::size_t) {
    if (d == 8) return 30;  // Tuesday 2008-05-13
    return 10;
  });
  auto weekly = weekly_pattern(series);
  REQUIRE(weekly[1].stdev[100] == Approx(10.0));
  REQUIRE(weekly[2].stdev[100] == 0.0);
  REQUIRE(weekly[1].mean[100] == Approx(20.0));
}

TEST_CASE("weekly pattern with a missing weekday leaves it unsupported") {
  auto series = make_series(make_date(2008, 5, 5), 5,  // Mon..Fri only
                            [](int, std::size_t) { return 5; });
  auto weekly = weekly_pattern(series);
  REQUIRE(weekly[0].support[0] == 1);
  REQUIRE(weekly[5].support[0] == 0);
  REQUIRE(std::isnan(weekly[6].mean[0]));
}

TEST_CASE("weekly pattern of an empty series throws") {
  StationSeries s;
  s.station_id = "1";
  s.grid_start = at_midnight(make_date(2008, 5, 5));
  s.step = 120;
  s.bikes.assign(720, std::nullopt);
  s.total_slots.assign(720, std::nullopt);
  REQUIRE_THROWS_AS(weekly_pattern(s), NoMatchingDays);
}

TEST_CASE("cycle bin lookup") {
  auto cycle = flat_cycle("1", 5.0);
  REQUIRE(cycle.bin_of(5 * 3600) == 0);
  REQUIRE(cycle.bin_of(5 * 3600 + 120) == 1);
  REQUIRE(cycle.bin_of(12 * 3600) == 210);
  REQUIRE(cycle.time_at(210) == 12 * 3600);
  REQUIRE_THROWS_AS(cycle.bin_of(5 * 3600 + 60), TimeOffGrid);
  REQUIRE_THROWS_AS(cycle.bin_of(4 * 3600), TimeOffGrid);
  REQUIRE_THROWS_AS(cycle.bin_of(24 * 3600), TimeOffGrid);
}

TEST_CASE("geo delta differences the cycle against the morning baseline") {
  auto a = flat_cycle("A", 5.0);
  a.mean[210] = 12.0;  // 12:00
  auto b = flat_cycle("B", 8.0);
  b.mean[210] = 2.0;
  auto deltas = geo_delta({a, b}, 12 * 3600);
  REQUIRE(deltas.size() == 2);
  REQUIRE(deltas[0].station_id == "A");
  REQUIRE(deltas[0].delta == Approx(7.0));
  REQUIRE(deltas[1].delta == Approx(-6.0));

  SECTION("the baseline against itself is zero") {
    auto zero = geo_delta({a, b}, 5 * 3600);
    REQUIRE(zero[0].delta == 0.0);
    REQUIRE(zero[1].delta == 0.0);
  }
  SECTION("a custom baseline is honored") {
    auto d = geo_delta({a}, 12 * 3600, 16 * 3600);
    REQUIRE(d[0].delta == Approx(12.0 - 5.0));
  }
  SECTION("stations without support at either end drop out") {
    auto c = flat_cycle("C", 1.0);
    c.support[210] = 0;
    auto d = geo_delta({a, c}, 12 * 3600);
    REQUIRE(d.size() == 1);
    REQUIRE(d[0].station_id == "A");
  }
  SECTION("off-grid reference times throw") {
    REQUIRE_THROWS_AS(geo_delta({a}, 12 * 3600 + 17), TimeOffGrid);
  }
}

TEST_CASE("idw grid from a single station is constant") {
  std::map<std::string, LatLon> coords{{"A", {41.2, 2.15}}};
  BoundingBox bbox{41.0, 2.0, 41.4, 2.3};
  auto grid = idw_grid({{"A", 7.0}}, coords, bbox, 4, 4);
  REQUIRE(grid.rows == 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) REQUIRE(grid.at(r, c) == Approx(7.0));
}

TEST_CASE("idw grid takes coincident stations exactly") {
  BoundingBox bbox{41.0, 2.0, 41.4, 2.3};
  // 1x3 grid: cell centers at lon 2.05, 2.15, 2.25 on lat 41.2
  std::map<std::string, LatLon> coords{{"A", {41.2, 2.05}}, {"B", {41.2, 2.25}}};
  auto grid = idw_grid({{"A", 5.0}, {"B", -5.0}}, coords, bbox, 1, 3);
  REQUIRE(grid.at(0, 0) == 5.0);
  REQUIRE(grid.at(0, 2) == -5.0);
  REQUIRE(grid.at(0, 1) == Approx(0.0).margin(1e-9));
}

TEST_CASE("idw values stay within the convex hull of the deltas") {
  std::mt19937_64 rng(3);
  std::vector<StationDelta> deltas;
  std::map<std::string, LatLon> coords;
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 8; ++i) {
    std::string id = "S" + std::to_string(i);
    coords[id] = {41.0 + 0.4 * (rng() % 1000) / 1000.0,
                  2.0 + 0.3 * (rng() % 1000) / 1000.0};
    double v = -10.0 + (rng() % 2000) / 100.0;
    deltas.push_back({id, v});
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  auto grid = idw_grid(deltas, coords, {41.0, 2.0, 41.4, 2.3}, 6, 6);
  for (double v : grid.values) {
    REQUIRE(v >= lo - 1e-9);
    REQUIRE(v <= hi + 1e-9);
  }
}

TEST_CASE("idw grid validates its inputs") {
  std::map<std::string, LatLon> coords{{"A", {41.2, 2.15}}};
  BoundingBox bbox{41.0, 2.0, 41.4, 2.3};
  REQUIRE_THROWS_AS(idw_grid({}, coords, bbox, 2, 2), EmptyInput);
  REQUIRE_THROWS_AS(idw_grid({{"B", 1.0}}, coords, bbox, 2, 2), UnknownStation);
  REQUIRE_THROWS_AS(idw_grid({{"A", 1.0}}, coords, bbox, 0, 2), Error);
}
