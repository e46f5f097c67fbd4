#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bikeflow/config.hpp"
#include "bikeflow/errors.hpp"
#include "bikeflow/geo.hpp"
#include "bikeflow/ingest.hpp"
#include "bikeflow/preprocess.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

inline constexpr const char* kGlobalStation = "GLOBAL";

// Average daily pattern of one station (or the whole city) for one day class.
// mean/stdev are meaningful only at bins with support > 0; elsewhere NaN.
struct DailyCycle {
  std::string station_id;
  DayClass day_class = DayClass::Weekday;
  Seconds bin_start = 5 * 3600;
  Seconds bin_step = kDefaultStep;
  std::vector<double> mean;
  std::vector<double> stdev;
  std::vector<int> support;

  std::size_t size() const { return mean.size(); }
  bool has(std::size_t i) const { return support[i] > 0; }
  Seconds time_at(std::size_t i) const {
    return bin_start + static_cast<Seconds>(i) * bin_step;
  }
  std::size_t bin_of(Seconds tod) const {
    if (tod < bin_start || (tod - bin_start) % bin_step != 0)
      throw TimeOffGrid("time " + format_time_of_day(tod) +
                        " is not on the cycle grid");
    auto i = static_cast<std::size_t>((tod - bin_start) / bin_step);
    if (i >= size())
      throw TimeOffGrid("time " + format_time_of_day(tod) +
                        " is past the cycle grid");
    return i;
  }
};

namespace detail {

// Mean, population stdev and support per bin across day columns. stdev always
// comes from the raw samples; the median filter touches the mean only.
inline DailyCycle aggregate_days(
    std::string station_id, DayClass day_class,
    const std::vector<const std::vector<std::optional<double>>*>& days,
    DailyWindow window, Seconds step, FilterOrder order, int median_window) {
  std::size_t nbins = bins_per_day(window, step);
  DailyCycle cycle;
  cycle.station_id = std::move(station_id);
  cycle.day_class = day_class;
  cycle.bin_start = window.start;
  cycle.bin_step = step;
  double nan = std::numeric_limits<double>::quiet_NaN();
  cycle.mean.assign(nbins, nan);
  cycle.stdev.assign(nbins, nan);
  cycle.support.assign(nbins, 0);

  std::vector<std::vector<std::optional<double>>> filtered;
  const std::vector<const std::vector<std::optional<double>>*>* mean_source =
      &days;
  std::vector<const std::vector<std::optional<double>>*> filtered_ptrs;
  if (order == FilterOrder::MedianThenAverage) {
    filtered.reserve(days.size());
    for (const auto* day : days)
      filtered.push_back(median_filter(*day, median_window));
    for (const auto& day : filtered) filtered_ptrs.push_back(&day);
    mean_source = &filtered_ptrs;
  }

  std::vector<std::optional<double>> mean(nbins);
  for (std::size_t i = 0; i < nbins; ++i) {
    double sum = 0.0;
    int n = 0;
    for (const auto* day : *mean_source)
      if ((*day)[i]) {
        sum += *(*day)[i];
        ++n;
      }
    if (n == 0) continue;
    mean[i] = sum / n;
    double raw_sum = 0.0, raw_sq = 0.0;
    int raw_n = 0;
    for (const auto* day : days)
      if ((*day)[i]) {
        raw_sum += *(*day)[i];
        raw_sq += *(*day)[i] * *(*day)[i];
        ++raw_n;
      }
    double m = raw_sum / raw_n;
    cycle.stdev[i] = std::sqrt(std::max(0.0, raw_sq / raw_n - m * m));
    cycle.support[i] = raw_n;
  }
  if (order == FilterOrder::AverageThenMedian)
    mean = median_filter(mean, median_window);
  for (std::size_t i = 0; i < nbins; ++i)
    if (mean[i]) cycle.mean[i] = *mean[i];
  return cycle;
}

}  // namespace detail

// Cycle from pre-split day columns restricted to the given day class.
inline DailyCycle cycle_from_days(std::string station_id,
                                  const std::vector<DayColumn>& days,
                                  DayClass day_class,
                                  const std::set<Date>& holidays,
                                  DailyWindow window, Seconds step,
                                  FilterOrder order = FilterOrder::AverageThenMedian,
                                  int median_window = 3) {
  std::vector<const std::vector<std::optional<double>>*> matching;
  for (const auto& day : days)
    if (classify_day(day.date, holidays) == day_class)
      matching.push_back(&day.bikes);
  if (matching.empty())
    throw NoMatchingDays("no " + std::string(to_string(day_class)) +
                         " days for station '" + station_id + "'");
  return detail::aggregate_days(std::move(station_id), day_class, matching,
                                window, step, order, median_window);
}

inline DailyCycle station_cycle(const StationSeries& series, DayClass day_class,
                                const std::set<Date>& holidays,
                                DailyWindow window = {5 * 3600, 24 * 3600},
                                FilterOrder order = FilterOrder::AverageThenMedian,
                                int median_window = 3) {
  auto days = split_days(series, window);
  return cycle_from_days(series.station_id, days, day_class, holidays, window,
                         series.step, order, median_window);
}

// City-wide cycle: total bikes per snapshot, with snapshots kept only while
// the network reports more than min_total_slots slots in service.
inline DailyCycle global_cycle(std::span<const Snapshot> snapshots,
                               DayClass day_class,
                               const std::set<Date>& holidays,
                               long min_total_slots = 8000,
                               DailyWindow window = {5 * 3600, 24 * 3600},
                               Seconds step = kDefaultStep,
                               int median_window = 3) {
  std::size_t nbins = bins_per_day(window, step);
  std::map<Date, std::vector<std::optional<double>>> days;
  for (const auto& snap : snapshots) {
    if (snap.total_slots() <= min_total_slots) continue;
    Seconds tod = time_of_day(snap.timestamp);
    if (!window.contains(tod)) continue;
    Date d = date_of(snap.timestamp);
    if (classify_day(d, holidays) != day_class) continue;
    auto& col = days[d];
    if (col.empty()) col.assign(nbins, std::nullopt);
    auto bin = static_cast<std::size_t>((tod - window.start) / step);
    col[bin] = static_cast<double>(snap.total_bikes());
  }
  std::vector<const std::vector<std::optional<double>>*> columns;
  for (const auto& [d, col] : days) columns.push_back(&col);
  if (columns.empty()) {
    DailyCycle empty;
    empty.station_id = kGlobalStation;
    empty.day_class = day_class;
    empty.bin_start = window.start;
    empty.bin_step = step;
    double nan = std::numeric_limits<double>::quiet_NaN();
    empty.mean.assign(nbins, nan);
    empty.stdev.assign(nbins, nan);
    empty.support.assign(nbins, 0);
    return empty;
  }
  return detail::aggregate_days(kGlobalStation, day_class, columns, window,
                                step, FilterOrder::AverageThenMedian,
                                median_window);
}

// Average pattern per weekday, index 0 = Monday. Holidays are not folded in
// here: an odd Tuesday shows up as Tuesday variance, which is the point.
inline std::array<DailyCycle, 7> weekly_pattern(
    const StationSeries& series, DailyWindow window = {5 * 3600, 24 * 3600},
    FilterOrder order = FilterOrder::AverageThenMedian, int median_window = 3) {
  auto days = split_days(series, window);
  if (days.empty())
    throw NoMatchingDays("no data for station '" + series.station_id + "'");
  std::array<std::vector<const std::vector<std::optional<double>>*>, 7> by_wd;
  for (const auto& day : days)
    by_wd[day_of_week(day.date)].push_back(&day.bikes);
  std::array<DailyCycle, 7> result;
  for (int wd = 0; wd < 7; ++wd) {
    result[wd] = detail::aggregate_days(
        series.station_id, wd >= 5 ? DayClass::Weekend : DayClass::Weekday,
        by_wd[wd], window, series.step, order, median_window);
  }
  return result;
}

struct StationDelta {
  std::string station_id;
  double delta = 0.0;
};

// Change in each station's mean cycle between t0 and t. Stations missing
// either bin are left out.
inline std::vector<StationDelta> geo_delta(const std::vector<DailyCycle>& cycles,
                                           Seconds t, Seconds t0 = 5 * 3600) {
  std::vector<StationDelta> deltas;
  for (const auto& cycle : cycles) {
    std::size_t i = cycle.bin_of(t);
    std::size_t i0 = cycle.bin_of(t0);
    if (!cycle.has(i) || !cycle.has(i0)) continue;
    deltas.push_back({cycle.station_id, cycle.mean[i] - cycle.mean[i0]});
  }
  return deltas;
}

struct GeoDeltaGrid {
  BoundingBox bbox;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major
  Seconds reference_time = 0;
  Seconds baseline_time = 5 * 3600;

  double at(int r, int c) const { return values[std::size_t(r) * cols + c]; }
  double cell_lat(int r) const {
    return bbox.min_lat + (r + 0.5) * (bbox.max_lat - bbox.min_lat) / rows;
  }
  double cell_lon(int c) const {
    return bbox.min_lon + (c + 0.5) * (bbox.max_lon - bbox.min_lon) / cols;
  }
};

// Inverse-distance-weighted interpolation of station deltas onto a grid of
// cell centers. A cell within a meter of a station takes its value exactly.
inline GeoDeltaGrid idw_grid(const std::vector<StationDelta>& deltas,
                             const std::map<std::string, LatLon>& coords,
                             BoundingBox bbox, int rows, int cols,
                             double power = 2.0, Seconds reference_time = 0,
                             Seconds baseline_time = 5 * 3600) {
  if (deltas.empty()) throw EmptyInput("no station deltas to interpolate");
  if (rows < 1 || cols < 1) throw Error("grid resolution must be at least 1x1");
  std::vector<LatLon> points;
  points.reserve(deltas.size());
  for (const auto& d : deltas) {
    auto it = coords.find(d.station_id);
    if (it == coords.end())
      throw UnknownStation("no coordinates for station '" + d.station_id + "'");
    points.push_back(it->second);
  }
  GeoDeltaGrid grid;
  grid.bbox = bbox;
  grid.rows = rows;
  grid.cols = cols;
  grid.reference_time = reference_time;
  grid.baseline_time = baseline_time;
  grid.values.resize(std::size_t(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      LatLon cell{grid.cell_lat(r), grid.cell_lon(c)};
      double wsum = 0.0, vsum = 0.0;
      bool exact = false;
      for (std::size_t p = 0; p < points.size(); ++p) {
        double dist = haversine(cell, points[p]);
        if (dist < 1.0) {
          grid.values[std::size_t(r) * cols + c] = deltas[p].delta;
          exact = true;
          break;
        }
        double w = 1.0 / std::pow(dist, power);
        wsum += w;
        vsum += w * deltas[p].delta;
      }
      if (!exact) grid.values[std::size_t(r) * cols + c] = vsum / wsum;
    }
  }
  return grid;
}

}  // namespace bikeflow
