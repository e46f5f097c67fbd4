#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bikeflow/errors.hpp"
#include "bikeflow/ingest.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

// Regular-grid per-station time series. Absent samples stay absent; nothing
// downstream may mistake a feed dropout for an empty station.
struct StationSeries {
  std::string station_id;
  TimePoint grid_start = 0;
  Seconds step = kDefaultStep;
  std::vector<std::optional<int>> bikes;
  std::vector<std::optional<int>> total_slots;

  std::size_t size() const { return bikes.size(); }
  TimePoint time_at(std::size_t i) const {
    return grid_start + static_cast<TimePoint>(i) * step;
  }
};

enum class DayClass { Weekday, Weekend };

inline const char* to_string(DayClass c) {
  return c == DayClass::Weekday ? "weekday" : "weekend";
}

// Saturdays, Sundays and calendar holidays count as Weekend.
inline DayClass classify_day(Date date, const std::set<Date>& holidays) {
  if (is_saturday_or_sunday(date) || holidays.count(date) > 0)
    return DayClass::Weekend;
  return DayClass::Weekday;
}

// Samples the snapshot stream onto a fixed grid with an explicit extent.
// Each grid point takes the latest observation within [t, t+step).
inline StationSeries regularize(std::span<const Snapshot> snapshots,
                                const std::string& station_id, Seconds step,
                                TimePoint grid_start, TimePoint grid_end) {
  if (step <= 0) throw Error("regularize: step must be positive");
  StationSeries series;
  series.station_id = station_id;
  series.grid_start = grid_start;
  series.step = step;
  std::size_t n = 0;
  if (grid_end > grid_start)
    n = static_cast<std::size_t>((grid_end - grid_start + step - 1) / step);
  series.bikes.assign(n, std::nullopt);
  series.total_slots.assign(n, std::nullopt);

  bool seen = false;
  for (const auto& snap : snapshots) {
    const StationObservation* obs = nullptr;
    for (const auto& o : snap.observations)
      if (o.station_id == station_id) {
        obs = &o;
        break;
      }
    if (!obs) continue;
    seen = true;
    if (snap.timestamp < grid_start || snap.timestamp >= grid_end) continue;
    auto bin = static_cast<std::size_t>((snap.timestamp - grid_start) / step);
    // snapshots arrive in time order, so a later hit overwrites an earlier one
    series.bikes[bin] = obs->bikes;
    series.total_slots[bin] = obs->capacity();
  }
  if (!seen)
    throw UnknownStation("station '" + station_id + "' not in any snapshot");
  return series;
}

// Grid spans the observations themselves: ceil(range/step) points from the
// first snapshot, where range covers through the last snapshot inclusive.
inline StationSeries regularize(std::span<const Snapshot> snapshots,
                                const std::string& station_id,
                                Seconds step = kDefaultStep) {
  if (step <= 0) throw Error("regularize: step must be positive");
  if (snapshots.empty())
    throw UnknownStation("station '" + station_id + "' not in any snapshot");
  TimePoint first = snapshots.front().timestamp;
  TimePoint last = snapshots.back().timestamp;
  return regularize(snapshots, station_id, step, first, last + 1);
}

// Samples taken while the station reports fewer than min_total slots are
// dropped; such readings are feed noise, not usage.
inline StationSeries filter_low_capacity(StationSeries series,
                                         int min_total = 10) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.total_slots[i] && *series.total_slots[i] < min_total) {
      series.bikes[i] = std::nullopt;
      series.total_slots[i] = std::nullopt;
    }
  }
  return series;
}

namespace detail {

inline double median_of(std::vector<double>& scratch) {
  std::sort(scratch.begin(), scratch.end());
  std::size_t n = scratch.size();
  if (n % 2 == 1) return scratch[n / 2];
  return 0.5 * (scratch[n / 2 - 1] + scratch[n / 2]);
}

}  // namespace detail

// Sliding median with the window shrinking symmetrically at the edges, so
// every window stays centered on its output sample.
inline std::vector<double> median_filter(const std::vector<double>& values,
                                         int window = 3) {
  if (window < 1 || window % 2 == 0)
    throw EvenWindow("median window must be odd, got " +
                     std::to_string(window));
  std::size_t n = values.size();
  std::vector<double> out(n);
  int radius = window / 2;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    int r = std::min<long>({radius, static_cast<long>(i),
                            static_cast<long>(n - 1 - i)});
    scratch.assign(values.begin() + (i - r), values.begin() + (i + r + 1));
    out[i] = detail::median_of(scratch);
  }
  return out;
}

// Missing samples are excluded from each window's median, and stay missing in
// the output: the filter smooths, it never invents data for gaps.
inline std::vector<std::optional<double>> median_filter(
    const std::vector<std::optional<double>>& values, int window = 3) {
  if (window < 1 || window % 2 == 0)
    throw EvenWindow("median window must be odd, got " +
                     std::to_string(window));
  std::size_t n = values.size();
  std::vector<std::optional<double>> out(n);
  int radius = window / 2;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    if (!values[i]) continue;
    int r = std::min<long>({radius, static_cast<long>(i),
                            static_cast<long>(n - 1 - i)});
    scratch.clear();
    for (std::size_t j = i - r; j <= i + r; ++j)
      if (values[j]) scratch.push_back(*values[j]);
    out[i] = detail::median_of(scratch);
  }
  return out;
}

// Marks samples outside the daily service window as missing. Window start is
// inclusive, end exclusive.
inline StationSeries clip_service_window(StationSeries series,
                                         DailyWindow window = {5 * 3600,
                                                               24 * 3600}) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    Seconds tod = time_of_day(series.time_at(i));
    if (!window.contains(tod)) {
      series.bikes[i] = std::nullopt;
      series.total_slots[i] = std::nullopt;
    }
  }
  return series;
}

// One civil day of a station's samples, aligned to the daily-window bin grid.
struct DayColumn {
  Date date = 0;
  std::vector<std::optional<double>> bikes;
  std::vector<std::optional<double>> total_slots;
};

inline std::size_t bins_per_day(DailyWindow window, Seconds step) {
  return static_cast<std::size_t>((window.end - window.start + step - 1) /
                                  step);
}

// Splits a series into per-day columns over the daily window. Days with no
// samples at all are not emitted.
inline std::vector<DayColumn> split_days(const StationSeries& series,
                                         DailyWindow window) {
  std::vector<DayColumn> days;
  std::size_t nbins = bins_per_day(window, series.step);
  auto column_for = [&](Date d) -> DayColumn& {
    if (days.empty() || days.back().date != d) {
      DayColumn col;
      col.date = d;
      col.bikes.assign(nbins, std::nullopt);
      col.total_slots.assign(nbins, std::nullopt);
      days.push_back(std::move(col));
    }
    return days.back();
  };
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!series.bikes[i]) continue;
    TimePoint t = series.time_at(i);
    Seconds tod = time_of_day(t);
    if (!window.contains(tod)) continue;
    auto bin = static_cast<std::size_t>((tod - window.start) / series.step);
    auto& col = column_for(date_of(t));
    col.bikes[bin] = static_cast<double>(*series.bikes[i]);
    if (series.total_slots[i])
      col.total_slots[bin] = static_cast<double>(*series.total_slots[i]);
  }
  return days;
}

}  // namespace bikeflow
