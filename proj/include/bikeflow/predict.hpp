#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bikeflow/config.hpp"
#include "bikeflow/cycles.hpp"
#include "bikeflow/errors.hpp"
#include "bikeflow/preprocess.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

enum class Scheme { AllOtherDays, SameWeekday, WeekdayWeekendSplit };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::AllOtherDays: return "all-other-days";
    case Scheme::SameWeekday: return "same-weekday";
    case Scheme::WeekdayWeekendSplit: return "weekday-weekend-split";
  }
  return "";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "all-other-days") return Scheme::AllOtherDays;
  if (s == "same-weekday") return Scheme::SameWeekday;
  if (s == "weekday-weekend-split") return Scheme::WeekdayWeekendSplit;
  throw ConfigError("unknown scheme '" + s + "'");
}

// Which cycle a day contributes to (and is predicted from) under a scheme.
inline int class_key(Scheme scheme, Date date, const std::set<Date>& holidays) {
  switch (scheme) {
    case Scheme::AllOtherDays: return 0;
    case Scheme::SameWeekday: return day_of_week(date);
    case Scheme::WeekdayWeekendSplit:
      return classify_day(date, holidays) == DayClass::Weekend ? 1 : 0;
  }
  return 0;
}

struct Forecast {
  std::string station_id;
  TimePoint issue_time = 0;
  Seconds offset = 0;
  double predicted_bikes = 0.0;
  std::string model;
  bool fallback = false;  // gradient model had no cycle bin and held steady
};

inline Forecast predict_persistence(const std::string& station_id,
                                    double current_bikes, TimePoint issue_time,
                                    Seconds offset) {
  return {station_id, issue_time, offset, current_bikes, "persistence", false};
}

// Current level plus the cycle's expected change over the offset, kept within
// the rack's physical range.
inline Forecast predict_gradient(const std::string& station_id,
                                 double current_bikes, TimePoint issue_time,
                                 Seconds offset, const DailyCycle& cycle,
                                 double capacity) {
  Forecast fc{station_id, issue_time, offset, current_bikes, "gradient", false};
  Seconds tod = time_of_day(issue_time);
  try {
    std::size_t from = cycle.bin_of(tod);
    std::size_t to = cycle.bin_of(tod + offset);
    if (!cycle.has(from) || !cycle.has(to)) throw TimeOffGrid("no support");
    double delta = cycle.mean[to] - cycle.mean[from];
    fc.predicted_bikes =
        std::clamp(current_bikes + delta, 0.0, capacity);
  } catch (const TimeOffGrid&) {
    fc.fallback = true;
  }
  return fc;
}

struct StationDays {
  std::string station_id;
  std::vector<DayColumn> days;
};

struct CycleModel {
  Scheme scheme = Scheme::AllOtherDays;
  Date excluded_day = -1;
  std::map<std::string, std::map<int, DailyCycle>> cycles;

  const DailyCycle* cycle_for(const std::string& station, Date date,
                              const std::set<Date>& holidays) const {
    auto st = cycles.find(station);
    if (st == cycles.end()) return nullptr;
    auto key = st->second.find(class_key(scheme, date, holidays));
    if (key == st->second.end()) return nullptr;
    return &key->second;
  }
};

// Cycles per station and class key, built from every day except the one being
// predicted.
inline CycleModel build_cycle_model(const std::vector<StationDays>& stations,
                                    Scheme scheme, Date excluded_day,
                                    const std::set<Date>& holidays,
                                    DailyWindow window, Seconds step,
                                    FilterOrder order = FilterOrder::AverageThenMedian,
                                    int median_window = 3) {
  CycleModel model;
  model.scheme = scheme;
  model.excluded_day = excluded_day;
  bool any = false;
  for (const auto& st : stations) {
    std::map<int, std::vector<const std::vector<std::optional<double>>*>>
        groups;
    for (const auto& day : st.days) {
      if (day.date == excluded_day) continue;
      groups[class_key(scheme, day.date, holidays)].push_back(&day.bikes);
    }
    for (const auto& [key, columns] : groups) {
      DayClass dc = DayClass::Weekday;
      if ((scheme == Scheme::WeekdayWeekendSplit && key == 1) ||
          (scheme == Scheme::SameWeekday && key >= 5))
        dc = DayClass::Weekend;
      model.cycles[st.station_id][key] = detail::aggregate_days(
          st.station_id, dc, columns, window, step, order, median_window);
      any = true;
    }
  }
  if (!any) throw InsufficientData("no days left to build cycles from");
  return model;
}

struct EvalRow {
  std::string model;
  std::string scheme;  // "-" for persistence
  Seconds offset = 0;
  double mae = 0.0;
  double bias = 0.0;
  long n_points = 0;
  long fallbacks = 0;
};

namespace detail {

struct ClassSums {
  std::vector<double> sum;
  std::vector<int> count;
};

}  // namespace detail

// Scores persistence and the gradient model over every (station, day, issue
// bin) triple with a valid actual at both ends of the offset. Every model is
// scored on exactly the same points; the gradient model holds steady
// (persistence fallback) where its cycle has a hole.
inline std::vector<EvalRow> evaluate(
    const std::vector<StationDays>& stations,
    const std::vector<Scheme>& schemes, const std::vector<Seconds>& offsets,
    const std::set<Date>& holidays, DailyWindow window, Seconds step,
    FilterOrder order = FilterOrder::AverageThenMedian, int median_window = 3) {
  for (Seconds off : offsets) {
    if (off <= 0) throw Error("offsets must be positive");
    if (off % step != 0)
      throw TimeOffGrid("offset " + std::to_string(off / 60) +
                        " min is off the sampling grid");
  }
  std::size_t nbins = bins_per_day(window, step);

  struct Accum {
    double abs_sum = 0.0;
    double signed_sum = 0.0;
    long n = 0;
    long fallbacks = 0;
  };
  // accumulators: [scheme or persistence][offset]
  std::vector<std::vector<Accum>> acc(schemes.size() + 1,
                                      std::vector<Accum>(offsets.size()));

  for (const auto& st : stations) {
    // per-day columns, optionally median-filtered before any averaging
    std::vector<const std::vector<std::optional<double>>*> mean_cols;
    std::vector<std::vector<std::optional<double>>> filtered;
    if (order == FilterOrder::MedianThenAverage) {
      filtered.reserve(st.days.size());
      for (const auto& day : st.days)
        filtered.push_back(median_filter(day.bikes, median_window));
      for (const auto& col : filtered) mean_cols.push_back(&col);
    } else {
      for (const auto& day : st.days) mean_cols.push_back(&day.bikes);
    }

    double station_cap = 0.0;
    for (const auto& day : st.days)
      for (std::size_t b = 0; b < nbins; ++b) {
        if (day.total_slots[b]) station_cap = std::max(station_cap, *day.total_slots[b]);
        if (day.bikes[b]) station_cap = std::max(station_cap, *day.bikes[b]);
      }

    // class sums per scheme for O(1) leave-one-out means
    std::vector<std::map<int, detail::ClassSums>> sums(schemes.size());
    for (std::size_t sc = 0; sc < schemes.size(); ++sc) {
      for (std::size_t d = 0; d < st.days.size(); ++d) {
        int key = class_key(schemes[sc], st.days[d].date, holidays);
        auto& cs = sums[sc][key];
        if (cs.sum.empty()) {
          cs.sum.assign(nbins, 0.0);
          cs.count.assign(nbins, 0);
        }
        for (std::size_t b = 0; b < nbins; ++b)
          if ((*mean_cols[d])[b]) {
            cs.sum[b] += *(*mean_cols[d])[b];
            cs.count[b] += 1;
          }
      }
    }

    std::vector<std::optional<double>> cycle_mean(nbins);
    for (std::size_t d = 0; d < st.days.size(); ++d) {
      const auto& day = st.days[d];
      for (std::size_t sc = 0; sc <= schemes.size(); ++sc) {
        bool persistence = sc == schemes.size();
        if (!persistence) {
          int key = class_key(schemes[sc], day.date, holidays);
          const auto& cs = sums[sc][key];
          for (std::size_t b = 0; b < nbins; ++b) {
            double s = cs.sum[b];
            int c = cs.count[b];
            if ((*mean_cols[d])[b]) {
              s -= *(*mean_cols[d])[b];
              c -= 1;
            }
            cycle_mean[b] =
                c > 0 ? std::optional<double>(s / c) : std::nullopt;
          }
          if (order == FilterOrder::AverageThenMedian)
            cycle_mean = median_filter(cycle_mean, median_window);
        }
        for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
          auto off_bins = static_cast<std::size_t>(offsets[oi] / step);
          for (std::size_t b = 0; b + off_bins < nbins; ++b) {
            if (!day.bikes[b] || !day.bikes[b + off_bins]) continue;
            double current = *day.bikes[b];
            double actual = *day.bikes[b + off_bins];
            double predicted;
            bool fell_back = false;
            if (persistence) {
              predicted = current;
            } else if (cycle_mean[b] && cycle_mean[b + off_bins]) {
              double cap = day.total_slots[b] ? *day.total_slots[b]
                                              : station_cap;
              predicted = std::clamp(
                  current + (*cycle_mean[b + off_bins] - *cycle_mean[b]), 0.0,
                  cap);
            } else {
              predicted = current;
              fell_back = true;
            }
            auto& a = acc[sc][oi];
            a.abs_sum += std::abs(predicted - actual);
            a.signed_sum += predicted - actual;
            a.n += 1;
            if (fell_back) a.fallbacks += 1;
          }
        }
      }
    }
  }

  std::vector<EvalRow> rows;
  for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
    const auto& a = acc[schemes.size()][oi];
    rows.push_back({"persistence", "-", offsets[oi],
                    a.n ? a.abs_sum / a.n : 0.0, a.n ? a.signed_sum / a.n : 0.0,
                    a.n, 0});
  }
  for (std::size_t sc = 0; sc < schemes.size(); ++sc)
    for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
      const auto& a = acc[sc][oi];
      rows.push_back({"gradient", to_string(schemes[sc]), offsets[oi],
                      a.n ? a.abs_sum / a.n : 0.0,
                      a.n ? a.signed_sum / a.n : 0.0, a.n, a.fallbacks});
    }
  return rows;
}

}  // namespace bikeflow
