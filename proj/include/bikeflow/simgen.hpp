#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "bikeflow/errors.hpp"
#include "bikeflow/geo.hpp"
#include "bikeflow/ingest.hpp"
#include "bikeflow/preprocess.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

enum class Archetype { Residential, Office, University, Beach, Leisure };

inline const char* to_string(Archetype a) {
  switch (a) {
    case Archetype::Residential: return "residential";
    case Archetype::Office: return "office";
    case Archetype::University: return "university";
    case Archetype::Beach: return "beach";
    case Archetype::Leisure: return "leisure";
  }
  return "";
}

struct StationSite {
  std::string id;
  LatLon pos;
  int capacity = 0;
  Archetype archetype = Archetype::Residential;
};

struct NetworkSpec {
  int station_count = 0;
  std::vector<StationSite> stations;  // when set, used verbatim
  BoundingBox bbox{41.35, 2.10, 41.45, 2.25};
  int min_capacity = 15;
  int max_capacity = 39;
  std::uint64_t seed = 0;
};

struct Network {
  std::vector<StationSite> stations;
  std::vector<int> initial_bikes;  // stock at the simulation start
};

// Fraction of capacity parked at 5:00. Residential areas sleep full of
// bikes; work and campus areas start the day drained.
inline double initial_fill(Archetype a) {
  switch (a) {
    case Archetype::Residential: return 0.9;
    case Archetype::Office: return 0.1;
    case Archetype::University: return 0.1;
    case Archetype::Beach: return 0.2;
    case Archetype::Leisure: return 0.5;
  }
  return 0.5;
}

inline Network generate_network(const NetworkSpec& spec) {
  Network net;
  std::mt19937_64 rng(spec.seed);
  if (spec.min_capacity < 1 || spec.min_capacity > spec.max_capacity)
    throw InvalidSpec("bad capacity bounds");
  if (!spec.stations.empty()) {
    net.stations = spec.stations;
    for (const auto& s : net.stations) {
      if (s.capacity < spec.min_capacity || s.capacity > spec.max_capacity)
        throw InvalidSpec("station '" + s.id + "' capacity " +
                          std::to_string(s.capacity) + " out of bounds");
      if (!spec.bbox.contains(s.pos))
        throw InvalidSpec("station '" + s.id + "' outside the bounding box");
    }
  } else {
    if (spec.station_count < 1)
      throw InvalidSpec("station count must be at least 1");
    constexpr Archetype kRotation[] = {Archetype::Residential, Archetype::Office,
                                       Archetype::University, Archetype::Beach,
                                       Archetype::Leisure};
    std::uniform_real_distribution<double> ulat(spec.bbox.min_lat,
                                                spec.bbox.max_lat);
    std::uniform_real_distribution<double> ulon(spec.bbox.min_lon,
                                                spec.bbox.max_lon);
    std::uniform_int_distribution<int> ucap(spec.min_capacity,
                                            spec.max_capacity);
    for (int s = 0; s < spec.station_count; ++s) {
      StationSite site;
      site.id = "S" + std::to_string(s + 1);
      site.pos = {ulat(rng), ulon(rng)};
      site.capacity = ucap(rng);
      site.archetype = kRotation[s % 5];
      net.stations.push_back(std::move(site));
    }
  }
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (const auto& s : net.stations) {
    double fill = std::clamp(initial_fill(s.archetype) + jitter(rng), 0.0, 1.0);
    net.initial_bikes.push_back(
        std::clamp(static_cast<int>(std::lround(fill * s.capacity)), 0,
                   s.capacity));
  }
  return net;
}

// Demand between one ordered station pair during one daily interval.
struct ODRate {
  std::size_t origin = 0;
  std::size_t destination = 0;
  DayClass day_class = DayClass::Weekday;
  Seconds start = 0;
  Seconds end = 0;
  double trips_per_hour = 0.0;
};

struct ODSchedule {
  std::vector<ODRate> entries;
};

struct Trip {
  std::size_t origin = 0;
  std::size_t destination = 0;
  TimePoint departure = 0;
  TimePoint arrival = 0;
};

using TripLog = std::vector<Trip>;

struct TruckEvent {
  TimePoint time = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  int bikes = 0;
};

struct NoiseConfig {
  double rate_jitter = 0.0;  // per day and entry, uniform in [1-j, 1+j]
  double dropout_prob = 0.0;  // chance per station-day of a slot dropout
  int dropout_slots = 6;
  Seconds dropout_duration = 2 * 3600;
  std::vector<TruckEvent> trucks;
};

struct SimResult {
  std::vector<Snapshot> snapshots;
  TripLog trips;
};

namespace detail {

// Knuth inversion; fine for the small per-bin means a 2-minute step yields.
inline int poisson_draw(double mean, std::mt19937_64& rng) {
  if (mean <= 0.0) return 0;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double limit = std::exp(-mean);
  int count = 0;
  double product = u01(rng);
  while (product > limit) {
    ++count;
    product *= u01(rng);
  }
  return count;
}

}  // namespace detail

// Event-driven simulation on a 2-minute grid. Trips depart only when the
// origin holds a bike; a bike arriving at a full station turns back and
// reaches its origin after the retry delay. Reported free slots shrink
// during dropout episodes, the bikes themselves stay untouched.
inline SimResult simulate(const Network& net, const ODSchedule& schedule,
                          int days, const NoiseConfig& noise,
                          std::uint64_t seed,
                          Date start_date = 14004 /* 2008-05-05, a Monday */,
                          Seconds step = kDefaultStep,
                          double speed_kmh = 25.0,
                          Seconds retry_delay = 600) {
  if (days < 1) throw InvalidSpec("need at least one simulated day");
  std::size_t n = net.stations.size();
  if (n == 0) throw InvalidSpec("empty network");
  for (const auto& e : schedule.entries)
    if (e.origin >= n || e.destination >= n)
      throw InvalidSpec("schedule references a station out of range");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<int> bikes = net.initial_bikes;

  struct InTransit {
    TimePoint arrival;
    std::uint64_t sequence;
    std::size_t origin;
    std::size_t destination;
    TimePoint departure;
    bool returning;  // bounced off a full rack, heading home unlogged
    bool operator>(const InTransit& o) const {
      return std::tie(arrival, sequence) > std::tie(o.arrival, o.sequence);
    }
  };
  std::priority_queue<InTransit, std::vector<InTransit>, std::greater<>> moving;
  std::uint64_t sequence = 0;

  // travel times are fixed by geometry, precompute them
  std::vector<double> travel(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      travel[i * n + j] =
          haversine(net.stations[i].pos, net.stations[j].pos) /
          (speed_kmh / 3.6);

  struct Dropout {
    TimePoint start = 0;
    TimePoint end = 0;
    int slots = 0;
  };
  std::vector<std::vector<Dropout>> dropouts(n);
  std::vector<std::vector<double>> day_factor(days);
  for (int d = 0; d < days; ++d) {
    day_factor[d].resize(schedule.entries.size(), 1.0);
    if (noise.rate_jitter > 0.0)
      for (auto& f : day_factor[d])
        f = 1.0 + noise.rate_jitter * (2.0 * u01(rng) - 1.0);
    if (noise.dropout_prob > 0.0) {
      TimePoint day_start = at_midnight(start_date + d);
      for (std::size_t s = 0; s < n; ++s) {
        if (u01(rng) >= noise.dropout_prob) continue;
        auto offset = static_cast<Seconds>(
            u01(rng) * (kSecondsPerDay - noise.dropout_duration));
        dropouts[s].push_back({day_start + offset,
                               day_start + offset + noise.dropout_duration,
                               noise.dropout_slots});
      }
    }
  }

  SimResult result;
  TimePoint sim_start = at_midnight(start_date);
  TimePoint sim_end = at_midnight(start_date + days);
  auto truck_queue = noise.trucks;
  std::sort(truck_queue.begin(), truck_queue.end(),
            [](const TruckEvent& a, const TruckEvent& b) {
              return a.time < b.time;
            });
  std::size_t next_truck = 0;

  for (TimePoint t = sim_start; t < sim_end; t += step) {
    while (!moving.empty() && moving.top().arrival <= t) {
      InTransit trip = moving.top();
      moving.pop();
      std::size_t dest = trip.destination;
      if (bikes[dest] < net.stations[dest].capacity) {
        ++bikes[dest];
        if (!trip.returning)
          result.trips.push_back(
              {trip.origin, dest, trip.departure, trip.arrival});
      } else {
        // full rack: ride back and try the origin again later
        moving.push({trip.arrival + retry_delay, sequence++, trip.origin,
                     trip.origin, trip.departure, true});
      }
    }
    while (next_truck < truck_queue.size() &&
           truck_queue[next_truck].time <= t) {
      const auto& ev = truck_queue[next_truck++];
      if (ev.from >= n || ev.to >= n) continue;
      int movable = std::min(
          {ev.bikes, bikes[ev.from],
           net.stations[ev.to].capacity - bikes[ev.to]});
      if (movable > 0) {
        bikes[ev.from] -= movable;
        bikes[ev.to] += movable;
      }
    }
    Seconds tod = time_of_day(t);
    Date date = date_of(t);
    DayClass dc = classify_day(date, {});
    int day_index = static_cast<int>(date - start_date);
    for (std::size_t e = 0; e < schedule.entries.size(); ++e) {
      const auto& entry = schedule.entries[e];
      if (entry.day_class != dc) continue;
      if (tod < entry.start || tod >= entry.end) continue;
      double mean = entry.trips_per_hour * day_factor[day_index][e] *
                    (static_cast<double>(step) / 3600.0);
      int count = detail::poisson_draw(mean, rng);
      for (int c = 0; c < count && bikes[entry.origin] > 0; ++c) {
        --bikes[entry.origin];
        auto secs = static_cast<Seconds>(
            std::llround(travel[entry.origin * n + entry.destination]));
        moving.push({t + std::max<Seconds>(secs, 1), sequence++, entry.origin,
                     entry.destination, t, false});
      }
    }
    Snapshot snap;
    snap.timestamp = t;
    snap.observations.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
      int reported_capacity = net.stations[s].capacity;
      for (const auto& drop : dropouts[s])
        if (t >= drop.start && t < drop.end)
          reported_capacity = std::max(0, reported_capacity - drop.slots);
      StationObservation obs;
      obs.station_id = net.stations[s].id;
      obs.name = net.stations[s].id;
      obs.latitude = net.stations[s].pos.lat;
      obs.longitude = net.stations[s].pos.lon;
      obs.bikes = bikes[s];
      obs.free_slots = std::max(0, reported_capacity - bikes[s]);
      snap.observations.push_back(std::move(obs));
    }
    result.snapshots.push_back(std::move(snap));
  }
  return result;
}

struct GroundTruth {
  std::vector<std::vector<double>> P;  // [destination][origin]
  std::vector<double> I;
  std::vector<double> F;
};

// Empirical transition frequencies from the trip log, averaged across the
// days spanned by the snapshots. Bikes that never left count as staying.
inline GroundTruth ground_truth_transition(const TripLog& trips,
                                           const std::vector<Snapshot>& snapshots,
                                           std::size_t n_stations,
                                           DailyWindow window,
                                           DayClass day_class = DayClass::Weekday) {
  if (snapshots.empty()) throw EmptyInput("no snapshots");
  std::size_t n = n_stations;
  GroundTruth gt;
  gt.P.assign(n, std::vector<double>(n, 0.0));
  gt.I.assign(n, 0.0);
  gt.F.assign(n, 0.0);

  std::vector<std::vector<double>> trip_count(n, std::vector<double>(n, 0.0));
  std::vector<double> initial_total(n, 0.0);
  long start_days = 0, end_days = 0;

  std::set<Date> dates;
  for (const auto& snap : snapshots) {
    Date d = date_of(snap.timestamp);
    if (classify_day(d, {}) != day_class) continue;
    Seconds tod = time_of_day(snap.timestamp);
    if (tod == window.start) {
      ++start_days;
      for (std::size_t s = 0; s < snap.observations.size() && s < n; ++s)
        initial_total[s] += snap.observations[s].bikes;
      dates.insert(d);
    }
    if (tod == window.end) {
      ++end_days;
      for (std::size_t s = 0; s < snap.observations.size() && s < n; ++s)
        gt.F[s] += snap.observations[s].bikes;
    }
  }
  if (start_days == 0 || end_days == 0)
    throw EmptyInput("window boundaries missing from the snapshot grid");
  for (std::size_t s = 0; s < n; ++s) gt.I[s] = initial_total[s] / start_days;
  for (auto& v : gt.F) v /= end_days;

  for (const auto& trip : trips) {
    Date d = date_of(trip.departure);
    if (!dates.count(d)) continue;
    Seconds tod = time_of_day(trip.departure);
    if (tod < window.start || tod >= window.end) continue;
    if (trip.origin >= n || trip.destination >= n) continue;
    trip_count[trip.destination][trip.origin] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double have = initial_total[i];
    if (have <= 0.0) {
      gt.P[i][i] = 1.0;
      continue;
    }
    double out = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      gt.P[j][i] = trip_count[j][i] / have;
      out += gt.P[j][i];
    }
    gt.P[i][i] = std::max(0.0, 1.0 - out);
  }
  return gt;
}

}  // namespace bikeflow
