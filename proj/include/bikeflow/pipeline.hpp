#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bikeflow/cluster.hpp"
#include "bikeflow/config.hpp"
#include "bikeflow/csv.hpp"
#include "bikeflow/cycles.hpp"
#include "bikeflow/errors.hpp"
#include "bikeflow/ingest.hpp"
#include "bikeflow/preprocess.hpp"
#include "bikeflow/routes.hpp"
#include "bikeflow/simgen.hpp"
#include "bikeflow/strings.hpp"

namespace bikeflow {

inline std::map<std::string, StationInfo> station_registry(
    std::span<const Snapshot> snapshots) {
  std::map<std::string, StationInfo> registry;
  for (const auto& snap : snapshots)
    for (const auto& obs : snap.observations)
      registry[obs.station_id] = {obs.name, obs.latitude, obs.longitude};
  return registry;
}

struct SeriesSet {
  std::map<std::string, StationSeries> by_station;
  std::map<std::string, StationInfo> registry;
};

// Every station sampled onto one shared grid spanning the whole stream, then
// capacity-filtered and clipped to the service window.
inline SeriesSet preprocess_all(std::span<const Snapshot> snapshots,
                                const RunConfig& cfg) {
  if (snapshots.empty()) throw EmptyInput("no snapshots to preprocess");
  SeriesSet set;
  set.registry = station_registry(snapshots);
  TimePoint first = snapshots.front().timestamp;
  TimePoint last = snapshots.back().timestamp;
  for (const auto& [id, info] : set.registry) {
    auto series = regularize(snapshots, id, cfg.step, first, last + 1);
    series = filter_low_capacity(std::move(series), cfg.min_total_slots);
    series = clip_service_window(std::move(series), cfg.service_window);
    set.by_station.emplace(id, std::move(series));
  }
  return set;
}

// Per-station cycle for one day class. Stations with no matching days are
// skipped rather than failing the whole batch.
inline std::map<std::string, DailyCycle> station_cycles(const SeriesSet& set,
                                                        DayClass day_class,
                                                        const RunConfig& cfg) {
  std::map<std::string, DailyCycle> cycles;
  for (const auto& [id, series] : set.by_station) {
    try {
      cycles.emplace(id, station_cycle(series, day_class, cfg.holidays,
                                       cfg.service_window, cfg.filter_order,
                                       cfg.median_window));
    } catch (const NoMatchingDays&) {
    }
  }
  return cycles;
}

struct VectorSet {
  std::vector<CycleVector> vectors;
  std::vector<std::size_t> bins;  // cycle bins shared by every station
};

// Cycle vectors restricted to the bins every station supports, so the L1
// metric compares like with like.
inline VectorSet common_cycle_vectors(
    const std::map<std::string, DailyCycle>& cycles) {
  if (cycles.empty()) throw EmptyInput("no cycles to vectorize");
  VectorSet vs;
  std::size_t nbins = cycles.begin()->second.size();
  for (const auto& [id, cycle] : cycles)
    if (cycle.size() != nbins)
      throw LengthMismatch("cycles disagree on the bin grid");
  for (std::size_t b = 0; b < nbins; ++b) {
    bool everywhere = true;
    for (const auto& [id, cycle] : cycles)
      if (!cycle.has(b)) {
        everywhere = false;
        break;
      }
    if (everywhere) vs.bins.push_back(b);
  }
  if (vs.bins.size() < 2)
    throw InsufficientData("fewer than 2 bins shared by all stations");
  for (const auto& [id, cycle] : cycles) {
    CycleVector v;
    v.station_id = id;
    v.values.reserve(vs.bins.size());
    for (auto b : vs.bins) v.values.push_back(cycle.mean[b]);
    vs.vectors.push_back(std::move(v));
  }
  return vs;
}

struct RouteInputs {
  MorningAggregate agg;
  std::vector<LatLon> coords;
  std::vector<std::vector<double>> morning_means;
  std::vector<DailyCycle> cycles;  // full service-window cycles, same order
  std::vector<std::string> dropped;  // stations without full morning support
};

// Stations with complete support across the morning window, with their
// boundary levels and morning cycle slices.
inline RouteInputs assemble_route_inputs(const SeriesSet& set,
                                         const RunConfig& cfg,
                                         DayClass day_class = DayClass::Weekday) {
  auto cycles = station_cycles(set, day_class, cfg);
  if (cycles.empty()) throw InsufficientData("no station cycles available");
  RouteInputs in;
  in.agg.window = cfg.morning_window;
  for (auto& [id, cycle] : cycles) {
    std::size_t i0 = cycle.bin_of(cfg.morning_window.start);
    std::size_t i1 = cycle.bin_of(cfg.morning_window.end);
    bool complete = true;
    for (std::size_t b = i0; b <= i1; ++b)
      if (!cycle.has(b)) {
        complete = false;
        break;
      }
    if (!complete) {
      in.dropped.push_back(id);
      continue;
    }
    in.agg.ids.push_back(id);
    in.agg.I.push_back(cycle.mean[i0]);
    in.agg.F.push_back(cycle.mean[i1]);
    auto info = set.registry.at(id);
    in.coords.push_back({info.latitude, info.longitude});
    in.morning_means.emplace_back(cycle.mean.begin() + i0,
                                  cycle.mean.begin() + i1);
    in.cycles.push_back(std::move(cycle));
  }
  if (in.agg.ids.size() < 2)
    throw InsufficientData("fewer than 2 stations cover the morning window");
  return in;
}

struct RouteAnalysis {
  RouteInputs inputs;
  std::vector<StationRole> roles;
  std::vector<Coupling> couplings;
  TransitionModel model;
};

inline RouteAnalysis analyze_routes(const SeriesSet& set, const RunConfig& cfg,
                                    std::uint64_t seed,
                                    DayClass day_class = DayClass::Weekday) {
  RouteAnalysis ra;
  ra.inputs = assemble_route_inputs(set, cfg, day_class);
  ra.roles = classify_roles(ra.inputs.agg,
                            static_cast<double>(cfg.role_threshold_bikes));
  ra.couplings =
      detect_couplings(ra.inputs.cycles, ra.inputs.coords, ra.roles,
                       cfg.morning_window, cfg.speed_kmh, cfg.coupling_min_score);
  auto features = build_features(ra.inputs.coords, ra.inputs.morning_means,
                                 ra.couplings, cfg.f1_sigma);
  // The squared-residual surface has several basins; restart the simplex
  // from a handful of spread-out exponent guesses and keep the best fit.
  static constexpr std::array<std::array<double, 3>, 5> kInits{{
      {1.0, 1.0, 1.0},
      {2.0, 0.5, 2.0},
      {0.5, 2.0, 0.5},
      {3.0, 1.0, 0.0},
      {0.0, 1.0, 3.0},
  }};
  bool first = true;
  for (std::size_t v = 0; v < kInits.size(); ++v) {
    auto fit = fit_lambda(ra.inputs.agg, features, kInits[v], 1e-4, 500,
                          seed + v);
    if (first || fit.objective < ra.model.objective) ra.model = std::move(fit);
    first = false;
  }
  return ra;
}

// Schedule CSV: origin_id,dest_id,day_class,start,end,trips_per_hour.
// Station ids are resolved against the network's stations.
inline ODSchedule load_schedule(const std::filesystem::path& path,
                                const std::vector<StationSite>& stations) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("no such schedule: '" + path.string() + "'");
  std::map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < stations.size(); ++s)
    index[stations[s].id] = s;

  ODSchedule schedule;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (line_no == 1 && stripped.rfind("origin_id", 0) == 0) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 6)
      throw SchemaViolation(
          "schedule row needs 6 fields, got " + std::to_string(fields.size()),
          line_no);
    ODRate rate;
    auto origin = index.find(detail::trim(fields[0]));
    auto dest = index.find(detail::trim(fields[1]));
    if (origin == index.end() || dest == index.end())
      throw UnknownStation("schedule line " + std::to_string(line_no) +
                           ": unknown station id");
    rate.origin = origin->second;
    rate.destination = dest->second;
    std::string dc = detail::trim(fields[2]);
    if (dc == "weekday")
      rate.day_class = DayClass::Weekday;
    else if (dc == "weekend")
      rate.day_class = DayClass::Weekend;
    else
      throw SchemaViolation("day class must be weekday or weekend", line_no);
    rate.start = parse_time_of_day(detail::trim(fields[3]));
    rate.end = parse_time_of_day(detail::trim(fields[4]));
    if (rate.start >= rate.end)
      throw SchemaViolation("start must precede end", line_no);
    rate.trips_per_hour = csv::parse_double(fields[5], line_no);
    if (rate.trips_per_hour < 0)
      throw SchemaViolation("rate must be non-negative", line_no);
    schedule.entries.push_back(rate);
  }
  return schedule;
}

inline void save_trips(const std::filesystem::path& path, const TripLog& trips,
                       const std::vector<StationSite>& stations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "origin_id,dest_id,depart,arrive\n";
  for (const auto& t : trips)
    out << csv::quote_if_needed(stations[t.origin].id) << ','
        << csv::quote_if_needed(stations[t.destination].id) << ','
        << format_iso8601(t.departure) << ',' << format_iso8601(t.arrival)
        << "\n";
}

inline void save_snapshots(const std::filesystem::path& path,
                           const std::vector<Snapshot>& snapshots) {
  SnapshotStore store;
  for (const auto& snap : snapshots) store.append(snap);
  store.save(path);
}

}  // namespace bikeflow
