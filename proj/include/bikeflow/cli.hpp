#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bikeflow/config.hpp"
#include "bikeflow/geojson.hpp"
#include "bikeflow/pipeline.hpp"
#include "bikeflow/predict.hpp"
#include "bikeflow/stats.hpp"

namespace bikeflow {

namespace detail {

// "20080515T120000Z" (the dump-file convention) or a full ISO-8601 stamp.
inline TimePoint timestamp_from_stem(const std::string& stem) {
  if (stem.find('-') != std::string::npos) return parse_iso8601(stem);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, ss = 0;
  char t = 0, z = 0;
  int n = std::sscanf(stem.c_str(), "%4d%2d%2d%c%2d%2d%2d%c", &y, &mo, &d, &t,
                      &h, &mi, &ss, &z);
  if (n != 8 || t != 'T' || z != 'Z' || h > 23 || mi > 59 || ss > 60)
    throw Error("cannot read a timestamp from '" + stem +
                "' (expected e.g. 20080515T120000Z)");
  return at_midnight(make_date(y, mo, d)) + h * 3600 + mi * 60 + ss;
}

inline ValidationLimits load_limits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("no such limits file: '" + path.string() + "'");
  ValidationLimits lim;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string text = trim(line);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("limits line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(std::string_view(text).substr(0, eq));
    std::string value = trim(std::string_view(text).substr(eq + 1));
    try {
      if (key == "min_capacity")
        lim.min_capacity = std::stoi(value);
      else if (key == "max_capacity")
        lim.max_capacity = std::stoi(value);
      else if (key == "max_total_bikes")
        lim.max_total_bikes = std::stol(value);
      else
        throw ConfigError("unknown limits key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("limits line " + std::to_string(line_no) +
                        ": bad value '" + value + "'");
    }
  }
  return lim;
}

inline const char* kind_string(ValidationWarning::Kind k) {
  switch (k) {
    case ValidationWarning::Kind::CapacityOutOfRange:
      return "capacity-out-of-range";
    case ValidationWarning::Kind::TotalBikesExceeded:
      return "total-bikes-exceeded";
    case ValidationWarning::Kind::ZeroCapacity:
      return "zero-capacity";
  }
  return "";
}

inline std::pair<int, int> parse_grid(const std::string& s) {
  int rows = 0, cols = 0;
  char x = 0;
  if (std::sscanf(s.c_str(), "%d%c%d", &rows, &x, &cols) != 3 || x != 'x' ||
      rows < 1 || cols < 1)
    throw CLI::ValidationError("--grid", "expected ROWSxCOLS, e.g. 100x100");
  return {rows, cols};
}

inline std::uint64_t resolve_seed(const RunConfig& cfg, bool cli_given,
                                  std::uint64_t cli_seed) {
  if (cli_given) return cli_seed;
  if (const char* env = std::getenv("BIKEFLOW_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("BIKEFLOW_SEED is not a number: '" +
                        std::string(env) + "'");
    }
  }
  return cfg.seed;
}

inline RunConfig config_from(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

inline std::map<std::string, LatLon> coord_map(
    const std::map<std::string, StationInfo>& registry) {
  std::map<std::string, LatLon> coords;
  for (const auto& [id, info] : registry)
    coords.emplace(id, LatLon{info.latitude, info.longitude});
  return coords;
}

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

// Fitted-versus-actual morning levels, stations ranked by how many bikes they
// average over the window, plus moving-average smoothed curves of both.
inline nlohmann::json fit_report(const RouteAnalysis& ra, int window) {
  const auto& agg = ra.inputs.agg;
  auto f_hat = propagate(ra.model.P, agg.I);
  std::size_t n = agg.ids.size();
  std::vector<double> avg(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto& m = ra.inputs.morning_means[s];
    avg[s] = std::accumulate(m.begin(), m.end(), 0.0) / m.size();
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (avg[a] != avg[b]) return avg[a] < avg[b];
    return agg.ids[a] < agg.ids[b];
  });
  nlohmann::json stations = nlohmann::json::array();
  std::vector<double> f_sorted, f_hat_sorted;
  for (auto s : order) {
    stations.push_back({{"station_id", agg.ids[s]},
                        {"avg_bikes", avg[s]},
                        {"F", agg.F[s]},
                        {"F_hat", f_hat[s]}});
    f_sorted.push_back(agg.F[s]);
    f_hat_sorted.push_back(f_hat[s]);
  }
  return {{"lambda", ra.model.lambda},
          {"objective", ra.model.objective},
          {"iterations", ra.model.iterations},
          {"converged", ra.model.converged},
          {"stations", std::move(stations)},
          {"smoothed",
           {{"window", window},
            {"F", moving_average(f_sorted, window)},
            {"F_hat", moving_average(f_hat_sorted, window)}}}};
}

inline DayClass parse_day_class(const std::string& s) {
  return s == "weekend" ? DayClass::Weekend : DayClass::Weekday;
}

inline void cmd_ingest(const std::string& kml_dir, const std::string& store,
                       std::ostream& err) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(kml_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".kml")
      files.push_back(entry.path());
  if (files.empty()) throw EmptyInput("no .kml files in '" + kml_dir + "'");
  std::sort(files.begin(), files.end());

  SnapshotStore result;
  for (const auto& path : files) {
    TimePoint ts = timestamp_from_stem(path.stem().string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto parsed = parse_kml(buf.str());
    for (const auto& diag : parsed.skipped)
      err << path.filename().string() << ": " << diag << "\n";
    result.append({ts, std::move(parsed.observations)});
  }
  for (const auto& w : result.warnings()) err << w << "\n";
  result.save(store);
  err << "ingested " << result.snapshots().size() << " snapshots, "
      << result.registry().size() << " stations\n";
}

inline void cmd_validate(const std::string& store, const std::string& limits_path,
                         std::ostream& out, std::ostream& err) {
  auto snapshots = load_snapshots(store);
  ValidationLimits limits =
      limits_path.empty() ? ValidationLimits{} : load_limits(limits_path);
  out << "timestamp,station_id,kind,value\n";
  long total = 0;
  for (const auto& snap : snapshots) {
    auto report = validate_snapshot(snap, limits);
    for (const auto& w : report.warnings) {
      out << format_iso8601(snap.timestamp) << ','
          << csv::quote_if_needed(w.station_id) << ',' << kind_string(w.kind)
          << ',' << w.value << "\n";
      ++total;
    }
  }
  err << "checked " << snapshots.size() << " snapshots, " << total
      << " warnings\n";
}

inline void write_cycle_csv(const std::filesystem::path& path,
                            const DailyCycle& cycle) {
  auto out = open_csv(path);
  out << "time_of_day,mean,stdev,support\n";
  for (std::size_t i = 0; i < cycle.size(); ++i)
    out << format_time_of_day(cycle.time_at(i)) << ','
        << csv::format_double(cycle.mean[i]) << ','
        << csv::format_double(cycle.stdev[i]) << ',' << cycle.support[i]
        << "\n";
}

inline void cmd_cycles(const RunConfig& cfg, const std::string& store,
                       const std::string& station, bool global,
                       DayClass day_class, const std::string& out_path,
                       std::ostream& err) {
  auto snapshots = load_snapshots(store);
  DailyCycle cycle;
  if (global) {
    cycle = global_cycle(snapshots, day_class, cfg.holidays,
                         cfg.global_min_slots, cfg.service_window, cfg.step,
                         cfg.median_window);
  } else {
    auto set = preprocess_all(snapshots, cfg);
    auto it = set.by_station.find(station);
    if (it == set.by_station.end())
      throw UnknownStation("station '" + station + "' not in the store");
    cycle = station_cycle(it->second, day_class, cfg.holidays,
                          cfg.service_window, cfg.filter_order,
                          cfg.median_window);
  }
  write_cycle_csv(out_path, cycle);
  long supported = 0;
  for (std::size_t i = 0; i < cycle.size(); ++i)
    if (cycle.has(i)) ++supported;
  err << cycle.size() << " bins (" << supported << " supported) -> "
      << out_path << "\n";
}

inline void cmd_geopattern(const RunConfig& cfg, const std::string& store,
                           Seconds t, Seconds t0, int rows, int cols,
                           DayClass day_class, const std::string& out_path,
                           std::ostream& err) {
  auto snapshots = load_snapshots(store);
  auto set = preprocess_all(snapshots, cfg);
  auto by_station = station_cycles(set, day_class, cfg);
  std::vector<DailyCycle> cycles;
  cycles.reserve(by_station.size());
  for (auto& [id, cycle] : by_station) cycles.push_back(std::move(cycle));
  auto deltas = geo_delta(cycles, t, t0);
  if (deltas.empty())
    throw InsufficientData("no station supports both times");
  auto coords = coord_map(set.registry);
  BoundingBox bbox{90.0, 180.0, -90.0, -180.0};
  for (const auto& d : deltas) {
    const auto& pos = coords.at(d.station_id);
    bbox.min_lat = std::min(bbox.min_lat, pos.lat);
    bbox.max_lat = std::max(bbox.max_lat, pos.lat);
    bbox.min_lon = std::min(bbox.min_lon, pos.lon);
    bbox.max_lon = std::max(bbox.max_lon, pos.lon);
  }
  auto grid = idw_grid(deltas, coords, bbox, rows, cols, cfg.idw_power, t, t0);
  write_json(out_path, grid_geojson(grid, deltas, coords));
  err << deltas.size() << " stations interpolated onto " << rows << "x" << cols
      << " -> " << out_path << "\n";
}

inline void cmd_cluster(const RunConfig& cfg, const std::string& store,
                        const std::string& k_arg, int meta_k, int k_min,
                        int k_max, std::uint64_t seed,
                        const std::string& out_path,
                        const std::string& geojson_path, std::ostream& err) {
  auto snapshots = load_snapshots(store);
  auto set = preprocess_all(snapshots, cfg);
  auto cycles = station_cycles(set, DayClass::Weekday, cfg);
  auto vs = common_cycle_vectors(cycles);
  int n = static_cast<int>(vs.vectors.size());

  int k = 0;
  if (k_arg == "auto") {
    int hi = std::min(k_max, n);
    if (k_min > hi)
      throw InsufficientData("only " + std::to_string(n) +
                             " stations; k range is empty");
    auto sel = select_k(vs.vectors, k_min, hi, seed, cfg.internal_similarity);
    k = sel.k;
    err << "selected k=" << k << (sel.monotone ? " (monotone curve)" : "")
        << "\n";
  } else {
    k = std::stoi(k_arg);
  }
  auto model = kmeans_abs(vs.vectors, k, seed);
  int meta_k_eff = std::min(meta_k, model.k);
  if (meta_k_eff < meta_k)
    err << "meta-k reduced to " << meta_k_eff << " (only " << model.k
        << " clusters)\n";
  model = meta_cluster(std::move(model), meta_k_eff, seed);

  auto out = open_csv(out_path);
  out << "station_id,cluster,meta_cluster\n";
  for (const auto& [id, cluster] : model.assignment) {
    int meta = model.meta_assignment[static_cast<std::size_t>(cluster)];
    out << csv::quote_if_needed(id) << ',' << cluster << ',';
    if (meta == kUngrouped)
      out << "UNGROUPED";
    else
      out << meta;
    out << "\n";
  }
  if (!geojson_path.empty())
    write_json(geojson_path, zones_geojson(model, coord_map(set.registry)));
  err << n << " stations, k=" << model.k << ", meta-k=" << meta_k_eff
      << " -> " << out_path << "\n";
}

inline void cmd_predict(const RunConfig& cfg, const std::string& store,
                        const std::string& station, const std::string& at,
                        long offset_min, Scheme scheme, std::ostream& out,
                        std::ostream& err) {
  if (offset_min < 1)
    throw CLI::ValidationError("--offset", "must be a positive minute count");
  TimePoint issue = parse_iso8601(at);
  Seconds offset = offset_min * 60;
  auto snapshots = load_snapshots(store);
  auto set = preprocess_all(snapshots, cfg);
  auto it = set.by_station.find(station);
  if (it == set.by_station.end())
    throw UnknownStation("station '" + station + "' not in the store");
  const auto& series = it->second;

  if (issue < series.grid_start || (issue - series.grid_start) % series.step != 0)
    throw TimeOffGrid("issue time " + at + " is off the sampling grid");
  auto idx = static_cast<std::size_t>((issue - series.grid_start) / series.step);
  if (idx >= series.size())
    throw TimeOffGrid("issue time " + at + " is past the stored data");
  if (!series.bikes[idx])
    throw InsufficientData("no observation for '" + station + "' at " + at);
  double current = *series.bikes[idx];
  double capacity = 0.0;
  if (series.total_slots[idx]) {
    capacity = *series.total_slots[idx];
  } else {
    for (const auto& slots : series.total_slots)
      if (slots) capacity = std::max(capacity, double(*slots));
    if (capacity == 0.0) capacity = std::max(current, 1.0);
  }

  auto model = build_cycle_model({{station, split_days(series, cfg.service_window)}},
                                 scheme, date_of(issue), cfg.holidays,
                                 cfg.service_window, cfg.step, cfg.filter_order,
                                 cfg.median_window);
  Forecast fc;
  const DailyCycle* cycle = model.cycle_for(station, date_of(issue), cfg.holidays);
  if (cycle) {
    fc = predict_gradient(station, current, issue, offset, *cycle, capacity);
    if (fc.fallback) err << "cycle has no support at the issue or target bin; "
                            "holding the current level\n";
  } else {
    fc = predict_persistence(station, current, issue, offset);
    err << "no matching days for the " << to_string(scheme)
        << " scheme; falling back to persistence\n";
  }
  out << csv::quote_if_needed(fc.station_id) << ','
      << format_iso8601(fc.issue_time) << ',' << offset_min << ','
      << to_string(scheme) << ',' << fc.model << ','
      << csv::format_double(fc.predicted_bikes) << "\n";
}

inline void cmd_eval_predict(const RunConfig& cfg, const std::string& store,
                             const std::vector<Seconds>& offsets,
                             const std::vector<Scheme>& schemes,
                             const std::string& out_path, std::ostream& err) {
  auto snapshots = load_snapshots(store);
  auto set = preprocess_all(snapshots, cfg);
  std::vector<StationDays> stations;
  for (const auto& [id, series] : set.by_station) {
    auto days = split_days(series, cfg.service_window);
    if (!days.empty()) stations.push_back({id, std::move(days)});
  }
  auto rows = evaluate(stations, schemes, offsets, cfg.holidays,
                       cfg.service_window, cfg.step, cfg.filter_order,
                       cfg.median_window);
  auto out = open_csv(out_path);
  out << "model,scheme,offset_min,mae,bias,n_points\n";
  for (const auto& row : rows)
    out << row.model << ',' << row.scheme << ',' << row.offset / 60 << ','
        << csv::format_double(row.mae) << ',' << csv::format_double(row.bias)
        << ',' << row.n_points << "\n";
  err << stations.size() << " stations evaluated -> " << out_path << "\n";
}

inline void cmd_routes(const RunConfig& cfg, const std::string& store,
                       DayClass day_class, double threshold,
                       std::uint64_t seed, const std::string& out_path,
                       const std::string& geojson_path,
                       const std::string& report_path, std::ostream& err) {
  auto snapshots = load_snapshots(store);
  auto set = preprocess_all(snapshots, cfg);
  auto ra = analyze_routes(set, cfg, seed, day_class);
  for (const auto& id : ra.inputs.dropped)
    err << "station '" << id << "' lacks morning coverage; skipped\n";
  auto routes = top_routes(ra.model, ra.inputs.agg.ids, threshold);

  std::map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < ra.inputs.agg.ids.size(); ++s)
    index[ra.inputs.agg.ids[s]] = s;
  if (!out_path.empty()) {
    auto out = open_csv(out_path);
    out << "origin_id,dest_id,probability,distance_m\n";
    for (const auto& r : routes) {
      double dist = haversine(ra.inputs.coords[index.at(r.origin)],
                              ra.inputs.coords[index.at(r.destination)]);
      out << csv::quote_if_needed(r.origin) << ','
          << csv::quote_if_needed(r.destination) << ','
          << csv::format_double(r.probability) << ','
          << csv::format_double(dist) << "\n";
    }
  }
  if (!geojson_path.empty())
    write_json(geojson_path, routes_geojson(routes, ra.inputs.agg.ids,
                                            ra.roles, ra.inputs.coords));
  if (!report_path.empty())
    write_json(report_path, fit_report(ra, cfg.fit_smoothing_window));
  err << "lambda = (" << csv::format_double(ra.model.lambda[0]) << ", "
      << csv::format_double(ra.model.lambda[1]) << ", "
      << csv::format_double(ra.model.lambda[2])
      << "), objective = " << csv::format_double(ra.model.objective) << ", "
      << ra.model.iterations << " iterations"
      << (ra.model.converged ? "" : " (not converged)") << ", "
      << routes.size() << " routes\n";
}

inline void cmd_simulate(const RunConfig& cfg, int stations, int days,
                         std::uint64_t seed, const std::string& schedule_path,
                         const std::string& store_path,
                         const std::string& trips_path, Date start_date,
                         double rate_jitter, double dropout_prob,
                         std::ostream& err) {
  NetworkSpec spec;
  spec.station_count = stations;
  spec.seed = seed;
  auto net = generate_network(spec);
  auto schedule = load_schedule(schedule_path, net.stations);
  NoiseConfig noise;
  noise.rate_jitter = rate_jitter;
  noise.dropout_prob = dropout_prob;
  auto result = simulate(net, schedule, days, noise, seed, start_date,
                         cfg.step, cfg.speed_kmh, cfg.retry_delay);
  save_snapshots(store_path, result.snapshots);
  if (!trips_path.empty()) save_trips(trips_path, result.trips, net.stations);
  err << stations << " stations over " << days << " days: "
      << result.trips.size() << " trips, " << result.snapshots.size()
      << " snapshots -> " << store_path << "\n";
}

}  // namespace detail

// Front end over the analysis modules. Returns 0 on success, 1 on a usage
// error, 2 on a data error; diagnostics go to err, data to files or out.
inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"station-occupancy analytics for shared bike networks"};
  app.require_subcommand(1);

  std::string in_dir, in_store, in_config;
  auto* ingest = app.add_subcommand("ingest", "fold KML snapshots into a store");
  ingest->add_option("--kml-dir", in_dir, "directory of <timestamp>.kml files")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest->add_option("--store", in_store, "output store CSV")->required();
  ingest->add_option("--config", in_config, "key = value config file");

  std::string va_store, va_limits, va_config;
  auto* validate = app.add_subcommand("validate", "report physical-limit violations");
  validate->add_option("--store", va_store, "store CSV")->required();
  validate->add_option("--limits", va_limits, "key = value limits file")
      ->check(CLI::ExistingFile);
  validate->add_option("--config", va_config, "key = value config file");

  std::string cy_store, cy_station, cy_class = "weekday", cy_out, cy_config;
  bool cy_global = false;
  auto* cycles = app.add_subcommand("cycles", "average daily activity cycle");
  cycles->add_option("--store", cy_store, "store CSV")->required();
  cycles->add_option("--station", cy_station, "station id");
  cycles->add_flag("--global", cy_global, "citywide total instead of one station");
  cycles->add_option("--day-class", cy_class, "weekday or weekend")
      ->check(CLI::IsMember({"weekday", "weekend"}));
  cycles->add_option("--out", cy_out, "output CSV")->required();
  cycles->add_option("--config", cy_config, "key = value config file");

  std::string gp_store, gp_time, gp_baseline = "05:00", gp_grid = "100x100";
  std::string gp_class = "weekday", gp_out, gp_config;
  auto* geopattern = app.add_subcommand(
      "geopattern", "interpolated map of activity since a baseline hour");
  geopattern->add_option("--store", gp_store, "store CSV")->required();
  geopattern->add_option("--time", gp_time, "time of day, e.g. 09:30")
      ->required();
  geopattern->add_option("--baseline", gp_baseline, "baseline time of day");
  geopattern->add_option("--grid", gp_grid, "resolution ROWSxCOLS");
  geopattern->add_option("--day-class", gp_class, "weekday or weekend")
      ->check(CLI::IsMember({"weekday", "weekend"}));
  geopattern->add_option("--out", gp_out, "output GeoJSON")->required();
  geopattern->add_option("--config", gp_config, "key = value config file");

  std::string cl_store, cl_k = "auto", cl_out, cl_geojson, cl_config;
  int cl_meta_k = 7, cl_k_min = 2, cl_k_max = 40;
  std::uint64_t cl_seed = 0;
  auto* cluster = app.add_subcommand("cluster", "group stations by cycle shape");
  cluster->add_option("--store", cl_store, "store CSV")->required();
  cluster->add_option("--k", cl_k, "'auto' or a cluster count");
  cluster->add_option("--meta-k", cl_meta_k, "meta-cluster count")
      ->check(CLI::PositiveNumber);
  cluster->add_option("--k-min", cl_k_min, "lowest k tried by auto")
      ->check(CLI::PositiveNumber);
  cluster->add_option("--k-max", cl_k_max, "highest k tried by auto")
      ->check(CLI::PositiveNumber);
  auto* cl_seed_opt = cluster->add_option("--seed", cl_seed, "RNG seed");
  cluster->add_option("--out", cl_out, "output CSV")->required();
  cluster->add_option("--out-geojson", cl_geojson, "station points GeoJSON");
  cluster->add_option("--config", cl_config, "key = value config file");

  std::string pr_store, pr_station, pr_at, pr_scheme = "same-weekday", pr_config;
  long pr_offset = 0;
  auto* predict = app.add_subcommand("predict", "forecast one station's bikes");
  predict->add_option("--store", pr_store, "store CSV")->required();
  predict->add_option("--station", pr_station, "station id")->required();
  predict->add_option("--at", pr_at, "issue time, ISO-8601 UTC")->required();
  predict->add_option("--offset", pr_offset, "minutes ahead")->required();
  predict->add_option("--scheme", pr_scheme, "day grouping scheme")
      ->check(CLI::IsMember({"all-other-days", "same-weekday",
                             "weekday-weekend-split"}));
  predict->add_option("--config", pr_config, "key = value config file");

  std::string ev_store, ev_offsets = "10,20,30,60,120,240", ev_out, ev_config;
  std::string ev_schemes = "all-other-days,same-weekday,weekday-weekend-split";
  auto* eval_predict = app.add_subcommand(
      "eval-predict", "leave-one-day-out error of both predictors");
  eval_predict->add_option("--store", ev_store, "store CSV")->required();
  eval_predict->add_option("--offsets", ev_offsets, "minute offsets, comma-separated");
  eval_predict->add_option("--schemes", ev_schemes, "schemes, comma-separated");
  eval_predict->add_option("--out", ev_out, "output CSV")->required();
  eval_predict->add_option("--config", ev_config, "key = value config file");

  std::string rt_store, rt_window, rt_class = "weekday", rt_out, rt_geojson;
  std::string rt_report, rt_config;
  double rt_threshold = 0.0;
  std::uint64_t rt_seed = 0;
  auto* routes = app.add_subcommand("routes", "most probable morning routes");
  routes->add_option("--store", rt_store, "store CSV")->required();
  routes->add_option("--window", rt_window, "analysis window, e.g. 05:00-12:00");
  routes->add_option("--day-class", rt_class, "weekday or weekend")
      ->check(CLI::IsMember({"weekday", "weekend"}));
  auto* rt_thr_opt =
      routes->add_option("--threshold", rt_threshold, "probability cutoff");
  auto* rt_seed_opt = routes->add_option("--seed", rt_seed, "RNG seed");
  routes->add_option("--out", rt_out, "route list CSV");
  routes->add_option("--out-geojson", rt_geojson, "route map GeoJSON");
  routes->add_option("--report", rt_report, "fit report JSON");
  routes->add_option("--config", rt_config, "key = value config file");

  std::string si_schedule, si_store, si_trips, si_start = "2008-05-05", si_config;
  int si_stations = 20, si_days = 28;
  std::uint64_t si_seed = 0;
  double si_jitter = 0.0, si_dropout = 0.0;
  auto* simulate = app.add_subcommand(
      "simulate", "synthetic network with known origin-destination flows");
  simulate->add_option("--stations", si_stations, "station count")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--days", si_days, "days to simulate")
      ->check(CLI::PositiveNumber);
  auto* si_seed_opt = simulate->add_option("--seed", si_seed, "RNG seed");
  simulate->add_option("--schedule", si_schedule, "demand schedule CSV")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out-store", si_store, "snapshot store CSV")
      ->required();
  simulate->add_option("--out-trips", si_trips, "completed trips CSV");
  simulate->add_option("--start-date", si_start, "first simulated day");
  simulate->add_option("--rate-jitter", si_jitter, "daily demand jitter, 0..1");
  simulate->add_option("--dropout-prob", si_dropout,
                       "per station-day slot-dropout chance");
  simulate->add_option("--config", si_config, "key = value config file");

  ingest->callback([&] { detail::cmd_ingest(in_dir, in_store, err); });

  validate->callback(
      [&] { detail::cmd_validate(va_store, va_limits, out, err); });

  cycles->callback([&] {
    if (cy_global == !cy_station.empty())
      throw CLI::ValidationError("cycles",
                                 "pass exactly one of --station and --global");
    detail::cmd_cycles(detail::config_from(cy_config), cy_store, cy_station,
                       cy_global, detail::parse_day_class(cy_class), cy_out,
                       err);
  });

  geopattern->callback([&] {
    auto [rows, cols] = detail::parse_grid(gp_grid);
    detail::cmd_geopattern(detail::config_from(gp_config), gp_store,
                           parse_time_of_day(gp_time),
                           parse_time_of_day(gp_baseline), rows, cols,
                           detail::parse_day_class(gp_class), gp_out, err);
  });

  cluster->callback([&] {
    if (cl_k != "auto") {
      try {
        if (std::stoi(cl_k) < 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw CLI::ValidationError("--k", "must be 'auto' or a positive integer");
      }
    }
    auto cfg = detail::config_from(cl_config);
    detail::cmd_cluster(cfg, cl_store, cl_k, cl_meta_k, cl_k_min, cl_k_max,
                        detail::resolve_seed(cfg, cl_seed_opt->count() > 0,
                                             cl_seed),
                        cl_out, cl_geojson, err);
  });

  predict->callback([&] {
    detail::cmd_predict(detail::config_from(pr_config), pr_store, pr_station,
                        pr_at, pr_offset, parse_scheme(pr_scheme), out, err);
  });

  eval_predict->callback([&] {
    std::vector<Seconds> offsets;
    for (const auto& item : detail::split_list(ev_offsets)) {
      long min = 0;
      try {
        min = std::stol(item);
      } catch (const std::exception&) {
        min = 0;
      }
      if (min < 1)
        throw CLI::ValidationError("--offsets",
                                   "expected positive minutes, got '" + item +
                                       "'");
      offsets.push_back(min * 60);
    }
    std::vector<Scheme> schemes;
    for (const auto& item : detail::split_list(ev_schemes))
      schemes.push_back(parse_scheme(item));
    detail::cmd_eval_predict(detail::config_from(ev_config), ev_store, offsets,
                             schemes, ev_out, err);
  });

  routes->callback([&] {
    if (rt_out.empty() && rt_geojson.empty() && rt_report.empty())
      throw CLI::ValidationError(
          "routes", "pass at least one of --out, --out-geojson, --report");
    auto cfg = detail::config_from(rt_config);
    if (!rt_window.empty()) cfg.morning_window = parse_daily_window(rt_window);
    double threshold =
        rt_thr_opt->count() > 0 ? rt_threshold : cfg.route_threshold;
    detail::cmd_routes(cfg, rt_store, detail::parse_day_class(rt_class),
                       threshold,
                       detail::resolve_seed(cfg, rt_seed_opt->count() > 0,
                                            rt_seed),
                       rt_out, rt_geojson, rt_report, err);
  });

  simulate->callback([&] {
    auto cfg = detail::config_from(si_config);
    detail::cmd_simulate(cfg, si_stations, si_days,
                         detail::resolve_seed(cfg, si_seed_opt->count() > 0,
                                              si_seed),
                         si_schedule, si_store, si_trips, parse_date(si_start),
                         si_jitter, si_dropout, err);
  });

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace bikeflow
