#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bikeflow/errors.hpp"
#include "bikeflow/strings.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

// When the per-day median filter runs relative to cross-day averaging.
enum class FilterOrder { AverageThenMedian, MedianThenAverage };

enum class InternalSimilarityKind { MeanPairwise, MinPairwise };

// All tunable constants in one place. Defaults are the values the analysis
// was designed around; a key=value config file overrides them.
struct RunConfig {
  // preprocessing
  int min_total_slots = 10;        // drop samples from stations this small
  int median_window = 3;
  DailyWindow service_window{5 * 3600, 24 * 3600};
  std::set<Date> holidays{make_date(2008, 6, 24)};
  FilterOrder filter_order = FilterOrder::AverageThenMedian;
  Seconds step = kDefaultStep;

  // global cycle
  long global_min_slots = 8000;    // keep snapshots with citywide slots above

  // clustering
  InternalSimilarityKind internal_similarity =
      InternalSimilarityKind::MeanPairwise;

  // route inference
  DailyWindow morning_window{5 * 3600, 12 * 3600};
  double route_threshold = 0.03;
  double coupling_min_score = 0.5;
  int role_threshold_bikes = 3;
  double speed_kmh = 25.0;
  double f1_sigma = 0.5;
  int fit_smoothing_window = 21;

  // spatial interpolation
  double idw_power = 2.0;

  // simulation
  Seconds retry_delay = 600;       // full-destination bounce-back, 10 minutes

  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// Parses "key = value" lines. '#' starts a comment; blank lines are fine;
// unknown keys are rejected so typos cannot silently fall back to defaults.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  RunConfig cfg = std::move(base);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string text = detail::trim(line);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = detail::trim(std::string_view(text).substr(0, eq));
    std::string value = detail::trim(std::string_view(text).substr(eq + 1));
    try {
      if (key == "min_total_slots") {
        cfg.min_total_slots = std::stoi(value);
      } else if (key == "median_window") {
        cfg.median_window = std::stoi(value);
        if (cfg.median_window < 1 || cfg.median_window % 2 == 0)
          throw ConfigError("median_window must be odd and positive");
      } else if (key == "service_window") {
        cfg.service_window = parse_daily_window(value);
      } else if (key == "holidays") {
        cfg.holidays.clear();
        for (const auto& item : detail::split_list(value))
          if (!item.empty()) cfg.holidays.insert(parse_date(item));
      } else if (key == "filter_order") {
        if (value == "average-then-median")
          cfg.filter_order = FilterOrder::AverageThenMedian;
        else if (value == "median-then-average")
          cfg.filter_order = FilterOrder::MedianThenAverage;
        else
          throw ConfigError("bad filter_order '" + value + "'");
      } else if (key == "step_seconds") {
        cfg.step = std::stol(value);
        if (cfg.step <= 0) throw ConfigError("step_seconds must be positive");
      } else if (key == "global_min_slots") {
        cfg.global_min_slots = std::stol(value);
      } else if (key == "internal_similarity") {
        if (value == "mean-pairwise")
          cfg.internal_similarity = InternalSimilarityKind::MeanPairwise;
        else if (value == "min-pairwise")
          cfg.internal_similarity = InternalSimilarityKind::MinPairwise;
        else
          throw ConfigError("bad internal_similarity '" + value + "'");
      } else if (key == "morning_window") {
        cfg.morning_window = parse_daily_window(value);
      } else if (key == "route_threshold") {
        cfg.route_threshold = std::stod(value);
      } else if (key == "coupling_min_score") {
        cfg.coupling_min_score = std::stod(value);
      } else if (key == "role_threshold_bikes") {
        cfg.role_threshold_bikes = std::stoi(value);
      } else if (key == "speed_kmh") {
        cfg.speed_kmh = std::stod(value);
        if (cfg.speed_kmh <= 0) throw ConfigError("speed_kmh must be positive");
      } else if (key == "f1_sigma") {
        cfg.f1_sigma = std::stod(value);
        if (cfg.f1_sigma <= 0) throw ConfigError("f1_sigma must be positive");
      } else if (key == "fit_smoothing_window") {
        cfg.fit_smoothing_window = std::stoi(value);
      } else if (key == "idw_power") {
        cfg.idw_power = std::stod(value);
      } else if (key == "retry_delay_minutes") {
        cfg.retry_delay = std::stol(value) * 60;
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line_no) + ": bad value '" +
                        value + "' for key '" + key + "'");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path,
                             RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("no such config: '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

}  // namespace bikeflow
