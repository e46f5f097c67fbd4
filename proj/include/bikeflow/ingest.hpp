#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bikeflow/csv.hpp"
#include "bikeflow/errors.hpp"
#include "bikeflow/strings.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

// One parsed station record from a status feed.
struct StationObservation {
  std::string station_id;
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
  int bikes = 0;
  int free_slots = 0;

  int capacity() const { return bikes + free_slots; }

  bool operator==(const StationObservation&) const = default;
};

// One timestamped set of observations across all stations.
struct Snapshot {
  TimePoint timestamp = 0;
  std::vector<StationObservation> observations;

  long total_bikes() const {
    long sum = 0;
    for (const auto& o : observations) sum += o.bikes;
    return sum;
  }
  long total_slots() const {
    long sum = 0;
    for (const auto& o : observations) sum += o.capacity();
    return sum;
  }
};

// Physical limits used by validate_snapshot. Defaults follow the observed
// network: 15-39 slots per station, at most 3657 bikes in circulation.
struct ValidationLimits {
  int min_capacity = 15;
  int max_capacity = 39;
  long max_total_bikes = 3657;
};

struct KmlParseResult {
  std::vector<StationObservation> observations;
  std::vector<std::string> skipped;  // one diagnostic per rejected placemark
};

namespace detail {

inline std::string unescape_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    auto rest = s.substr(i);
    if (rest.rfind("&amp;", 0) == 0) {
      out += '&';
      i += 4;
    } else if (rest.rfind("&lt;", 0) == 0) {
      out += '<';
      i += 3;
    } else if (rest.rfind("&gt;", 0) == 0) {
      out += '>';
      i += 3;
    } else if (rest.rfind("&quot;", 0) == 0) {
      out += '"';
      i += 5;
    } else if (rest.rfind("&apos;", 0) == 0) {
      out += '\'';
      i += 5;
    } else {
      out += '&';
    }
  }
  return out;
}

struct XmlElement {
  std::string name;
  std::string attrs;        // raw attribute text of the open tag
  std::string_view content; // inner text+markup, view into the document
};

// Minimal scanning XML reader: checks balanced nesting and collects the
// elements with a given tag name. Throws MalformedDocument on broken markup.
inline std::vector<XmlElement> scan_elements(std::string_view doc,
                                             std::string_view wanted) {
  struct Open {
    std::string name;
    std::string attrs;
    std::size_t content_begin;
  };
  std::vector<Open> stack;
  std::vector<XmlElement> found;
  std::size_t pos = 0;
  while (pos < doc.size()) {
    std::size_t lt = doc.find('<', pos);
    if (lt == std::string_view::npos) break;
    if (doc.compare(lt, 4, "<!--") == 0) {
      std::size_t end = doc.find("-->", lt + 4);
      if (end == std::string_view::npos)
        throw MalformedDocument("unterminated XML comment");
      pos = end + 3;
      continue;
    }
    if (doc.compare(lt, 2, "<?") == 0) {
      std::size_t end = doc.find("?>", lt + 2);
      if (end == std::string_view::npos)
        throw MalformedDocument("unterminated processing instruction");
      pos = end + 2;
      continue;
    }
    if (doc.compare(lt, 2, "<!") == 0) {
      std::size_t end = doc.find('>', lt + 2);
      if (end == std::string_view::npos)
        throw MalformedDocument("unterminated declaration");
      pos = end + 1;
      continue;
    }
    std::size_t gt = doc.find('>', lt + 1);
    if (gt == std::string_view::npos)
      throw MalformedDocument("unterminated tag");
    std::string_view tag = doc.substr(lt + 1, gt - lt - 1);
    pos = gt + 1;
    if (tag.empty()) throw MalformedDocument("empty tag");
    bool closing = tag.front() == '/';
    bool self_closing = tag.back() == '/';
    if (closing && self_closing) throw MalformedDocument("bad tag syntax");
    if (closing) tag.remove_prefix(1);
    if (self_closing) tag.remove_suffix(1);
    std::size_t name_end = 0;
    while (name_end < tag.size() &&
           !std::isspace(static_cast<unsigned char>(tag[name_end])))
      ++name_end;
    std::string name(tag.substr(0, name_end));
    if (name.empty()) throw MalformedDocument("tag without a name");
    std::string attrs = trim(tag.substr(name_end));
    if (closing) {
      if (!attrs.empty())
        throw MalformedDocument("attributes on closing tag </" + name + ">");
      if (stack.empty() || stack.back().name != name)
        throw MalformedDocument("mismatched closing tag </" + name + ">");
      if (stack.back().name == wanted) {
        found.push_back({name, stack.back().attrs,
                         doc.substr(stack.back().content_begin,
                                    lt - stack.back().content_begin)});
      }
      stack.pop_back();
    } else if (self_closing) {
      if (name == wanted) found.push_back({name, attrs, {}});
    } else {
      stack.push_back({name, attrs, pos});
    }
  }
  if (!stack.empty())
    throw MalformedDocument("unclosed tag <" + stack.front().name + ">");
  return found;
}

inline std::optional<std::string> attr_value(const std::string& attrs,
                                             const std::string& key) {
  std::size_t pos = 0;
  while (pos < attrs.size()) {
    std::size_t eq = attrs.find('=', pos);
    if (eq == std::string::npos) return std::nullopt;
    std::string name = trim(std::string_view(attrs).substr(pos, eq - pos));
    std::size_t v = eq + 1;
    while (v < attrs.size() && std::isspace(static_cast<unsigned char>(attrs[v])))
      ++v;
    if (v >= attrs.size() || (attrs[v] != '"' && attrs[v] != '\''))
      return std::nullopt;
    char quote = attrs[v];
    std::size_t end = attrs.find(quote, v + 1);
    if (end == std::string::npos) return std::nullopt;
    if (name == key)
      return unescape_entities(attrs.substr(v + 1, end - v - 1));
    pos = end + 1;
  }
  return std::nullopt;
}

inline std::optional<std::string> first_element_text(std::string_view content,
                                                     std::string_view tag) {
  auto elems = scan_elements(content, tag);
  if (elems.empty()) return std::nullopt;
  return std::string(elems.front().content);
}

inline std::optional<long> parse_nonneg_int(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  long v = 0;
  for (char c : t) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    v = v * 10 + (c - '0');
    if (v > std::numeric_limits<int>::max()) return std::nullopt;
  }
  return v;
}

}  // namespace detail

// Parses a station-status KML document. The placemark layout is
//   <Placemark id="ID"><name>N</name><description>bikes=B|slots=S</description>
//   <Point><coordinates>LON,LAT</coordinates></Point></Placemark>
// Broken placemarks are skipped with a diagnostic; only unparseable XML is
// fatal.
inline KmlParseResult parse_kml(const std::string& document) {
  KmlParseResult result;
  auto placemarks = detail::scan_elements(document, "Placemark");
  int index = 0;
  for (const auto& pm : placemarks) {
    ++index;
    auto skip = [&](const std::string& why) {
      result.skipped.push_back("placemark " + std::to_string(index) + ": " + why);
    };
    auto id = detail::attr_value(pm.attrs, "id");
    if (!id || id->empty()) {
      skip("missing id attribute");
      continue;
    }
    auto coords_text = detail::first_element_text(pm.content, "coordinates");
    if (!coords_text) {
      skip("missing coordinates");
      continue;
    }
    // "LON,LAT" with an optional altitude component
    auto fields = csv::split_line(detail::trim(*coords_text));
    if (fields.size() != 2 && fields.size() != 3) {
      skip("bad coordinates '" + detail::trim(*coords_text) + "'");
      continue;
    }
    double lon, lat;
    try {
      lon = csv::parse_double(detail::trim(fields[0]), 0);
      lat = csv::parse_double(detail::trim(fields[1]), 0);
    } catch (const Error&) {
      skip("bad coordinates '" + detail::trim(*coords_text) + "'");
      continue;
    }
    if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
      skip("coordinates out of range");
      continue;
    }
    auto desc = detail::first_element_text(pm.content, "description");
    if (!desc) {
      skip("missing description");
      continue;
    }
    // description carries labeled counts: bikes=B|slots=S, order-insensitive
    std::optional<long> bikes, slots;
    std::string desc_text = detail::unescape_entities(*desc);
    std::size_t start = 0;
    while (start <= desc_text.size()) {
      std::size_t bar = desc_text.find('|', start);
      std::string token = detail::trim(std::string_view(desc_text).substr(
          start, bar == std::string::npos ? std::string::npos : bar - start));
      std::size_t eq = token.find('=');
      if (eq != std::string::npos) {
        std::string key = detail::trim(std::string_view(token).substr(0, eq));
        std::string value = detail::trim(std::string_view(token).substr(eq + 1));
        if (key == "bikes") bikes = detail::parse_nonneg_int(value);
        if (key == "slots") slots = detail::parse_nonneg_int(value);
      }
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    if (!bikes) {
      skip("missing or bad bikes field");
      continue;
    }
    if (!slots) {
      skip("missing or bad slots field");
      continue;
    }
    std::string name;
    if (auto n = detail::first_element_text(pm.content, "name"))
      name = detail::trim(detail::unescape_entities(*n));
    result.observations.push_back({*id, name, lat, lon, static_cast<int>(*bikes),
                                   static_cast<int>(*slots)});
  }
  return result;
}

struct StationInfo {
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
};

constexpr const char* kSnapshotCsvHeader =
    "timestamp,station_id,name,lat,lon,bikes,free_slots";

// Append-only snapshot store. Unseen station ids are registered on first
// sight; a station id never disappears from the registry.
class SnapshotStore {
 public:
  void append(Snapshot snapshot) {
    if (!snapshots_.empty() && snapshot.timestamp <= snapshots_.back().timestamp)
      throw NonMonotonicTimestamp(
          "snapshot at " + format_iso8601(snapshot.timestamp) +
          " does not advance past " +
          format_iso8601(snapshots_.back().timestamp));
    std::map<std::string, int> seen;
    for (const auto& obs : snapshot.observations) {
      if (++seen[obs.station_id] > 1)
        throw DuplicateStationInSnapshot("station '" + obs.station_id +
                                         "' appears twice in one snapshot");
    }
    for (const auto& obs : snapshot.observations) {
      auto it = registry_.find(obs.station_id);
      if (it == registry_.end()) {
        registry_[obs.station_id] = {obs.name, obs.latitude, obs.longitude};
      } else if (it->second.latitude != obs.latitude ||
                 it->second.longitude != obs.longitude) {
        warnings_.push_back("station '" + obs.station_id +
                            "' moved; registry coordinates updated");
        it->second.latitude = obs.latitude;
        it->second.longitude = obs.longitude;
      }
    }
    snapshots_.push_back(std::move(snapshot));
  }

  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const std::map<std::string, StationInfo>& registry() const {
    return registry_;
  }
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool empty() const { return snapshots_.empty(); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << kSnapshotCsvHeader << "\n";
    for (const auto& snap : snapshots_) write_snapshot_rows(out, snap);
  }

  // Appends one snapshot's rows to an existing store file (creating it with a
  // header if absent). Readers of previously written rows are unaffected.
  static void append_to_file(const std::filesystem::path& path,
                             const Snapshot& snapshot) {
    bool fresh = !std::filesystem::exists(path) ||
                 std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    if (fresh) out << kSnapshotCsvHeader << "\n";
    write_snapshot_rows(out, snapshot);
  }

 private:
  static void write_snapshot_rows(std::ostream& out, const Snapshot& snap) {
    std::string ts = format_iso8601(snap.timestamp);
    for (const auto& obs : snap.observations) {
      out << ts << ',' << csv::quote_if_needed(obs.station_id) << ','
          << csv::quote_if_needed(obs.name) << ','
          << csv::format_double(obs.latitude) << ','
          << csv::format_double(obs.longitude) << ',' << obs.bikes << ','
          << obs.free_slots << "\n";
    }
  }

  std::vector<Snapshot> snapshots_;
  std::map<std::string, StationInfo> registry_;
  std::vector<std::string> warnings_;
};

// Half-open absolute time range [start, end).
struct TimeRange {
  TimePoint start = std::numeric_limits<TimePoint>::min();
  TimePoint end = std::numeric_limits<TimePoint>::max();

  static TimeRange all() { return {}; }
  bool contains(TimePoint t) const { return t >= start && t < end; }
};

// Loads snapshots from a store CSV, sorted by timestamp and filtered to the
// given range. Rows sharing a timestamp form one snapshot.
inline std::vector<Snapshot> load_snapshots(const std::filesystem::path& path,
                                            TimeRange range = TimeRange::all()) {
  if (!std::filesystem::exists(path))
    throw FileNotFound("no such store: '" + path.string() + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSnapshotCsvHeader)
    throw SchemaViolation("unexpected header '" + line + "'", 1);

  std::map<TimePoint, Snapshot> by_time;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 7)
      throw SchemaViolation("expected 7 fields, got " +
                                std::to_string(fields.size()),
                            line_no);
    TimePoint ts;
    try {
      ts = parse_iso8601(fields[0]);
    } catch (const Error& e) {
      throw SchemaViolation(e.what(), line_no);
    }
    StationObservation obs;
    obs.station_id = fields[1];
    obs.name = fields[2];
    obs.latitude = csv::parse_double(fields[3], line_no);
    obs.longitude = csv::parse_double(fields[4], line_no);
    long bikes = csv::parse_long(fields[5], line_no);
    long slots = csv::parse_long(fields[6], line_no);
    if (bikes < 0) throw SchemaViolation("negative bikes", line_no);
    if (slots < 0) throw SchemaViolation("negative free_slots", line_no);
    if (obs.station_id.empty())
      throw SchemaViolation("empty station_id", line_no);
    obs.bikes = static_cast<int>(bikes);
    obs.free_slots = static_cast<int>(slots);
    if (!range.contains(ts)) continue;
    auto& snap = by_time[ts];
    snap.timestamp = ts;
    for (const auto& prior : snap.observations)
      if (prior.station_id == obs.station_id)
        throw SchemaViolation(
            "station '" + obs.station_id + "' duplicated within one snapshot",
            line_no);
    snap.observations.push_back(std::move(obs));
  }
  std::vector<Snapshot> result;
  result.reserve(by_time.size());
  for (auto& [ts, snap] : by_time) result.push_back(std::move(snap));
  return result;
}

struct ValidationWarning {
  enum class Kind { CapacityOutOfRange, TotalBikesExceeded, ZeroCapacity };
  Kind kind;
  std::string station_id;  // empty for network-wide warnings
  long value = 0;

  std::string describe() const {
    switch (kind) {
      case Kind::CapacityOutOfRange:
        return "station '" + station_id + "' capacity " +
               std::to_string(value) + " outside limits";
      case Kind::TotalBikesExceeded:
        return "total bikes " + std::to_string(value) + " exceeds limit";
      case Kind::ZeroCapacity:
        return "station '" + station_id + "' has zero capacity";
    }
    return {};
  }
};

struct ValidationReport {
  std::vector<ValidationWarning> warnings;
  bool empty() const { return warnings.empty(); }
};

// Out-of-range data is real-world noise, so everything here is a warning.
inline ValidationReport validate_snapshot(const Snapshot& snapshot,
                                          const ValidationLimits& limits = {}) {
  ValidationReport report;
  for (const auto& obs : snapshot.observations) {
    int cap = obs.capacity();
    if (cap == 0) {
      report.warnings.push_back(
          {ValidationWarning::Kind::ZeroCapacity, obs.station_id, 0});
    } else if (cap < limits.min_capacity || cap > limits.max_capacity) {
      report.warnings.push_back(
          {ValidationWarning::Kind::CapacityOutOfRange, obs.station_id, cap});
    }
  }
  long total = snapshot.total_bikes();
  if (total > limits.max_total_bikes)
    report.warnings.push_back(
        {ValidationWarning::Kind::TotalBikesExceeded, "", total});
  return report;
}

}  // namespace bikeflow
