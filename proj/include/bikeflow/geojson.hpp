#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "bikeflow/cluster.hpp"
#include "bikeflow/cycles.hpp"
#include "bikeflow/geo.hpp"
#include "bikeflow/routes.hpp"
#include "bikeflow/timeutil.hpp"

namespace bikeflow {

namespace detail {

inline nlohmann::json point_feature(const LatLon& pos) {
  return {{"type", "Feature"},
          {"geometry",
           {{"type", "Point"}, {"coordinates", {pos.lon, pos.lat}}}},
          {"properties", nlohmann::json::object()}};
}

}  // namespace detail

// Cell polygons carrying the interpolated delta, plus one point per
// contributing station with its raw delta.
inline nlohmann::json grid_geojson(const GeoDeltaGrid& grid,
                                   const std::vector<StationDelta>& deltas,
                                   const std::map<std::string, LatLon>& coords) {
  nlohmann::json features = nlohmann::json::array();
  double dlat = (grid.bbox.max_lat - grid.bbox.min_lat) / grid.rows;
  double dlon = (grid.bbox.max_lon - grid.bbox.min_lon) / grid.cols;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      double lat0 = grid.bbox.min_lat + r * dlat;
      double lon0 = grid.bbox.min_lon + c * dlon;
      double lat1 = lat0 + dlat;
      double lon1 = lon0 + dlon;
      nlohmann::json ring = {{lon0, lat0},
                             {lon1, lat0},
                             {lon1, lat1},
                             {lon0, lat1},
                             {lon0, lat0}};
      features.push_back(
          {{"type", "Feature"},
           {"geometry",
            {{"type", "Polygon"},
             {"coordinates", nlohmann::json::array({ring})}}},
           {"properties",
            {{"row", r}, {"col", c}, {"delta", grid.at(r, c)}}}});
    }
  for (const auto& d : deltas) {
    auto feature = detail::point_feature(coords.at(d.station_id));
    feature["properties"]["station_id"] = d.station_id;
    feature["properties"]["delta"] = d.delta;
    features.push_back(std::move(feature));
  }
  return {{"type", "FeatureCollection"},
          {"reference_time", format_time_of_day(grid.reference_time)},
          {"baseline_time", format_time_of_day(grid.baseline_time)},
          {"features", std::move(features)}};
}

// One point per clustered station, tagged with its cluster and meta-cluster.
// Stations whose cluster found no meta group carry "UNGROUPED".
inline nlohmann::json zones_geojson(const ClusterModel& model,
                                    const std::map<std::string, LatLon>& coords) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& [id, cluster] : model.assignment) {
    auto feature = detail::point_feature(coords.at(id));
    auto& props = feature["properties"];
    props["station_id"] = id;
    props["cluster"] = cluster;
    if (!model.meta_assignment.empty()) {
      int meta = model.meta_assignment[static_cast<std::size_t>(cluster)];
      if (meta == kUngrouped)
        props["meta_cluster"] = "UNGROUPED";
      else
        props["meta_cluster"] = meta;
    }
    features.push_back(std::move(feature));
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

// Green route lines between station points colored by morning role:
// departure blue, arrival red, non-pattern black.
inline nlohmann::json routes_geojson(const std::vector<Route>& routes,
                                     const std::vector<std::string>& ids,
                                     const std::vector<StationRole>& roles,
                                     const std::vector<LatLon>& coords) {
  if (ids.size() != roles.size() || ids.size() != coords.size())
    throw LengthMismatch("ids, roles and coords must align");
  std::map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < ids.size(); ++s) index[ids[s]] = s;

  nlohmann::json features = nlohmann::json::array();
  for (const auto& route : routes) {
    const auto& o = coords[index.at(route.origin)];
    const auto& d = coords[index.at(route.destination)];
    features.push_back(
        {{"type", "Feature"},
         {"geometry",
          {{"type", "LineString"},
           {"coordinates", {{o.lon, o.lat}, {d.lon, d.lat}}}}},
         {"properties",
          {{"origin_id", route.origin},
           {"dest_id", route.destination},
           {"probability", route.probability},
           {"distance_m", haversine(o, d)},
           {"stroke", "#008000"}}}});
  }
  for (std::size_t s = 0; s < ids.size(); ++s) {
    auto feature = detail::point_feature(coords[s]);
    auto& props = feature["properties"];
    props["station_id"] = ids[s];
    props["role"] = to_string(roles[s]);
    switch (roles[s]) {
      case StationRole::Departure: props["marker-color"] = "#0000ff"; break;
      case StationRole::Arrival: props["marker-color"] = "#ff0000"; break;
      case StationRole::NonPattern: props["marker-color"] = "#000000"; break;
    }
    features.push_back(std::move(feature));
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace bikeflow
