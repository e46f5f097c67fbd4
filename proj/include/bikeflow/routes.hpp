#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bikeflow/cycles.hpp"
#include "bikeflow/errors.hpp"
#include "bikeflow/geo.hpp"
#include "bikeflow/nelder_mead.hpp"
#include "bikeflow/stats.hpp"

namespace bikeflow {

constexpr double kFeatureFloor = 1e-3;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double v = 0.0)
      : rows(r), cols(c), data(r * c, v) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
};

// Average bikes per station at the start and end of the analysis window.
struct MorningAggregate {
  std::vector<std::string> ids;
  std::vector<double> I;
  std::vector<double> F;
  DailyWindow window{5 * 3600, 12 * 3600};
};

// Pairwise features, indexed (destination j, origin i) like the transition
// matrix itself.
struct FeatureSet {
  Matrix f1;  // distance affinity, symmetric
  Matrix f2;  // cycle dissimilarity, symmetric
  Matrix f3;  // coupling, asymmetric

  std::size_t size() const { return f1.rows; }
};

struct TransitionModel {
  Matrix P;  // P(j, i) = probability of arriving at j given departure from i
  std::array<double, 3> lambda{1.0, 1.0, 1.0};
  double objective = 0.0;
  int iterations = 0;
  bool converged = true;
};

enum class StationRole { Departure, Arrival, NonPattern };

inline const char* to_string(StationRole r) {
  switch (r) {
    case StationRole::Departure: return "departure";
    case StationRole::Arrival: return "arrival";
    case StationRole::NonPattern: return "non-pattern";
  }
  return "";
}

// Log-normal distance affinity, peaked at 2 km and negligible past 7 km.
// Distances in meters; the density takes kilometres.
inline double f1_distance(double meters, double sigma = 0.5,
                          double floor = kFeatureFloor) {
  double km = meters / 1000.0;
  if (km <= 0.0) return floor;
  double mu = std::log(2.0) + sigma * sigma;
  double z = std::log(km) - mu;
  double density = std::exp(-z * z / (2.0 * sigma * sigma)) /
                   (km * sigma * std::sqrt(2.0 * M_PI));
  return std::max(density, floor);
}

// Cycle-shape dissimilarity (1 - correlation)/2 over the shared window.
inline double f2_similarity(std::span<const double> cycle_i,
                            std::span<const double> cycle_j,
                            double floor = kFeatureFloor) {
  double r = pearson(cycle_i, cycle_j);
  return std::max((1.0 - r) / 2.0, floor);
}

inline std::vector<StationRole> classify_roles(const MorningAggregate& agg,
                                               double threshold_bikes = 3.0) {
  std::vector<StationRole> roles(agg.ids.size());
  for (std::size_t s = 0; s < agg.ids.size(); ++s) {
    double net = agg.I[s] - agg.F[s];
    if (net >= threshold_bikes)
      roles[s] = StationRole::Departure;
    else if (-net >= threshold_bikes)
      roles[s] = StationRole::Arrival;
    else
      roles[s] = StationRole::NonPattern;
  }
  return roles;
}

// Ordered pair: bikes flow from departure station towards arrival station.
struct Coupling {
  std::size_t departure = 0;
  std::size_t arrival = 0;
  double score = 0.0;
};

// Matches departure stations to arrival stations whose inflow mirrors the
// departure's outflow after a travel-time shift. One-to-one, greedy by score.
inline std::vector<Coupling> detect_couplings(
    const std::vector<DailyCycle>& cycles, const std::vector<LatLon>& coords,
    const std::vector<StationRole>& roles,
    DailyWindow window = {5 * 3600, 12 * 3600}, double speed_kmh = 25.0,
    double min_score = 0.5) {
  std::size_t n = cycles.size();
  if (coords.size() != n || roles.size() != n)
    throw LengthMismatch("cycles, coords and roles must align");
  std::vector<Coupling> candidates;
  for (std::size_t k = 0; k < n; ++k) {
    if (roles[k] != StationRole::Departure) continue;
    const auto& ck = cycles[k];
    for (std::size_t m = 0; m < n; ++m) {
      if (m == k || roles[m] != StationRole::Arrival) continue;
      const auto& cm = cycles[m];
      if (cm.bin_step != ck.bin_step)
        throw LengthMismatch("cycles must share one grid");
      double meters = haversine(coords[k], coords[m]);
      double travel = meters / (speed_kmh / 3.6);
      auto shift = static_cast<long>(std::llround(travel / ck.bin_step));

      // outflow of k against inflow of m, shift bins later
      std::vector<double> out_k, in_m;
      std::size_t first = ck.bin_of(window.start);
      std::size_t last = ck.bin_of(window.end - ck.bin_step);
      for (std::size_t t = first; t + 1 <= last; ++t) {
        std::size_t tm = t + shift;
        if (tm + 1 >= cm.size()) break;
        if (!ck.has(t) || !ck.has(t + 1) || !cm.has(tm) || !cm.has(tm + 1))
          continue;
        out_k.push_back(-(ck.mean[t + 1] - ck.mean[t]));
        in_m.push_back(cm.mean[tm + 1] - cm.mean[tm]);
      }
      if (out_k.size() < 3) continue;
      double score = pearson(out_k, in_m);
      if (score >= min_score) candidates.push_back({k, m, score});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Coupling& a, const Coupling& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.departure != b.departure) return a.departure < b.departure;
              return a.arrival < b.arrival;
            });
  std::vector<Coupling> matched;
  std::vector<bool> dep_used(n, false), arr_used(n, false);
  for (const auto& c : candidates) {
    if (dep_used[c.departure] || arr_used[c.arrival]) continue;
    dep_used[c.departure] = true;
    arr_used[c.arrival] = true;
    matched.push_back(c);
  }
  return matched;
}

// Ternary coupling feature for the transition origin -> destination.
inline double f3_coupling(std::size_t origin, std::size_t destination,
                          const std::vector<Coupling>& couplings) {
  for (const auto& c : couplings) {
    if (c.departure == origin && c.arrival == destination) return 1.0;
    if (c.departure == destination && c.arrival == origin) return 0.1;
  }
  return 0.5;
}

// Assembles the three feature matrices. morning_means[s] holds station s's
// weekday cycle mean over the analysis window bins.
inline FeatureSet build_features(const std::vector<LatLon>& coords,
                                 const std::vector<std::vector<double>>& morning_means,
                                 const std::vector<Coupling>& couplings,
                                 double sigma = 0.5,
                                 double floor = kFeatureFloor) {
  std::size_t n = coords.size();
  if (morning_means.size() != n)
    throw LengthMismatch("coords and cycles must align");
  FeatureSet fs;
  fs.f1 = Matrix(n, n);
  fs.f2 = Matrix(n, n);
  fs.f3 = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) {
        fs.f1(j, i) = floor;
        fs.f2(j, i) = floor;
      } else {
        fs.f1(j, i) = f1_distance(haversine(coords[i], coords[j]), sigma, floor);
        fs.f2(j, i) = f2_similarity(morning_means[i], morning_means[j], floor);
      }
      fs.f3(j, i) = f3_coupling(i, j, couplings);
    }
  }
  return fs;
}

// Log-linear combination of the features, normalized per origin column so
// each departure's probability mass sums to one.
inline TransitionModel build_transition(const std::array<double, 3>& lambda,
                                        const FeatureSet& features) {
  std::size_t n = features.size();
  TransitionModel model;
  model.lambda = lambda;
  model.P = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double raw = std::pow(features.f1(j, i), lambda[0]) *
                   std::pow(features.f2(j, i), lambda[1]) *
                   std::pow(features.f3(j, i), lambda[2]);
      model.P(j, i) = raw;
      sum += raw;
    }
    for (std::size_t j = 0; j < n; ++j) model.P(j, i) /= sum;
  }
  return model;
}

inline std::vector<double> propagate(const Matrix& P,
                                     std::span<const double> I) {
  if (P.cols != I.size() || P.rows != P.cols)
    throw DimensionMismatch("transition matrix and I vector disagree");
  std::vector<double> F(P.rows, 0.0);
  for (std::size_t j = 0; j < P.rows; ++j)
    for (std::size_t i = 0; i < P.cols; ++i) F[j] += P(j, i) * I[i];
  return F;
}

// Fits the feature exponents by downhill simplex on the squared residual of
// the predicted final distribution.
inline TransitionModel fit_lambda(const MorningAggregate& agg,
                                  const FeatureSet& features,
                                  std::array<double, 3> init = {1.0, 1.0, 1.0},
                                  double tol = 1e-4, int max_iter = 500,
                                  std::uint64_t seed = 0) {
  if (agg.ids.size() < 2) throw EmptyInput("need at least 2 stations to fit");
  if (features.size() != agg.ids.size())
    throw DimensionMismatch("features and aggregate disagree");
  auto objective = [&](const std::vector<double>& x) {
    auto model = build_transition({x[0], x[1], x[2]}, features);
    auto f_hat = propagate(model.P, agg.I);
    double j2 = 0.0;
    for (std::size_t s = 0; s < f_hat.size(); ++s) {
      double r = f_hat[s] - agg.F[s];
      j2 += r * r;
    }
    return j2;
  };
  auto fit = nelder_mead(objective, {init[0], init[1], init[2]}, tol, max_iter,
                         seed);
  auto model = build_transition({fit.x[0], fit.x[1], fit.x[2]}, features);
  model.objective = fit.fx;
  model.iterations = fit.iterations;
  model.converged = fit.converged;
  return model;
}

struct Route {
  std::string origin;
  std::string destination;
  double probability = 0.0;
};

// Ordered pairs whose transition probability clears the threshold,
// most probable first. Staying put is not a route.
inline std::vector<Route> top_routes(const TransitionModel& model,
                                     const std::vector<std::string>& ids,
                                     double threshold = 0.03) {
  std::vector<Route> routes;
  for (std::size_t i = 0; i < model.P.cols; ++i)
    for (std::size_t j = 0; j < model.P.rows; ++j) {
      if (i == j) continue;
      if (model.P(j, i) > threshold)
        routes.push_back({ids[i], ids[j], model.P(j, i)});
    }
  std::sort(routes.begin(), routes.end(), [](const Route& a, const Route& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    if (a.origin != b.origin) return a.origin < b.origin;
    return a.destination < b.destination;
  });
  return routes;
}

}  // namespace bikeflow
