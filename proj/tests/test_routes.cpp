#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bikeflow/routes.hpp"

using namespace bikeflow;

namespace {

DailyCycle make_cycle(std::string id, std::vector<double> mean,
                      Seconds step = 120) {
  DailyCycle c;
  c.station_id = std::move(id);
  c.bin_start = 5 * 3600;
  c.bin_step = step;
  c.stdev.assign(mean.size(), 0.0);
  c.support.assign(mean.size(), 1);
  c.mean = std::move(mean);
  return c;
}

double step_pattern(std::size_t t) { return 0.2 * (1.0 + (t * 7) % 5); }

}  // namespace

TEST_CASE("haversine distances match reference values") {
  LatLon bcn{41.397, 2.194};
  REQUIRE(haversine(bcn, bcn) == 0.0);

  LatLon e0{0.0, 0.0}, e1{0.0, 1.0};
  REQUIRE(haversine(e0, e1) == Catch::Approx(111194.93).margin(0.5));

  LatLon north{90.0, 0.0}, south{-90.0, 0.0};
  REQUIRE(haversine(north, south) ==
          Catch::Approx(M_PI * kEarthRadiusMeters).margin(1.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(-80.0, 80.0), lon(-180.0, 180.0);
  for (int i = 0; i < 50; ++i) {
    LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    REQUIRE(haversine(a, b) == haversine(b, a));
    REQUIRE(haversine(a, b) >= 0.0);
  }
}

TEST_CASE("distance affinity peaks at two kilometres") {
  REQUIRE(f1_distance(2000.0) == Catch::Approx(0.3520653).epsilon(1e-5));

  double best_km = 0.0, best = -1.0;
  for (int i = 1; i <= 100; ++i) {
    double km = 0.1 * i;
    double v = f1_distance(km * 1000.0);
    if (v > best) {
      best = v;
      best_km = km;
    }
  }
  REQUIRE(best_km == Catch::Approx(2.0).margin(1e-9));

  double ratio = f1_distance(7000.0) / f1_distance(2000.0);
  REQUIRE(ratio < 0.05);
  REQUIRE(ratio > 0.03);
}

TEST_CASE("distance affinity floors instead of vanishing") {
  REQUIRE(f1_distance(100000.0) == kFeatureFloor);
  REQUIRE(f1_distance(0.0) == kFeatureFloor);
  REQUIRE(f1_distance(-5.0) == kFeatureFloor);
  REQUIRE(f1_distance(100000.0, 0.5, 0.02) == 0.02);
}

TEST_CASE("cycle dissimilarity spans floor to one") {
  std::vector<double> up{1, 2, 3, 4, 5};
  std::vector<double> down{5, 4, 3, 2, 1};
  std::vector<double> flat{7, 7, 7, 7, 7};
  REQUIRE(f2_similarity(up, up) == kFeatureFloor);
  REQUIRE(f2_similarity(up, down) == Catch::Approx(1.0));
  REQUIRE(f2_similarity(up, flat) == Catch::Approx(0.5));
  REQUIRE(f2_similarity(flat, flat) == Catch::Approx(0.5));
}

TEST_CASE("net morning loss of three bikes marks a departure station") {
  MorningAggregate agg;
  agg.ids = {"a", "b", "c", "d"};
  agg.I = {10.0, 2.0, 8.0, 6.0};
  agg.F = {7.0, 5.0, 5.2, 6.0};
  auto roles = classify_roles(agg);
  REQUIRE(roles[0] == StationRole::Departure);
  REQUIRE(roles[1] == StationRole::Arrival);
  REQUIRE(roles[2] == StationRole::NonPattern);
  REQUIRE(roles[3] == StationRole::NonPattern);

  auto loose = classify_roles(agg, 2.5);
  REQUIRE(loose[2] == StationRole::Departure);
}

TEST_CASE("coupling feature is directional") {
  std::vector<Coupling> couplings{{2, 5, 0.9}};
  REQUIRE(f3_coupling(2, 5, couplings) == 1.0);
  REQUIRE(f3_coupling(5, 2, couplings) == 0.1);
  REQUIRE(f3_coupling(1, 4, couplings) == 0.5);
  REQUIRE(f3_coupling(3, 3, couplings) == 0.5);
}

TEST_CASE("a mirrored inflow two bins downstream is detected") {
  // station 0 drains while station 1, 1.67 km away (a two bin ride at
  // 25 km/h), fills with the same profile
  constexpr std::size_t n_bins = 215;
  constexpr long shift = 2;
  std::vector<double> out(n_bins, 0.0), in(n_bins, 0.0);
  out[0] = 150.0;
  for (std::size_t t = 0; t + 1 < n_bins; ++t)
    out[t + 1] = out[t] - step_pattern(t);
  in[0] = in[1] = in[2] = 5.0;
  for (std::size_t b = shift; b + 1 < n_bins; ++b)
    in[b + 1] = in[b] + step_pattern(b - shift);

  std::vector<DailyCycle> cycles{make_cycle("dep", out),
                                 make_cycle("arr", in)};
  std::vector<LatLon> coords{{41.400000, 2.15}, {41.414989, 2.15}};
  std::vector<StationRole> roles{StationRole::Departure,
                                 StationRole::Arrival};
  auto matched = detect_couplings(cycles, coords, roles);
  REQUIRE(matched.size() == 1);
  REQUIRE(matched[0].departure == 0);
  REQUIRE(matched[0].arrival == 1);
  REQUIRE(matched[0].score == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("two departures cannot claim the same arrival") {
  constexpr std::size_t n_bins = 215;
  constexpr long shift = 2;
  std::vector<double> out(n_bins, 0.0), in(n_bins, 0.0);
  out[0] = 150.0;
  for (std::size_t t = 0; t + 1 < n_bins; ++t)
    out[t + 1] = out[t] - step_pattern(t);
  in[0] = in[1] = in[2] = 5.0;
  for (std::size_t b = shift; b + 1 < n_bins; ++b)
    in[b + 1] = in[b] + step_pattern(b - shift);

  // identical drains north and south of the arrival; the tie resolves to
  // the lower station index and the loser stays unmatched
  std::vector<DailyCycle> cycles{make_cycle("dep-n", out),
                                 make_cycle("arr", in),
                                 make_cycle("dep-s", out)};
  std::vector<LatLon> coords{
      {41.414989, 2.15}, {41.400000, 2.15}, {41.385011, 2.15}};
  std::vector<StationRole> roles{StationRole::Departure, StationRole::Arrival,
                                 StationRole::Departure};
  auto matched = detect_couplings(cycles, coords, roles);
  REQUIRE(matched.size() == 1);
  REQUIRE(matched[0].departure == 0);
  REQUIRE(matched[0].arrival == 1);
}

TEST_CASE("flat stations never couple") {
  std::vector<DailyCycle> cycles{
      make_cycle("a", std::vector<double>(215, 12.0)),
      make_cycle("b", std::vector<double>(215, 3.0))};
  std::vector<LatLon> coords{{41.40, 2.15}, {41.41, 2.16}};
  std::vector<StationRole> roles{StationRole::Departure,
                                 StationRole::Arrival};
  REQUIRE(detect_couplings(cycles, coords, roles).empty());
}

TEST_CASE("non pattern stations are skipped entirely") {
  constexpr std::size_t n_bins = 215;
  std::vector<double> out(n_bins, 0.0), in(n_bins, 0.0);
  out[0] = 150.0;
  for (std::size_t t = 0; t + 1 < n_bins; ++t)
    out[t + 1] = out[t] - step_pattern(t);
  in[0] = in[1] = in[2] = 5.0;
  for (std::size_t b = 2; b + 1 < n_bins; ++b)
    in[b + 1] = in[b] + step_pattern(b - 2);
  std::vector<DailyCycle> cycles{make_cycle("a", out), make_cycle("b", in)};
  std::vector<LatLon> coords{{41.400000, 2.15}, {41.414989, 2.15}};
  std::vector<StationRole> roles{StationRole::NonPattern,
                                 StationRole::NonPattern};
  REQUIRE(detect_couplings(cycles, coords, roles).empty());
}

TEST_CASE("coupling detection validates its inputs") {
  auto c = make_cycle("a", std::vector<double>(215, 1.0));
  std::vector<DailyCycle> cycles{c, c};
  std::vector<LatLon> one_coord{{41.4, 2.15}};
  std::vector<StationRole> roles{StationRole::Departure,
                                 StationRole::Arrival};
  REQUIRE_THROWS_AS(detect_couplings(cycles, one_coord, roles),
                    LengthMismatch);

  std::vector<DailyCycle> mixed{make_cycle("a", std::vector<double>(215, 1.0)),
                                make_cycle("b", std::vector<double>(430, 1.0),
                                           60)};
  std::vector<LatLon> coords{{41.4, 2.15}, {41.41, 2.16}};
  REQUIRE_THROWS_AS(detect_couplings(mixed, coords, roles), LengthMismatch);
}

TEST_CASE("feature matrices are floored on the diagonal") {
  std::vector<LatLon> coords{{41.40, 2.15}, {41.42, 2.15}, {41.40, 2.18}};
  std::vector<std::vector<double>> means{
      {1, 2, 3, 4, 5}, {5, 4, 3, 2, 1}, {2, 2, 5, 2, 2}};
  std::vector<Coupling> couplings{{0, 1, 0.8}};
  auto fs = build_features(coords, means, couplings);
  REQUIRE(fs.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    REQUIRE(fs.f1(s, s) == kFeatureFloor);
    REQUIRE(fs.f2(s, s) == kFeatureFloor);
    REQUIRE(fs.f3(s, s) == 0.5);
  }
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(fs.f1(j, i) == fs.f1(i, j));
      REQUIRE(fs.f2(j, i) == fs.f2(i, j));
    }
  REQUIRE(fs.f3(1, 0) == 1.0);
  REQUIRE(fs.f3(0, 1) == 0.1);
  REQUIRE(fs.f3(2, 0) == 0.5);
  REQUIRE(fs.f2(1, 0) == Catch::Approx(1.0));
}

TEST_CASE("zero exponents give uniform columns") {
  FeatureSet fs;
  fs.f1 = Matrix(4, 4, 0.3);
  fs.f2 = Matrix(4, 4, 0.7);
  fs.f3 = Matrix(4, 4, 0.5);
  fs.f1(2, 1) = 0.9;
  fs.f2(3, 0) = 0.1;
  auto model = build_transition({0.0, 0.0, 0.0}, fs);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i)
      REQUIRE(model.P(j, i) == Catch::Approx(0.25));
}

TEST_CASE("a single active feature sets the column odds") {
  FeatureSet fs;
  fs.f1 = Matrix(2, 2, 1.0);
  fs.f2 = Matrix(2, 2, 1.0);
  fs.f3 = Matrix(2, 2, 1.0);
  fs.f1(0, 0) = 1.0;
  fs.f1(1, 0) = 3.0;
  auto model = build_transition({1.0, 0.0, 0.0}, fs);
  REQUIRE(model.P(0, 0) == Catch::Approx(0.25));
  REQUIRE(model.P(1, 0) == Catch::Approx(0.75));
  REQUIRE(model.P(0, 1) == Catch::Approx(0.5));
  REQUIRE(model.P(1, 1) == Catch::Approx(0.5));
}

TEST_CASE("columns always sum to one") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> feat(0.01, 1.0), lam(-3.0, 3.0);
  FeatureSet fs;
  fs.f1 = Matrix(6, 6);
  fs.f2 = Matrix(6, 6);
  fs.f3 = Matrix(6, 6);
  for (auto* m : {&fs.f1, &fs.f2, &fs.f3})
    for (auto& v : m->data) v = feat(rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = build_transition({lam(rng), lam(rng), lam(rng)}, fs);
    for (std::size_t i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        sum += model.P(j, i);
        REQUIRE(model.P(j, i) >= 0.0);
      }
      REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("rescaling a whole feature leaves the transition unchanged") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> feat(0.01, 1.0);
  FeatureSet fs;
  fs.f1 = Matrix(4, 4);
  fs.f2 = Matrix(4, 4);
  fs.f3 = Matrix(4, 4);
  for (auto* m : {&fs.f1, &fs.f2, &fs.f3})
    for (auto& v : m->data) v = feat(rng);
  auto base = build_transition({0.7, 1.3, 2.0}, fs);
  for (auto& v : fs.f2.data) v *= 3.7;
  auto scaled = build_transition({0.7, 1.3, 2.0}, fs);
  for (std::size_t k = 0; k < base.P.data.size(); ++k)
    REQUIRE(scaled.P.data[k] == Catch::Approx(base.P.data[k]).margin(1e-12));
}

TEST_CASE("propagation through the identity is a no-op") {
  Matrix P(3, 3);
  for (std::size_t s = 0; s < 3; ++s) P(s, s) = 1.0;
  std::vector<double> I{4.0, 7.0, 1.0};
  auto F = propagate(P, I);
  REQUIRE(F == I);
}

TEST_CASE("an even split halves the mass") {
  Matrix P(2, 2, 0.5);
  std::vector<double> I{4.0, 0.0};
  auto F = propagate(P, I);
  REQUIRE(F[0] == Catch::Approx(2.0));
  REQUIRE(F[1] == Catch::Approx(2.0));
}

TEST_CASE("propagation conserves total mass") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix P(6, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      P(j, i) = u(rng) + 0.01;
      sum += P(j, i);
    }
    for (std::size_t j = 0; j < 6; ++j) P(j, i) /= sum;
  }
  std::vector<double> I{3.0, 0.0, 12.5, 7.0, 1.0, 9.5};
  auto F = propagate(P, I);
  double in = 0.0, out = 0.0;
  for (auto v : I) in += v;
  for (auto v : F) out += v;
  REQUIRE(out == Catch::Approx(in).margin(1e-9));
}

TEST_CASE("propagation rejects mismatched shapes") {
  Matrix P(3, 3, 1.0 / 3.0);
  std::vector<double> two{1.0, 2.0};
  REQUIRE_THROWS_AS(propagate(P, two), DimensionMismatch);
  Matrix rect(3, 2, 0.5);
  REQUIRE_THROWS_AS(propagate(rect, two), DimensionMismatch);
}

TEST_CASE("fitting recovers a transition that explains the data") {
  std::vector<LatLon> coords;
  std::vector<std::vector<double>> means;
  for (int s = 0; s < 5; ++s) {
    double a = 2.0 * M_PI * s / 5.0;
    coords.push_back({41.40 + 0.015 * std::cos(a), 2.15 + 0.020 * std::sin(a)});
    std::vector<double> m(10);
    for (int b = 0; b < 10; ++b) m[b] = 10.0 + 3.0 * std::sin(0.6 * b + 0.9 * s);
    means.push_back(m);
  }
  std::vector<Coupling> couplings{{0, 3, 0.9}, {1, 4, 0.7}};
  auto fs = build_features(coords, means, couplings);

  std::array<double, 3> truth{1.0, 1.2, 1.1};
  MorningAggregate agg;
  agg.ids = {"s0", "s1", "s2", "s3", "s4"};
  agg.I = {20.0, 15.0, 10.0, 5.0, 12.0};
  agg.F = propagate(build_transition(truth, fs).P, agg.I);

  auto at_init = propagate(build_transition({1.0, 1.0, 1.0}, fs).P, agg.I);
  double j_init = 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    double r = at_init[s] - agg.F[s];
    j_init += r * r;
  }

  auto fit = fit_lambda(agg, fs, {1.0, 1.0, 1.0}, 1e-12, 800, 0);
  REQUIRE(fit.objective < j_init);
  REQUIRE(fit.objective <= 1e-6);
  auto f_hat = propagate(fit.P, agg.I);
  for (std::size_t s = 0; s < 5; ++s)
    REQUIRE(f_hat[s] == Catch::Approx(agg.F[s]).margin(1e-3));
}

TEST_CASE("fitting validates its inputs") {
  FeatureSet fs;
  fs.f1 = Matrix(3, 3, 0.5);
  fs.f2 = Matrix(3, 3, 0.5);
  fs.f3 = Matrix(3, 3, 0.5);
  MorningAggregate one;
  one.ids = {"a"};
  one.I = {1.0};
  one.F = {1.0};
  REQUIRE_THROWS_AS(fit_lambda(one, fs), EmptyInput);

  MorningAggregate two;
  two.ids = {"a", "b"};
  two.I = {1.0, 2.0};
  two.F = {2.0, 1.0};
  REQUIRE_THROWS_AS(fit_lambda(two, fs), DimensionMismatch);
}

TEST_CASE("route listing is sorted and excludes staying put") {
  TransitionModel m;
  m.P = Matrix(3, 3);
  m.P(0, 0) = 0.2; m.P(1, 0) = 0.5; m.P(2, 0) = 0.3;
  m.P(0, 1) = 0.6; m.P(1, 1) = 0.15; m.P(2, 1) = 0.25;
  m.P(2, 2) = 1.0;
  std::vector<std::string> ids{"a", "b", "c"};
  auto routes = top_routes(m, ids);
  REQUIRE(routes.size() == 4);
  REQUIRE(routes[0].origin == "b");
  REQUIRE(routes[0].destination == "a");
  REQUIRE(routes[0].probability == Catch::Approx(0.6));
  REQUIRE(routes[1].origin == "a");
  REQUIRE(routes[1].destination == "b");
  REQUIRE(routes[2].probability == Catch::Approx(0.3));
  REQUIRE(routes[3].origin == "b");
  REQUIRE(routes[3].destination == "c");
}

TEST_CASE("equal probabilities order by origin then destination") {
  TransitionModel m;
  m.P = Matrix(2, 2);
  m.P(1, 0) = 0.5; m.P(0, 0) = 0.5;
  m.P(0, 1) = 0.5; m.P(1, 1) = 0.5;
  std::vector<std::string> ids{"a", "b"};
  auto routes = top_routes(m, ids);
  REQUIRE(routes.size() == 2);
  REQUIRE(routes[0].origin == "a");
  REQUIRE(routes[0].destination == "b");
  REQUIRE(routes[1].origin == "b");
  REQUIRE(routes[1].destination == "a");
}

TEST_CASE("a uniform network clears the route threshold only when small") {
  FeatureSet fs;
  fs.f1 = Matrix(34, 34, 0.5);
  fs.f2 = Matrix(34, 34, 0.5);
  fs.f3 = Matrix(34, 34, 0.5);
  std::vector<std::string> ids;
  for (int s = 0; s < 34; ++s) ids.push_back("s" + std::to_string(s));
  auto model = build_transition({0.0, 0.0, 0.0}, fs);
  REQUIRE(top_routes(model, ids).empty());
  REQUIRE(top_routes(model, ids, 0.0).size() == 34u * 33u);
}
