#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bikeflow/nelder_mead.hpp"

using namespace bikeflow;

TEST_CASE("simplex descends a shifted parabola") {
  auto f = [](const std::vector<double>& x) {
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  auto r = nelder_mead(f, {0.0}, 1e-10, 500, 1);
  REQUIRE(r.converged);
  REQUIRE(r.x[0] == Catch::Approx(3.0).margin(1e-4));
  REQUIRE(r.fx < 1e-8);
  REQUIRE(r.iterations < 500);
}

TEST_CASE("simplex finds a two dimensional minimum") {
  auto f = [](const std::vector<double>& x) {
    double a = x[0] - 1.0;
    double b = x[1] + 2.0;
    return a * a + 2.0 * b * b;
  };
  auto r = nelder_mead(f, {5.0, 5.0}, 1e-12, 1000, 0);
  REQUIRE(r.converged);
  REQUIRE(r.x[0] == Catch::Approx(1.0).margin(1e-4));
  REQUIRE(r.x[1] == Catch::Approx(-2.0).margin(1e-4));
}

TEST_CASE("simplex handles a curved valley") {
  auto rosen = [](const std::vector<double>& x) {
    double a = 1.0 - x[0];
    double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  auto r = nelder_mead(rosen, {-1.2, 1.0}, 1e-12, 2000, 0);
  REQUIRE(r.fx < 1e-6);
  REQUIRE(r.x[0] == Catch::Approx(1.0).margin(0.01));
  REQUIRE(r.x[1] == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("best objective trace never rises") {
  auto f = [](const std::vector<double>& x) {
    return std::abs(x[0] - 0.7) + 0.5 * std::abs(x[1] + 0.3);
  };
  auto r = nelder_mead(f, {4.0, -4.0}, 1e-9, 400, 5);
  REQUIRE(r.best_trace.size() >= 2);
  for (std::size_t i = 1; i < r.best_trace.size(); ++i)
    REQUIRE(r.best_trace[i] <= r.best_trace[i - 1]);
}

TEST_CASE("iteration cap reports non convergence") {
  auto rosen = [](const std::vector<double>& x) {
    double a = 1.0 - x[0];
    double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  auto r = nelder_mead(rosen, {-1.2, 1.0}, 1e-15, 3, 0);
  REQUIRE_FALSE(r.converged);
  REQUIRE(r.iterations == 3);
}

TEST_CASE("same seed reproduces the exact trajectory") {
  auto f = [](const std::vector<double>& x) {
    return std::sin(x[0]) + x[0] * x[0] * 0.1 + (x[1] - 2.0) * (x[1] - 2.0);
  };
  auto a = nelder_mead(f, {3.0, 0.0}, 1e-8, 300, 42);
  auto b = nelder_mead(f, {3.0, 0.0}, 1e-8, 300, 42);
  REQUIRE(a.x == b.x);
  REQUIRE(a.fx == b.fx);
  REQUIRE(a.iterations == b.iterations);
  REQUIRE(a.best_trace == b.best_trace);
}

TEST_CASE("empty start point is rejected") {
  auto f = [](const std::vector<double>&) { return 0.0; };
  REQUIRE_THROWS_AS(nelder_mead(f, {}), EmptyInput);
}
