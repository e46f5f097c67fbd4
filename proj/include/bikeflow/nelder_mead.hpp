#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "bikeflow/errors.hpp"

namespace bikeflow {

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> best_trace;  // best objective after each iteration
};

// Downhill simplex with the standard coefficients (reflect 1, expand 2,
// contract 0.5, shrink 0.5). The seed perturbs the initial simplex scale so
// distinct seeds explore distinct simplices while staying reproducible.
template <typename F>
NelderMeadResult nelder_mead(F f, std::vector<double> init, double tol = 1e-4,
                             int max_iter = 500, std::uint64_t seed = 0,
                             double step = 0.5) {
  if (init.empty()) throw EmptyInput("nothing to optimize");
  std::size_t n = init.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);

  std::vector<std::vector<double>> simplex(n + 1, init);
  for (std::size_t i = 0; i < n; ++i)
    simplex[i + 1][i] += step * (1.0 + jitter(rng));
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  NelderMeadResult result;
  std::vector<std::size_t> order(n + 1);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::size_t best = order[0], second_worst = order[n - 1], worst = order[n];
    result.iterations = iter;
    result.best_trace.push_back(fv[best]);
    if (fv[worst] - fv[best] <= tol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d];
    }
    for (auto& c : centroid) c /= n;

    auto blend = [&](double coeff) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d)
        x[d] = centroid[d] + coeff * (simplex[worst][d] - centroid[d]);
      return x;
    };
    auto reflected = blend(-1.0);
    double fr = f(reflected);
    if (fr < fv[best]) {
      auto expanded = blend(-2.0);
      double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        fv[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second_worst]) {
      simplex[worst] = std::move(reflected);
      fv[worst] = fr;
      continue;
    }
    bool outside = fr < fv[worst];
    auto contracted = blend(outside ? -0.5 : 0.5);
    double fc = f(contracted);
    if (fc <= (outside ? fr : fv[worst])) {
      simplex[worst] = std::move(contracted);
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d)
        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      fv[i] = f(simplex[i]);
    }
  }

  if (!result.converged) result.iterations = max_iter;
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  result.x = simplex[best];
  result.fx = fv[best];
  if (result.best_trace.empty() || result.best_trace.back() > result.fx)
    result.best_trace.push_back(result.fx);
  return result;
}

}  // namespace bikeflow
