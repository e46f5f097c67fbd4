#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bikeflow/errors.hpp"

namespace bikeflow {

// Pearson correlation coefficient. A constant input has no direction, so its
// correlation with anything is defined as 0 here.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw LengthMismatch("correlation inputs differ in length");
  std::size_t n = a.size();
  if (n == 0) throw EmptyInput("correlation of empty sequences");
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i] - ma;
    double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Ranks with ties sharing their average rank (1-based).
inline std::vector<double> ranks(std::span<const double> values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) {
                     return values[i] < values[j];
                   });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  auto ra = ranks(a);
  auto rb = ranks(b);
  return pearson(ra, rb);
}

// Centered moving average with the window shrinking symmetrically at the
// edges, matching the median filter's edge rule.
inline std::vector<double> moving_average(const std::vector<double>& values,
                                          int window) {
  if (window < 1 || window % 2 == 0)
    throw EvenWindow("moving-average window must be odd, got " +
                     std::to_string(window));
  std::size_t n = values.size();
  std::vector<double> out(n);
  int radius = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    long r = std::min<long>({radius, static_cast<long>(i),
                             static_cast<long>(n - 1 - i)});
    double sum = 0.0;
    for (long j = -r; j <= r; ++j) sum += values[i + j];
    out[i] = sum / (2 * r + 1);
  }
  return out;
}

}  // namespace bikeflow
