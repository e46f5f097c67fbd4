#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bikeflow/config.hpp"
#include "bikeflow/errors.hpp"
#include "bikeflow/preprocess.hpp"

namespace bikeflow {

// A station's cycle restricted to the bins shared by all clustered stations.
struct CycleVector {
  std::string station_id;
  std::vector<double> values;
};

// Gradient signs of a cycle, entries +1 or -1, length n-1.
struct SignVector {
  std::vector<std::int8_t> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const SignVector&) const = default;
};

// Similarity value with a distinguished top element for identical vectors.
// The top element orders above every finite similarity and never enters
// arithmetic.
class Sim {
 public:
  Sim() = default;
  static Sim max() {
    Sim s;
    s.is_max_ = true;
    return s;
  }
  static Sim finite(double v) {
    Sim s;
    s.value_ = v;
    return s;
  }

  bool is_max() const { return is_max_; }
  double value() const {
    if (is_max_) throw Error("MAX_SIMILARITY has no numeric value");
    return value_;
  }

  friend bool operator==(const Sim& a, const Sim& b) {
    if (a.is_max_ || b.is_max_) return a.is_max_ == b.is_max_;
    return a.value_ == b.value_;
  }
  friend bool operator<(const Sim& a, const Sim& b) {
    if (a.is_max_) return false;
    if (b.is_max_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator>(const Sim& a, const Sim& b) { return b < a; }
  friend bool operator<=(const Sim& a, const Sim& b) { return !(b < a); }
  friend bool operator>=(const Sim& a, const Sim& b) { return !(a < b); }

 private:
  bool is_max_ = false;
  double value_ = 0.0;
};

inline double abs_distance(const CycleVector& p, const CycleVector& q) {
  if (p.values.size() != q.values.size())
    throw LengthMismatch("cycle vectors differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i)
    sum += std::abs(p.values[i] - q.values[i]);
  return sum;
}

inline Sim abs_sim(const CycleVector& p, const CycleVector& q) {
  double d = abs_distance(p, q);
  if (d == 0.0) return Sim::max();
  return Sim::finite(1.0 / d);
}

inline SignVector grad_sign(const CycleVector& p) {
  if (p.values.size() < 2)
    throw TooShort("gradient needs at least 2 samples, got " +
                   std::to_string(p.values.size()));
  SignVector d;
  d.values.resize(p.values.size() - 1);
  for (std::size_t i = 0; i + 1 < p.values.size(); ++i)
    d.values[i] = p.values[i + 1] - p.values[i] >= 0.0 ? 1 : -1;
  return d;
}

inline int agreement(const SignVector& a, const SignVector& b) {
  if (a.size() != b.size())
    throw LengthMismatch("sign vectors differ in length");
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.values[i] == b.values[i]) ++count;
  return count;
}

inline int hamming(const SignVector& a, const SignVector& b) {
  return static_cast<int>(a.size()) - agreement(a, b);
}

// Count of grid steps where two stations' cycles move in the same direction.
inline double rel_sim(const CycleVector& p, const CycleVector& q) {
  if (p.values.size() != q.values.size())
    throw LengthMismatch("cycle vectors differ in length");
  return agreement(grad_sign(p), grad_sign(q));
}

inline constexpr int kUngrouped = -1;

struct ClusterModel {
  int k = 0;
  std::map<std::string, int> assignment;
  std::vector<CycleVector> centroids;
  std::vector<double> objective_trace;  // stage-1 L1 cost per iteration
  int meta_k = 0;
  std::vector<int> meta_assignment;  // per cluster; kUngrouped when isolated
};

namespace detail {

inline void check_vectors(const std::vector<CycleVector>& vectors) {
  if (vectors.empty()) throw EmptyInput("no cycle vectors to cluster");
  std::size_t n = vectors.front().values.size();
  if (n < 2) throw TooShort("cycle vectors need at least 2 samples");
  for (const auto& v : vectors)
    if (v.values.size() != n)
      throw LengthMismatch("cycle vectors differ in length");
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

// Farthest-point seeding: random first pick, then repeatedly the point
// farthest from its nearest chosen center. Ties resolve to the lowest index.
template <typename Dist>
std::vector<std::size_t> seed_centers(std::size_t count, std::size_t n_points,
                                      std::uint64_t seed, Dist dist) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> centers;
  centers.push_back(
      std::uniform_int_distribution<std::size_t>(0, n_points - 1)(rng));
  std::vector<double> nearest(n_points,
                              std::numeric_limits<double>::infinity());
  while (centers.size() < count) {
    for (std::size_t p = 0; p < n_points; ++p)
      nearest[p] = std::min(nearest[p], dist(p, centers.back()));
    std::size_t best = 0;
    for (std::size_t p = 1; p < n_points; ++p)
      if (nearest[p] > nearest[best]) best = p;
    centers.push_back(best);
  }
  return centers;
}

}  // namespace detail

// Stage-1 clustering: k-medians under the L1 distance of the absolute
// similarity metric. Deterministic for a given seed.
inline ClusterModel kmeans_abs(const std::vector<CycleVector>& vectors, int k,
                               std::uint64_t seed, int max_iter = 100) {
  detail::check_vectors(vectors);
  auto N = vectors.size();
  if (k < 1 || static_cast<std::size_t>(k) > N)
    throw KTooLarge("k=" + std::to_string(k) + " with " + std::to_string(N) +
                    " stations");
  max_iter = std::max(max_iter, 1);
  std::size_t n = vectors.front().values.size();

  auto point_dist = [&](std::size_t a, std::size_t b) {
    return detail::l1(vectors[a].values, vectors[b].values);
  };
  auto centers = detail::seed_centers(static_cast<std::size_t>(k), N, seed,
                                      point_dist);
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  for (auto c : centers) centroids.push_back(vectors[c].values);

  std::vector<int> assign(N, -1);
  std::vector<double> trace;
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t p = 0; p < N; ++p) {
      int best = 0;
      double best_d = detail::l1(vectors[p].values, centroids[0]);
      for (int c = 1; c < k; ++c) {
        double d = detail::l1(vectors[p].values, centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[p] != best) {
        assign[p] = best;
        changed = true;
      }
    }
    // an emptied cluster steals the point farthest from its own centroid
    for (int c = 0; c < k; ++c) {
      if (std::count(assign.begin(), assign.end(), c) > 0) continue;
      std::size_t worst = 0;
      double worst_d = -1.0;
      for (std::size_t p = 0; p < N; ++p) {
        if (std::count(assign.begin(), assign.end(), assign[p]) < 2) continue;
        double d = detail::l1(vectors[p].values, centroids[assign[p]]);
        if (d > worst_d) {
          worst_d = d;
          worst = p;
        }
      }
      if (worst_d > 0.0) {
        assign[worst] = c;
        centroids[c] = vectors[worst].values;
        changed = true;
      }
    }
    std::vector<double> scratch;
    for (int c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        scratch.clear();
        for (std::size_t p = 0; p < N; ++p)
          if (assign[p] == c) scratch.push_back(vectors[p].values[i]);
        if (!scratch.empty()) centroids[c][i] = detail::median_of(scratch);
      }
    }
    double objective = 0.0;
    for (std::size_t p = 0; p < N; ++p)
      objective += detail::l1(vectors[p].values, centroids[assign[p]]);
    trace.push_back(objective);
    if (!changed) break;
  }

  // drop clusters that stayed empty (only possible with duplicate points)
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int c = 0; c < k; ++c)
    if (std::count(assign.begin(), assign.end(), c) > 0) remap[c] = next++;

  ClusterModel model;
  model.k = next;
  model.objective_trace = std::move(trace);
  model.centroids.resize(next);
  for (int c = 0; c < k; ++c)
    if (remap[c] >= 0) {
      model.centroids[remap[c]].station_id =
          "cluster-" + std::to_string(remap[c]);
      model.centroids[remap[c]].values = std::move(centroids[c]);
    }
  for (std::size_t p = 0; p < N; ++p)
    model.assignment[vectors[p].station_id] = remap[assign[p]];
  return model;
}

// Internal similarity of one cluster. Pairs of identical vectors are top
// elements that cannot enter a mean; they are skipped, and a cluster with no
// finite pair (singletons included) rates as maximally similar.
inline Sim internal_similarity(
    const std::vector<CycleVector>& vectors,
    const std::vector<std::size_t>& members,
    InternalSimilarityKind kind = InternalSimilarityKind::MeanPairwise) {
  if (members.size() <= 1) return Sim::max();
  if (kind == InternalSimilarityKind::MinPairwise) {
    Sim lowest = Sim::max();
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        lowest = std::min(lowest, abs_sim(vectors[members[a]],
                                          vectors[members[b]]));
    return lowest;
  }
  double sum = 0.0;
  long finite_pairs = 0;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      Sim s = abs_sim(vectors[members[a]], vectors[members[b]]);
      if (s.is_max()) continue;
      sum += s.value();
      ++finite_pairs;
    }
  if (finite_pairs == 0) return Sim::max();
  return Sim::finite(sum / finite_pairs);
}

inline Sim min_internal_similarity(
    const std::vector<CycleVector>& vectors, const ClusterModel& model,
    InternalSimilarityKind kind = InternalSimilarityKind::MeanPairwise) {
  std::vector<std::vector<std::size_t>> members(model.k);
  for (std::size_t p = 0; p < vectors.size(); ++p)
    members[model.assignment.at(vectors[p].station_id)].push_back(p);
  Sim lowest = Sim::max();
  for (const auto& m : members)
    lowest = std::min(lowest, internal_similarity(vectors, m, kind));
  return lowest;
}

struct KSelection {
  int k = 0;
  bool monotone = false;  // curve never strictly decreased
  std::vector<Sim> curve;  // smoothed min internal similarity per k
};

namespace detail {

inline std::vector<Sim> median3_sim(const std::vector<Sim>& curve) {
  std::size_t n = curve.size();
  std::vector<Sim> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    long r = std::min<long>({1, static_cast<long>(i),
                             static_cast<long>(n - 1 - i)});
    std::vector<Sim> window(curve.begin() + (i - r), curve.begin() + (i + r + 1));
    std::sort(window.begin(), window.end());
    out[i] = window[window.size() / 2];
  }
  return out;
}

}  // namespace detail

// Scans k over the range, tracking the smallest internal similarity across
// clusters. The chosen k sits immediately before the first strict decrease of
// the median-smoothed curve; a curve that never decreases yields the top of
// the range, flagged monotone.
inline KSelection select_k(
    const std::vector<CycleVector>& vectors, int k_lo, int k_hi,
    std::uint64_t seed,
    InternalSimilarityKind kind = InternalSimilarityKind::MeanPairwise,
    int max_iter = 100) {
  if (k_lo > k_hi) throw RangeEmpty("empty k range");
  if (k_lo < 2) throw RangeEmpty("k range must start at 2 or above");
  if (static_cast<std::size_t>(k_hi) > vectors.size())
    throw KTooLarge("k range exceeds the number of stations");
  std::vector<Sim> raw;
  raw.reserve(k_hi - k_lo + 1);
  for (int k = k_lo; k <= k_hi; ++k) {
    auto model = kmeans_abs(vectors, k,
                            seed ^ (static_cast<std::uint64_t>(k) *
                                    0x9e3779b97f4a7c15ULL),
                            max_iter);
    raw.push_back(min_internal_similarity(vectors, model, kind));
  }
  KSelection result;
  result.curve = detail::median3_sim(raw);
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    if (result.curve[i] < result.curve[i - 1]) {
      result.k = k_lo + static_cast<int>(i) - 1;
      return result;
    }
  }
  result.k = k_hi;
  result.monotone = true;
  return result;
}

// Stage 2: clusters of clusters. Each stage-1 centroid is reduced to its
// gradient signs and clustered under Hamming distance, which orders pairs
// exactly as relative similarity does.
inline ClusterModel meta_cluster(ClusterModel model, int meta_k,
                                 std::uint64_t seed, int max_iter = 100,
                                 double min_agreement = 0.5) {
  if (meta_k < 1 || meta_k > model.k)
    throw MetaKTooLarge("meta_k=" + std::to_string(meta_k) + " with " +
                        std::to_string(model.k) + " clusters");
  max_iter = std::max(max_iter, 1);
  std::vector<SignVector> signs;
  signs.reserve(model.k);
  for (const auto& c : model.centroids) signs.push_back(grad_sign(c));
  auto nbits = static_cast<int>(signs.front().size());

  auto point_dist = [&](std::size_t a, std::size_t b) {
    return static_cast<double>(hamming(signs[a], signs[b]));
  };
  auto centers = detail::seed_centers(static_cast<std::size_t>(meta_k),
                                      signs.size(), seed, point_dist);
  std::vector<SignVector> centroids;
  centroids.reserve(meta_k);
  for (auto c : centers) centroids.push_back(signs[c]);

  std::vector<int> assign(signs.size(), -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t p = 0; p < signs.size(); ++p) {
      int best = 0;
      int best_d = hamming(signs[p], centroids[0]);
      for (int c = 1; c < meta_k; ++c) {
        int d = hamming(signs[p], centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[p] != best) {
        assign[p] = best;
        changed = true;
      }
    }
    for (int c = 0; c < meta_k; ++c) {
      if (std::count(assign.begin(), assign.end(), c) > 0) continue;
      std::size_t worst = 0;
      int worst_d = -1;
      for (std::size_t p = 0; p < signs.size(); ++p) {
        if (std::count(assign.begin(), assign.end(), assign[p]) < 2) continue;
        int d = hamming(signs[p], centroids[assign[p]]);
        if (d > worst_d) {
          worst_d = d;
          worst = p;
        }
      }
      if (worst_d > 0) {
        assign[worst] = c;
        centroids[c] = signs[worst];
        changed = true;
      }
    }
    // majority vote per component, ties to +1
    for (int c = 0; c < meta_k; ++c) {
      long size = std::count(assign.begin(), assign.end(), c);
      if (size == 0) continue;
      for (int i = 0; i < nbits; ++i) {
        long plus = 0;
        for (std::size_t p = 0; p < signs.size(); ++p)
          if (assign[p] == c && signs[p].values[i] > 0) ++plus;
        centroids[c].values[i] = 2 * plus >= size ? 1 : -1;
      }
    }
    if (!changed) break;
  }

  model.meta_k = meta_k;
  model.meta_assignment.assign(model.k, kUngrouped);
  for (std::size_t p = 0; p < signs.size(); ++p) {
    double frac =
        static_cast<double>(agreement(signs[p], centroids[assign[p]])) / nbits;
    if (frac >= min_agreement)
      model.meta_assignment[p] = assign[p];
  }
  return model;
}

}  // namespace bikeflow
