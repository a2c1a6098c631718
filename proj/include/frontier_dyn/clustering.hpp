#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "frontier_dyn/util.hpp"

namespace frontier_dyn {

using Point = std::vector<double>;

enum class ClusteringErrorKind { KTooLarge, SingleCluster, InvalidArgument };

class ClusteringError : public std::invalid_argument {
 public:
  ClusteringError(ClusteringErrorKind kind, const std::string& detail)
      : std::invalid_argument(detail), kind_(kind) {}
  ClusteringErrorKind kind() const noexcept { return kind_; }

 private:
  ClusteringErrorKind kind_;
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<Point> centers;
  std::vector<std::size_t> assignments;
  /// Sum over clusters of squared distances to the cluster mean.
  double dispersion = 0.0;
  /// Dispersion after each Lloyd iteration.
  std::vector<double> dispersion_history;
  std::size_t iterations = 0;
  std::optional<double> silhouette;
};

inline double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::size_t distinct_count(const std::vector<Point>& points) {
  return std::set<Point>(points.begin(), points.end()).size();
}

inline double dispersion_of(const std::vector<Point>& points, const std::vector<Point>& centers,
                            const std::vector<std::size_t>& assignments) {
  double d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) d += squared_distance(points[i], centers[assignments[i]]);
  return d;
}

namespace detail {

inline void check_points(const std::vector<Point>& points) {
  if (points.empty()) throw ClusteringError(ClusteringErrorKind::InvalidArgument, "no points");
  const std::size_t dim = points.front().size();
  if (dim == 0) throw ClusteringError(ClusteringErrorKind::InvalidArgument, "zero-dimensional points");
  for (const auto& p : points) {
    if (p.size() != dim) throw ClusteringError(ClusteringErrorKind::InvalidArgument, "mixed point dimensions");
    for (double v : p)
      if (!std::isfinite(v)) throw ClusteringError(ClusteringErrorKind::InvalidArgument, "non-finite coordinate");
  }
}

/// Nearest center, ties to the lowest index.
inline std::size_t nearest(const Point& p, const std::vector<Point>& centers) {
  std::size_t best = 0;
  double best_d = squared_distance(p, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squared_distance(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

/// k-means++ seeding with hand-mapped draws so the result is portable.
inline std::vector<Point> plus_plus_init(const std::vector<Point>& points, std::size_t k, std::mt19937_64& rng) {
  std::vector<Point> centers;
  centers.push_back(points[uniform_index(rng, points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centers[0]);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit_double(rng) * total;
      double acc = 0.0;
      pick = points.size();
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == points.size()) {
        // round-off at the top of the range: take the last point still uncovered
        for (std::size_t i = points.size(); i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i)
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
  }
  return centers;
}

inline void recompute_centers(const std::vector<Point>& points, const std::vector<std::size_t>& assignments,
                              std::vector<Point>& centers, std::vector<std::size_t>& counts) {
  const std::size_t dim = points.front().size();
  for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& c = centers[assignments[i]];
    for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < centers.size(); ++c)
    if (counts[c])
      for (auto& v : centers[c]) v /= static_cast<double>(counts[c]);
}

}  // namespace detail

/// Lloyd iterations from k-means++ seeding. Empty clusters are re-seeded
/// with the point farthest from its own center.
inline ClusterModel kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 300) {
  detail::check_points(points);
  if (max_iter < 1) throw ClusteringError(ClusteringErrorKind::InvalidArgument, "max_iter must be >= 1");
  if (k < 1) throw ClusteringError(ClusteringErrorKind::InvalidArgument, "k must be >= 1");
  if (k > distinct_count(points))
    throw ClusteringError(ClusteringErrorKind::KTooLarge,
                          "k=" + std::to_string(k) + " exceeds the distinct point count");

  std::mt19937_64 rng(seed);
  ClusterModel model;
  model.k = k;
  model.centers = detail::plus_plus_init(points, k, rng);
  model.assignments.assign(points.size(), 0);
  std::vector<std::size_t> counts(k, 0);
  bool first = true;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = first;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = detail::nearest(points[i], model.centers);
      if (c != model.assignments[i]) {
        model.assignments[i] = c;
        changed = true;
      }
    }
    first = false;
    detail::recompute_centers(points, model.assignments, model.centers, counts);

    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c]) continue;
      std::size_t far = points.size();
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (counts[model.assignments[i]] < 2) continue;
        const double d = squared_distance(points[i], model.centers[model.assignments[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == points.size()) break;
      model.assignments[far] = c;
      detail::recompute_centers(points, model.assignments, model.centers, counts);
      changed = true;
    }

    ++model.iterations;
    model.dispersion_history.push_back(dispersion_of(points, model.centers, model.assignments));
    if (!changed) break;
  }
  model.dispersion = model.dispersion_history.back();
  return model;
}

/// Best-of-`restarts` k-means by dispersion; restart r uses a seed derived
/// from (seed, r).
inline ClusterModel kmeans_restarts(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                                    std::size_t restarts, std::size_t max_iter = 300) {
  std::optional<ClusterModel> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    auto m = kmeans(points, k, r == 0 ? seed : splitmix64(seed + r), max_iter);
    if (!best || m.dispersion < best->dispersion) best = std::move(m);
  }
  return *best;
}

/// Mean silhouette with Euclidean distance. Singleton clusters score 0, as
/// does a point whose a and b are both 0.
inline double silhouette(const std::vector<Point>& points, const std::vector<std::size_t>& assignments) {
  detail::check_points(points);
  if (assignments.size() != points.size())
    throw ClusteringError(ClusteringErrorKind::InvalidArgument, "assignment count differs from point count");
  const std::size_t labels = *std::max_element(assignments.begin(), assignments.end()) + 1;
  std::vector<std::size_t> sizes(labels, 0);
  for (auto a : assignments) ++sizes[a];
  if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }) < 2)
    throw ClusteringError(ClusteringErrorKind::SingleCluster, "silhouette needs at least two clusters");

  double total = 0.0;
  std::vector<double> sums(labels);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t own = assignments[i];
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i) sums[assignments[j]] += std::sqrt(squared_distance(points[i], points[j]));
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < labels; ++c)
      if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(points.size());
}

struct KSelection {
  std::size_t chosen_k = 0;
  std::size_t best_k = 0;  // argmax silhouette, even when overridden
  std::vector<std::pair<std::size_t, double>> silhouettes;
  std::vector<ClusterModel> models;  // one per k in the table, same order
  const ClusterModel& model_for(std::size_t k) const {
    for (const auto& m : models)
      if (m.k == k) return m;
    throw std::out_of_range("no model for k=" + std::to_string(k));
  }
};

inline constexpr std::size_t kSelectRestarts = 10;

/// Silhouette table over k_min..k_max; argmax wins unless `override_k` is set
/// (the overridden k gets a model too, even outside the range).
inline KSelection select_k(const std::vector<Point>& points, std::size_t k_min, std::size_t k_max,
                           std::uint64_t seed, std::optional<std::size_t> override_k = std::nullopt) {
  detail::check_points(points);
  const std::size_t distinct = distinct_count(points);
  if (k_min < 2 || k_min > k_max)
    throw ClusteringError(ClusteringErrorKind::InvalidArgument, "need 2 <= k_min <= k_max");
  if (k_max > distinct)
    throw ClusteringError(ClusteringErrorKind::KTooLarge,
                          "k_max=" + std::to_string(k_max) + " exceeds " + std::to_string(distinct) +
                              " distinct points");
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    auto m = kmeans_restarts(points, k, splitmix64(seed ^ k), kSelectRestarts);
    m.silhouette = silhouette(points, m.assignments);
    sel.silhouettes.emplace_back(k, *m.silhouette);
    if (*m.silhouette > best) {
      best = *m.silhouette;
      sel.best_k = k;
    }
    sel.models.push_back(std::move(m));
  }
  sel.chosen_k = override_k.value_or(sel.best_k);
  if (override_k && (*override_k < k_min || *override_k > k_max)) {
    auto m = kmeans_restarts(points, *override_k, splitmix64(seed ^ *override_k), kSelectRestarts);
    if (*override_k >= 2) m.silhouette = silhouette(points, m.assignments);
    sel.models.push_back(std::move(m));
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Grading

struct Grading {
  /// order[g] is the cluster index holding grade g (0 = best).
  std::vector<std::size_t> order;
  std::vector<std::string> labels;
  /// Mean member efficiency per grade.
  std::vector<double> center_efficiency;
  /// grade_of_cluster[c] inverts `order`.
  std::vector<std::size_t> grade_of_cluster;
};

inline std::vector<std::string> grade_labels(std::size_t k) {
  std::vector<std::string> labels;
  if (k == 7) {
    labels = {"Special", "Privileged"};
    for (int r = 1; r <= 5; ++r) labels.push_back("Rank-" + std::to_string(r));
  } else {
    for (std::size_t g = 1; g <= k; ++g) labels.push_back("Grade-" + std::to_string(g));
  }
  return labels;
}

/// Orders clusters by descending mean efficiency of their members and labels
/// them; k = 7 uses the bank's grade names.
inline Grading grade_clusters(const ClusterModel& model, const std::vector<double>& rho_per_point) {
  if (rho_per_point.size() != model.assignments.size())
    throw ClusteringError(ClusteringErrorKind::InvalidArgument, "rho count differs from point count");
  std::vector<double> sum(model.k, 0.0);
  std::vector<std::size_t> count(model.k, 0);
  for (std::size_t i = 0; i < rho_per_point.size(); ++i) {
    sum[model.assignments[i]] += rho_per_point[i];
    ++count[model.assignments[i]];
  }
  std::vector<double> eff(model.k, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < model.k; ++c)
    if (count[c]) eff[c] = sum[c] / static_cast<double>(count[c]);

  Grading g;
  g.order.resize(model.k);
  std::iota(g.order.begin(), g.order.end(), 0);
  // Ties resolved by the smallest member rho so the result is index-free.
  std::vector<double> min_member(model.k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rho_per_point.size(); ++i)
    min_member[model.assignments[i]] = std::min(min_member[model.assignments[i]], rho_per_point[i]);
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    if (eff[a] != eff[b]) return eff[a] > eff[b];
    return min_member[a] > min_member[b];
  });
  g.labels = grade_labels(model.k);
  g.grade_of_cluster.resize(model.k);
  for (std::size_t gi = 0; gi < model.k; ++gi) {
    g.center_efficiency.push_back(eff[g.order[gi]]);
    g.grade_of_cluster[g.order[gi]] = gi;
  }
  return g;
}

}  // namespace frontier_dyn
