#pragma once

#include <cstddef>
#include <vector>

#include "insideout/matrix.hpp"
#include "insideout/random.hpp"

namespace insideout {

struct Clustering {
  Matrix centers;  // k x d
  std::vector<std::size_t> assignment;
  /// Sum of squared distances to assigned centers after each Lloyd
  /// iteration (kmeans only).
  std::vector<double> objective_history;

  [[nodiscard]] std::size_t k() const noexcept { return centers.rows(); }
  [[nodiscard]] std::vector<std::size_t> cluster_sizes() const;
};

struct KMeansOptions {
  std::size_t max_iter = 100;
  double tol = 1e-6;
};

/// Lloyd's algorithm from k-means++ seeds. Converges when the largest
/// center shift drops below tol. A cluster that empties is re-seeded with
/// the point farthest from its current center.
Clustering kmeans(const Matrix& points, std::size_t k, RandomStream& rng,
                  const KMeansOptions& options = {});

/// Lloyd's algorithm from the given initial centers.
Clustering kmeans_from(const Matrix& points, Matrix initial_centers,
                       const KMeansOptions& options = {});

double kmeans_objective(const Matrix& points, const Matrix& centers,
                        const std::vector<std::size_t>& assignment);

/// Spherical-Gaussian BIC of a clustering (pooled per-dimension variance).
double bic_score(const Matrix& points, const Matrix& centers,
                 const std::vector<std::size_t>& assignment);

/// Default upper bound on k: min(20, floor(sqrt(points))), at least 1.
std::size_t default_k_max(std::size_t points) noexcept;

/// X-means: start at k_min, try a local 2-means split per cluster and keep it
/// when its BIC beats the unsplit cluster's; re-run Lloyd on the enlarged
/// center set; stop when nothing splits or k_max is reached.
Clustering xmeans(const Matrix& points, std::size_t k_min, std::size_t k_max, RandomStream& rng,
                  const KMeansOptions& options = {});

/// Diameter of the most-populated cluster.
struct ClusterDiameter {
  double diameter = 0.0;
  std::size_t cluster = 0;
  std::size_t members = 0;
  /// True when the largest cluster has a single member (diameter 0).
  bool degenerate = false;
};

/// Exact maximum pairwise distance for up to `exact_limit` members; beyond
/// that the diagonal of the members' bounding box (an upper bound, exact in
/// one dimension).
ClusterDiameter largest_cluster_diameter(const Clustering& clustering, const Matrix& points,
                                         std::size_t exact_limit = 2000);

}  // namespace insideout
