#include "insideout/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace insideout {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t nearest_center(std::span<const double> x, const Matrix& centers) noexcept {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(x, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void assign_all(const Matrix& points, const Matrix& centers, std::vector<std::size_t>& out) {
  out.resize(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) out[r] = nearest_center(points.row(r), centers);
}

/// Moves the farthest point of a multi-member cluster into each empty one.
void reseed_empty(const Matrix& points, const Matrix& centers,
                  std::vector<std::size_t>& assignment) {
  std::vector<std::size_t> sizes(centers.rows(), 0);
  for (auto a : assignment) ++sizes[a];
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.rows();
    double far_d = 0.0;
    for (std::size_t r = 0; r < points.rows(); ++r) {
      if (sizes[assignment[r]] < 2) continue;
      const double d = squared_distance(points.row(r), centers.row(assignment[r]));
      if (d > far_d) {
        far_d = d;
        far = r;
      }
    }
    if (far == points.rows()) return;  // every point sits on its center
    --sizes[assignment[far]];
    assignment[far] = c;
    sizes[c] = 1;
  }
}

Matrix cluster_means(const Matrix& points, const Matrix& previous,
                     const std::vector<std::size_t>& assignment) {
  Matrix sums(previous.rows(), previous.cols(), 0.0);
  std::vector<std::size_t> counts(previous.rows(), 0);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    const auto c = assignment[r];
    ++counts[c];
    const auto x = points.row(r);
    auto s = sums.row(c);
    for (std::size_t j = 0; j < x.size(); ++j) s[j] += x[j];
  }
  for (std::size_t c = 0; c < sums.rows(); ++c) {
    auto s = sums.row(c);
    if (counts[c] == 0) {
      const auto p = previous.row(c);
      std::copy(p.begin(), p.end(), s.begin());
      continue;
    }
    for (auto& v : s) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

Matrix kmeanspp_seeds(const Matrix& points, std::size_t k, RandomStream& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  auto place = [&](std::size_t c, std::size_t r) {
    const auto src = points.row(r);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
  };
  place(0, rng.uniform_index(n));
  std::vector<double> d2(n);
  for (std::size_t r = 0; r < n; ++r) d2[r] = squared_distance(points.row(r), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = n - 1;
    if (total <= 0.0) {
      chosen = rng.uniform_index(n);
    } else {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += d2[r];
        if (acc > target && d2[r] > 0.0) {
          chosen = r;
          break;
        }
      }
      // Rounding can run past the last positive weight.
      while (d2[chosen] <= 0.0 && chosen > 0) --chosen;
    }
    place(c, chosen);
    for (std::size_t r = 0; r < n; ++r) {
      d2[r] = std::min(d2[r], squared_distance(points.row(r), centers.row(c)));
    }
  }
  return centers;
}

bool has_two_distinct(const Matrix& points) {
  for (std::size_t r = 1; r < points.rows(); ++r) {
    if (squared_distance(points.row(r), points.row(0)) > 0.0) return true;
  }
  return false;
}

}  // namespace

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(k(), 0);
  for (auto a : assignment) ++sizes[a];
  return sizes;
}

double kmeans_objective(const Matrix& points, const Matrix& centers,
                        const std::vector<std::size_t>& assignment) {
  double total = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    total += squared_distance(points.row(r), centers.row(assignment[r]));
  }
  return total;
}

Clustering kmeans_from(const Matrix& points, Matrix initial_centers,
                       const KMeansOptions& options) {
  require(points.rows() >= 1, ErrorCode::EmptyInput, "kmeans needs at least one point");
  require(initial_centers.rows() >= 1 && initial_centers.rows() <= points.rows(),
          ErrorCode::InvalidArgument,
          fmt::format("kmeans needs 1 <= k <= points (k = {}, points = {})",
                      initial_centers.rows(), points.rows()));
  require(initial_centers.cols() == points.cols(), ErrorCode::DimensionMismatch,
          "center dimension does not match points");
  Clustering out;
  out.centers = std::move(initial_centers);
  assign_all(points, out.centers, out.assignment);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    reseed_empty(points, out.centers, out.assignment);
    Matrix updated = cluster_means(points, out.centers, out.assignment);
    double shift = 0.0;
    for (std::size_t c = 0; c < updated.rows(); ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(updated.row(c), out.centers.row(c))));
    }
    out.centers = std::move(updated);
    out.objective_history.push_back(kmeans_objective(points, out.centers, out.assignment));
    assign_all(points, out.centers, out.assignment);
    if (shift < options.tol) break;
  }
  return out;
}

Clustering kmeans(const Matrix& points, std::size_t k, RandomStream& rng,
                  const KMeansOptions& options) {
  require(points.rows() >= 1, ErrorCode::EmptyInput, "kmeans needs at least one point");
  require(k >= 1 && k <= points.rows(), ErrorCode::InvalidArgument,
          fmt::format("kmeans needs 1 <= k <= points (k = {}, points = {})", k, points.rows()));
  return kmeans_from(points, kmeanspp_seeds(points, k, rng), options);
}

double bic_score(const Matrix& points, const Matrix& centers,
                 const std::vector<std::size_t>& assignment) {
  const auto R = static_cast<double>(points.rows());
  const auto K = static_cast<double>(centers.rows());
  const auto M = static_cast<double>(points.cols());
  if (points.rows() <= centers.rows()) return -std::numeric_limits<double>::infinity();

  constexpr double kVarianceFloor = 1e-300;
  const double sse = kmeans_objective(points, centers, assignment);
  const double variance = std::max(sse / (M * (R - K)), kVarianceFloor);

  std::vector<std::size_t> sizes(centers.rows(), 0);
  for (auto a : assignment) ++sizes[a];
  double loglik = -0.5 * R * M * std::log(2.0 * std::numbers::pi * variance) - 0.5 * M * (R - K);
  for (auto s : sizes) {
    if (s > 0) loglik += static_cast<double>(s) * std::log(static_cast<double>(s) / R);
  }
  const double params = (K - 1.0) + K * M + 1.0;
  return loglik - 0.5 * params * std::log(R);
}

std::size_t default_k_max(std::size_t points) noexcept {
  const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(points))));
  return std::max<std::size_t>(1, std::min<std::size_t>(20, root));
}

Clustering xmeans(const Matrix& points, std::size_t k_min, std::size_t k_max, RandomStream& rng,
                  const KMeansOptions& options) {
  require(points.rows() >= 1, ErrorCode::EmptyInput, "xmeans needs at least one point");
  require(k_min >= 1 && k_min <= k_max && k_max <= points.rows(), ErrorCode::InvalidArgument,
          fmt::format("xmeans needs 1 <= k_min <= k_max <= points (got {}, {}, {})", k_min, k_max,
                      points.rows()));

  Clustering current = kmeans(points, k_min, rng, options);
  while (current.k() < k_max) {
    struct Split {
      std::size_t cluster;
      double gain;
      Matrix children;
    };
    std::vector<Split> splits;
    std::vector<std::vector<std::size_t>> members(current.k());
    for (std::size_t r = 0; r < points.rows(); ++r) members[current.assignment[r]].push_back(r);

    for (std::size_t c = 0; c < current.k(); ++c) {
      if (members[c].size() < 3) continue;
      const Matrix local = points.select_rows(members[c]);
      if (!has_two_distinct(local)) continue;
      const Clustering two = kmeans(local, 2, rng, options);
      const auto sizes = two.cluster_sizes();
      if (sizes[0] == 0 || sizes[1] == 0) continue;

      Matrix parent(1, points.cols(), 0.0);
      for (std::size_t r = 0; r < local.rows(); ++r) {
        for (std::size_t d = 0; d < local.cols(); ++d) parent(0, d) += local(r, d);
      }
      for (std::size_t d = 0; d < local.cols(); ++d) {
        parent(0, d) /= static_cast<double>(local.rows());
      }
      const std::vector<std::size_t> single(local.rows(), 0);
      const double gain = bic_score(local, two.centers, two.assignment) -
                          bic_score(local, parent, single);
      if (gain > 0.0) splits.push_back({c, gain, two.centers});
    }
    if (splits.empty()) break;

    std::stable_sort(splits.begin(), splits.end(),
                     [](const Split& a, const Split& b) { return a.gain > b.gain; });
    splits.resize(std::min(splits.size(), k_max - current.k()));
    std::vector<const Matrix*> accepted(current.k(), nullptr);
    for (const auto& s : splits) accepted[s.cluster] = &s.children;

    Matrix next(current.k() + splits.size(), points.cols());
    std::size_t row = 0;
    auto push = [&](std::span<const double> center) {
      std::copy(center.begin(), center.end(), next.row(row++).begin());
    };
    for (std::size_t c = 0; c < current.k(); ++c) {
      if (accepted[c] != nullptr) {
        push(accepted[c]->row(0));
        push(accepted[c]->row(1));
      } else {
        push(current.centers.row(c));
      }
    }
    current = kmeans_from(points, std::move(next), options);
  }
  current.objective_history.clear();
  return current;
}

ClusterDiameter largest_cluster_diameter(const Clustering& clustering, const Matrix& points,
                                         std::size_t exact_limit) {
  require(clustering.assignment.size() == points.rows(), ErrorCode::DimensionMismatch,
          "clustering does not match points");
  require(clustering.k() >= 1, ErrorCode::EmptyInput, "clustering has no clusters");
  const auto sizes = clustering.cluster_sizes();
  const auto largest =
      static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  ClusterDiameter out;
  out.cluster = largest;
  out.members = sizes[largest];
  if (out.members <= 1) {
    out.degenerate = true;
    return out;
  }
  std::vector<std::size_t> members;
  members.reserve(out.members);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (clustering.assignment[r] == largest) members.push_back(r);
  }
  if (points.cols() > 1 && members.size() <= exact_limit) {
    double best = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        best = std::max(best, squared_distance(points.row(members[i]), points.row(members[j])));
      }
    }
    out.diameter = std::sqrt(best);
  } else {
    double s = 0.0;
    for (std::size_t d = 0; d < points.cols(); ++d) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (auto r : members) {
        lo = std::min(lo, points(r, d));
        hi = std::max(hi, points(r, d));
      }
      s += (hi - lo) * (hi - lo);
    }
    out.diameter = std::sqrt(s);
  }
  return out;
}

}  // namespace insideout
