#include "insideout/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "insideout/cluster.hpp"

namespace insideout {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// Linear-interpolated quantile of sorted values.
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> smoothed(const std::vector<double>& counts, double total) {
  const double bins = static_cast<double>(counts.size());
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = (counts[i] / total + kKlSmoothing) / (1.0 + bins * kKlSmoothing);
  }
  return p;
}

double discrete_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(0.0, kl);
}

}  // namespace

std::string detector_name(const DetectorModel& model) {
  return std::visit(overloaded{
                        [](const KnnModel&) { return std::string("knn"); },
                        [](const ZscoreModel&) { return std::string("zscore"); },
                        [](const MahalanobisModel&) { return std::string("mahalanobis"); },
                        [](const KlHistogramModel&) { return std::string("kl_histogram"); },
                    },
                    model);
}

KnnModel fit_knn(std::span<const double> column, std::size_t k_neighbors, RandomStream& rng) {
  require(!column.empty(), ErrorCode::EmptyColumn, "cannot fit a detector on an empty column");
  require(k_neighbors >= 1 && k_neighbors <= column.size(), ErrorCode::InvalidArgument,
          fmt::format("k_neighbors must be in [1, {}] (got {})", column.size(), k_neighbors));
  KnnModel model;
  model.k_neighbors = k_neighbors;
  model.train_values.assign(column.begin(), column.end());
  std::sort(model.train_values.begin(), model.train_values.end());

  const Matrix points = column_matrix(column);
  const Clustering clusters = xmeans(points, 1, default_k_max(column.size()), rng);
  const ClusterDiameter largest = largest_cluster_diameter(clusters, points);
  model.chi = largest.diameter;
  if (largest.degenerate || !(model.chi > 0.0)) {
    model.chi_fallback = true;
    const auto& v = model.train_values;
    model.chi = sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25);
    if (!(model.chi > 0.0)) model.chi = 1e-6 * (1.0 + std::abs(sorted_quantile(v, 0.5)));
  }
  return model;
}

double knn_score(const KnnModel& model, double x) {
  const auto& v = model.train_values;
  const std::size_t k = std::min(model.k_neighbors, v.size());
  auto right = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  std::size_t left = right;  // candidates are v[left - 1] and v[right]
  double total = 0.0;
  for (std::size_t taken = 0; taken < k; ++taken) {
    const bool has_left = left > 0;
    const bool has_right = right < v.size();
    if (has_left && (!has_right || x - v[left - 1] <= v[right] - x)) {
      total += x - v[--left];
    } else {
      total += v[right++] - x;
    }
  }
  return total / static_cast<double>(k);
}

ZscoreModel fit_zscore(std::span<const double> column, double threshold) {
  require(column.size() >= 2, ErrorCode::EmptyColumn, "z-score needs at least two values");
  const double n = static_cast<double>(column.size());
  const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : column) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / (n - 1.0));
  require(stddev > 0.0, ErrorCode::InvalidArgument, "z-score column has zero variance");
  require(threshold > 0.0, ErrorCode::InvalidArgument, "z-score threshold must be > 0");
  return {mean, stddev, threshold};
}

Eigen::MatrixXd MahalanobisModel::inverse_covariance() const {
  const auto n = cholesky_lower.rows();
  const Eigen::MatrixXd linv =
      cholesky_lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  return linv.transpose() * linv;
}

double mahalanobis_default_threshold(std::size_t dims, double coverage) {
  require(dims >= 1, ErrorCode::InvalidArgument, "dims must be >= 1");
  const boost::math::chi_squared dist(static_cast<double>(dims));
  return std::sqrt(boost::math::quantile(dist, coverage));
}

MahalanobisModel make_mahalanobis(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                                  double threshold) {
  require(covariance.rows() == covariance.cols() && covariance.rows() == mean.size(),
          ErrorCode::DimensionMismatch, "covariance shape does not match mean");
  require(covariance.isApprox(covariance.transpose(), 1e-12), ErrorCode::InvalidArgument,
          "covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  require(llt.info() == Eigen::Success, ErrorCode::InvalidArgument,
          "covariance is not positive definite");
  MahalanobisModel model;
  model.mean = std::move(mean);
  model.covariance = std::move(covariance);
  model.cholesky_lower = llt.matrixL();
  model.threshold = threshold > 0.0 ? threshold
                                    : mahalanobis_default_threshold(
                                          static_cast<std::size_t>(model.mean.size()));
  return model;
}

MahalanobisModel fit_mahalanobis(const Matrix& points, double threshold) {
  require(points.rows() > points.cols(), ErrorCode::InsufficientData,
          "Mahalanobis fit needs more rows than columns");
  const auto d = static_cast<Eigen::Index>(points.cols());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      x(points.data().data(), static_cast<Eigen::Index>(points.rows()), d);
  Eigen::VectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(points.rows() - 1);
  cov = 0.5 * (cov + cov.transpose());
  return make_mahalanobis(std::move(mean), std::move(cov), threshold);
}

double mahalanobis_distance(const MahalanobisModel& model, std::span<const double> x) {
  require(static_cast<Eigen::Index>(x.size()) == model.mean.size(), ErrorCode::DimensionMismatch,
          fmt::format("sample has {} coordinates, model expects {}", x.size(), model.mean.size()));
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd diff = v - model.mean;
  const Eigen::VectorXd solved = model.cholesky_lower.triangularView<Eigen::Lower>().solve(diff);
  return solved.norm();
}

std::size_t default_kl_bins(std::size_t batch_size) noexcept {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(batch_size))));
  return std::clamp<std::size_t>(root, 1, 200);
}

double kl_divergence(std::span<const double> train, std::span<const double> batch,
                     std::size_t bins) {
  require(!train.empty(), ErrorCode::EmptyColumn, "KL needs a non-empty training column");
  require(batch.size() >= 10, ErrorCode::InsufficientData, "KL batch needs at least 10 values");
  if (bins == 0) bins = default_kl_bins(batch.size());
  const auto [tmin, tmax] = std::minmax_element(train.begin(), train.end());
  const auto [bmin, bmax] = std::minmax_element(batch.begin(), batch.end());
  const double lo = std::min(*tmin, *bmin);
  const double hi = std::max(*tmax, *bmax);
  if (!(hi > lo)) return 0.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  auto histogram = [&](std::span<const double> values) {
    std::vector<double> counts(bins, 0.0);
    for (double v : values) {
      auto b = static_cast<std::size_t>((v - lo) / width);
      counts[std::min(b, bins - 1)] += 1.0;
    }
    return smoothed(counts, static_cast<double>(values.size()));
  };
  return discrete_kl(histogram(batch), histogram(train));
}

namespace {

std::vector<double> binned_with_tails(const std::vector<double>& edges,
                                      std::span<const double> values) {
  const std::size_t bins = edges.size() - 1;
  std::vector<double> counts(bins + 2, 0.0);
  const double lo = edges.front();
  const double hi = edges.back();
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (v < lo) {
      counts.front() += 1.0;
    } else if (v > hi) {
      counts.back() += 1.0;
    } else {
      const auto b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
      counts[1 + std::min(b, bins - 1)] += 1.0;
    }
  }
  return smoothed(counts, static_cast<double>(values.size()));
}

}  // namespace

KlHistogramModel fit_kl_histogram(std::span<const double> train, std::size_t bins,
                                  double threshold) {
  require(!train.empty(), ErrorCode::EmptyColumn, "KL needs a non-empty training column");
  if (bins == 0) bins = default_kl_bins(train.size());
  const auto [tmin, tmax] = std::minmax_element(train.begin(), train.end());
  KlHistogramModel model;
  model.threshold = threshold;
  model.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    model.bin_edges[i] =
        *tmin + (*tmax - *tmin) * static_cast<double>(i) / static_cast<double>(bins);
  }
  model.bin_edges.back() = *tmax;
  model.train_probs = binned_with_tails(model.bin_edges, train);
  return model;
}

double kl_divergence(const KlHistogramModel& model, std::span<const double> batch) {
  require(batch.size() >= 10, ErrorCode::InsufficientData, "KL batch needs at least 10 values");
  return discrete_kl(binned_with_tails(model.bin_edges, batch), model.train_probs);
}

bool is_ood(const KnnModel& model, double x) { return knn_score(model, x) > model.chi; }

bool is_ood(const ZscoreModel& model, double x) {
  return std::abs(x - model.mean) / model.stddev > model.threshold;
}

bool is_ood(const MahalanobisModel& model, std::span<const double> x) {
  return mahalanobis_distance(model, x) > model.threshold;
}

bool is_ood_batch(const KlHistogramModel& model, std::span<const double> batch) {
  return kl_divergence(model, batch) > model.threshold;
}

bool is_ood(const DetectorModel& model, double x) {
  return std::visit(
      overloaded{
          [x](const KnnModel& m) { return is_ood(m, x); },
          [x](const ZscoreModel& m) { return is_ood(m, x); },
          [x](const MahalanobisModel& m) { return is_ood(m, std::span<const double>(&x, 1)); },
          [](const KlHistogramModel&) -> bool {
            fail(ErrorCode::InvalidArgument, "KL histogram detector only judges batches");
          },
      },
      model);
}

double detector_score(const DetectorModel& model, double x) {
  return std::visit(
      overloaded{
          [x](const KnnModel& m) { return knn_score(m, x); },
          [x](const ZscoreModel& m) { return std::abs(x - m.mean) / m.stddev; },
          [x](const MahalanobisModel& m) {
            return mahalanobis_distance(m, std::span<const double>(&x, 1));
          },
          [](const KlHistogramModel&) -> double {
            fail(ErrorCode::InvalidArgument, "KL histogram detector only judges batches");
          },
      },
      model);
}

bool random_feature_zscore_check(std::span<const ZscoreModel> features,
                                 std::span<const double> x, double threshold,
                                 std::size_t iterations, RandomStream& rng) {
  require(!features.empty(), ErrorCode::EmptyInput, "no features to check");
  require(features.size() == x.size(), ErrorCode::DimensionMismatch,
          fmt::format("sample has {} coordinates for {} features", x.size(), features.size()));
  require(iterations >= 1, ErrorCode::InvalidArgument, "iterations must be >= 1");
  bool flagged = false;
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto j = rng.uniform_index(features.size());
    const auto& m = features[j];
    flagged = flagged || std::abs(x[j] - m.mean) / m.stddev > threshold;
  }
  return flagged;
}

bool random_feature_zscore_check(const Matrix& columns, std::span<const double> x,
                                 double threshold, std::size_t iterations, RandomStream& rng) {
  std::vector<ZscoreModel> models;
  models.reserve(columns.cols());
  for (std::size_t c = 0; c < columns.cols(); ++c) {
    models.push_back(fit_zscore(columns.column(c)));
  }
  return random_feature_zscore_check(models, x, threshold, iterations, rng);
}

}  // namespace insideout
