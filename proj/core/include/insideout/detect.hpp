#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "insideout/matrix.hpp"
#include "insideout/random.hpp"

namespace insideout {

/// Per-feature KNN detector: a value is OOD when the mean distance to its
/// k nearest training values exceeds chi.
struct KnnModel {
  std::vector<double> train_values;  // sorted ascending
  std::size_t k_neighbors = 5;
  double chi = 0.0;
  /// chi came from a fallback rule (singleton or constant column).
  bool chi_fallback = false;

  [[nodiscard]] double min() const { return train_values.front(); }
  [[nodiscard]] double max() const { return train_values.back(); }
  bool operator==(const KnnModel&) const = default;
};

struct ZscoreModel {
  double mean = 0.0;
  double stddev = 1.0;
  double threshold = 3.0;
  bool operator==(const ZscoreModel&) const = default;
};

/// Joint-space Mahalanobis detector. The covariance is kept together with
/// its Cholesky factor; distances solve against the factor.
struct MahalanobisModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd cholesky_lower;
  double threshold = 0.0;

  [[nodiscard]] Eigen::MatrixXd inverse_covariance() const;
  bool operator==(const MahalanobisModel& other) const {
    return mean == other.mean && covariance == other.covariance &&
           threshold == other.threshold;
  }
};

/// Reference histogram for batch KL checks. The two outermost bins collect
/// values below / above the training range.
struct KlHistogramModel {
  std::vector<double> bin_edges;    // bins + 1 interior edges
  std::vector<double> train_probs;  // bins + 2 entries, tails first and last
  double threshold = 0.1;
  bool operator==(const KlHistogramModel&) const = default;
};

using DetectorModel = std::variant<KnnModel, ZscoreModel, MahalanobisModel, KlHistogramModel>;

std::string detector_name(const DetectorModel& model);

inline constexpr std::size_t kDefaultKNeighbors = 5;
inline constexpr double kDefaultZscoreThreshold = 3.0;
inline constexpr double kDefaultKlThreshold = 0.1;
inline constexpr double kKlSmoothing = 1e-9;

/// chi = diameter of the most-populated X-means cluster of the column.
/// Fallbacks: interquartile range, then 1e-6 * (1 + |median|).
KnnModel fit_knn(std::span<const double> column, std::size_t k_neighbors, RandomStream& rng);

/// Mean absolute distance to the k_neighbors nearest training values.
double knn_score(const KnnModel& model, double x);

ZscoreModel fit_zscore(std::span<const double> column,
                       double threshold = kDefaultZscoreThreshold);

/// sqrt of the chi-square quantile at `coverage` for `dims` degrees of freedom.
double mahalanobis_default_threshold(std::size_t dims, double coverage = 0.997);

/// Sample mean and covariance of the rows; threshold defaults to
/// mahalanobis_default_threshold(cols). Throws InvalidArgument when the
/// covariance is not positive definite.
MahalanobisModel fit_mahalanobis(const Matrix& points, double threshold = -1.0);
MahalanobisModel make_mahalanobis(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                                  double threshold);
double mahalanobis_distance(const MahalanobisModel& model, std::span<const double> x);

/// bins == 0 picks ceil(sqrt(size)) capped at 200.
KlHistogramModel fit_kl_histogram(std::span<const double> train, std::size_t bins = 0,
                                  double threshold = kDefaultKlThreshold);
/// KL(batch || reference) against the model's bins.
double kl_divergence(const KlHistogramModel& model, std::span<const double> batch);
/// KL(batch || train) over `bins` equal-width bins spanning both ranges,
/// smoothed by kKlSmoothing. bins == 0 picks ceil(sqrt(batch)) capped at 200.
double kl_divergence(std::span<const double> train, std::span<const double> batch,
                     std::size_t bins = 0);
std::size_t default_kl_bins(std::size_t batch_size) noexcept;

bool is_ood(const KnnModel& model, double x);
bool is_ood(const ZscoreModel& model, double x);
bool is_ood(const MahalanobisModel& model, std::span<const double> x);
/// Scalar check for the per-feature variants. Mahalanobis and KL throw
/// InvalidArgument.
bool is_ood(const DetectorModel& model, double x);
bool is_ood_batch(const KlHistogramModel& model, std::span<const double> batch);

/// Raw score behind is_ood for the per-feature variants (knn score or |z|).
double detector_score(const DetectorModel& model, double x);

/// True when any of `iterations` uniformly chosen features has
/// |z| > threshold.
bool random_feature_zscore_check(std::span<const ZscoreModel> features,
                                 std::span<const double> x, double threshold,
                                 std::size_t iterations, RandomStream& rng);
bool random_feature_zscore_check(const Matrix& columns, std::span<const double> x,
                                 double threshold, std::size_t iterations, RandomStream& rng);

}  // namespace insideout
