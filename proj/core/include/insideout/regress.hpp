#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "insideout/datagen.hpp"
#include "insideout/matrix.hpp"
#include "insideout/random.hpp"

namespace insideout {

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

/// k-NN regressor on standardized features (training mean / stddev).
struct KnnRegressor {
  Matrix train;  // standardized rows
  std::vector<double> targets;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::size_t k = 5;
};

struct TreeNode {
  /// Leaf when feature == npos.
  std::size_t feature = static_cast<std::size_t>(-1);
  double threshold = 0.0;
  double value = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;

  [[nodiscard]] bool leaf() const noexcept { return feature == static_cast<std::size_t>(-1); }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // root at 0
  [[nodiscard]] double predict(std::span<const double> x) const;
  [[nodiscard]] std::size_t depth() const;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  std::size_t max_depth = 8;
};

struct ForestOptions {
  std::size_t trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 2;
  /// Features tried per split; 0 selects max(1, ceil(n / 3)).
  std::size_t features_per_split = 0;
};

struct SelectionEntry {
  std::string variant;
  std::string hyperparameters;
  double holdout_rmse = 0.0;
};

struct RegressionModel {
  std::variant<LinearModel, KnnRegressor, ForestModel> model;
  std::vector<SelectionEntry> selection_report;
  std::size_t n_features = 0;

  [[nodiscard]] std::string variant_name() const;
};

struct FitOptions {
  double holdout_fraction = 0.2;
  double ridge_lambda = 1e-8;
  std::vector<std::size_t> knn_candidates{3, 5, 9};
  ForestOptions forest{};
};

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

HoldoutSplit make_holdout_split(std::size_t rows, double holdout_fraction, RandomStream& rng);

/// Ridge-regularized least squares; the intercept is not penalized.
LinearModel fit_linear(const Matrix& x, std::span<const double> y, double lambda = 1e-8);
KnnRegressor fit_knn_regressor(const Matrix& x, std::span<const double> y, std::size_t k);
ForestModel fit_forest(const Matrix& x, std::span<const double> y, RandomStream& rng,
                       const ForestOptions& options = {});

double predict(const LinearModel& m, std::span<const double> x);
double predict(const KnnRegressor& m, std::span<const double> x);
double predict(const ForestModel& m, std::span<const double> x);
double predict(const RegressionModel& m, std::span<const double> x);
std::vector<double> predict_rows(const RegressionModel& m, const Matrix& x);

/// 80/20 split, fits the linear, k-NN and forest variants on the training
/// rows and returns the one with the lowest holdout RMSE (ties keep the
/// earlier variant). Needs at least 20 rows.
RegressionModel fit_best(const Dataset& ds, RandomStream& rng, const FitOptions& options = {});

/// fit_best with an explicit split. Holdout targets are only read when
/// scoring candidates.
RegressionModel fit_best_on_split(const Dataset& ds, const HoldoutSplit& split,
                                  RandomStream& rng, const FitOptions& options = {});

double rmse(std::span<const double> predictions, std::span<const double> truth);
/// config / baseline; throws ZeroBaseline when baseline <= 0.
double normalized_rmse(double config_rmse, double baseline_rmse);

}  // namespace insideout
