#include "insideout/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace insideout {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::size_t kLeaf = static_cast<std::size_t>(-1);

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, RandomStream& rng,
              const ForestOptions& options, std::size_t features_per_split)
      : x_(x), y_(y), rng_(rng), options_(options), mtry_(features_per_split) {
    feature_order_.resize(x.cols());
    std::iota(feature_order_.begin(), feature_order_.end(), 0);
  }

  RegressionTree build(std::vector<std::size_t> rows) {
    RegressionTree tree;
    grow(tree, rows, 1);
    return tree;
  }

 private:
  struct BestSplit {
    std::size_t feature = kLeaf;
    double threshold = 0.0;
    double sse = 0.0;
  };

  std::size_t grow(RegressionTree& tree, std::vector<std::size_t>& rows, std::size_t depth) {
    const std::size_t index = tree.nodes.size();
    tree.nodes.emplace_back();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (auto r : rows) {
      sum += y_[r];
      sum_sq += y_[r] * y_[r];
    }
    const double m = static_cast<double>(rows.size());
    tree.nodes[index].value = sum / m;
    const double parent_sse = sum_sq - sum * sum / m;
    if (depth >= options_.max_depth || rows.size() < 2 * options_.min_leaf || !(parent_sse > 0.0)) {
      return index;
    }

    const BestSplit best = find_split(rows, parent_sse);
    if (best.feature == kLeaf) return index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[index].feature = best.feature;
    tree.nodes[index].threshold = best.threshold;
    const std::size_t l = grow(tree, left, depth + 1);
    const std::size_t r = grow(tree, right, depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }

  BestSplit find_split(const std::vector<std::size_t>& rows, double parent_sse) {
    // Partial Fisher-Yates picks mtry distinct features.
    for (std::size_t i = 0; i < mtry_; ++i) {
      const auto j = i + rng_.uniform_index(feature_order_.size() - i);
      std::swap(feature_order_[i], feature_order_[j]);
    }
    BestSplit best;
    best.sse = parent_sse;
    std::vector<std::size_t> order(rows);
    const double total = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < mtry_; ++f) {
      const std::size_t feature = feature_order_[f];
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, feature);
        const double vb = x_(b, feature);
        return va < vb || (va == vb && a < b);
      });
      double left_sum = 0.0;
      double left_sq = 0.0;
      double right_sum = 0.0;
      double right_sq = 0.0;
      for (auto r : order) {
        right_sum += y_[r];
        right_sq += y_[r] * y_[r];
      }
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double v = y_[order[i]];
        left_sum += v;
        left_sq += v * v;
        right_sum -= v;
        right_sq -= v * v;
        const std::size_t nl = i + 1;
        const std::size_t nr = order.size() - nl;
        if (nl < options_.min_leaf || nr < options_.min_leaf) continue;
        const double here = x_(order[i], feature);
        const double next = x_(order[i + 1], feature);
        if (!(here < next)) continue;
        const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                           (right_sq - right_sum * right_sum / static_cast<double>(nr));
        if (sse < best.sse - 1e-12 * std::abs(best.sse)) {
          best.sse = sse;
          best.feature = feature;
          best.threshold = 0.5 * (here + next);
          // Midpoint can round onto `next` for adjacent doubles.
          if (!(best.threshold < next)) best.threshold = here;
        }
      }
    }
    (void)total;
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  RandomStream& rng_;
  const ForestOptions& options_;
  std::size_t mtry_;
  std::vector<std::size_t> feature_order_;
};

SelectionEntry score(const std::string& variant, const std::string& hyper,
                     const std::vector<double>& predictions, const std::vector<double>& truth) {
  return {variant, hyper, rmse(predictions, truth)};
}

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 1);
  std::size_t deepest = nodes.empty() ? 0 : 1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].leaf()) continue;
    level[nodes[i].left] = level[i] + 1;
    level[nodes[i].right] = level[i] + 1;
    deepest = std::max(deepest, level[i] + 1);
  }
  return deepest;
}

std::string RegressionModel::variant_name() const {
  return std::visit(overloaded{
                        [](const LinearModel&) { return std::string("linear"); },
                        [](const KnnRegressor&) { return std::string("knn"); },
                        [](const ForestModel&) { return std::string("forest"); },
                    },
                    model);
}

HoldoutSplit make_holdout_split(std::size_t rows, double holdout_fraction, RandomStream& rng) {
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, ErrorCode::InvalidArgument,
          "holdout_fraction must be in (0, 1)");
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  const auto holdout = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::round(holdout_fraction * static_cast<double>(rows))));
  HoldoutSplit split;
  split.holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(holdout), order.end());
  return split;
}

LinearModel fit_linear(const Matrix& x, std::span<const double> y, double lambda) {
  require(x.rows() == y.size() && x.rows() >= 1, ErrorCode::LengthMismatch,
          "linear fit needs matching non-empty rows and targets");
  const auto rows = static_cast<Eigen::Index>(x.rows());
  const auto cols = static_cast<Eigen::Index>(x.cols());
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      design(x.data().data(), rows, cols);
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), rows);
  const Eigen::RowVectorXd x_mean = design.colwise().mean();
  const double y_mean = target.mean();
  const Eigen::MatrixXd centered = design.rowwise() - x_mean;
  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = centered.transpose() * (target.array() - y_mean).matrix();
  const Eigen::VectorXd w = gram.ldlt().solve(rhs);
  LinearModel model;
  model.weights.assign(w.data(), w.data() + w.size());
  model.intercept = y_mean - x_mean.dot(w);
  return model;
}

KnnRegressor fit_knn_regressor(const Matrix& x, std::span<const double> y, std::size_t k) {
  require(x.rows() == y.size() && x.rows() >= 1, ErrorCode::LengthMismatch,
          "knn fit needs matching non-empty rows and targets");
  require(k >= 1, ErrorCode::InvalidArgument, "knn regressor needs k >= 1");
  KnnRegressor model;
  model.k = std::min(k, x.rows());
  model.targets.assign(y.begin(), y.end());
  model.feature_mean.assign(x.cols(), 0.0);
  model.feature_scale.assign(x.cols(), 1.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, c);
    const double mean = s / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(ss / n);
    model.feature_mean[c] = mean;
    model.feature_scale[c] = sd > 0.0 ? sd : 1.0;
  }
  model.train = Matrix(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      model.train(r, c) = (x(r, c) - model.feature_mean[c]) / model.feature_scale[c];
    }
  }
  return model;
}

ForestModel fit_forest(const Matrix& x, std::span<const double> y, RandomStream& rng,
                       const ForestOptions& options) {
  require(x.rows() == y.size() && x.rows() >= 1, ErrorCode::LengthMismatch,
          "forest fit needs matching non-empty rows and targets");
  require(options.trees >= 1 && options.max_depth >= 1 && options.min_leaf >= 1,
          ErrorCode::InvalidArgument, "forest options must be positive");
  const std::size_t mtry =
      options.features_per_split > 0
          ? std::min(options.features_per_split, x.cols())
          : std::max<std::size_t>(1, (x.cols() + 2) / 3);
  ForestModel forest;
  forest.max_depth = options.max_depth;
  forest.trees.reserve(options.trees);
  const RandomStream base = rng.child(rng.next_u64());
  for (std::size_t t = 0; t < options.trees; ++t) {
    RandomStream tree_rng = base.child(t);
    std::vector<std::size_t> rows(x.rows());
    for (auto& r : rows) r = tree_rng.uniform_index(x.rows());
    TreeBuilder builder(x, y, tree_rng, options, mtry);
    forest.trees.push_back(builder.build(std::move(rows)));
  }
  return forest;
}

double predict(const LinearModel& m, std::span<const double> x) {
  require(x.size() == m.weights.size(), ErrorCode::DimensionMismatch,
          fmt::format("sample has {} coordinates, model expects {}", x.size(), m.weights.size()));
  double v = m.intercept;
  for (std::size_t i = 0; i < x.size(); ++i) v += m.weights[i] * x[i];
  return v;
}

double predict(const KnnRegressor& m, std::span<const double> x) {
  require(x.size() == m.train.cols(), ErrorCode::DimensionMismatch,
          fmt::format("sample has {} coordinates, model expects {}", x.size(), m.train.cols()));
  std::vector<double> z(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) z[c] = (x[c] - m.feature_mean[c]) / m.feature_scale[c];
  std::vector<std::pair<double, std::size_t>> d(m.train.rows());
  for (std::size_t r = 0; r < m.train.rows(); ++r) {
    double s = 0.0;
    const auto row = m.train.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) s += (row[c] - z[c]) * (row[c] - z[c]);
    d[r] = {s, r};
  }
  const auto k = static_cast<std::ptrdiff_t>(m.k);
  std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
  std::sort(d.begin(), d.begin() + k);
  double total = 0.0;
  for (std::ptrdiff_t i = 0; i < k; ++i) total += m.targets[d[static_cast<std::size_t>(i)].second];
  return total / static_cast<double>(k);
}

double predict(const ForestModel& m, std::span<const double> x) {
  double total = 0.0;
  for (const auto& t : m.trees) total += t.predict(x);
  return total / static_cast<double>(m.trees.size());
}

double predict(const RegressionModel& m, std::span<const double> x) {
  require(x.size() == m.n_features, ErrorCode::DimensionMismatch,
          fmt::format("sample has {} coordinates, model expects {}", x.size(), m.n_features));
  return std::visit([&](const auto& variant) { return predict(variant, x); }, m.model);
}

std::vector<double> predict_rows(const RegressionModel& m, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(m, x.row(r));
  return out;
}

RegressionModel fit_best_on_split(const Dataset& ds, const HoldoutSplit& split,
                                  RandomStream& rng, const FitOptions& options) {
  require(!split.train.empty() && !split.holdout.empty(), ErrorCode::InsufficientData,
          "split needs training and holdout rows");
  const Matrix train_x = ds.features.select_rows(split.train);
  const Matrix hold_x = ds.features.select_rows(split.holdout);
  std::vector<double> train_y(split.train.size());
  std::vector<double> hold_y(split.holdout.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) train_y[i] = ds.target[split.train[i]];
  for (std::size_t i = 0; i < split.holdout.size(); ++i) hold_y[i] = ds.target[split.holdout[i]];

  auto holdout_predictions = [&](const auto& model) {
    std::vector<double> p(hold_x.rows());
    for (std::size_t r = 0; r < hold_x.rows(); ++r) p[r] = predict(model, hold_x.row(r));
    return p;
  };

  RegressionModel best;
  best.n_features = ds.n();
  double best_rmse = std::numeric_limits<double>::infinity();
  auto consider = [&](auto model, SelectionEntry entry) {
    best.selection_report.push_back(entry);
    if (entry.holdout_rmse < best_rmse) {
      best_rmse = entry.holdout_rmse;
      best.model = std::move(model);
    }
  };

  LinearModel linear = fit_linear(train_x, train_y, options.ridge_lambda);
  const auto linear_entry = score("linear", fmt::format("lambda={}", options.ridge_lambda),
                                  holdout_predictions(linear), hold_y);
  consider(std::move(linear), linear_entry);

  std::optional<KnnRegressor> best_knn;
  SelectionEntry knn_entry{"knn", "", std::numeric_limits<double>::infinity()};
  for (std::size_t k : options.knn_candidates) {
    KnnRegressor knn = fit_knn_regressor(train_x, train_y, k);
    const auto entry = score("knn", fmt::format("k={}", knn.k), holdout_predictions(knn), hold_y);
    if (entry.holdout_rmse < knn_entry.holdout_rmse) {
      knn_entry = entry;
      best_knn = std::move(knn);
    }
  }
  if (best_knn) consider(std::move(*best_knn), knn_entry);

  ForestModel forest = fit_forest(train_x, train_y, rng, options.forest);
  const auto forest_entry =
      score("forest",
            fmt::format("trees={},max_depth={}", options.forest.trees, options.forest.max_depth),
            holdout_predictions(forest), hold_y);
  consider(std::move(forest), forest_entry);
  return best;
}

RegressionModel fit_best(const Dataset& ds, RandomStream& rng, const FitOptions& options) {
  require(ds.k() >= 20, ErrorCode::InsufficientData,
          fmt::format("model selection needs at least 20 rows (got {})", ds.k()));
  require(ds.target.size() == ds.k(), ErrorCode::LengthMismatch,
          "dataset target length does not match rows");
  const HoldoutSplit split = make_holdout_split(ds.k(), options.holdout_fraction, rng);
  return fit_best_on_split(ds, split, rng, options);
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  require(predictions.size() == truth.size(), ErrorCode::LengthMismatch,
          fmt::format("rmse got {} predictions for {} targets", predictions.size(), truth.size()));
  require(!truth.empty(), ErrorCode::EmptyInput, "rmse needs at least one value");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

double normalized_rmse(double config_rmse, double baseline_rmse) {
  require(baseline_rmse > 0.0, ErrorCode::ZeroBaseline,
          "in-distribution baseline RMSE is zero; the dataset is degenerate");
  return config_rmse / baseline_rmse;
}

}  // namespace insideout
