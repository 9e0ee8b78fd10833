#include "insideout/serialization.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace insideout {

namespace {

using json = nlohmann::ordered_json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, fmt::format("invalid JSON: {}", e.what()));
  }
}

void expect_object(const json& j, std::string_view what) {
  require(j.is_object(), ErrorCode::ParseError, fmt::format("{} must be a JSON object", what));
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view what) {
  expect_object(j, what);
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    require(known, ErrorCode::ParseError, fmt::format("unknown key '{}' in {}", key, what));
  }
}

const json& field(const json& j, std::string_view key, std::string_view what) {
  const auto it = j.find(std::string(key));
  require(it != j.end(), ErrorCode::ParseError,
          fmt::format("missing key '{}' in {}", key, what));
  return *it;
}

template <class T>
T get(const json& j, std::string_view key, std::string_view what) {
  try {
    return field(j, key, what).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, fmt::format("bad value for '{}' in {}: {}", key, what, e.what()));
  }
}

/// Assigns `out` only when the key is present.
template <class T>
void overlay(const json& j, std::string_view key, T& out, std::string_view what) {
  if (j.contains(std::string(key))) out = get<T>(j, key, what);
}

json component_to_json(const ComponentDistribution& c) {
  json j;
  j["family"] = std::string(to_string(c.kind()));
  std::visit(overloaded{
                 [&](const Gaussian& p) {
                   j["mean"] = p.mean;
                   j["stddev"] = p.stddev;
                 },
                 [&](const Uniform& p) {
                   j["lo"] = p.lo;
                   j["hi"] = p.hi;
                 },
                 [&](const Exponential& p) { j["rate"] = p.rate; },
                 [&](const Weibull& p) {
                   j["scale"] = p.scale;
                   j["shape"] = p.shape;
                 },
                 [&](const Beta& p) {
                   j["alpha"] = p.alpha;
                   j["beta"] = p.beta;
                 },
             },
             c.params());
  return j;
}

ComponentDistribution component_from_json(const json& j) {
  constexpr std::string_view what = "component";
  expect_object(j, what);
  const auto family = distribution_kind_from_string(get<std::string>(j, "family", what));
  switch (family) {
    case DistributionKind::Gaussian:
      reject_unknown(j, {"family", "mean", "stddev"}, what);
      return ComponentDistribution::gaussian(get<double>(j, "mean", what),
                                             get<double>(j, "stddev", what));
    case DistributionKind::Uniform:
      reject_unknown(j, {"family", "lo", "hi"}, what);
      return ComponentDistribution::uniform(get<double>(j, "lo", what), get<double>(j, "hi", what));
    case DistributionKind::Exponential:
      reject_unknown(j, {"family", "rate"}, what);
      return ComponentDistribution::exponential(get<double>(j, "rate", what));
    case DistributionKind::Weibull:
      reject_unknown(j, {"family", "scale", "shape"}, what);
      return ComponentDistribution::weibull(get<double>(j, "scale", what),
                                            get<double>(j, "shape", what));
    case DistributionKind::Beta:
      reject_unknown(j, {"family", "alpha", "beta"}, what);
      return ComponentDistribution::beta(get<double>(j, "alpha", what),
                                         get<double>(j, "beta", what));
  }
  fail(ErrorCode::ParseError, "unknown component family");
}

json feature_to_json(const FeatureSpec& f) {
  json j;
  j["components"] = json::array();
  for (const auto& c : f.mixture.components()) j["components"].push_back(component_to_json(c));
  j["weights"] = f.mixture.weights();
  j["window"] = {f.window.a1(), f.window.b1(), f.window.a2(), f.window.b2()};
  j["noise_sigma"] = f.noise_sigma;
  return j;
}

FeatureSpec feature_from_json(const json& j) {
  constexpr std::string_view what = "feature";
  reject_unknown(j, {"components", "weights", "window", "noise_sigma"}, what);
  const json& comps = field(j, "components", what);
  require(comps.is_array(), ErrorCode::ParseError, "feature components must be an array");
  std::vector<ComponentDistribution> components;
  for (const auto& c : comps) components.push_back(component_from_json(c));
  const auto weights = get<std::vector<double>>(j, "weights", what);
  const auto window = get<std::vector<double>>(j, "window", what);
  require(window.size() == 4, ErrorCode::ParseError, "feature window must have 4 values");
  return FeatureSpec(MixtureDistribution(std::move(components), weights),
                     ObservableWindow(window[0], window[1], window[2], window[3]),
                     get<double>(j, "noise_sigma", what));
}

json detector_json(const DetectorModel& model) {
  json j;
  j["detector"] = detector_name(model);
  std::visit(overloaded{
                 [&](const KnnModel& m) {
                   j["k_neighbors"] = m.k_neighbors;
                   j["chi"] = m.chi;
                   j["chi_fallback"] = m.chi_fallback;
                   j["train_values"] = m.train_values;
                 },
                 [&](const ZscoreModel& m) {
                   j["mean"] = m.mean;
                   j["stddev"] = m.stddev;
                   j["threshold"] = m.threshold;
                 },
                 [&](const MahalanobisModel& m) {
                   j["mean"] = std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size());
                   json rows = json::array();
                   for (Eigen::Index r = 0; r < m.covariance.rows(); ++r) {
                     std::vector<double> row(static_cast<std::size_t>(m.covariance.cols()));
                     for (Eigen::Index c = 0; c < m.covariance.cols(); ++c) {
                       row[static_cast<std::size_t>(c)] = m.covariance(r, c);
                     }
                     rows.push_back(row);
                   }
                   j["covariance"] = rows;
                   j["threshold"] = m.threshold;
                 },
                 [&](const KlHistogramModel& m) {
                   j["bin_edges"] = m.bin_edges;
                   j["train_probs"] = m.train_probs;
                   j["threshold"] = m.threshold;
                 },
             },
             model);
  return j;
}

DetectorModel detector_from(const json& j) {
  constexpr std::string_view what = "detector";
  expect_object(j, what);
  const auto name = get<std::string>(j, "detector", what);
  if (name == "knn") {
    reject_unknown(j, {"detector", "k_neighbors", "chi", "chi_fallback", "train_values"}, what);
    KnnModel m;
    m.k_neighbors = get<std::size_t>(j, "k_neighbors", what);
    m.chi = get<double>(j, "chi", what);
    m.chi_fallback = get<bool>(j, "chi_fallback", what);
    m.train_values = get<std::vector<double>>(j, "train_values", what);
    require(!m.train_values.empty() && std::is_sorted(m.train_values.begin(), m.train_values.end()),
            ErrorCode::ParseError, "knn train_values must be non-empty and sorted");
    require(m.k_neighbors >= 1, ErrorCode::ParseError, "knn k_neighbors must be >= 1");
    return m;
  }
  if (name == "zscore") {
    reject_unknown(j, {"detector", "mean", "stddev", "threshold"}, what);
    return ZscoreModel{get<double>(j, "mean", what), get<double>(j, "stddev", what),
                       get<double>(j, "threshold", what)};
  }
  if (name == "mahalanobis") {
    reject_unknown(j, {"detector", "mean", "covariance", "threshold"}, what);
    const auto mean = get<std::vector<double>>(j, "mean", what);
    const auto cov = get<std::vector<std::vector<double>>>(j, "covariance", what);
    require(cov.size() == mean.size(), ErrorCode::ParseError,
            "mahalanobis covariance must be square and match the mean");
    Eigen::VectorXd mu(static_cast<Eigen::Index>(mean.size()));
    Eigen::MatrixXd s(mu.size(), mu.size());
    for (std::size_t r = 0; r < mean.size(); ++r) {
      mu(static_cast<Eigen::Index>(r)) = mean[r];
      require(cov[r].size() == mean.size(), ErrorCode::ParseError,
              "mahalanobis covariance must be square and match the mean");
      for (std::size_t c = 0; c < mean.size(); ++c) {
        s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cov[r][c];
      }
    }
    return make_mahalanobis(std::move(mu), std::move(s), get<double>(j, "threshold", what));
  }
  if (name == "kl_histogram") {
    reject_unknown(j, {"detector", "bin_edges", "train_probs", "threshold"}, what);
    KlHistogramModel m{get<std::vector<double>>(j, "bin_edges", what),
                       get<std::vector<double>>(j, "train_probs", what),
                       get<double>(j, "threshold", what)};
    require(m.bin_edges.size() >= 2 && m.train_probs.size() == m.bin_edges.size() + 1,
            ErrorCode::ParseError, "kl histogram has inconsistent bin counts");
    return m;
  }
  fail(ErrorCode::ParseError, fmt::format("unknown detector '{}'", name));
}

json ranges_to_json(const HyperRanges& r) {
  const auto& c = r.components;
  return json{
      {"z_min", r.z_min},
      {"z_max", r.z_max},
      {"noise_lo", r.noise_lo},
      {"noise_hi", r.noise_hi},
      {"window_lo", r.window_lo},
      {"window_hi", r.window_hi},
      {"min_window_mass", r.min_window_mass},
      {"min_interval_share", r.min_interval_share},
      {"max_spec_attempts", r.max_spec_attempts},
      {"components",
       {{"gaussian_mean_lo", c.gaussian_mean_lo},
        {"gaussian_mean_hi", c.gaussian_mean_hi},
        {"gaussian_stddev_hi", c.gaussian_stddev_hi},
        {"uniform_lo", c.uniform_lo},
        {"uniform_hi", c.uniform_hi},
        {"exponential_rate_hi", c.exponential_rate_hi},
        {"weibull_scale_hi", c.weibull_scale_hi},
        {"weibull_shape_lo", c.weibull_shape_lo},
        {"weibull_shape_hi", c.weibull_shape_hi},
        {"beta_alpha_hi", c.beta_alpha_hi},
        {"beta_beta_hi", c.beta_beta_hi}}},
  };
}

void ranges_from_json(const json& j, HyperRanges& r) {
  constexpr std::string_view what = "ranges";
  reject_unknown(j, {"z_min", "z_max", "noise_lo", "noise_hi", "window_lo", "window_hi",
                     "min_window_mass", "min_interval_share", "max_spec_attempts", "components"},
                 what);
  overlay(j, "z_min", r.z_min, what);
  overlay(j, "z_max", r.z_max, what);
  overlay(j, "noise_lo", r.noise_lo, what);
  overlay(j, "noise_hi", r.noise_hi, what);
  overlay(j, "window_lo", r.window_lo, what);
  overlay(j, "window_hi", r.window_hi, what);
  overlay(j, "min_window_mass", r.min_window_mass, what);
  overlay(j, "min_interval_share", r.min_interval_share, what);
  overlay(j, "max_spec_attempts", r.max_spec_attempts, what);
  if (j.contains("components")) {
    constexpr std::string_view cw = "ranges.components";
    const json& cj = j["components"];
    reject_unknown(cj, {"gaussian_mean_lo", "gaussian_mean_hi", "gaussian_stddev_hi",
                        "uniform_lo", "uniform_hi", "exponential_rate_hi", "weibull_scale_hi",
                        "weibull_shape_lo", "weibull_shape_hi", "beta_alpha_hi", "beta_beta_hi"},
                   cw);
    auto& c = r.components;
    overlay(cj, "gaussian_mean_lo", c.gaussian_mean_lo, cw);
    overlay(cj, "gaussian_mean_hi", c.gaussian_mean_hi, cw);
    overlay(cj, "gaussian_stddev_hi", c.gaussian_stddev_hi, cw);
    overlay(cj, "uniform_lo", c.uniform_lo, cw);
    overlay(cj, "uniform_hi", c.uniform_hi, cw);
    overlay(cj, "exponential_rate_hi", c.exponential_rate_hi, cw);
    overlay(cj, "weibull_scale_hi", c.weibull_scale_hi, cw);
    overlay(cj, "weibull_shape_lo", c.weibull_shape_lo, cw);
    overlay(cj, "weibull_shape_hi", c.weibull_shape_hi, cw);
    overlay(cj, "beta_alpha_hi", c.beta_alpha_hi, cw);
    overlay(cj, "beta_beta_hi", c.beta_beta_hi, cw);
  }
}

}  // namespace

std::string dataset_spec_to_json(const DatasetSpec& spec) {
  json j;
  j["format_version"] = kFormatVersion;
  j["n"] = spec.n;
  j["k"] = spec.k;
  j["seed"] = spec.seed;
  j["target_noise_sigma"] = spec.target_noise_sigma;
  j["target_tree"] = spec.target_tree.to_string();
  j["features"] = json::array();
  for (const auto& f : spec.features) j["features"].push_back(feature_to_json(f));
  return j.dump(2);
}

DatasetSpec dataset_spec_from_json(std::string_view text) {
  constexpr std::string_view what = "dataset spec";
  const json j = parse_json(text);
  reject_unknown(j, {"format_version", "n", "k", "seed", "target_noise_sigma", "target_tree",
                     "features"},
                 what);
  DatasetSpec spec;
  spec.n = get<std::size_t>(j, "n", what);
  spec.k = get<std::size_t>(j, "k", what);
  spec.seed = get<std::uint64_t>(j, "seed", what);
  spec.target_noise_sigma = get<double>(j, "target_noise_sigma", what);
  spec.target_tree = ExpressionTree::parse(get<std::string>(j, "target_tree", what));
  const json& features = field(j, "features", what);
  require(features.is_array(), ErrorCode::ParseError, "features must be an array");
  for (const auto& f : features) spec.features.push_back(feature_from_json(f));
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::ParseError, fmt::format("invalid dataset spec: {}", e.what()));
  }
  return spec;
}

std::string detector_to_json(const DetectorModel& model) { return detector_json(model).dump(); }

DetectorModel detector_from_json(std::string_view text) { return detector_from(parse_json(text)); }

std::string detectors_to_json(std::span<const DetectorModel> models) {
  json j;
  j["format_version"] = kFormatVersion;
  j["detectors"] = json::array();
  for (const auto& m : models) j["detectors"].push_back(detector_json(m));
  return j.dump();
}

std::vector<DetectorModel> detectors_from_json(std::string_view text) {
  const json j = parse_json(text);
  reject_unknown(j, {"format_version", "detectors"}, "detector file");
  const json& list = field(j, "detectors", "detector file");
  require(list.is_array(), ErrorCode::ParseError, "detectors must be an array");
  std::vector<DetectorModel> out;
  for (const auto& d : list) out.push_back(detector_from(d));
  return out;
}

std::string profile_to_json(const Profile& profile) {
  json j;
  j["statuses"] = json::array();
  for (auto s : profile.statuses()) j["statuses"].push_back(std::string(to_string(s)));
  j["counts"] = {{"no", profile.counts().no},
                 {"inside", profile.counts().inside},
                 {"outside", profile.counts().outside}};
  return j.dump();
}

Profile profile_from_json(std::string_view text) {
  const json j = parse_json(text);
  reject_unknown(j, {"statuses", "counts"}, "profile");
  const auto names = get<std::vector<std::string>>(j, "statuses", "profile");
  std::vector<OODStatus> statuses;
  for (const auto& s : names) statuses.push_back(status_from_string(s));
  Profile p(std::move(statuses));
  if (j.contains("counts")) {
    const json& c = j["counts"];
    reject_unknown(c, {"no", "inside", "outside"}, "profile counts");
    const ProfileCounts counts{get<std::size_t>(c, "no", "profile counts"),
                               get<std::size_t>(c, "inside", "profile counts"),
                               get<std::size_t>(c, "outside", "profile counts")};
    require(counts == p.counts(), ErrorCode::ParseError, "profile counts disagree with statuses");
  }
  return p;
}

std::string model_summary_json(const RegressionModel& model) {
  json j;
  j["variant"] = model.variant_name();
  j["n_features"] = model.n_features;
  std::visit(overloaded{
                 [&](const LinearModel& m) {
                   j["hyperparameters"] = json::object();
                   j["weights"] = m.weights;
                   j["intercept"] = m.intercept;
                 },
                 [&](const KnnRegressor& m) {
                   j["hyperparameters"] = {{"k", m.k}};
                   j["train_rows"] = m.train.rows();
                 },
                 [&](const ForestModel& m) {
                   j["hyperparameters"] = {{"trees", m.trees.size()}, {"max_depth", m.max_depth}};
                 },
             },
             model.model);
  j["selection_report"] = json::array();
  for (const auto& e : model.selection_report) {
    j["selection_report"].push_back(
        {{"variant", e.variant}, {"hyperparameters", e.hyperparameters}, {"holdout_rmse", e.holdout_rmse}});
  }
  return j.dump(2);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  j["repetitions"] = cfg.repetitions;
  j["eval_samples"] = cfg.eval_samples;
  j["mode"] = std::string(to_string(cfg.mode));
  j["master_seed"] = cfg.master_seed;
  j["k_neighbors"] = cfg.k_neighbors;
  j["tree_depth"] = cfg.tree_depth;
  j["max_redraws"] = cfg.max_redraws;
  j["max_drop_rate"] = cfg.max_drop_rate;
  j["max_attempts"] = cfg.max_attempts;
  j["ranges"] = ranges_to_json(cfg.ranges);
  j["tree"] = {{"variable_leaf_probability", cfg.tree.variable_leaf_probability},
               {"binary_probability", cfg.tree.binary_probability},
               {"constant_lo", cfg.tree.constant_lo},
               {"constant_hi", cfg.tree.constant_hi},
               {"cover_all_features", cfg.tree.cover_all_features},
               {"binary_weights", cfg.tree.binary_weights},
               {"unary_weights", cfg.tree.unary_weights}};
  j["fit"] = {{"holdout_fraction", cfg.fit.holdout_fraction},
              {"ridge_lambda", cfg.fit.ridge_lambda},
              {"knn_candidates", cfg.fit.knn_candidates},
              {"forest",
               {{"trees", cfg.fit.forest.trees},
                {"max_depth", cfg.fit.forest.max_depth},
                {"min_leaf", cfg.fit.forest.min_leaf},
                {"features_per_split", cfg.fit.forest.features_per_split}}}};
  j["grid"] = {{"n_values", cfg.grid.n_values},
               {"z_values", cfg.grid.z_values},
               {"inside_fracs", cfg.grid.inside_fracs},
               {"outside_fracs", cfg.grid.outside_fracs},
               {"size_n_values", cfg.grid.size_n_values},
               {"k_values", cfg.grid.k_values}};
  return j.dump();
}

ExperimentConfig experiment_config_from_json(std::string_view text, const ExperimentConfig& base) {
  constexpr std::string_view what = "experiment config";
  const json j = parse_json(text);
  reject_unknown(j, {"n", "k", "repetitions", "eval_samples", "mode", "master_seed", "jobs",
                     "k_neighbors", "tree_depth", "max_redraws", "max_drop_rate", "max_attempts",
                     "ranges", "tree", "fit", "grid"},
                 what);
  ExperimentConfig cfg = base;
  overlay(j, "n", cfg.n, what);
  overlay(j, "k", cfg.k, what);
  overlay(j, "repetitions", cfg.repetitions, what);
  overlay(j, "eval_samples", cfg.eval_samples, what);
  if (j.contains("mode")) cfg.mode = profile_mode_from_string(get<std::string>(j, "mode", what));
  overlay(j, "master_seed", cfg.master_seed, what);
  overlay(j, "jobs", cfg.jobs, what);
  overlay(j, "k_neighbors", cfg.k_neighbors, what);
  overlay(j, "tree_depth", cfg.tree_depth, what);
  overlay(j, "max_redraws", cfg.max_redraws, what);
  overlay(j, "max_drop_rate", cfg.max_drop_rate, what);
  overlay(j, "max_attempts", cfg.max_attempts, what);
  if (j.contains("ranges")) ranges_from_json(j["ranges"], cfg.ranges);
  if (j.contains("tree")) {
    constexpr std::string_view tw = "tree";
    const json& t = j["tree"];
    reject_unknown(t, {"variable_leaf_probability", "binary_probability", "constant_lo",
                       "constant_hi", "cover_all_features", "binary_weights", "unary_weights"},
                   tw);
    overlay(t, "variable_leaf_probability", cfg.tree.variable_leaf_probability, tw);
    overlay(t, "binary_probability", cfg.tree.binary_probability, tw);
    overlay(t, "constant_lo", cfg.tree.constant_lo, tw);
    overlay(t, "constant_hi", cfg.tree.constant_hi, tw);
    overlay(t, "cover_all_features", cfg.tree.cover_all_features, tw);
    overlay(t, "binary_weights", cfg.tree.binary_weights, tw);
    overlay(t, "unary_weights", cfg.tree.unary_weights, tw);
  }
  if (j.contains("fit")) {
    constexpr std::string_view fw = "fit";
    const json& f = j["fit"];
    reject_unknown(f, {"holdout_fraction", "ridge_lambda", "knn_candidates", "forest"}, fw);
    overlay(f, "holdout_fraction", cfg.fit.holdout_fraction, fw);
    overlay(f, "ridge_lambda", cfg.fit.ridge_lambda, fw);
    overlay(f, "knn_candidates", cfg.fit.knn_candidates, fw);
    if (f.contains("forest")) {
      constexpr std::string_view tw = "fit.forest";
      const json& t = f["forest"];
      reject_unknown(t, {"trees", "max_depth", "min_leaf", "features_per_split"}, tw);
      overlay(t, "trees", cfg.fit.forest.trees, tw);
      overlay(t, "max_depth", cfg.fit.forest.max_depth, tw);
      overlay(t, "min_leaf", cfg.fit.forest.min_leaf, tw);
      overlay(t, "features_per_split", cfg.fit.forest.features_per_split, tw);
    }
  }
  if (j.contains("grid")) {
    constexpr std::string_view gw = "grid";
    const json& g = j["grid"];
    reject_unknown(g, {"n_values", "z_values", "inside_fracs", "outside_fracs", "size_n_values",
                       "k_values"},
                   gw);
    overlay(g, "n_values", cfg.grid.n_values, gw);
    overlay(g, "z_values", cfg.grid.z_values, gw);
    overlay(g, "inside_fracs", cfg.grid.inside_fracs, gw);
    overlay(g, "outside_fracs", cfg.grid.outside_fracs, gw);
    overlay(g, "size_n_values", cfg.grid.size_n_values, gw);
    overlay(g, "k_values", cfg.grid.k_values, gw);
  }
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream file(path, std::ios::binary);
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("cannot open '{}' for writing", path.string()));
  file << text;
  require(static_cast<bool>(file), ErrorCode::IoError,
          fmt::format("failed writing '{}'", path.string()));
}

}  // namespace insideout
