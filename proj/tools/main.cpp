#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "insideout/datagen.hpp"
#include "insideout/detect.hpp"
#include "insideout/experiment.hpp"
#include "insideout/profile.hpp"
#include "insideout/serialization.hpp"
#include "insideout/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace insideout;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitBudget = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return kExitIo;
    case ErrorCode::BudgetExhausted: return kExitBudget;
    default: return kExitUsage;
  }
}

std::vector<double> parse_sample(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string token = text.substr(start, end - start);
    const auto first = token.find_first_not_of(" \t");
    const auto last = token.find_last_not_of(" \t");
    require(first != std::string::npos, ErrorCode::InvalidArgument,
            fmt::format("empty value in sample '{}'", text));
    token = token.substr(first, last - first + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    require(ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(v),
            ErrorCode::InvalidArgument, fmt::format("cannot parse sample value '{}'", token));
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::IoError,
          fmt::format("cannot create output directory '{}'", dir.string()));
}

struct GenerateArgs {
  std::string spec_file;
  bool random = false;
  std::size_t n = 3;
  std::size_t k = 1000;
  std::optional<std::uint64_t> seed;
  std::size_t tree_depth = kDefaultTreeDepth;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  require(a.random != !a.spec_file.empty(), ErrorCode::InvalidArgument,
          "give exactly one of --spec or --random");
  DatasetSpec spec;
  if (a.random) {
    require(a.n >= 1, ErrorCode::InvalidArgument, "n must be ≥ 1");
    require(a.k >= 1, ErrorCode::InvalidArgument, "k must be ≥ 1");
    auto rng = RandomStream::derive(a.seed.value_or(0), {0});
    spec = random_dataset_spec(a.n, a.k, rng, HyperRanges{}, a.tree_depth);
  } else {
    spec = dataset_spec_from_json(read_text_file(a.spec_file));
    if (a.seed) spec.seed = *a.seed;
  }
  const Dataset ds = generate_dataset(spec);
  const fs::path out(a.out);
  ensure_directory(out);
  save_dataset(ds, out / "dataset.csv");
  write_text_file(out / "spec.json", dataset_spec_to_json(spec) + "\n");

  json summary;
  summary["n"] = spec.n;
  summary["k"] = spec.k;
  summary["seed"] = spec.seed;
  summary["target_tree"] = spec.target_tree.to_string();
  summary["features"] = json::array();
  for (const auto& f : spec.features) {
    summary["features"].push_back({{"z", f.mixture.size()},
                                   {"window", {f.window.a1(), f.window.b1(), f.window.a2(),
                                               f.window.b2()}}});
  }
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

DetectorModel fit_column(const std::string& kind, std::span<const double> column,
                         std::size_t k_neighbors, std::uint64_t seed, std::size_t index) {
  if (kind == "knn") {
    auto rng = RandomStream::derive(seed, {index});
    return fit_knn(column, std::min(k_neighbors, column.size()), rng);
  }
  if (kind == "zscore") return fit_zscore(column);
  if (kind == "kl_histogram") return fit_kl_histogram(column);
  fail(ErrorCode::InvalidArgument,
       fmt::format("detector must be knn, zscore or kl_histogram (got '{}')", kind));
}

struct FitArgs {
  std::string dataset;
  std::string detector = "knn";
  std::size_t k_neighbors = kDefaultKNeighbors;
  std::uint64_t seed = 0;
  std::string out;
};

int run_fit(const FitArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  std::vector<DetectorModel> models;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    models.push_back(fit_column(a.detector, ds.features.column(i), a.k_neighbors, a.seed, i));
  }
  const std::string text = detectors_to_json(models);
  if (a.out.empty()) {
    std::cout << text << '\n';
  } else {
    write_text_file(a.out, text + "\n");
  }
  return kExitOk;
}

struct ProfileArgs {
  std::string dataset;
  std::string sample;
  std::string mode = "simple";
  std::string detector = "knn";
  std::string detectors_file;
  std::size_t k_neighbors = kDefaultKNeighbors;
  std::size_t min_side = 0;
  std::uint64_t seed = 0;
};

int run_profile(const ProfileArgs& a) {
  ProfileOptions options;
  options.mode = profile_mode_from_string(a.mode);
  options.k_neighbors = a.k_neighbors;
  options.min_side = a.min_side;
  options.seed = a.seed;
  require(options.mode == ProfileMode::Simple || a.detector == "knn", ErrorCode::InvalidArgument,
          "robust mode refits knn detectors; use --detector knn");
  const Dataset ds = load_dataset(a.dataset);
  const auto x = parse_sample(a.sample);
  require(x.size() == ds.n(), ErrorCode::DimensionMismatch,
          fmt::format("sample has {} values but the dataset has {} features", x.size(), ds.n()));

  std::vector<DetectorModel> detectors;
  if (!a.detectors_file.empty()) {
    detectors = detectors_from_json(read_text_file(a.detectors_file));
    require(detectors.size() == ds.n(), ErrorCode::DimensionMismatch,
            fmt::format("detector file has {} detectors for {} features", detectors.size(),
                        ds.n()));
  } else {
    for (std::size_t i = 0; i < ds.n(); ++i) {
      detectors.push_back(fit_column(a.detector, ds.features.column(i),
                                     options.k_neighbors, a.seed, i));
    }
  }
  const Profile profile = compute_profile(ds, x, detectors, options);

  json out = json::parse(profile_to_json(profile));
  out["mode"] = std::string(to_string(options.mode));
  out["features"] = json::array();
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto column = ds.features.column(i);
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    json f;
    f["score"] = detector_score(detectors[i], x[i]);
    if (const auto* knn = std::get_if<KnnModel>(&detectors[i])) {
      f["chi"] = knn->chi;
    } else if (const auto* z = std::get_if<ZscoreModel>(&detectors[i])) {
      f["threshold"] = z->threshold;
    }
    f["min"] = *lo;
    f["max"] = *hi;
    out["features"].push_back(f);
  }
  std::cout << out.dump() << '\n';
  return kExitOk;
}

struct ExperimentArgs {
  std::string kind;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repetitions;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> n;
  std::optional<std::size_t> k;
  std::optional<std::size_t> eval_samples;
  std::optional<std::string> mode;
};

int run_experiment(const ExperimentArgs& a) {
  ExperimentConfig cfg;
  if (!a.config.empty()) cfg = experiment_config_from_json(read_text_file(a.config));
  if (a.seed) cfg.master_seed = *a.seed;
  if (a.repetitions) cfg.repetitions = *a.repetitions;
  if (a.jobs) cfg.jobs = *a.jobs;
  if (a.n) cfg.n = *a.n;
  if (a.k) cfg.k = *a.k;
  if (a.eval_samples) cfg.eval_samples = *a.eval_samples;
  if (a.mode) cfg.mode = profile_mode_from_string(*a.mode);
  cfg.validate();
  const fs::path out(a.out);
  ensure_directory(out);

  const ProgressSink sink = [](const std::string& message) {
    std::cerr << "warning: " << message << '\n';
  };
  ExperimentResult result;
  json headline;
  if (a.kind == "profile") {
    result = run_profile_grid(cfg, sink);
  } else if (a.kind == "sens-dim") {
    result = run_sweep_dimensions(cfg, cfg.grid.n_values, sink);
  } else if (a.kind == "sens-z") {
    result = run_sweep_complexity(cfg, cfg.grid.z_values, sink);
  } else if (a.kind == "sens-portion") {
    result = run_sweep_portion(cfg, cfg.grid.inside_fracs, cfg.grid.outside_fracs, sink);
  } else {
    result = run_sweep_size(cfg, cfg.grid.size_n_values, cfg.grid.k_values, sink);
  }
  write_results_csv(result, out / "results.csv");
  write_manifest(result, out / "manifest.json");

  headline["experiment"] = result.experiment;
  headline["rows"] = result.rows.size();
  headline["results"] = (out / "results.csv").string();
  headline["wall_seconds"] = result.wall_seconds;
  if (a.kind == "profile" || a.kind == "sens-portion") {
    bool identity = false;
    for (const auto& row : result.rows) {
      if (row.present && row.composition.no == row.composition.n()) {
        identity = row.mean_nrmse == 1.0;
      }
    }
    headline["normalization_identity"] = identity;
  }
  if (a.kind == "sens-dim" || a.kind == "sens-z") {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& row : result.rows) {
      x.push_back(*row.sweep_x);
      y.push_back(row.mean_nrmse);
    }
    if (x.size() >= 2) headline["spearman_rho"] = spearman_rho(x, y);
  }
  if (a.kind == "sens-size") {
    json per_k = json::object();
    for (std::size_t kv : cfg.grid.k_values) {
      std::vector<double> x;
      std::vector<double> y;
      for (const auto& row : result.rows) {
        if (*row.sweep_y == static_cast<double>(kv)) {
          x.push_back(*row.sweep_x);
          y.push_back(row.mean_nrmse);
        }
      }
      if (x.size() >= 2) per_k[std::to_string(kv)] = spearman_rho(x, y);
    }
    headline["spearman_rho_n_per_k"] = per_k;
  }
  std::cout << headline.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inside/outside out-of-distribution profiling toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       fmt::format("insideout {} (format {})", library_version(), kFormatVersion));

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
  generate->add_option("--spec", gen.spec_file, "Dataset spec JSON");
  generate->add_flag("--random", gen.random, "Draw a random spec");
  generate->add_option("--n", gen.n, "Number of source features");
  generate->add_option("--k", gen.k, "Number of rows");
  generate->add_option("--seed", gen.seed, "Master seed");
  generate->add_option("--tree-depth", gen.tree_depth, "Maximum target tree depth");
  generate->add_option("--out", gen.out, "Output directory")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit per-feature detectors and write them as JSON");
  fit_cmd->add_option("--dataset", fit.dataset, "Dataset CSV")->required();
  fit_cmd->add_option("--detector", fit.detector, "knn, zscore or kl_histogram");
  fit_cmd->add_option("--k-neighbors", fit.k_neighbors, "Neighbors for knn");
  fit_cmd->add_option("--seed", fit.seed, "Seed");
  fit_cmd->add_option("--out", fit.out, "Output JSON (default: standard output)");

  ProfileArgs prof;
  auto* profile = app.add_subcommand("profile", "Classify one sample against a dataset");
  profile->add_option("--dataset", prof.dataset, "Dataset CSV")->required();
  profile->add_option("--sample", prof.sample, "Comma-separated coordinates")->required();
  profile->add_option("--mode", prof.mode, "simple or robust");
  profile->add_option("--detector", prof.detector, "knn or zscore");
  profile->add_option("--detectors", prof.detectors_file, "Fitted detector JSON from `fit`");
  profile->add_option("--k-neighbors", prof.k_neighbors, "Neighbors for knn");
  profile->add_option("--min-side", prof.min_side, "Robust mode side size (0 = default)");
  profile->add_option("--seed", prof.seed, "Seed");

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "Run a profiling or sensitivity experiment");
  experiment->add_option("kind", exp.kind, "profile, sens-dim, sens-z, sens-portion or sens-size")
      ->required()
      ->check(CLI::IsMember({"profile", "sens-dim", "sens-z", "sens-portion", "sens-size"}));
  experiment->add_option("--config", exp.config, "Experiment config JSON");
  experiment->add_option("--out", exp.out, "Output directory")->required();
  experiment->add_option("--seed", exp.seed, "Master seed");
  experiment->add_option("--repetitions", exp.repetitions, "Repetitions per configuration");
  experiment->add_option("--jobs", exp.jobs, "Worker threads (0 = all cores)");
  experiment->add_option("--n", exp.n, "Number of source features");
  experiment->add_option("--k", exp.k, "Rows per dataset");
  experiment->add_option("--eval-samples", exp.eval_samples, "Evaluation samples per composition");
  experiment->add_option("--mode", exp.mode, "simple or robust");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* usage = &app;
    for (const auto* sub : app.get_subcommands()) usage = sub;
    std::cerr << usage->help();
    return kExitUsage;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*fit_cmd) return run_fit(fit);
    if (*profile) return run_profile(prof);
    return run_experiment(exp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
