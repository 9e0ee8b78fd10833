#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "insideout/datagen.hpp"
#include "insideout/profile.hpp"
#include "insideout/regress.hpp"

namespace insideout {

/// Grids used by the sweep experiments.
struct SweepGrid {
  std::vector<std::size_t> n_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<std::size_t> z_values{1, 5, 10, 15, 20};
  std::vector<double> inside_fracs{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> outside_fracs{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::size_t> size_n_values{2, 5, 10};
  std::vector<std::size_t> k_values{100, 1000, 10000};

  bool operator==(const SweepGrid&) const = default;
};

struct ExperimentConfig {
  std::size_t n = 3;
  std::size_t k = 2000;
  std::size_t repetitions = 20;
  std::size_t eval_samples = 100;
  HyperRanges ranges{};
  ProfileMode mode = ProfileMode::Simple;
  std::uint64_t master_seed = 0;
  /// Worker threads; 0 uses hardware concurrency. Never affects results.
  std::size_t jobs = 0;
  std::size_t k_neighbors = kDefaultKNeighbors;
  std::size_t tree_depth = kDefaultTreeDepth;
  TreeGrowOptions tree{};
  /// Redraws allowed per coordinate before a sample is dropped.
  std::size_t max_redraws = 50;
  /// Repetitions dropping more than this fraction of any evaluation set
  /// are regenerated.
  double max_drop_rate = 0.2;
  /// Dataset draws allowed per repetition before BudgetExhausted.
  std::size_t max_attempts = 20;
  FitOptions fit{};
  SweepGrid grid{};

  void validate() const;
};

struct Composition {
  std::size_t no = 0;
  std::size_t inside = 0;
  std::size_t outside = 0;

  [[nodiscard]] std::size_t n() const noexcept { return no + inside + outside; }
  bool operator==(const Composition&) const = default;
};

/// All (no, inside, outside) triples summing to n, starting at (n, 0, 0),
/// ordered by decreasing no then decreasing inside.
std::vector<Composition> enumerate_compositions(std::size_t n);
/// floor(n/2) inside, floor(n/2) outside, remainder in distribution.
Composition mixed_composition(std::size_t n) noexcept;
/// Inside features first, then outside, then in-distribution.
Profile composition_profile(const Composition& c);

/// A dataset whose features all admit certifiable inside and outside
/// coordinates, with the detectors used for certification.
struct ScreenedDataset {
  DatasetSpec spec;
  Dataset data;
  std::vector<FeatureProfiler> profilers;
  std::uint64_t detector_seed = 0;
};

struct ScreenOptions {
  std::size_t k_neighbors = kDefaultKNeighbors;
  ProfileMode mode = ProfileMode::Simple;
  std::size_t tree_depth = kDefaultTreeDepth;
  TreeGrowOptions tree{};
  /// Evenly spaced probe points per placement region.
  std::size_t probes = 16;
  /// Minimum fraction of inside (and of outside) probes that must certify.
  double min_certifiable = 0.25;
  /// Feature spec draws allowed per feature before SpecGenerationFailed.
  std::size_t max_feature_attempts = 200;
};

/// Random dataset spec whose feature specs are redrawn until the gap is
/// wide enough for inside placement and, under the detector fitted on the
/// generated column, at least `min_certifiable` of evenly spaced inside
/// and outside probe points classify as requested. Feature column i and its
/// detector are exactly those generate_dataset and fit_profilers produce.
ScreenedDataset draw_screened_dataset(std::size_t n, std::size_t k, const HyperRanges& ranges,
                                      RandomStream& rng, const ScreenOptions& options = {});

/// Draws a sample with the requested per-feature statuses, redrawing each
/// coordinate until compute_profile agrees. nullopt when a coordinate
/// exhausts `max_redraws`.
std::optional<Sample> draw_certified_sample(std::span<const FeatureSpec> specs,
                                            std::span<const FeatureProfiler> profilers,
                                            const Profile& desired,
                                            const ProfileOptions& options, RandomStream& rng,
                                            std::size_t max_redraws = 50);

struct ResultRow {
  Composition composition;
  std::optional<double> sweep_x;
  std::optional<double> sweep_y;
  /// False for infeasible grid cells.
  bool present = true;
  double mean_nrmse = 0.0;
  double std_nrmse = 0.0;
  std::size_t repetitions_used = 0;
  /// Per-repetition normalized RMSE, in repetition order.
  std::vector<double> values;
};

struct ExperimentResult {
  std::string experiment;
  ExperimentConfig config;
  std::vector<ResultRow> rows;
  /// Dataset draws discarded across all repetitions.
  std::size_t regenerated = 0;
  std::size_t dropped_samples = 0;
  double wall_seconds = 0.0;
};

/// Receives human-readable warnings; calls are serialized.
using ProgressSink = std::function<void(const std::string&)>;

ExperimentResult run_profile_grid(const ExperimentConfig& cfg, const ProgressSink& sink = {});
ExperimentResult run_sweep_dimensions(const ExperimentConfig& cfg,
                                      std::span<const std::size_t> n_values,
                                      const ProgressSink& sink = {});
ExperimentResult run_sweep_complexity(const ExperimentConfig& cfg,
                                      std::span<const std::size_t> z_values,
                                      const ProgressSink& sink = {});
ExperimentResult run_sweep_portion(const ExperimentConfig& cfg,
                                   std::span<const double> inside_fracs,
                                   std::span<const double> outside_fracs,
                                   const ProgressSink& sink = {});
ExperimentResult run_sweep_size(const ExperimentConfig& cfg,
                                std::span<const std::size_t> n_values,
                                std::span<const std::size_t> k_values,
                                const ProgressSink& sink = {});

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Arithmetic mean and population standard deviation.
Aggregate aggregate(std::span<const double> records);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// CSV with one row per result row; stable across runs and --jobs values.
std::string results_to_csv(const ExperimentResult& result);
void write_results_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_manifest(const ExperimentResult& result, const std::filesystem::path& path);

/// Runs fn(i) for i in [0, count) on `jobs` threads (0 = hardware). The
/// exception of the lowest failing index is rethrown after all workers
/// finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace insideout
