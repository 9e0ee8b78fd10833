#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "insideout/distributions.hpp"
#include "insideout/expression.hpp"
#include "insideout/matrix.hpp"
#include "insideout/random.hpp"
#include "insideout/status.hpp"

namespace insideout {

/// Generative recipe for one source feature.
struct FeatureSpec {
  MixtureDistribution mixture;
  ObservableWindow window;
  double noise_sigma;

  FeatureSpec(MixtureDistribution mixture, ObservableWindow window, double noise_sigma);

  bool operator==(const FeatureSpec&) const = default;
};

/// Ranges used by the random generators.
struct HyperRanges {
  std::size_t z_min = 1;
  std::size_t z_max = 20;
  double noise_lo = 0.1;
  double noise_hi = 1.0;
  double window_lo = -100.0;
  double window_hi = 100.0;
  ComponentRanges components{};
  /// Recipes whose window has less acceptance mass than this are redrawn;
  /// 0 disables the screen.
  double min_window_mass = 1e-2;
  /// Each interval must carry at least this share of the accepted mass, so
  /// both sides of the gap are populated.
  double min_interval_share = 0.05;
  /// Whole-recipe redraws before SpecGenerationFailed.
  std::size_t max_spec_attempts = 10'000;

  void validate() const;
};

FeatureSpec random_feature_spec(RandomStream& rng, const HyperRanges& ranges = {});

struct DatasetSpec {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<FeatureSpec> features;
  ExpressionTree target_tree;
  double target_noise_sigma = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DatasetSpec&) const = default;
};

/// A spec with n random features, a random target tree of depth <= max_depth
/// and a target noise level drawn from the noise range.
DatasetSpec random_dataset_spec(std::size_t n, std::size_t k, RandomStream& rng,
                                const HyperRanges& ranges = {},
                                std::size_t max_depth = kDefaultTreeDepth);

using Sample = std::vector<double>;

struct Dataset {
  Matrix features;  // k x n
  std::vector<double> target;

  [[nodiscard]] std::size_t n() const noexcept { return features.cols(); }
  [[nodiscard]] std::size_t k() const noexcept { return features.rows(); }

  bool operator==(const Dataset&) const = default;
};

/// Dataset along with the pre-noise values it was built from.
struct GeneratedDataset {
  Dataset data;
  Matrix clean_features;
  std::vector<double> clean_target;
};

/// k accepted window draws without noise.
std::vector<double> sample_clean_feature(const FeatureSpec& spec, std::size_t k,
                                         RandomStream& rng);

/// k accepted window draws plus N(0, noise_sigma) noise, one stream.
std::vector<double> generate_feature(const FeatureSpec& spec, std::size_t k, RandomStream& rng);

/// Pure function of the spec. Column i draws from the stream
/// derive(seed, {kFeatureStream, i}); targets are computed from the clean
/// rows before feature noise is added.
Dataset generate_dataset(const DatasetSpec& spec);

/// Noisy column `index` exactly as generate_dataset produces it for `seed`;
/// the pre-noise draws are written to `clean` when given.
std::vector<double> generate_dataset_column(const FeatureSpec& spec, std::size_t k,
                                            std::uint64_t seed, std::size_t index,
                                            std::vector<double>* clean = nullptr);
GeneratedDataset generate_dataset_detailed(const DatasetSpec& spec);

inline constexpr std::uint64_t kFeatureStream = 1;
inline constexpr std::uint64_t kFeatureNoiseStream = 2;
inline constexpr std::uint64_t kTargetNoiseStream = 3;

/// Placement margins for profile-conditioned draws.
struct PlacementMargins {
  /// Inside draws stay this far from each gap edge.
  double inside = 0.0;
  /// Outside draws stay this far beyond a1 / b2.
  double outside = 0.0;
  /// Outside draws reach at most this far beyond a1 / b2.
  double outside_span = 0.0;
};

/// m = 5% of the gap for inside, 5% of b2 - a1 for outside, span b2 - a1.
PlacementMargins placement_margins(const ObservableWindow& window) noexcept;

/// One coordinate with the requested status for a single feature. Throws
/// DegenerateGap when Inside is requested and a2 - b1 < 10 * noise_sigma.
double sample_coordinate(const FeatureSpec& spec, OODStatus status, RandomStream& rng);

/// One sample whose coordinates are placed according to `desired`. The
/// placement is geometric; callers certify it against fitted detectors.
Sample sample_with_profile(std::span<const FeatureSpec> specs, const Profile& desired,
                           RandomStream& rng);

/// CSV with header f_0,...,f_{n-1},y and 17 significant digits.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& ds);
Dataset dataset_from_csv(std::string_view text);

}  // namespace insideout
