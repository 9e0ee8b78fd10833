#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "insideout/datagen.hpp"
#include "insideout/detect.hpp"
#include "insideout/status.hpp"

namespace insideout {

enum class ProfileMode { Simple, Robust };

std::string_view to_string(ProfileMode mode) noexcept;
ProfileMode profile_mode_from_string(std::string_view name);

/// Fits a per-feature detector on a column.
using DetectorFitter = std::function<DetectorModel(std::span<const double>)>;

/// Knn fitter with a fixed sub-stream per call site.
DetectorFitter knn_fitter(std::size_t k_neighbors, RandomStream rng);

/// Not OOD -> No. OOD and min(f) < x < max(f) -> Inside, else Outside.
OODStatus classify_simple(std::span<const double> column, double x,
                          const DetectorModel& detector);
/// Same rule with precomputed extremes; O(1) beyond the detector call.
OODStatus classify_simple(double column_min, double column_max, double x,
                          const DetectorModel& detector);

/// max(20, 2% of the column).
std::size_t default_min_side(std::size_t column_size) noexcept;

/// Split-based robust rule: with D_l = {v < x} and D_r = {v > x}, x is
/// Inside when both sides hold at least min_side values and x is OOD with
/// respect to detectors fitted on each side separately. OOD on the full
/// column otherwise means Outside.
OODStatus classify_robust(std::span<const double> column, double x,
                          const DetectorModel& full_detector, const DetectorFitter& fitter,
                          std::size_t min_side);

/// Per-feature state for fast profiling: extremes, the sorted column, and
/// the fitted detector.
struct FeatureProfiler {
  std::vector<double> sorted;
  DetectorModel detector;

  FeatureProfiler(std::span<const double> column, DetectorModel detector);
  [[nodiscard]] double min() const { return sorted.front(); }
  [[nodiscard]] double max() const { return sorted.back(); }
};

struct ProfileOptions {
  ProfileMode mode = ProfileMode::Simple;
  /// 0 selects default_min_side.
  std::size_t min_side = 0;
  std::size_t k_neighbors = kDefaultKNeighbors;
  std::uint64_t seed = 0;
};

/// Knn profilers for each feature column. Feature i fits with stream
/// derive(seed, {i}).
std::vector<FeatureProfiler> fit_profilers(const Dataset& ds, std::size_t k_neighbors,
                                           std::uint64_t seed);

OODStatus classify_feature(const FeatureProfiler& feature, double x, const ProfileOptions& options);

Profile compute_profile(std::span<const FeatureProfiler> features, std::span<const double> x,
                        const ProfileOptions& options = {});

/// Builds profilers from `detectors` over the dataset columns, then
/// classifies.
Profile compute_profile(const Dataset& ds, std::span<const double> x,
                        std::span<const DetectorModel> detectors,
                        const ProfileOptions& options = {});

}  // namespace insideout
