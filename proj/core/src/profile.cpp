#include "insideout/profile.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace insideout {

std::string_view to_string(OODStatus status) noexcept {
  switch (status) {
    case OODStatus::No: return "no";
    case OODStatus::Inside: return "inside";
    case OODStatus::Outside: return "outside";
  }
  return "?";
}

OODStatus status_from_string(std::string_view name) {
  if (name == "no") return OODStatus::No;
  if (name == "inside") return OODStatus::Inside;
  if (name == "outside") return OODStatus::Outside;
  fail(ErrorCode::ParseError, fmt::format("unknown OOD status '{}'", name));
}

Profile::Profile(std::vector<OODStatus> statuses) : statuses_(std::move(statuses)) {
  for (auto s : statuses_) {
    switch (s) {
      case OODStatus::No: ++counts_.no; break;
      case OODStatus::Inside: ++counts_.inside; break;
      case OODStatus::Outside: ++counts_.outside; break;
    }
  }
}

Profile Profile::from_counts(const ProfileCounts& counts) {
  std::vector<OODStatus> statuses;
  statuses.reserve(counts.total());
  statuses.insert(statuses.end(), counts.inside, OODStatus::Inside);
  statuses.insert(statuses.end(), counts.outside, OODStatus::Outside);
  statuses.insert(statuses.end(), counts.no, OODStatus::No);
  return Profile(std::move(statuses));
}

std::string_view to_string(ProfileMode mode) noexcept {
  return mode == ProfileMode::Simple ? "simple" : "robust";
}

ProfileMode profile_mode_from_string(std::string_view name) {
  if (name == "simple") return ProfileMode::Simple;
  if (name == "robust") return ProfileMode::Robust;
  fail(ErrorCode::InvalidArgument, fmt::format("mode must be simple or robust (got '{}')", name));
}

DetectorFitter knn_fitter(std::size_t k_neighbors, RandomStream rng) {
  return [k_neighbors, rng](std::span<const double> column) -> DetectorModel {
    RandomStream local = rng;
    return fit_knn(column, std::min(k_neighbors, column.size()), local);
  };
}

OODStatus classify_simple(double column_min, double column_max, double x,
                          const DetectorModel& detector) {
  if (!is_ood(detector, x)) return OODStatus::No;
  return (column_min < x && x < column_max) ? OODStatus::Inside : OODStatus::Outside;
}

OODStatus classify_simple(std::span<const double> column, double x,
                          const DetectorModel& detector) {
  require(!column.empty(), ErrorCode::EmptyColumn, "cannot classify against an empty column");
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  return classify_simple(*lo, *hi, x, detector);
}

std::size_t default_min_side(std::size_t column_size) noexcept {
  const auto two_percent =
      static_cast<std::size_t>(std::ceil(0.02 * static_cast<double>(column_size)));
  return std::max<std::size_t>(20, two_percent);
}

OODStatus classify_robust(std::span<const double> column, double x,
                          const DetectorModel& full_detector, const DetectorFitter& fitter,
                          std::size_t min_side) {
  require(!column.empty(), ErrorCode::EmptyColumn, "cannot classify against an empty column");
  require(min_side >= 1, ErrorCode::InvalidArgument, "min_side must be >= 1");
  if (!is_ood(full_detector, x)) return OODStatus::No;
  std::vector<double> left;
  std::vector<double> right;
  for (double v : column) {
    if (v < x) left.push_back(v);
    if (v > x) right.push_back(v);
  }
  if (left.size() < min_side || right.size() < min_side) return OODStatus::Outside;
  const bool left_flags = is_ood(fitter(left), x);
  const bool right_flags = is_ood(fitter(right), x);
  return (left_flags && right_flags) ? OODStatus::Inside : OODStatus::Outside;
}

FeatureProfiler::FeatureProfiler(std::span<const double> column, DetectorModel model)
    : sorted(column.begin(), column.end()), detector(std::move(model)) {
  require(!sorted.empty(), ErrorCode::EmptyColumn, "cannot profile an empty column");
  std::sort(sorted.begin(), sorted.end());
}

std::vector<FeatureProfiler> fit_profilers(const Dataset& ds, std::size_t k_neighbors,
                                           std::uint64_t seed) {
  std::vector<FeatureProfiler> out;
  out.reserve(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto column = ds.features.column(i);
    auto rng = RandomStream::derive(seed, {i});
    out.emplace_back(column, fit_knn(column, k_neighbors, rng));
  }
  return out;
}

OODStatus classify_feature(const FeatureProfiler& feature, double x,
                           const ProfileOptions& options) {
  if (options.mode == ProfileMode::Simple) {
    return classify_simple(feature.min(), feature.max(), x, feature.detector);
  }
  const std::size_t min_side =
      options.min_side > 0 ? options.min_side : default_min_side(feature.sorted.size());
  const auto fitter = knn_fitter(options.k_neighbors, RandomStream::derive(options.seed, {0}));
  return classify_robust(feature.sorted, x, feature.detector, fitter, min_side);
}

Profile compute_profile(std::span<const FeatureProfiler> features, std::span<const double> x,
                        const ProfileOptions& options) {
  require(features.size() == x.size(), ErrorCode::DimensionMismatch,
          fmt::format("sample has {} coordinates for {} features", x.size(), features.size()));
  std::vector<OODStatus> statuses(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) statuses[i] = classify_feature(features[i], x[i], options);
  return Profile(std::move(statuses));
}

Profile compute_profile(const Dataset& ds, std::span<const double> x,
                        std::span<const DetectorModel> detectors, const ProfileOptions& options) {
  require(detectors.size() == ds.n() && x.size() == ds.n(), ErrorCode::DimensionMismatch,
          fmt::format("dataset has {} features, sample {} and detectors {}", ds.n(), x.size(),
                      detectors.size()));
  std::vector<FeatureProfiler> profilers;
  profilers.reserve(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    profilers.emplace_back(ds.features.column(i), detectors[i]);
  }
  return compute_profile(profilers, x, options);
}

}  // namespace insideout
