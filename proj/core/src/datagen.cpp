#include "insideout/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace insideout {

FeatureSpec::FeatureSpec(MixtureDistribution mixture_, ObservableWindow window_, double sigma)
    : mixture(std::move(mixture_)), window(window_), noise_sigma(sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::InvalidArgument,
          fmt::format("noise_sigma must be > 0 (got {})", sigma));
}

void HyperRanges::validate() const {
  require(z_min >= 1 && z_min <= z_max, ErrorCode::InvalidArgument,
          fmt::format("z range [{}, {}] is invalid", z_min, z_max));
  require(noise_lo > 0.0 && noise_lo < noise_hi, ErrorCode::InvalidArgument,
          fmt::format("noise range ({}, {}) is invalid", noise_lo, noise_hi));
  require(window_lo < window_hi, ErrorCode::InvalidArgument,
          fmt::format("window range [{}, {}] is invalid", window_lo, window_hi));
  require(min_window_mass >= 0.0 && min_window_mass <= 1.0, ErrorCode::InvalidArgument,
          "min_window_mass must be in [0, 1]");
  require(min_interval_share >= 0.0 && min_interval_share <= 0.5, ErrorCode::InvalidArgument,
          "min_interval_share must be in [0, 0.5]");
  require(max_spec_attempts >= 1, ErrorCode::InvalidArgument, "max_spec_attempts must be >= 1");
}

namespace {

double open_uniform(RandomStream& rng, double lo, double hi) {
  double v = lo;
  while (v <= lo || v >= hi) v = rng.uniform(lo, hi);
  return v;
}

ObservableWindow random_window(RandomStream& rng, double lo, double hi) {
  constexpr double kMinSeparation = 1e-6;
  for (;;) {
    std::array<double, 4> v{};
    for (auto& x : v) x = rng.uniform(lo, hi);
    std::sort(v.begin(), v.end());
    if (v[1] - v[0] >= kMinSeparation && v[2] - v[1] >= kMinSeparation &&
        v[3] - v[2] >= kMinSeparation) {
      return ObservableWindow(v[0], v[1], v[2], v[3]);
    }
  }
}

}  // namespace

FeatureSpec random_feature_spec(RandomStream& rng, const HyperRanges& ranges) {
  ranges.validate();
  // Each attempt redraws the whole recipe: a narrow mixture rarely fits any
  // window drawn over the full range, so redrawing only the window can stall.
  for (std::size_t attempt = 0; attempt < ranges.max_spec_attempts; ++attempt) {
    const auto z = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(ranges.z_min), static_cast<std::int64_t>(ranges.z_max)));
    std::vector<ComponentDistribution> components;
    components.reserve(z);
    for (std::size_t i = 0; i < z; ++i) components.push_back(random_component(rng, ranges.components));
    MixtureDistribution mixture(std::move(components));
    const double sigma = open_uniform(rng, ranges.noise_lo, ranges.noise_hi);
    const auto window = random_window(rng, ranges.window_lo, ranges.window_hi);

    const double first = mixture.cdf(window.b1()) - mixture.cdf(window.a1());
    const double second = mixture.cdf(window.b2()) - mixture.cdf(window.a2());
    const double total = first + second;
    if (total >= ranges.min_window_mass && first >= ranges.min_interval_share * total &&
        second >= ranges.min_interval_share * total) {
      return FeatureSpec(std::move(mixture), window, sigma);
    }
  }
  fail(ErrorCode::SpecGenerationFailed,
       fmt::format("no window with acceptance mass >= {} and interval share >= {} in {} attempts",
                   ranges.min_window_mass, ranges.min_interval_share, ranges.max_spec_attempts));
}

void DatasetSpec::validate() const {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  require(features.size() == n, ErrorCode::InvalidArgument,
          fmt::format("spec declares n = {} but has {} feature specs", n, features.size()));
  require(target_tree.size() > 0, ErrorCode::InvalidArgument, "spec has no target tree");
  require(target_tree.required_features() <= n, ErrorCode::InvalidArgument,
          fmt::format("target tree references feature {} but n = {}",
                      target_tree.required_features() - 1, n));
  require(std::isfinite(target_noise_sigma) && target_noise_sigma >= 0.0,
          ErrorCode::InvalidArgument, "target_noise_sigma must be finite and >= 0");
}

DatasetSpec random_dataset_spec(std::size_t n, std::size_t k, RandomStream& rng,
                                const HyperRanges& ranges, std::size_t max_depth) {
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  DatasetSpec spec;
  spec.n = n;
  spec.k = k;
  spec.seed = rng.next_u64();
  spec.features.reserve(n);
  for (std::size_t i = 0; i < n; ++i) spec.features.push_back(random_feature_spec(rng, ranges));
  spec.target_tree = random_expression_tree(n, rng, max_depth);
  spec.target_noise_sigma = open_uniform(rng, ranges.noise_lo, ranges.noise_hi);
  return spec;
}

std::vector<double> sample_clean_feature(const FeatureSpec& spec, std::size_t k,
                                         RandomStream& rng) {
  std::vector<double> out(k);
  for (auto& v : out) v = sample_truncated(spec.mixture, spec.window, rng);
  return out;
}

std::vector<double> generate_feature(const FeatureSpec& spec, std::size_t k, RandomStream& rng) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  auto out = sample_clean_feature(spec, k, rng);
  for (auto& v : out) v += rng.normal(0.0, spec.noise_sigma);
  return out;
}

std::vector<double> generate_dataset_column(const FeatureSpec& spec, std::size_t k,
                                            std::uint64_t seed, std::size_t index,
                                            std::vector<double>* clean) {
  auto draw_rng = RandomStream::derive(seed, {kFeatureStream, index});
  auto noise_rng = RandomStream::derive(seed, {kFeatureNoiseStream, index});
  auto values = sample_clean_feature(spec, k, draw_rng);
  if (clean != nullptr) *clean = values;
  for (auto& v : values) v += noise_rng.normal(0.0, spec.noise_sigma);
  return values;
}

GeneratedDataset generate_dataset_detailed(const DatasetSpec& spec) {
  spec.validate();
  GeneratedDataset out;
  out.clean_features = Matrix(spec.k, spec.n);
  out.data.features = Matrix(spec.k, spec.n);
  std::vector<double> clean;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto noisy = generate_dataset_column(spec.features[i], spec.k, spec.seed, i, &clean);
    out.clean_features.set_column(i, clean);
    out.data.features.set_column(i, noisy);
  }
  auto target_rng = RandomStream::derive(spec.seed, {kTargetNoiseStream});
  out.clean_target.resize(spec.k);
  out.data.target.resize(spec.k);
  for (std::size_t j = 0; j < spec.k; ++j) {
    out.clean_target[j] = spec.target_tree.evaluate(out.clean_features.row(j));
    out.data.target[j] = out.clean_target[j] + target_rng.normal(0.0, spec.target_noise_sigma);
  }
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  return std::move(generate_dataset_detailed(spec).data);
}

PlacementMargins placement_margins(const ObservableWindow& window) noexcept {
  return {0.05 * window.gap(), 0.05 * window.span(), window.span()};
}

double sample_coordinate(const FeatureSpec& spec, OODStatus status, RandomStream& rng) {
  const auto& w = spec.window;
  const auto m = placement_margins(w);
  switch (status) {
    case OODStatus::No: return sample_truncated(spec.mixture, w, rng);
    case OODStatus::Inside:
      require(w.gap() >= 10.0 * spec.noise_sigma, ErrorCode::DegenerateGap,
              fmt::format("gap {} is narrower than 10 * noise_sigma = {}", w.gap(),
                          10.0 * spec.noise_sigma));
      return open_uniform(rng, w.b1() + m.inside, w.a2() - m.inside);
    case OODStatus::Outside:
      if (rng.bernoulli(0.5)) return open_uniform(rng, w.a1() - m.outside_span, w.a1() - m.outside);
      return open_uniform(rng, w.b2() + m.outside, w.b2() + m.outside_span);
  }
  return 0.0;
}

Sample sample_with_profile(std::span<const FeatureSpec> specs, const Profile& desired,
                           RandomStream& rng) {
  require(specs.size() == desired.size(), ErrorCode::DimensionMismatch,
          fmt::format("profile has {} statuses for {} features", desired.size(), specs.size()));
  Sample x(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) x[i] = sample_coordinate(specs[i], desired[i], rng);
  return x;
}

}  // namespace insideout
