#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "insideout/error.hpp"
#include "insideout/random.hpp"

namespace insideout {

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
  bool operator==(const Gaussian&) const = default;
};
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Uniform&) const = default;
};
struct Exponential {
  double rate = 1.0;
  bool operator==(const Exponential&) const = default;
};
struct Weibull {
  double scale = 1.0;
  double shape = 1.0;
  bool operator==(const Weibull&) const = default;
};
struct Beta {
  double alpha = 1.0;
  double beta = 1.0;
  bool operator==(const Beta&) const = default;
};

enum class DistributionKind { Gaussian, Uniform, Exponential, Weibull, Beta };

std::string_view to_string(DistributionKind kind) noexcept;
DistributionKind distribution_kind_from_string(std::string_view name);

/// One of the five base families. Parameters are validated on construction
/// and the object is immutable afterwards.
class ComponentDistribution {
 public:
  using Params = std::variant<Gaussian, Uniform, Exponential, Weibull, Beta>;

  explicit ComponentDistribution(Params params);

  static ComponentDistribution gaussian(double mean, double stddev) {
    return ComponentDistribution(Gaussian{mean, stddev});
  }
  static ComponentDistribution uniform(double lo, double hi) {
    return ComponentDistribution(Uniform{lo, hi});
  }
  static ComponentDistribution exponential(double rate) {
    return ComponentDistribution(Exponential{rate});
  }
  static ComponentDistribution weibull(double scale, double shape) {
    return ComponentDistribution(Weibull{scale, shape});
  }
  static ComponentDistribution beta(double alpha, double beta) {
    return ComponentDistribution(Beta{alpha, beta});
  }

  [[nodiscard]] DistributionKind kind() const noexcept;
  [[nodiscard]] const Params& params() const noexcept { return params_; }

  double sample(RandomStream& rng) const;
  [[nodiscard]] double pdf(double x) const;
  [[nodiscard]] double cdf(double x) const;
  [[nodiscard]] double mean() const;

  friend bool operator==(const ComponentDistribution&, const ComponentDistribution&) = default;

 private:
  Params params_;
};

/// Parameter ranges used when drawing random components. Defaults are the
/// hyperparameter table values with the degenerate (non-positive) scale
/// parameters excluded.
struct ComponentRanges {
  double gaussian_mean_lo = -5.0, gaussian_mean_hi = 5.0;
  double gaussian_stddev_hi = 10.0;
  double uniform_lo = -10.0, uniform_hi = 10.0;
  double exponential_rate_hi = 10.0;
  double weibull_scale_hi = 5.0;
  double weibull_shape_lo = 1.0, weibull_shape_hi = 5.0;
  double beta_alpha_hi = 5.0;
  double beta_beta_hi = 5.0;
};

/// Uniformly chosen family with parameters uniform over `ranges`.
ComponentDistribution random_component(RandomStream& rng,
                                       const ComponentRanges& ranges = {});

class MixtureDistribution {
 public:
  /// weights must be non-negative, contain a positive entry, and sum to 1
  /// within 1e-9.
  MixtureDistribution(std::vector<ComponentDistribution> components,
                      std::vector<double> weights);

  /// Equal-weight mixture.
  explicit MixtureDistribution(std::vector<ComponentDistribution> components);

  [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
  [[nodiscard]] const std::vector<ComponentDistribution>& components() const noexcept {
    return components_;
  }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

  /// Picks a component by weight, then draws from it.
  double sample(RandomStream& rng) const;
  [[nodiscard]] double pdf(double x) const;
  [[nodiscard]] double cdf(double x) const;

  friend bool operator==(const MixtureDistribution&, const MixtureDistribution&) = default;

 private:
  std::vector<ComponentDistribution> components_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Observable values [a1, b1] U [a2, b2] with a1 < b1 < a2 < b2.
class ObservableWindow {
 public:
  ObservableWindow(double a1, double b1, double a2, double b2);

  [[nodiscard]] double a1() const noexcept { return a1_; }
  [[nodiscard]] double b1() const noexcept { return b1_; }
  [[nodiscard]] double a2() const noexcept { return a2_; }
  [[nodiscard]] double b2() const noexcept { return b2_; }

  [[nodiscard]] bool contains(double x) const noexcept {
    return (a1_ <= x && x <= b1_) || (a2_ <= x && x <= b2_);
  }
  /// Width of the unobserved interval (b1, a2).
  [[nodiscard]] double gap() const noexcept { return a2_ - b1_; }
  /// b2 - a1.
  [[nodiscard]] double span() const noexcept { return b2_ - a1_; }

  friend bool operator==(const ObservableWindow&, const ObservableWindow&) = default;

 private:
  double a1_, b1_, a2_, b2_;
};

inline constexpr std::size_t kDefaultMaxRejections = 10'000;

/// Rejection sampling against an arbitrary candidate source. Throws
/// RejectionBudgetExceeded after `max_rejections` consecutive misses.
double sample_truncated(const std::function<double()>& candidate,
                        const ObservableWindow& window,
                        std::size_t max_rejections = kDefaultMaxRejections);

double sample_truncated(const MixtureDistribution& mixture, const ObservableWindow& window,
                        RandomStream& rng,
                        std::size_t max_rejections = kDefaultMaxRejections);

/// Probability that a draw from `mixture` lands inside `window`.
double window_mass(const MixtureDistribution& mixture, const ObservableWindow& window);

}  // namespace insideout
