#include "insideout/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

namespace insideout {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const ComponentDistribution::Params& params) {
  std::visit(
      overloaded{
          [](const Gaussian& g) {
            require(std::isfinite(g.mean) && g.stddev > 0.0 && std::isfinite(g.stddev),
                    ErrorCode::InvalidArgument,
                    fmt::format("Gaussian needs finite mean and stddev > 0 (got {}, {})", g.mean,
                                g.stddev));
          },
          [](const Uniform& u) {
            require(std::isfinite(u.lo) && std::isfinite(u.hi) && u.lo < u.hi,
                    ErrorCode::InvalidArgument,
                    fmt::format("Uniform needs lo < hi (got {}, {})", u.lo, u.hi));
          },
          [](const Exponential& e) {
            require(e.rate > 0.0 && std::isfinite(e.rate), ErrorCode::InvalidArgument,
                    fmt::format("Exponential needs rate > 0 (got {})", e.rate));
          },
          [](const Weibull& w) {
            require(w.scale > 0.0 && std::isfinite(w.scale) && w.shape >= 1.0 &&
                        std::isfinite(w.shape),
                    ErrorCode::InvalidArgument,
                    fmt::format("Weibull needs scale > 0 and shape >= 1 (got {}, {})", w.scale,
                                w.shape));
          },
          [](const Beta& b) {
            require(b.alpha > 0.0 && b.beta > 0.0 && std::isfinite(b.alpha) &&
                        std::isfinite(b.beta),
                    ErrorCode::InvalidArgument,
                    fmt::format("Beta needs alpha, beta > 0 (got {}, {})", b.alpha, b.beta));
          },
      },
      params);
}

/// Uniform on (0, hi].
double positive_upto(RandomStream& rng, double hi) { return hi * (1.0 - rng.uniform01()); }

}  // namespace

std::string_view to_string(DistributionKind kind) noexcept {
  switch (kind) {
    case DistributionKind::Gaussian: return "gaussian";
    case DistributionKind::Uniform: return "uniform";
    case DistributionKind::Exponential: return "exponential";
    case DistributionKind::Weibull: return "weibull";
    case DistributionKind::Beta: return "beta";
  }
  return "unknown";
}

DistributionKind distribution_kind_from_string(std::string_view name) {
  if (name == "gaussian") return DistributionKind::Gaussian;
  if (name == "uniform") return DistributionKind::Uniform;
  if (name == "exponential") return DistributionKind::Exponential;
  if (name == "weibull") return DistributionKind::Weibull;
  if (name == "beta") return DistributionKind::Beta;
  fail(ErrorCode::ParseError, fmt::format("unknown distribution family '{}'", name));
}

ComponentDistribution::ComponentDistribution(Params params) : params_(params) {
  validate(params_);
}

DistributionKind ComponentDistribution::kind() const noexcept {
  return static_cast<DistributionKind>(params_.index());
}

double ComponentDistribution::sample(RandomStream& rng) const {
  return std::visit(
      overloaded{
          [&](const Gaussian& g) { return rng.normal(g.mean, g.stddev); },
          [&](const Uniform& u) { return rng.uniform(u.lo, u.hi); },
          [&](const Exponential& e) { return rng.exponential(e.rate); },
          [&](const Weibull& w) { return rng.weibull(w.scale, w.shape); },
          [&](const Beta& b) { return rng.beta(b.alpha, b.beta); },
      },
      params_);
}

double ComponentDistribution::pdf(double x) const {
  return std::visit(
      overloaded{
          [x](const Gaussian& g) {
            const double z = (x - g.mean) / g.stddev;
            return std::exp(-0.5 * z * z) / (g.stddev * std::sqrt(2.0 * std::numbers::pi));
          },
          [x](const Uniform& u) { return (x >= u.lo && x < u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
          [x](const Exponential& e) { return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
          [x](const Weibull& w) {
            if (x < 0.0) return 0.0;
            const double t = x / w.scale;
            return (w.shape / w.scale) * std::pow(t, w.shape - 1.0) *
                   std::exp(-std::pow(t, w.shape));
          },
          [x](const Beta& b) {
            if (x <= 0.0 || x >= 1.0) return 0.0;
            const double log_norm =
                std::lgamma(b.alpha + b.beta) - std::lgamma(b.alpha) - std::lgamma(b.beta);
            return std::exp(log_norm + (b.alpha - 1.0) * std::log(x) +
                            (b.beta - 1.0) * std::log1p(-x));
          },
      },
      params_);
}

double ComponentDistribution::cdf(double x) const {
  return std::visit(
      overloaded{
          [x](const Gaussian& g) {
            return 0.5 * std::erfc(-(x - g.mean) / (g.stddev * std::numbers::sqrt2));
          },
          [x](const Uniform& u) {
            if (x <= u.lo) return 0.0;
            if (x >= u.hi) return 1.0;
            return (x - u.lo) / (u.hi - u.lo);
          },
          [x](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
          [x](const Weibull& w) {
            return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / w.scale, w.shape));
          },
          [x](const Beta& b) {
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::ibeta(b.alpha, b.beta, x);
          },
      },
      params_);
}

double ComponentDistribution::mean() const {
  return std::visit(
      overloaded{
          [](const Gaussian& g) { return g.mean; },
          [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
          [](const Exponential& e) { return 1.0 / e.rate; },
          [](const Weibull& w) { return w.scale * std::tgamma(1.0 + 1.0 / w.shape); },
          [](const Beta& b) { return b.alpha / (b.alpha + b.beta); },
      },
      params_);
}

ComponentDistribution random_component(RandomStream& rng, const ComponentRanges& r) {
  switch (rng.uniform_index(5)) {
    case 0:
      return ComponentDistribution::gaussian(rng.uniform(r.gaussian_mean_lo, r.gaussian_mean_hi),
                                             positive_upto(rng, r.gaussian_stddev_hi));
    case 1: {
      double lo = 0.0;
      double hi = 0.0;
      do {
        lo = rng.uniform(r.uniform_lo, r.uniform_hi);
        hi = rng.uniform(r.uniform_lo, r.uniform_hi);
      } while (lo == hi);
      if (hi < lo) std::swap(lo, hi);
      return ComponentDistribution::uniform(lo, hi);
    }
    case 2:
      return ComponentDistribution::exponential(positive_upto(rng, r.exponential_rate_hi));
    case 3: {
      const double scale = positive_upto(rng, r.weibull_scale_hi);
      const double shape = rng.uniform(r.weibull_shape_lo, r.weibull_shape_hi);
      return ComponentDistribution::weibull(scale, shape);
    }
    default: {
      const double alpha = positive_upto(rng, r.beta_alpha_hi);
      const double beta = positive_upto(rng, r.beta_beta_hi);
      return ComponentDistribution::beta(alpha, beta);
    }
  }
}

MixtureDistribution::MixtureDistribution(std::vector<ComponentDistribution> components,
                                         std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  require(!components_.empty(), ErrorCode::InvalidArgument, "mixture needs >= 1 component");
  require(components_.size() == weights_.size(), ErrorCode::InvalidArgument,
          fmt::format("mixture has {} components but {} weights", components_.size(),
                      weights_.size()));
  double total = 0.0;
  bool any_positive = false;
  cumulative_.reserve(weights_.size());
  for (double w : weights_) {
    require(w >= 0.0 && std::isfinite(w), ErrorCode::InvalidArgument,
            fmt::format("mixture weight {} is not a finite non-negative value", w));
    any_positive = any_positive || w > 0.0;
    total += w;
    cumulative_.push_back(total);
  }
  require(any_positive, ErrorCode::InvalidArgument, "mixture weights are all zero");
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          fmt::format("mixture weights sum to {}, expected 1", total));
}

namespace {
std::vector<double> equal_weights(std::size_t n) {
  return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}
}  // namespace

MixtureDistribution::MixtureDistribution(std::vector<ComponentDistribution> components)
    : MixtureDistribution(components, equal_weights(components.size())) {}

double MixtureDistribution::sample(RandomStream& rng) const {
  const double u = rng.uniform01() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  auto index = static_cast<std::size_t>(it - cumulative_.begin());
  index = std::min(index, components_.size() - 1);
  // Rounding at the top end can land on trailing zero-weight components.
  while (weights_[index] == 0.0 && index > 0) --index;
  return components_[index].sample(rng);
}

double MixtureDistribution::pdf(double x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] > 0.0) total += weights_[i] * components_[i].pdf(x);
  }
  return total;
}

double MixtureDistribution::cdf(double x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] > 0.0) total += weights_[i] * components_[i].cdf(x);
  }
  return std::clamp(total, 0.0, 1.0);
}

ObservableWindow::ObservableWindow(double a1, double b1, double a2, double b2)
    : a1_(a1), b1_(b1), a2_(a2), b2_(b2) {
  require(std::isfinite(a1) && std::isfinite(b2) && a1 < b1 && b1 < a2 && a2 < b2,
          ErrorCode::InvalidArgument,
          fmt::format("window needs a1 < b1 < a2 < b2 (got {}, {}, {}, {})", a1, b1, a2, b2));
}

double sample_truncated(const std::function<double()>& candidate, const ObservableWindow& window,
                        std::size_t max_rejections) {
  for (std::size_t rejected = 0;; ++rejected) {
    if (rejected >= max_rejections) {
      fail(ErrorCode::RejectionBudgetExceeded,
           fmt::format("{} consecutive draws fell outside [{}, {}] U [{}, {}]", rejected,
                       window.a1(), window.b1(), window.a2(), window.b2()));
    }
    const double c = candidate();
    if (window.contains(c)) return c;
  }
}

double sample_truncated(const MixtureDistribution& mixture, const ObservableWindow& window,
                        RandomStream& rng, std::size_t max_rejections) {
  return sample_truncated([&] { return mixture.sample(rng); }, window, max_rejections);
}

double window_mass(const MixtureDistribution& mixture, const ObservableWindow& window) {
  const double first = mixture.cdf(window.b1()) - mixture.cdf(window.a1());
  const double second = mixture.cdf(window.b2()) - mixture.cdf(window.a2());
  return std::max(0.0, first) + std::max(0.0, second);
}

}  // namespace insideout
