#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "insideout/distributions.hpp"
#include "stats_helpers.hpp"

using namespace insideout;

namespace {

double integrate(const auto& f, double lo, double hi, int steps = 200'000) {
  // Composite Simpson.
  const double h = (hi - lo) / steps;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < steps; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

std::vector<double> draws(const auto& dist, std::size_t count, RandomStream rng) {
  std::vector<double> out(count);
  for (auto& v : out) v = dist.sample(rng);
  return out;
}

}  // namespace

TEST(Component, UniformSupport) {
  RandomStream rng(1);
  const auto u = ComponentDistribution::uniform(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double v = u.sample(rng);
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Component, TinyGaussianCollapses) {
  RandomStream rng(2);
  const auto g = ComponentDistribution::gaussian(0.0, 1e-9);
  for (int i = 0; i < 1000; ++i) ASSERT_LT(std::abs(g.sample(rng)), 1e-6);
}

TEST(Component, ExponentialMean) {
  const auto e = ComponentDistribution::exponential(2.0);
  const auto v = draws(e, 100'000, RandomStream(3));
  EXPECT_NEAR(testing_stats::mean(v), 0.5, 0.01);
}

TEST(Component, RejectsInvalidParameters) {
  EXPECT_THROW(ComponentDistribution::gaussian(0.0, -1.0), Error);
  EXPECT_THROW(ComponentDistribution::uniform(1.0, 1.0), Error);
  EXPECT_THROW(ComponentDistribution::exponential(0.0), Error);
  EXPECT_THROW(ComponentDistribution::weibull(0.0, 1.0), Error);
  EXPECT_THROW(ComponentDistribution::beta(1.0, 0.0), Error);
}

TEST(Component, PdfPointValues) {
  EXPECT_DOUBLE_EQ(ComponentDistribution::uniform(0.0, 1.0).pdf(0.5), 1.0);
  EXPECT_NEAR(ComponentDistribution::gaussian(0.0, 1.0).pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi),
              1e-12);
}

TEST(Component, PdfIntegratesToOne) {
  const std::vector<std::pair<ComponentDistribution, std::pair<double, double>>> cases{
      {ComponentDistribution::gaussian(1.0, 2.0), {-30.0, 30.0}},
      {ComponentDistribution::uniform(-2.0, 3.0), {-2.0, 3.0}},
      {ComponentDistribution::exponential(1.5), {0.0, 40.0}},
      {ComponentDistribution::weibull(2.0, 3.0), {0.0, 20.0}},
      {ComponentDistribution::beta(2.0, 3.0), {0.0, 1.0}},
  };
  for (const auto& [dist, range] : cases) {
    const double mass = integrate([&](double x) { return dist.pdf(x); }, range.first, range.second);
    EXPECT_NEAR(mass, 1.0, 1e-3) << to_string(dist.kind());
  }
}

TEST(Component, CdfMatchesSamples) {
  const auto w = ComponentDistribution::weibull(2.0, 1.5);
  const auto v = draws(w, 20000, RandomStream(4));
  for (double x : {0.5, 1.0, 2.0, 4.0}) {
    const auto below = std::count_if(v.begin(), v.end(), [&](double s) { return s <= x; });
    EXPECT_NEAR(static_cast<double>(below) / v.size(), w.cdf(x), 0.015) << x;
  }
}

TEST(Mixture, SingleComponentReduces) {
  const MixtureDistribution m({ComponentDistribution::uniform(0.0, 1.0)});
  RandomStream rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = m.sample(rng);
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Mixture, SymmetricWeights) {
  const MixtureDistribution m(
      {ComponentDistribution::gaussian(-5.0, 0.1), ComponentDistribution::gaussian(5.0, 0.1)},
      {0.5, 0.5});
  const auto v = draws(m, 10000, RandomStream(6));
  const auto negative = std::count_if(v.begin(), v.end(), [](double x) { return x < 0.0; });
  EXPECT_NEAR(static_cast<double>(negative) / v.size(), 0.5, 0.02);
}

TEST(Mixture, ZeroWeightComponentIsNeverUsed) {
  const auto first = ComponentDistribution::gaussian(0.0, 1.0);
  const MixtureDistribution m({first, ComponentDistribution::uniform(50.0, 60.0)}, {1.0, 0.0});
  const auto mixed = draws(m, 10000, RandomStream(7));
  const auto alone = draws(first, 10000, RandomStream(8));
  EXPECT_GT(testing_stats::ks_two_sample_p(mixed, alone), 0.01);
}

TEST(Mixture, RejectsBadWeights) {
  const auto c = ComponentDistribution::uniform(0.0, 1.0);
  EXPECT_THROW(MixtureDistribution({c, c}, {0.6, 0.6}), Error);
  EXPECT_THROW(MixtureDistribution({c, c}, {1.5, -0.5}), Error);
  EXPECT_THROW(MixtureDistribution({c}, {0.5, 0.5}), Error);
  EXPECT_THROW(MixtureDistribution(std::vector<ComponentDistribution>{}), Error);
}

TEST(Mixture, PdfIsWeightedSum) {
  const MixtureDistribution m(
      {ComponentDistribution::uniform(0.0, 1.0), ComponentDistribution::uniform(2.0, 3.0)});
  EXPECT_DOUBLE_EQ(m.pdf(2.5), 0.5);
}

TEST(Mixture, RandomMixturePdfIntegratesToOne) {
  RandomStream rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<ComponentDistribution> parts;
    for (int i = 0; i < 4; ++i) parts.push_back(random_component(rng));
    const MixtureDistribution m(parts);
    // Weibull/beta densities can be singular at 0 for shape < 1; integrate
    // the cdf difference instead of the density near the origin.
    const double mass = m.cdf(200.0) - m.cdf(-200.0);
    EXPECT_NEAR(mass, 1.0, 1e-3);
  }
}

TEST(Window, RequiresStrictOrder) {
  EXPECT_THROW(ObservableWindow(0.0, 0.0, 1.0, 2.0), Error);
  EXPECT_THROW(ObservableWindow(0.0, 2.0, 1.0, 3.0), Error);
  EXPECT_NO_THROW(ObservableWindow(-2.0, -1.0, 1.0, 2.0));
}

TEST(Truncated, RejectsUntilInsideWindow) {
  const ObservableWindow win(-2.0, -1.0, 1.0, 2.0);
  const std::vector<double> stream{0.0, 1.5};
  std::size_t next = 0;
  EXPECT_DOUBLE_EQ(sample_truncated([&] { return stream[next++]; }, win), 1.5);
}

TEST(Truncated, AcceptedValuesLieInWindow) {
  const ObservableWindow win(-2.0, -1.0, 1.0, 2.0);
  const MixtureDistribution m({ComponentDistribution::uniform(-3.0, 3.0)});
  RandomStream rng(10);
  for (int i = 0; i < 5000; ++i) ASSERT_TRUE(win.contains(sample_truncated(m, win, rng)));
}

TEST(Truncated, DisjointSupportExhaustsBudget) {
  const ObservableWindow win(5.0, 6.0, 7.0, 8.0);
  const MixtureDistribution m({ComponentDistribution::uniform(0.0, 1.0)});
  RandomStream rng(11);
  try {
    sample_truncated(m, win, rng, 1000);
    FAIL() << "expected RejectionBudgetExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RejectionBudgetExceeded);
  }
}

TEST(Truncated, WindowMassMatchesCdf) {
  const MixtureDistribution m({ComponentDistribution::uniform(0.0, 10.0)});
  EXPECT_NEAR(window_mass(m, ObservableWindow(1.0, 2.0, 5.0, 8.0)), 0.4, 1e-12);
}
