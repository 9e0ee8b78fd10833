#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "insideout/datagen.hpp"
#include "stats_helpers.hpp"

using namespace insideout;

namespace {

FeatureSpec unit_spec(double a1, double b1, double a2, double b2, double sigma,
                      double lo = -200.0, double hi = 200.0) {
  return FeatureSpec(MixtureDistribution({ComponentDistribution::uniform(lo, hi)}),
                     ObservableWindow(a1, b1, a2, b2), sigma);
}

DatasetSpec linear_spec(std::size_t k) {
  DatasetSpec spec;
  spec.n = 2;
  spec.k = k;
  spec.features = {unit_spec(-100.0, -1.0, 1.0, 100.0, 0.1),
                   unit_spec(0.0, 1.0, 5.0, 6.0, 0.1, -1.0, 7.0)};
  spec.target_tree = ExpressionTree::parse("(var 0)");
  spec.target_noise_sigma = 0.1;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST(FeatureSpecGen, DeterministicPerSeed) {
  RandomStream a(3);
  RandomStream b(3);
  EXPECT_EQ(random_feature_spec(a), random_feature_spec(b));
}

TEST(FeatureSpecGen, InvariantsHold) {
  RandomStream rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto spec = random_feature_spec(rng);
    const auto& w = spec.window;
    ASSERT_TRUE(w.a1() < w.b1() && w.b1() < w.a2() && w.a2() < w.b2());
    ASSERT_GE(spec.mixture.size(), 1u);
    ASSERT_LE(spec.mixture.size(), 20u);
    ASSERT_GT(spec.noise_sigma, 0.1);
    ASSERT_LT(spec.noise_sigma, 1.0);
    for (double wt : spec.mixture.weights()) ASSERT_DOUBLE_EQ(wt, 1.0 / spec.mixture.size());
  }
}

TEST(FeatureSpecGen, ComponentCountIsUniform) {
  // With window screening disabled the component count is the raw draw.
  HyperRanges ranges;
  ranges.min_window_mass = 0.0;
  ranges.min_interval_share = 0.0;
  RandomStream rng(5);
  std::array<std::size_t, 20> counts{};
  for (int i = 0; i < 1000; ++i) ++counts[random_feature_spec(rng, ranges).mixture.size() - 1];
  EXPECT_GT(testing_stats::chi_square_uniform_p(counts), 0.01);
}

TEST(FeatureSpecGen, FixedComponentCount) {
  HyperRanges ranges;
  ranges.z_min = ranges.z_max = 1;
  RandomStream rng(6);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(random_feature_spec(rng, ranges).mixture.size(), 1u);
}

TEST(FeatureSpecGen, RejectsInvalidRanges) {
  HyperRanges ranges;
  ranges.z_min = 0;
  EXPECT_THROW(ranges.validate(), Error);
  ranges = {};
  ranges.noise_lo = 0.0;
  EXPECT_THROW(ranges.validate(), Error);
}

TEST(FeatureColumn, LengthAndFinite) {
  RandomStream rng(7);
  const auto spec = random_feature_spec(rng);
  const auto column = generate_feature(spec, 100, rng);
  ASSERT_EQ(column.size(), 100u);
  for (double v : column) EXPECT_TRUE(std::isfinite(v));
}

TEST(FeatureColumn, NoiseLeakageBound) {
  const auto spec = unit_spec(0.0, 1.0, 5.0, 6.0, 0.1, -1.0, 7.0);
  RandomStream rng(8);
  const auto column = generate_feature(spec, 10000, rng);
  const auto near = std::count_if(column.begin(), column.end(), [](double v) {
    return (v >= -0.5 && v <= 1.5) || (v >= 4.5 && v <= 6.5);
  });
  EXPECT_GE(static_cast<double>(near) / column.size(), 0.99);
}

TEST(FeatureColumn, CleanDrawsStayInWindow) {
  RandomStream rng(9);
  const auto spec = random_feature_spec(rng);
  const auto clean = sample_clean_feature(spec, 2000, rng);
  for (double v : clean) ASSERT_TRUE(spec.window.contains(v));
}

TEST(Dataset, ShapeAndDeterminism) {
  const auto spec = linear_spec(100);
  const auto a = generate_dataset(spec);
  EXPECT_EQ(a.features.rows(), 100u);
  EXPECT_EQ(a.features.cols(), 2u);
  EXPECT_EQ(a.target.size(), 100u);
  EXPECT_EQ(a, generate_dataset(spec));
}

TEST(Dataset, TargetTracksCleanFeature) {
  const auto detailed = generate_dataset_detailed(linear_spec(2000));
  const auto clean = detailed.clean_features.column(0);
  EXPECT_GT(testing_stats::correlation(detailed.data.target, clean), 0.99);
  for (std::size_t j = 0; j < clean.size(); ++j)
    EXPECT_DOUBLE_EQ(detailed.clean_target[j], clean[j]);
}

TEST(Dataset, ColumnHelperMatchesDataset) {
  const auto spec = linear_spec(300);
  const auto ds = generate_dataset(spec);
  for (std::size_t i = 0; i < spec.n; ++i)
    EXPECT_EQ(generate_dataset_column(spec.features[i], spec.k, spec.seed, i), ds.features.column(i));
}

TEST(Placement, NarrowGapIsRejected) {
  const auto spec = unit_spec(0.0, 1.0, 1.5, 6.0, 0.1, -1.0, 7.0);
  RandomStream rng(13);
  EXPECT_NO_THROW(sample_coordinate(spec, OODStatus::Outside, rng));
  try {
    sample_coordinate(spec, OODStatus::Inside, rng);
    FAIL() << "expected DegenerateGap";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGap);
  }
}

TEST(Placement, AllNoStaysInWindow) {
  RandomStream rng(10);
  const std::vector<FeatureSpec> specs{unit_spec(0.0, 1.0, 5.0, 6.0, 0.1, -1.0, 7.0),
                                       unit_spec(-10.0, -2.0, 3.0, 9.0, 0.2, -12.0, 12.0)};
  const Profile all_no(std::vector<OODStatus>{OODStatus::No, OODStatus::No});
  for (int i = 0; i < 1000; ++i) {
    const auto x = sample_with_profile(specs, all_no, rng);
    EXPECT_TRUE(specs[0].window.contains(x[0]));
    EXPECT_TRUE(specs[1].window.contains(x[1]));
  }
}

TEST(Placement, InsideAndOutsideRegions) {
  RandomStream rng(11);
  const auto spec = unit_spec(0.0, 1.0, 5.0, 6.0, 0.1, -1.0, 7.0);
  for (int i = 0; i < 2000; ++i) {
    const double in = sample_coordinate(spec, OODStatus::Inside, rng);
    ASSERT_GT(in, 1.2);
    ASSERT_LT(in, 4.8);
    const double out = sample_coordinate(spec, OODStatus::Outside, rng);
    ASSERT_TRUE((out > -6.0 && out < -0.3) || (out > 6.3 && out < 12.0)) << out;
  }
}

TEST(DatasetCsv, RoundTripIsExact) {
  RandomStream rng(12);
  const auto spec = random_dataset_spec(3, 50, rng);
  const auto ds = generate_dataset(spec);
  EXPECT_EQ(dataset_from_csv(dataset_to_csv(ds)), ds);
}

TEST(DatasetCsv, EmptyInputIsAnError) {
  EXPECT_THROW(dataset_from_csv(""), Error);
}

TEST(DatasetCsv, ShortRowNamesTheRow) {
  try {
    dataset_from_csv("f_0,f_1,y\n1,2,3\n4,5\n");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }
}
