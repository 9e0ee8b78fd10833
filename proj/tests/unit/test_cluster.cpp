#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "insideout/cluster.hpp"

using namespace insideout;

namespace {

Matrix gaussian_blob_1d(std::size_t count, double center, double sd, RandomStream& rng) {
  Matrix m(count, 1);
  for (std::size_t i = 0; i < count; ++i) m(i, 0) = rng.normal(center, sd);
  return m;
}

Matrix stack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c);
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) out(a.rows() + r, c) = b(r, c);
  return out;
}

}  // namespace

TEST(KMeans, SingleCenterIsTheMean) {
  RandomStream rng(1);
  const Matrix pts = gaussian_blob_1d(200, 3.0, 2.0, rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i) mean += pts(i, 0);
  mean /= static_cast<double>(pts.rows());
  const auto c = kmeans(pts, 1, rng);
  EXPECT_NEAR(c.centers(0, 0), mean, 1e-12);
}

TEST(KMeans, PointMassesRecoveredExactly) {
  Matrix pts(100, 1);
  for (std::size_t i = 0; i < 100; ++i) pts(i, 0) = i < 50 ? 0.0 : 10.0;
  RandomStream rng(2);
  const auto c = kmeans(pts, 2, rng);
  std::vector<double> centers{c.centers(0, 0), c.centers(1, 0)};
  std::sort(centers.begin(), centers.end());
  EXPECT_EQ(centers[0], 0.0);
  EXPECT_EQ(centers[1], 10.0);
}

TEST(KMeans, DistinctPointsGiveZeroObjective) {
  Matrix pts(4, 2, std::vector<double>{0, 0, 1, 0, 0, 1, 5, 5});
  RandomStream rng(3);
  const auto c = kmeans(pts, 4, rng);
  EXPECT_NEAR(kmeans_objective(pts, c.centers, c.assignment), 0.0, 1e-12);
}

TEST(KMeans, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream rng(seed);
    const Matrix pts = stack(gaussian_blob_1d(120, 0.0, 1.0, rng), gaussian_blob_1d(80, 4.0, 2.0, rng));
    for (std::size_t k = 1; k <= 6; ++k) {
      const auto c = kmeans(pts, k, rng);
      for (std::size_t i = 1; i < c.objective_history.size(); ++i)
        ASSERT_LE(c.objective_history[i], c.objective_history[i - 1] * (1 + 1e-12));
    }
  }
}

TEST(KMeans, InvalidK) {
  Matrix pts(3, 1, std::vector<double>{0, 1, 2});
  RandomStream rng(4);
  EXPECT_THROW(kmeans(pts, 0, rng), Error);
  EXPECT_THROW(kmeans(pts, 4, rng), Error);
}

TEST(XMeans, TightBlobStaysWhole) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    const Matrix pts = gaussian_blob_1d(500, 0.0, 0.1, rng);
    if (xmeans(pts, 1, 10, rng).k() == 1) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(XMeans, TwoBlobsSplit) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    const Matrix pts = stack(gaussian_blob_1d(250, -10.0, 0.5, rng), gaussian_blob_1d(250, 10.0, 0.5, rng));
    if (xmeans(pts, 1, 10, rng).k() == 2) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(XMeans, FixedKWhenBoundsMeet) {
  RandomStream rng(5);
  const Matrix pts = gaussian_blob_1d(300, 0.0, 1.0, rng);
  EXPECT_EQ(xmeans(pts, 3, 3, rng).k(), 3u);
}

TEST(Diameter, MaxPairwiseDistance) {
  const Matrix pts(3, 1, std::vector<double>{0, 1, 3});
  Clustering c;
  c.centers = Matrix(1, 1, std::vector<double>{4.0 / 3.0});
  c.assignment = {0, 0, 0};
  const auto d = largest_cluster_diameter(c, pts);
  EXPECT_DOUBLE_EQ(d.diameter, 3.0);
  EXPECT_FALSE(d.degenerate);
}

TEST(Diameter, SingletonIsDegenerate) {
  const Matrix pts(3, 1, std::vector<double>{0, 10, 10.5});
  Clustering c;
  c.centers = Matrix(3, 1, std::vector<double>{0, 10, 10.5});
  c.assignment = {0, 1, 2};
  const auto d = largest_cluster_diameter(c, pts);
  EXPECT_EQ(d.diameter, 0.0);
  EXPECT_TRUE(d.degenerate);
}

TEST(Diameter, UniformSquare) {
  RandomStream rng(6);
  Matrix pts(1000, 2);
  for (std::size_t i = 0; i < 1000; ++i) {
    pts(i, 0) = rng.uniform01();
    pts(i, 1) = rng.uniform01();
  }
  Clustering c;
  c.centers = Matrix(1, 2, std::vector<double>{0.5, 0.5});
  c.assignment.assign(1000, 0);
  const auto d = largest_cluster_diameter(c, pts);
  EXPECT_GE(d.diameter, 1.30);
  EXPECT_LE(d.diameter, std::sqrt(2.0));
}
