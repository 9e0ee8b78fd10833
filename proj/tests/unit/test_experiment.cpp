#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "insideout/experiment.hpp"
#include "insideout/serialization.hpp"

using namespace insideout;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 2;
  cfg.k = 200;
  cfg.repetitions = 3;
  cfg.eval_samples = 30;
  cfg.master_seed = 5;
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST(Compositions, CountsAndOrder) {
  const auto one = enumerate_compositions(1);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0], (Composition{1, 0, 0}));
  EXPECT_EQ(one[1], (Composition{0, 1, 0}));
  EXPECT_EQ(one[2], (Composition{0, 0, 1}));
  for (std::size_t n = 0; n <= 8; ++n) {
    const auto all = enumerate_compositions(n);
    EXPECT_EQ(all.size(), (n + 1) * (n + 2) / 2);
    for (const auto& c : all) EXPECT_EQ(c.n(), n);
  }
}

TEST(Compositions, MixedSplit) {
  EXPECT_EQ(mixed_composition(1), (Composition{1, 0, 0}));
  EXPECT_EQ(mixed_composition(4), (Composition{0, 2, 2}));
  EXPECT_EQ(mixed_composition(7), (Composition{1, 3, 3}));
}

TEST(Aggregate, Cases) {
  const auto a = aggregate(std::vector<double>{1, 1, 1});
  EXPECT_EQ(a.mean, 1.0);
  EXPECT_EQ(a.stddev, 0.0);
  const auto b = aggregate(std::vector<double>{0, 2});
  EXPECT_EQ(b.mean, 1.0);
  EXPECT_EQ(b.stddev, 1.0);
  const auto c = aggregate(std::vector<double>{3.5});
  EXPECT_EQ(c.mean, 3.5);
  EXPECT_EQ(c.stddev, 0.0);
  EXPECT_THROW(aggregate(std::vector<double>{}), Error);
}

TEST(Spearman, RanksWithTies) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(spearman_rho(x, std::vector<double>{10, 20, 30, 40, 50}), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0);
  // Pearson on average ranks (1, 2.5, 2.5, 4, 5) vs (1..5).
  EXPECT_NEAR(spearman_rho(x, std::vector<double>{1, 2, 2, 3, 4}), 0.9746794344808963, 1e-12);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestIndex) {
  try {
    parallel_for(20, 3, [](std::size_t i) {
      if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(Config, ValidationErrors) {
  auto cfg = small_config();
  cfg.k = 10;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small_config();
  cfg.repetitions = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(ProfileGrid, RowsAndNormalization) {
  const auto cfg = small_config();
  const auto result = run_profile_grid(cfg);
  ASSERT_EQ(result.rows.size(), 6u);
  EXPECT_EQ(result.rows.front().composition, (Composition{2, 0, 0}));
  EXPECT_EQ(result.rows.front().mean_nrmse, 1.0);
  for (const auto& row : result.rows) {
    EXPECT_EQ(row.repetitions_used, cfg.repetitions);
    EXPECT_EQ(row.values.size(), cfg.repetitions);
    for (double v : row.values) EXPECT_TRUE(std::isfinite(v) && v > 0.0);
  }
}

TEST(ProfileGrid, SingleRepetitionHasZeroSpread) {
  auto cfg = small_config();
  cfg.repetitions = 1;
  for (const auto& row : run_sweep_dimensions(cfg, std::vector<std::size_t>{3}).rows)
    EXPECT_EQ(row.std_nrmse, 0.0);
}

TEST(Sweeps, RowCounts) {
  const auto cfg = small_config();
  EXPECT_EQ(run_sweep_dimensions(cfg, std::vector<std::size_t>{2}).rows.size(), 1u);
  EXPECT_EQ(run_sweep_complexity(cfg, std::vector<std::size_t>{1, 5}).rows.size(), 2u);
  const std::vector<std::size_t> n_values{1, 2};
  const std::vector<std::size_t> k_values{100, 150};
  const auto size = run_sweep_size(cfg, n_values, k_values);
  ASSERT_EQ(size.rows.size(), 4u);
  EXPECT_EQ(*size.rows[3].sweep_x, 2.0);
  EXPECT_EQ(*size.rows[3].sweep_y, 150.0);
}

TEST(Sweeps, PortionGridFeasibility) {
  auto cfg = small_config();
  cfg.n = 8;
  cfg.repetitions = 1;
  cfg.eval_samples = 20;
  const std::vector<double> fracs{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto result = run_sweep_portion(cfg, fracs, fracs);
  ASSERT_EQ(result.rows.size(), 25u);
  std::size_t present = 0;
  for (const auto& row : result.rows) {
    if (row.present) ++present;
    if (*row.sweep_x == 0.0 && *row.sweep_y == 0.0) EXPECT_EQ(row.mean_nrmse, 1.0);
  }
  EXPECT_EQ(present, 15u);
}

TEST(Screening, SingleComponentSpecsWhenZIsFixed) {
  HyperRanges ranges;
  ranges.z_min = ranges.z_max = 1;
  RandomStream rng(3);
  const auto screened = draw_screened_dataset(3, 300, ranges, rng);
  for (const auto& f : screened.spec.features) EXPECT_EQ(f.mixture.size(), 1u);
}

TEST(Determinism, CsvIndependentOfJobs) {
  auto cfg = small_config();
  const auto serial = results_to_csv(run_profile_grid(cfg));
  cfg.jobs = 4;
  EXPECT_EQ(results_to_csv(run_profile_grid(cfg)), serial);
  cfg.master_seed = 6;
  EXPECT_NE(results_to_csv(run_profile_grid(cfg)), serial);
}

TEST(Csv, HeaderAndEmptySweepColumns) {
  const auto csv = results_to_csv(run_profile_grid(small_config()));
  const auto first_newline = csv.find('\n');
  EXPECT_EQ(csv.substr(0, first_newline),
            "experiment,config_json,n_no,n_inside,n_outside,sweep_x,sweep_y,mean_nrmse,std_nrmse,"
            "repetitions_used");
  EXPECT_NE(csv.find(",2,0,0,,,1,0,3"), std::string::npos) << csv;
}
