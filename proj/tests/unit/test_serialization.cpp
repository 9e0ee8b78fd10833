#include <gtest/gtest.h>

#include <filesystem>

#include "insideout/serialization.hpp"

using namespace insideout;

TEST(SpecJson, RoundTrip) {
  RandomStream rng(1);
  const auto spec = random_dataset_spec(4, 300, rng);
  EXPECT_EQ(dataset_spec_from_json(dataset_spec_to_json(spec)), spec);
}

TEST(SpecJson, UnknownKeyRejected) {
  RandomStream rng(2);
  auto text = dataset_spec_to_json(random_dataset_spec(1, 10, rng));
  text.insert(1, "\"surprise\":1,");
  try {
    dataset_spec_from_json(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(SpecJson, MalformedRejected) {
  EXPECT_THROW(dataset_spec_from_json("{"), Error);
  EXPECT_THROW(dataset_spec_from_json("[]"), Error);
}

TEST(DetectorJson, RoundTripEveryVariant) {
  RandomStream rng(3);
  std::vector<double> column(400);
  for (auto& v : column) v = rng.normal(2.0, 3.0);
  Matrix joint(400, 2);
  for (std::size_t r = 0; r < 400; ++r) {
    joint(r, 0) = column[r];
    joint(r, 1) = rng.normal();
  }
  const std::vector<DetectorModel> models{fit_knn(column, 5, rng), fit_zscore(column),
                                          fit_mahalanobis(joint), fit_kl_histogram(column)};
  for (const auto& m : models) EXPECT_EQ(detector_from_json(detector_to_json(m)), m);
  EXPECT_EQ(detectors_from_json(detectors_to_json(models)), models);
}

TEST(ProfileJson, RoundTrip) {
  const Profile p(std::vector<OODStatus>{OODStatus::Outside, OODStatus::No, OODStatus::Inside});
  EXPECT_EQ(profile_from_json(profile_to_json(p)), p);
}

TEST(ConfigJson, RoundTripAndOverlay) {
  ExperimentConfig cfg;
  cfg.n = 4;
  cfg.master_seed = 99;
  cfg.tree.binary_weights = {1.0, 2.0, 3.0, 0.5};
  cfg.tree.cover_all_features = false;
  cfg.grid.k_values = {10, 20};
  const auto back = experiment_config_from_json(experiment_config_to_json(cfg));
  EXPECT_EQ(experiment_config_to_json(back), experiment_config_to_json(cfg));
  EXPECT_EQ(back.tree, cfg.tree);

  const auto overlaid = experiment_config_from_json(R"({"k": 500, "jobs": 3})", cfg);
  EXPECT_EQ(overlaid.k, 500u);
  EXPECT_EQ(overlaid.jobs, 3u);
  EXPECT_EQ(overlaid.n, 4u);
  EXPECT_THROW(experiment_config_from_json(R"({"tree": {"depth": 3}})"), Error);
}

TEST(ConfigJson, JobsDoNotAffectText) {
  ExperimentConfig a;
  ExperimentConfig b;
  b.jobs = 7;
  EXPECT_EQ(experiment_config_to_json(a), experiment_config_to_json(b));
}

TEST(Files, MissingFileIsIoError) {
  try {
    read_text_file("/nonexistent/dir/file.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Files, WriteThenRead) {
  const auto path = std::filesystem::temp_directory_path() / "insideout_serialization_test.txt";
  write_text_file(path, "hello\n");
  EXPECT_EQ(read_text_file(path), "hello\n");
  std::filesystem::remove(path);
}
