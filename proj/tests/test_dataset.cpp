#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "socnav/dataset.hpp"

using namespace socnav;
namespace fs = std::filesystem;

namespace {

Scenario empty_room_robot_frame(double side = 8.0) {
  Scenario s;
  s.frame = Frame::robot;
  const double h = side / 2;
  s.room = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  s.robot = {0.0, 0.0, 0.0};
  s.goal = {1.0, 1.0};
  return s;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("socnav_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DatasetConfig small_config(uint64_t seed = 1) {
  DatasetConfig cfg;
  cfg.n_train = 12;
  cfg.n_dev = 3;
  cfg.n_test = 3;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(SampleMap, IssuesExactlyOneQueryPerCell) {
  const Scenario s = empty_room_robot_frame();
  const SocialParams p;
  int64_t queries = 0;
  sample_map(
      s,
      [&](const Scenario& q) {
        ++queries;
        return reference_score(q, p);
      },
      73, 10.0);
  EXPECT_EQ(queries, 5329);
}

TEST(SampleMap, CentreCellIsUnshiftedScoreBitwise) {
  const SocialParams p;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_B, seed));
    const CostMap map = sample_map(
        s, [&](const Scenario& q) { return reference_score(q, p); }, 73, 10.0);
    const double direct = reference_score(s, p);
    EXPECT_EQ(map.at(36, 36), direct);  // exact, not approximate
  }
}

TEST(SampleMap, EmptyRoomValues) {
  const Scenario s = empty_room_robot_frame(8.0);
  const SocialParams p;
  const CostMap map = sample_map(
      s, [&](const Scenario& q) { return reference_score(q, p); }, 73, 10.0);
  for (int i = 0; i < map.n; ++i) {
    for (int j = 0; j < map.n; ++j) {
      const Vec2 c = grid_coords(i, j, map.n, map.w);
      if (!point_in_polygon(c, s.room)) {
        EXPECT_DOUBLE_EQ(map.at(i, j), 0.0);
      } else if (polygon_boundary_distance(c, s.room) >= p.wall_margin) {
        EXPECT_GE(map.at(i, j), 0.999);
      }
    }
  }
}

TEST(SampleMap, RequiresOddResolution) {
  EXPECT_THROW(sample_map(
                   empty_room_robot_frame(), [](const Scenario&) { return 1.0; }, 72,
                   10.0),
               std::invalid_argument);
}

TEST(SampleMap, ResolutionConsistency) {
  // Every 4th cell of the 73x73 map equals the directly sampled 19x19 map:
  // both lattices evaluate the identical closed form at identical points.
  const SocialParams p;
  const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_A, 21));
  auto scorer = [&](const Scenario& q) { return reference_score(q, p); };
  const CostMap fine = sample_map(s, scorer, 73, 10.0);
  const CostMap coarse = sample_map(s, scorer, 19, 10.0);
  for (int i = 0; i < 19; ++i) {
    for (int j = 0; j < 19; ++j) {
      EXPECT_NEAR(coarse.at(i, j), fine.at(4 * i, 4 * j), 1e-12);
    }
  }
}

TEST(BuildDataset, RejectsEmptySplits) {
  DatasetConfig cfg = small_config();
  cfg.n_train = 0;
  EXPECT_THROW(build_dataset(cfg, fresh_dir("reject")), std::invalid_argument);
}

TEST(BuildDataset, DeterministicManifestHash) {
  const auto dir_a = fresh_dir("det_a");
  const auto dir_b = fresh_dir("det_b");
  const DatasetManifest a = build_dataset(small_config(7), dir_a);
  const DatasetManifest b = build_dataset(small_config(7), dir_b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(read_file(dir_a / "train.bin"), read_file(dir_b / "train.bin"));
  const DatasetManifest c = build_dataset(small_config(8), fresh_dir("det_c"));
  EXPECT_NE(to_json(a).dump(), to_json(c).dump());
}

TEST(BuildDataset, SplitsDisjointAndComplete) {
  const auto dir = fresh_dir("splits");
  build_dataset(small_config(3), dir);
  std::set<std::string> ids;
  size_t total = 0;
  for (const char* split : {"train", "dev", "test"}) {
    const auto samples = load_split(dir, split);
    total += samples.size();
    for (const auto& rec : samples) ids.insert(rec.sample_id);
  }
  EXPECT_EQ(total, 18u);
  EXPECT_EQ(ids.size(), total);  // disjoint by sample_id
}

TEST(BuildDataset, StoredTargetsInUnitInterval) {
  const auto dir = fresh_dir("range");
  build_dataset(small_config(5), dir);
  for (const char* split : {"train", "dev", "test"}) {
    for (const auto& rec : load_split(dir, split)) {
      for (float v : rec.target) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
  }
}

TEST(LoadDataset, RoundTripBitExact) {
  const auto dir = fresh_dir("roundtrip");
  const DatasetConfig cfg = small_config(11);
  build_dataset(cfg, dir);

  // Regenerate the first training sample independently and compare stored
  // bytes: scenario 0 is S_A with seed mix(seed, 0).
  const Scenario world = generate_scenario(ScenarioClass::S_A, mix_seed(cfg.seed, 0));
  const DatasetSample expect = make_sample(world, cfg, "train/0");

  const auto samples = load_split(dir, "train");
  ASSERT_FALSE(samples.empty());
  const DatasetSample& got = samples.front();
  EXPECT_EQ(got.sample_id, "train/0");
  ASSERT_EQ(got.features.size(), expect.features.size());
  for (size_t k = 0; k < got.features.size(); ++k) {
    EXPECT_EQ(got.features[k], expect.features[k]) << k;
  }
  ASSERT_EQ(got.target.size(), expect.target.size());
  for (size_t k = 0; k < got.target.size(); ++k) {
    EXPECT_EQ(got.target[k], expect.target[k]) << k;
  }
  EXPECT_EQ(to_json(got.scenario).dump(), to_json(expect.scenario).dump());
}

TEST(LoadDataset, UnknownSplitFails) {
  const auto dir = fresh_dir("badsplit");
  build_dataset(small_config(2), dir);
  EXPECT_THROW(load_split(dir, "holdout"), FormatError);
}

TEST(LoadDataset, MissingManifestFails) {
  EXPECT_THROW(load_split(fresh_dir("nomanifest"), "train"), FormatError);
}

TEST(LoadDataset, TruncatedRecordNamesSample) {
  const auto dir = fresh_dir("truncated");
  build_dataset(small_config(4), dir);
  // Chop the tail off the dev split.
  const fs::path file = dir / "dev.bin";
  const std::string bytes = read_file(file);
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 2000));
  os.close();
  try {
    load_split(dir, "dev");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("dev"), std::string::npos);
  }
}

TEST(LoadDataset, GraphRebuiltMatchesStoredFeatures) {
  const auto dir = fresh_dir("rebuild");
  build_dataset(small_config(6), dir);
  for (const auto& rec : load_split(dir, "test")) {
    ASSERT_EQ(rec.graph.nodes.size() * kFeatureDim, rec.features.size());
    for (size_t n = 0; n < rec.graph.nodes.size(); ++n) {
      for (int c = 0; c < kFeatureDim; ++c) {
        EXPECT_EQ(static_cast<float>(rec.graph.nodes[n].feature[c]),
                  rec.features[n * kFeatureDim + c]);
      }
    }
  }
}
