#include <gtest/gtest.h>

#include <filesystem>

#include "helpers.hpp"
#include "oracles.hpp"
#include "socnav/model.hpp"

using namespace socnav;
using testutil::dense_rgcn_oracle;
using testutil::random_graph;
using testutil::tiny_config;
using testutil::tiny_graph;

namespace {

Mat random_mat(Rng& rng, int rows, int cols, double scale = 0.5) {
  Mat m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST(ModelConfig, PaperArithmeticYields73) {
  const ModelConfig cfg;
  EXPECT_EQ(cfg.mid_size(), 37);
  EXPECT_EQ(cfg.output_size(), 73);
  EXPECT_NO_THROW(Model(cfg, 73));
}

TEST(ModelConfig, WrongArithmeticRejectedAtConstruction) {
  ModelConfig cfg;
  cfg.kernel2 = 4;  // 18 -> 37 -> 74
  EXPECT_THROW(Model(cfg, 73), ConfigError);
  ModelConfig cfg2;
  cfg2.stride = 3;
  EXPECT_THROW(Model(cfg2, 73), ConfigError);
}

TEST(ModelConfig, ScheduleValidation) {
  ModelConfig cfg;
  cfg.dim_schedule = {21, 19, 7};  // wrong length for 8 layers
  EXPECT_THROW(cfg.check(), ConfigError);
  ModelConfig cfg2;
  cfg2.dim_schedule = {20, 19, 17, 15, 13, 11, 9, 8, 7};
  EXPECT_THROW(cfg2.check(), ConfigError);
  ModelConfig cfg3;
  cfg3.num_bases = 0;
  EXPECT_THROW(cfg3.check(), ConfigError);
}

TEST(RgcnLayer, SelfLoopFixedPoint) {
  SceneGraph g;
  GraphNode node;
  node.id = 0;
  node.kind = NodeKind::human;
  for (int c = 0; c < kFeatureDim; ++c) node.feature[c] = 0.1 * c - 1.0;
  g.nodes.push_back(node);
  g.edges.push_back({0, 0, EdgeRelation::self_loop});
  const CompiledGraph cg = compile_graph(g);

  const Mat w_self = Mat::Identity(kFeatureDim, kFeatureDim);
  std::vector<Mat> w_rel(kRelationCount, Mat::Zero(kFeatureDim, kFeatureDim));
  const Mat out = rgcn_layer(cg.x0, cg, w_self, w_rel, Activation::linear);
  for (int c = 0; c < kFeatureDim; ++c) EXPECT_DOUBLE_EQ(out(0, c), cg.x0(0, c));
}

TEST(RgcnLayer, SingleEdgeForcedUpdate) {
  SceneGraph g;
  for (int k = 0; k < 2; ++k) {
    GraphNode node;
    node.id = k;
    node.kind = NodeKind::grid;  // same kind; features decide canonical order
    for (int c = 0; c < kFeatureDim; ++c) node.feature[c] = k == 0 ? 1.0 + c : -2.0;
    g.nodes.push_back(node);
  }
  g.edges.push_back({0, 1, EdgeRelation::grid_up});
  const CompiledGraph cg = compile_graph(g);

  const Mat w_self = Mat::Zero(kFeatureDim, kFeatureDim);
  std::vector<Mat> w_rel(kRelationCount, Mat::Zero(kFeatureDim, kFeatureDim));
  w_rel[static_cast<int>(EdgeRelation::grid_up)] =
      Mat::Identity(kFeatureDim, kFeatureDim);
  const Mat out = rgcn_layer(cg.x0, cg, w_self, w_rel, Activation::linear);

  // Locate the canonical rows of storage nodes 0 and 1.
  int row0 = -1, row1 = -1;
  for (int r = 0; r < cg.n; ++r) {
    if (cg.order[r] == 0) row0 = r;
    if (cg.order[r] == 1) row1 = r;
  }
  for (int c = 0; c < kFeatureDim; ++c) {
    EXPECT_DOUBLE_EQ(out(row1, c), cg.x0(row0, c));  // h_b' = h_a
    EXPECT_DOUBLE_EQ(out(row0, c), 0.0);             // h_a' = act(0)
  }
}

TEST(RgcnLayer, WidthMismatchRejected) {
  const CompiledGraph cg = compile_graph(tiny_graph());
  const Mat w_self = Mat::Zero(5, 7);  // expects 7-wide features
  std::vector<Mat> w_rel(kRelationCount, Mat::Zero(5, 7));
  EXPECT_THROW(rgcn_layer(cg.x0, cg, w_self, w_rel, Activation::elu),
               std::invalid_argument);
}

TEST(RgcnLayer, MatchesDenseOracleOnRandomGraphs) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(2, 20);
    const SceneGraph g = random_graph(rng, n);
    const int din = rng.uniform_int(1, 12);
    const int dout = rng.uniform_int(1, 12);

    std::vector<std::vector<double>> feats(n, std::vector<double>(din));
    for (auto& row : feats)
      for (auto& v : row) v = rng.uniform(-1.5, 1.5);

    const Mat w_self = random_mat(rng, dout, din);
    std::vector<Mat> w_rel;
    for (int r = 0; r < kRelationCount; ++r) w_rel.push_back(random_mat(rng, dout, din));
    const Activation act = trial % 2 == 0 ? Activation::elu : Activation::linear;

    const CompiledGraph cg = compile_graph(g);
    Mat h(n, din);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < din; ++c) h(r, c) = feats[cg.order[r]][c];
    }
    const Mat out = rgcn_layer(h, cg, w_self, w_rel, act);
    const auto oracle = dense_rgcn_oracle(g, feats, w_self, w_rel, act);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < dout; ++c) {
        EXPECT_NEAR(out(r, c), oracle[cg.order[r]][c], 1e-6)
            << "trial " << trial << " node " << cg.order[r];
      }
    }
  }
}

TEST(RgcnLayer, BasisModeMatchesMaterializedWeights) {
  Rng rng(99);
  const SceneGraph g = random_graph(rng, 12);
  const CompiledGraph cg = compile_graph(g);

  ModelConfig cfg = tiny_config();
  cfg.num_bases = 4;
  const ModelParams p = init_params(cfg, 5);
  ASSERT_TRUE(p.layers[0].basis_mode());
  const std::vector<Mat> wr = p.layers[0].materialize(cfg.relation_count);
  // W_r = sum_b coef(r, b) * V_b, checked directly.
  for (int r = 0; r < cfg.relation_count; ++r) {
    Mat expect = Mat::Zero(wr[r].rows(), wr[r].cols());
    for (int b = 0; b < cfg.num_bases; ++b) {
      expect += p.layers[0].coef(r, b) * p.layers[0].bases[b];
    }
    EXPECT_NEAR((wr[r] - expect).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  }
  const Mat out = rgcn_layer(cg.x0, cg, p.layers[0].w_self, wr, Activation::elu);
  EXPECT_TRUE(out.allFinite());
}

TEST(GridExtract, ReproducesIndexPattern) {
  SceneGraph g = tiny_graph();
  const CompiledGraph cg0 = compile_graph(g);
  // Write (i, j) markers into the final features via a fake feature matrix.
  Mat h = Mat::Zero(cg0.n, 7);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const int row = cg0.grid_ids[i * 2 + j];
      h(row, 0) = i;
      h(row, 1) = j;
      h(row, 2) = 10.0 * i + j;
    }
  }
  const auto tensor = grid_extract(h, cg0);
  ASSERT_EQ(tensor.size(), 7u * 2 * 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_DOUBLE_EQ(tensor[0 * 4 + i * 2 + j], i);
      EXPECT_DOUBLE_EQ(tensor[1 * 4 + i * 2 + j], j);
      EXPECT_DOUBLE_EQ(tensor[2 * 4 + i * 2 + j], 10.0 * i + j);
    }
  }
}

TEST(GridExtract, GraphWithoutGridRejected) {
  Rng rng(3);
  const SceneGraph g = random_graph(rng, 6);  // no grid_index
  const CompiledGraph cg = compile_graph(g);
  Mat h = Mat::Zero(cg.n, 7);
  EXPECT_THROW(grid_extract(h, cg), std::runtime_error);
}

TEST(GridExtract, ShapeMatchesDefaultLattice) {
  Scenario s;
  s.frame = Frame::robot;
  s.room = {{-3, -3}, {3, -3}, {3, 3}, {-3, 3}};
  s.robot = {0, 0, 0};
  s.goal = {1, 1};
  const SceneGraph g = build_scene_graph(s, GraphConfig{});
  const CompiledGraph cg = compile_graph(g);
  Mat h = Mat::Random(cg.n, 7);
  EXPECT_EQ(grid_extract(h, cg).size(), 7u * 18 * 18);
}

TEST(GridExtract, StorageOrderInvariant) {
  // Shuffling node storage (with remapped ids) must not change the tensor:
  // placement is governed by grid_index alone.
  SceneGraph g = tiny_graph();
  SceneGraph shuffled = g;
  const std::vector<int> perm = {3, 5, 0, 1, 4, 2};  // new id = perm[old id]
  for (auto& node : shuffled.nodes) node.id = perm[node.id];
  for (auto& e : shuffled.edges) {
    e.src = perm[e.src];
    e.dst = perm[e.dst];
  }
  for (auto& idx : shuffled.grid_index) idx = perm[idx];
  std::swap(shuffled.nodes[0], shuffled.nodes[4]);
  std::swap(shuffled.nodes[2], shuffled.nodes[5]);

  const CompiledGraph a = compile_graph(g);
  const CompiledGraph b = compile_graph(shuffled);
  Mat ha = Mat::Zero(a.n, 7), hb = Mat::Zero(b.n, 7);
  // Identical per-entity values keyed by the original features.
  for (int r = 0; r < a.n; ++r) {
    for (int c = 0; c < 7; ++c) ha(r, c) = a.x0(r, c % kFeatureDim);
  }
  for (int r = 0; r < b.n; ++r) {
    for (int c = 0; c < 7; ++c) hb(r, c) = b.x0(r, c % kFeatureDim);
  }
  const auto ta = grid_extract(ha, a);
  const auto tb = grid_extract(hb, b);
  ASSERT_EQ(ta.size(), tb.size());
  for (size_t k = 0; k < ta.size(); ++k) EXPECT_DOUBLE_EQ(ta[k], tb[k]);
}

TEST(Decode, SizeChain) {
  const ModelConfig cfg;
  EXPECT_EQ(deconv_out_size(18, 5, 2, 1), 37);
  EXPECT_EQ(deconv_out_size(37, 3, 2, 1), 73);
  const ModelParams p = init_params(cfg, 1);
  std::vector<double> in(static_cast<size_t>(7) * 18 * 18, 0.3);
  const Mat out = decode(in, cfg, p.d1, p.d2);
  EXPECT_EQ(out.rows(), 73);
  EXPECT_EQ(out.cols(), 73);
}

TEST(Decode, ZeroKernelsZeroBiasGiveZeroMap) {
  const ModelConfig cfg;
  ModelParams p = init_params(cfg, 1);
  std::fill(p.d1.w.begin(), p.d1.w.end(), 0.0);
  std::fill(p.d1.b.begin(), p.d1.b.end(), 0.0);
  std::fill(p.d2.w.begin(), p.d2.w.end(), 0.0);
  std::fill(p.d2.b.begin(), p.d2.b.end(), 0.0);
  std::vector<double> in(static_cast<size_t>(7) * 18 * 18, 1.7);
  const Mat out = decode(in, cfg, p.d1, p.d2);
  EXPECT_DOUBLE_EQ(out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Decode, ZeroInputFinalBiasGivesConstantMap) {
  // act(0) = 0 through the first layer, so only the final bias remains.
  const ModelConfig cfg;
  ModelParams p = init_params(cfg, 3);
  std::fill(p.d1.b.begin(), p.d1.b.end(), 0.0);
  const double b = -0.37;
  p.d2.b[0] = b;
  std::vector<double> in(static_cast<size_t>(7) * 18 * 18, 0.0);
  const Mat out = decode(in, cfg, p.d1, p.d2);
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) EXPECT_DOUBLE_EQ(out(i, j), b);
  }
}

TEST(ModelForward, FiniteAndDeterministic) {
  const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_B, 17));
  const SceneGraph g = build_scene_graph(s, GraphConfig{});
  Model model(ModelConfig{}, 73);
  model.params() = init_params(model.config(), 42);

  const CostMap a = model.forward(g, 10.0);
  const CostMap b = model.forward(g, 10.0);
  ASSERT_EQ(a.values.size(), 73u * 73u);
  for (size_t k = 0; k < a.values.size(); ++k) {
    ASSERT_TRUE(std::isfinite(a.values[k]));
    EXPECT_GE(a.values[k], 0.0);
    EXPECT_LE(a.values[k], 1.0);
    EXPECT_EQ(a.values[k], b.values[k]);  // bitwise
  }
}

TEST(ModelForward, QueryCounterCountsForwardPasses) {
  const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_A, 2));
  const SceneGraph g = build_scene_graph(s, GraphConfig{});
  Model model(ModelConfig{}, 73);
  model.reset_queries();
  model.forward(g, 10.0);
  EXPECT_EQ(model.queries(), 1);
  model.forward(g, 10.0);
  EXPECT_EQ(model.queries(), 2);
}

TEST(ModelForward, NodePermutationLeavesOutputBitwiseIdentical) {
  const Scenario s = to_robot_frame(generate_scenario(ScenarioClass::S_B, 31));
  const SceneGraph g = build_scene_graph(s, GraphConfig{});

  // Remap ids with a pseudo-random bijection and shuffle storage order.
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(7);
  for (int k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.uniform_int(0, k - 1)]);

  SceneGraph shuffled = g;
  for (auto& node : shuffled.nodes) node.id = perm[node.id];
  for (auto& e : shuffled.edges) {
    e.src = perm[e.src];
    e.dst = perm[e.dst];
  }
  for (auto& idx : shuffled.grid_index) idx = perm[idx];
  for (int k = n; k > 1; --k) {
    std::swap(shuffled.nodes[k - 1], shuffled.nodes[rng.uniform_int(0, k - 1)]);
  }

  Model model(ModelConfig{}, 73);
  model.params() = init_params(model.config(), 4);
  const CostMap a = model.forward(g, 10.0);
  const CostMap b = model.forward(shuffled, 10.0);
  for (size_t k = 0; k < a.values.size(); ++k) {
    ASSERT_EQ(a.values[k], b.values[k]) << "cell " << k;
  }
}

TEST(InitParams, DeterministicAndScaled) {
  const ModelConfig cfg;
  ModelParams a = init_params(cfg, 9);
  ModelParams b = init_params(cfg, 9);
  ModelParams c = init_params(cfg, 10);
  bool all_equal = true, any_diff_seed = false;
  a.for_each_tensor([&](const std::string& name, double* pa, size_t n,
                        const std::vector<int>&) {
    b.for_each_tensor([&](const std::string& nb, double* pb, size_t nn,
                          const std::vector<int>&) {
      if (nb == name) {
        for (size_t k = 0; k < n; ++k) all_equal &= pa[k] == pb[k];
      }
      (void)nn;
    });
  });
  c.for_each_tensor([&](const std::string&, double* pc, size_t n, const std::vector<int>&) {
    for (size_t k = 0; k < n; ++k) any_diff_seed |= pc[k] != 0.0;
  });
  EXPECT_TRUE(all_equal);
  EXPECT_TRUE(any_diff_seed);
  // fan-in scaling bound: |w| <= 1/sqrt(21) for the first layer.
  const double bound = 1.0 / std::sqrt(21.0);
  for (Eigen::Index k = 0; k < a.layers[0].w_self.size(); ++k) {
    EXPECT_LE(std::abs(a.layers[0].w_self.data()[k]), bound);
  }
}

TEST(Checkpoint, RoundTripStable) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "socnav_test_ckpt";
  fs::create_directories(dir);
  const ModelConfig cfg;
  ModelParams p = init_params(cfg, 123);
  save_checkpoint(dir / "a.bin", cfg, p);

  auto [cfg2, p2] = load_checkpoint(dir / "a.bin");
  EXPECT_EQ(to_json(cfg2).dump(), to_json(cfg).dump());
  save_checkpoint(dir / "b.bin", cfg2, p2);
  EXPECT_EQ(read_file(dir / "a.bin"), read_file(dir / "b.bin"));

  // Loaded values are the f32 rounding of the originals.
  std::vector<double> orig, loaded;
  p.for_each_tensor([&](const std::string&, double* d, size_t n, const std::vector<int>&) {
    orig.insert(orig.end(), d, d + n);
  });
  p2.for_each_tensor([&](const std::string&, double* d, size_t n, const std::vector<int>&) {
    loaded.insert(loaded.end(), d, d + n);
  });
  ASSERT_EQ(orig.size(), loaded.size());
  for (size_t k = 0; k < orig.size(); ++k) {
    EXPECT_EQ(static_cast<double>(static_cast<float>(orig[k])), loaded[k]);
  }
}

TEST(Checkpoint, BadMagicRejected) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "socnav_test_ckpt2";
  fs::create_directories(dir);
  atomic_write_file(dir / "bad.bin", "not a checkpoint");
  EXPECT_THROW(load_checkpoint(dir / "bad.bin"), FormatError);
}
