#pragma once

#include "socnav/model.hpp"
#include "socnav/scene_graph.hpp"

namespace socnav::testutil {

// Minimal graph with a real 2x2 grid for decoder-sized checks: room, one
// human, four grid nodes; room links, lattice links, grounding, self-loops.
inline SceneGraph tiny_graph() {
  SceneGraph g;
  g.grid_n = 2;
  g.grid_w = 1.0;
  g.nodes.push_back({0, NodeKind::room, make_room_feature(1)});
  g.nodes.push_back({1, NodeKind::human, make_human_feature({0.4, -0.2, 0.5})});
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const int id = 2 + i * 2 + j;
      g.grid_index.push_back(id);
      g.nodes.push_back({id, NodeKind::grid,
                         make_grid_feature(grid_coords(i, j, 2, 1.0))});
    }
  }
  auto add = [&](int s, int d, EdgeRelation r) { g.edges.push_back({s, d, r}); };
  add(0, 1, EdgeRelation::room_to_human);
  add(1, 0, EdgeRelation::human_to_room);
  for (int k = 0; k < 4; ++k) {
    add(0, 2 + k, EdgeRelation::room_to_grid);
    add(2 + k, 0, EdgeRelation::grid_to_room);
  }
  add(2, 4, EdgeRelation::grid_down);
  add(4, 2, EdgeRelation::grid_up);
  add(3, 5, EdgeRelation::grid_down);
  add(5, 3, EdgeRelation::grid_up);
  add(2, 3, EdgeRelation::grid_right);
  add(3, 2, EdgeRelation::grid_left);
  add(4, 5, EdgeRelation::grid_right);
  add(5, 4, EdgeRelation::grid_left);
  add(1, 2, EdgeRelation::entity_grounding);
  add(2, 1, EdgeRelation::grid_grounding);
  for (int k = 0; k < 6; ++k) add(k, k, EdgeRelation::self_loop);
  return g;
}

// Config matching tiny_graph: two graph layers, 2x2 grid decoding to 9x9.
inline ModelConfig tiny_config(Activation act = Activation::elu) {
  ModelConfig cfg;
  cfg.rgcn_layers = 2;
  cfg.dim_schedule = {21, 9, 7};
  cfg.grid_n = 2;
  cfg.activation = act;
  return cfg;  // output_size() = ((2-1)*2-2+5 = 5; (5-1)*2-2+3 = 9)
}

// Random typed graph for oracle comparisons; features are random, node ids
// shuffled so canonical ordering gets exercised.
inline SceneGraph random_graph(Rng& rng, int n_nodes, double edge_prob = 0.25) {
  SceneGraph g;
  for (int k = 0; k < n_nodes; ++k) {
    GraphNode node;
    node.id = k;
    node.kind = static_cast<NodeKind>(rng.uniform_int(0, kNodeKinds - 1));
    for (int c = 0; c < kFeatureDim; ++c) node.feature[c] = rng.uniform(-2.0, 2.0);
    g.nodes.push_back(node);
  }
  for (int s = 0; s < n_nodes; ++s) {
    for (int d = 0; d < n_nodes; ++d) {
      if (rng.uniform() < edge_prob) {
        g.edges.push_back({s, d, static_cast<EdgeRelation>(rng.uniform_int(0, kRelationCount - 1))});
      }
    }
  }
  return g;
}

}  // namespace socnav::testutil
