#pragma once

#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "socnav/binio.hpp"
#include "socnav/dataset.hpp"
#include "socnav/sim.hpp"
#include "socnav/trainer.hpp"

namespace socnav {

inline constexpr const char* kConfigEnvVar = "SOCNAV_CONFIG";

// The one knob file: every component's parameters with full defaulting.
// Unknown keys are rejected so typos cannot silently fall back to defaults.
struct GlobalConfig {
  GraphConfig graph;
  SocialParams social;
  ModelConfig model;
  TrainConfig train;
  ControllerConfig controller;
  int out_n = 73;
  double out_w = 10.0;  // kept equal to graph.w unless overridden

  DatasetConfig dataset_config(int n_train, int n_dev, int n_test, uint64_t seed) const {
    DatasetConfig d;
    d.n_train = n_train;
    d.n_dev = n_dev;
    d.n_test = n_test;
    d.seed = seed;
    d.graph = graph;
    d.social = social;
    d.out_n = out_n;
    d.out_w = out_w;
    return d;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const GlobalConfig& c) {
  nlohmann::json j;
  j["graph"] = {{"n", c.graph.n},
                {"w", c.graph.w},
                {"max_wall_segment", c.graph.max_wall_segment}};
  j["social"] = {{"sigma_front", c.social.sigma_front},
                 {"sigma_side", c.social.sigma_side},
                 {"sigma_back", c.social.sigma_back},
                 {"interaction_halfwidth", c.social.interaction_halfwidth},
                 {"wall_margin", c.social.wall_margin},
                 {"intimate_floor", c.social.intimate_floor}};
  j["model"] = to_json(c.model);
  j["train"] = to_json(c.train);
  j["controller"] = {{"dt", c.controller.dt},
                     {"v_max", c.controller.v_max},
                     {"w_max", c.controller.w_max},
                     {"replan_interval", c.controller.replan_interval},
                     {"timeout", c.controller.timeout},
                     {"goal_radius", c.controller.goal_radius},
                     {"lookahead", c.controller.lookahead},
                     {"human_collision_dist", c.controller.human_collision_dist},
                     {"cost_floor", c.controller.fuse.cost_floor},
                     {"lambda", c.controller.fuse.lambda},
                     {"lethal_threshold", c.controller.fuse.lethal_threshold},
                     {"robot_radius", c.controller.fuse.robot_radius},
                     {"inflation_margin", c.controller.fuse.inflation_margin}};
  j["out_n"] = c.out_n;
  j["out_w"] = c.out_w;
  return j;
}

inline GlobalConfig global_config_from_json(const nlohmann::json& j) {
  GlobalConfig c;
  detail::reject_unknown(
      j, {"graph", "social", "model", "train", "controller", "out_n", "out_w"}, "root");
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    detail::reject_unknown(g, {"n", "w", "max_wall_segment"}, "graph");
    detail::maybe(g, "n", c.graph.n);
    detail::maybe(g, "w", c.graph.w);
    detail::maybe(g, "max_wall_segment", c.graph.max_wall_segment);
  }
  if (j.contains("social")) {
    const auto& s = j.at("social");
    detail::reject_unknown(s,
                           {"sigma_front", "sigma_side", "sigma_back",
                            "interaction_halfwidth", "wall_margin", "intimate_floor"},
                           "social");
    detail::maybe(s, "sigma_front", c.social.sigma_front);
    detail::maybe(s, "sigma_side", c.social.sigma_side);
    detail::maybe(s, "sigma_back", c.social.sigma_back);
    detail::maybe(s, "interaction_halfwidth", c.social.interaction_halfwidth);
    detail::maybe(s, "wall_margin", c.social.wall_margin);
    detail::maybe(s, "intimate_floor", c.social.intimate_floor);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::reject_unknown(m,
                           {"rgcn_layers", "dim_schedule", "relation_count", "num_bases",
                            "grid_n", "conv_hidden", "kernel1", "kernel2", "stride",
                            "padding", "activation"},
                           "model");
    detail::maybe(m, "rgcn_layers", c.model.rgcn_layers);
    detail::maybe(m, "dim_schedule", c.model.dim_schedule);
    detail::maybe(m, "relation_count", c.model.relation_count);
    detail::maybe(m, "num_bases", c.model.num_bases);
    detail::maybe(m, "grid_n", c.model.grid_n);
    detail::maybe(m, "conv_hidden", c.model.conv_hidden);
    detail::maybe(m, "kernel1", c.model.kernel1);
    detail::maybe(m, "kernel2", c.model.kernel2);
    detail::maybe(m, "stride", c.model.stride);
    detail::maybe(m, "padding", c.model.padding);
    if (m.contains("activation")) {
      const std::string a = m.at("activation").get<std::string>();
      if (a == "elu") {
        c.model.activation = Activation::elu;
      } else if (a == "linear") {
        c.model.activation = Activation::linear;
      } else {
        throw ConfigError("config: unknown activation '" + a + "'");
      }
    }
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown(
        t, {"learning_rate", "batch_size", "max_epochs", "patience", "seed"}, "train");
    detail::maybe(t, "learning_rate", c.train.learning_rate);
    detail::maybe(t, "batch_size", c.train.batch_size);
    detail::maybe(t, "max_epochs", c.train.max_epochs);
    detail::maybe(t, "patience", c.train.patience);
    detail::maybe(t, "seed", c.train.seed);
  }
  if (j.contains("controller")) {
    const auto& k = j.at("controller");
    detail::reject_unknown(k,
                           {"dt", "v_max", "w_max", "replan_interval", "timeout",
                            "goal_radius", "lookahead", "human_collision_dist",
                            "cost_floor", "lambda", "lethal_threshold", "robot_radius",
                            "inflation_margin"},
                           "controller");
    detail::maybe(k, "dt", c.controller.dt);
    detail::maybe(k, "v_max", c.controller.v_max);
    detail::maybe(k, "w_max", c.controller.w_max);
    detail::maybe(k, "replan_interval", c.controller.replan_interval);
    detail::maybe(k, "timeout", c.controller.timeout);
    detail::maybe(k, "goal_radius", c.controller.goal_radius);
    detail::maybe(k, "lookahead", c.controller.lookahead);
    detail::maybe(k, "human_collision_dist", c.controller.human_collision_dist);
    detail::maybe(k, "cost_floor", c.controller.fuse.cost_floor);
    detail::maybe(k, "lambda", c.controller.fuse.lambda);
    detail::maybe(k, "lethal_threshold", c.controller.fuse.lethal_threshold);
    detail::maybe(k, "robot_radius", c.controller.fuse.robot_radius);
    detail::maybe(k, "inflation_margin", c.controller.fuse.inflation_margin);
  }
  const bool w_given = j.contains("graph") && j.at("graph").contains("w");
  detail::maybe(j, "out_n", c.out_n);
  if (j.contains("out_w")) {
    c.out_w = j.at("out_w").get<double>();
  } else if (w_given) {
    c.out_w = c.graph.w;
  }
  c.graph.check();
  c.social.check();
  c.model.check();
  c.train.check();
  c.controller.check();
  return c;
}

// Resolution order: explicit --config flag, then $SOCNAV_CONFIG, then defaults.
inline GlobalConfig load_global_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (path.empty()) return GlobalConfig{};
  return global_config_from_json(nlohmann::json::parse(read_file(path)));
}

// Every command that produces an output directory drops the effective
// (merged) config next to its outputs.
inline void echo_config(const GlobalConfig& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  atomic_write_file(dir / "config.json", to_json(c).dump(2) + "\n");
}

}  // namespace socnav
