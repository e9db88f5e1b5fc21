#pragma once

#include <CLI11.hpp>
#include <iostream>
#include <memory>
#include <optional>

#include "socnav/config.hpp"
#include "socnav/render.hpp"

namespace socnav {

namespace cli {

struct ProviderBundle {
  std::unique_ptr<Model> model;
  std::unique_ptr<MapProvider> provider;
};

inline ProviderBundle make_provider(const std::string& name, const GlobalConfig& cfg,
                                    const std::string& checkpoint_path) {
  ProviderBundle b;
  if (name == "gmm") {
    b.provider = std::make_unique<GmmProvider>(cfg.social, cfg.out_n, cfg.out_w);
  } else if (name == "teacher") {
    b.provider = std::make_unique<TeacherProvider>(cfg.social, cfg.out_n, cfg.out_w);
  } else if (name == "sngnn2d") {
    if (checkpoint_path.empty()) {
      throw std::runtime_error("provider 'sngnn2d' needs --checkpoint");
    }
    auto [mcfg, params] = load_checkpoint(checkpoint_path);
    b.model = std::make_unique<Model>(mcfg, mcfg.output_size());
    b.model->params() = std::move(params);
    b.provider = std::make_unique<ModelProvider>(*b.model, cfg.graph, cfg.out_w);
  } else {
    throw std::runtime_error("unknown provider '" + name +
                             "' (expected sngnn2d, gmm or teacher)");
  }
  return b;
}

inline Scenario load_or_generate_scenario(const std::string& file,
                                          const std::string& cls_name, uint64_t seed) {
  if (!file.empty()) {
    return scenario_from_json(nlohmann::json::parse(read_file(file)));
  }
  const auto cls = parse_scenario_class(cls_name);
  if (!cls) {
    throw std::runtime_error("unknown scenario class '" + cls_name +
                             "' (expected S_A, S_B or S_C)");
  }
  return generate_scenario(*cls, seed);
}

inline std::vector<ScenarioClass> parse_class_list(const std::string& spec) {
  if (spec == "all") {
    return {ScenarioClass::S_A, ScenarioClass::S_B, ScenarioClass::S_C};
  }
  std::vector<ScenarioClass> out;
  std::istringstream is(spec);
  std::string token;
  while (std::getline(is, token, ',')) {
    const auto cls = parse_scenario_class(token);
    if (!cls) throw std::runtime_error("unknown scenario class '" + token + "'");
    out.push_back(*cls);
  }
  if (out.empty()) throw std::runtime_error("no scenario classes given");
  return out;
}

}  // namespace cli

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 2 usage error, 1 runtime failure.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"social cost-map toolkit: bootstrap datasets, train the "
               "graph-to-map model, plan and benchmark navigation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file (overrides $SOCNAV_CONFIG)");

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a random scenario as JSON");
  std::string gen_class = "S_A";
  uint64_t gen_seed = 1;
  std::string gen_out;
  bool gen_robot_frame = false;
  gen->add_option("--class", gen_class, "scenario class: S_A, S_B or S_C");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", gen_out, "output file (default: stdout)");
  gen->add_flag("--robot-frame", gen_robot_frame, "emit in robot frame");

  // --- bootstrap ---
  auto* boot = app.add_subcommand("bootstrap", "build a (graph, map) dataset");
  int boot_train = 600, boot_dev = 50, boot_test = 50;
  uint64_t boot_seed = 1;
  std::string boot_out;
  bool boot_quiet = false;
  boot->add_option("--train", boot_train, "training samples");
  boot->add_option("--dev", boot_dev, "development samples");
  boot->add_option("--test", boot_test, "test samples");
  boot->add_option("--seed", boot_seed, "random seed");
  boot->add_option("--out", boot_out, "output directory")->required();
  boot->add_flag("--quiet", boot_quiet, "suppress progress output");

  // --- train ---
  auto* tr = app.add_subcommand("train", "train the model on a dataset");
  std::string tr_data, tr_out;
  std::optional<uint64_t> tr_seed;
  std::optional<double> tr_lr;
  std::optional<int> tr_batch, tr_epochs, tr_patience;
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--seed", tr_seed, "override train.seed");
  tr->add_option("--lr", tr_lr, "override train.learning_rate");
  tr->add_option("--batch", tr_batch, "override train.batch_size");
  tr->add_option("--epochs", tr_epochs, "override train.max_epochs");
  tr->add_option("--patience", tr_patience, "override train.patience");

  // --- eval ---
  auto* ev = app.add_subcommand("eval", "report MSE of a checkpoint on a split");
  std::string ev_ckpt, ev_data, ev_split = "test";
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--split", ev_split, "train, dev or test");

  // --- infer ---
  auto* inf = app.add_subcommand("infer", "run the model on one scenario");
  std::string inf_ckpt, inf_scenario, inf_class = "S_A", inf_prefix = "map";
  uint64_t inf_seed = 1;
  int inf_scale = 4;
  inf->add_option("--checkpoint", inf_ckpt, "checkpoint file")->required();
  inf->add_option("--scenario", inf_scenario, "scenario JSON (world frame)");
  inf->add_option("--class", inf_class, "scenario class when generating");
  inf->add_option("--seed", inf_seed, "seed when generating");
  inf->add_option("--out-prefix", inf_prefix, "output prefix for .pgm/.csv");
  inf->add_option("--scale", inf_scale, "image upscaling factor");

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "run one navigation episode");
  std::string sim_provider = "gmm", sim_ckpt, sim_scenario, sim_class = "S_A";
  std::string sim_trace, sim_render;
  uint64_t sim_seed = 1;
  sim->add_option("--provider", sim_provider, "sngnn2d, gmm or teacher");
  sim->add_option("--checkpoint", sim_ckpt, "checkpoint for sngnn2d");
  sim->add_option("--scenario", sim_scenario, "scenario JSON (world frame)");
  sim->add_option("--class", sim_class, "scenario class when generating");
  sim->add_option("--seed", sim_seed, "seed when generating");
  sim->add_option("--trace", sim_trace, "write episode trace JSON here");
  sim->add_option("--render", sim_render, "write episode overview PGM here");

  // --- benchmark ---
  auto* bench = app.add_subcommand("benchmark", "paired provider comparison");
  std::string bench_providers = "sngnn2d,gmm", bench_class = "all", bench_ckpt;
  std::string bench_out, bench_traces;
  int bench_episodes = 50;
  uint64_t bench_seed = 1;
  bench->add_option("--providers", bench_providers, "comma-separated provider list");
  bench->add_option("--class", bench_class, "S_A, S_B, S_C or all");
  bench->add_option("--episodes", bench_episodes, "episodes per class");
  bench->add_option("--seed", bench_seed, "base seed (shared across providers)");
  bench->add_option("--checkpoint", bench_ckpt, "checkpoint for sngnn2d");
  bench->add_option("--out", bench_out, "output directory for CSV + traces");
  bench->add_option("--traces", bench_traces, "also write per-episode traces there");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    const GlobalConfig cfg = load_global_config(config_path);

    if (gen->parsed()) {
      Scenario s = cli::load_or_generate_scenario("", gen_class, gen_seed);
      if (gen_robot_frame) s = to_robot_frame(s);
      const std::string text = to_json(s).dump(2) + "\n";
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        atomic_write_file(gen_out, text);
      }
      return 0;
    }

    if (boot->parsed()) {
      const DatasetConfig dcfg = cfg.dataset_config(boot_train, boot_dev, boot_test, boot_seed);
      const DatasetManifest manifest = build_dataset(
          dcfg, boot_out,
          boot_quiet ? std::function<void(const std::string&)>{}
                     : [](const std::string& msg) { std::cerr << msg << "\n"; });
      echo_config(cfg, boot_out);
      std::cout << "dataset written to " << boot_out << " (train=" << boot_train
                << " dev=" << boot_dev << " test=" << boot_test
                << " skipped=" << manifest.skipped << ")\n";
      return 0;
    }

    if (tr->parsed()) {
      TrainConfig tcfg = cfg.train;
      if (tr_seed) tcfg.seed = *tr_seed;
      if (tr_lr) tcfg.learning_rate = *tr_lr;
      if (tr_batch) tcfg.batch_size = *tr_batch;
      if (tr_epochs) tcfg.max_epochs = *tr_epochs;
      if (tr_patience) tcfg.patience = std::min(*tr_patience, tcfg.max_epochs);
      const DatasetManifest manifest = load_manifest(tr_data);

      Model model(cfg.model, manifest.config.out_n);
      const auto train_samples = load_split(tr_data, "train");
      const auto dev_samples = load_split(tr_data, "dev");
      const auto train_items = make_train_items(train_samples, cfg.model);
      const auto dev_items = make_train_items(dev_samples, cfg.model);

      const TrainResult result =
          train(model, train_items, dev_items, tcfg, [](const HistoryRow& r) {
            std::cerr << "epoch " << r.epoch << " train_mse " << r.train_mse
                      << " dev_mse " << r.dev_mse << "\n";
          });

      std::filesystem::create_directories(tr_out);
      save_checkpoint(std::filesystem::path(tr_out) / "checkpoint.bin", cfg.model,
                      model.params());
      atomic_write_file(std::filesystem::path(tr_out) / "history.csv",
                        history_to_csv(result.history));
      echo_config(cfg, tr_out);
      std::cout << "best epoch " << result.best_epoch << " dev_mse "
                << result.best_dev_mse << "\n";
      return 0;
    }

    if (ev->parsed()) {
      auto [mcfg, params] = load_checkpoint(ev_ckpt);
      Model model(mcfg, mcfg.output_size());
      model.params() = std::move(params);
      const DatasetManifest manifest = load_manifest(ev_data);
      if (manifest.config.out_n != mcfg.output_size()) {
        throw std::runtime_error("checkpoint output size does not match dataset");
      }
      const double mse = evaluate(model, load_split(ev_data, ev_split));
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s mse %.10g\n", ev_split.c_str(), mse);
      std::cout << buf;
      return 0;
    }

    if (inf->parsed()) {
      auto [mcfg, params] = load_checkpoint(inf_ckpt);
      Model model(mcfg, mcfg.output_size());
      model.params() = std::move(params);
      Scenario world = cli::load_or_generate_scenario(inf_scenario, inf_class, inf_seed);
      const Scenario rf = world.frame == Frame::robot ? world : to_robot_frame(world);
      const CostMap map = model.forward(build_scene_graph(rf, cfg.graph), cfg.out_w);
      const std::filesystem::path prefix(inf_prefix);
      if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
      atomic_write_file(inf_prefix + ".pgm", render_costmap_pgm(map, inf_scale));
      atomic_write_file(inf_prefix + ".csv", costmap_csv(map));
      char buf[64];
      std::snprintf(buf, sizeof(buf), "centre %.10g\n", map.centre());
      std::cout << buf;
      return 0;
    }

    if (sim->parsed()) {
      cli::ProviderBundle bundle = cli::make_provider(sim_provider, cfg, sim_ckpt);
      const Scenario world =
          cli::load_or_generate_scenario(sim_scenario, sim_class, sim_seed);
      EpisodeResult ep = run_episode(world, *bundle.provider, cfg.controller);
      ep.metrics = compute_metrics(ep);
      if (!sim_trace.empty()) atomic_write_file(sim_trace, to_json(ep).dump() + "\n");
      if (!sim_render.empty()) {
        atomic_write_file(sim_render, render_episode_pgm(ep, cfg.social));
      }
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "reached %d tau %.3f d_t %.3f chc %.3f d_min %.3f si_i %.2f "
                    "si_p %.2f si_r %.2f%s%s\n",
                    ep.reached_goal ? 1 : 0, ep.metrics.tau, ep.metrics.d_t,
                    ep.metrics.chc, ep.metrics.d_min, ep.metrics.si_i, ep.metrics.si_p,
                    ep.metrics.si_r, ep.failure_cause.empty() ? "" : " cause ",
                    ep.failure_cause.c_str());
      std::cout << buf;
      return 0;
    }

    if (bench->parsed()) {
      std::vector<std::string> providers;
      {
        std::istringstream is(bench_providers);
        std::string token;
        while (std::getline(is, token, ',')) providers.push_back(token);
      }
      const auto classes = cli::parse_class_list(bench_class);
      std::vector<BenchmarkSummary> summaries;
      for (const auto& pname : providers) {
        cli::ProviderBundle bundle = cli::make_provider(pname, cfg, bench_ckpt);
        for (const auto cls : classes) {
          auto on_episode = std::function<void(int, const EpisodeResult&)>{};
          if (!bench_traces.empty()) {
            std::filesystem::create_directories(bench_traces);
            on_episode = [&, pname, cls](int e, const EpisodeResult& ep) {
              const std::string file = pname + "_" + to_string(cls) + "_" +
                                       std::to_string(e) + ".json";
              atomic_write_file(std::filesystem::path(bench_traces) / file,
                                to_json(ep).dump() + "\n");
            };
          }
          summaries.push_back(benchmark(*bundle.provider, cls, bench_episodes,
                                        bench_seed, cfg.controller, on_episode));
          summaries.back().results.clear();  // traces already written if wanted
        }
      }
      const std::string csv = benchmark_csv(summaries);
      std::cout << csv;
      if (!bench_out.empty()) {
        std::filesystem::create_directories(bench_out);
        atomic_write_file(std::filesystem::path(bench_out) / "benchmark.csv", csv);
        echo_config(cfg, bench_out);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace socnav
