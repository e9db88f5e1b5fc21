#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socnav/binio.hpp"
#include "socnav/scene_graph.hpp"
#include "socnav/scoring.hpp"

namespace socnav {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr char kSplitMagic[4] = {'S', 'N', 'D', 'S'};

// Ground-truth map for one scenario, produced by re-querying the scalar
// scorer with the scene shifted to every cell position. Exactly out_n^2
// scorer queries.
inline CostMap sample_map(const Scenario& s,
                          const std::function<double(const Scenario&)>& scorer,
                          int out_n, double out_w) {
  if (s.frame != Frame::robot) {
    throw std::invalid_argument("sample_map: scenario must be in robot frame");
  }
  if (out_n % 2 == 0) {
    throw std::invalid_argument("sample_map: out_n must be odd");
  }
  CostMap map(out_n, out_w);
  for (int i = 0; i < out_n; ++i) {
    for (int j = 0; j < out_n; ++j) {
      const Vec2 c = grid_coords(i, j, out_n, out_w);
      map.at(i, j) = scorer(shift_scenario(s, c.x, c.y));
    }
  }
  return map;
}

struct DatasetSample {
  std::string sample_id;
  Scenario scenario;             // robot frame
  SceneGraph graph;              // rebuilt from the scenario on load
  std::vector<float> features;   // node_count x kFeatureDim, row-major
  std::vector<float> target;     // out_n x out_n, row-major
  int out_n = 0;
};

struct DatasetConfig {
  int n_train = 600;
  int n_dev = 50;
  int n_test = 50;
  uint64_t seed = 1;
  GraphConfig graph;
  SocialParams social;
  int out_n = 73;
  double out_w = 10.0;  // kept equal to graph.w
};

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  DatasetConfig config;
  int skipped = 0;
  std::map<std::string, int> counts;          // split -> record count
  std::map<std::string, std::string> files;   // split -> file name
  std::map<std::string, std::string> hashes;  // split -> fnv1a64 of file
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["seed"] = m.config.seed;
  j["skipped"] = m.skipped;
  j["graph"] = {{"n", m.config.graph.n},
                {"w", m.config.graph.w},
                {"max_wall_segment", m.config.graph.max_wall_segment}};
  j["social"] = {{"sigma_front", m.config.social.sigma_front},
                 {"sigma_side", m.config.social.sigma_side},
                 {"sigma_back", m.config.social.sigma_back},
                 {"interaction_halfwidth", m.config.social.interaction_halfwidth},
                 {"wall_margin", m.config.social.wall_margin},
                 {"intimate_floor", m.config.social.intimate_floor}};
  j["out_n"] = m.config.out_n;
  j["out_w"] = m.config.out_w;
  j["counts"] = m.counts;
  j["files"] = m.files;
  j["hashes"] = m.hashes;
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kDatasetFormatVersion) {
    throw FormatError("dataset manifest: unsupported format version " +
                      std::to_string(m.format_version));
  }
  m.config.seed = j.at("seed").get<uint64_t>();
  m.skipped = j.at("skipped").get<int>();
  m.config.graph.n = j.at("graph").at("n").get<int>();
  m.config.graph.w = j.at("graph").at("w").get<double>();
  m.config.graph.max_wall_segment = j.at("graph").at("max_wall_segment").get<double>();
  const auto& s = j.at("social");
  m.config.social.sigma_front = s.at("sigma_front").get<double>();
  m.config.social.sigma_side = s.at("sigma_side").get<double>();
  m.config.social.sigma_back = s.at("sigma_back").get<double>();
  m.config.social.interaction_halfwidth = s.at("interaction_halfwidth").get<double>();
  m.config.social.wall_margin = s.at("wall_margin").get<double>();
  m.config.social.intimate_floor = s.at("intimate_floor").get<double>();
  m.config.out_n = j.at("out_n").get<int>();
  m.config.out_w = j.at("out_w").get<double>();
  m.counts = j.at("counts").get<std::map<std::string, int>>();
  m.files = j.at("files").get<std::map<std::string, std::string>>();
  m.hashes = j.at("hashes").get<std::map<std::string, std::string>>();
  return m;
}

namespace detail {

inline void write_record(std::ostream& os, const DatasetSample& rec) {
  write_bytes(os, rec.sample_id);
  write_bytes(os, to_json(rec.scenario).dump());
  const uint32_t node_count = static_cast<uint32_t>(rec.features.size() / kFeatureDim);
  write_u32(os, node_count);
  write_u32(os, kFeatureDim);
  write_f32(os, rec.features.data(), rec.features.size());
  write_u32(os, static_cast<uint32_t>(rec.out_n));
  write_f32(os, rec.target.data(), rec.target.size());
}

inline std::vector<float> features_f32(const SceneGraph& g) {
  std::vector<float> out;
  out.reserve(g.nodes.size() * kFeatureDim);
  for (const auto& n : g.nodes) {
    for (double v : n.feature) out.push_back(static_cast<float>(v));
  }
  return out;
}

inline std::vector<float> target_f32(const CostMap& m) {
  std::vector<float> out;
  out.reserve(m.values.size());
  for (double v : m.values) out.push_back(static_cast<float>(v));
  return out;
}

}  // namespace detail

// Builds one (graph, target map) sample from a world-frame scenario.
inline DatasetSample make_sample(const Scenario& world, const DatasetConfig& cfg,
                                 std::string sample_id) {
  DatasetSample rec;
  rec.sample_id = std::move(sample_id);
  rec.scenario = to_robot_frame(world);
  rec.graph = build_scene_graph(rec.scenario, cfg.graph);
  rec.features = detail::features_f32(rec.graph);
  const CostMap target = sample_map(
      rec.scenario,
      [&](const Scenario& q) { return reference_score(q, cfg.social); },
      cfg.out_n, cfg.out_w);
  rec.target = detail::target_f32(target);
  rec.out_n = cfg.out_n;
  return rec;
}

// Generates the train/dev/test splits, drawing scenario classes round-robin
// and deriving one seed per sample. The manifest is written last as the
// commit marker; on failure, partial outputs are removed.
inline DatasetManifest build_dataset(const DatasetConfig& cfg,
                                     const std::filesystem::path& out_dir,
                                     std::function<void(const std::string&)> log = {}) {
  namespace fs = std::filesystem;
  if (cfg.n_train < 1 || cfg.n_dev < 1 || cfg.n_test < 1) {
    throw std::invalid_argument("build_dataset: split sizes must be >= 1");
  }
  cfg.graph.check();
  cfg.social.check();
  if (cfg.out_n % 2 == 0) throw std::invalid_argument("build_dataset: out_n must be odd");

  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.config = cfg;

  const ScenarioClass classes[3] = {ScenarioClass::S_A, ScenarioClass::S_B,
                                    ScenarioClass::S_C};
  struct Split {
    const char* name;
    int count;
  };
  const Split splits[3] = {{"train", cfg.n_train}, {"dev", cfg.n_dev},
                           {"test", cfg.n_test}};

  uint64_t global_index = 0;
  try {
    for (const auto& split : splits) {
      const fs::path file = out_dir / (std::string(split.name) + ".bin");
      std::ofstream os(file, std::ios::binary | std::ios::trunc);
      if (!os) throw FormatError("cannot open for writing: " + file.string());
      os.write(kSplitMagic, 4);
      write_u32(os, kDatasetFormatVersion);
      write_u64(os, static_cast<uint64_t>(split.count));

      int written = 0;
      while (written < split.count) {
        const ScenarioClass cls = classes[global_index % 3];
        const uint64_t sample_seed = mix_seed(cfg.seed, global_index);
        const std::string id = std::string(split.name) + "/" +
                               std::to_string(global_index);
        ++global_index;
        try {
          const Scenario world = generate_scenario(cls, sample_seed);
          detail::write_record(os, make_sample(world, cfg, id));
          ++written;
        } catch (const GenerationError& e) {
          ++manifest.skipped;
          if (log) log("skipping " + id + ": " + e.what());
        }
        if (!os) throw FormatError("write failed: " + file.string());
      }
      os.close();
      manifest.counts[split.name] = split.count;
      manifest.files[split.name] = std::string(split.name) + ".bin";
      manifest.hashes[split.name] = hex64(fnv1a64_file(file));
    }
  } catch (...) {
    for (const auto& split : splits) {
      std::error_code ec;
      fs::remove(out_dir / (std::string(split.name) + ".bin"), ec);
    }
    throw;
  }

  atomic_write_file(out_dir / "manifest.json", to_json(manifest).dump(2) + "\n");
  return manifest;
}

inline DatasetManifest load_manifest(const std::filesystem::path& dataset_dir) {
  const auto path = dataset_dir / "manifest.json";
  if (!std::filesystem::exists(path)) {
    throw FormatError("dataset manifest not found: " + path.string());
  }
  return manifest_from_json(nlohmann::json::parse(read_file(path)));
}

// Streams one split in manifest order.
class DatasetReader {
 public:
  DatasetReader(const std::filesystem::path& dataset_dir, const std::string& split)
      : manifest_(load_manifest(dataset_dir)) {
    const auto it = manifest_.files.find(split);
    if (it == manifest_.files.end()) {
      throw FormatError("unknown dataset split '" + split + "'");
    }
    path_ = dataset_dir / it->second;
    is_.open(path_, std::ios::binary);
    if (!is_) throw FormatError("cannot open split file: " + path_.string());
    char magic[4];
    if (!is_.read(magic, 4) || std::memcmp(magic, kSplitMagic, 4) != 0) {
      throw FormatError("bad split file magic: " + path_.string());
    }
    const uint32_t version = read_u32(is_, "split version");
    if (version != kDatasetFormatVersion) {
      throw FormatError("unsupported split format version " + std::to_string(version));
    }
    remaining_ = read_u64(is_, "record count");
  }

  const DatasetManifest& manifest() const { return manifest_; }
  uint64_t remaining() const { return remaining_; }

  bool next(DatasetSample& rec) {
    if (remaining_ == 0) return false;
    try {
      rec.sample_id = read_bytes(is_, "sample id");
      rec.scenario = scenario_from_json(nlohmann::json::parse(read_bytes(is_, "scenario")));
      const uint32_t node_count = read_u32(is_, "node count");
      const uint32_t feat_dim = read_u32(is_, "feature dim");
      if (feat_dim != kFeatureDim) {
        throw FormatError("unexpected feature dim " + std::to_string(feat_dim));
      }
      rec.features.resize(static_cast<size_t>(node_count) * feat_dim);
      read_f32(is_, rec.features.data(), rec.features.size(), "features");
      rec.out_n = static_cast<int>(read_u32(is_, "target size"));
      rec.target.resize(static_cast<size_t>(rec.out_n) * rec.out_n);
      read_f32(is_, rec.target.data(), rec.target.size(), "target");
    } catch (const FormatError& e) {
      throw FormatError("record " + std::to_string(index_) + " (" +
                        (rec.sample_id.empty() ? std::string("?") : rec.sample_id) +
                        ") in " + path_.string() + ": " + e.what());
    }
    rec.graph = build_scene_graph(rec.scenario, manifest_.config.graph);
    if (rec.graph.nodes.size() * kFeatureDim != rec.features.size()) {
      throw FormatError("record " + rec.sample_id + ": stored features do not match graph");
    }
    --remaining_;
    ++index_;
    return true;
  }

 private:
  DatasetManifest manifest_;
  std::filesystem::path path_;
  std::ifstream is_;
  uint64_t remaining_ = 0;
  uint64_t index_ = 0;
};

inline std::vector<DatasetSample> load_split(const std::filesystem::path& dataset_dir,
                                             const std::string& split) {
  DatasetReader reader(dataset_dir, split);
  std::vector<DatasetSample> out;
  DatasetSample rec;
  while (reader.next(rec)) out.push_back(rec);
  return out;
}

}  // namespace socnav
