#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socnav/binio.hpp"
#include "socnav/cost_map.hpp"
#include "socnav/scene_graph.hpp"

namespace socnav {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { elu, linear };

inline double activate(Activation a, double x) {
  if (a == Activation::linear) return x;
  return x > 0.0 ? x : std::expm1(x);
}

// Derivative as a function of the pre-activation value.
inline double activate_deriv(Activation a, double x) {
  if (a == Activation::linear) return 1.0;
  return x > 0.0 ? 1.0 : std::exp(x);
}

inline int deconv_out_size(int in, int kernel, int stride, int padding) {
  return (in - 1) * stride - 2 * padding + kernel;
}

// Graph stage: per-relation weights over typed neighbourhoods, feature widths
// narrowing along dim_schedule. Decoder stage: two transposed convolution
// layers expanding the grid features into the output map.
struct ModelConfig {
  int rgcn_layers = 8;
  std::vector<int> dim_schedule = {21, 19, 17, 15, 13, 11, 9, 8, 7};
  int relation_count = kRelationCount;
  int num_bases = kRelationCount;  // == relation_count means no basis sharing
  int grid_n = 18;
  int conv_hidden = 4;
  int kernel1 = 5;
  int kernel2 = 3;
  int stride = 2;
  int padding = 1;
  Activation activation = Activation::elu;

  int mid_size() const { return deconv_out_size(grid_n, kernel1, stride, padding); }
  int output_size() const {
    return deconv_out_size(mid_size(), kernel2, stride, padding);
  }

  void check() const {
    if (rgcn_layers < 1) throw ConfigError("ModelConfig: rgcn_layers must be >= 1");
    if (static_cast<int>(dim_schedule.size()) != rgcn_layers + 1) {
      throw ConfigError("ModelConfig: dim_schedule must have rgcn_layers + 1 entries");
    }
    if (dim_schedule.front() != kFeatureDim) {
      throw ConfigError("ModelConfig: dim_schedule must start at " +
                        std::to_string(kFeatureDim));
    }
    if (dim_schedule.back() != 7) {
      throw ConfigError("ModelConfig: dim_schedule must end at 7");
    }
    for (int d : dim_schedule) {
      if (d < 1) throw ConfigError("ModelConfig: widths must be positive");
    }
    if (relation_count < 1) throw ConfigError("ModelConfig: relation_count must be >= 1");
    if (num_bases < 1 || num_bases > relation_count) {
      throw ConfigError("ModelConfig: num_bases must be in [1, relation_count]");
    }
    if (grid_n < 2 || conv_hidden < 1 || kernel1 < 1 || kernel2 < 1 ||
        stride < 1 || padding < 0) {
      throw ConfigError("ModelConfig: bad decoder geometry");
    }
    if (mid_size() < 1 || output_size() < 1) {
      throw ConfigError("ModelConfig: decoder arithmetic collapses to nothing");
    }
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"rgcn_layers", c.rgcn_layers},
          {"dim_schedule", c.dim_schedule},
          {"relation_count", c.relation_count},
          {"num_bases", c.num_bases},
          {"grid_n", c.grid_n},
          {"conv_hidden", c.conv_hidden},
          {"kernel1", c.kernel1},
          {"kernel2", c.kernel2},
          {"stride", c.stride},
          {"padding", c.padding},
          {"activation", c.activation == Activation::elu ? "elu" : "linear"}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.rgcn_layers = j.at("rgcn_layers").get<int>();
  c.dim_schedule = j.at("dim_schedule").get<std::vector<int>>();
  c.relation_count = j.at("relation_count").get<int>();
  c.num_bases = j.at("num_bases").get<int>();
  c.grid_n = j.at("grid_n").get<int>();
  c.conv_hidden = j.at("conv_hidden").get<int>();
  c.kernel1 = j.at("kernel1").get<int>();
  c.kernel2 = j.at("kernel2").get<int>();
  c.stride = j.at("stride").get<int>();
  c.padding = j.at("padding").get<int>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "elu") {
    c.activation = Activation::elu;
  } else if (act == "linear") {
    c.activation = Activation::linear;
  } else {
    throw ConfigError("ModelConfig: unknown activation '" + act + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Compiled graph: canonical node order plus per-relation edge arrays.
// ---------------------------------------------------------------------------

struct RelationEdges {
  std::vector<int32_t> src;
  std::vector<int32_t> dst;
  std::vector<double> coef;  // 1 / per-relation in-degree of dst
};

struct CompiledGraph {
  int n = 0;
  Mat x0;                          // n x kFeatureDim
  std::vector<RelationEdges> rel;  // indexed by relation id
  std::vector<int> grid_ids;       // grid_n^2 canonical row indices
  std::vector<int> order;          // canonical row -> original storage index
  int grid_n = 0;
};

// Nodes are reordered by (kind, feature vector) so that the aggregation
// order, and therefore the floating-point result, does not depend on how the
// caller happened to number the nodes.
inline CompiledGraph compile_graph(const SceneGraph& g, int relation_count = kRelationCount) {
  CompiledGraph cg;
  cg.n = static_cast<int>(g.nodes.size());
  cg.grid_n = g.grid_n;

  std::vector<int> order(g.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& na = g.nodes[a];
    const auto& nb = g.nodes[b];
    if (na.kind != nb.kind) return na.kind < nb.kind;
    if (na.feature != nb.feature) return na.feature < nb.feature;
    return na.id < nb.id;
  });

  // node id -> canonical row
  std::unordered_map<int, int> rank;
  rank.reserve(g.nodes.size());
  cg.x0.resize(cg.n, kFeatureDim);
  for (int r = 0; r < cg.n; ++r) {
    const auto& node = g.nodes[order[r]];
    rank[node.id] = r;
    for (int c = 0; c < kFeatureDim; ++c) cg.x0(r, c) = node.feature[c];
  }

  cg.rel.resize(relation_count);
  std::vector<std::vector<std::pair<int32_t, int32_t>>> buckets(relation_count);
  for (const auto& e : g.edges) {
    const int r = static_cast<int>(e.relation);
    if (r < 0 || r >= relation_count) {
      throw std::invalid_argument("compile_graph: relation id out of range");
    }
    buckets[r].push_back({static_cast<int32_t>(rank.at(e.dst)),
                          static_cast<int32_t>(rank.at(e.src))});
  }
  for (int r = 0; r < relation_count; ++r) {
    auto& b = buckets[r];
    std::sort(b.begin(), b.end());
    std::vector<int> indeg(cg.n, 0);
    for (const auto& [d, s] : b) ++indeg[d];
    auto& re = cg.rel[r];
    re.src.reserve(b.size());
    re.dst.reserve(b.size());
    re.coef.reserve(b.size());
    for (const auto& [d, s] : b) {
      re.dst.push_back(d);
      re.src.push_back(s);
      re.coef.push_back(1.0 / indeg[d]);
    }
  }

  if (!g.grid_index.empty()) {
    cg.grid_ids.resize(g.grid_index.size());
    for (size_t k = 0; k < g.grid_index.size(); ++k) {
      cg.grid_ids[k] = rank.at(g.grid_index[k]);
    }
  }
  cg.order = std::move(order);
  return cg;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct RgcnLayerParams {
  Mat w_self;               // d_out x d_in
  std::vector<Mat> w_rel;   // direct mode
  std::vector<Mat> bases;   // basis mode
  Mat coef;                 // basis mode, R x B

  bool basis_mode() const { return !bases.empty(); }

  // Per-relation weight matrices, expanding the basis combination if used.
  std::vector<Mat> materialize(int relation_count) const {
    if (!basis_mode()) return w_rel;
    std::vector<Mat> out(relation_count);
    for (int r = 0; r < relation_count; ++r) {
      Mat m = Mat::Zero(bases[0].rows(), bases[0].cols());
      for (size_t b = 0; b < bases.size(); ++b) m += coef(r, static_cast<int>(b)) * bases[b];
      out[r] = std::move(m);
    }
    return out;
  }
};

struct DeconvParams {
  int c_out = 0, c_in = 0, k = 0;
  std::vector<double> w;  // [c_out][c_in][k][k]
  std::vector<double> b;  // [c_out]

  double& wt(int co, int ci, int ki, int kj) {
    return w[((static_cast<size_t>(co) * c_in + ci) * k + ki) * k + kj];
  }
  double wt(int co, int ci, int ki, int kj) const {
    return w[((static_cast<size_t>(co) * c_in + ci) * k + ki) * k + kj];
  }
};

struct ModelParams {
  std::vector<RgcnLayerParams> layers;
  DeconvParams d1, d2;

  template <class F>
  void for_each_tensor(F&& f) {
    for (size_t l = 0; l < layers.size(); ++l) {
      auto& lp = layers[l];
      const std::string base = "rgcn" + std::to_string(l);
      f(base + ".self", lp.w_self.data(), static_cast<size_t>(lp.w_self.size()),
        std::vector<int>{static_cast<int>(lp.w_self.rows()),
                         static_cast<int>(lp.w_self.cols())});
      if (lp.basis_mode()) {
        for (size_t b = 0; b < lp.bases.size(); ++b) {
          f(base + ".basis" + std::to_string(b), lp.bases[b].data(),
            static_cast<size_t>(lp.bases[b].size()),
            std::vector<int>{static_cast<int>(lp.bases[b].rows()),
                             static_cast<int>(lp.bases[b].cols())});
        }
        f(base + ".coef", lp.coef.data(), static_cast<size_t>(lp.coef.size()),
          std::vector<int>{static_cast<int>(lp.coef.rows()),
                           static_cast<int>(lp.coef.cols())});
      } else {
        for (size_t r = 0; r < lp.w_rel.size(); ++r) {
          f(base + ".rel" + std::to_string(r), lp.w_rel[r].data(),
            static_cast<size_t>(lp.w_rel[r].size()),
            std::vector<int>{static_cast<int>(lp.w_rel[r].rows()),
                             static_cast<int>(lp.w_rel[r].cols())});
        }
      }
    }
    auto deconv = [&](const char* name, DeconvParams& d) {
      f(std::string(name) + ".w", d.w.data(), d.w.size(),
        std::vector<int>{d.c_out, d.c_in, d.k, d.k});
      f(std::string(name) + ".b", d.b.data(), d.b.size(), std::vector<int>{d.c_out});
    };
    deconv("deconv1", d1);
    deconv("deconv2", d2);
  }

  size_t parameter_count() {
    size_t total = 0;
    for_each_tensor([&](const std::string&, double*, size_t n, const std::vector<int>&) {
      total += n;
    });
    return total;
  }

  void set_zero() {
    for_each_tensor([](const std::string&, double* p, size_t n, const std::vector<int>&) {
      std::fill(p, p + n, 0.0);
    });
  }
};

// Symmetric-uniform init scaled by fan-in; biases start at zero.
inline ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.check();
  Rng rng(mix_seed(seed, 0x6d6f64656cULL));
  auto fill = [&](Mat& m, int fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-s, s);
  };
  ModelParams p;
  p.layers.resize(cfg.rgcn_layers);
  for (int l = 0; l < cfg.rgcn_layers; ++l) {
    const int din = cfg.dim_schedule[l];
    const int dout = cfg.dim_schedule[l + 1];
    auto& lp = p.layers[l];
    lp.w_self.resize(dout, din);
    fill(lp.w_self, din);
    if (cfg.num_bases == cfg.relation_count) {
      lp.w_rel.resize(cfg.relation_count);
      for (auto& m : lp.w_rel) {
        m.resize(dout, din);
        fill(m, din);
      }
    } else {
      lp.bases.resize(cfg.num_bases);
      for (auto& m : lp.bases) {
        m.resize(dout, din);
        fill(m, din);
      }
      lp.coef.resize(cfg.relation_count, cfg.num_bases);
      fill(lp.coef, cfg.num_bases);
    }
  }
  auto init_deconv = [&](DeconvParams& d, int co, int ci, int k) {
    d.c_out = co;
    d.c_in = ci;
    d.k = k;
    d.w.resize(static_cast<size_t>(co) * ci * k * k);
    d.b.assign(static_cast<size_t>(co), 0.0);
    const double s = 1.0 / std::sqrt(static_cast<double>(ci) * k * k);
    for (auto& v : d.w) v = rng.uniform(-s, s);
  };
  init_deconv(p.d1, cfg.conv_hidden, cfg.dim_schedule.back(), cfg.kernel1);
  init_deconv(p.d2, 1, cfg.conv_hidden, cfg.kernel2);
  return p;
}

// ---------------------------------------------------------------------------
// Forward pieces
// ---------------------------------------------------------------------------

// One relational graph convolution: h_i' = act(W0 h_i + sum_r sum_{j in
// N_r(i)} W_r h_j / |N_r(i)|). `z_cache`, when given, receives the
// per-relation aggregated inputs for reuse in the backward pass.
inline Mat rgcn_layer(const Mat& feats, const CompiledGraph& g, const Mat& w_self,
                      const std::vector<Mat>& w_rel, Activation act,
                      std::vector<Mat>* z_cache = nullptr) {
  if (feats.rows() != g.n) throw std::invalid_argument("rgcn_layer: node count mismatch");
  if (w_self.cols() != feats.cols()) {
    throw std::invalid_argument("rgcn_layer: feature width mismatch");
  }
  const int din = static_cast<int>(feats.cols());
  Mat pre = feats * w_self.transpose();
  if (z_cache) z_cache->assign(g.rel.size(), Mat());
  Mat z;
  for (size_t r = 0; r < g.rel.size(); ++r) {
    const auto& re = g.rel[r];
    if (re.src.empty()) continue;
    z = Mat::Zero(g.n, din);
    for (size_t k = 0; k < re.src.size(); ++k) {
      z.row(re.dst[k]) += re.coef[k] * feats.row(re.src[k]);
    }
    pre.noalias() += z * w_rel[r].transpose();
    if (z_cache) (*z_cache)[r] = z;
  }
  Mat out = pre;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    out.data()[k] = activate(act, out.data()[k]);
  }
  if (z_cache) z_cache->push_back(std::move(pre));  // last entry: pre-activation
  return out;
}

// Keeps only grid-node features, laid out channel-major [c][i][j].
inline std::vector<double> grid_extract(const Mat& feats, const CompiledGraph& g) {
  if (g.grid_ids.empty()) throw std::runtime_error("grid_extract: graph has no grid");
  const int n = g.grid_n;
  const int c = static_cast<int>(feats.cols());
  std::vector<double> out(static_cast<size_t>(c) * n * n);
  for (int ch = 0; ch < c; ++ch) {
    for (int idx = 0; idx < n * n; ++idx) {
      out[static_cast<size_t>(ch) * n * n + idx] = feats(g.grid_ids[idx], ch);
    }
  }
  return out;
}

inline std::vector<double> deconv_forward(const std::vector<double>& in, int in_n,
                                          const DeconvParams& d, int stride,
                                          int padding) {
  const int out_n = deconv_out_size(in_n, d.k, stride, padding);
  std::vector<double> out(static_cast<size_t>(d.c_out) * out_n * out_n);
  for (int co = 0; co < d.c_out; ++co) {
    std::fill_n(out.begin() + static_cast<size_t>(co) * out_n * out_n,
                static_cast<size_t>(out_n) * out_n, d.b[co]);
  }
  for (int ci = 0; ci < d.c_in; ++ci) {
    for (int i = 0; i < in_n; ++i) {
      for (int j = 0; j < in_n; ++j) {
        const double v = in[(static_cast<size_t>(ci) * in_n + i) * in_n + j];
        if (v == 0.0) continue;
        for (int co = 0; co < d.c_out; ++co) {
          for (int ki = 0; ki < d.k; ++ki) {
            const int oi = i * stride - padding + ki;
            if (oi < 0 || oi >= out_n) continue;
            for (int kj = 0; kj < d.k; ++kj) {
              const int oj = j * stride - padding + kj;
              if (oj < 0 || oj >= out_n) continue;
              out[(static_cast<size_t>(co) * out_n + oi) * out_n + oj] +=
                  d.wt(co, ci, ki, kj) * v;
            }
          }
        }
      }
    }
  }
  return out;
}

struct ForwardTrace {
  std::vector<Mat> h;                    // layer inputs; h[L] = final features
  std::vector<Mat> preact;               // per layer
  std::vector<std::vector<Mat>> z;       // per layer, per relation
  std::vector<std::vector<Mat>> w_rel;   // materialized per layer
  std::vector<double> grid_tensor;       // decoder input
  std::vector<double> d1_pre;            // first deconv pre-activation
  std::vector<double> d1_act;
};

// Upsamples the grid tensor through both transposed convolutions; activation
// between them, linear output.
inline Mat decode(const std::vector<double>& grid_tensor, const ModelConfig& cfg,
                  const DeconvParams& d1, const DeconvParams& d2,
                  ForwardTrace* trace = nullptr) {
  const int n1 = cfg.mid_size();
  const int n2 = cfg.output_size();
  std::vector<double> mid = deconv_forward(grid_tensor, cfg.grid_n, d1, cfg.stride,
                                           cfg.padding);
  std::vector<double> mid_act(mid.size());
  for (size_t k = 0; k < mid.size(); ++k) mid_act[k] = activate(cfg.activation, mid[k]);
  std::vector<double> out = deconv_forward(mid_act, n1, d2, cfg.stride, cfg.padding);
  if (trace) {
    trace->d1_pre = std::move(mid);
    trace->d1_act = mid_act;
  }
  Mat m(n2, n2);
  for (int i = 0; i < n2; ++i) {
    for (int j = 0; j < n2; ++j) m(i, j) = out[static_cast<size_t>(i) * n2 + j];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

class Model {
 public:
  explicit Model(ModelConfig cfg, int expected_output = 73)
      : cfg_(std::move(cfg)) {
    cfg_.check();
    if (cfg_.output_size() != expected_output) {
      throw ConfigError("Model: decoder arithmetic yields " +
                        std::to_string(cfg_.output_size()) + "x" +
                        std::to_string(cfg_.output_size()) + ", expected " +
                        std::to_string(expected_output));
    }
    params_ = init_params(cfg_, 0);
  }

  const ModelConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  // Unclamped map. One query per call.
  Mat forward_raw(const CompiledGraph& g, ForwardTrace* trace = nullptr) const {
    ++queries_;
    if (g.grid_n != cfg_.grid_n) {
      throw std::invalid_argument("Model: graph grid size does not match config");
    }
    Mat h = g.x0;
    if (trace) {
      trace->h.clear();
      trace->preact.clear();
      trace->z.clear();
      trace->w_rel.clear();
    }
    for (int l = 0; l < cfg_.rgcn_layers; ++l) {
      std::vector<Mat> zc;
      std::vector<Mat> wr = params_.layers[l].materialize(cfg_.relation_count);
      Mat next = rgcn_layer(h, g, params_.layers[l].w_self, wr, cfg_.activation,
                            trace ? &zc : nullptr);
      if (trace) {
        trace->h.push_back(h);
        trace->preact.push_back(std::move(zc.back()));
        zc.pop_back();
        trace->z.push_back(std::move(zc));
        trace->w_rel.push_back(std::move(wr));
      }
      h = std::move(next);
    }
    std::vector<double> tensor = grid_extract(h, g);
    if (trace) {
      trace->h.push_back(std::move(h));
      trace->grid_tensor = tensor;
    }
    return decode(tensor, cfg_, params_.d1, params_.d2, trace);
  }

  // Full inference path: compile, run, clamp into a CostMap.
  CostMap forward(const SceneGraph& graph, double out_w) const {
    const CompiledGraph cg = compile_graph(graph, cfg_.relation_count);
    const Mat raw = forward_raw(cg);
    CostMap map(cfg_.output_size(), out_w);
    for (int i = 0; i < map.n; ++i) {
      for (int j = 0; j < map.n; ++j) map.at(i, j) = std::clamp(raw(i, j), 0.0, 1.0);
    }
    return map;
  }

  int64_t queries() const { return queries_; }
  void reset_queries() { queries_ = 0; }

 private:
  ModelConfig cfg_;
  ModelParams params_;
  mutable int64_t queries_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoint IO: versioned binary, shape headers, 32-bit floats.
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'N', 'C', 'K'};

inline void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                            ModelParams& params) {
  std::ostringstream os(std::ios::binary);
  os.write(kCheckpointMagic, 4);
  write_u32(os, kCheckpointVersion);
  write_bytes(os, to_json(cfg).dump());
  uint32_t count = 0;
  params.for_each_tensor(
      [&](const std::string&, double*, size_t, const std::vector<int>&) { ++count; });
  write_u32(os, count);
  params.for_each_tensor([&](const std::string& name, double* data, size_t n,
                             const std::vector<int>& shape) {
    write_bytes(os, name);
    write_u32(os, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_u32(os, static_cast<uint32_t>(d));
    std::vector<float> f(n);
    for (size_t k = 0; k < n; ++k) f[k] = static_cast<float>(data[k]);
    write_f32(os, f.data(), n);
  });
  atomic_write_file(path, os.str());
}

inline std::pair<ModelConfig, ModelParams> load_checkpoint(
    const std::filesystem::path& path) {
  std::istringstream is(read_file(path), std::ios::binary);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic: " + path.string());
  }
  const uint32_t version = read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const ModelConfig cfg =
      model_config_from_json(nlohmann::json::parse(read_bytes(is, "model config")));
  ModelParams params = init_params(cfg, 0);
  const uint32_t count = read_u32(is, "tensor count");
  std::map<std::string, std::vector<float>> tensors;
  for (uint32_t t = 0; t < count; ++t) {
    const std::string name = read_bytes(is, "tensor name");
    const uint32_t ndim = read_u32(is, "tensor rank");
    size_t n = 1;
    for (uint32_t d = 0; d < ndim; ++d) n *= read_u32(is, "tensor shape");
    std::vector<float> data(n);
    read_f32(is, data.data(), n, "tensor data");
    tensors[name] = std::move(data);
  }
  params.for_each_tensor([&](const std::string& name, double* data, size_t n,
                             const std::vector<int>&) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint missing tensor " + name);
    if (it->second.size() != n) {
      throw FormatError("checkpoint tensor " + name + " has wrong size");
    }
    for (size_t k = 0; k < n; ++k) data[k] = static_cast<double>(it->second[k]);
  });
  return {cfg, std::move(params)};
}

}  // namespace socnav
