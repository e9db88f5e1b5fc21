#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "socnav/dataset.hpp"
#include "socnav/model.hpp"

namespace socnav {

struct TrainConfig {
  double learning_rate = 0.002;
  int batch_size = 4;
  int max_epochs = 50;
  int patience = 15;  // epochs without dev improvement
  uint64_t seed = 1;

  void check() const {
    if (learning_rate <= 0 || batch_size < 1 || max_epochs < 1 || patience < 1) {
      throw ConfigError("TrainConfig: all fields must be positive");
    }
    if (patience > max_epochs) {
      throw ConfigError("TrainConfig: patience must not exceed max_epochs");
    }
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

// One pre-compiled training item.
struct TrainItem {
  CompiledGraph graph;
  Mat target;
};

inline TrainItem make_train_item(const DatasetSample& rec, const ModelConfig& cfg) {
  TrainItem item;
  item.graph = compile_graph(rec.graph, cfg.relation_count);
  item.target.resize(rec.out_n, rec.out_n);
  for (int i = 0; i < rec.out_n; ++i) {
    for (int j = 0; j < rec.out_n; ++j) {
      item.target(i, j) = static_cast<double>(rec.target[static_cast<size_t>(i) * rec.out_n + j]);
    }
  }
  return item;
}

inline std::vector<TrainItem> make_train_items(const std::vector<DatasetSample>& recs,
                                               const ModelConfig& cfg) {
  std::vector<TrainItem> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(make_train_item(r, cfg));
  return out;
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

namespace detail {

inline void deconv_backward(const std::vector<double>& in, int in_n,
                            const DeconvParams& d, int stride, int padding,
                            const std::vector<double>& d_out, int out_n,
                            std::vector<double>& d_in, DeconvParams& d_grad) {
  d_in.assign(in.size(), 0.0);
  for (int co = 0; co < d.c_out; ++co) {
    double s = 0.0;
    const size_t base = static_cast<size_t>(co) * out_n * out_n;
    for (int k = 0; k < out_n * out_n; ++k) s += d_out[base + k];
    d_grad.b[co] += s;
  }
  for (int ci = 0; ci < d.c_in; ++ci) {
    for (int i = 0; i < in_n; ++i) {
      for (int j = 0; j < in_n; ++j) {
        const size_t in_idx = (static_cast<size_t>(ci) * in_n + i) * in_n + j;
        const double v = in[in_idx];
        double acc = 0.0;
        for (int co = 0; co < d.c_out; ++co) {
          for (int ki = 0; ki < d.k; ++ki) {
            const int oi = i * stride - padding + ki;
            if (oi < 0 || oi >= out_n) continue;
            for (int kj = 0; kj < d.k; ++kj) {
              const int oj = j * stride - padding + kj;
              if (oj < 0 || oj >= out_n) continue;
              const double g = d_out[(static_cast<size_t>(co) * out_n + oi) * out_n + oj];
              d_grad.wt(co, ci, ki, kj) += v * g;
              acc += d.wt(co, ci, ki, kj) * g;
            }
          }
        }
        d_in[in_idx] = acc;
      }
    }
  }
}

}  // namespace detail

// Accumulates dLoss/dParams into `grads` given the trace of a forward pass
// and dLoss/dOutput.
inline void backward(const ModelConfig& cfg, const ModelParams& params,
                     const CompiledGraph& g, const ForwardTrace& trace,
                     const Mat& d_out, ModelParams& grads) {
  const int n1 = cfg.mid_size();
  const int n2 = cfg.output_size();

  std::vector<double> d_out_flat(static_cast<size_t>(n2) * n2);
  for (int i = 0; i < n2; ++i) {
    for (int j = 0; j < n2; ++j) d_out_flat[static_cast<size_t>(i) * n2 + j] = d_out(i, j);
  }

  std::vector<double> d_mid_act;
  detail::deconv_backward(trace.d1_act, n1, params.d2, cfg.stride, cfg.padding,
                          d_out_flat, n2, d_mid_act, grads.d2);
  std::vector<double> d_mid(d_mid_act.size());
  for (size_t k = 0; k < d_mid.size(); ++k) {
    d_mid[k] = d_mid_act[k] * activate_deriv(cfg.activation, trace.d1_pre[k]);
  }
  std::vector<double> d_tensor;
  detail::deconv_backward(trace.grid_tensor, cfg.grid_n, params.d1, cfg.stride,
                          cfg.padding, d_mid, n1, d_tensor, grads.d1);

  // Scatter decoder-input gradients back to grid nodes.
  const int gn = cfg.grid_n;
  const int c_last = cfg.dim_schedule.back();
  Mat dh = Mat::Zero(g.n, c_last);
  for (int ch = 0; ch < c_last; ++ch) {
    for (int idx = 0; idx < gn * gn; ++idx) {
      dh(g.grid_ids[idx], ch) = d_tensor[static_cast<size_t>(ch) * gn * gn + idx];
    }
  }

  for (int l = cfg.rgcn_layers - 1; l >= 0; --l) {
    const Mat& pre = trace.preact[l];
    Mat dp(dh.rows(), dh.cols());
    for (Eigen::Index k = 0; k < dp.size(); ++k) {
      dp.data()[k] = dh.data()[k] * activate_deriv(cfg.activation, pre.data()[k]);
    }
    const Mat& h_in = trace.h[l];
    auto& lg = grads.layers[l];
    lg.w_self.noalias() += dp.transpose() * h_in;

    Mat dh_prev = dp * params.layers[l].w_self;
    const bool basis = params.layers[l].basis_mode();
    for (int r = 0; r < cfg.relation_count; ++r) {
      const auto& re = g.rel[r];
      if (re.src.empty()) continue;
      const Mat& z = trace.z[l][r];
      Mat dw_r = dp.transpose() * z;
      if (basis) {
        for (size_t b = 0; b < params.layers[l].bases.size(); ++b) {
          lg.bases[b].noalias() += params.layers[l].coef(r, static_cast<int>(b)) * dw_r;
          lg.coef(r, static_cast<int>(b)) +=
              (dw_r.array() * params.layers[l].bases[b].array()).sum();
        }
      } else {
        lg.w_rel[r] += dw_r;
      }
      const Mat u = dp * trace.w_rel[l][r];
      for (size_t k = 0; k < re.src.size(); ++k) {
        dh_prev.row(re.src[k]) += re.coef[k] * u.row(re.dst[k]);
      }
    }
    dh = std::move(dh_prev);
  }
}

// Training objective: mean squared error over the map cells, on unclamped
// outputs (clamping only happens at inference).
inline double sample_loss(const Mat& raw, const Mat& target, Mat* d_out = nullptr) {
  const double inv = 1.0 / static_cast<double>(raw.size());
  double loss = 0.0;
  if (d_out) d_out->resize(raw.rows(), raw.cols());
  for (Eigen::Index k = 0; k < raw.size(); ++k) {
    const double e = raw.data()[k] - target.data()[k];
    loss += e * e;
    if (d_out) d_out->data()[k] = 2.0 * e * inv;
  }
  return loss * inv;
}

// Measurement of delivered map quality: same cell-mean squared error, but on
// the [0, 1]-clamped values the inference path emits.
inline double clamped_mse(const Mat& raw, const Mat& target) {
  double loss = 0.0;
  for (Eigen::Index k = 0; k < raw.size(); ++k) {
    const double e = std::clamp(raw.data()[k], 0.0, 1.0) - target.data()[k];
    loss += e * e;
  }
  return loss / static_cast<double>(raw.size());
}

// ---------------------------------------------------------------------------
// Adam optimizer over the flattened parameter set.
// ---------------------------------------------------------------------------

class Adam {
 public:
  Adam(ModelParams& params, double lr) : lr_(lr) {
    size_t total = 0;
    params.for_each_tensor(
        [&](const std::string&, double*, size_t n, const std::vector<int>&) { total += n; });
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  }

  void step(ModelParams& params, ModelParams& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    size_t off = 0;
    std::vector<std::pair<double*, size_t>> ptensors, gtensors;
    params.for_each_tensor([&](const std::string&, double* p, size_t n,
                               const std::vector<int>&) { ptensors.push_back({p, n}); });
    grads.for_each_tensor([&](const std::string&, double* p, size_t n,
                              const std::vector<int>&) { gtensors.push_back({p, n}); });
    for (size_t t = 0; t < ptensors.size(); ++t) {
      double* p = ptensors[t].first;
      const double* gr = gtensors[t].first;
      const size_t n = ptensors[t].second;
      for (size_t k = 0; k < n; ++k) {
        const double grad = gr[k];
        m_[off + k] = beta1_ * m_[off + k] + (1.0 - beta1_) * grad;
        v_[off + k] = beta2_ * v_[off + k] + (1.0 - beta2_) * grad * grad;
        const double mh = m_[off + k] / bc1;
        const double vh = v_[off + k] / bc2;
        p[k] -= lr_ * mh / (std::sqrt(vh) + eps_);
      }
      off += n;
    }
  }

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  int t_ = 0;
  std::vector<double> m_, v_;
};

// ---------------------------------------------------------------------------
// Training / evaluation
// ---------------------------------------------------------------------------

struct HistoryRow {
  int epoch = 0;
  double train_mse = 0.0;
  double dev_mse = 0.0;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  double best_dev_mse = 0.0;
  std::vector<HistoryRow> history;
};

inline std::string history_to_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "epoch,train_mse,dev_mse\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", r.epoch, r.train_mse, r.dev_mse);
    os << buf;
  }
  return os.str();
}

// Mean over samples of per-sample cell MSE. By default this measures what
// the model actually delivers (clamped inference maps); `clamped = false`
// gives the raw training objective instead, which is what dev-based model
// selection uses.
inline double evaluate_items(const Model& model, const std::vector<TrainItem>& items,
                             bool clamped = true) {
  if (items.empty()) throw std::invalid_argument("evaluate: empty split");
  double total = 0.0;
  for (const auto& it : items) {
    const Mat raw = model.forward_raw(it.graph);
    total += clamped ? clamped_mse(raw, it.target) : sample_loss(raw, it.target);
  }
  return total / static_cast<double>(items.size());
}

inline double evaluate(const Model& model, const std::vector<DatasetSample>& samples,
                       bool clamped = true) {
  return evaluate_items(model, make_train_items(samples, model.config()), clamped);
}

// Minimizes MSE with Adam over shuffled mini-batches; keeps the parameters
// with the lowest dev MSE and stops once `patience` epochs pass without
// improvement.
inline TrainResult train(Model& model, const std::vector<TrainItem>& train_items,
                         const std::vector<TrainItem>& dev_items, const TrainConfig& tcfg,
                         std::function<void(const HistoryRow&)> on_epoch = {}) {
  tcfg.check();
  if (train_items.empty() || dev_items.empty()) {
    throw std::invalid_argument("train: both train and dev splits must be non-empty");
  }
  const ModelConfig& cfg = model.config();
  ModelParams& params = model.params();
  params = init_params(cfg, tcfg.seed);
  Adam opt(params, tcfg.learning_rate);

  ModelParams grads = params;
  TrainResult result;
  result.best_params = params;
  result.best_dev_mse = std::numeric_limits<double>::infinity();
  result.best_epoch = 0;

  std::vector<size_t> order(train_items.size());
  std::iota(order.begin(), order.end(), 0);

  ForwardTrace trace;
  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(tcfg.seed, 0xe70c * static_cast<uint64_t>(epoch)));
    for (size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[shuffle_rng.uniform_int(0, static_cast<int>(k) - 1)]);
    }

    double epoch_loss = 0.0;
    size_t pos = 0;
    int batch_index = 0;
    while (pos < order.size()) {
      const size_t end = std::min(pos + static_cast<size_t>(tcfg.batch_size), order.size());
      grads.set_zero();
      double batch_loss = 0.0;
      for (size_t k = pos; k < end; ++k) {
        const TrainItem& item = train_items[order[k]];
        const Mat raw = model.forward_raw(item.graph, &trace);
        Mat d_out;
        batch_loss += sample_loss(raw, item.target, &d_out);
        d_out *= 1.0 / static_cast<double>(end - pos);
        backward(cfg, params, item.graph, trace, d_out, grads);
      }
      batch_loss /= static_cast<double>(end - pos);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index));
      }
      epoch_loss += batch_loss * static_cast<double>(end - pos);
      opt.step(params, grads);
      pos = end;
      ++batch_index;
    }
    epoch_loss /= static_cast<double>(train_items.size());

    const double dev_mse = evaluate_items(model, dev_items, /*clamped=*/false);
    HistoryRow row{epoch, epoch_loss, dev_mse};
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);

    if (dev_mse < result.best_dev_mse) {
      result.best_dev_mse = dev_mse;
      result.best_epoch = epoch;
      result.best_params = params;
    } else if (epoch - result.best_epoch >= tcfg.patience) {
      break;
    }
  }
  params = result.best_params;
  return result;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient validation
// ---------------------------------------------------------------------------

inline double loss_at(Model& model, const CompiledGraph& g, const Mat& target) {
  return sample_loss(model.forward_raw(g), target);
}

// Central differences against the analytic gradients; returns the maximum
// relative error over every checked parameter. `max_per_tensor` limits how
// many entries of each tensor are probed (0 = all). Gradients below
// `denom_floor` are compared on that absolute scale instead, keeping the
// metric above the cancellation noise of (loss+ - loss-).
inline double gradient_check(Model& model, const CompiledGraph& g, const Mat& target,
                             double eps, int max_per_tensor = 0,
                             double denom_floor = 1e-5) {
  ForwardTrace trace;
  const Mat raw = model.forward_raw(g, &trace);
  Mat d_out;
  sample_loss(raw, target, &d_out);
  ModelParams grads = model.params();
  grads.set_zero();
  backward(model.config(), model.params(), g, trace, d_out, grads);

  std::vector<std::pair<double*, size_t>> ptensors, gtensors;
  model.params().for_each_tensor([&](const std::string&, double* p, size_t n,
                                     const std::vector<int>&) { ptensors.push_back({p, n}); });
  grads.for_each_tensor([&](const std::string&, double* p, size_t n,
                            const std::vector<int>&) { gtensors.push_back({p, n}); });

  double max_rel = 0.0;
  for (size_t t = 0; t < ptensors.size(); ++t) {
    double* p = ptensors[t].first;
    const double* ga = gtensors[t].first;
    const size_t n = ptensors[t].second;
    const size_t step = (max_per_tensor > 0 && n > static_cast<size_t>(max_per_tensor))
                            ? n / static_cast<size_t>(max_per_tensor)
                            : 1;
    for (size_t k = 0; k < n; k += step) {
      const double saved = p[k];
      p[k] = saved + eps;
      const double lp = loss_at(model, g, target);
      p[k] = saved - eps;
      const double lm = loss_at(model, g, target);
      p[k] = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(ga[k]), denom_floor});
      max_rel = std::max(max_rel, std::abs(numeric - ga[k]) / denom);
    }
  }
  return max_rel;
}

// L2 norm of the analytic gradient; used to confirm stationarity at zero loss.
inline double gradient_norm(Model& model, const CompiledGraph& g, const Mat& target) {
  ForwardTrace trace;
  const Mat raw = model.forward_raw(g, &trace);
  Mat d_out;
  sample_loss(raw, target, &d_out);
  ModelParams grads = model.params();
  grads.set_zero();
  backward(model.config(), model.params(), g, trace, d_out, grads);
  double s = 0.0;
  grads.for_each_tensor([&](const std::string&, double* p, size_t n,
                            const std::vector<int>&) {
    for (size_t k = 0; k < n; ++k) s += p[k] * p[k];
  });
  return std::sqrt(s);
}

}  // namespace socnav
