#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "acll/dataset.hpp"
#include "acll/detail/random.hpp"
#include "acll/errors.hpp"

#include <json.hpp>

namespace acll {

using Mask = std::vector<std::uint8_t>;

inline Mask mask_union(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) throw ShapeError("mask_union: length mismatch");
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

enum class Optimizer { plain_sgd, momentum_sgd };

struct TrainConfig {
  int epochs = 60;
  double learning_rate = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::plain_sgd;

  void validate() const {
    if (epochs < 1) throw InvalidSpecError("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidSpecError("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw InvalidSpecError("TrainConfig: batch_size must be >= 1");
  }
};

struct TrainReport {
  double final_loss = 0.0;
  int epochs_run = 0;
};

/// Dense feedforward classifier with rectifier trunk layers and one linear
/// output head per task. All parameters live in one flat vector: trunk layer
/// matrices and biases in layer order, then head slices in registration
/// order. Layer l stores W (fan_out x fan_in, row-major) followed by b.
struct Network {
  struct Head {
    int task_id = 0;
    int class_count = 0;
    std::size_t offset = 0;  // into weights
  };

  std::vector<int> layer_dims;   // trunk: input, hidden..., last feature dim
  std::vector<double> weights;
  std::vector<Head> heads;

  std::size_t trunk_size() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layer_dims.size(); ++l)
      n += static_cast<std::size_t>(layer_dims[l - 1] + 1) * layer_dims[l];
    return n;
  }

  int input_dim() const { return layer_dims.front(); }
  int feature_dim() const { return layer_dims.back(); }
  std::size_t n_trunk_layers() const { return layer_dims.size() - 1; }

  // [offset, offset+size) of trunk layer l (0-based), matrix then bias.
  void trunk_layer_range(std::size_t l, std::size_t& begin, std::size_t& end) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < l; ++k)
      off += static_cast<std::size_t>(layer_dims[k] + 1) * layer_dims[k + 1];
    begin = off;
    end = off + static_cast<std::size_t>(layer_dims[l] + 1) * layer_dims[l + 1];
  }

  // Bias entries of layer l sit after its fan_out x fan_in matrix block.
  std::size_t trunk_layer_bias_begin(std::size_t l) const {
    std::size_t b, e;
    trunk_layer_range(l, b, e);
    return e - layer_dims[l + 1];
  }

  bool is_trunk_bias(std::size_t index) const {
    for (std::size_t l = 0; l < n_trunk_layers(); ++l) {
      std::size_t b, e;
      trunk_layer_range(l, b, e);
      if (index >= b && index < e) return index >= trunk_layer_bias_begin(l);
    }
    return false;
  }

  const Head& head(int task_id) const {
    for (const auto& h : heads)
      if (h.task_id == task_id) return h;
    throw InvalidTaskError("no head registered for task " + std::to_string(task_id));
  }

  bool has_head(int task_id) const {
    for (const auto& h : heads)
      if (h.task_id == task_id) return true;
    return false;
  }

  std::size_t head_size(const Head& h) const {
    return static_cast<std::size_t>(feature_dim() + 1) * h.class_count;
  }
};

/// Builds a trunk-only network. Matrix entries are zero-mean gaussian scaled
/// by 1/sqrt(fan_in); biases start at zero. Deterministic per seed.
inline Network init_network(const std::vector<int>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw InvalidSpecError("init_network: need at least 2 layer dims");
  for (int d : layer_dims)
    if (d <= 0) throw InvalidSpecError("init_network: layer dims must be positive");
  Network net;
  net.layer_dims = layer_dims;
  net.weights.resize(net.trunk_size(), 0.0);
  detail::Rng rng(detail::derive_seed(seed, 0x11));
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    std::size_t b, e;
    net.trunk_layer_range(l, b, e);
    const std::size_t bias_begin = net.trunk_layer_bias_begin(l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_dims[l]));
    for (std::size_t i = b; i < bias_begin; ++i) net.weights[i] = scale * rng.gaussian();
  }
  return net;
}

/// Appends a head slice for `task_id`; same init scheme as the trunk.
inline void register_head(Network& net, int task_id, int class_count, std::uint64_t seed) {
  if (class_count < 2) throw InvalidSpecError("register_head: class_count must be >= 2");
  if (net.has_head(task_id))
    throw SequencingError("register_head: task already has a head");
  Network::Head h;
  h.task_id = task_id;
  h.class_count = class_count;
  h.offset = net.weights.size();
  const std::size_t n = static_cast<std::size_t>(net.feature_dim() + 1) * class_count;
  net.weights.resize(net.weights.size() + n, 0.0);
  detail::Rng rng(detail::derive_seed(seed, 0x1ead));
  const double scale = 1.0 / std::sqrt(static_cast<double>(net.feature_dim()));
  const std::size_t bias_begin = h.offset + static_cast<std::size_t>(net.feature_dim()) * class_count;
  for (std::size_t i = h.offset; i < bias_begin; ++i) net.weights[i] = scale * rng.gaussian();
  net.heads.push_back(h);
}

namespace detail {

// Forward pass under a mask; fills per-layer activations (post-rectifier) and
// final logits. activations[0] is the input row.
struct ForwardScratch {
  std::vector<std::vector<double>> activations;
  std::vector<double> logits;
};

inline void forward_row(const Network& net, const Mask* mask, const Network::Head& head,
                        const double* x, ForwardScratch& s) {
  const auto& dims = net.layer_dims;
  s.activations.resize(dims.size());
  s.activations[0].assign(x, x + dims[0]);
  std::size_t off = 0;
  auto w = [&](std::size_t i) {
    return mask ? net.weights[i] * double((*mask)[i]) : net.weights[i];
  };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const std::size_t bias = off + static_cast<std::size_t>(fan_in) * fan_out;
    auto& prev = s.activations[l];
    auto& cur = s.activations[l + 1];
    cur.assign(fan_out, 0.0);
    for (int j = 0; j < fan_out; ++j) {
      double z = w(bias + j);
      const std::size_t row = off + static_cast<std::size_t>(j) * fan_in;
      for (int i = 0; i < fan_in; ++i) z += w(row + i) * prev[i];
      cur[j] = z > 0.0 ? z : 0.0;
    }
    off = bias + fan_out;
  }
  const int fan_in = dims.back();
  const int classes = head.class_count;
  const std::size_t bias = head.offset + static_cast<std::size_t>(fan_in) * classes;
  auto& feat = s.activations.back();
  s.logits.assign(classes, 0.0);
  for (int c = 0; c < classes; ++c) {
    double z = w(bias + c);
    const std::size_t row = head.offset + static_cast<std::size_t>(c) * fan_in;
    for (int i = 0; i < fan_in; ++i) z += w(row + i) * feat[i];
    s.logits[c] = z;
  }
}

inline int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(v.size()); ++j)
    if (v[j] > v[best]) best = j;
  return best;
}

// Softmax cross-entropy of one row; optionally accumulates the gradient of
// the per-row loss into grad (caller scales by 1/batch).
inline double backward_row(const Network& net, const Network::Head& head,
                           const ForwardScratch& s, int label, double inv_batch,
                           std::vector<double>& grad, std::vector<double>& delta_buf,
                           std::vector<double>& delta_next_buf) {
  const auto& dims = net.layer_dims;
  const int classes = head.class_count;
  // softmax with max-shift
  double mx = s.logits[0];
  for (int c = 1; c < classes; ++c) mx = std::max(mx, s.logits[c]);
  double denom = 0.0;
  for (int c = 0; c < classes; ++c) denom += std::exp(s.logits[c] - mx);
  const double log_denom = std::log(denom);
  const double loss = -(s.logits[label] - mx - log_denom);

  // d loss / d logit
  std::vector<double>& dlogit = delta_buf;
  dlogit.assign(classes, 0.0);
  for (int c = 0; c < classes; ++c) {
    const double p = std::exp(s.logits[c] - mx) / denom;
    dlogit[c] = (p - (c == label ? 1.0 : 0.0)) * inv_batch;
  }

  // head
  const int feat = dims.back();
  const std::size_t hbias = head.offset + static_cast<std::size_t>(feat) * classes;
  const auto& feat_act = s.activations.back();
  std::vector<double>& dfeat = delta_next_buf;
  dfeat.assign(feat, 0.0);
  for (int c = 0; c < classes; ++c) {
    const std::size_t row = head.offset + static_cast<std::size_t>(c) * feat;
    grad[hbias + c] += dlogit[c];
    for (int i = 0; i < feat; ++i) {
      grad[row + i] += dlogit[c] * feat_act[i];
      dfeat[i] += dlogit[c] * net.weights[row + i];
    }
  }

  // trunk, last layer first
  std::vector<double> delta = dfeat;
  for (std::size_t l = dims.size() - 1; l >= 1; --l) {
    const int fan_in = dims[l - 1];
    const int fan_out = dims[l];
    std::size_t b, e;
    net.trunk_layer_range(l - 1, b, e);
    const std::size_t bias = e - fan_out;
    const auto& out_act = s.activations[l];
    const auto& in_act = s.activations[l - 1];
    // rectifier gate
    for (int j = 0; j < fan_out; ++j)
      if (out_act[j] <= 0.0) delta[j] = 0.0;
    std::vector<double> dprev(fan_in, 0.0);
    for (int j = 0; j < fan_out; ++j) {
      if (delta[j] == 0.0) continue;
      const std::size_t row = b + static_cast<std::size_t>(j) * fan_in;
      grad[bias + j] += delta[j];
      for (int i = 0; i < fan_in; ++i) {
        grad[row + i] += delta[j] * in_act[i];
        dprev[i] += delta[j] * net.weights[row + i];
      }
    }
    delta = std::move(dprev);
    if (l == 1) break;
  }
  return loss;
}

}  // namespace detail

/// Masked inference: logits as if every masked-off weight were exactly zero.
inline std::vector<double> forward(const Network& net, const Mask& mask, int task_id,
                                   const DatasetSplit& batch) {
  if (mask.size() != net.weights.size())
    throw ShapeError("forward: mask length != weight vector length");
  if (batch.dim != net.input_dim())
    throw ShapeError("forward: batch column count != input dim");
  const auto& head = net.head(task_id);
  std::vector<double> logits(batch.size() * head.class_count);
  detail::ForwardScratch s;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    detail::forward_row(net, &mask, head, batch.row(r), s);
    std::copy(s.logits.begin(), s.logits.end(), logits.begin() + r * head.class_count);
  }
  return logits;
}

/// Argmax labels per row; ties break toward the lowest class index.
inline std::vector<int> predict_labels(const Network& net, const Mask& mask, int task_id,
                                       const DatasetSplit& inputs) {
  if (mask.size() != net.weights.size())
    throw ShapeError("predict_labels: mask length != weight vector length");
  if (inputs.dim != net.input_dim())
    throw ShapeError("predict_labels: input column count != input dim");
  const auto& head = net.head(task_id);
  std::vector<int> labels(inputs.size());
  detail::ForwardScratch s;
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    detail::forward_row(net, &mask, head, inputs.row(r), s);
    labels[r] = detail::argmax_lowest(s.logits);
  }
  return labels;
}

/// Mean softmax cross-entropy over a split, on the stored (unmasked) weights.
inline double compute_loss(const Network& net, int task_id, const DatasetSplit& split) {
  if (split.size() == 0) throw InvalidDataError("compute_loss: empty split");
  const auto& head = net.head(task_id);
  detail::ForwardScratch s;
  double total = 0.0;
  for (std::size_t r = 0; r < split.size(); ++r) {
    detail::forward_row(net, nullptr, head, split.row(r), s);
    double mx = s.logits[0];
    for (int c = 1; c < head.class_count; ++c) mx = std::max(mx, s.logits[c]);
    double denom = 0.0;
    for (int c = 0; c < head.class_count; ++c) denom += std::exp(s.logits[c] - mx);
    total += -(s.logits[split.labels[r]] - mx - std::log(denom));
  }
  return total / static_cast<double>(split.size());
}

/// Full gradient of the mean cross-entropy over a split w.r.t. every weight.
inline std::vector<double> compute_gradient(const Network& net, int task_id,
                                            const DatasetSplit& split) {
  if (split.size() == 0) throw InvalidDataError("compute_gradient: empty split");
  const auto& head = net.head(task_id);
  std::vector<double> grad(net.weights.size(), 0.0);
  detail::ForwardScratch s;
  std::vector<double> buf_a, buf_b;
  const double inv = 1.0 / static_cast<double>(split.size());
  for (std::size_t r = 0; r < split.size(); ++r) {
    detail::forward_row(net, nullptr, head, split.row(r), s);
    detail::backward_row(net, head, s, split.labels[r], inv, grad, buf_a, buf_b);
  }
  return grad;
}

/// Mini-batch SGD on softmax cross-entropy. Only weights with trainable=1 are
/// updated; every other weight is left bit-identical. Deterministic for a
/// fixed config and seed.
inline TrainReport sgd_train(Network& net, const Mask& trainable, int task_id,
                             const DatasetSplit& split, const TrainConfig& cfg) {
  cfg.validate();
  if (trainable.size() != net.weights.size())
    throw ShapeError("sgd_train: trainable mask length != weight vector length");
  if (split.size() == 0) throw InvalidDataError("sgd_train: empty dataset");
  if (split.dim != net.input_dim()) throw ShapeError("sgd_train: input dim mismatch");
  const auto& head = net.head(task_id);

  std::vector<std::size_t> trainable_idx;
  for (std::size_t i = 0; i < trainable.size(); ++i)
    if (trainable[i]) trainable_idx.push_back(i);

  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::Rng rng(cfg.seed);
  std::vector<double> grad(net.weights.size(), 0.0);
  std::vector<double> velocity;
  if (cfg.optimizer == Optimizer::momentum_sgd) velocity.assign(net.weights.size(), 0.0);
  const double momentum = 0.9;

  detail::ForwardScratch s;
  std::vector<double> buf_a, buf_b;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t r = order[k];
        detail::forward_row(net, nullptr, head, split.row(r), s);
        detail::backward_row(net, head, s, split.labels[r], inv, grad, buf_a, buf_b);
      }
      if (cfg.optimizer == Optimizer::momentum_sgd) {
        for (std::size_t i : trainable_idx) {
          velocity[i] = momentum * velocity[i] + grad[i];
          net.weights[i] -= cfg.learning_rate * velocity[i];
        }
      } else {
        for (std::size_t i : trainable_idx)
          net.weights[i] -= cfg.learning_rate * grad[i];
      }
    }
  }
  return TrainReport{compute_loss(net, task_id, split), cfg.epochs};
}

// --- serialization ---------------------------------------------------------

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw InvalidDataError("network load: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

inline double get_f64(std::istream& is) {
  std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace detail

/// Bit-exact binary form: little-endian u64 framing, raw IEEE doubles.
inline void save_network_binary(const Network& net, std::ostream& os) {
  os.write("ACLLNET1", 8);
  detail::put_u64(os, net.layer_dims.size());
  for (int d : net.layer_dims) detail::put_u64(os, static_cast<std::uint64_t>(d));
  detail::put_u64(os, net.weights.size());
  for (double w : net.weights) detail::put_f64(os, w);
  detail::put_u64(os, net.heads.size());
  for (const auto& h : net.heads) {
    detail::put_u64(os, static_cast<std::uint64_t>(h.task_id));
    detail::put_u64(os, static_cast<std::uint64_t>(h.class_count));
    detail::put_u64(os, h.offset);
  }
}

inline Network load_network_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "ACLLNET1")
    throw InvalidDataError("network load: bad magic");
  Network net;
  const std::uint64_t nd = detail::get_u64(is);
  net.layer_dims.resize(nd);
  for (auto& d : net.layer_dims) d = static_cast<int>(detail::get_u64(is));
  net.weights.resize(detail::get_u64(is));
  for (auto& w : net.weights) w = detail::get_f64(is);
  const std::uint64_t nh = detail::get_u64(is);
  net.heads.resize(nh);
  for (auto& h : net.heads) {
    h.task_id = static_cast<int>(detail::get_u64(is));
    h.class_count = static_cast<int>(detail::get_u64(is));
    h.offset = detail::get_u64(is);
  }
  return net;
}

inline nlohmann::json network_to_json(const Network& net) {
  nlohmann::json j;
  j["layer_dims"] = net.layer_dims;
  j["weights"] = net.weights;
  auto& heads = j["heads"] = nlohmann::json::array();
  for (const auto& h : net.heads)
    heads.push_back({{"task_id", h.task_id},
                     {"class_count", h.class_count},
                     {"offset", h.offset}});
  return j;
}

inline Network network_from_json(const nlohmann::json& j) {
  Network net;
  net.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  net.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& hj : j.at("heads")) {
    Network::Head h;
    h.task_id = hj.at("task_id").get<int>();
    h.class_count = hj.at("class_count").get<int>();
    h.offset = hj.at("offset").get<std::size_t>();
    net.heads.push_back(h);
  }
  return net;
}

}  // namespace acll
