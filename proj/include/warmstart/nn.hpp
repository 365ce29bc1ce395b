#pragma once

// Dense feed-forward classifier: fan-in initialization, batched forward
// pass, softmax cross-entropy with an optional confidence penalty, and
// hand-written reverse-mode gradients. All arithmetic is double precision.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "warmstart/error.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

enum class Activation { relu, tanh, sigmoid, none };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::none: return "none";
  }
  return "none";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "none") return Activation::none;
  throw InputError("unknown activation '" + s + "'");
}

/// Architecture of a network. layer_widths runs from the input dimension to
/// the class count; the hidden activation is shared by every hidden layer and
/// the output layer is always linear (softmax is applied by the loss).
struct NetworkSpec {
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::relu;
  bool use_bias = true;

  std::size_t depth() const { return layer_widths.size() - 1; }
  std::size_t input_dim() const { return layer_widths.front(); }
  std::size_t num_classes() const { return layer_widths.back(); }

  void validate() const {
    if (layer_widths.size() < 2) throw InputError("network needs at least an input and an output width");
    for (std::size_t w : layer_widths) {
      if (w < 1) throw InputError("layer widths must be positive");
    }
  }

  static NetworkSpec logistic_regression(std::size_t d, std::size_t k, bool bias = true) {
    return {{d, k}, Activation::none, bias};
  }

  static NetworkSpec mlp(std::size_t d, const std::vector<std::size_t>& hidden, std::size_t k,
                         Activation act = Activation::relu, bool bias = true) {
    NetworkSpec s;
    s.layer_widths.push_back(d);
    s.layer_widths.insert(s.layer_widths.end(), hidden.begin(), hidden.end());
    s.layer_widths.push_back(k);
    s.activation = act;
    s.use_bias = bias;
    return s;
  }

  bool operator==(const NetworkSpec&) const = default;
};

struct LayerParams {
  Matrix weight;   // out x in
  RowVector bias;  // 1 x out, empty when the network has no biases

  bool operator==(const LayerParams& o) const {
    return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
           bias.size() == o.bias.size() && weight == o.weight && bias == o.bias;
  }
};

/// All learnable values of one network.
struct ModelParams {
  NetworkSpec spec;
  std::vector<LayerParams> layers;

  std::size_t depth() const { return layers.size(); }

  bool operator==(const ModelParams&) const = default;
};

/// d(mean batch loss)/d(parameter), laid out exactly like ModelParams.
struct Gradients {
  std::vector<LayerParams> layers;
};

namespace detail {

inline std::uint64_t mix_doubles(std::uint64_t h, const double* p, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, p + i, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return h;
}

}  // namespace detail

/// Content hash of the parameter values; lets backward() reject a cache
/// produced by different parameters.
inline std::uint64_t fingerprint(const ModelParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : p.layers) {
    h = detail::mix_doubles(h, l.weight.data(), l.weight.size());
    h = detail::mix_doubles(h, l.bias.data(), l.bias.size());
  }
  return h;
}

inline std::size_t num_parameters(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& l : p.layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

inline double squared_norm(const std::vector<LayerParams>& layers) {
  double s = 0.0;
  for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

inline double param_norm(const ModelParams& p) { return std::sqrt(squared_norm(p.layers)); }
inline double grad_norm(const Gradients& g) { return std::sqrt(squared_norm(g.layers)); }

/// Flattened copy of all weights (and optionally biases), layer by layer.
inline std::vector<double> flatten(const ModelParams& p, bool include_bias = true) {
  std::vector<double> out;
  out.reserve(num_parameters(p));
  for (const auto& l : p.layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    if (include_bias) out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

inline bool all_finite(const ModelParams& p) {
  for (const auto& l : p.layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

/// Weight variance of the initialization scheme: 2/fan_in for relu
/// networks, 1/fan_in otherwise.
inline double init_variance(const NetworkSpec& spec, std::size_t layer) {
  const double fan_in = static_cast<double>(spec.layer_widths[layer]);
  return (spec.activation == Activation::relu ? 2.0 : 1.0) / fan_in;
}

inline ModelParams init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelParams p;
  p.spec = spec;
  p.layers.resize(spec.depth());
  for (std::size_t l = 0; l < spec.depth(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_widths[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_widths[l + 1]);
    const double sd = std::sqrt(init_variance(spec, l));
    auto& layer = p.layers[l];
    layer.weight.resize(out, in);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = sd * rng.normal();
    if (spec.use_bias) layer.bias = RowVector::Zero(out);
  }
  return p;
}

/// Gradients of the same shape as `p`, all zero.
inline Gradients zeros_like(const ModelParams& p) {
  Gradients g;
  g.layers.reserve(p.layers.size());
  for (const auto& l : p.layers) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), RowVector::Zero(l.bias.size())});
  }
  return g;
}

inline bool congruent(const std::vector<LayerParams>& a, const std::vector<LayerParams>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
        a[l].bias.size() != b[l].bias.size()) {
      return false;
    }
  }
  return true;
}

/// Per-layer pre/post activations of one forward pass.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre[l] = post[l-1] * W_l^T + b_l
  std::vector<Matrix> post;  // post[l] = act(pre[l]); for the last layer post == pre (logits)
  std::uint64_t params_fingerprint = 0;

  Eigen::Index batch() const { return input.rows(); }
};

namespace detail {

inline void apply_activation(Activation act, Matrix& m) {
  switch (act) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::tanh: m = m.array().tanh().matrix(); break;
    case Activation::sigmoid: m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); break;
    case Activation::none: break;
  }
}

// dL/dpre from dL/dpost, using whichever of pre/post is cheaper.
inline void activation_backward(Activation act, const Matrix& pre, const Matrix& post, Matrix& grad) {
  switch (act) {
    case Activation::relu: grad = (pre.array() > 0.0).select(grad, 0.0); break;
    case Activation::tanh: grad.array() *= 1.0 - post.array().square(); break;
    case Activation::sigmoid: grad.array() *= post.array() * (1.0 - post.array()); break;
    case Activation::none: break;
  }
}

inline void check_input(const ModelParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw ShapeError("model has no layers");
  if (static_cast<std::size_t>(inputs.cols()) != params.spec.input_dim() ||
      inputs.cols() != params.layers.front().weight.cols()) {
    throw ShapeError("layer 1: input has " + std::to_string(inputs.cols()) + " columns, expected " +
                     std::to_string(params.layers.front().weight.cols()));
  }
  for (std::size_t l = 1; l < params.layers.size(); ++l) {
    if (params.layers[l].weight.cols() != params.layers[l - 1].weight.rows()) {
      throw ShapeError("layer " + std::to_string(l + 1) + ": weight expects " +
                       std::to_string(params.layers[l].weight.cols()) + " inputs but layer " +
                       std::to_string(l) + " produces " + std::to_string(params.layers[l - 1].weight.rows()));
    }
  }
}

inline Matrix affine(const LayerParams& layer, const Matrix& x) {
  Matrix z = x * layer.weight.transpose();
  if (layer.bias.size() > 0) z.rowwise() += layer.bias;
  return z;
}

}  // namespace detail

/// Pre-softmax scores for a batch, without keeping intermediate activations.
inline Matrix logits(const ModelParams& params, const Matrix& inputs) {
  detail::check_input(params, inputs);
  Matrix h = inputs;
  const std::size_t depth = params.layers.size();
  for (std::size_t l = 0; l < depth; ++l) {
    h = detail::affine(params.layers[l], h);
    if (l + 1 < depth) detail::apply_activation(params.spec.activation, h);
  }
  return h;
}

/// Forward pass that records everything backward() needs.
inline ForwardCache forward(const ModelParams& params, const Matrix& inputs) {
  detail::check_input(params, inputs);
  ForwardCache cache;
  cache.input = inputs;
  const std::size_t depth = params.layers.size();
  cache.pre.resize(depth);
  cache.post.resize(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const Matrix& prev = l == 0 ? cache.input : cache.post[l - 1];
    cache.pre[l] = detail::affine(params.layers[l], prev);
    cache.post[l] = cache.pre[l];
    if (l + 1 < depth) detail::apply_activation(params.spec.activation, cache.post[l]);
  }
  cache.params_fingerprint = fingerprint(params);
  return cache;
}

inline const Matrix& cached_logits(const ForwardCache& cache) { return cache.post.back(); }

struct LossResult {
  double loss = 0.0;
  Matrix dlogits;  // gradient of the mean loss w.r.t. the logits
};

/// Mean over rows of  -log softmax(z)_y - beta * H(softmax(z)).
/// beta = 0 is plain cross-entropy; beta > 0 rewards high-entropy outputs.
inline LossResult softmax_xent(const Matrix& logits, std::span<const int> labels, double confidence_beta = 0.0) {
  const Eigen::Index batch = logits.rows();
  const Eigen::Index k = logits.cols();
  if (static_cast<std::size_t>(batch) != labels.size()) {
    throw InputError("softmax_xent: " + std::to_string(labels.size()) + " labels for " + std::to_string(batch) +
                     " rows");
  }
  if (confidence_beta < 0.0) throw InputError("confidence penalty must be non-negative");
  LossResult r;
  r.dlogits.resize(batch, k);
  const double inv_batch = batch > 0 ? 1.0 / static_cast<double>(batch) : 0.0;
  double total = 0.0;
  Eigen::RowVectorXd logp(k), p(k);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) {
      throw InputError("label " + std::to_string(y) + " at row " + std::to_string(i) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    logp = logits.row(i).array() - lse;
    p = logp.array().exp();
    double loss_i = -logp[y];
    auto g = r.dlogits.row(i);
    g = p;
    g[y] -= 1.0;
    if (confidence_beta > 0.0) {
      const double entropy = -(p.array() * logp.array()).sum();
      loss_i -= confidence_beta * entropy;
      // dH/dz_j = -p_j (log p_j + H)
      g.array() += confidence_beta * p.array() * (logp.array() + entropy);
    }
    g *= inv_batch;
    total += loss_i;
  }
  r.loss = total * inv_batch;
  return r;
}

/// Exact gradient of the mean batch loss, given dlogits from softmax_xent.
inline Gradients backward(const ModelParams& params, const ForwardCache& cache, const Matrix& dlogits) {
  const std::size_t depth = params.layers.size();
  if (cache.pre.size() != depth || cache.post.size() != depth) {
    throw ContractError("forward cache has " + std::to_string(cache.pre.size()) + " layers, model has " +
                        std::to_string(depth));
  }
  if (cache.params_fingerprint != fingerprint(params)) {
    throw ContractError("forward cache was produced by different parameters");
  }
  if (dlogits.rows() != cache.batch() || dlogits.cols() != params.layers.back().weight.rows()) {
    throw ContractError("dlogits shape does not match the cached batch");
  }
  Gradients g;
  g.layers.resize(depth);
  Matrix delta = dlogits;
  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& prev = l == 0 ? cache.input : cache.post[l - 1];
    auto& gl = g.layers[l];
    gl.weight.noalias() = delta.transpose() * prev;
    if (params.layers[l].bias.size() > 0) gl.bias = delta.colwise().sum();
    if (l > 0) {
      Matrix upstream = delta * params.layers[l].weight;
      detail::activation_backward(params.spec.activation, cache.pre[l - 1], cache.post[l - 1], upstream);
      delta = std::move(upstream);
    }
  }
  return g;
}

inline int argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = j;
  }
  return static_cast<int>(best);
}

/// Row-wise argmax; ties go to the lowest class index.
inline std::vector<int> predict(const ModelParams& params, const Matrix& inputs) {
  const Matrix z = logits(params, inputs);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_row(z, i);
  return out;
}

/// Mean Shannon entropy (nats) of the softmax rows.
inline double output_entropy(const Matrix& logits) {
  if (logits.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = (logits.row(i).array() - m).transpose();
    const double lse = std::log(shifted.exp().sum());
    const Eigen::ArrayXd logp = shifted - lse;
    total -= (logp.exp() * logp).sum();
  }
  return std::max(0.0, total / static_cast<double>(logits.rows()));
}

}  // namespace warmstart
