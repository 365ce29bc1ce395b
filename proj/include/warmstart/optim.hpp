#pragma once

#include <cmath>
#include <cstdint>
#include <variant>

#include "warmstart/error.hpp"
#include "warmstart/nn.hpp"

namespace warmstart {

struct SgdConfig {
  double learning_rate = 0.001;
  double weight_decay = 0.0;  // L2 coefficient, weights only
  std::size_t batch_size = 128;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("sgd: learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("sgd: weight_decay must be non-negative");
    if (batch_size < 1) throw ConfigError("sgd: batch_size must be at least 1");
  }
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // added to the gradient before the moment updates
  std::size_t batch_size = 128;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("adam: learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("adam: weight_decay must be non-negative");
    if (batch_size < 1) throw ConfigError("adam: batch_size must be at least 1");
  }
};

struct AdamState {
  std::vector<LayerParams> m;
  std::vector<LayerParams> v;
  std::uint64_t step = 0;

  static AdamState for_model(const ModelParams& p) {
    AdamState s;
    s.m = zeros_like(p).layers;
    s.v = s.m;
    return s;
  }
};

inline void sgd_step(ModelParams& params, const Gradients& grads, const SgdConfig& cfg) {
  if (!congruent(params.layers, grads.layers)) throw ContractError("sgd_step: gradient shape mismatch");
  const double lr = cfg.learning_rate;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    if (cfg.weight_decay != 0.0) {
      p.weight.array() -= lr * (g.weight.array() + cfg.weight_decay * p.weight.array());
    } else {
      p.weight.noalias() -= lr * g.weight;
    }
    if (p.bias.size() > 0) p.bias.noalias() -= lr * g.bias;
  }
}

namespace detail {

template <class Param, class Grad, class Moment>
void adam_update(Param& theta, const Grad& g, Moment& m, Moment& v, const AdamConfig& cfg, double bc1, double bc2,
                 double decay) {
  auto ga = g.array() + decay * theta.array();
  m.array() = cfg.beta1 * m.array() + (1.0 - cfg.beta1) * ga;
  v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * ga.square();
  theta.array() -= cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
}

}  // namespace detail

/// Bias-corrected Adam step. Increments state.step before the update.
inline void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  if (!congruent(params.layers, grads.layers)) throw ContractError("adam_step: gradient shape mismatch");
  if (!congruent(params.layers, state.m) || !congruent(params.layers, state.v)) {
    throw ContractError("adam_step: optimizer state shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    detail::adam_update(p.weight, g.weight, state.m[l].weight, state.v[l].weight, cfg, bc1, bc2, cfg.weight_decay);
    if (p.bias.size() > 0) {
      detail::adam_update(p.bias, g.bias, state.m[l].bias, state.v[l].bias, cfg, bc1, bc2, 0.0);
    }
  }
}

/// Zero both moments and the step counter, keeping shapes.
inline void reset_state(AdamState& state) {
  for (auto& l : state.m) {
    l.weight.setZero();
    l.bias.setZero();
  }
  for (auto& l : state.v) {
    l.weight.setZero();
    l.bias.setZero();
  }
  state.step = 0;
}

using OptimizerConfig = std::variant<SgdConfig, AdamConfig>;

inline std::size_t batch_size(const OptimizerConfig& cfg) {
  return std::visit([](const auto& c) { return c.batch_size; }, cfg);
}

inline void validate(const OptimizerConfig& cfg) {
  std::visit([](const auto& c) { c.validate(); }, cfg);
}

/// One optimizer bound to one model. reset() is called at every round
/// boundary; reset_count() exposes how often that happened.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

  const OptimizerConfig& config() const { return cfg_; }
  std::size_t batch_size() const { return warmstart::batch_size(cfg_); }
  std::uint64_t reset_count() const { return resets_; }
  const AdamState& adam_state() const { return adam_; }

  void reset(const ModelParams& params) {
    if (std::holds_alternative<AdamConfig>(cfg_)) {
      if (congruent(params.layers, adam_.m)) {
        reset_state(adam_);
      } else {
        adam_ = AdamState::for_model(params);
      }
    }
    ++resets_;
  }

  void step(ModelParams& params, const Gradients& grads) {
    if (const auto* sgd = std::get_if<SgdConfig>(&cfg_)) {
      sgd_step(params, grads, *sgd);
    } else {
      adam_step(params, grads, adam_, std::get<AdamConfig>(cfg_));
    }
  }

 private:
  OptimizerConfig cfg_;
  AdamState adam_;
  std::uint64_t resets_ = 0;
};

}  // namespace warmstart
