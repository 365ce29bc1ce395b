#pragma once

// Round-boundary parameter transforms. Every transform is a pure function of
// (params, config, seed); the noise term is a freshly initialized network, so
// each layer is perturbed in proportion to its own initialization variance.

#include <cstdint>
#include <sstream>
#include <string>

#include "warmstart/error.hpp"
#include "warmstart/nn.hpp"

namespace warmstart {

enum class ReinitScope { all_layers, last_layer_only };

struct ShrinkPerturbConfig {
  double lambda = 1.0;       // shrink factor
  double noise_scale = 0.0;  // multiplier on the fresh initialization
  ReinitScope scope = ReinitScope::all_layers;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("shrink factor must lie in [0, 1]");
    if (!(noise_scale >= 0.0)) throw InputError("noise scale must be non-negative");
  }
};

namespace detail {

template <class M>
void shrink_perturb_block(M& theta, const M& fresh, double lambda, double gamma) {
  // The lambda == 1 / gamma == 0 branches keep the endpoints bit-exact
  // (no -0.0 + 0.0 rounding, no 0 * inf).
  if (lambda == 0.0) {
    theta.setZero();
  } else if (lambda != 1.0) {
    theta *= lambda;
  }
  if (gamma != 0.0) theta.noalias() += gamma * fresh;
}

}  // namespace detail

/// lambda * theta + gamma * init_params(spec, seed), over all layers or the last one.
inline ModelParams shrink_perturb(ModelParams params, const ShrinkPerturbConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ModelParams fresh = init_params(params.spec, seed);
  const std::size_t first = cfg.scope == ReinitScope::last_layer_only ? params.layers.size() - 1 : 0;
  for (std::size_t l = first; l < params.layers.size(); ++l) {
    detail::shrink_perturb_block(params.layers[l].weight, fresh.layers[l].weight, cfg.lambda, cfg.noise_scale);
    detail::shrink_perturb_block(params.layers[l].bias, fresh.layers[l].bias, cfg.lambda, cfg.noise_scale);
  }
  return params;
}

/// Multiply every learnable value by lambda > 0.
inline ModelParams scale_params(ModelParams params, double lambda) {
  if (!(lambda > 0.0)) throw InputError("scale factor must be positive");
  for (auto& l : params.layers) {
    l.weight *= lambda;
    l.bias *= lambda;
  }
  return params;
}

/// Perturbation without shrinking.
inline ModelParams noise_only(ModelParams params, double noise_scale, std::uint64_t seed) {
  return shrink_perturb(std::move(params), {1.0, noise_scale, ReinitScope::all_layers}, seed);
}

enum class InitPolicy { warm, random, shrink_perturb, noise_only, last_layer };

/// How a model is initialized at a round boundary, given the previous round's solution.
struct Initializer {
  InitPolicy policy = InitPolicy::warm;
  double lambda = 1.0;
  double noise_scale = 0.0;

  static Initializer warm() { return {InitPolicy::warm, 1.0, 0.0}; }
  static Initializer random() { return {InitPolicy::random, 0.0, 1.0}; }
  static Initializer shrink_perturb(double lambda, double noise) { return {InitPolicy::shrink_perturb, lambda, noise}; }
  static Initializer noise_only(double noise) { return {InitPolicy::noise_only, 1.0, noise}; }
  static Initializer last_layer(double lambda, double noise) { return {InitPolicy::last_layer, lambda, noise}; }

  void validate() const {
    if (policy == InitPolicy::shrink_perturb || policy == InitPolicy::last_layer || policy == InitPolicy::noise_only) {
      ShrinkPerturbConfig{lambda, noise_scale}.validate();
    }
  }

  /// Provenance label, e.g. "shrink_perturb(0.6,0.01)".
  std::string describe() const {
    std::ostringstream os;
    switch (policy) {
      case InitPolicy::warm: return "warm";
      case InitPolicy::random: return "random";
      case InitPolicy::shrink_perturb: os << "shrink_perturb(" << lambda << ',' << noise_scale << ')'; break;
      case InitPolicy::noise_only: os << "noise_only(" << noise_scale << ')'; break;
      case InitPolicy::last_layer: os << "last_layer(" << lambda << ',' << noise_scale << ')'; break;
    }
    return os.str();
  }

  bool operator==(const Initializer&) const = default;
};

inline std::string to_string(InitPolicy p) {
  switch (p) {
    case InitPolicy::warm: return "warm";
    case InitPolicy::random: return "random";
    case InitPolicy::shrink_perturb: return "shrink_perturb";
    case InitPolicy::noise_only: return "noise_only";
    case InitPolicy::last_layer: return "last_layer";
  }
  return "warm";
}

inline InitPolicy init_policy_from_string(const std::string& s) {
  if (s == "warm") return InitPolicy::warm;
  if (s == "random") return InitPolicy::random;
  if (s == "shrink_perturb") return InitPolicy::shrink_perturb;
  if (s == "noise_only") return InitPolicy::noise_only;
  if (s == "last_layer") return InitPolicy::last_layer;
  throw InputError("unknown initializer policy '" + s + "'");
}

/// Parameters for the next round. `seed` drives the fresh draw, and is the
/// same seed a random restart would use, so the endpoints coincide exactly.
inline ModelParams apply_initializer(const ModelParams& previous, const Initializer& init, std::uint64_t seed) {
  switch (init.policy) {
    case InitPolicy::warm: return previous;
    case InitPolicy::random: return init_params(previous.spec, seed);
    case InitPolicy::shrink_perturb:
      return shrink_perturb(previous, {init.lambda, init.noise_scale, ReinitScope::all_layers}, seed);
    case InitPolicy::noise_only: return noise_only(previous, init.noise_scale, seed);
    case InitPolicy::last_layer:
      return shrink_perturb(previous, {init.lambda, init.noise_scale, ReinitScope::last_layer_only}, seed);
  }
  return previous;
}

}  // namespace warmstart
