#pragma once

// `warmstart verify`: quick invariant checks on tiny instances. Each check
// prints one PASS/FAIL line; the return value is the failure count.

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "warmstart/data.hpp"
#include "warmstart/diagnostics.hpp"
#include "warmstart/nn.hpp"
#include "warmstart/optim.hpp"
#include "warmstart/reinit.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

namespace detail {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.index(k));
  return y;
}

inline double batch_loss(const ModelParams& p, const Matrix& x, const std::vector<int>& y, double beta) {
  return softmax_xent(logits(p, x), y, beta).loss;
}

// Scaling a bias-free relu net by lambda scales logits by lambda^L and keeps argmax.
inline std::string check_scaling() {
  Rng rng(11);
  for (std::size_t depth : {2, 3, 4}) {
    std::vector<std::size_t> hidden(depth - 1, 8);
    const auto spec = NetworkSpec::mlp(5, hidden, 4, Activation::relu, false);
    const auto p = init_params(spec, 100 + depth);
    const Matrix x = random_matrix(64, 5, rng);
    const Matrix z = logits(p, x);
    for (double lambda : {0.1, 0.5, 2.0}) {
      const Matrix zs = logits(scale_params(p, lambda), x);
      const double expect = std::pow(lambda, static_cast<double>(depth));
      const double err = (zs - expect * z).norm() / (expect * z.norm());
      if (err > 1e-10) return "depth " + std::to_string(depth) + ": relative logit error " + std::to_string(err);
      if (predict(scale_params(p, lambda), x) != predict(p, x)) return "argmax changed";
    }
  }
  return {};
}

// Backprop against central differences on every parameter.
inline std::string check_gradients() {
  Rng rng(12);
  const double h = 1e-6;
  for (Activation act : {Activation::relu, Activation::tanh, Activation::sigmoid, Activation::none}) {
    for (bool bias : {false, true}) {
      const auto spec = NetworkSpec::mlp(3, {4}, 3, act, bias);
      auto p = init_params(spec, 5);
      if (bias) {
        for (auto& l : p.layers) l.bias = RowVector::Constant(l.bias.size(), 0.1);
      }
      const Matrix x = random_matrix(6, 3, rng);
      const auto y = random_labels(6, 3, rng);
      const double beta = 0.1;
      const auto g = backward(p, forward(p, x), softmax_xent(logits(p, x), y, beta).dlogits);
      for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto probe = [&](double& slot, double analytic) -> bool {
          const double keep = slot;
          slot = keep + h;
          const double up = batch_loss(p, x, y, beta);
          slot = keep - h;
          const double down = batch_loss(p, x, y, beta);
          slot = keep;
          const double numeric = (up - down) / (2 * h);
          const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
          return std::abs(numeric - analytic) / scale <= 1e-4;
        };
        auto& w = p.layers[l].weight;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
          if (!probe(w.data()[i], g.layers[l].weight.data()[i])) {
            return to_string(act) + (bias ? "+bias" : "") + ": weight gradient mismatch in layer " +
                   std::to_string(l);
          }
        }
        auto& b = p.layers[l].bias;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
          if (!probe(b[i], g.layers[l].bias[i])) return to_string(act) + ": bias gradient mismatch";
        }
      }
    }
  }
  return {};
}

inline ModelParams scalar_model(double w) {
  ModelParams p;
  p.spec = NetworkSpec::logistic_regression(1, 1, false);
  p.layers.push_back({Matrix::Constant(1, 1, w), RowVector()});
  return p;
}

inline Gradients scalar_grad(double g) { return {{{Matrix::Constant(1, 1, g), RowVector()}}}; }

inline std::string check_optimizers() {
  auto p = scalar_model(1.0);
  sgd_step(p, scalar_grad(0.5), SgdConfig{0.1, 0.0, 1});
  if (p.layers[0].weight(0, 0) != 0.95) return "sgd step gave " + std::to_string(p.layers[0].weight(0, 0));

  auto q = scalar_model(1.0);
  AdamConfig cfg;
  auto state = AdamState::for_model(q);
  adam_step(q, scalar_grad(2.0), state, cfg);
  // First bias-corrected step is lr * g / (|g| + eps).
  const double expect = 1.0 - cfg.learning_rate * 2.0 / (2.0 + cfg.epsilon);
  if (std::abs(q.layers[0].weight(0, 0) - expect) > 1e-12) return "adam first step mismatch";
  return {};
}

inline std::string check_endpoints() {
  const auto spec = NetworkSpec::mlp(4, {6}, 3);
  const auto p = init_params(spec, 3);
  if (!(apply_initializer(p, Initializer::shrink_perturb(1.0, 0.0), 9) == p)) return "lambda=1, gamma=0 is not warm";
  if (!(apply_initializer(p, Initializer::shrink_perturb(0.0, 1.0), 9) == init_params(spec, 9))) {
    return "lambda=0, gamma=1 is not a fresh draw";
  }
  return {};
}

inline std::string check_softmax_stability() {
  Matrix z(1, 3);
  z << 1e4, 0.0, -1e4;
  const std::vector<int> y{0};
  const auto r = softmax_xent(z, y);
  if (!std::isfinite(r.loss) || r.loss > 1e-12) return "loss at logit 1e4 is " + std::to_string(r.loss);
  if (!r.dlogits.allFinite()) return "non-finite gradient at logit 1e4";
  return {};
}

inline std::string check_minibatches() {
  const auto idx = iota_indices(103);
  std::vector<std::size_t> seen;
  for (const auto& b : minibatches(idx, 10, 4, 1)) seen.insert(seen.end(), b.begin(), b.end());
  std::sort(seen.begin(), seen.end());
  if (seen != idx) return "an epoch does not visit every index exactly once";
  return {};
}

}  // namespace detail

inline int verify(std::ostream& out) {
  const std::vector<std::pair<std::string, std::function<std::string()>>> checks = {
      {"logit scaling and argmax invariance", detail::check_scaling},
      {"backprop vs central differences", detail::check_gradients},
      {"sgd and adam step arithmetic", detail::check_optimizers},
      {"shrink-perturb endpoints", detail::check_endpoints},
      {"softmax stability at large logits", detail::check_softmax_stability},
      {"mini-batch epoch is a permutation", detail::check_minibatches},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    std::string problem;
    try {
      problem = fn();
    } catch (const std::exception& e) {
      problem = std::string("threw: ") + e.what();
    }
    if (problem.empty()) {
      out << "PASS " << name << '\n';
    } else {
      out << "FAIL " << name << ": " << problem << '\n';
      ++failures;
    }
  }
  return failures;
}

}  // namespace warmstart
