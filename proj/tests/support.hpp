#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "warmstart/nn.hpp"

namespace wst {

using warmstart::Matrix;

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

inline std::vector<int> uniform_labels(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> dist(0, k - 1);
  std::vector<int> y(n);
  for (auto& v : y) v = dist(gen);
  return y;
}

// Reference forward pass with explicit loops in long double.
inline std::vector<std::vector<long double>> reference_logits(const warmstart::ModelParams& p, const Matrix& x) {
  std::vector<std::vector<long double>> out;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<long double> h(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) h[static_cast<std::size_t>(c)] = x(r, c);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const auto& w = p.layers[l].weight;
      std::vector<long double> z(static_cast<std::size_t>(w.rows()), 0.0L);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        long double s = p.layers[l].bias.size() ? p.layers[l].bias[i] : 0.0L;
        for (Eigen::Index j = 0; j < w.cols(); ++j) s += static_cast<long double>(w(i, j)) * h[static_cast<std::size_t>(j)];
        if (l + 1 < p.layers.size()) {
          switch (p.spec.activation) {
            case warmstart::Activation::relu: s = s > 0 ? s : 0; break;
            case warmstart::Activation::tanh: s = std::tanh(s); break;
            case warmstart::Activation::sigmoid: s = 1.0L / (1.0L + std::exp(-s)); break;
            case warmstart::Activation::none: break;
          }
        }
        z[static_cast<std::size_t>(i)] = s;
      }
      h = std::move(z);
    }
    out.push_back(std::move(h));
  }
  return out;
}

// Mean of -log p_y - beta*H(p), long double.
inline long double reference_loss(const warmstart::ModelParams& p, const Matrix& x, const std::vector<int>& y,
                                  double beta) {
  const auto z = reference_logits(p, x);
  long double total = 0;
  for (std::size_t r = 0; r < z.size(); ++r) {
    long double m = z[r][0];
    for (auto v : z[r]) m = std::max(m, v);
    long double s = 0;
    for (auto v : z[r]) s += std::exp(v - m);
    const long double lse = m + std::log(s);
    long double entropy = 0;
    for (auto v : z[r]) {
      const long double lp = v - lse;
      entropy -= std::exp(lp) * lp;
    }
    total += -(z[r][static_cast<std::size_t>(y[r])] - lse) - beta * entropy;
  }
  return total / static_cast<long double>(z.size());
}

}  // namespace wst
