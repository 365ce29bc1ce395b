#pragma once

// Analysis instruments: gradient-norm split between old and new data,
// weight correlation to an initialization, accuracy/loss evaluation, and
// long-format learning-curve assembly.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "warmstart/data.hpp"
#include "warmstart/error.hpp"
#include "warmstart/nn.hpp"
#include "warmstart/record.hpp"
#include "warmstart/reinit.hpp"
#include "warmstart/stats.hpp"

namespace warmstart {

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Accuracy and mean loss over `idx` rows of `ds`, evaluated in chunks.
inline Evaluation evaluate(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> idx,
                           double confidence_beta = 0.0) {
  if (idx.empty()) throw InputError("cannot evaluate on an empty index set");
  constexpr std::size_t chunk = 2048;
  Matrix x;
  std::vector<int> y;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < idx.size(); begin += chunk) {
    const auto part = idx.subspan(begin, std::min(chunk, idx.size() - begin));
    gather(ds, part, x, y);
    const Matrix z = logits(params, x);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      if (argmax_row(z, i) == y[static_cast<std::size_t>(i)]) ++correct;
    }
    loss_sum += softmax_xent(z, y, confidence_beta).loss * static_cast<double>(part.size());
  }
  const auto n = static_cast<double>(idx.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

inline Evaluation evaluate(const ModelParams& params, const Dataset& ds, double confidence_beta = 0.0) {
  const IndexList all = iota_indices(ds.size());
  return evaluate(params, ds, all, confidence_beta);
}

/// Fraction of rows whose prediction equals the label.
inline double accuracy(const ModelParams& params, const Dataset& ds) {
  if (ds.size() == 0) throw InputError("accuracy of an empty dataset");
  const auto pred = predict(params, ds.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ds.labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

/// Gradient of the mean loss over the rows `idx`.
inline Gradients subset_gradient(const ModelParams& params, const Dataset& ds, std::span<const std::size_t> idx,
                                 double confidence_beta = 0.0) {
  if (idx.empty()) throw InputError("gradient over an empty index set");
  Matrix x;
  std::vector<int> y;
  gather(ds, idx, x, y);
  const ForwardCache cache = forward(params, x);
  const LossResult loss = softmax_xent(cached_logits(cache), y, confidence_beta);
  return backward(params, cache, loss.dlogits);
}

struct GradSplit {
  double mean_grad_norm_old = 0.0;
  double mean_grad_norm_new = 0.0;

  /// new / old; empty when the old norm is zero.
  std::optional<double> ratio() const {
    if (mean_grad_norm_old > 0.0) return mean_grad_norm_new / mean_grad_norm_old;
    return std::nullopt;
  }
};

/// Whole-parameter L2 norm of the mean-loss gradient, separately on previously
/// seen rows and on newly arrived rows.
inline GradSplit grad_norm_split(const ModelParams& params, std::span<const std::size_t> old_idx,
                                 std::span<const std::size_t> new_idx, const Dataset& ds,
                                 double confidence_beta = 0.0) {
  if (old_idx.empty() || new_idx.empty()) throw InputError("grad_norm_split: both index sets must be non-empty");
  return {grad_norm(subset_gradient(params, ds, old_idx, confidence_beta)),
          grad_norm(subset_gradient(params, ds, new_idx, confidence_beta))};
}

/// Pearson correlation between the flattened weights (biases excluded) of two
/// congruent models.
inline double weight_correlation(const ModelParams& a, const ModelParams& b) {
  if (!congruent(a.layers, b.layers)) throw ContractError("weight_correlation: models are not shape-congruent");
  const auto fa = flatten(a, false);
  const auto fb = flatten(b, false);
  if (fa.size() < 2) throw InputError("weight_correlation: need at least two weights");
  return stats::pearson(fa, fb);
}

struct ShrinkPoint {
  double lambda = 1.0;
  double accuracy = 0.0;
  double entropy = 0.0;
};

/// Accuracy and output entropy of `params` scaled by each lambda.
inline std::vector<ShrinkPoint> shrink_resilience(const ModelParams& params, const Dataset& ds,
                                                  std::span<const double> lambdas) {
  std::vector<ShrinkPoint> out;
  for (double lambda : lambdas) {
    const ModelParams scaled = scale_params(params, lambda);
    out.push_back({lambda, accuracy(scaled, ds), output_entropy(logits(scaled, ds.features))});
  }
  return out;
}

enum class CurveStat { point, mean, stddev };

/// One row of the long-format curve table.
struct CurvePoint {
  std::string protocol;
  std::string series;
  std::optional<std::uint64_t> seed;  // empty for aggregate rows
  double x = 0.0;
  std::string metric;
  double value = 0.0;
  CurveStat stat = CurveStat::point;
  std::size_t count = 1;  // number of seeds behind an aggregate row
};

inline std::vector<std::pair<std::string, double>> round_metrics(const RoundResult& r) {
  std::vector<std::pair<std::string, double>> m = {
      {"train_accuracy", r.train_accuracy},
      {"train_loss", r.train_loss},
      {"val_accuracy", r.val_accuracy},
      {"val_loss", r.val_loss},
      {"epochs_used", static_cast<double>(r.epochs_used)},
      {"steps", static_cast<double>(r.steps)},
      {"cumulative_steps", static_cast<double>(r.cumulative_steps)},
      {"cumulative_examples", static_cast<double>(r.cumulative_examples)},
  };
  for (const auto& [k, v] : r.diagnostics) m.emplace_back(k, v);
  return m;
}

/// Per-seed points followed by mean/std rows for every (series, x, metric)
/// observed under more than one seed.
inline std::vector<CurvePoint> assemble_curves(std::vector<ExperimentRecord> records) {
  std::vector<CurvePoint> out;
  if (records.empty()) return out;
  for (const auto& r : records) {
    if (r.protocol != records.front().protocol) {
      throw InputError("assemble_curves: mixed protocols '" + records.front().protocol + "' and '" + r.protocol + "'");
    }
  }
  std::stable_sort(records.begin(), records.end(), record_less);

  using Key = std::tuple<std::string, double, std::string>;
  std::map<Key, std::vector<double>> groups;
  std::map<Key, std::vector<std::uint64_t>> group_seeds;
  for (const auto& rec : records) {
    for (const auto& round : rec.rounds) {
      for (const auto& [metric, value] : round_metrics(round)) {
        out.push_back({rec.protocol, rec.series, rec.seed, round.x, metric, value, CurveStat::point, 1});
        const Key key{rec.series, round.x, metric};
        groups[key].push_back(value);
        group_seeds[key].push_back(rec.seed);
      }
    }
  }
  const std::string& protocol = records.front().protocol;
  for (const auto& [key, values] : groups) {
    auto seeds = group_seeds[key];
    std::sort(seeds.begin(), seeds.end());
    if (std::unique(seeds.begin(), seeds.end()) - seeds.begin() < 2) continue;
    const auto& [series, x, metric] = key;
    out.push_back({protocol, series, std::nullopt, x, metric, stats::mean(values), CurveStat::mean, values.size()});
    out.push_back({protocol, series, std::nullopt, x, metric, stats::stddev(values), CurveStat::stddev, values.size()});
  }
  return out;
}

}  // namespace warmstart
