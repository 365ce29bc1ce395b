#pragma once

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace warmstart {

/// Outcome of one training round (one call of train_to_convergence).
struct RoundResult {
  std::size_t round = 0;
  double x = 0.0;  // protocol abscissa: samples available, checkpoint epoch, target fraction, ...
  std::size_t n_train_available = 0;
  std::size_t epochs_used = 0;
  bool converged = false;
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  std::uint64_t steps = 0;             // mini-batch gradient steps this round
  std::uint64_t cumulative_steps = 0;  // train-time proxy
  std::uint64_t examples = 0;          // examples processed this round
  std::uint64_t cumulative_examples = 0;
  std::uint64_t optimizer_resets = 0;
  std::string initializer;                   // provenance of this round's starting point
  std::map<std::string, double> diagnostics;  // grad_ratio, weight_corr, damage_pct, ...

  bool operator==(const RoundResult&) const = default;
};

struct AbortInfo {
  std::size_t round = 0;
  std::size_t epoch = 0;
  double param_norm = 0.0;
  std::string message;

  bool operator==(const AbortInfo& o) const {
    const bool norms_equal = param_norm == o.param_norm || (param_norm != param_norm && o.param_norm != o.param_norm);
    return round == o.round && epoch == o.epoch && norms_equal && message == o.message;
  }
};

/// One seeded run of one protocol configuration.
struct ExperimentRecord {
  std::string protocol;
  std::string series;                  // initializer / grid-cell label
  std::uint64_t seed = 0;
  std::map<std::string, double> cell;  // grid coordinates, empty outside grids
  nlohmann::json config;               // resolved configuration echo
  std::string config_hash;
  std::vector<RoundResult> rounds;
  std::optional<AbortInfo> abort;

  bool operator==(const ExperimentRecord&) const = default;
};

/// Orders records by (series, cell, seed) so output is independent of
/// execution order.
inline bool record_less(const ExperimentRecord& a, const ExperimentRecord& b) {
  if (a.protocol != b.protocol) return a.protocol < b.protocol;
  if (a.series != b.series) return a.series < b.series;
  if (a.cell != b.cell) return a.cell < b.cell;
  return a.seed < b.seed;
}

}  // namespace warmstart
