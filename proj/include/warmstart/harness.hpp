#pragma once

// Seeded experimental protocols. Every protocol derives all of its
// randomness from the run seed through named sub-streams:
//
//   split        train/validation partition
//   phase        old/new partition (two-phase, checkpoint)
//   stream       arrival order (online)
//   fraction     target-data ordering (pre-training crossover)
//   init, r      fresh initialization used at round r, by random restarts
//                and as the noise term of shrink-perturb alike
//   train, r     mini-batch order of round r
//
// so that warm start and random restart are exact special cases of
// shrink-perturb with (1, 0) and (0, 1).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "warmstart/data.hpp"
#include "warmstart/diagnostics.hpp"
#include "warmstart/error.hpp"
#include "warmstart/nn.hpp"
#include "warmstart/optim.hpp"
#include "warmstart/parallel.hpp"
#include "warmstart/record.hpp"
#include "warmstart/reinit.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

/// "Trained to convergence": train accuracy at or above the threshold for
/// `patience_epochs` consecutive epochs, or `max_epochs` reached. In budget
/// mode exactly `max_epochs` epochs run.
struct ConvergenceCriterion {
  double train_accuracy_threshold = 0.99;
  std::size_t patience_epochs = 5;
  std::size_t max_epochs = 500;
  bool budget_mode = false;

  void validate() const {
    if (!(train_accuracy_threshold > 0.0 && train_accuracy_threshold <= 1.0)) {
      throw ConfigError("convergence threshold must lie in (0, 1]");
    }
    if (patience_epochs < 1) throw ConfigError("patience must be at least one epoch");
    if (!budget_mode && max_epochs != 0 && max_epochs < patience_epochs) {
      throw ConfigError("max_epochs must be at least patience_epochs");
    }
  }
};

struct TrainConfig {
  OptimizerConfig optimizer = AdamConfig{};
  double confidence_beta = 0.0;

  void validate() const {
    warmstart::validate(optimizer);
    if (!(confidence_beta >= 0.0)) throw ConfigError("confidence_beta must be non-negative");
  }
};

/// Called with (epoch, params) before training (epoch 0) and after every epoch.
using EpochCallback = std::function<void(std::size_t, const ModelParams&)>;

struct TrainOutcome {
  ModelParams params;
  RoundResult result;
};

/// One round: resets the optimizer, then runs epochs of shuffled mini-batch
/// steps over `train_idx` until the criterion is met. Throws DivergenceError
/// on a non-finite loss.
inline TrainOutcome train_to_convergence(ModelParams params, const Dataset& train,
                                         std::span<const std::size_t> train_idx, const Dataset& val,
                                         Optimizer& opt, const TrainConfig& cfg, const ConvergenceCriterion& crit,
                                         std::uint64_t seed, const EpochCallback& on_epoch = {}) {
  if (train_idx.empty()) throw InputError("train_to_convergence: empty training set");
  crit.validate();
  const std::uint64_t resets_before = opt.reset_count();
  opt.reset(params);

  RoundResult rr;
  rr.n_train_available = train_idx.size();
  const std::size_t bs = opt.batch_size();
  const std::size_t per_epoch = batches_per_epoch(train_idx.size(), bs);

  if (on_epoch) on_epoch(0, params);
  Matrix x;
  std::vector<int> y;
  std::size_t streak = 0;
  Evaluation tr{};
  bool evaluated = false;
  for (std::size_t epoch = 1; epoch <= crit.max_epochs; ++epoch) {
    for (const auto& batch : minibatches(train_idx, bs, seed, epoch)) {
      gather(train, batch, x, y);
      const ForwardCache cache = forward(params, x);
      const LossResult loss = softmax_xent(cached_logits(cache), y, cfg.confidence_beta);
      if (!std::isfinite(loss.loss)) throw DivergenceError(epoch, param_norm(params));
      opt.step(params, backward(params, cache, loss.dlogits));
    }
    rr.epochs_used = epoch;
    rr.steps += per_epoch;
    rr.examples += train_idx.size();
    tr = evaluate(params, train, train_idx, cfg.confidence_beta);
    evaluated = true;
    if (!std::isfinite(tr.loss) || !all_finite(params)) throw DivergenceError(epoch, param_norm(params));
    if (on_epoch) on_epoch(epoch, params);
    streak = tr.accuracy >= crit.train_accuracy_threshold ? streak + 1 : 0;
    if (!crit.budget_mode && streak >= crit.patience_epochs) break;
  }
  if (!evaluated) tr = evaluate(params, train, train_idx, cfg.confidence_beta);
  const Evaluation va = evaluate(params, val, cfg.confidence_beta);
  rr.converged = tr.accuracy >= crit.train_accuracy_threshold;
  rr.train_accuracy = tr.accuracy;
  rr.train_loss = tr.loss;
  rr.val_accuracy = va.accuracy;
  rr.val_loss = va.loss;
  rr.optimizer_resets = opt.reset_count() - resets_before;
  return {std::move(params), std::move(rr)};
}

struct ModelConfig {
  std::vector<std::size_t> hidden{100, 100};
  Activation activation = Activation::relu;
  bool use_bias = true;

  NetworkSpec network(std::size_t d, std::size_t k) const { return NetworkSpec::mlp(d, hidden, k, activation, use_bias); }
};

/// Settings shared by every protocol.
struct CommonConfig {
  double val_fraction = 1.0 / 3.0;
  ModelConfig model;
  TrainConfig train;                             // rounds after the first
  std::optional<TrainConfig> first_train;        // first round / phase 1, when different
  ConvergenceCriterion criterion;                // rounds after the first
  std::optional<ConvergenceCriterion> first_criterion;
  std::vector<Initializer> initializers{Initializer::warm()};

  const TrainConfig& first_round_train() const { return first_train ? *first_train : train; }
  const ConvergenceCriterion& first_round_criterion() const { return first_criterion ? *first_criterion : criterion; }

  void validate() const {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
    train.validate();
    if (first_train) first_train->validate();
    criterion.validate();
    if (first_criterion) first_criterion->validate();
    if (initializers.empty()) throw ConfigError("at least one initializer is required");
    for (const auto& i : initializers) {
      try {
        i.validate();
      } catch (const InputError& e) {
        throw ConfigError(e.what());
      }
    }
  }
};

struct TwoPhaseConfig {
  CommonConfig common;
  double first_fraction = 0.5;
};

struct OnlineConfig {
  CommonConfig common;
  long long k_stream = 1000;
  std::size_t rounds = 10;
};

struct CheckpointConfig {
  CommonConfig common;
  double first_fraction = 0.5;
  std::size_t interval = 5;
  std::size_t budget = 50;
};

struct CrossoverConfig {
  CommonConfig common;
  std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
};

struct IterativeConfig {
  CommonConfig common;
  std::size_t rounds = 20;
};

namespace detail {

struct Split {
  IndexList train;
  IndexList val;
  Dataset val_set;
};

inline Split make_split(const Dataset& data, double val_fraction, std::uint64_t seed) {
  auto [train, val] = split_indices(data.size(), val_fraction, derive_seed(seed, "split"));
  Dataset val_set = data.subset(val, data.name + "/val");
  return {std::move(train), std::move(val), std::move(val_set)};
}

inline IndexList permuted(IndexList idx, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(idx);
  return idx;
}

inline std::size_t fraction_count(double fraction, std::size_t n) {
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(m, 1, n);
}

inline void accumulate(RoundResult& r, const RoundResult* prev) {
  r.cumulative_steps = (prev ? prev->cumulative_steps : 0) + r.steps;
  r.cumulative_examples = (prev ? prev->cumulative_examples : 0) + r.examples;
}

inline void record_grad_split(RoundResult& r, const GradSplit& g) {
  r.diagnostics["grad_norm_old"] = g.mean_grad_norm_old;
  r.diagnostics["grad_norm_new"] = g.mean_grad_norm_new;
  if (auto ratio = g.ratio()) r.diagnostics["grad_ratio"] = *ratio;
}

inline void record_weight_correlation(RoundResult& r, const ModelParams& init, const ModelParams& final_params) {
  try {
    r.diagnostics["weight_corr"] = weight_correlation(init, final_params);
  } catch (const InputError&) {
    // zero-variance start (e.g. lambda = gamma = 0): correlation undefined
  }
}

inline AbortInfo abort_info(std::size_t round, const DivergenceError& e) {
  return {round, e.epoch(), e.param_norm(), e.what()};
}

inline ExperimentRecord new_record(std::string protocol, const Initializer& init, std::uint64_t seed) {
  ExperimentRecord rec;
  rec.protocol = std::move(protocol);
  rec.series = init.describe();
  rec.seed = seed;
  return rec;
}

}  // namespace detail

/// Train to convergence on `first_fraction` of the training split, then on
/// all of it, starting phase 2 from each configured initializer. Phase 1 is
/// shared; one record per initializer.
inline std::vector<ExperimentRecord> run_two_phase(const Dataset& data, const TwoPhaseConfig& cfg,
                                                   std::uint64_t seed) {
  cfg.common.validate();
  if (!(cfg.first_fraction > 0.0 && cfg.first_fraction < 1.0)) {
    throw ConfigError("two_phase: first_fraction must lie in (0, 1)");
  }
  const auto split = detail::make_split(data, cfg.common.val_fraction, seed);
  const IndexList all = detail::permuted(split.train, derive_seed(seed, "phase"));
  const std::size_t n_old = std::clamp<std::size_t>(detail::fraction_count(cfg.first_fraction, all.size()), 1,
                                                    all.size() - 1);
  const IndexList old_idx(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_old));
  const IndexList new_idx(all.begin() + static_cast<std::ptrdiff_t>(n_old), all.end());
  const NetworkSpec spec = cfg.common.model.network(data.dim(), data.num_classes);

  std::vector<ExperimentRecord> records;
  for (const auto& init : cfg.common.initializers) records.push_back(detail::new_record("two_phase", init, seed));

  std::optional<TrainOutcome> phase1;
  try {
    Optimizer opt(cfg.common.first_round_train().optimizer);
    phase1 = train_to_convergence(init_params(spec, derive_seed(seed, "init", 0)), data, old_idx, split.val_set, opt,
                                  cfg.common.first_round_train(), cfg.common.first_round_criterion(),
                                  derive_seed(seed, "train", 0));
  } catch (const DivergenceError& e) {
    for (auto& rec : records) rec.abort = detail::abort_info(0, e);
    return records;
  }
  phase1->result.round = 0;
  phase1->result.x = cfg.first_fraction;
  phase1->result.initializer = "random";
  detail::accumulate(phase1->result, nullptr);

  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& rec = records[i];
    rec.rounds.push_back(phase1->result);
    const Initializer& init = cfg.common.initializers[i];
    ModelParams start = apply_initializer(phase1->params, init, derive_seed(seed, "init", 1));
    const GradSplit g = grad_norm_split(start, old_idx, new_idx, data, cfg.common.train.confidence_beta);
    try {
      Optimizer opt(cfg.common.train.optimizer);
      auto phase2 = train_to_convergence(start, data, all, split.val_set, opt, cfg.common.train, cfg.common.criterion,
                                         derive_seed(seed, "train", 1));
      phase2.result.round = 1;
      phase2.result.x = 1.0;
      phase2.result.initializer = init.describe();
      detail::record_grad_split(phase2.result, g);
      detail::record_weight_correlation(phase2.result, start, phase2.params);
      detail::accumulate(phase2.result, &rec.rounds.back());
      rec.rounds.push_back(std::move(phase2.result));
    } catch (const DivergenceError& e) {
      rec.abort = detail::abort_info(1, e);
    }
  }
  return records;
}

/// Data arrive in rounds of k_stream; after each arrival the model is
/// re-initialized by the policy and trained to convergence on everything seen
/// so far. One record per initializer.
inline std::vector<ExperimentRecord> run_online(const Dataset& data, const OnlineConfig& cfg, std::uint64_t seed) {
  cfg.common.validate();
  if (cfg.rounds < 1) throw ConfigError("online: rounds must be at least 1");
  if (cfg.k_stream <= 0) throw ConfigError("online: k_stream must be positive");
  const auto split = detail::make_split(data, cfg.common.val_fraction, seed);
  if (static_cast<std::size_t>(cfg.k_stream) > split.train.size()) {
    throw ConfigError("online: k_stream exceeds the training split (" + std::to_string(split.train.size()) + " rows)");
  }
  const StreamSchedule stream = make_stream(split.train.size(), cfg.k_stream, derive_seed(seed, "stream"));
  const std::size_t rounds = std::min(cfg.rounds, stream.full_rounds());
  auto to_rows = [&](const IndexList& positions) {
    IndexList rows(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) rows[i] = split.train[positions[i]];
    return rows;
  };
  const NetworkSpec spec = cfg.common.model.network(data.dim(), data.num_classes);

  std::vector<ExperimentRecord> records;
  for (const auto& init : cfg.common.initializers) {
    auto rec = detail::new_record("online", init, seed);
    ModelParams params = init_params(spec, derive_seed(seed, "init", 0));
    Optimizer first_opt(cfg.common.first_round_train().optimizer);
    Optimizer opt(cfg.common.train.optimizer);
    for (std::size_t r = 0; r < rounds; ++r) {
      const IndexList available = to_rows(stream.accumulated(r));
      ModelParams start = r == 0 ? params : apply_initializer(params, init, derive_seed(seed, "init", r));
      std::optional<GradSplit> g;
      if (r > 0) g = grad_norm_split(start, to_rows(stream.accumulated(r - 1)), to_rows(stream.rounds[r]), data);
      const TrainConfig& tc = r == 0 ? cfg.common.first_round_train() : cfg.common.train;
      const ConvergenceCriterion& cc = r == 0 ? cfg.common.first_round_criterion() : cfg.common.criterion;
      try {
        auto out = train_to_convergence(start, data, available, split.val_set, r == 0 ? first_opt : opt, tc, cc,
                                        derive_seed(seed, "train", r));
        out.result.round = r;
        out.result.x = static_cast<double>(available.size());
        out.result.initializer = r == 0 ? "random" : init.describe();
        if (g) detail::record_grad_split(out.result, *g);
        detail::accumulate(out.result, rec.rounds.empty() ? nullptr : &rec.rounds.back());
        rec.rounds.push_back(std::move(out.result));
        params = std::move(out.params);
      } catch (const DivergenceError& e) {
        rec.abort = detail::abort_info(r, e);
        break;
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

/// Phase 1 runs for a fixed epoch budget, snapshotting every `interval`
/// epochs (epoch 0 included); each snapshot warm-starts an independent phase 2
/// on all training data. The epoch-0 snapshot is an untrained random
/// initialization and serves as the baseline for `damage_pct`.
inline std::vector<ExperimentRecord> run_checkpoint_warmstart(const Dataset& data, const CheckpointConfig& cfg,
                                                              std::uint64_t seed) {
  cfg.common.validate();
  if (cfg.interval < 1) throw ConfigError("checkpoint: interval must be at least 1");
  if (cfg.interval > cfg.budget) throw ConfigError("checkpoint: interval exceeds the phase-1 budget");
  if (!(cfg.first_fraction > 0.0 && cfg.first_fraction < 1.0)) {
    throw ConfigError("checkpoint: first_fraction must lie in (0, 1)");
  }
  const auto split = detail::make_split(data, cfg.common.val_fraction, seed);
  const IndexList all = detail::permuted(split.train, derive_seed(seed, "phase"));
  const std::size_t n_old = std::clamp<std::size_t>(detail::fraction_count(cfg.first_fraction, all.size()), 1,
                                                    all.size() - 1);
  const IndexList old_idx(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_old));
  const NetworkSpec spec = cfg.common.model.network(data.dim(), data.num_classes);

  ExperimentRecord rec;
  rec.protocol = "checkpoint";
  rec.series = "checkpoint";
  rec.seed = seed;

  std::vector<std::pair<std::size_t, ModelParams>> snapshots;
  ConvergenceCriterion budget = cfg.common.first_round_criterion();
  budget.budget_mode = true;
  budget.max_epochs = cfg.budget;
  try {
    Optimizer opt(cfg.common.first_round_train().optimizer);
    train_to_convergence(init_params(spec, derive_seed(seed, "init", 0)), data, old_idx, split.val_set, opt,
                         cfg.common.first_round_train(), budget, derive_seed(seed, "train", 0),
                         [&](std::size_t epoch, const ModelParams& p) {
                           if (epoch % cfg.interval == 0) snapshots.emplace_back(epoch, p);
                         });
  } catch (const DivergenceError& e) {
    rec.abort = detail::abort_info(0, e);
    return {rec};
  }

  double baseline = 0.0;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& [epoch, start] = snapshots[i];
    try {
      Optimizer opt(cfg.common.train.optimizer);
      auto out = train_to_convergence(start, data, all, split.val_set, opt, cfg.common.train, cfg.common.criterion,
                                      derive_seed(seed, "train", 1));
      if (i == 0) baseline = out.result.val_accuracy;
      out.result.round = i;
      out.result.x = static_cast<double>(epoch);
      out.result.initializer = epoch == 0 ? "random" : "checkpoint@" + std::to_string(epoch);
      out.result.diagnostics["checkpoint_val_accuracy"] = evaluate(start, split.val_set).accuracy;
      out.result.diagnostics["damage_pct"] =
          baseline > 0.0 ? 100.0 * (baseline - out.result.val_accuracy) / baseline : 0.0;
      detail::accumulate(out.result, rec.rounds.empty() ? nullptr : &rec.rounds.back());
      rec.rounds.push_back(std::move(out.result));
    } catch (const DivergenceError& e) {
      rec.abort = detail::abort_info(i, e);
      break;
    }
  }
  return {rec};
}

/// Pre-train to convergence on all of `source`, then train on increasing
/// fractions of the target training split from each initializer. Random
/// restarts ignore the source model. One record per initializer, one round
/// per fraction.
inline std::vector<ExperimentRecord> run_pretrain_crossover(const Dataset& source, const Dataset& target,
                                                            const CrossoverConfig& cfg, std::uint64_t seed) {
  cfg.common.validate();
  if (cfg.fractions.empty()) throw ConfigError("pretrain_crossover: fraction list is empty");
  for (double f : cfg.fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("pretrain_crossover: fractions must lie in (0, 1]");
  }
  if (source.dim() != target.dim() || source.num_classes != target.num_classes) {
    throw ConfigError("pretrain_crossover: source and target differ in dimension or class count");
  }
  const auto split = detail::make_split(target, cfg.common.val_fraction, seed);
  const IndexList order = detail::permuted(split.train, derive_seed(seed, "fraction"));
  const NetworkSpec spec = cfg.common.model.network(target.dim(), target.num_classes);

  std::vector<ExperimentRecord> records;
  for (const auto& init : cfg.common.initializers) records.push_back(detail::new_record("pretrain_crossover", init, seed));

  std::optional<TrainOutcome> pretrained;
  try {
    Optimizer opt(cfg.common.first_round_train().optimizer);
    const IndexList source_rows = iota_indices(source.size());
    pretrained = train_to_convergence(init_params(spec, derive_seed(seed, "init", 0)), source, source_rows,
                                      split.val_set, opt, cfg.common.first_round_train(),
                                      cfg.common.first_round_criterion(), derive_seed(seed, "train", 0));
  } catch (const DivergenceError& e) {
    for (auto& rec : records) rec.abort = detail::abort_info(0, e);
    return records;
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& rec = records[i];
    const Initializer& init = cfg.common.initializers[i];
    for (std::size_t f = 0; f < cfg.fractions.size(); ++f) {
      const std::size_t m = detail::fraction_count(cfg.fractions[f], order.size());
      const IndexList rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
      ModelParams start = apply_initializer(pretrained->params, init, derive_seed(seed, "init", 1));
      try {
        Optimizer opt(cfg.common.train.optimizer);
        auto out = train_to_convergence(std::move(start), target, rows, split.val_set, opt, cfg.common.train,
                                        cfg.common.criterion, derive_seed(seed, "train", 1));
        out.result.round = f;
        out.result.x = cfg.fractions[f];
        out.result.initializer = init.describe();
        out.result.diagnostics["source_val_accuracy"] = pretrained->result.val_accuracy;
        detail::accumulate(out.result, rec.rounds.empty() ? nullptr : &rec.rounds.back());
        rec.rounds.push_back(std::move(out.result));
      } catch (const DivergenceError& e) {
        rec.abort = detail::abort_info(f, e);
        break;
      }
    }
  }
  return records;
}

/// Repeatedly trains to convergence on the same data, re-initializing with
/// the policy between rounds.
inline std::vector<ExperimentRecord> run_iterative_sp(const Dataset& data, const IterativeConfig& cfg,
                                                      std::uint64_t seed) {
  cfg.common.validate();
  if (cfg.rounds < 1) throw ConfigError("iterative_sp: rounds must be at least 1");
  const auto split = detail::make_split(data, cfg.common.val_fraction, seed);
  const NetworkSpec spec = cfg.common.model.network(data.dim(), data.num_classes);

  std::vector<ExperimentRecord> records;
  for (const auto& init : cfg.common.initializers) {
    auto rec = detail::new_record("iterative_sp", init, seed);
    ModelParams params = init_params(spec, derive_seed(seed, "init", 0));
    Optimizer first_opt(cfg.common.first_round_train().optimizer);
    Optimizer opt(cfg.common.train.optimizer);
    double best = 0.0;
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
      ModelParams start = r == 0 ? params : apply_initializer(params, init, derive_seed(seed, "init", r));
      try {
        auto out = train_to_convergence(std::move(start), data, split.train, split.val_set, r == 0 ? first_opt : opt,
                                        r == 0 ? cfg.common.first_round_train() : cfg.common.train,
                                        r == 0 ? cfg.common.first_round_criterion() : cfg.common.criterion,
                                        derive_seed(seed, "train", r));
        best = std::max(best, out.result.val_accuracy);
        out.result.round = r;
        out.result.x = static_cast<double>(r + 1);
        out.result.initializer = r == 0 ? "random" : init.describe();
        out.result.diagnostics["best_val_accuracy"] = best;
        detail::accumulate(out.result, rec.rounds.empty() ? nullptr : &rec.rounds.back());
        rec.rounds.push_back(std::move(out.result));
        params = std::move(out.params);
      } catch (const DivergenceError& e) {
        rec.abort = detail::abort_info(r, e);
        break;
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

/// One swept hyperparameter. Recognized names: lambda, gamma, lr, batch_size,
/// phase1_lr, phase1_batch_size, weight_decay, confidence_beta.
struct GridAxis {
  std::string name;
  std::vector<double> values;
};

inline const std::vector<std::string>& grid_axis_names() {
  static const std::vector<std::string> names = {"lambda",    "gamma",        "lr",          "batch_size",
                                                 "phase1_lr", "phase1_batch_size", "weight_decay", "confidence_beta"};
  return names;
}

enum class GridBase { two_phase, online };

struct GridConfig {
  GridBase base = GridBase::online;
  TwoPhaseConfig two_phase;
  OnlineConfig online;
  std::vector<GridAxis> axes;
};

namespace detail {

inline void set_lr(OptimizerConfig& o, double lr) {
  std::visit([&](auto& c) { c.learning_rate = lr; }, o);
}
inline void set_batch(OptimizerConfig& o, double bs) {
  if (!(bs >= 1.0) || bs != std::floor(bs)) throw ConfigError("grid: batch_size values must be positive integers");
  std::visit([&](auto& c) { c.batch_size = static_cast<std::size_t>(bs); }, o);
}
inline void set_decay(OptimizerConfig& o, double wd) {
  std::visit([&](auto& c) { c.weight_decay = wd; }, o);
}

inline void apply_axis(CommonConfig& c, const std::string& name, double v) {
  TrainConfig& first = c.first_train ? *c.first_train : c.first_train.emplace(c.train);
  if (name == "lambda" || name == "gamma") {
    for (auto& init : c.initializers) {
      if (init.policy == InitPolicy::warm || init.policy == InitPolicy::random) {
        init = Initializer::shrink_perturb(init.lambda, init.noise_scale);
      }
      (name == "lambda" ? init.lambda : init.noise_scale) = v;
    }
  } else if (name == "lr") {
    set_lr(c.train.optimizer, v);
    set_lr(first.optimizer, v);
  } else if (name == "batch_size") {
    set_batch(c.train.optimizer, v);
    set_batch(first.optimizer, v);
  } else if (name == "phase1_lr") {
    set_lr(first.optimizer, v);
  } else if (name == "phase1_batch_size") {
    set_batch(first.optimizer, v);
  } else if (name == "weight_decay") {
    set_decay(c.train.optimizer, v);
    set_decay(first.optimizer, v);
  } else if (name == "confidence_beta") {
    c.train.confidence_beta = v;
    first.confidence_beta = v;
  } else {
    throw ConfigError("grid: unknown axis '" + name + "'");
  }
}

inline std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

/// Cartesian product of the axes, in declaration order (last axis fastest).
inline std::vector<std::map<std::string, double>> grid_cells(const std::vector<GridAxis>& axes) {
  if (axes.empty()) throw ConfigError("grid: no axes");
  std::vector<std::map<std::string, double>> cells{{}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("grid: axis '" + axis.name + "' is empty");
    std::vector<std::map<std::string, double>> next;
    for (const auto& cell : cells) {
      for (double v : axis.values) {
        auto c = cell;
        c[axis.name] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

/// Runs the base protocol for every (cell, seed); records are tagged with the
/// cell coordinates and sorted by (series, cell, seed).
inline std::vector<ExperimentRecord> run_grid_sweep(const Dataset& data, const GridConfig& cfg,
                                                    std::span<const std::uint64_t> seeds,
                                                    std::size_t threads = configured_threads()) {
  if (seeds.empty()) throw ConfigError("grid: no seeds");
  const auto cells = grid_cells(cfg.axes);
  std::vector<std::string> labels;
  for (const auto& cell : cells) {
    std::string label;
    for (const auto& axis : cfg.axes) {
      if (!label.empty()) label += '|';
      label += axis.name + "=" + detail::format_value(cell.at(axis.name));
    }
    labels.push_back(std::move(label));
  }
  // Validate every cell before spending compute.
  auto configure = [&](auto base_cfg, const std::map<std::string, double>& cell) {
    for (const auto& [name, v] : cell) detail::apply_axis(base_cfg.common, name, v);
    base_cfg.common.validate();
    return base_cfg;
  };
  for (const auto& cell : cells) {
    if (cfg.base == GridBase::two_phase) {
      configure(cfg.two_phase, cell);
    } else {
      configure(cfg.online, cell);
    }
  }

  const std::size_t jobs = cells.size() * seeds.size();
  auto results = parallel_map(
      jobs,
      [&](std::size_t j) {
        const std::size_t c = j / seeds.size();
        const std::uint64_t seed = seeds[j % seeds.size()];
        std::vector<ExperimentRecord> recs =
            cfg.base == GridBase::two_phase ? run_two_phase(data, configure(cfg.two_phase, cells[c]), seed)
                                            : run_online(data, configure(cfg.online, cells[c]), seed);
        const bool many = recs.size() > 1;
        for (auto& r : recs) {
          r.protocol = "grid";
          r.cell = cells[c];
          r.series = many ? labels[c] + "|" + r.series : labels[c];
        }
        return recs;
      },
      threads);
  std::vector<ExperimentRecord> out;
  for (auto& batch : results) {
    for (auto& r : batch) out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), record_less);
  return out;
}

}  // namespace warmstart
