#pragma once

// JSON run configuration: schema-checked reading with defaults, `--set`
// overrides, and a resolved echo that is itself a valid configuration.
//
// Top-level keys:
//   protocol            two_phase | online | grid | checkpoint | pretrain_crossover | iterative_sp
//   dataset             {kind, n, d, k, label_noise, seed, cluster_spread, center_seed, mean_shift}
//                       or {csv, header}
//   target_dataset      same schema; pretrain_crossover only
//   val_fraction        default 1/3
//   model               {hidden, activation, bias}
//   optimizer           {kind: adam|sgd, lr, batch_size, weight_decay, beta1, beta2, epsilon, confidence_beta}
//   phase1_optimizer    optional override for the first round
//   convergence         {threshold, patience, max_epochs, mode: convergence|budget}
//   phase1_convergence  optional override for the first round
//   reinit              {policy, lambda, gamma}   (or `initializers`: list of the same)
//   two_phase           {first_fraction}
//   online              {k_stream, rounds}
//   checkpoint          {interval, budget, first_fraction}
//   pretrain_crossover  {fractions}
//   iterative_sp        {rounds}
//   grid                {base: online|two_phase, axes: {name: [values]}}
//   seeds               list of distinct non-negative integers, default [0..4]
//   out                 output directory, default "results"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "warmstart/data.hpp"
#include "warmstart/error.hpp"
#include "warmstart/harness.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

using json = nlohmann::json;

enum class Protocol { two_phase, online, grid, checkpoint, pretrain_crossover, iterative_sp };

inline std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::two_phase: return "two_phase";
    case Protocol::online: return "online";
    case Protocol::grid: return "grid";
    case Protocol::checkpoint: return "checkpoint";
    case Protocol::pretrain_crossover: return "pretrain_crossover";
    case Protocol::iterative_sp: return "iterative_sp";
  }
  return "online";
}

struct DatasetSource {
  std::optional<SyntheticSpec> synthetic;
  std::string csv_path;
  bool csv_header = false;

  Dataset load() const {
    Dataset ds = synthetic ? gen_synthetic(*synthetic) : load_csv(csv_path, csv_header);
    ds.validate();
    return ds;
  }
};

struct RunConfig {
  Protocol protocol = Protocol::online;
  DatasetSource dataset;
  std::optional<DatasetSource> target_dataset;
  CommonConfig common;
  TwoPhaseConfig two_phase;
  OnlineConfig online;
  CheckpointConfig checkpoint;
  CrossoverConfig crossover;
  IterativeConfig iterative;
  GridConfig grid;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string out_dir = "results";
  json resolved;  // fully-resolved echo
  std::string hash;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string type_name(const json& j) {
  if (j.is_number()) return "number";
  return j.type_name();
}

/// Reads one JSON object against a fixed key set, filling defaults into the
/// resolved echo and rejecting anything it was not asked about.
class Section {
 public:
  Section(const json& node, std::string path, json& resolved) : node_(node), path_(std::move(path)), out_(resolved) {
    if (!node_.is_object()) fail("expected an object, got " + type_name(node_));
    out_ = json::object();
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return node_.contains(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = lookup(key, def.has_value());
    if (!v) return emit(key, *def);
    if (!v->is_number()) fail_type(key, "number", *v);
    return emit(key, v->get<double>());
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> def = std::nullopt) {
    const json* v = lookup(key, def.has_value());
    if (!v) return emit(key, *def);
    return emit(key, as_count(key, *v));
  }

  bool boolean(const std::string& key, std::optional<bool> def = std::nullopt) {
    const json* v = lookup(key, def.has_value());
    if (!v) return emit(key, *def);
    if (!v->is_boolean()) fail_type(key, "boolean", *v);
    return emit(key, v->get<bool>());
  }

  std::string text(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = lookup(key, def.has_value());
    if (!v) return emit(key, *def);
    if (!v->is_string()) fail_type(key, "string", *v);
    return emit(key, v->get<std::string>());
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) {
    const json* v = lookup(key, def.has_value());
    if (!v) return emit(key, *def);
    if (!v->is_array()) fail_type(key, "array of numbers", *v);
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) fail_type(key, "array of numbers", *v);
      out.push_back(e.get<double>());
    }
    return emit(key, out);
  }

  std::vector<std::uint64_t> counts(const std::string& key, std::optional<std::vector<std::uint64_t>> def = std::nullopt) {
    const json* v = lookup(key, def.has_value());
    if (!v) return emit(key, *def);
    if (!v->is_array()) fail_type(key, "array of non-negative integers", *v);
    std::vector<std::uint64_t> out;
    for (const auto& e : *v) out.push_back(as_count(key, e));
    return emit(key, out);
  }

  /// Nested object; `present` is false when the key is absent (an empty object is read instead).
  Section child(const std::string& key, bool* present = nullptr) {
    known_.insert(key);
    static const json empty = json::object();
    const bool here = node_.contains(key);
    if (present) *present = here;
    return Section(here ? node_.at(key) : empty, join(key), out_[key]);
  }

  const json& raw(const std::string& key) {
    known_.insert(key);
    return node_.at(key);
  }

  json& resolved() { return out_; }
  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (known_.count(key)) continue;
      std::string msg = "unknown key '" + key + "'";
      std::string best;
      std::size_t best_d = 3;
      for (const auto& k : known_) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (!best.empty()) msg += " (did you mean '" + best + "'?)";
      fail(msg);
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + msg);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* lookup(const std::string& key, bool optional) {
    known_.insert(key);
    if (node_.contains(key)) return &node_.at(key);
    if (!optional) fail("missing required key '" + key + "'");
    return nullptr;
  }

  template <class T>
  T emit(const std::string& key, T value) {
    out_[key] = value;
    return value;
  }

  std::uint64_t as_count(const std::string& key, const json& v) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0 && d == std::floor(d) && d < 9.0e15) return static_cast<std::uint64_t>(d);
    }
    fail_type(key, "non-negative integer", v);
  }

  [[noreturn]] void fail_type(const std::string& key, const std::string& expected, const json& got) const {
    throw ConfigError("key '" + join(key) + "': expected " + expected + ", got " + type_name(got) + " (" +
                      got.dump() + ")");
  }

  const json& node_;
  std::string path_;
  json& out_;
  std::set<std::string> known_;
};

inline DatasetSource read_dataset(Section s) {
  DatasetSource src;
  if (s.has("csv")) {
    src.csv_path = s.text("csv");
    src.csv_header = s.boolean("header", false);
  } else {
    SyntheticSpec spec;
    const std::string kind = s.text("kind", "gaussian_mixture");
    try {
      spec.kind = synthetic_kind_from_string(kind);
    } catch (const InputError& e) {
      s.fail(e.what());
    }
    const bool spirals = spec.kind == SyntheticKind::spirals;
    spec.n = s.count("n", 10000);
    spec.d = s.count("d", spirals ? 2 : 32);
    spec.k = s.count("k", spirals ? 3 : 10);
    spec.label_noise = s.number("label_noise", 0.1);
    spec.seed = s.count("seed", 0);
    spec.cluster_spread = s.number("cluster_spread", 1.0);
    spec.center_seed = s.count("center_seed", spec.seed);
    spec.mean_shift = s.number("mean_shift", 0.0);
    try {
      spec.validate();
    } catch (const InputError& e) {
      s.fail(e.what());
    }
    src.synthetic = spec;
  }
  s.finish();
  return src;
}

inline TrainConfig read_optimizer(Section s) {
  TrainConfig tc;
  const std::string kind = s.text("kind", "adam");
  const double lr = s.number("lr", 0.001);
  const std::size_t bs = s.count("batch_size", 128);
  const double wd = s.number("weight_decay", 0.0);
  tc.confidence_beta = s.number("confidence_beta", 0.0);
  if (kind == "adam") {
    AdamConfig a;
    a.learning_rate = lr;
    a.batch_size = bs;
    a.weight_decay = wd;
    a.beta1 = s.number("beta1", 0.9);
    a.beta2 = s.number("beta2", 0.999);
    a.epsilon = s.number("epsilon", 1e-8);
    tc.optimizer = a;
  } else if (kind == "sgd") {
    tc.optimizer = SgdConfig{lr, wd, bs};
  } else {
    s.fail("optimizer kind must be 'adam' or 'sgd', got '" + kind + "'");
  }
  s.finish();
  try {
    tc.validate();
  } catch (const ConfigError& e) {
    s.fail(e.what());
  }
  return tc;
}

inline ConvergenceCriterion read_convergence(Section s) {
  ConvergenceCriterion c;
  c.train_accuracy_threshold = s.number("threshold", 0.99);
  c.patience_epochs = s.count("patience", 5);
  c.max_epochs = s.count("max_epochs", 500);
  const std::string mode = s.text("mode", "convergence");
  if (mode != "convergence" && mode != "budget") s.fail("mode must be 'convergence' or 'budget'");
  c.budget_mode = mode == "budget";
  s.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    s.fail(e.what());
  }
  return c;
}

inline Initializer read_initializer(Section s) {
  Initializer init;
  const std::string policy = s.text("policy", "warm");
  try {
    init.policy = init_policy_from_string(policy);
  } catch (const InputError& e) {
    s.fail(e.what());
  }
  switch (init.policy) {
    case InitPolicy::warm: init = Initializer::warm(); break;
    case InitPolicy::random: init = Initializer::random(); break;
    case InitPolicy::shrink_perturb:
      init = Initializer::shrink_perturb(s.number("lambda", 0.6), s.number("gamma", 0.01));
      break;
    case InitPolicy::noise_only: init = Initializer::noise_only(s.number("gamma", 0.01)); break;
    case InitPolicy::last_layer: init = Initializer::last_layer(s.number("lambda", 0.6), s.number("gamma", 0.01)); break;
  }
  // lambda/gamma are meaningful keys for every policy, so a typo is still caught.
  if (init.policy == InitPolicy::warm || init.policy == InitPolicy::random) {
    if (s.has("lambda") || s.has("gamma")) s.fail("lambda/gamma only apply to shrink_perturb, noise_only, last_layer");
  } else if (init.policy == InitPolicy::noise_only && s.has("lambda")) {
    s.fail("noise_only has no lambda");
  }
  s.finish();
  try {
    init.validate();
  } catch (const InputError& e) {
    s.fail(e.what());
  }
  return init;
}

inline json apply_override(json doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (p.empty()) throw ConfigError("--set: empty path segment in '" + path + "'");
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw ConfigError("--set: '" + p + "' is not an array index in '" + path + "'");
      }
      if (idx >= node->size()) throw ConfigError("--set: index " + p + " out of range in '" + path + "'");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("--set: '" + path + "' descends into a non-object");
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
  return doc;
}

}  // namespace detail

/// FNV-1a of the canonical resolved config; the output directory is excluded.
inline std::string config_hash(json resolved) {
  resolved.erase("out");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved.dump())));
  return buf;
}

/// Validates `doc` (after applying `overrides`, each "dotted.key=value") and
/// returns the typed configuration with its resolved echo and hash.
inline RunConfig parse_config(json doc, const std::vector<std::string>& overrides = {}) {
  for (const auto& o : overrides) doc = detail::apply_override(std::move(doc), o);
  RunConfig rc;
  json resolved;
  detail::Section root(doc, "", resolved);

  const std::string protocol = root.text("protocol");
  const std::vector<std::pair<std::string, Protocol>> protocols = {
      {"two_phase", Protocol::two_phase},   {"online", Protocol::online},
      {"grid", Protocol::grid},             {"checkpoint", Protocol::checkpoint},
      {"pretrain_crossover", Protocol::pretrain_crossover}, {"iterative_sp", Protocol::iterative_sp}};
  const auto it = std::find_if(protocols.begin(), protocols.end(), [&](const auto& p) { return p.first == protocol; });
  if (it == protocols.end()) root.fail("unknown protocol '" + protocol + "'");
  rc.protocol = it->second;

  if (!doc.contains("dataset")) root.fail("missing required key 'dataset'");
  rc.dataset = detail::read_dataset(root.child("dataset"));
  if (rc.protocol == Protocol::pretrain_crossover) {
    if (!doc.contains("target_dataset")) root.fail("missing required key 'target_dataset'");
    rc.target_dataset = detail::read_dataset(root.child("target_dataset"));
  } else if (doc.contains("target_dataset")) {
    root.fail("target_dataset only applies to pretrain_crossover");
  }

  CommonConfig& common = rc.common;
  common.val_fraction = root.number("val_fraction", 1.0 / 3.0);
  {
    auto m = root.child("model");
    const auto hidden = m.counts("hidden", std::vector<std::uint64_t>{100, 100});
    common.model.hidden.assign(hidden.begin(), hidden.end());
    const std::string act = m.text("activation", "relu");
    try {
      common.model.activation = activation_from_string(act);
    } catch (const InputError& e) {
      m.fail(e.what());
    }
    common.model.use_bias = m.boolean("bias", true);
    m.finish();
    for (auto h : common.model.hidden) {
      if (h == 0) m.fail("hidden widths must be positive");
    }
  }
  common.train = detail::read_optimizer(root.child("optimizer"));
  if (doc.contains("phase1_optimizer")) common.first_train = detail::read_optimizer(root.child("phase1_optimizer"));
  common.criterion = detail::read_convergence(root.child("convergence"));
  if (doc.contains("phase1_convergence")) {
    common.first_criterion = detail::read_convergence(root.child("phase1_convergence"));
  }

  if (doc.contains("reinit") && doc.contains("initializers")) root.fail("give either 'reinit' or 'initializers', not both");
  common.initializers.clear();
  if (doc.contains("initializers")) {
    const json& list = root.raw("initializers");
    if (!list.is_array() || list.empty()) root.fail("'initializers' must be a non-empty array");
    json& out = root.resolved()["initializers"];
    out = json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      json entry;
      common.initializers.push_back(detail::read_initializer(
          detail::Section(list[i], "initializers." + std::to_string(i), entry)));
      out.push_back(entry);
    }
  } else {
    common.initializers.push_back(detail::read_initializer(root.child("reinit")));
  }

  {
    auto s = root.child("two_phase");
    rc.two_phase.first_fraction = s.number("first_fraction", 0.5);
    s.finish();
  }
  {
    auto s = root.child("online");
    rc.online.k_stream = static_cast<long long>(s.count("k_stream", 1000));
    rc.online.rounds = s.count("rounds", 10);
    s.finish();
  }
  {
    auto s = root.child("checkpoint");
    rc.checkpoint.interval = s.count("interval", 5);
    rc.checkpoint.budget = s.count("budget", 50);
    rc.checkpoint.first_fraction = s.number("first_fraction", 0.5);
    s.finish();
  }
  {
    auto s = root.child("pretrain_crossover");
    rc.crossover.fractions = s.numbers("fractions", std::vector<double>{0.1, 0.25, 0.5, 1.0});
    s.finish();
  }
  {
    auto s = root.child("iterative_sp");
    rc.iterative.rounds = s.count("rounds", 20);
    s.finish();
  }
  {
    bool present = false;
    auto s = root.child("grid", &present);
    const std::string base = s.text("base", "online");
    if (base == "online") {
      rc.grid.base = GridBase::online;
    } else if (base == "two_phase") {
      rc.grid.base = GridBase::two_phase;
    } else {
      s.fail("base must be 'online' or 'two_phase'");
    }
    if (s.has("axes")) {
      const json& axes = s.raw("axes");
      if (!axes.is_object()) s.fail("'axes' must be an object of name -> [values]");
      json& out = s.resolved()["axes"];
      out = json::object();
      const auto& names = grid_axis_names();
      for (const auto& [name, values] : axes.items()) {
        if (std::find(names.begin(), names.end(), name) == names.end()) {
          std::string msg = "unknown grid axis '" + name + "'";
          for (const auto& n : names) {
            if (detail::edit_distance(name, n) <= 2) {
              msg += " (did you mean '" + n + "'?)";
              break;
            }
          }
          s.fail(msg);
        }
        if (!values.is_array() || values.empty()) s.fail("axis '" + name + "' must be a non-empty array of numbers");
        GridAxis axis{name, {}};
        for (const auto& v : values) {
          if (!v.is_number()) s.fail("axis '" + name + "' must contain numbers only");
          axis.values.push_back(v.get<double>());
        }
        out[name] = axis.values;
        rc.grid.axes.push_back(std::move(axis));
      }
    } else if (rc.protocol == Protocol::grid) {
      s.fail("missing required key 'axes'");
    }
    s.finish();
  }

  rc.seeds = root.counts("seeds", std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  if (rc.seeds.empty()) root.fail("'seeds' must be non-empty");
  {
    auto sorted = rc.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) root.fail("'seeds' must be distinct");
  }
  rc.out_dir = root.text("out", "results");
  root.finish();

  try {
    common.validate();
  } catch (const ConfigError& e) {
    root.fail(e.what());
  }
  rc.two_phase.common = common;
  rc.online.common = common;
  rc.checkpoint.common = common;
  rc.crossover.common = common;
  rc.iterative.common = common;
  rc.grid.two_phase = rc.two_phase;
  rc.grid.online = rc.online;

  if (rc.protocol == Protocol::two_phase && !(rc.two_phase.first_fraction > 0.0 && rc.two_phase.first_fraction < 1.0)) {
    throw ConfigError("two_phase.first_fraction must lie in (0, 1)");
  }
  if (rc.protocol == Protocol::checkpoint) {
    if (rc.checkpoint.interval < 1 || rc.checkpoint.interval > rc.checkpoint.budget) {
      throw ConfigError("checkpoint.interval must lie in [1, checkpoint.budget]");
    }
  }
  if (rc.protocol == Protocol::online && (rc.online.k_stream < 1 || rc.online.rounds < 1)) {
    throw ConfigError("online.k_stream and online.rounds must be positive");
  }
  if (rc.protocol == Protocol::iterative_sp && rc.iterative.rounds < 1) {
    throw ConfigError("iterative_sp.rounds must be at least 1");
  }
  if (rc.protocol == Protocol::pretrain_crossover) {
    if (rc.crossover.fractions.empty()) throw ConfigError("pretrain_crossover.fractions must be non-empty");
    for (double f : rc.crossover.fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw ConfigError("pretrain_crossover.fractions must lie in (0, 1]");
    }
  }

  rc.resolved = std::move(resolved);
  rc.hash = config_hash(rc.resolved);
  return rc;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace warmstart
