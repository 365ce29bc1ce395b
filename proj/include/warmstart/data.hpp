#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "warmstart/error.hpp"
#include "warmstart/nn.hpp"
#include "warmstart/rng.hpp"

namespace warmstart {

using IndexList = std::vector<std::size_t>;

/// Labelled feature matrix. Immutable once built.
struct Dataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // n, each in [0, num_classes)
  std::size_t num_classes = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  void validate() const {
    if (labels.empty()) throw InputError("dataset '" + name + "' has no rows");
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
      throw InputError("dataset '" + name + "': feature rows and label count differ");
    }
    if (!features.allFinite()) throw InputError("dataset '" + name + "' has non-finite features");
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
        throw InputError("dataset '" + name + "': label " + std::to_string(y) + " outside [0, " +
                         std::to_string(num_classes) + ")");
      }
    }
  }

  Dataset subset(std::span<const std::size_t> idx, std::string subset_name = {}) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
    out.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(idx[i]));
      out.labels[i] = labels[idx[i]];
    }
    out.num_classes = num_classes;
    out.name = subset_name.empty() ? name : std::move(subset_name);
    return out;
  }

  bool operator==(const Dataset& o) const {
    return num_classes == o.num_classes && labels == o.labels && features.rows() == o.features.rows() &&
           features.cols() == o.features.cols() && features == o.features;
  }
};

/// Copies the rows `idx` of `ds` into (x, y), reusing their storage.
inline void gather(const Dataset& ds, std::span<const std::size_t> idx, Matrix& x, std::vector<int>& y) {
  x.resize(static_cast<Eigen::Index>(idx.size()), ds.features.cols());
  y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(idx[i]));
    y[i] = ds.labels[idx[i]];
  }
}

inline IndexList iota_indices(std::size_t n) {
  IndexList v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

enum class SyntheticKind { gaussian_mixture, spirals };

inline std::string to_string(SyntheticKind k) {
  return k == SyntheticKind::gaussian_mixture ? "gaussian_mixture" : "spirals";
}

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "gaussian_mixture") return SyntheticKind::gaussian_mixture;
  if (s == "spirals") return SyntheticKind::spirals;
  throw InputError("unknown synthetic dataset kind '" + s + "'");
}

/// Generator settings. Class centres come from `center_seed` (defaults to
/// `seed`), so two specs that share it describe the same generative family;
/// `mean_shift` then displaces every centre by a fixed random direction.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::gaussian_mixture;
  std::size_t n = 10000;
  std::size_t d = 32;
  std::size_t k = 10;
  double label_noise = 0.1;  // fraction of labels replaced by a different class
  std::uint64_t seed = 0;
  double cluster_spread = 1.0;  // std of the class centres (unit within-class noise)
  std::optional<std::uint64_t> center_seed;
  double mean_shift = 0.0;

  void validate() const {
    if (n < 1 || d < 1 || k < 2) throw InputError("synthetic dataset needs n >= 1, d >= 1, k >= 2");
    if (kind == SyntheticKind::spirals && d < 2) throw InputError("spirals need d >= 2");
    if (!(label_noise >= 0.0 && label_noise < 0.5)) throw InputError("label_noise must lie in [0, 0.5)");
    if (!(cluster_spread > 0.0)) throw InputError("cluster_spread must be positive");
    if (!(mean_shift >= 0.0)) throw InputError("mean_shift must be non-negative");
  }
};

inline Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const auto k = static_cast<int>(spec.k);
  const std::uint64_t family = spec.center_seed.value_or(spec.seed);

  Dataset ds;
  ds.num_classes = spec.k;
  ds.name = to_string(spec.kind);
  ds.features.resize(n, d);
  ds.labels.resize(spec.n);

  // Balanced clean labels in random order.
  Rng sample_rng(derive_seed(spec.seed, "samples"));
  for (std::size_t i = 0; i < spec.n; ++i) ds.labels[i] = static_cast<int>(i % spec.k);
  sample_rng.shuffle(ds.labels);

  if (spec.kind == SyntheticKind::gaussian_mixture) {
    Rng center_rng(derive_seed(family, "centers"));
    Matrix centers(k, d);
    for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = spec.cluster_spread * center_rng.normal();
    if (spec.mean_shift > 0.0) {
      Rng shift_rng(derive_seed(family, "shift"));
      for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] += spec.mean_shift * shift_rng.normal();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const int y = ds.labels[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < d; ++j) ds.features(i, j) = centers(y, j) + sample_rng.normal();
    }
  } else {
    // k interleaved arms in the first two coordinates; remaining coordinates are noise.
    constexpr double turns = 1.5;
    constexpr double jitter = 0.05;
    Rng phase_rng(derive_seed(family, "centers"));
    const double phase = 2.0 * std::numbers::pi * phase_rng.uniform();
    for (Eigen::Index i = 0; i < n; ++i) {
      const int y = ds.labels[static_cast<std::size_t>(i)];
      const double t = sample_rng.uniform();
      const double angle = phase + 2.0 * std::numbers::pi * (static_cast<double>(y) / k + turns * t);
      const double r = 0.1 + t;
      ds.features(i, 0) = r * std::cos(angle) + jitter * sample_rng.normal() + spec.mean_shift;
      ds.features(i, 1) = r * std::sin(angle) + jitter * sample_rng.normal();
      for (Eigen::Index j = 2; j < d; ++j) ds.features(i, j) = jitter * sample_rng.normal();
    }
  }

  if (spec.label_noise > 0.0) {
    Rng noise_rng(derive_seed(spec.seed, "label_noise"));
    for (int& y : ds.labels) {
      if (noise_rng.uniform() < spec.label_noise) {
        y = static_cast<int>((static_cast<std::uint64_t>(y) + 1 + noise_rng.index(spec.k - 1)) % spec.k);
      }
    }
  }
  return ds;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads rows of `d` feature columns followed by an integer label.
inline Dataset load_csv(const std::string& path, bool header = false) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t cols = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header && line_no == 1) continue;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(detail::trim(field));
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() < 2) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected feature columns and a label");
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) + " columns, got " +
                       std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[j], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[j].size() || fields[j].empty() || !std::isfinite(v)) {
        throw InputError(path + ":" + std::to_string(line_no) + ": malformed number '" + fields[j] + "' in column " +
                         std::to_string(j + 1));
      }
      values.push_back(v);
    }
    const std::string& lab = fields.back();
    std::size_t used = 0;
    long long y = -1;
    try {
      y = std::stoll(lab, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (lab.empty() || used != lab.size() || y < 0 || y > INT32_MAX) {
      throw InputError(path + ":" + std::to_string(line_no) + ": label '" + lab + "' is not a non-negative integer");
    }
    labels.push_back(static_cast<int>(y));
  }
  if (labels.empty()) throw InputError(path + ": no rows");
  Dataset ds;
  const auto d = static_cast<Eigen::Index>(cols - 1);
  ds.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()), d);
  ds.labels = std::move(labels);
  ds.num_classes = static_cast<std::size_t>(*std::max_element(ds.labels.begin(), ds.labels.end())) + 1;
  ds.name = path;
  return ds;
}

/// Lossless (17 significant digits) CSV, the inverse of load_csv.
inline void write_csv(const Dataset& ds, const std::string& path, bool header = false) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  if (header) {
    for (std::size_t j = 0; j < ds.dim(); ++j) out << 'x' << j << ',';
    out << "label\n";
  }
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << detail::format_double(ds.features(i, j)) << ',';
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw InputError("write to '" + path + "' failed");
}

/// (train, validation) index lists; |val| = round(val_fraction * n).
inline std::pair<IndexList, IndexList> split_indices(std::size_t n, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InputError("val_fraction must lie in (0, 1)");
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) {
    throw InputError("cannot split " + std::to_string(n) + " rows into non-empty train and validation parts");
  }
  IndexList perm = iota_indices(n);
  Rng rng(seed);
  rng.shuffle(perm);
  IndexList val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  IndexList train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(val)};
}

inline std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double val_fraction, std::uint64_t seed) {
  auto [train, val] = split_indices(ds.size(), val_fraction, seed);
  return {ds.subset(train, ds.name + "/train"), ds.subset(val, ds.name + "/val")};
}

/// Disjoint rounds of newly arriving sample indices.
struct StreamSchedule {
  std::vector<IndexList> rounds;
  std::size_t round_size = 0;

  std::size_t full_rounds() const {
    std::size_t r = 0;
    while (r < rounds.size() && rounds[r].size() == round_size) ++r;
    return r;
  }

  /// Union of rounds [0, r].
  IndexList accumulated(std::size_t r) const {
    IndexList out;
    for (std::size_t i = 0; i <= r && i < rounds.size(); ++i) out.insert(out.end(), rounds[i].begin(), rounds[i].end());
    return out;
  }
};

/// A random permutation of [0, train_size) chunked into rounds of k_stream.
inline StreamSchedule make_stream(std::size_t train_size, long long k_stream, std::uint64_t seed) {
  if (k_stream <= 0) throw InputError("stream round size must be positive");
  const auto k = static_cast<std::size_t>(k_stream);
  if (k > train_size) {
    throw InputError("stream round size " + std::to_string(k) + " exceeds training set size " +
                     std::to_string(train_size));
  }
  IndexList perm = iota_indices(train_size);
  Rng rng(seed);
  rng.shuffle(perm);
  StreamSchedule s;
  s.round_size = k;
  for (std::size_t begin = 0; begin < perm.size(); begin += k) {
    const std::size_t end = std::min(perm.size(), begin + k);
    s.rounds.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                          perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return s;
}

/// Shuffled mini-batches for one epoch; the final short batch is kept.
inline std::vector<IndexList> minibatches(std::span<const std::size_t> indices, std::size_t batch_size,
                                          std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  IndexList order(indices.begin(), indices.end());
  Rng rng(derive_seed(seed, "epoch", epoch));
  rng.shuffle(order);
  std::vector<IndexList> batches;
  batches.reserve((order.size() + batch_size - 1) / batch_size);
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

inline std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size) {
  return (n + batch_size - 1) / batch_size;
}

}  // namespace warmstart
