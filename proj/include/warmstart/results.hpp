#pragma once

// Result persistence: records.json (full records), curves.csv (long-format
// curve points), summary.csv (final-round mean/std per series and metric).
// Output bytes depend only on the records and the config hash.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "warmstart/diagnostics.hpp"
#include "warmstart/error.hpp"
#include "warmstart/record.hpp"
#include "warmstart/stats.hpp"

namespace warmstart {

inline void to_json(nlohmann::json& j, const RoundResult& r) {
  j = {{"round", r.round},
       {"x", r.x},
       {"n_train_available", r.n_train_available},
       {"epochs_used", r.epochs_used},
       {"converged", r.converged},
       {"train_accuracy", r.train_accuracy},
       {"train_loss", r.train_loss},
       {"val_accuracy", r.val_accuracy},
       {"val_loss", r.val_loss},
       {"steps", r.steps},
       {"cumulative_steps", r.cumulative_steps},
       {"examples", r.examples},
       {"cumulative_examples", r.cumulative_examples},
       {"optimizer_resets", r.optimizer_resets},
       {"initializer", r.initializer},
       {"diagnostics", r.diagnostics}};
}

inline void from_json(const nlohmann::json& j, RoundResult& r) {
  j.at("round").get_to(r.round);
  j.at("x").get_to(r.x);
  j.at("n_train_available").get_to(r.n_train_available);
  j.at("epochs_used").get_to(r.epochs_used);
  j.at("converged").get_to(r.converged);
  j.at("train_accuracy").get_to(r.train_accuracy);
  j.at("train_loss").get_to(r.train_loss);
  j.at("val_accuracy").get_to(r.val_accuracy);
  j.at("val_loss").get_to(r.val_loss);
  j.at("steps").get_to(r.steps);
  j.at("cumulative_steps").get_to(r.cumulative_steps);
  j.at("examples").get_to(r.examples);
  j.at("cumulative_examples").get_to(r.cumulative_examples);
  j.at("optimizer_resets").get_to(r.optimizer_resets);
  j.at("initializer").get_to(r.initializer);
  j.at("diagnostics").get_to(r.diagnostics);
}

inline void to_json(nlohmann::json& j, const AbortInfo& a) {
  j = {{"round", a.round}, {"epoch", a.epoch}, {"message", a.message}};
  // JSON has no inf/nan; a non-finite norm is written as null.
  if (std::isfinite(a.param_norm)) {
    j["param_norm"] = a.param_norm;
  } else {
    j["param_norm"] = nullptr;
  }
}

inline void from_json(const nlohmann::json& j, AbortInfo& a) {
  j.at("round").get_to(a.round);
  j.at("epoch").get_to(a.epoch);
  j.at("message").get_to(a.message);
  const auto& n = j.at("param_norm");
  a.param_norm = n.is_null() ? std::numeric_limits<double>::quiet_NaN() : n.get<double>();
}

inline void to_json(nlohmann::json& j, const ExperimentRecord& r) {
  j = {{"protocol", r.protocol}, {"series", r.series},           {"seed", r.seed},
       {"cell", r.cell},         {"config_hash", r.config_hash}, {"config", r.config},
       {"rounds", r.rounds}};
  if (r.abort) {
    j["abort"] = *r.abort;
  } else {
    j["abort"] = nullptr;
  }
}

inline void from_json(const nlohmann::json& j, ExperimentRecord& r) {
  j.at("protocol").get_to(r.protocol);
  j.at("series").get_to(r.series);
  j.at("seed").get_to(r.seed);
  j.at("cell").get_to(r.cell);
  j.at("config_hash").get_to(r.config_hash);
  r.config = j.at("config");
  j.at("rounds").get_to(r.rounds);
  if (j.contains("abort") && !j.at("abort").is_null()) {
    r.abort = j.at("abort").get<AbortInfo>();
  } else {
    r.abort.reset();
  }
}

namespace detail {

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Quotes a text field when it holds a comma, quote or newline.
inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

inline std::vector<ExperimentRecord> read_records_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return nlohmann::json::parse(in).get<std::vector<ExperimentRecord>>();
}

inline void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points, const std::string& hash) {
  out << "# config_hash=" << hash << '\n';
  out << "protocol,series,seed,x,metric,value\n";
  for (const auto& p : points) {
    std::string seed;
    switch (p.stat) {
      case CurveStat::point: seed = std::to_string(p.seed.value_or(0)); break;
      case CurveStat::mean: seed = "mean"; break;
      case CurveStat::stddev: seed = "std"; break;
    }
    out << detail::csv_text(p.protocol) << ',' << detail::csv_text(p.series) << ',' << seed << ','
        << detail::csv_number(p.x) << ',' << detail::csv_text(p.metric) << ','
        << detail::csv_number(p.value) << '\n';
  }
}

struct SummaryRow {
  std::string protocol;
  std::string series;
  double x = 0.0;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Final-round value of every metric, aggregated over seeds per series.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  using Key = std::tuple<std::string, std::string, double, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& rec : records) {
    if (rec.rounds.empty()) continue;
    const auto& last = rec.rounds.back();
    for (const auto& [metric, value] : round_metrics(last)) groups[{rec.protocol, rec.series, last.x, metric}].push_back(value);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : groups) {
    const auto& [protocol, series, x, metric] = key;
    rows.push_back({protocol, series, x, metric, values.size(), stats::mean(values), stats::stddev(values)});
  }
  return rows;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, const std::string& hash) {
  out << "# config_hash=" << hash << '\n';
  out << "protocol,series,x,metric,n,mean,std\n";
  for (const auto& r : rows) {
    out << detail::csv_text(r.protocol) << ',' << detail::csv_text(r.series) << ',' << detail::csv_number(r.x) << ','
        << detail::csv_text(r.metric) << ',' << r.n << ','
        << detail::csv_number(r.mean) << ',' << detail::csv_number(r.stddev) << '\n';
  }
}

/// Writes records.json, curves.csv and summary.csv into `outdir`.
inline void emit_results(std::vector<ExperimentRecord> records, const std::filesystem::path& outdir,
                         const std::string& hash) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw InputError("cannot create '" + outdir.string() + "': " + ec.message());
  std::stable_sort(records.begin(), records.end(), record_less);

  {
    auto out = detail::open_output(outdir / "records.json");
    out << nlohmann::json(records).dump(1) << '\n';
  }
  // Grid and crossover runs share one protocol per invocation; group by protocol anyway.
  std::vector<CurvePoint> points;
  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i;
    while (j < records.size() && records[j].protocol == records[i].protocol) ++j;
    auto part = assemble_curves({records.begin() + static_cast<std::ptrdiff_t>(i),
                                 records.begin() + static_cast<std::ptrdiff_t>(j)});
    points.insert(points.end(), part.begin(), part.end());
    i = j;
  }
  {
    auto out = detail::open_output(outdir / "curves.csv");
    write_curves_csv(out, points, hash);
  }
  {
    auto out = detail::open_output(outdir / "summary.csv");
    write_summary_csv(out, summarize(records), hash);
  }
}

}  // namespace warmstart
