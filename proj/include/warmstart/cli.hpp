#pragma once

// Command dispatch: config -> protocol runs -> result files, with the exit
// code contract 0 (ok), 1 (config or input error, nothing written),
// 2 (run aborted on divergence, partial records written).

#include <cstdint>
#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "warmstart/config.hpp"
#include "warmstart/error.hpp"
#include "warmstart/harness.hpp"
#include "warmstart/parallel.hpp"
#include "warmstart/results.hpp"

namespace warmstart {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_abort = 2 };

/// Runs every seed of the configured protocol and returns the records,
/// stamped with the resolved config and its hash.
inline std::vector<ExperimentRecord> execute(const RunConfig& rc, std::size_t threads = configured_threads()) {
  const Dataset data = rc.dataset.load();
  std::vector<ExperimentRecord> records;
  if (rc.protocol == Protocol::grid) {
    records = run_grid_sweep(data, rc.grid, rc.seeds, threads);
  } else {
    Dataset target;
    if (rc.protocol == Protocol::pretrain_crossover) target = rc.target_dataset->load();
    auto per_seed = parallel_map(
        rc.seeds.size(),
        [&](std::size_t i) {
          const std::uint64_t seed = rc.seeds[i];
          switch (rc.protocol) {
            case Protocol::two_phase: return run_two_phase(data, rc.two_phase, seed);
            case Protocol::online: return run_online(data, rc.online, seed);
            case Protocol::checkpoint: return run_checkpoint_warmstart(data, rc.checkpoint, seed);
            case Protocol::pretrain_crossover: return run_pretrain_crossover(data, target, rc.crossover, seed);
            case Protocol::iterative_sp: return run_iterative_sp(data, rc.iterative, seed);
            case Protocol::grid: break;
          }
          return std::vector<ExperimentRecord>{};
        },
        threads);
    for (auto& batch : per_seed) {
      for (auto& r : batch) records.push_back(std::move(r));
    }
  }
  for (auto& r : records) {
    r.config = rc.resolved;
    r.config_hash = rc.hash;
  }
  std::stable_sort(records.begin(), records.end(), record_less);
  return records;
}

/// Executes a parsed config and writes results into rc.out_dir.
inline int run(const RunConfig& rc, std::ostream& log) {
  std::vector<ExperimentRecord> records;
  try {
    records = execute(rc);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const InputError& e) {
    log << "error: " << e.what() << '\n';
    return exit_config;
  }
  emit_results(records, rc.out_dir, rc.hash);

  int code = exit_ok;
  for (const auto& r : records) {
    if (!r.abort) continue;
    log << "abort: " << r.protocol << " series " << r.series << " seed " << r.seed << " round " << r.abort->round
        << " epoch " << r.abort->epoch << ": " << r.abort->message << '\n';
    code = exit_abort;
  }
  log << "wrote " << records.size() << " records to " << rc.out_dir << " (config_hash=" << rc.hash << ")\n";
  return code;
}

/// Parses `doc` with overrides applied, then runs it. Config errors exit 1
/// before anything is written.
inline int run_document(const nlohmann::json& doc, const std::vector<std::string>& overrides, std::ostream& log) {
  RunConfig rc;
  try {
    rc = parse_config(doc, overrides);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  }
  return run(rc, log);
}

}  // namespace warmstart
