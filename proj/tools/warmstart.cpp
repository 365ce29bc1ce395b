#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "warmstart/cli.hpp"
#include "warmstart/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Warm-start and shrink-perturb experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--seed", seeds, "Seed; repeat for several (replaces the config's seed list)");
  run->add_option("--out", out_dir, "Output directory (replaces the config's 'out')");
  run->add_option("--set", overrides, "Override a config key, e.g. --set reinit.lambda=0.3");

  auto* verify = app.add_subcommand("verify", "Run the invariant checks on tiny instances");

  CLI11_PARSE(app, argc, argv);

  if (verify->parsed()) return warmstart::verify(std::cout) == 0 ? 0 : 1;

  nlohmann::json doc;
  try {
    doc = warmstart::read_json_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return warmstart::exit_config;
  }
  if (!seeds.empty()) doc["seeds"] = seeds;
  if (!out_dir.empty()) doc["out"] = out_dir;
  return warmstart::run_document(doc, overrides, std::cerr);
}
