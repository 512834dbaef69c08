#include <omp.h>

#include <CLI11.hpp>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "scopeloc/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"scopeloc: assertion-scope localization with prior boxes and non-max suppression"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "Config file (key = value per line)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed key");
  app.add_option("--out", out_dir, "Override the out_dir key");

  using Command = std::function<int(const scopeloc::RunConfig&, std::ostream&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"synth", {"Generate a synthetic BRAT corpus, embeddings and split manifest", scopeloc::cmd_synth}},
      {"train", {"Train a model and write its checkpoint and loss log", scopeloc::cmd_train}},
      {"predict", {"Decode spans for a corpus split into a JSONL file", scopeloc::cmd_predict}},
      {"eval", {"Score a prediction file against the gold corpus", scopeloc::cmd_eval}},
      {"gradcheck", {"Finite-difference check of the full model gradient", scopeloc::cmd_gradcheck}},
      {"sweep-gamma", {"Macro-F1 over a grid of decoding thresholds", scopeloc::cmd_sweep_gamma}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    // Global flags are also accepted after the subcommand name.
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    scopeloc::RunConfig config;
    if (!config_path.empty()) scopeloc::apply_config_file(config, config_path);
    scopeloc::apply_environment(config, scopeloc::process_environment());
    if (*seed_opt) config.seed = seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (config.threads > 0) omp_set_num_threads(config.threads);

    for (const auto& [name, entry] : commands) {
      if (app.got_subcommand(name)) return entry.second(config, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "scopeloc: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
