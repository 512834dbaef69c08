#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scopeloc/data.hpp"
#include "scopeloc/decode.hpp"
#include "scopeloc/model.hpp"
#include "scopeloc/pipeline.hpp"

namespace scopeloc {

/// Everything a command needs. Built from defaults, then a config file, then
/// SCOPELOC_<KEY> environment variables, then command-line flags.
struct RunConfig {
  std::filesystem::path out_dir = "scopeloc_out";
  // Empty paths resolve inside out_dir (see resolved()).
  std::filesystem::path corpus_dir;
  std::filesystem::path embeddings;
  std::filesystem::path checkpoint;
  std::filesystem::path predictions;
  std::filesystem::path manifest;

  std::uint64_t seed = 1;
  ModelConfig model;
  TrainOptions train;
  DecodeConfig decode;
  std::vector<double> gamma_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// Relative weights of train/val/test; normalized by resolved().
  std::array<double, 3> split_ratios{500, 60, 60};
  std::string predict_split = "test";
  std::string sweep_split = "val";
  int threads = 0;  // 0 keeps the OpenMP default

  SynthOptions synth;
  ModelGradcheckSetup gradcheck;
  double gradcheck_tolerance = 1e-4;

  /// Copy with empty paths filled in and seed-dependent fields synchronized.
  RunConfig resolved() const;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string description;
};

/// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key from its textual value; throws std::invalid_argument naming the key.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// "key = value" lines; '#' starts a comment; blank lines ignored.
void apply_config_text(RunConfig& config, std::string_view text, const std::string& source);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Applies SCOPELOC_<UPPER_KEY> variables from `env` ("NAME=value" strings).
/// Unknown SCOPELOC_ variables are rejected.
void apply_environment(RunConfig& config, const std::vector<std::string>& env);
std::vector<std::string> process_environment();

/// Current value of every key, in the config file syntax.
void write_config(std::ostream& out, const RunConfig& config);
/// Markdown table of keys, defaults and descriptions.
void write_config_reference(std::ostream& out);

}  // namespace scopeloc
