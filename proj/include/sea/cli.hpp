// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "sea/corpus.hpp"
#include "sea/embedding.hpp"
#include "sea/errors.hpp"
#include "sea/sea_model.hpp"
#include "sea/trainer.hpp"

namespace sea::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitCompatibility = 4,
};

// Bad command line or configuration file.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : Error(line ? what + " (config line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct PathConfig {
  std::filesystem::path asm_dir;
  std::filesystem::path opcodes_dir;
  std::filesystem::path manifest;
  std::filesystem::path vocab;
  std::filesystem::path embedding;
  std::filesystem::path checkpoint;
  std::filesystem::path predict_input;
  std::filesystem::path directives;
};

struct ParserConfig {
  std::size_t workers = 0;  // 0 picks the hardware thread count
  std::int64_t min_count = 1;
};

struct AnalyticsConfig {
  std::size_t top_k = 30;
  std::string scatter_a = "push";
  std::string scatter_b = "pop";
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  PathConfig paths;
  ParserConfig parser;
  SyntheticSpec synth;
  WindowConfig embedding;
  SeaConfig model;
  TrainConfig train;
  AnalyticsConfig analytics;

  // Paths left empty in the file default to files inside out_dir;
  // predict_input defaults to the opcodes directory.
  void finalize();
};

// Grammar, one item per line:
//   # comment           (also '; comment')
//   [section]
//   key = value         (a '#' or ';' after whitespace starts a trailing comment)
// Keys before the first section are global (seed, out_dir). Relative paths
// are resolved against base_dir. Unknown sections or keys are rejected.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

// Each command returns a process exit code; errors are mapped by run_command.
int cmd_extract(const RunConfig& cfg, std::ostream& log);
int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_build_vocab(const RunConfig& cfg, std::ostream& log);
int cmd_train_embeddings(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_analyze(const RunConfig& cfg, std::ostream& log);

bool is_command(std::string_view name);

// Loads the config, applies overrides, dispatches and converts exceptions to
// exit codes: configuration 2, data 3, artifact compatibility 4.
int run_command(std::string_view command, const std::filesystem::path& config_path,
                const Overrides& overrides, std::ostream& out, std::ostream& log);

// All `.opcodes` files of a directory, sorted by file name.
std::vector<OpcodeSequence> load_opcode_dir(const std::filesystem::path& dir);

}  // namespace sea::cli
