// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sea/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SEA opcode-sequence malware family classifier"};
  app.require_subcommand(1, 1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir;
  const char* commands[][2] = {
      {"extract", "Extract opcode sequences from .asm listings"},
      {"synth", "Write a synthetic planted-motif corpus"},
      {"build-vocab", "Build the opcode vocabulary"},
      {"train-embeddings", "Train CBOW opcode embeddings"},
      {"train", "Train embeddings and classifier with k-fold validation"},
      {"evaluate", "Evaluate a checkpoint on a labeled corpus"},
      {"predict", "Predict class probabilities for opcode files"},
      {"analyze", "Export histogram, scatter, correlation and PCA tables"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration file")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out_dir, "Override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sea::cli::kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  sea::cli::Overrides overrides;
  if (chosen->count("--seed")) overrides.seed = seed;
  if (chosen->count("--out")) overrides.out_dir = out_dir;
  return sea::cli::run_command(chosen->get_name(), config, overrides, std::cout, std::cerr);
}
