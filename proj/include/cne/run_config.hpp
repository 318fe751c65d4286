#pragma once

#include <string>
#include <vector>

#include "cne/model.hpp"
#include "cne/trainer.hpp"
#include "cne/word_vectors.hpp"

namespace cne {

// Errors from config files or overrides; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fully resolved run settings, parsed from a sectioned key=value file.
// Unknown sections or keys are rejected.
struct RunSettings {
  // [data]
  std::string corpus;
  std::string word_vectors;  // empty: random initialization
  VectorFileFormat word_vectors_format = VectorFileFormat::kAuto;
  int min_count = 5;
  LabelMode labels = LabelMode::kAuto;
  // [model]
  ModelConfig model;
  // [train]
  TrainConfig train;
  // [output]
  std::string output_dir;
};

// Parses the file, then applies "section.key=value" overrides in order.
RunSettings parse_run_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

// The same schema applied to override strings only (used by commands that
// take no config file).
RunSettings default_run_settings();

// Canonical key=value rendering of every setting, for run logs.
std::string render_run_config(const RunSettings& settings);

}  // namespace cne
