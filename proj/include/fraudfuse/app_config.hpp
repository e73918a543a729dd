#pragma once

#include <filesystem>
#include <optional>

#include "fraudfuse/experiment.hpp"
#include "fraudfuse/synthgen.hpp"

namespace fraudfuse {

// Parsed run configuration file. A run takes its data either from a CSV plus
// sidecar schema ("dataset" section) or from the synthetic generator
// ("synth" section); the rest configures the experiment pipeline.
struct AppConfig {
  std::optional<std::filesystem::path> dataset_csv;
  std::optional<std::filesystem::path> schema_path;
  std::optional<SynthSpec> synth;
  bool synth_seed_explicit = false;  // noise_seed given in the file
  ExperimentConfig experiment;
};

// Strict JSON parse: unknown keys are configuration errors. Paths are taken
// as written (relative to the working directory).
AppConfig load_app_config(const std::filesystem::path& path);

}  // namespace fraudfuse
