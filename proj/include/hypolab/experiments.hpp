#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hypolab/config.hpp"

namespace hypolab {

// Files written by one run, each with the FNV-1a hash of its bytes, plus the
// manifest that records the effective configuration, the RNG algorithm name,
// and those hashes. Identical configuration ⇒ byte-identical files.
struct RunArtifacts {
  std::string out_dir;
  std::vector<std::pair<std::string, std::uint64_t>> files;  // (path, content hash)
  std::string manifest_path;
};

// Validate the configuration, dispatch to the named experiment, write its CSV
// outputs and manifest under cfg.out. Throws ConfigError / NumericError /
// IoError; nothing is written when validation fails.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

}  // namespace hypolab
