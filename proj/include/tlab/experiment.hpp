#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlab/config.hpp"
#include "tlab/evolve.hpp"
#include "tlab/stationary.hpp"
#include "tlab/terrace.hpp"

namespace tlab {

struct ExperimentResult {
  int exit_code = 0;  ///< 0 all verdicts pass, 2 soft verdicts only, 1 hard failure
  std::vector<std::string> hard_failures;
  std::vector<std::string> soft;
  std::vector<std::string> artifacts;  ///< file names relative to the output directory
  nlohmann::json summary;
};

/// Terrace options from the config (first x0, heaviside_a, grid and seeding).
TerraceOptions terrace_options(const ExperimentConfig& cfg);

/// The constant roof state resampled and polished on the config grid.
StationaryState resolve_roof(const ReactionModel& model, const ExperimentConfig& cfg);

/// evolve -> terrace -> cross-checks, with artifacts in cfg.output_dir.
/// Outputs depend only on the config. `log` receives progress lines.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr, int jobs = 1);

/// `t,x,u` rows for snapshots spaced at least `every` apart in time, every
/// `stride`-th node.
void write_snapshots_csv(const std::string& path, const Trajectory& traj, double every, int stride);

/// Prints the preset catalog.
void list_presets(std::ostream& out);

}  // namespace tlab
