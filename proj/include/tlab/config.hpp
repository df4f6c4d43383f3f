#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tlab/evolve.hpp"
#include "tlab/reaction.hpp"

namespace tlab {

/// A named model from the catalog.
struct PresetInfo {
  std::string name;
  std::string family;  ///< make_preset tag
  nlohmann::json params;
  std::string anchor;
  std::vector<int> criteria;
  std::string summary;
};

const std::vector<PresetInfo>& preset_catalog();
/// Throws ConfigError with a nearest-name suggestion when `name` is unknown.
const PresetInfo& find_preset(std::string_view name);
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Builds the model named by a catalog entry or a family tag. Catalog
/// parameters are defaults; `params` overrides them key by key.
ReactionModel resolve_model(const std::string& preset, const nlohmann::json& params);

struct ExperimentConfig {
  std::string source;  ///< file the config came from
  std::string preset;
  nlohmann::json params = nlohmann::json::object();
  double roof = 1.0;
  Domain domain;
  double dt = 0.0;
  double T_final = 120.0;
  double record_every = 0.5;
  double heaviside_a = -5.0;
  std::vector<std::string> observers;
  std::vector<double> x0_list{0.0};
  std::vector<double> a_list;
  double gamma = 0.05;
  int gamma_retries = 2;
  double delta = 1e-2;
  bool verify_steepness = true;
  bool check_isolation = true;
  int n_max = 16;
  double snapshot_every = 0.0;
  int snapshot_stride = 4;
  std::string output_dir;
  int criterion = 0;  ///< acceptance criterion this file reproduces, 0 if none
  nlohmann::json acceptance = nlohmann::json::object();
  nlohmann::json resolved;  ///< the validated config with every default filled in
};

const std::vector<std::string>& known_observers();

/// Applies a dotted-path override such as `time.T_final=200` to a JSON tree.
/// The value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Parses, applies overrides, fills defaults and validates. Parse errors carry
/// line and column; semantic errors are collected and reported together.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<inline>",
                              const std::vector<std::string>& overrides = {});

/// parse_config on a file, then honours TERRACE_LAB_OUT and writes
/// config.resolved.json into the output directory.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                             bool echo = true);

}  // namespace tlab
