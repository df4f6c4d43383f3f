#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tlab/config.hpp"

namespace tlab {

struct CriterionInfo {
  int id = 0;
  std::string slug;
  std::string title;
  double budget_seconds = 0.0;  ///< 0: no runtime bound
};

const std::vector<CriterionInfo>& acceptance_criteria();
/// Accepts "3", "c3" or the slug. Throws ConfigError with a suggestion.
const CriterionInfo& find_criterion(std::string_view key);
/// <config_dir>/criterion-<id>.json
std::string criterion_config_path(const CriterionInfo& c, const std::string& config_dir);

struct CriterionResult {
  int id = 0;
  std::string slug;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json data;  ///< measured values; no timings
};

/// Runs the criterion named by cfg.criterion and writes criterion.json to
/// cfg.output_dir.
CriterionResult run_criterion(const ExperimentConfig& cfg, std::ostream* log = nullptr, int jobs = 1);

/// "PASS [3] two-step-terrace (12.3 s): ..."
std::string format_result(const CriterionResult& r);

}  // namespace tlab
