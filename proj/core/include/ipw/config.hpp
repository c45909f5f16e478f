#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ipw/detectors.hpp"
#include "ipw/harness.hpp"
#include "ipw/region_book.hpp"
#include "ipw/window_space.hpp"

namespace ipw {

/// Parsed experiment configuration. The file format is JSON with comments;
/// docs/config_format.md lists every field.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  SpaceParams space;
  double t_l = -2.0;
  double t_h = 0.0;
  ScorerSpec scorer;

  std::optional<std::filesystem::path> scene_file;
  SceneParams scene_params;
  int scene_count = 1;

  std::optional<RegionRules> regions;
  std::vector<DetectorConfig> detectors;
  /// Budget as a fraction of N, per detector; overrides DetectorConfig::budget.
  std::vector<std::optional<double>> detector_budget_fractions;

  int trials = 1;
  double match_threshold = 0.5;
  std::vector<std::int64_t> budgets;
  std::vector<double> budget_fractions;
  std::vector<double> sweep_thresholds;
  CostModel cost;
};

/// Throws ConfigError naming the offending field. Relative scene paths are
/// resolved against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads and parses a config file (comments allowed).
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks that need the search space: budgets, scene invariants
/// against the thresholds, detector contracts. Throws ConfigError.
void validate_config(const ExperimentConfig& config);

/// Scenes from the configured file, or generated from the scene parameters.
std::vector<SyntheticScene> resolve_scenes(const ExperimentConfig& config,
                                           const SearchSpace& space);

/// Absolute budget grid (explicit budgets followed by fractions of N).
std::vector<std::int64_t> resolve_budgets(const ExperimentConfig& config,
                                          const SearchSpace& space);

/// Plan with scenes resolved and detector budgets made absolute.
ExperimentPlan make_plan(const ExperimentConfig& config);

}  // namespace ipw
