#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ipw/detectors.hpp"
#include "ipw/scorer.hpp"
#include "ipw/window_space.hpp"

namespace ipw {

/// Probability that n1 uniform draws over M windows hit a support region of
/// m windows at least once: 1 - (1 - m / M)^n1.
double hit_probability(std::uint64_t total, std::uint64_t support, std::uint64_t draws);

struct Metrics {
  double detection_rate = 0.0;  ///< matched objects / objects
  double fppi = 0.0;            ///< unmatched detections per image
  std::int64_t windows_used = 0;
  double cost = 0.0;
  std::size_t objects = 0;
  std::size_t matched = 0;
  std::size_t false_positives = 0;
};

/// Greedy one-to-one matching of one image's detections against its ground
/// truth: detections in descending score order each take the unmatched
/// object of highest overlap, provided the overlap reaches match_threshold.
/// A scene without objects has detection rate 0.
Metrics evaluate(std::span<const Detection> detections, std::span<const Box> ground_truth,
                 double match_threshold);

/// Abstract time units of t = t_w + N * t_f + N * t_c.
struct CostModel {
  double t_w = 0.0;
  double t_f = 1.0;
  /// Per-window classification cost; for cascade traces, per evaluated stage.
  double t_c = 1.0;
};

double cost_estimate(const RunTrace& trace, const CostModel& model);

/// Scene generator parameters. Blob sizes are template * scale_factor^s for an
/// integer pyramid level s drawn from [min_scale, max_scale]; centers are
/// continuous and keep the blob inside the image.
struct SceneParams {
  int objects = 1;
  int distractors = 2;
  double object_peak_min = 1.0;
  double object_peak_max = 2.0;
  double distractor_peak_min = -1.5;
  double distractor_peak_max = -0.5;
  double floor = -5.0;
  double sharpness = 2.0;
  double scale_sharpness = 2.0;
  double noise_amplitude = 0.0;
  double min_scale = 0.0;
  /// Negative means the top pyramid level of the space.
  double max_scale = -1.0;
  /// Maximum pairwise overlap between placed blobs.
  double max_overlap = 0.3;
  int max_attempts = 1000;
};

/// Throws std::runtime_error naming the overlap constraint when a blob cannot
/// be placed within max_attempts.
std::vector<SyntheticScene> generate_scenes(const SceneParams& params,
                                            const SearchSpace& space,
                                            std::uint64_t master_seed, int count);

/// Per-iteration series of a run (index k holds iteration k + 1).
struct Curves {
  std::vector<std::uint64_t> n_rejected;
  std::vector<std::uint64_t> n_accepted;
  std::vector<std::uint64_t> n_unvisited;
  std::vector<std::uint64_t> n_ambiguity;
  std::vector<double> p_uniform;
  std::vector<double> p_gaussian;
  /// Cumulative draws from each branch.
  std::vector<std::int64_t> n_from_uniform;
  std::vector<std::int64_t> n_from_gaussian;

  std::size_t size() const { return n_rejected.size(); }
};

Curves extract_curves(const RunTrace& trace);

enum class ScorerKind : std::uint8_t { kSynthetic, kCascade };

struct ScorerSpec {
  ScorerKind kind = ScorerKind::kSynthetic;
  CascadeProfile cascade;
};

/// Cascade scorers get a per-scene hash seed derived from `scene_seed`.
std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec, const SyntheticScene& scene,
                                    std::uint64_t scene_seed);

/// One detector run against one scene.
struct RunJob {
  std::size_t detector = 0;  ///< index into the detector list
  std::size_t scene = 0;
  int trial = 0;
  std::int64_t budget = 0;
};

struct RunOutcome {
  RunJob job;
  std::string detector_name;
  Algorithm algorithm = Algorithm::kSipw;
  std::uint64_t seed = 0;
  bool complete = false;
  std::uint64_t n_rejected = 0;
  std::uint64_t n_accepted = 0;
  std::size_t positives = 0;
  DetectionSet detections;
  Metrics metrics;
  double wall_ms = 0.0;
  /// Present when ExperimentPlan::keep_traces is set.
  std::optional<RunTrace> trace;
};

struct ExperimentPlan {
  SearchSpace space;
  std::vector<DetectorConfig> detectors{};
  std::vector<SyntheticScene> scenes{};
  ScorerSpec scorer{};
  int trials = 1;
  double match_threshold = 0.5;
  CostModel cost{};
  std::uint64_t master_seed = 0;
  bool keep_traces = false;
};

/// Seed shared by every detector on (scene, trial), so comparisons are paired.
std::uint64_t trial_seed(std::uint64_t master, std::size_t scene, int trial);

/// One job per (budget, detector, scene, trial), in that nesting order. An
/// empty budget list uses each detector's own budget.
std::vector<RunJob> plan_jobs(const ExperimentPlan& plan, std::span<const std::int64_t> budgets);

RunOutcome run_job(const ExperimentPlan& plan, const RunJob& job);

/// Runs jobs on `threads` workers; results come back in job order.
std::vector<RunOutcome> run_jobs(const ExperimentPlan& plan, std::span<const RunJob> jobs,
                                 int threads);

/// Mean and standard deviation of a sample.
struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

/// Mean detection rate per (detector, budget) cell over all matching outcomes.
double mean_detection_rate(std::span<const RunOutcome> outcomes, std::size_t detector,
                           std::int64_t budget);

}  // namespace ipw
