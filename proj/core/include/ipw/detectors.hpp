#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipw/proposal.hpp"
#include "ipw/region_book.hpp"
#include "ipw/scorer.hpp"
#include "ipw/window_space.hpp"

namespace ipw {

enum class Algorithm : std::uint8_t { kSlidingWindow, kMpw, kIpw, kSipw };

/// "sw", "mpw", "ipw", "sipw".
std::string to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(const std::string& name);

/// Rejection, acceptance or ambiguity particle window.
enum class ParticleKind : std::uint8_t { kRejection, kAcceptance, kAmbiguity };
enum class DrawSource : std::uint8_t { kUniform, kGaussian };

std::string to_string(ParticleKind k);
std::string to_string(DrawSource s);

ParticleKind classify_response(double f, double t_l, double t_h);

struct DetectorConfig {
  std::string name;
  Algorithm algorithm = Algorithm::kSipw;

  double t_l = -2.0;
  double t_h = 0.0;
  /// Uniform-branch scale in P_u (iPW, siPW).
  double alpha = 0.2;
  /// siPW batch decay; MPW schedule decay.
  double gamma = 0.7;
  /// Particle windows per run (iPW, siPW), or the schedule total (MPW).
  std::int64_t budget = 1000;

  int mpw_stages = 5;
  /// Weight of the new measurement density at each MPW stage; 1 discards the
  /// previous proposal entirely.
  double mpw_alpha = 1.0;

  /// Initial siPW batch size as a fraction of the budget.
  double nc_star_fraction = 0.5;

  /// Attempts per rejection-sampled draw.
  int n_max = 1000;
  int sw_stride = 8;
  double nms_threshold = 0.5;

  /// Required for iPW and siPW.
  std::optional<RegionRules> regions;
  /// Defaults to default_sigma(space).
  std::optional<Sigma> sigma;

  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct TraceRecord {
  std::int64_t iteration = 0;  ///< 1-based
  Window window;
  double response = 0.0;
  ParticleKind kind = ParticleKind::kRejection;
  DrawSource source = DrawSource::kUniform;
  /// Region counters after this iteration's update.
  std::uint64_t n_rejected = 0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_ambiguity = 0;
  /// Uniform-branch probability used for this draw.
  double p_uniform = 1.0;
  int stages_evaluated = 0;
  /// siPW: the Gaussian mixture was rebuilt after this iteration.
  bool rebuild = false;
};

struct RunTrace {
  Algorithm algorithm = Algorithm::kSipw;
  /// Grid the windows refer to (the SW trace uses the SW stride).
  SpaceParams space;
  std::uint64_t space_size = 0;
  std::vector<TraceRecord> records;
  /// W_P: distinct accepted particle windows in order of first acceptance.
  std::vector<Particle> positives;
  /// The free set emptied before the budget was spent.
  bool complete = false;
};

RunTrace run_sw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config);
RunTrace run_mpw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config);
RunTrace run_ipw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config);
RunTrace run_sipw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config);

/// Dispatches on config.algorithm.
RunTrace run_detector(const SearchSpace& space, const Scorer& scorer,
                      const DetectorConfig& config);

/// N_i = round(n1 * exp(-gamma * (i - 1))), i = 1..stages.
std::vector<std::int64_t> mpw_schedule(std::int64_t n1, double gamma, int stages);

/// Schedule whose entries follow the exponential rule and sum exactly to
/// `total`; rounding slack goes to the first stage.
std::vector<std::int64_t> mpw_schedule_for_budget(std::int64_t total, double gamma,
                                                  int stages);

struct Detection {
  Box box;
  double score = 0.0;
};

using DetectionSet = std::vector<Detection>;

/// Greedy non-maximum suppression: highest score first, keep a box iff its
/// overlap with every kept box is below `threshold`. Ties keep input order.
DetectionSet nms(std::vector<Detection> candidates, double threshold);

/// Boxes of W_P scored by their responses.
std::vector<Detection> positives_as_detections(const RunTrace& trace);

/// Boxes of every scored window with response >= threshold, one per distinct
/// window.
std::vector<Detection> scored_as_detections(const RunTrace& trace, double threshold);

}  // namespace ipw
