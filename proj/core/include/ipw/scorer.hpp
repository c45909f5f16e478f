#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "ipw/window_space.hpp"

namespace ipw {

struct ScoreResult {
  double response = 0.0;
  /// Cascade stages evaluated before the window was rejected; 0 for flat
  /// scorers.
  int stages_evaluated = 0;
};

/// Classifier response f(w). Implementations are immutable and safe to call
/// from several threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;

  /// Throws ContractViolation if `w` is not a window of `space`.
  virtual ScoreResult score(const SearchSpace& space, const Window& w) const = 0;

  /// Number of cascade stages, 0 for flat scorers.
  virtual int stage_count() const { return 0; }
};

/// A response peak located on a box.
struct Blob {
  Box box;
  double peak = 0.0;

  friend bool operator==(const Blob&, const Blob&) = default;
};

/// Synthetic response landscape: true objects, object-like distractors and a
/// flat background.
///
/// Each blob contributes floor + (peak - floor) * exp(-e), with
///   e = sharpness * (|dx| / w + |dy| / h) + scale_sharpness * |dsteps|
/// where dx, dy are center offsets from the blob, w, h the blob size, and
/// dsteps the size mismatch measured in pyramid steps. The response is the
/// maximum over blobs, plus optional background texture whose amplitude fades
/// to zero on blob centers.
struct SyntheticScene {
  int image_w = 0;
  int image_h = 0;
  std::vector<Blob> objects;
  std::vector<Blob> distractors;
  double floor = -5.0;
  double sharpness = 2.0;
  double scale_sharpness = 2.0;
  double noise_amplitude = 0.0;
  std::uint64_t noise_seed = 0;

  std::vector<Box> ground_truth() const;

  friend bool operator==(const SyntheticScene&, const SyntheticScene&) = default;
};

/// Falloff exp(-e) of a window box against a blob box, in [0, 1].
double blob_falloff(const Box& window, const Box& blob, double sharpness,
                    double scale_sharpness, double scale_factor);

class SyntheticScorer final : public Scorer {
 public:
  explicit SyntheticScorer(SyntheticScene scene);

  ScoreResult score(const SearchSpace& space, const Window& w) const override;
  const SyntheticScene& scene() const { return scene_; }

 private:
  SyntheticScene scene_;
};

/// Staged-cascade emulator over a synthetic scene.
///
/// Stage k of window w passes with probability
///   background_pass + (1 - background_pass) * q(w)
/// where q is the largest object falloff, or a distractor falloff scaled by
/// distractor_strength. Pass/fail draws are hashed from (seed, window, stage),
/// so the response j / L is a fixed function of the window.
struct CascadeProfile {
  int stages = 10;
  double background_pass = 0.1;
  double distractor_strength = 0.7;
  std::uint64_t seed = 0;
};

ScoreResult cascade_response(const CascadeProfile& profile,
                             const SyntheticScene& scene,
                             const SearchSpace& space, const Window& w);

class CascadeScorer final : public Scorer {
 public:
  CascadeScorer(CascadeProfile profile, SyntheticScene scene);

  ScoreResult score(const SearchSpace& space, const Window& w) const override;
  int stage_count() const override { return profile_.stages; }
  const CascadeProfile& profile() const { return profile_; }
  const SyntheticScene& scene() const { return scene_; }

 private:
  CascadeProfile profile_;
  SyntheticScene scene_;
};

/// Response weights for a Gaussian mixture: shift by the batch minimum, then
/// divide by the sum. If every shifted value is zero the result is uniform.
/// Throws ContractViolation on an empty input.
std::vector<double> normalize_weights(std::span<const double> responses);

// Scene files (JSON). See docs/scene_format.md.
void to_json(nlohmann::json& j, const Box& b);
void from_json(const nlohmann::json& j, Box& b);
void to_json(nlohmann::json& j, const SyntheticScene& s);
void from_json(const nlohmann::json& j, SyntheticScene& s);

std::vector<SyntheticScene> load_scenes(const std::filesystem::path& path);
void save_scenes(const std::filesystem::path& path,
                 std::span<const SyntheticScene> scenes);

}  // namespace ipw
