#include "ipw/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "ipw/errors.hpp"
#include "ipw/rng.hpp"

namespace ipw {

namespace {

// exp(-40) is below double resolution next to any realistic peak - floor.
constexpr double kMaxExponent = 40.0;

void require_inside(const SearchSpace& space, const Window& w) {
  if (!space.contains(w))
    throw ContractViolation("window (" + std::to_string(w.x) + ", " +
                            std::to_string(w.y) + ", " + std::to_string(w.s) +
                            ") is outside the search space");
}

}  // namespace

std::vector<Box> SyntheticScene::ground_truth() const {
  std::vector<Box> out;
  out.reserve(objects.size());
  for (const Blob& o : objects) out.push_back(o.box);
  return out;
}

double blob_falloff(const Box& window, const Box& blob, double sharpness,
                    double scale_sharpness, double scale_factor) {
  const double dx = std::abs(window.cx - blob.cx) / blob.w;
  const double dy = std::abs(window.cy - blob.cy) / blob.h;
  const double ds = std::abs(std::log(window.w / blob.w)) / std::log(scale_factor);
  const double e = sharpness * (dx + dy) + scale_sharpness * ds;
  return e >= kMaxExponent ? 0.0 : std::exp(-e);
}

SyntheticScorer::SyntheticScorer(SyntheticScene scene) : scene_(std::move(scene)) {
  if (!(scene_.sharpness > 0.0) || !(scene_.scale_sharpness > 0.0))
    throw ConfigError("scene.sharpness", "sharpness must be > 0");
}

ScoreResult SyntheticScorer::score(const SearchSpace& space, const Window& w) const {
  require_inside(space, w);
  const Box box = space.to_box(w);
  const double factor = space.params().scale_factor;
  const double floor = scene_.floor;

  double response = floor;
  double strongest = 0.0;
  const auto visit = [&](const Blob& b) {
    const double fall =
        blob_falloff(box, b.box, scene_.sharpness, scene_.scale_sharpness, factor);
    if (fall <= 0.0) return;
    strongest = std::max(strongest, fall);
    response = std::max(response, floor + (b.peak - floor) * fall);
  };
  for (const Blob& b : scene_.objects) visit(b);
  for (const Blob& b : scene_.distractors) visit(b);

  if (scene_.noise_amplitude > 0.0) {
    // Keyed on zoomed-image pixels so a window has the same texture at any
    // sampling stride.
    const int stride = space.params().stride;
    const double u =
        to_unit(hash_combine(scene_.noise_seed, w.x * stride, w.y * stride, w.s));
    response += scene_.noise_amplitude * (2.0 * u - 1.0) * (1.0 - strongest);
  }
  return ScoreResult{response, 0};
}

ScoreResult cascade_response(const CascadeProfile& profile,
                             const SyntheticScene& scene,
                             const SearchSpace& space, const Window& w) {
  require_inside(space, w);
  const Box box = space.to_box(w);
  const double factor = space.params().scale_factor;

  double q = 0.0;
  for (const Blob& b : scene.objects)
    q = std::max(q, blob_falloff(box, b.box, scene.sharpness,
                                 scene.scale_sharpness, factor));
  for (const Blob& b : scene.distractors)
    q = std::max(q, profile.distractor_strength *
                        blob_falloff(box, b.box, scene.sharpness,
                                     scene.scale_sharpness, factor));

  const double pass = profile.background_pass + (1.0 - profile.background_pass) * q;
  const int stride = space.params().stride;
  int passed = 0;
  while (passed < profile.stages) {
    const double u = to_unit(
        hash_combine(profile.seed, w.x * stride, w.y * stride, w.s, passed));
    if (u >= pass) break;
    ++passed;
  }
  return ScoreResult{static_cast<double>(passed) / profile.stages,
                     std::min(passed + 1, profile.stages)};
}

CascadeScorer::CascadeScorer(CascadeProfile profile, SyntheticScene scene)
    : profile_(profile), scene_(std::move(scene)) {
  if (profile_.stages < 1) throw ConfigError("scorer.stages", "must be >= 1");
  if (profile_.background_pass < 0.0 || profile_.background_pass >= 1.0)
    throw ConfigError("scorer.background_pass", "must lie in [0, 1)");
  if (profile_.distractor_strength < 0.0 || profile_.distractor_strength > 1.0)
    throw ConfigError("scorer.distractor_strength", "must lie in [0, 1]");
}

ScoreResult CascadeScorer::score(const SearchSpace& space, const Window& w) const {
  return cascade_response(profile_, scene_, space, w);
}

std::vector<double> normalize_weights(std::span<const double> responses) {
  if (responses.empty())
    throw ContractViolation("normalize_weights: empty response list");
  const double lo = *std::min_element(responses.begin(), responses.end());
  std::vector<double> out(responses.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    out[i] = responses[i] - lo;
    sum += out[i];
  }
  if (!(sum > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (double& v : out) v /= sum;
  return out;
}

void to_json(nlohmann::json& j, const Box& b) {
  j = nlohmann::json{{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}};
}

void from_json(const nlohmann::json& j, Box& b) {
  j.at("cx").get_to(b.cx);
  j.at("cy").get_to(b.cy);
  j.at("w").get_to(b.w);
  j.at("h").get_to(b.h);
  if (!(b.w > 0.0) || !(b.h > 0.0))
    throw ConfigError("box", "width and height must be > 0");
}

namespace {

nlohmann::json blobs_to_json(const std::vector<Blob>& blobs) {
  auto arr = nlohmann::json::array();
  for (const Blob& b : blobs) {
    nlohmann::json j = b.box;
    j["peak"] = b.peak;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<Blob> blobs_from_json(const nlohmann::json& arr) {
  std::vector<Blob> out;
  for (const auto& j : arr) out.push_back(Blob{j.get<Box>(), j.at("peak").get<double>()});
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const SyntheticScene& s) {
  j = nlohmann::json{{"image_w", s.image_w},
                     {"image_h", s.image_h},
                     {"floor", s.floor},
                     {"sharpness", s.sharpness},
                     {"scale_sharpness", s.scale_sharpness},
                     {"noise_amplitude", s.noise_amplitude},
                     {"noise_seed", s.noise_seed},
                     {"objects", blobs_to_json(s.objects)},
                     {"distractors", blobs_to_json(s.distractors)}};
}

void from_json(const nlohmann::json& j, SyntheticScene& s) {
  j.at("image_w").get_to(s.image_w);
  j.at("image_h").get_to(s.image_h);
  j.at("floor").get_to(s.floor);
  j.at("sharpness").get_to(s.sharpness);
  s.scale_sharpness = j.value("scale_sharpness", s.sharpness);
  s.noise_amplitude = j.value("noise_amplitude", 0.0);
  s.noise_seed = j.value("noise_seed", std::uint64_t{0});
  s.objects = blobs_from_json(j.value("objects", nlohmann::json::array()));
  s.distractors = blobs_from_json(j.value("distractors", nlohmann::json::array()));
}

std::vector<SyntheticScene> load_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenes.file", "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenes.file", path.string() + ": " + e.what());
  }
  std::vector<SyntheticScene> out;
  try {
    for (const auto& s : j.at("scenes")) out.push_back(s.get<SyntheticScene>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenes.file", path.string() + ": " + e.what());
  }
  return out;
}

void save_scenes(const std::filesystem::path& path,
                 std::span<const SyntheticScene> scenes) {
  nlohmann::json j;
  j["scenes"] = nlohmann::json::array();
  for (const auto& s : scenes) j["scenes"].push_back(s);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ipw
