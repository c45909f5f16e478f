#include "ipw/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include "ipw/errors.hpp"

namespace ipw {

namespace {

using nlohmann::json;

// Typed, path-aware access to one JSON object. Every key read is recorded so
// finish() can reject unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "required field is missing");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key), "has the wrong type");
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  Reader child(const std::string& key) { return Reader(raw(key), at(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double number(const json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

SpaceParams parse_space(Reader r) {
  SpaceParams p;
  p.image_w = r.get<int>("image_w");
  p.image_h = r.get<int>("image_h");
  p.template_w = r.get<int>("template_w");
  p.template_h = r.get<int>("template_h");
  p.stride = r.get_or("stride", 1);
  p.scale_factor = r.get_or("scale_factor", 1.05);
  p.scale_count = r.get_or("scale_count", 1);
  r.finish();
  return p;
}

RadiusTable parse_table(Reader& parent, const std::string& key) {
  const json& v = parent.raw(key);
  const std::string path = parent.at(key);
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (name == "pedestrian") return pedestrian_radius_table();
    if (name == "face") return face_radius_table();
    throw ConfigError(path, "unknown preset '" + name + "' (pedestrian, face)");
  }
  Reader r(v, path);
  std::vector<RadiusInterval> intervals;
  const json& arr = r.raw("intervals");
  if (!arr.is_array()) throw ConfigError(r.at("intervals"), "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ip = r.at("intervals") + "[" + std::to_string(i) + "]";
    const json& e = arr[i];
    if (!e.is_array() || (e.size() != 2 && e.size() != 3))
      throw ConfigError(ip, "expected [lower, ratio] or [lower, ratio_x, ratio_y]");
    const double lower = number(e[0], ip);
    const double rx = number(e[1], ip);
    const double ry = e.size() == 3 ? number(e[2], ip) : rx;
    intervals.push_back(RadiusInterval{lower, rx, ry});
  }
  const int active = r.get<int>("active_intervals");
  r.finish();
  try {
    return RadiusTable(std::move(intervals), active);
  } catch (const ConfigError& e) {
    throw ConfigError(path, e.what());
  }
}

RegionRules parse_regions(Reader r, double t_l, double t_h) {
  RegionRules rules = pedestrian_rules();
  rules.t_l = t_l;
  rules.t_h = t_h;
  rules.rejection = parse_table(r, "rejection_table");
  if (r.has("accept_ratio")) {
    const json& a = r.raw("accept_ratio");
    if (!a.is_array() || a.size() != 2)
      throw ConfigError(r.at("accept_ratio"), "expected [ratio_x, ratio_y]");
    rules.accept_ratio_x = number(a[0], r.at("accept_ratio"));
    rules.accept_ratio_y = number(a[1], r.at("accept_ratio"));
    if (rules.accept_ratio_x < 0.0 || rules.accept_ratio_y < 0.0)
      throw ConfigError(r.at("accept_ratio"), "ratios must be >= 0");
  }
  if (r.has("propagation")) {
    Reader p = r.child("propagation");
    auto& prop = rules.propagation;
    prop.reject_span = p.get_or("reject_span", prop.reject_span);
    prop.reject_span_minus_interval =
        p.get_or("reject_span_minus_interval", prop.reject_span_minus_interval);
    prop.accept_span = p.get_or("accept_span", prop.accept_span);
    prop.shrink = p.get_or("shrink", prop.shrink);
    p.finish();
    if (prop.reject_span < 0 || prop.accept_span < 0)
      throw ConfigError(r.at("propagation"), "spans must be >= 0");
    if (!(prop.shrink > 0.0 && prop.shrink <= 1.0))
      throw ConfigError(r.at("propagation.shrink"), "must lie in (0, 1]");
  }
  r.finish();
  return rules;
}

ScorerSpec parse_scorer(Reader r) {
  ScorerSpec spec;
  const auto kind = r.get_or<std::string>("kind", "synthetic");
  if (kind == "synthetic") {
    spec.kind = ScorerKind::kSynthetic;
  } else if (kind == "cascade") {
    spec.kind = ScorerKind::kCascade;
    spec.cascade.stages = r.get_or("stages", spec.cascade.stages);
    spec.cascade.background_pass = r.get_or("background_pass", spec.cascade.background_pass);
    spec.cascade.distractor_strength =
        r.get_or("distractor_strength", spec.cascade.distractor_strength);
    spec.cascade.seed = r.get_or("seed", spec.cascade.seed);
    if (spec.cascade.stages < 1) throw ConfigError(r.at("stages"), "must be >= 1");
  } else {
    throw ConfigError(r.at("kind"), "unknown scorer '" + kind + "' (synthetic, cascade)");
  }
  r.finish();
  return spec;
}

SceneParams parse_scene_params(Reader r) {
  SceneParams p;
  p.objects = r.get_or("objects", p.objects);
  p.distractors = r.get_or("distractors", p.distractors);
  if (r.has("object_peak")) {
    const auto v = r.get<std::vector<double>>("object_peak");
    if (v.size() != 2) throw ConfigError(r.at("object_peak"), "expected [min, max]");
    p.object_peak_min = v[0];
    p.object_peak_max = v[1];
  }
  if (r.has("distractor_peak")) {
    const auto v = r.get<std::vector<double>>("distractor_peak");
    if (v.size() != 2) throw ConfigError(r.at("distractor_peak"), "expected [min, max]");
    p.distractor_peak_min = v[0];
    p.distractor_peak_max = v[1];
  }
  p.floor = r.get_or("floor", p.floor);
  p.sharpness = r.get_or("sharpness", p.sharpness);
  p.scale_sharpness = r.get_or("scale_sharpness", p.sharpness);
  p.noise_amplitude = r.get_or("noise_amplitude", p.noise_amplitude);
  p.min_scale = r.get_or("min_scale", p.min_scale);
  p.max_scale = r.get_or("max_scale", p.max_scale);
  p.max_overlap = r.get_or("max_overlap", p.max_overlap);
  p.max_attempts = r.get_or("max_attempts", p.max_attempts);
  r.finish();
  if (p.objects < 0 || p.distractors < 0)
    throw ConfigError(r.at("objects"), "blob counts must be >= 0");
  if (p.object_peak_min > p.object_peak_max || p.distractor_peak_min > p.distractor_peak_max)
    throw ConfigError(r.at("object_peak"), "peak ranges must be [min, max]");
  if (!(p.sharpness > 0.0) || !(p.scale_sharpness > 0.0))
    throw ConfigError(r.at("sharpness"), "must be > 0");
  if (p.noise_amplitude < 0.0) throw ConfigError(r.at("noise_amplitude"), "must be >= 0");
  return p;
}

DetectorConfig parse_detector(Reader r, const ExperimentConfig& cfg,
                              std::optional<double>& budget_fraction) {
  DetectorConfig d;
  const auto algo_name = r.get<std::string>("algorithm");
  const auto algo = parse_algorithm(algo_name);
  if (!algo) throw ConfigError(r.at("algorithm"), "unknown algorithm '" + algo_name + "'");
  d.algorithm = *algo;
  d.name = r.get_or("name", algo_name);
  d.t_l = cfg.t_l;
  d.t_h = cfg.t_h;
  d.gamma = d.algorithm == Algorithm::kMpw ? 0.44 : 0.7;
  d.alpha = r.get_or("alpha", d.alpha);
  d.gamma = r.get_or("gamma", d.gamma);
  if (r.has("budget_fraction")) {
    budget_fraction = r.get<double>("budget_fraction");
    if (!(*budget_fraction > 0.0)) throw ConfigError(r.at("budget_fraction"), "must be > 0");
  }
  d.budget = r.get_or<std::int64_t>("budget", d.budget);
  d.mpw_stages = r.get_or("mpw_stages", d.mpw_stages);
  d.mpw_alpha = r.get_or("mpw_alpha", d.mpw_alpha);
  d.nc_star_fraction = r.get_or("nc_star_fraction", d.nc_star_fraction);
  d.n_max = r.get_or("n_max", d.n_max);
  d.sw_stride = r.get_or("sw_stride", d.sw_stride);
  d.nms_threshold = r.get_or("nms_threshold", d.nms_threshold);
  if (r.has("sigma")) {
    const auto v = r.get<std::vector<double>>("sigma");
    if (v.size() != 3) throw ConfigError(r.at("sigma"), "expected [sigma_x, sigma_y, sigma_s]");
    d.sigma = Sigma{v[0], v[1], v[2]};
  }
  d.regions = cfg.regions;
  r.finish();
  try {
    d.validate();
  } catch (const ConfigError& e) {
    const auto& f = e.field();
    const auto cut = f.find("'.") != std::string::npos ? f.find("'.") + 2 : f.find('.') + 1;
    throw ConfigError(r.at(f.substr(cut)), e.what());
  }
  return d;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  Reader root(doc, "");
  cfg.seed = root.get_or<std::uint64_t>("seed", 0);
  cfg.space = parse_space(root.child("space"));

  if (root.has("thresholds")) {
    Reader t = root.child("thresholds");
    cfg.t_l = t.get<double>("t_l");
    cfg.t_h = t.get<double>("t_h");
    t.finish();
    if (!(cfg.t_l < cfg.t_h)) throw ConfigError("thresholds.t_l", "t_l must be below t_h");
  }

  if (root.has("scorer")) cfg.scorer = parse_scorer(root.child("scorer"));

  {
    Reader s = root.child("scenes");
    if (s.has("file")) {
      const auto file = std::filesystem::path(s.get<std::string>("file"));
      cfg.scene_file = file.is_absolute() ? file : base_dir / file;
    }
    if (s.has("generate")) cfg.scene_params = parse_scene_params(s.child("generate"));
    cfg.scene_count = s.get_or("count", cfg.scene_count);
    s.finish();
    if (cfg.scene_count < 0) throw ConfigError("scenes.count", "must be >= 0");
  }

  if (root.has("regions")) cfg.regions = parse_regions(root.child("regions"), cfg.t_l, cfg.t_h);

  {
    const json& arr = root.raw("detectors");
    if (!arr.is_array() || arr.empty())
      throw ConfigError("detectors", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      std::optional<double> fraction;
      DetectorConfig d =
          parse_detector(Reader(arr[i], "detectors[" + std::to_string(i) + "]"), cfg, fraction);
      if (!names.insert(d.name).second)
        throw ConfigError("detectors[" + std::to_string(i) + "].name",
                          "duplicate detector name '" + d.name + "'");
      cfg.detectors.push_back(std::move(d));
      cfg.detector_budget_fractions.push_back(fraction);
    }
  }

  if (root.has("experiment")) {
    Reader e = root.child("experiment");
    cfg.trials = e.get_or("trials", cfg.trials);
    cfg.match_threshold = e.get_or("match_threshold", cfg.match_threshold);
    cfg.budgets = e.get_or("budgets", cfg.budgets);
    cfg.budget_fractions = e.get_or("budget_fractions", cfg.budget_fractions);
    cfg.sweep_thresholds = e.get_or("sweep_thresholds", cfg.sweep_thresholds);
    if (e.has("cost")) {
      Reader c = e.child("cost");
      cfg.cost.t_w = c.get_or("t_w", cfg.cost.t_w);
      cfg.cost.t_f = c.get_or("t_f", cfg.cost.t_f);
      cfg.cost.t_c = c.get_or("t_c", cfg.cost.t_c);
      c.finish();
      if (cfg.cost.t_w < 0.0 || cfg.cost.t_f < 0.0 || cfg.cost.t_c < 0.0)
        throw ConfigError("experiment.cost", "costs must be >= 0");
    }
    e.finish();
    if (cfg.trials < 1) throw ConfigError("experiment.trials", "must be >= 1");
    if (!(cfg.match_threshold > 0.0 && cfg.match_threshold <= 1.0))
      throw ConfigError("experiment.match_threshold", "must lie in (0, 1]");
    for (std::size_t i = 0; i < cfg.budgets.size(); ++i)
      if (cfg.budgets[i] < 1)
        throw ConfigError("experiment.budgets[" + std::to_string(i) + "]", "must be >= 1");
    for (std::size_t i = 0; i < cfg.budget_fractions.size(); ++i)
      if (!(cfg.budget_fractions[i] > 0.0))
        throw ConfigError("experiment.budget_fractions[" + std::to_string(i) + "]",
                          "must be > 0");
  }
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

namespace {

void check_scene(const SyntheticScene& s, std::size_t i, const ExperimentConfig& cfg) {
  const std::string p = "scenes[" + std::to_string(i) + "]";
  if (cfg.scorer.kind != ScorerKind::kSynthetic) return;
  for (const Blob& o : s.objects)
    if (o.peak < cfg.t_h) throw ConfigError(p + ".objects", "object peak below t_h");
  for (const Blob& d : s.distractors)
    if (d.peak < cfg.t_l || d.peak >= cfg.t_h)
      throw ConfigError(p + ".distractors", "distractor peak outside [t_l, t_h)");
  if (!(s.floor + s.noise_amplitude < cfg.t_l))
    throw ConfigError(p + ".floor", "background (floor + noise) must stay below t_l");
}

}  // namespace

std::vector<SyntheticScene> resolve_scenes(const ExperimentConfig& config,
                                           const SearchSpace& space) {
  std::vector<SyntheticScene> scenes;
  if (config.scene_file) {
    scenes = load_scenes(*config.scene_file);
  } else {
    scenes = generate_scenes(config.scene_params, space, config.seed, config.scene_count);
  }
  for (std::size_t i = 0; i < scenes.size(); ++i) check_scene(scenes[i], i, config);
  return scenes;
}

std::vector<std::int64_t> resolve_budgets(const ExperimentConfig& config,
                                          const SearchSpace& space) {
  std::vector<std::int64_t> out = config.budgets;
  for (double f : config.budget_fractions)
    out.push_back(std::max<std::int64_t>(
        1, std::llround(f * static_cast<double>(space.size()))));
  return out;
}

void validate_config(const ExperimentConfig& config) {
  const SearchSpace space(config.space);
  if (space.size() == 0) throw ConfigError("space", "the search space holds no windows");
  for (std::size_t i = 0; i < config.detectors.size(); ++i) {
    DetectorConfig d = config.detectors[i];
    if (config.detector_budget_fractions[i])
      d.budget = std::max<std::int64_t>(
          1, std::llround(*config.detector_budget_fractions[i] * static_cast<double>(space.size())));
    try {
      d.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("detectors[" + std::to_string(i) + "]", e.what());
    }
  }
  for (std::int64_t b : resolve_budgets(config, space))
    for (std::size_t i = 0; i < config.detectors.size(); ++i)
      if (config.detectors[i].algorithm == Algorithm::kMpw && b < config.detectors[i].mpw_stages)
        throw ConfigError("experiment.budgets", "budget below the MPW stage count");
}

ExperimentPlan make_plan(const ExperimentConfig& config) {
  validate_config(config);
  ExperimentPlan plan{SearchSpace(config.space), config.detectors, {}, config.scorer,
                      config.trials, config.match_threshold, config.cost, config.seed, false};
  for (std::size_t i = 0; i < plan.detectors.size(); ++i)
    if (config.detector_budget_fractions[i])
      plan.detectors[i].budget = std::max<std::int64_t>(
          1, std::llround(*config.detector_budget_fractions[i] *
                          static_cast<double>(plan.space.size())));
  plan.scenes = resolve_scenes(config, plan.space);
  return plan;
}

}  // namespace ipw
