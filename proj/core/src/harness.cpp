#include "ipw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "ipw/errors.hpp"
#include "ipw/rng.hpp"

namespace ipw {

double hit_probability(std::uint64_t total, std::uint64_t support, std::uint64_t draws) {
  if (support == 0 || support > total || draws == 0)
    throw ContractViolation("hit_probability: need 0 < m <= M and N1 >= 1");
  const double miss = 1.0 - static_cast<double>(support) / static_cast<double>(total);
  if (miss <= 0.0) return 1.0;
  // log1p keeps precision when m / M is tiny.
  return -std::expm1(static_cast<double>(draws) *
                     std::log1p(-static_cast<double>(support) / static_cast<double>(total)));
}

Metrics evaluate(std::span<const Detection> detections, std::span<const Box> ground_truth,
                 double match_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Ties broken by geometry so the result does not depend on input order.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Detection& da = detections[a];
    const Detection& db = detections[b];
    if (da.score != db.score) return da.score > db.score;
    return std::tie(da.box.cx, da.box.cy, da.box.w, da.box.h) <
           std::tie(db.box.cx, db.box.cy, db.box.w, db.box.h);
  });

  std::vector<bool> taken(ground_truth.size(), false);
  Metrics m;
  m.objects = ground_truth.size();
  for (std::size_t i : order) {
    double best = -1.0;
    std::size_t best_j = ground_truth.size();
    for (std::size_t j = 0; j < ground_truth.size(); ++j) {
      if (taken[j]) continue;
      const double o = overlap(detections[i].box, ground_truth[j]);
      if (o >= match_threshold && o > best) {
        best = o;
        best_j = j;
      }
    }
    if (best_j < ground_truth.size()) {
      taken[best_j] = true;
      ++m.matched;
    } else {
      ++m.false_positives;
    }
  }
  m.detection_rate = m.objects == 0 ? 0.0
                                    : static_cast<double>(m.matched) / static_cast<double>(m.objects);
  m.fppi = static_cast<double>(m.false_positives);
  return m;
}

double cost_estimate(const RunTrace& trace, const CostModel& model) {
  double t = model.t_w;
  for (const TraceRecord& r : trace.records) {
    const double stages = r.stages_evaluated > 0 ? r.stages_evaluated : 1.0;
    t += model.t_f + model.t_c * stages;
  }
  return t;
}

std::vector<SyntheticScene> generate_scenes(const SceneParams& params,
                                            const SearchSpace& space,
                                            std::uint64_t master_seed, int count) {
  if (count < 0) throw ContractViolation("generate_scenes: negative count");
  if (params.objects < 0 || params.distractors < 0)
    throw ConfigError("scenes.generate", "blob counts must be >= 0");
  const auto& sp = space.params();
  const double top = space.levels() - 1;
  const double smin = std::clamp(params.min_scale, 0.0, top);
  const double smax = params.max_scale < 0.0 ? top : std::clamp(params.max_scale, smin, top);

  if (std::ceil(smin) > std::floor(smax))
    throw ConfigError("scenes.generate.min_scale", "no integer level in [min_scale, max_scale]");

  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(master_seed, static_cast<std::uint64_t>(k)));
    SyntheticScene scene;
    scene.image_w = sp.image_w;
    scene.image_h = sp.image_h;
    scene.floor = params.floor;
    scene.sharpness = params.sharpness;
    scene.scale_sharpness = params.scale_sharpness;
    scene.noise_amplitude = params.noise_amplitude;
    scene.noise_seed = derive_seed(master_seed, 0x5eedULL + static_cast<std::uint64_t>(k));

    std::vector<Box> placed;
    const auto place = [&](double peak_lo, double peak_hi, const char* what) {
      for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        const double s = std::ceil(smin) + static_cast<double>(rng.below(
                             static_cast<std::uint64_t>(std::floor(smax) - std::ceil(smin)) + 1));
        const double z = std::pow(sp.scale_factor, s);
        const double w = sp.template_w * z;
        const double h = sp.template_h * z;
        const double cx = 0.5 * w + (sp.image_w - w) * rng.uniform01();
        const double cy = 0.5 * h + (sp.image_h - h) * rng.uniform01();
        const double peak = peak_lo + (peak_hi - peak_lo) * rng.uniform01();
        const Box box{cx, cy, w, h};
        const bool clear = std::all_of(placed.begin(), placed.end(), [&](const Box& b) {
          return overlap(box, b) <= params.max_overlap;
        });
        if (!clear) continue;
        placed.push_back(box);
        return Blob{box, peak};
      }
      throw std::runtime_error(std::string("generate_scenes: cannot place ") + what +
                               " with pairwise overlap <= " +
                               std::to_string(params.max_overlap) + " after " +
                               std::to_string(params.max_attempts) + " attempts");
    };
    for (int i = 0; i < params.objects; ++i)
      scene.objects.push_back(place(params.object_peak_min, params.object_peak_max, "object"));
    for (int i = 0; i < params.distractors; ++i)
      scene.distractors.push_back(
          place(params.distractor_peak_min, params.distractor_peak_max, "distractor"));
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

Curves extract_curves(const RunTrace& trace) {
  Curves c;
  const std::size_t n = trace.records.size();
  c.n_rejected.reserve(n);
  c.n_accepted.reserve(n);
  c.n_unvisited.reserve(n);
  c.n_ambiguity.reserve(n);
  c.p_uniform.reserve(n);
  c.p_gaussian.reserve(n);
  c.n_from_uniform.reserve(n);
  c.n_from_gaussian.reserve(n);
  std::int64_t from_u = 0, from_g = 0;
  for (const TraceRecord& r : trace.records) {
    c.n_rejected.push_back(r.n_rejected);
    c.n_accepted.push_back(r.n_accepted);
    c.n_unvisited.push_back(trace.space_size - r.n_rejected - r.n_accepted);
    c.n_ambiguity.push_back(r.n_ambiguity);
    c.p_uniform.push_back(r.p_uniform);
    c.p_gaussian.push_back(1.0 - r.p_uniform);
    (r.source == DrawSource::kUniform ? from_u : from_g) += 1;
    c.n_from_uniform.push_back(from_u);
    c.n_from_gaussian.push_back(from_g);
  }
  return c;
}

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec, const SyntheticScene& scene,
                                    std::uint64_t scene_seed) {
  if (spec.kind == ScorerKind::kCascade) {
    CascadeProfile profile = spec.cascade;
    profile.seed = derive_seed(profile.seed, scene_seed);
    return std::make_unique<CascadeScorer>(profile, scene);
  }
  return std::make_unique<SyntheticScorer>(scene);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t scene, int trial) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(scene)),
                     static_cast<std::uint64_t>(trial));
}

std::vector<RunJob> plan_jobs(const ExperimentPlan& plan, std::span<const std::int64_t> budgets) {
  std::vector<RunJob> jobs;
  const auto add = [&](std::size_t d, std::int64_t budget) {
    for (std::size_t s = 0; s < plan.scenes.size(); ++s)
      for (int t = 0; t < plan.trials; ++t) jobs.push_back(RunJob{d, s, t, budget});
  };
  if (budgets.empty()) {
    for (std::size_t d = 0; d < plan.detectors.size(); ++d) add(d, plan.detectors[d].budget);
  } else {
    for (std::int64_t b : budgets)
      for (std::size_t d = 0; d < plan.detectors.size(); ++d) add(d, b);
  }
  return jobs;
}

RunOutcome run_job(const ExperimentPlan& plan, const RunJob& job) {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticScene& scene = plan.scenes.at(job.scene);
  DetectorConfig config = plan.detectors.at(job.detector);
  config.budget = job.budget;
  config.seed = trial_seed(plan.master_seed, job.scene, job.trial);

  const auto scorer =
      make_scorer(plan.scorer, scene, derive_seed(plan.master_seed, 0xca5cadeULL + job.scene));
  RunTrace trace = run_detector(plan.space, *scorer, config);

  RunOutcome out;
  out.job = job;
  out.detector_name = config.name;
  out.algorithm = config.algorithm;
  out.seed = config.seed;
  out.complete = trace.complete;
  if (!trace.records.empty()) {
    out.n_rejected = trace.records.back().n_rejected;
    out.n_accepted = trace.records.back().n_accepted;
  }
  out.positives = trace.positives.size();
  out.detections = nms(positives_as_detections(trace), config.nms_threshold);
  const auto truth = scene.ground_truth();
  out.metrics = evaluate(out.detections, truth, plan.match_threshold);
  out.metrics.windows_used = static_cast<std::int64_t>(trace.records.size());
  out.metrics.cost = cost_estimate(trace, plan.cost);
  if (plan.keep_traces) out.trace = std::move(trace);
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

std::vector<RunOutcome> run_jobs(const ExperimentPlan& plan, std::span<const RunJob> jobs,
                                 int threads) {
  std::vector<RunOutcome> out(jobs.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = run_job(plan, jobs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size() || failed.load()) return;
        try {
          out[i] = run_job(plan, jobs[i]);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  r.n = values.size();
  if (r.n == 0) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(r.n - 1));
  }
  return r;
}

double mean_detection_rate(std::span<const RunOutcome> outcomes, std::size_t detector,
                           std::int64_t budget) {
  std::vector<double> rates;
  for (const RunOutcome& o : outcomes)
    if (o.job.detector == detector && o.job.budget == budget)
      rates.push_back(o.metrics.detection_rate);
  return mean_std(rates).mean;
}

}  // namespace ipw
