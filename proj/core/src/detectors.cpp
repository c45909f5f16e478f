#include "ipw/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ipw/errors.hpp"
#include "ipw/rng.hpp"

namespace ipw {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kSlidingWindow: return "sw";
    case Algorithm::kMpw: return "mpw";
    case Algorithm::kIpw: return "ipw";
    case Algorithm::kSipw: return "sipw";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "sw") return Algorithm::kSlidingWindow;
  if (name == "mpw") return Algorithm::kMpw;
  if (name == "ipw") return Algorithm::kIpw;
  if (name == "sipw") return Algorithm::kSipw;
  return std::nullopt;
}

std::string to_string(ParticleKind k) {
  switch (k) {
    case ParticleKind::kRejection: return "RPW";
    case ParticleKind::kAcceptance: return "APW";
    case ParticleKind::kAmbiguity: return "ABPW";
  }
  return "?";
}

std::string to_string(DrawSource s) {
  return s == DrawSource::kUniform ? "uniform" : "gaussian";
}

ParticleKind classify_response(double f, double t_l, double t_h) {
  if (f < t_l) return ParticleKind::kRejection;
  if (f >= t_h) return ParticleKind::kAcceptance;
  return ParticleKind::kAmbiguity;
}

void DetectorConfig::validate() const {
  const std::string p = name.empty() ? "detector" : "detector '" + name + "'";
  if (!(t_l < t_h)) throw ConfigError(p + ".t_l", "t_l must be below t_h");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError(p + ".alpha", "must lie in [0, 1]");
  if (!(gamma > 0.0)) throw ConfigError(p + ".gamma", "must be > 0");
  if (budget < 1) throw ConfigError(p + ".budget", "must be >= 1");
  if (n_max < 1) throw ConfigError(p + ".n_max", "must be >= 1");
  if (!(nms_threshold > 0.0 && nms_threshold < 1.0))
    throw ConfigError(p + ".nms_threshold", "must lie in (0, 1)");
  switch (algorithm) {
    case Algorithm::kSlidingWindow:
      if (sw_stride < 1) throw ConfigError(p + ".sw_stride", "must be >= 1");
      break;
    case Algorithm::kMpw:
      if (mpw_stages < 1) throw ConfigError(p + ".mpw_stages", "must be >= 1");
      if (!(mpw_alpha > 0.0 && mpw_alpha <= 1.0))
        throw ConfigError(p + ".mpw_alpha", "must lie in (0, 1]");
      if (budget < mpw_stages)
        throw ConfigError(p + ".budget", "must be at least the MPW stage count");
      break;
    case Algorithm::kSipw:
      if (!(nc_star_fraction > 0.0))
        throw ConfigError(p + ".nc_star_fraction", "must be > 0");
      [[fallthrough]];
    case Algorithm::kIpw:
      if (!regions || regions->rejection.empty())
        throw ConfigError(p + ".regions.rejection_table",
                          "a rejection radius table is required for " +
                              to_string(algorithm));
      if (regions->t_l != t_l || regions->t_h != t_h)
        throw ConfigError(p + ".regions", "region thresholds differ from detector thresholds");
      break;
  }
  if (sigma && (sigma->x < 0.0 || sigma->y < 0.0 || sigma->s < 0.0))
    throw ConfigError(p + ".sigma", "components must be >= 0");
}

std::vector<std::int64_t> mpw_schedule(std::int64_t n1, double gamma, int stages) {
  if (n1 < 1 || stages < 1) throw ContractViolation("mpw_schedule: n1 and stages must be >= 1");
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(stages));
  for (int i = 1; i <= stages; ++i)
    out.push_back(std::llround(static_cast<double>(n1) * std::exp(-gamma * (i - 1))));
  return out;
}

std::vector<std::int64_t> mpw_schedule_for_budget(std::int64_t total, double gamma,
                                                  int stages) {
  if (total < stages) throw ContractViolation("mpw_schedule_for_budget: total < stages");
  double mass = 0.0;
  for (int i = 1; i <= stages; ++i) mass += std::exp(-gamma * (i - 1));
  std::vector<std::int64_t> out;
  std::int64_t sum = 0;
  for (int i = 1; i <= stages; ++i) {
    const auto n = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(total) * std::exp(-gamma * (i - 1)) / mass));
    out.push_back(n);
    sum += n;
  }
  out.front() += total - sum;
  return out;
}

namespace {

class TraceBuilder {
 public:
  TraceBuilder(Algorithm a, const SearchSpace& space) {
    trace_.algorithm = a;
    trace_.space = space.params();
    trace_.space_size = space.size();
  }

  void add_positive(const SearchSpace& space, const Window& w, double f) {
    if (seen_.insert(space.index_of(w)).second) trace_.positives.push_back(Particle{w, f});
  }

  RunTrace& trace() { return trace_; }

 private:
  RunTrace trace_;
  std::unordered_set<std::uint64_t> seen_;
};

}  // namespace

RunTrace run_sw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config) {
  config.validate();
  const SearchSpace grid = space.with_stride(config.sw_stride);
  TraceBuilder tb(Algorithm::kSlidingWindow, grid);
  auto& records = tb.trace().records;
  records.reserve(grid.size());
  for (std::uint64_t i = 0; i < grid.size(); ++i) {
    const Window w = grid.window_at(i);
    const ScoreResult r = scorer.score(grid, w);
    TraceRecord rec;
    rec.iteration = static_cast<std::int64_t>(i) + 1;
    rec.window = w;
    rec.response = r.response;
    rec.kind = classify_response(r.response, config.t_l, config.t_h);
    rec.stages_evaluated = r.stages_evaluated;
    records.push_back(rec);
    if (rec.kind == ParticleKind::kAcceptance) tb.add_positive(grid, w, r.response);
  }
  return std::move(tb.trace());
}

RunTrace run_mpw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config) {
  config.validate();
  const auto schedule = mpw_schedule_for_budget(config.budget, config.gamma, config.mpw_stages);
  const Sigma sigma = config.sigma.value_or(default_sigma(space));
  Rng rng(config.seed);
  TraceBuilder tb(Algorithm::kMpw, space);
  auto& records = tb.trace().records;
  records.reserve(static_cast<std::size_t>(config.budget));

  // proposals[k] is the measurement density built from stage k + 1.
  std::vector<GaussianMixture> proposals;
  std::int64_t iteration = 0;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double p_uniform =
        proposals.empty() ? 1.0 : std::pow(1.0 - config.mpw_alpha, proposals.size());
    std::vector<Particle> batch;
    batch.reserve(static_cast<std::size_t>(schedule[stage]));
    for (std::int64_t k = 0; k < schedule[stage]; ++k) {
      // q_i = (1 - a) q_{i-1} + a g_i, unrolled down to the uniform q_0.
      const GaussianMixture* pick = nullptr;
      for (auto level = proposals.size(); level > 0; --level) {
        if (config.mpw_alpha >= 1.0 || rng.uniform01() < config.mpw_alpha) {
          pick = &proposals[level - 1];
          break;
        }
      }
      const Window w = pick ? sample_gaussian(*pick, space, rng) : sample_uniform(space, rng);
      const ScoreResult r = scorer.score(space, w);
      TraceRecord rec;
      rec.iteration = ++iteration;
      rec.window = w;
      rec.response = r.response;
      rec.kind = classify_response(r.response, config.t_l, config.t_h);
      rec.source = pick ? DrawSource::kGaussian : DrawSource::kUniform;
      rec.p_uniform = p_uniform;
      rec.stages_evaluated = r.stages_evaluated;
      records.push_back(rec);
      if (rec.kind == ParticleKind::kAcceptance) tb.add_positive(space, w, r.response);
      batch.push_back(Particle{w, r.response});
    }
    proposals.push_back(GaussianMixture::from_particles(batch, sigma));
  }
  return std::move(tb.trace());
}

namespace {

// Shared loop of the incremental samplers. `Policy` decides the uniform-branch
// probability, which mixture the Gaussian branch uses, and what happens to
// ambiguity windows.
template <typename Policy>
RunTrace run_incremental(Algorithm algorithm, const SearchSpace& space,
                         const Scorer& scorer, const DetectorConfig& config,
                         Policy& policy) {
  const RegionRules& rules = *config.regions;
  RegionBook book(space);
  Rng rng(config.seed);
  TraceBuilder tb(algorithm, space);
  auto& records = tb.trace().records;
  records.reserve(static_cast<std::size_t>(config.budget));

  for (std::int64_t i = 1; i <= config.budget; ++i) {
    const double p_uniform = policy.p_uniform(book);
    const bool gaussian_branch = rng.uniform01() >= p_uniform;

    std::optional<Window> w;
    DrawSource source = DrawSource::kUniform;
    if (gaussian_branch) {
      // An empty mixture (no ambiguity windows yet) falls back to uniform.
      const GaussianMixture& mixture = policy.mixture();
      if (!mixture.empty()) w = sample_dented_gaussian(mixture, book, rng, config.n_max);
      if (w) source = DrawSource::kGaussian;
    }
    if (!w) w = sample_dented_uniform(book, rng, config.n_max);
    if (!w) w = sample_free_exact(book, rng);
    if (!w) {
      tb.trace().complete = true;
      break;
    }

    const ScoreResult r = scorer.score(space, *w);
    const ParticleKind kind = classify_response(r.response, config.t_l, config.t_h);
    switch (kind) {
      case ParticleKind::kRejection:
        book.mark_rejection(*w, r.response, rules);
        break;
      case ParticleKind::kAcceptance:
        book.mark_acceptance(*w, r.response, rules);
        tb.add_positive(space, *w, r.response);
        break;
      case ParticleKind::kAmbiguity:
        policy.add_ambiguity(Particle{*w, r.response});
        break;
    }

    TraceRecord rec;
    rec.iteration = i;
    rec.window = *w;
    rec.response = r.response;
    rec.kind = kind;
    rec.source = source;
    rec.p_uniform = p_uniform;
    rec.stages_evaluated = r.stages_evaluated;
    rec.rebuild = policy.end_iteration();
    rec.n_rejected = book.rejected_count();
    rec.n_accepted = book.accepted_count();
    rec.n_ambiguity = policy.ambiguity_count();
    records.push_back(rec);
  }
  return std::move(tb.trace());
}

// g~ follows every new ambiguity window.
class IncrementalPolicy {
 public:
  IncrementalPolicy(double alpha, Sigma sigma) : alpha_(alpha), sigma_(sigma) {}

  double p_uniform(const RegionBook& book) const {
    return mixture_weights(alpha_, book.rejected_count(), book.accepted_count(), book.total())
        .uniform;
  }

  const GaussianMixture& mixture() {
    if (dirty_) {
      mixture_ = GaussianMixture::from_particles(ambiguity_, sigma_);
      dirty_ = false;
    }
    return mixture_;
  }

  void add_ambiguity(const Particle& p) {
    ambiguity_.push_back(p);
    dirty_ = true;
  }

  bool end_iteration() { return false; }
  std::uint64_t ambiguity_count() const { return ambiguity_.size(); }

 private:
  double alpha_;
  Sigma sigma_;
  std::vector<Particle> ambiguity_;
  GaussianMixture mixture_;
  bool dirty_ = false;
};

// g~ is rebuilt from the batch of ambiguity windows each time the cumulative
// draw count reaches a threshold that decays by exp(-gamma) per rebuild.
// Sampling is purely uniform until the first rebuild.
class SemiIncrementalPolicy {
 public:
  SemiIncrementalPolicy(double alpha, double gamma, double nc_star, Sigma sigma)
      : alpha_(alpha), decay_(std::exp(-gamma)), nc_star_(nc_star), sigma_(sigma) {}

  double p_uniform(const RegionBook& book) const {
    if (!active_) return 1.0;
    return mixture_weights(alpha_, book.rejected_count(), book.accepted_count(), book.total())
        .uniform;
  }

  const GaussianMixture& mixture() const { return mixture_; }

  void add_ambiguity(const Particle& p) { batch_.push_back(p); }

  bool end_iteration() {
    ++count_;
    if (count_ < threshold()) return false;
    active_ = true;
    mixture_ = GaussianMixture::from_particles(batch_, sigma_);
    batch_.clear();
    nc_star_ *= decay_;
    count_ = 0;
    return true;
  }

  std::uint64_t ambiguity_count() const { return batch_.size(); }

 private:
  std::int64_t threshold() const { return std::max<std::int64_t>(1, std::llround(nc_star_)); }

  double alpha_;
  double decay_;
  double nc_star_;
  Sigma sigma_;
  bool active_ = false;
  std::int64_t count_ = 0;
  std::vector<Particle> batch_;
  GaussianMixture mixture_;
};

}  // namespace

RunTrace run_ipw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config) {
  config.validate();
  IncrementalPolicy policy(config.alpha, config.sigma.value_or(default_sigma(space)));
  return run_incremental(Algorithm::kIpw, space, scorer, config, policy);
}

RunTrace run_sipw(const SearchSpace& space, const Scorer& scorer, const DetectorConfig& config) {
  config.validate();
  SemiIncrementalPolicy policy(config.alpha, config.gamma,
                               config.nc_star_fraction * static_cast<double>(config.budget),
                               config.sigma.value_or(default_sigma(space)));
  return run_incremental(Algorithm::kSipw, space, scorer, config, policy);
}

RunTrace run_detector(const SearchSpace& space, const Scorer& scorer,
                      const DetectorConfig& config) {
  switch (config.algorithm) {
    case Algorithm::kSlidingWindow: return run_sw(space, scorer, config);
    case Algorithm::kMpw: return run_mpw(space, scorer, config);
    case Algorithm::kIpw: return run_ipw(space, scorer, config);
    case Algorithm::kSipw: return run_sipw(space, scorer, config);
  }
  throw ContractViolation("run_detector: unknown algorithm");
}

DetectionSet nms(std::vector<Detection> candidates, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ContractViolation("nms: threshold must lie in (0, 1)");
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  DetectionSet kept;
  for (const Detection& c : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return overlap(c.box, k.box) < threshold;
    });
    if (clear) kept.push_back(c);
  }
  return kept;
}

std::vector<Detection> positives_as_detections(const RunTrace& trace) {
  const SearchSpace space(trace.space);
  std::vector<Detection> out;
  out.reserve(trace.positives.size());
  for (const Particle& p : trace.positives) out.push_back(Detection{space.to_box(p.window), p.response});
  return out;
}

std::vector<Detection> scored_as_detections(const RunTrace& trace, double threshold) {
  const SearchSpace space(trace.space);
  std::unordered_set<std::uint64_t> seen;
  std::vector<Detection> out;
  for (const TraceRecord& r : trace.records) {
    if (r.response < threshold) continue;
    if (!seen.insert(space.index_of(r.window)).second) continue;
    out.push_back(Detection{space.to_box(r.window), r.response});
  }
  return out;
}

}  // namespace ipw
