#include "ipw/proposal.hpp"

#include <algorithm>
#include <cmath>

#include "ipw/errors.hpp"
#include "ipw/scorer.hpp"

namespace ipw {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(floor(X + 0.5) clamped to [0, n - 1] == k) for X ~ N(mu, sigma^2).
double rounded_mass(int k, int n, double mu, double sigma) {
  if (k < 0 || k >= n) return 0.0;
  if (n == 1) return 1.0;
  const double lo = k == 0 ? -INFINITY : k - 0.5;
  const double hi = k == n - 1 ? INFINITY : k + 0.5;
  if (sigma <= 0.0) return (mu >= lo && mu < hi) ? 1.0 : 0.0;
  const double a = std::isinf(lo) ? 0.0 : normal_cdf((lo - mu) / sigma);
  const double b = std::isinf(hi) ? 1.0 : normal_cdf((hi - mu) / sigma);
  return std::max(0.0, b - a);
}

int round_clamp(double v, int n) {
  const double r = std::floor(v + 0.5);
  return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
}

}  // namespace

MixtureWeights mixture_weights(double alpha, std::uint64_t n_rejected,
                               std::uint64_t n_accepted, std::uint64_t n) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ContractViolation("mixture_weights: alpha outside [0, 1]");
  if (n == 0 || n_rejected + n_accepted > n)
    throw ContractViolation("mixture_weights: visited count exceeds N");
  const double visited = static_cast<double>(n_rejected + n_accepted) / static_cast<double>(n);
  const double pu = alpha * (1.0 - visited);
  return MixtureWeights{pu, 1.0 - pu};
}

Sigma default_sigma(const SearchSpace& space) {
  const auto& p = space.params();
  return Sigma{p.template_w / 8.0, p.template_h / 8.0, 1.0};
}

GaussianMixture::GaussianMixture(std::vector<Window> means, std::vector<double> weights,
                                 Sigma sigma)
    : means_(std::move(means)), weights_(std::move(weights)), sigma_(sigma) {
  if (means_.size() != weights_.size())
    throw ContractViolation("GaussianMixture: means and weights differ in length");
  double acc = 0.0;
  cumulative_.reserve(weights_.size());
  for (double w : weights_) {
    if (w < 0.0) throw ContractViolation("GaussianMixture: negative weight");
    acc += w;
    cumulative_.push_back(acc);
  }
  if (!means_.empty() && !(acc > 0.0))
    throw ContractViolation("GaussianMixture: weights sum to zero");
}

GaussianMixture GaussianMixture::from_particles(std::span<const Particle> particles,
                                                Sigma sigma) {
  if (particles.empty()) return GaussianMixture({}, {}, sigma);
  std::vector<Window> means;
  std::vector<double> responses;
  means.reserve(particles.size());
  responses.reserve(particles.size());
  for (const Particle& p : particles) {
    means.push_back(p.window);
    responses.push_back(p.response);
  }
  return GaussianMixture(std::move(means), normalize_weights(responses), sigma);
}

std::size_t GaussianMixture::pick_component(Rng& rng) const {
  const double u = rng.uniform01() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
}

Window GaussianMixture::draw_from(const SearchSpace& space, std::size_t component,
                                  Rng& rng) const {
  const Window& m = means_[component];
  const Box c = space.to_box(m);
  const double zm = space.zoom(m.s);
  // Three normals are always consumed so the stream layout does not depend
  // on which sigma is zero.
  const double nx = rng.normal();
  const double ny = rng.normal();
  const double ns = rng.normal();
  const int s = round_clamp(m.s + sigma_.s * ns, space.levels());
  const double px = c.cx + sigma_.x * zm * nx;
  const double py = c.cy + sigma_.y * zm * ny;
  return Window{round_clamp(space.grid_x(px, s), space.grid_w(s)),
                round_clamp(space.grid_y(py, s), space.grid_h(s)), s};
}

double GaussianMixture::probability(const SearchSpace& space, std::size_t component,
                                    const Window& w) const {
  const Window& m = means_[component];
  const Box c = space.to_box(m);
  const double stride = space.params().stride;
  const double ps = rounded_mass(w.s, space.levels(), m.s, sigma_.s);
  if (ps == 0.0) return 0.0;
  const double ratio = space.zoom(m.s) / (space.zoom(w.s) * stride);
  const double px = rounded_mass(w.x, space.grid_w(w.s), space.grid_x(c.cx, w.s),
                                 sigma_.x * ratio);
  const double py = rounded_mass(w.y, space.grid_h(w.s), space.grid_y(c.cy, w.s),
                                 sigma_.y * ratio);
  return ps * px * py;
}

Window sample_uniform(const SearchSpace& space, Rng& rng) {
  return space.window_at(rng.below(space.size()));
}

Window sample_gaussian(const GaussianMixture& mixture, const SearchSpace& space, Rng& rng) {
  if (mixture.empty()) throw ContractViolation("sample_gaussian: empty mixture");
  return mixture.draw_from(space, mixture.pick_component(rng), rng);
}

std::optional<Window> sample_dented_uniform(const RegionBook& book, Rng& rng, int n_max) {
  if (n_max < 1) throw ContractViolation("sample_dented_uniform: n_max must be >= 1");
  const SearchSpace& space = book.space();
  for (int n = 0; n < n_max; ++n) {
    const std::uint64_t i = rng.below(space.size());
    if (book.is_free_index(i)) return space.window_at(i);
  }
  return std::nullopt;
}

std::optional<Window> sample_dented_gaussian(const GaussianMixture& mixture,
                                             const RegionBook& book, Rng& rng, int n_max) {
  if (mixture.empty()) throw ContractViolation("sample_dented_gaussian: empty mixture");
  if (n_max < 1) throw ContractViolation("sample_dented_gaussian: n_max must be >= 1");
  const SearchSpace& space = book.space();
  const std::size_t k = mixture.pick_component(rng);
  for (int n = 0; n < n_max; ++n) {
    const Window w = mixture.draw_from(space, k, rng);
    if (book.classify(w) == RegionKind::kFree) return w;
  }
  return std::nullopt;
}

std::optional<Window> sample_free_exact(const RegionBook& book, Rng& rng) {
  const std::uint64_t free = book.free_count();
  if (free == 0) return std::nullopt;
  std::uint64_t target = rng.below(free);
  const std::uint64_t n = book.total();
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!book.is_free_index(i)) continue;
    if (target == 0) return book.space().window_at(i);
    --target;
  }
  return std::nullopt;  // unreachable while counters are consistent
}

double dented_uniform_density(const RegionBook& book, const Window& w) {
  if (book.classify(w) != RegionKind::kFree) return 0.0;
  return 1.0 / static_cast<double>(book.free_count());
}

DentedGaussianDensity::DentedGaussianDensity(const GaussianMixture& mixture,
                                             const RegionBook& book)
    : mixture_(&mixture), book_(&book), scale_(mixture.size(), 0.0) {
  const SearchSpace& space = book.space();
  std::vector<double> z(mixture.size(), 0.0);
  for (std::uint64_t i = 0; i < space.size(); ++i) {
    if (!book.is_free_index(i)) continue;
    const Window w = space.window_at(i);
    for (std::size_t k = 0; k < mixture.size(); ++k) z[k] += mixture.probability(space, k, w);
  }
  double retained = 0.0;
  for (std::size_t k = 0; k < mixture.size(); ++k)
    if (z[k] > 0.0) retained += mixture.weights()[k];
  if (!(retained > 0.0)) return;
  for (std::size_t k = 0; k < mixture.size(); ++k)
    if (z[k] > 0.0) scale_[k] = mixture.weights()[k] / (z[k] * retained);
}

double DentedGaussianDensity::at(const Window& w) const {
  if (book_->classify(w) != RegionKind::kFree) return 0.0;
  double d = 0.0;
  for (std::size_t k = 0; k < scale_.size(); ++k)
    if (scale_[k] > 0.0) d += scale_[k] * mixture_->probability(book_->space(), k, w);
  return d;
}

}  // namespace ipw
