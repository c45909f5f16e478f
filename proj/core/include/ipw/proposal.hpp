#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ipw/region_book.hpp"
#include "ipw/rng.hpp"
#include "ipw/window_space.hpp"

namespace ipw {

/// Branch probabilities of the proposal: P_u for the dented uniform, P_g for
/// the dented Gaussian mixture.
struct MixtureWeights {
  double uniform = 1.0;
  double gaussian = 0.0;
};

/// P_u = alpha * (1 - (n_rejected + n_accepted) / n), P_g = 1 - P_u.
MixtureWeights mixture_weights(double alpha, std::uint64_t n_rejected,
                               std::uint64_t n_accepted, std::uint64_t n);

/// Diagonal Gaussian spread. x and y are in zoomed-image pixels of the mean's
/// scale, s in pyramid steps.
struct Sigma {
  double x = 1.0;
  double y = 1.0;
  double s = 1.0;
};

/// template / 8 in x and y, one pyramid step in scale.
Sigma default_sigma(const SearchSpace& space);

/// A particle window together with its classifier response.
struct Particle {
  Window window;
  double response = 0.0;
};

/// Mixture of Gaussians centred on particle windows.
///
/// A draw picks a component by weight, perturbs the mean's original-image
/// center and its scale index, rounds to the nearest grid cell and clamps to
/// the grid. probability() gives the exact discrete mass of that procedure.
class GaussianMixture {
 public:
  GaussianMixture() = default;
  GaussianMixture(std::vector<Window> means, std::vector<double> weights, Sigma sigma);

  /// Components weighted by normalize_weights() of the particle responses.
  static GaussianMixture from_particles(std::span<const Particle> particles, Sigma sigma);

  bool empty() const { return means_.empty(); }
  std::size_t size() const { return means_.size(); }
  const std::vector<Window>& means() const { return means_; }
  const std::vector<double>& weights() const { return weights_; }
  const Sigma& sigma() const { return sigma_; }

  std::size_t pick_component(Rng& rng) const;
  Window draw_from(const SearchSpace& space, std::size_t component, Rng& rng) const;

  /// Probability that draw_from(component) yields w.
  double probability(const SearchSpace& space, std::size_t component,
                     const Window& w) const;

 private:
  std::vector<Window> means_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  Sigma sigma_;
};

/// Uniform draw over all N windows.
Window sample_uniform(const SearchSpace& space, Rng& rng);

/// Draw from the plain (non-dented) mixture. Requires a non-empty mixture.
Window sample_gaussian(const GaussianMixture& mixture, const SearchSpace& space, Rng& rng);

/// Rejection sampler for the dented uniform: redraws uniformly until the
/// window is free, giving up after n_max attempts.
std::optional<Window> sample_dented_uniform(const RegionBook& book, Rng& rng, int n_max);

/// Rejection sampler for the dented Gaussian mixture. The component is chosen
/// once by weight; its Gaussian is redrawn until the window is free, giving up
/// after n_max attempts. Throws ContractViolation on an empty mixture.
std::optional<Window> sample_dented_gaussian(const GaussianMixture& mixture,
                                             const RegionBook& book, Rng& rng, int n_max);

/// Uniform draw over the free cells by direct enumeration; nullopt when no
/// cell is free. O(N) per call.
std::optional<Window> sample_free_exact(const RegionBook& book, Rng& rng);

/// Dented uniform density: 1 / free_count on free cells, 0 elsewhere.
double dented_uniform_density(const RegionBook& book, const Window& w);

/// Exact density of sample_dented_gaussian (ignoring the n_max cap).
///
/// Each component is renormalized over the free cells; components with no
/// free mass are dropped and the remaining weights rescaled. Construction
/// scans the whole space once per component, so this is meant for checks on
/// small spaces, not for sampling.
class DentedGaussianDensity {
 public:
  DentedGaussianDensity(const GaussianMixture& mixture, const RegionBook& book);
  DentedGaussianDensity(GaussianMixture&&, const RegionBook&) = delete;

  double at(const Window& w) const;

 private:
  const GaussianMixture* mixture_;
  const RegionBook* book_;
  std::vector<double> scale_;  // weight_i / (Z_i * sum of retained weights)
};

}  // namespace ipw
