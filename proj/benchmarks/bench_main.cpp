#include <benchmark/benchmark.h>

#include "ipw/detectors.hpp"
#include "ipw/harness.hpp"
#include "ipw/proposal.hpp"
#include "ipw/region_book.hpp"
#include "ipw/rng.hpp"

using namespace ipw;

namespace {

const SearchSpace& desk_space() {
  static const SearchSpace space(SpaceParams{160, 120, 16, 32, 1, 1.1, 14});
  return space;
}

const SearchSpace& pedestrian_space() {
  static const SearchSpace space(SpaceParams{640, 480, 64, 128, 8, 1.05, 28});
  return space;
}

// Book with the given fraction of cells marked by random rejection regions.
RegionBook marked_book(const SearchSpace& space, double fraction) {
  RegionBook book(space);
  Rng rng(1);
  const RegionRules rules = pedestrian_rules();
  while (static_cast<double>(book.rejected_count()) < fraction * static_cast<double>(space.size()))
    book.mark_rejection(space.window_at(rng.below(space.size())), -5.0, rules);
  return book;
}

void BM_DentedUniform(benchmark::State& state) {
  const RegionBook book = marked_book(desk_space(), state.range(0) / 100.0);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_dented_uniform(book, rng, 1000));
  state.counters["free"] = static_cast<double>(book.free_count());
}
BENCHMARK(BM_DentedUniform)->Arg(0)->Arg(50)->Arg(90)->Arg(99);

void BM_DentedGaussian(benchmark::State& state) {
  const SearchSpace& space = desk_space();
  const RegionBook book = marked_book(space, 0.5);
  Rng rng(3);
  std::vector<Particle> ps;
  for (int i = 0; i < state.range(0); ++i)
    ps.push_back(Particle{space.window_at(rng.below(space.size())), rng.uniform01()});
  const GaussianMixture g = GaussianMixture::from_particles(ps, default_sigma(space));
  for (auto _ : state) benchmark::DoNotOptimize(sample_dented_gaussian(g, book, rng, 1000));
}
BENCHMARK(BM_DentedGaussian)->Arg(1)->Arg(64)->Arg(1024);

void BM_MarkRejection(benchmark::State& state) {
  const SearchSpace& space = state.range(0) ? pedestrian_space() : desk_space();
  const RegionRules rules = pedestrian_rules();
  Rng rng(4);
  RegionBook book(space);
  for (auto _ : state) {
    benchmark::DoNotOptimize(book.mark_rejection(space.window_at(rng.below(space.size())), -5.0, rules));
    if (book.free_count() < space.size() / 2) {
      state.PauseTiming();
      book = RegionBook(space);
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_MarkRejection)->Arg(0)->Arg(1);

void BM_Detector(benchmark::State& state) {
  const SearchSpace& space = desk_space();
  SceneParams p;
  p.scale_sharpness = 0.3;
  p.noise_amplitude = 1.5;
  const auto scenes = generate_scenes(p, space, 5, 1);
  const SyntheticScorer scorer(scenes[0]);
  DetectorConfig c;
  c.algorithm = static_cast<Algorithm>(state.range(0));
  c.budget = 1082;
  c.gamma = c.algorithm == Algorithm::kMpw ? 0.44 : 0.7;
  c.regions = pedestrian_rules();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    c.seed = seed++;
    benchmark::DoNotOptimize(run_detector(space, scorer, c));
  }
  state.SetLabel(to_string(c.algorithm));
}
BENCHMARK(BM_Detector)
    ->Arg(static_cast<int>(Algorithm::kMpw))
    ->Arg(static_cast<int>(Algorithm::kIpw))
    ->Arg(static_cast<int>(Algorithm::kSipw))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
