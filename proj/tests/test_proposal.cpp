#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "ipw/errors.hpp"
#include "ipw/proposal.hpp"
#include "ipw/region_book.hpp"
#include "ipw/rng.hpp"
#include "support/oracles.hpp"

using namespace ipw;

namespace {

// 40 x 25 single-scale grid: 1000 cells.
SearchSpace grid1000() { return SearchSpace(SpaceParams{47, 32, 8, 8, 1, 1.1, 1}); }

void mark_random_cells(RegionBook& book, Rng& rng, std::uint64_t count) {
  const SearchSpace& space = book.space();
  while (book.rejected_count() + book.accepted_count() < count) {
    const Window w = space.window_at(rng.below(space.size()));
    book.mark_region(w, Radius{0, 0}, 0, 1.0,
                     rng.below(2) ? RegionKind::kRejected : RegionKind::kAccepted);
  }
}

}  // namespace

TEST_CASE("engine output matches the standard's mt19937_64 check value") {
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("rng transforms stay in range and are reproducible") {
  Rng a(9), b(9);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const std::uint64_t k = a.below(7);
    CHECK(k == b.below(7));
    REQUIRE(k < 7);
    const double z = a.normal();
    CHECK(z == b.normal());
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("mixture weight examples") {
  auto m = mixture_weights(0.2, 0, 0, 1000);
  CHECK(m.uniform == doctest::Approx(0.2));
  CHECK(m.gaussian == doctest::Approx(0.8));
  m = mixture_weights(0.2, 600, 400, 1000);
  CHECK(m.uniform == doctest::Approx(0.0));
  CHECK(m.gaussian == doctest::Approx(1.0));
  m = mixture_weights(0.2, 300, 200, 1000);
  CHECK(m.uniform == doctest::Approx(0.1));
  CHECK(m.gaussian == doctest::Approx(0.9));
  CHECK_THROWS_AS(mixture_weights(1.5, 0, 0, 10), ContractViolation);
  CHECK_THROWS_AS(mixture_weights(0.2, 8, 3, 10), ContractViolation);
}

TEST_CASE("default sigma is one eighth of the template and one step") {
  const Sigma s = default_sigma(SearchSpace(SpaceParams{640, 480, 64, 128, 8, 1.05, 3}));
  CHECK(s.x == 8.0);
  CHECK(s.y == 16.0);
  CHECK(s.s == 1.0);
}

TEST_CASE("dented uniform on an empty book is uniform over all cells") {
  const SearchSpace space(SpaceParams{17, 14, 8, 8, 1, 1.5, 2});
  const RegionBook book(space);
  Rng rng(1);
  std::vector<double> counts(space.size(), 0.0);
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) counts[space.index_of(*sample_dented_uniform(book, rng, 1))] += 1;
  const std::vector<double> expected(space.size(), static_cast<double>(draws) / space.size());
  CHECK(oracle::chi_square_p(counts, expected) > 0.001);
}

TEST_CASE("dented uniform finds the last free cell") {
  const SearchSpace space = grid1000();
  RegionBook book(space);
  const Window keep{17, 11, 0};
  for (const Window& w : enumerate_all(space))
    if (!(w == keep)) book.mark_region(w, Radius{0, 0}, 0, 1.0, RegionKind::kRejected);
  REQUIRE(book.free_count() == 1);
  Rng rng(2);
  int found = 0;
  for (int i = 0; i < 100; ++i) {
    const auto w = sample_dented_uniform(book, rng, 10 * static_cast<int>(space.size()));
    if (w && *w == keep) ++found;
  }
  CHECK(found == 100);
  const auto exact = sample_free_exact(book, rng);
  REQUIRE(exact);
  CHECK(*exact == keep);
}

TEST_CASE("fully marked books exhaust every sampler") {
  const SearchSpace space = grid1000();
  RegionBook book(space);
  book.mark_region(Window{20, 12, 0}, Radius{40, 40}, 0, 1.0, RegionKind::kAccepted);
  REQUIRE(book.free_count() == 0);
  Rng rng(3);
  CHECK_FALSE(sample_dented_uniform(book, rng, 5000));
  CHECK_FALSE(sample_free_exact(book, rng));
  const GaussianMixture g({Window{3, 3, 0}}, {1.0}, Sigma{2, 2, 1});
  CHECK_FALSE(sample_dented_gaussian(g, book, rng, 500));
}

TEST_CASE("dented uniform never lands on marked cells and is uniform on the rest") {
  const SearchSpace space = grid1000();
  REQUIRE(space.size() == 1000);
  RegionBook book(space);
  Rng rng(4);
  mark_random_cells(book, rng, 300);
  REQUIRE(book.free_count() == 700);
  std::vector<double> counts(space.size(), 0.0);
  const int draws = 100000;
  int marked_hits = 0;
  for (int i = 0; i < draws; ++i) {
    const auto w = sample_dented_uniform(book, rng, 1000);
    REQUIRE(w);
    if (book.classify(*w) != RegionKind::kFree) ++marked_hits;
    counts[space.index_of(*w)] += 1;
  }
  CHECK(marked_hits == 0);
  std::vector<double> observed, expected;
  for (std::uint64_t i = 0; i < space.size(); ++i)
    if (book.is_free_index(i)) {
      observed.push_back(counts[i]);
      expected.push_back(draws / 700.0);
    }
  CHECK(oracle::chi_square_p(observed, expected) > 0.001);
}

TEST_CASE("rejection raises the hit rate of a free target set") {
  const SearchSpace space = grid1000();
  RegionBook book(space);
  book.mark_region(Window{10, 12, 0}, Radius{8, 8}, 0, 1.0, RegionKind::kRejected);
  const std::uint64_t free = book.free_count();
  REQUIRE(free < space.size());
  // Target: a 3 x 3 patch away from the rejected block.
  auto in_target = [](const Window& w) { return w.x >= 30 && w.x <= 32 && w.y >= 5 && w.y <= 7; };
  Rng rng(5);
  const int draws = 200000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += in_target(*sample_dented_uniform(book, rng, 1000));
  const double freq = static_cast<double>(hits) / draws;
  const double want = 9.0 / static_cast<double>(free);
  CHECK(freq == doctest::Approx(want).epsilon(0.05));
  CHECK(freq > 9.0 / 1000.0);
}

TEST_CASE("dented uniform density") {
  const SearchSpace space(SpaceParams{17, 11, 8, 2, 1, 1.1, 1});
  REQUIRE(space.size() == 100);
  RegionBook book(space);
  Rng rng(6);
  mark_random_cells(book, rng, 30);
  double total = 0.0;
  for (const Window& w : enumerate_all(space)) {
    const double d = dented_uniform_density(book, w);
    if (book.classify(w) == RegionKind::kFree)
      CHECK(d == doctest::Approx(1.0 / 70.0));
    else
      CHECK(d == 0.0);
    total += d;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate gaussian returns its mean") {
  const SearchSpace space(SpaceParams{60, 60, 8, 8, 1, 1.1, 4});
  const RegionBook book(space);
  Rng rng(7);
  const Window m{13, 21, 2};
  const GaussianMixture g({m}, {1.0}, Sigma{0, 0, 0});
  for (int i = 0; i < 50; ++i) CHECK(*sample_dented_gaussian(g, book, rng, 10) == m);
  CHECK(g.probability(space, 0, m) == 1.0);
}

TEST_CASE("gaussian with a rejected neighbourhood exhausts") {
  const SearchSpace space(SpaceParams{100, 100, 8, 8, 1, 1.1, 1});
  RegionBook book(space);
  const Window m{46, 46, 0};
  const Sigma sigma{1.0, 1.0, 1.0};
  book.mark_region(m, Radius{6, 6}, 0, 1.0, RegionKind::kRejected);
  const GaussianMixture g({m}, {1.0}, sigma);
  Rng rng(8);
  int exhausted = 0;
  for (int i = 0; i < 1000; ++i) exhausted += !sample_dented_gaussian(g, book, rng, 100);
  CHECK(exhausted >= 990);
}

TEST_CASE("components are chosen in proportion to their weights") {
  const SearchSpace space(SpaceParams{200, 100, 8, 8, 1, 1.1, 1});
  const RegionBook book(space);
  const Window a{20, 40, 0}, b{170, 40, 0};
  const GaussianMixture g({a, b}, {0.9, 0.1}, Sigma{2, 2, 0});
  Rng rng(9);
  int near_a = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) near_a += sample_dented_gaussian(g, book, rng, 10)->x < 100;
  CHECK(static_cast<double>(near_a) / draws == doctest::Approx(0.9).epsilon(0.03 / 0.9));
  CHECK_THROWS_AS(sample_dented_gaussian(GaussianMixture{}, book, rng, 10), ContractViolation);
}

TEST_CASE("component probability is a distribution over the space") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const SearchSpace space(SpaceParams{40 + static_cast<int>(rng.below(30)),
                                        40 + static_cast<int>(rng.below(30)), 8, 12,
                                        1 + static_cast<int>(rng.below(2)), 1.15, 6});
    const Window m = space.window_at(rng.below(space.size()));
    const GaussianMixture g({m}, {1.0},
                            Sigma{0.5 + 4 * rng.uniform01(), 0.5 + 4 * rng.uniform01(),
                                  rng.uniform01() * 2});
    double total = 0.0;
    for (const Window& w : enumerate_all(space)) total += g.probability(space, 0, w);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("dented densities sum to one on random books") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const SearchSpace space(SpaceParams{30 + static_cast<int>(rng.below(40)),
                                        30 + static_cast<int>(rng.below(40)), 8, 8, 1, 1.2, 5});
    RegionBook book(space);
    for (int k = 0; k < 6; ++k)
      book.mark_region(space.window_at(rng.below(space.size())),
                       Radius{static_cast<int>(rng.below(6)), static_cast<int>(rng.below(6))},
                       static_cast<int>(rng.below(3)), 0.8,
                       rng.below(2) ? RegionKind::kRejected : RegionKind::kAccepted);
    std::vector<Particle> particles;
    for (int k = 0; k < 4; ++k)
      particles.push_back(Particle{space.window_at(rng.below(space.size())), rng.uniform01()});
    const GaussianMixture g = GaussianMixture::from_particles(particles, Sigma{2, 2, 1});
    const DentedGaussianDensity dg(g, book);
    double su = 0.0, sg = 0.0;
    for (const Window& w : enumerate_all(space)) {
      su += dented_uniform_density(book, w);
      const double d = dg.at(w);
      if (book.classify(w) != RegionKind::kFree) CHECK(d == 0.0);
      sg += d;
    }
    CHECK(su == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sg == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("dented gaussian samples follow the exact density") {
  const SearchSpace space(SpaceParams{40, 36, 8, 8, 1, 1.2, 3});
  RegionBook book(space);
  book.mark_region(Window{14, 12, 1}, Radius{2, 3}, 1, 0.8, RegionKind::kRejected);
  book.mark_region(Window{20, 20, 0}, Radius{1, 1}, 0, 0.8, RegionKind::kAccepted);
  const GaussianMixture g({Window{12, 12, 1}, Window{22, 18, 0}}, {0.7, 0.3}, Sigma{3, 3, 0.8});
  const DentedGaussianDensity dg(g, book);
  Rng rng(12);
  const int draws = 200000;
  std::map<std::uint64_t, double> counts;
  for (int i = 0; i < draws; ++i) {
    const auto w = sample_dented_gaussian(g, book, rng, 100000);
    REQUIRE(w);
    REQUIRE(book.classify(*w) == RegionKind::kFree);
    counts[space.index_of(*w)] += 1;
  }
  // Pool cells with small expectation into one bin.
  std::vector<double> observed, expected;
  double pooled_o = 0.0, pooled_e = 0.0;
  for (std::uint64_t i = 0; i < space.size(); ++i) {
    const double e = draws * dg.at(space.window_at(i));
    const double o = counts.count(i) ? counts[i] : 0.0;
    if (e >= 10.0) {
      observed.push_back(o);
      expected.push_back(e);
    } else {
      pooled_o += o;
      pooled_e += e;
    }
  }
  observed.push_back(pooled_o);
  expected.push_back(pooled_e);
  CHECK(oracle::chi_square_p(observed, expected) > 0.001);
}

TEST_CASE("samplers are reproducible from the seed") {
  const SearchSpace space(SpaceParams{80, 80, 8, 8, 1, 1.1, 5});
  RegionBook book(space);
  book.mark_region(Window{20, 20, 2}, Radius{5, 5}, 2, 0.8, RegionKind::kRejected);
  const GaussianMixture g({Window{20, 25, 2}, Window{50, 40, 0}}, {0.5, 0.5}, Sigma{3, 3, 1});
  Rng a(42), b(42);
  for (int i = 0; i < 2000; ++i) {
    CHECK(sample_dented_uniform(book, a, 100) == sample_dented_uniform(book, b, 100));
    CHECK(sample_dented_gaussian(g, book, a, 100) == sample_dented_gaussian(g, book, b, 100));
  }
}
