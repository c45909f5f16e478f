#include <doctest.h>

#include <limits>

#include "ipw/errors.hpp"
#include "ipw/region_book.hpp"
#include "ipw/rng.hpp"
#include "support/oracles.hpp"

using namespace ipw;

namespace {

SearchSpace single_scale(int gw, int gh) {
  return SearchSpace(SpaceParams{gw + 7, gh + 7, 8, 8, 1, 1.1, 1});
}

void check_against(const RegionBook& book, const oracle::Book& ref) {
  CHECK(book.rejected_count() == ref.count(RegionKind::kRejected));
  CHECK(book.accepted_count() == ref.count(RegionKind::kAccepted));
  CHECK(book.free_count() == ref.count(RegionKind::kFree));
  CHECK(book.rejected_count() + book.accepted_count() + book.free_count() == book.total());
  for (std::uint64_t i = 0; i < book.total(); ++i)
    if (book.classify_index(i) != ref.cells[i]) {
      FAIL("cell " << i << " disagrees with the full scan");
    }
}

}  // namespace

TEST_CASE("pedestrian radius lookup") {
  const RadiusTable t = pedestrian_radius_table();
  CHECK(t.intervals().size() == 9);
  CHECK(t.active_intervals() == 4);
  const auto r = t.lookup(-5.0, 64, 128);
  REQUIRE(r);
  CHECK(*r == Radius{14, 28});
  CHECK(t.interval_of(-5.0) == 0);
  CHECK(t.interval_of(-4.0) == 1);
  CHECK(t.interval_of(-2.6) == 3);
  CHECK(t.interval_of(-1.0) == 7);
  CHECK_FALSE(t.lookup(-1.0, 64, 128));
  CHECK_FALSE(t.lookup(-2.5, 64, 128));
  CHECK(*t.lookup(-3.9, 64, 128) == Radius{11, 23});
}

TEST_CASE("face radius lookup") {
  const RadiusTable t = face_radius_table();
  CHECK(t.intervals().size() == 10);
  CHECK(t.active_intervals() == 2);
  CHECK(*t.lookup(0.0, 20, 20) == Radius{2, 2});
  CHECK(*t.lookup(0.1, 20, 20) == Radius{1, 1});
  CHECK(*t.lookup(0.1, 24, 24) == Radius{2, 2});
  CHECK_FALSE(t.lookup(0.2, 20, 20));
  CHECK(t.interval_of(0.7) == 7);
  CHECK(t.interval_of(1.0) == 9);
}

TEST_CASE("radius table validation") {
  constexpr double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(RadiusTable({{-inf, .2, .2}, {-1, .1, .1}, {-1, .1, .1}}, 2), ConfigError);
  CHECK_THROWS_AS(RadiusTable({{-inf, .2, .2}, {-1, -.1, .1}}, 1), ConfigError);
  CHECK_THROWS_AS(RadiusTable({{-inf, .1, .1}, {-1, .2, .2}}, 2), ConfigError);
  CHECK_THROWS_AS(RadiusTable({{-inf, .2, .2}}, 2), ConfigError);
  CHECK_NOTHROW(RadiusTable({{-inf, .1, .1}, {-1, .2, .2}}, 1));
  CHECK_NOTHROW(face_radius_table());
}

TEST_CASE("radii shrink as the response grows within the active range") {
  Rng rng(3);
  for (const RadiusTable& t : {pedestrian_radius_table(), face_radius_table()}) {
    const auto& iv = t.intervals();
    const double hi = iv[static_cast<std::size_t>(t.active_intervals())].lower;
    const double lo = iv[1].lower - 2.0;
    for (int i = 0; i < 2000; ++i) {
      double f1 = lo + (hi - lo) * rng.uniform01();
      double f2 = lo + (hi - lo) * rng.uniform01();
      if (f1 > f2) std::swap(f1, f2);
      const double w = 10 + 100 * rng.uniform01();
      const double h = 10 + 200 * rng.uniform01();
      const auto r1 = t.lookup(f1, w, h);
      const auto r2 = t.lookup(f2, w, h);
      REQUIRE(r1);
      REQUIRE(r2);
      CHECK(r1->x >= r2->x);
      CHECK(r1->y >= r2->y);
    }
  }
}

TEST_CASE("rejection rectangle on a single scale") {
  const SearchSpace space = single_scale(30, 30);
  RegionBook book(space);
  CHECK(book.mark_region(Window{10, 10, 0}, Radius{2, 3}, 0, 0.8, RegionKind::kRejected) == 35);
  CHECK(book.rejected_count() == 35);
  CHECK(book.classify(Window{8, 7, 0}) == RegionKind::kRejected);
  CHECK(book.classify(Window{12, 13, 0}) == RegionKind::kRejected);
  CHECK(book.classify(Window{13, 10, 0}) == RegionKind::kFree);
  CHECK(book.classify(Window{10, 14, 0}) == RegionKind::kFree);

  RegionBook corner(space);
  CHECK(corner.mark_region(Window{0, 1, 0}, Radius{2, 3}, 0, 0.8, RegionKind::kRejected) ==
        oracle::region_cells(space, Window{0, 1, 0}, Radius{2, 3}, 0, 0.8).size());
  CHECK(corner.rejected_count() == 3 * 5);
}

TEST_CASE("zero radius marks the window itself") {
  const SearchSpace space = single_scale(5, 5);
  RegionBook book(space);
  CHECK(book.mark_region(Window{2, 2, 0}, Radius{0, 0}, 0, 0.8, RegionKind::kAccepted) == 1);
  CHECK(book.classify(Window{2, 2, 0}) == RegionKind::kAccepted);
}

TEST_CASE("mark_rejection follows the table and the threshold contract") {
  const SearchSpace space(SpaceParams{200, 260, 64, 128, 1, 1.05, 1});
  const RegionRules rules = pedestrian_rules();
  RegionBook book(space);
  const Window w{60, 60, 0};
  CHECK(book.mark_rejection(w, -1.0 - 1.5, rules) == 0);
  CHECK(book.rejected_count() == 0);
  CHECK(book.mark_rejection(w, -5.0, rules) == 29 * 57);
  CHECK_THROWS_AS(book.mark_rejection(w, -2.0, rules), ContractViolation);
  CHECK_THROWS_AS(book.mark_rejection(w, 0.5, rules), ContractViolation);
}

TEST_CASE("acceptance rectangles") {
  const SearchSpace ped(SpaceParams{200, 260, 64, 128, 1, 1.05, 1});
  RegionBook book(ped);
  const RegionRules rules = pedestrian_rules();
  // Radii floor(0.16 * 64) = 10 and floor(0.16 * 128) = 20.
  CHECK(book.mark_acceptance(Window{60, 60, 0}, 0.5, rules) == 21 * 41);
  CHECK(book.mark_acceptance(Window{60, 60, 0}, 0.5, rules) == 0);
  CHECK_THROWS_AS(book.mark_acceptance(Window{60, 60, 0}, -0.1, rules), ContractViolation);

  const SearchSpace face(SpaceParams{100, 100, 24, 24, 1, 1.1, 1});
  RegionBook fb(face);
  const RegionRules fr = face_rules();
  CHECK(fr.accept_ratio_x == 0.1);
  CHECK(fr.accept_ratio_y == 0.1);
  CHECK(fb.mark_acceptance(Window{30, 30, 0}, 1.0, fr) == 5 * 5);
}

TEST_CASE("fresh books are free and marks are visible") {
  const SearchSpace space = single_scale(12, 9);
  RegionBook book(space);
  for (std::uint64_t i = 0; i < space.size(); ++i)
    CHECK(book.classify_index(i) == RegionKind::kFree);
  book.mark_region(Window{3, 3, 0}, Radius{1, 1}, 0, 1.0, RegionKind::kRejected);
  CHECK(book.classify(Window{3, 3, 0}) == RegionKind::kRejected);
}

TEST_CASE("the first mark on a cell wins") {
  const SearchSpace space = single_scale(20, 20);
  RegionBook book(space);
  book.mark_region(Window{5, 5, 0}, Radius{2, 2}, 0, 1.0, RegionKind::kRejected);
  const auto fresh =
      book.mark_region(Window{7, 5, 0}, Radius{2, 2}, 0, 1.0, RegionKind::kAccepted);
  CHECK(fresh == 25 - 15);
  CHECK(book.classify(Window{6, 5, 0}) == RegionKind::kRejected);
  CHECK(book.classify(Window{8, 5, 0}) == RegionKind::kAccepted);
  CHECK(book.rejected_count() == 25);
  CHECK(book.accepted_count() == 10);
}

TEST_CASE("pedestrian propagation reaches 3 - interval levels with 0.8 shrink") {
  const SearchSpace space(SpaceParams{400, 500, 64, 128, 1, 1.05, 12});
  REQUIRE(space.levels() >= 10);
  const RegionRules rules = pedestrian_rules();
  const Window w{40, 50, 5};
  for (double f : {-5.0, -3.8, -3.2, -2.7}) {
    RegionBook book(space);
    const int interval = rules.rejection.interval_of(f);
    const int span = 3 - interval;
    const auto r = *rules.rejection.lookup(f, 64, 128);
    const auto want = oracle::region_cells(space, w, r, span, 0.8);
    CHECK(book.mark_rejection(w, f, rules) == want.size());
    int lo = space.levels(), hi = -1;
    for (auto i : want) {
      CHECK(book.classify_index(i) == RegionKind::kRejected);
      lo = std::min(lo, space.window_at(i).s);
      hi = std::max(hi, space.window_at(i).s);
    }
    CHECK(lo == w.s - span);
    CHECK(hi == w.s + span);
  }
}

TEST_CASE("face propagation reaches one level with half radius") {
  const SearchSpace space(SpaceParams{200, 200, 24, 24, 1, 1.1, 8});
  const RegionRules rules = face_rules();
  const Window w{40, 40, 3};
  RegionBook book(space);
  const auto want = oracle::region_cells(space, w, Radius{2, 2}, 1, 0.5);
  CHECK(book.mark_rejection(w, 0.0, rules) == want.size());
  CHECK(want.size() == 25 + 2 * 9);
}

TEST_CASE("random mark sequences agree with a full-grid scan") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    SpaceParams p;
    p.template_w = 8 + static_cast<int>(rng.below(24));
    p.template_h = 8 + static_cast<int>(rng.below(40));
    p.image_w = p.template_w + 10 + static_cast<int>(rng.below(40));
    p.image_h = p.template_h + 10 + static_cast<int>(rng.below(40));
    p.stride = 1 + static_cast<int>(rng.below(3));
    p.scale_factor = 1.05 + 0.15 * rng.uniform01();
    p.scale_count = 1 + static_cast<int>(rng.below(8));
    const SearchSpace space(p);
    if (space.size() == 0 || space.size() > 10000) continue;
    RegionRules rules = rng.below(2) ? pedestrian_rules() : face_rules();
    rules.propagation.shrink = 0.3 + 0.7 * rng.uniform01();
    RegionBook book(space);
    oracle::Book ref(space.size());
    std::uint64_t prev_r = 0, prev_a = 0;
    for (int step = 0; step < 40; ++step) {
      const Window w = space.window_at(rng.below(space.size()));
      const bool reject = rng.below(3) != 0;
      if (reject) {
        const double f = rules.t_l - 0.01 - 4.0 * rng.uniform01();
        const auto r = rules.rejection.lookup(f, p.template_w, p.template_h);
        int span = rules.propagation.reject_span;
        if (rules.propagation.reject_span_minus_interval)
          span = std::max(0, span - rules.rejection.interval_of(f));
        const auto want = r ? ref.mark(oracle::region_cells(space, w, *r, span,
                                                            rules.propagation.shrink),
                                       RegionKind::kRejected)
                            : 0;
        CHECK(book.mark_rejection(w, f, rules) == want);
      } else {
        const double f = rules.t_h + rng.uniform01();
        const Radius r{static_cast<int>(std::floor(rules.accept_ratio_x * p.template_w + 1e-9)),
                       static_cast<int>(std::floor(rules.accept_ratio_y * p.template_h + 1e-9))};
        const auto want = ref.mark(oracle::region_cells(space, w, r, rules.propagation.accept_span,
                                                        rules.propagation.shrink),
                                   RegionKind::kAccepted);
        CHECK(book.mark_acceptance(w, f, rules) == want);
      }
      CHECK(book.rejected_count() >= prev_r);
      CHECK(book.accepted_count() >= prev_a);
      prev_r = book.rejected_count();
      prev_a = book.accepted_count();
      check_against(book, ref);
    }
  }
}
