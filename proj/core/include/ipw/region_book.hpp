#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ipw/window_space.hpp"

namespace ipw {

enum class RegionKind : std::uint8_t { kFree, kRejected, kAccepted };

/// One response interval of a rejection radius table. The interval covers
/// [lower, next interval's lower); the last one is unbounded above.
struct RadiusInterval {
  double lower = 0.0;
  double ratio_x = 0.0;  ///< radius / object width
  double ratio_y = 0.0;  ///< radius / object height
};

/// Radius in pixels of the zoomed image.
struct Radius {
  int x = 0;
  int y = 0;

  friend bool operator==(const Radius&, const Radius&) = default;
};

/// Response-dependent rejection radii. Only the first `active_intervals`
/// intervals mark a region; responses falling elsewhere mark nothing.
class RadiusTable {
 public:
  RadiusTable() = default;

  /// Throws ConfigError unless bounds strictly increase and ratios are
  /// nonnegative and nonincreasing across the active intervals.
  RadiusTable(std::vector<RadiusInterval> intervals, int active_intervals);

  /// Interval index containing f. Responses below the first bound belong to
  /// interval 0.
  int interval_of(double f) const;

  /// Radii for response f against an obj_w x obj_h object, floored to whole
  /// pixels, or nullopt if f is outside the active intervals.
  std::optional<Radius> lookup(double f, double obj_w, double obj_h) const;

  const std::vector<RadiusInterval>& intervals() const { return intervals_; }
  int active_intervals() const { return active_; }
  bool empty() const { return intervals_.empty(); }

 private:
  std::vector<RadiusInterval> intervals_;
  int active_ = 0;
};

/// HOG+SVM pedestrian table: nine intervals of width 0.5 from -inf to 0,
/// first four active.
RadiusTable pedestrian_radius_table();

/// Cascade face table over f = j / 10 with square radii, first two active.
RadiusTable face_radius_table();

/// How rejection and acceptance regions extend into neighbouring scales.
///
/// Rejection reaches `reject_span` steps either side; with
/// `reject_span_minus_interval` the reach is reject_span - interval index
/// (clamped at 0). Acceptance reaches `accept_span` steps. At distance d
/// steps the rectangle radii are multiplied by shrink^d.
struct ScalePropagation {
  int reject_span = 3;
  bool reject_span_minus_interval = true;
  int accept_span = 3;
  double shrink = 0.8;
};

struct RegionRules {
  double t_l = -2.0;
  double t_h = 0.0;
  RadiusTable rejection;
  double accept_ratio_x = 0.16;
  double accept_ratio_y = 0.16;
  ScalePropagation propagation;
};

/// Pedestrian (SVM) and face (cascade) rule presets.
RegionRules pedestrian_rules();
RegionRules face_rules();

/// Occupancy record of rejected and accepted windows, one bit per cell per
/// kind. A cell carries at most one mark; the first mark wins.
class RegionBook {
 public:
  explicit RegionBook(SearchSpace space);

  const SearchSpace& space() const { return space_; }

  RegionKind classify(const Window& w) const { return classify_index(space_.index_of(w)); }
  RegionKind classify_index(std::uint64_t index) const;
  bool is_free_index(std::uint64_t index) const {
    return !rejected_.test(index) && !accepted_.test(index);
  }

  std::uint64_t rejected_count() const { return n_rejected_; }
  std::uint64_t accepted_count() const { return n_accepted_; }
  std::uint64_t total() const { return space_.size(); }
  std::uint64_t free_count() const { return total() - n_rejected_ - n_accepted_; }

  /// Marks the region of rejection around w. Throws ContractViolation if
  /// f >= rules.t_l. Returns the number of newly rejected cells.
  std::uint64_t mark_rejection(const Window& w, double f, const RegionRules& rules);

  /// Marks the region of acceptance around w. Throws ContractViolation if
  /// f < rules.t_h. Returns the number of newly accepted cells.
  std::uint64_t mark_acceptance(const Window& w, double f, const RegionRules& rules);

  /// Marks the pixel rectangle of half-size `radius` around w on its own
  /// scale and on up to `span` scales either side, shrinking the radius by
  /// shrink^d at d steps. Every visited rectangle contains at least its
  /// center cell.
  std::uint64_t mark_region(const Window& w, Radius radius, int span, double shrink,
                            RegionKind kind);

 private:
  class Bits {
   public:
    explicit Bits(std::uint64_t n) : words_((n + 63) / 64, 0) {}
    bool test(std::uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::uint64_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

   private:
    std::vector<std::uint64_t> words_;
  };

  SearchSpace space_;
  Bits rejected_;
  Bits accepted_;
  std::uint64_t n_rejected_ = 0;
  std::uint64_t n_accepted_ = 0;
};

}  // namespace ipw
