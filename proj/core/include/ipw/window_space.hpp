#pragma once

#include <compare>
#include <cstdint>
#include <vector>

namespace ipw {

/// A candidate window. `x` and `y` are cell indices in the sampling grid of
/// scale `s`; the cell's top-left pixel in the zoomed image is
/// (x * stride, y * stride).
struct Window {
  int x = 0;
  int y = 0;
  int s = 0;

  friend auto operator<=>(const Window&, const Window&) = default;
};

/// Axis-aligned box in original-image pixels, center-based.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double top() const { return cy - 0.5 * h; }
  double bottom() const { return cy + 0.5 * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct SpaceParams {
  int image_w = 0;
  int image_h = 0;
  int template_w = 0;
  int template_h = 0;
  int stride = 1;
  double scale_factor = 1.05;
  /// Upper bound on pyramid levels; levels whose zoomed image cannot hold the
  /// template are dropped.
  int scale_count = 1;
};

/// The discrete (x, y, s) search space.
///
/// Scale s zooms the image out by scale_factor^s, so the template covers
/// template * scale_factor^s original pixels. Level grids are laid out
/// back to back: scale-major, then row-major within a level. That order is
/// the sliding-window order (small to large, top to bottom, left to right)
/// and defines the linear cell index used by the region book.
class SearchSpace {
 public:
  explicit SearchSpace(const SpaceParams& params);

  const SpaceParams& params() const { return params_; }

  /// Number of non-empty pyramid levels.
  int levels() const { return static_cast<int>(levels_.size()); }
  int grid_w(int s) const { return levels_[s].grid_w; }
  int grid_h(int s) const { return levels_[s].grid_h; }
  double zoom(int s) const { return levels_[s].zoom; }

  /// Total window count N.
  std::uint64_t size() const { return total_; }
  std::uint64_t level_size(int s) const;
  std::uint64_t level_offset(int s) const { return levels_[s].offset; }

  bool contains(const Window& w) const;
  std::uint64_t index_of(const Window& w) const;
  Window window_at(std::uint64_t index) const;

  /// Same image, template and pyramid sampled at a different stride.
  SearchSpace with_stride(int stride) const;

  /// Original-image box covered by a window.
  Box to_box(const Window& w) const;

  /// Window of scale s whose box center is nearest to (cx, cy), clamped to
  /// the level grid. Requires 0 <= s < levels().
  Window nearest(double cx, double cy, int s) const;

  /// Continuous grid coordinate of an original-image point at scale s.
  double grid_x(double cx, int s) const;
  double grid_y(double cy, int s) const;

 private:
  struct Level {
    int grid_w = 0;
    int grid_h = 0;
    double zoom = 1.0;
    std::uint64_t offset = 0;
  };

  SpaceParams params_;
  std::vector<Level> levels_;
  std::uint64_t total_ = 0;
};

/// Every window of the space, in sliding-window order.
std::vector<Window> enumerate_all(const SearchSpace& space);

/// Intersection over union, in [0, 1].
double overlap(const Box& a, const Box& b);

}  // namespace ipw
