#include "ipw/window_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipw/errors.hpp"

namespace ipw {

namespace {

int grid_extent(int image, int templ, int stride) {
  if (image < templ) return 0;
  return (image - templ) / stride + 1;
}

}  // namespace

SearchSpace::SearchSpace(const SpaceParams& params) : params_(params) {
  if (params.image_w <= 0 || params.image_h <= 0)
    throw ConfigError("space.image", "image dimensions must be positive");
  if (params.template_w <= 0 || params.template_h <= 0)
    throw ConfigError("space.template", "template dimensions must be positive");
  if (params.stride < 1) throw ConfigError("space.stride", "stride must be >= 1");
  if (!(params.scale_factor > 1.0))
    throw ConfigError("space.scale_factor", "scale factor must be > 1");
  if (params.scale_count < 1)
    throw ConfigError("space.scale_count", "scale count must be >= 1");

  for (int s = 0; s < params.scale_count; ++s) {
    const double zoom = std::pow(params.scale_factor, s);
    const int zw = static_cast<int>(std::floor(params.image_w / zoom));
    const int zh = static_cast<int>(std::floor(params.image_h / zoom));
    const int gw = grid_extent(zw, params.template_w, params.stride);
    const int gh = grid_extent(zh, params.template_h, params.stride);
    if (gw == 0 || gh == 0) break;  // zoom only shrinks the image further
    levels_.push_back(Level{gw, gh, zoom, total_});
    total_ += static_cast<std::uint64_t>(gw) * static_cast<std::uint64_t>(gh);
  }
}

std::uint64_t SearchSpace::level_size(int s) const {
  return static_cast<std::uint64_t>(levels_[s].grid_w) *
         static_cast<std::uint64_t>(levels_[s].grid_h);
}

bool SearchSpace::contains(const Window& w) const {
  return w.s >= 0 && w.s < levels() && w.x >= 0 && w.x < levels_[w.s].grid_w &&
         w.y >= 0 && w.y < levels_[w.s].grid_h;
}

std::uint64_t SearchSpace::index_of(const Window& w) const {
  const Level& l = levels_[w.s];
  return l.offset + static_cast<std::uint64_t>(w.y) * l.grid_w +
         static_cast<std::uint64_t>(w.x);
}

Window SearchSpace::window_at(std::uint64_t index) const {
  auto it = std::upper_bound(
      levels_.begin(), levels_.end(), index,
      [](std::uint64_t i, const Level& l) { return i < l.offset; });
  const int s = static_cast<int>(std::distance(levels_.begin(), it)) - 1;
  const std::uint64_t local = index - levels_[s].offset;
  const auto gw = static_cast<std::uint64_t>(levels_[s].grid_w);
  return Window{static_cast<int>(local % gw), static_cast<int>(local / gw), s};
}

SearchSpace SearchSpace::with_stride(int stride) const {
  SpaceParams p = params_;
  p.stride = stride;
  return SearchSpace(p);
}

Box SearchSpace::to_box(const Window& w) const {
  const double z = levels_[w.s].zoom;
  const double tw = params_.template_w;
  const double th = params_.template_h;
  return Box{(w.x * params_.stride + 0.5 * tw) * z,
             (w.y * params_.stride + 0.5 * th) * z, tw * z, th * z};
}

double SearchSpace::grid_x(double cx, int s) const {
  return (cx / levels_[s].zoom - 0.5 * params_.template_w) / params_.stride;
}

double SearchSpace::grid_y(double cy, int s) const {
  return (cy / levels_[s].zoom - 0.5 * params_.template_h) / params_.stride;
}

Window SearchSpace::nearest(double cx, double cy, int s) const {
  const Level& l = levels_[s];
  const auto snap = [](double v, int n) {
    const double r = std::floor(v + 0.5);
    return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
  };
  return Window{snap(grid_x(cx, s), l.grid_w), snap(grid_y(cy, s), l.grid_h), s};
}

std::vector<Window> enumerate_all(const SearchSpace& space) {
  std::vector<Window> out;
  out.reserve(space.size());
  for (int s = 0; s < space.levels(); ++s)
    for (int y = 0; y < space.grid_h(s); ++y)
      for (int x = 0; x < space.grid_w(s); ++x) out.push_back(Window{x, y, s});
  return out;
}

double overlap(const Box& a, const Box& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

}  // namespace ipw
