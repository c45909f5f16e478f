#include "ipw/region_book.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ipw/errors.hpp"

namespace ipw {

namespace {

// Guards floor() against products like 0.1 * 20 landing a hair below 2.
constexpr double kFloorSlack = 1e-9;

int floor_pixels(double v) { return static_cast<int>(std::floor(v + kFloorSlack)); }

}  // namespace

RadiusTable::RadiusTable(std::vector<RadiusInterval> intervals, int active_intervals)
    : intervals_(std::move(intervals)), active_(active_intervals) {
  if (intervals_.empty())
    throw ConfigError("rejection_table.intervals", "table has no intervals");
  if (active_ < 0 || active_ > static_cast<int>(intervals_.size()))
    throw ConfigError("rejection_table.active_intervals",
                      "must lie in [0, number of intervals]");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (iv.ratio_x < 0.0 || iv.ratio_y < 0.0)
      throw ConfigError("rejection_table.intervals[" + std::to_string(i) + "]",
                        "ratios must be nonnegative");
    if (i > 0 && !(iv.lower > intervals_[i - 1].lower))
      throw ConfigError("rejection_table.intervals[" + std::to_string(i) + "]",
                        "lower bounds must strictly increase");
    // Monotonicity is only required where the table is used.
    if (i > 0 && static_cast<int>(i) < active_ &&
        (iv.ratio_x > intervals_[i - 1].ratio_x || iv.ratio_y > intervals_[i - 1].ratio_y))
      throw ConfigError("rejection_table.intervals[" + std::to_string(i) + "]",
                        "active ratios must not increase with the response");
  }
}

int RadiusTable::interval_of(double f) const {
  auto it = std::upper_bound(
      intervals_.begin(), intervals_.end(), f,
      [](double v, const RadiusInterval& iv) { return v < iv.lower; });
  if (it == intervals_.begin()) return 0;
  return static_cast<int>(std::distance(intervals_.begin(), it)) - 1;
}

std::optional<Radius> RadiusTable::lookup(double f, double obj_w, double obj_h) const {
  if (intervals_.empty()) return std::nullopt;
  const int n = interval_of(f);
  if (n >= active_) return std::nullopt;
  const auto& iv = intervals_[n];
  return Radius{floor_pixels(iv.ratio_x * obj_w), floor_pixels(iv.ratio_y * obj_h)};
}

RadiusTable pedestrian_radius_table() {
  constexpr double kInf = -std::numeric_limits<double>::infinity();
  const double ratios[] = {0.22, 0.18, 0.16, 0.12, 0.10, 0.06, 0.06, 0.02, 0.02};
  std::vector<RadiusInterval> iv;
  for (int i = 0; i < 9; ++i) {
    const double lower = i == 0 ? kInf : -4.0 + 0.5 * (i - 1);
    iv.push_back(RadiusInterval{lower, ratios[i], ratios[i]});
  }
  return RadiusTable(std::move(iv), 4);
}

RadiusTable face_radius_table() {
  const double ratios[] = {0.100, 0.090, 0.060, 0.050, 0.050,
                           0.040, 0.040, 0.030, 0.040, 0.030};
  std::vector<RadiusInterval> iv;
  // Lower bounds sit half a level below each j / 10 value.
  for (int j = 0; j < 10; ++j)
    iv.push_back(RadiusInterval{j == 0 ? -std::numeric_limits<double>::infinity()
                                       : (j - 0.5) / 10.0,
                                ratios[j], ratios[j]});
  return RadiusTable(std::move(iv), 2);
}

RegionRules pedestrian_rules() {
  RegionRules r;
  r.t_l = -2.0;
  r.t_h = 0.0;
  r.rejection = pedestrian_radius_table();
  r.accept_ratio_x = 0.16;
  r.accept_ratio_y = 0.16;
  r.propagation = ScalePropagation{3, true, 3, 0.8};
  return r;
}

RegionRules face_rules() {
  RegionRules r;
  r.t_l = 0.2;
  r.t_h = 1.0;
  r.rejection = face_radius_table();
  r.accept_ratio_x = 0.1;
  r.accept_ratio_y = 0.1;
  r.propagation = ScalePropagation{1, false, 1, 0.5};
  return r;
}

RegionBook::RegionBook(SearchSpace space)
    : space_(std::move(space)), rejected_(space_.size()), accepted_(space_.size()) {}

RegionKind RegionBook::classify_index(std::uint64_t index) const {
  if (rejected_.test(index)) return RegionKind::kRejected;
  if (accepted_.test(index)) return RegionKind::kAccepted;
  return RegionKind::kFree;
}

std::uint64_t RegionBook::mark_rejection(const Window& w, double f,
                                         const RegionRules& rules) {
  if (!(f < rules.t_l))
    throw ContractViolation("mark_rejection: response " + std::to_string(f) +
                            " is not below t_l");
  const auto& p = space_.params();
  const auto radius = rules.rejection.lookup(f, p.template_w, p.template_h);
  if (!radius) return 0;
  int span = rules.propagation.reject_span;
  if (rules.propagation.reject_span_minus_interval)
    span = std::max(0, span - rules.rejection.interval_of(f));
  return mark_region(w, *radius, span, rules.propagation.shrink, RegionKind::kRejected);
}

std::uint64_t RegionBook::mark_acceptance(const Window& w, double f,
                                          const RegionRules& rules) {
  if (f < rules.t_h)
    throw ContractViolation("mark_acceptance: response " + std::to_string(f) +
                            " is below t_h");
  const auto& p = space_.params();
  const Radius radius{floor_pixels(rules.accept_ratio_x * p.template_w),
                      floor_pixels(rules.accept_ratio_y * p.template_h)};
  return mark_region(w, radius, rules.propagation.accept_span, rules.propagation.shrink,
                     RegionKind::kAccepted);
}

std::uint64_t RegionBook::mark_region(const Window& w, Radius radius, int span,
                                      double shrink, RegionKind kind) {
  if (!space_.contains(w)) throw ContractViolation("mark_region: window outside space");
  if (kind == RegionKind::kFree) throw ContractViolation("mark_region: kind must be a mark");

  Bits& bits = kind == RegionKind::kRejected ? rejected_ : accepted_;
  const Box box = space_.to_box(w);
  const int stride = space_.params().stride;
  std::uint64_t marked = 0;

  const int lo = std::max(0, w.s - span);
  const int hi = std::min(space_.levels() - 1, w.s + span);
  for (int s = lo; s <= hi; ++s) {
    const int d = std::abs(s - w.s);
    const double f = std::pow(shrink, d);
    const int rx = floor_pixels(f * radius.x / stride);
    const int ry = floor_pixels(f * radius.y / stride);
    const Window c = s == w.s ? w : space_.nearest(box.cx, box.cy, s);
    const int x0 = std::max(0, c.x - rx);
    const int x1 = std::min(space_.grid_w(s) - 1, c.x + rx);
    const int y0 = std::max(0, c.y - ry);
    const int y1 = std::min(space_.grid_h(s) - 1, c.y + ry);
    for (int y = y0; y <= y1; ++y) {
      const std::uint64_t row = space_.index_of(Window{0, y, s});
      for (int x = x0; x <= x1; ++x) {
        const std::uint64_t i = row + static_cast<std::uint64_t>(x);
        if (rejected_.test(i) || accepted_.test(i)) continue;
        bits.set(i);
        ++marked;
      }
    }
  }
  if (kind == RegionKind::kRejected)
    n_rejected_ += marked;
  else
    n_accepted_ += marked;
  return marked;
}

}  // namespace ipw
