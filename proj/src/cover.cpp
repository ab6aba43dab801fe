#include "singflow/cover.hpp"

#include <algorithm>
#include <cmath>

#include "singflow/errors.hpp"

namespace singflow {

BoxCover::BoxCover(const Box3& region, double h) : region_(region), requested_h_(h) {
  if (!(h > 0) || !std::isfinite(h)) throw ConfigError("box size h must be positive");
  const Vec3 ext = region.extent();
  for (int a = 0; a < 3; ++a) {
    if (!(ext[a] > 0)) throw ConfigError("region must have positive extent on every axis");
    const double n = std::max(1.0, std::ceil(ext[a] / h - 1e-9));
    counts_[a] = static_cast<int>(n);
    h_[a] = ext[a] / n;
    if (std::abs(h_[a] - h) > 1e-12 * h) snapped_ = true;
    if (counts_[a] == 1) too_coarse_ = true;
  }
}

int BoxCover::axis_cell(int axis, double x) const {
  const double s = (x - region_.lo[axis]) / h_[axis];
  const int i = static_cast<int>(std::ceil(s)) - 1;
  return std::clamp(i, 0, counts_[axis] - 1);
}

std::optional<std::size_t> BoxCover::locate(const Vec3& p) const {
  if (!region_.contains(p)) return std::nullopt;
  return index(axis_cell(0, p.x()), axis_cell(1, p.y()), axis_cell(2, p.z()));
}

Box3 BoxCover::box(std::size_t idx) const {
  const auto c = cell(idx);
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = plane(a, c[a]);
    b.hi[a] = plane(a, c[a] + 1);
  }
  return b;
}

double BoxCover::distance_sq(const Vec3& p, const std::array<int, 3>& lo,
                             const std::array<int, 3>& hi) const {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double below = plane(a, lo[a]) - p[a];
    const double above = p[a] - plane(a, hi[a] + 1);
    const double d = std::max({below, above, 0.0});
    d2 += d * d;
  }
  return d2;
}

BoxCover build_box_cover(const Box3& region, double h, std::size_t max_boxes) {
  BoxCover cover(region, h);
  const double count = static_cast<double>(cover.counts()[0]) * cover.counts()[1] * cover.counts()[2];
  if (count > static_cast<double>(max_boxes))
    throw BudgetError("box cover needs " + std::to_string(static_cast<std::size_t>(count)) +
                          " boxes, budget is " + std::to_string(max_boxes),
                      static_cast<std::size_t>(count));
  return cover;
}

}  // namespace singflow
