#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "singflow/field.hpp"

namespace singflow {

/// Uniform axis-aligned tiling of a region. Box (i, j, k) has linear index
/// i + nx * (j + ny * k).
class BoxCover {
 public:
  BoxCover() = default;
  BoxCover(const Box3& region, double h);

  const Box3& region() const { return region_; }
  double requested_h() const { return requested_h_; }
  /// Per-axis edge length after snapping to divide the region edge.
  const Vec3& h() const { return h_; }
  const std::array<int, 3>& counts() const { return counts_; }
  bool snapped() const { return snapped_; }
  /// Some axis is covered by a single box.
  bool too_coarse() const { return too_coarse_; }

  std::size_t box_count() const {
    return static_cast<std::size_t>(counts_[0]) * counts_[1] * counts_[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + counts_[0] * (static_cast<std::size_t>(j) + counts_[1] * static_cast<std::size_t>(k));
  }
  std::array<int, 3> cell(std::size_t idx) const {
    const int i = static_cast<int>(idx % counts_[0]);
    idx /= counts_[0];
    return {i, static_cast<int>(idx % counts_[1]), static_cast<int>(idx / counts_[1])};
  }

  /// Coordinate of the i-th grid plane along an axis (exact region bound at the ends).
  double plane(int axis, int i) const {
    return i >= counts_[axis] ? region_.hi[axis] : region_.lo[axis] + i * h_[axis];
  }
  /// Cell coordinate along an axis, ties toward the lower index, clamped to the grid.
  int axis_cell(int axis, double x) const;

  /// Box containing p, or nullopt when p is outside the region.
  std::optional<std::size_t> locate(const Vec3& p) const;
  Box3 box(std::size_t idx) const;
  Vec3 center(std::size_t idx) const { return box(idx).center(); }
  double box_diameter() const { return h_.norm(); }

  /// Squared distance from p to the union of cells [lo, hi] (inclusive, per axis).
  double distance_sq(const Vec3& p, const std::array<int, 3>& lo, const std::array<int, 3>& hi) const;
  double distance_sq(const Vec3& p, std::size_t idx) const {
    const auto c = cell(idx);
    return distance_sq(p, c, c);
  }

 private:
  Box3 region_;
  double requested_h_ = 0.0;
  Vec3 h_ = Vec3::Zero();
  std::array<int, 3> counts_{0, 0, 0};
  bool snapped_ = false;
  bool too_coarse_ = false;
};

/// Raises BudgetError (with the required count) when the cover would exceed max_boxes.
BoxCover build_box_cover(const Box3& region, double h, std::size_t max_boxes = 20'000'000);

/// Ball test shared by every edge enumeration: dist(p, cells) < r.
inline bool ball_hits(const BoxCover& cover, const Vec3& p, double r, const std::array<int, 3>& lo,
                      const std::array<int, 3>& hi) {
  return cover.distance_sq(p, lo, hi) < r * r;
}

}  // namespace singflow
