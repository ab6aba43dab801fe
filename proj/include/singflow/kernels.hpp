#pragma once

// Batch kernels behind the box graph. Each kernel has a serial reference
// path and an OpenMP path; both produce identical results.

#include <cstdint>
#include <vector>

#include "singflow/cover.hpp"
#include "singflow/flow.hpp"

namespace singflow {

enum class Exec { serial, parallel };

struct TransitionOptions {
  std::vector<double> time_samples{1.0, 1.25, 1.5, 1.75, 2.0};
  /// Samples per box edge m: the box is split into m^3 cells whose corners
  /// and centers are the samples (m = 1 gives 8 corners + center).
  int samples_per_edge = 1;
  double tol = 1e-6;
};

/// Images phi_t(s) and |D phi_t(s)| for every lattice sample s and every
/// time sample t, plus the per-box image spread bound.
struct TransitionData {
  BoxCover cover;
  std::vector<double> times;
  int m = 1;
  std::array<int, 3> vertex_dims{0, 0, 0};  // counts * m + 1
  std::array<int, 3> center_dims{0, 0, 0};  // counts * m
  std::size_t vertex_count = 0;
  std::size_t sample_count = 0;

  /// images[s * nt + k]; NaN when the orbit escaped before times[k].
  std::vector<Vec3> images;
  std::vector<double> dnorm;
  /// Per sample: 1 when the integration failed and the sample is skipped.
  std::vector<std::uint8_t> failed;
  std::size_t failed_count = 0;
  /// spread[b * nt + k] = max over samples s of box b of |D phi_t(s)| * diam / (2 m).
  std::vector<double> spread;

  std::size_t nt() const { return times.size(); }
  bool low_confidence() const { return failed_count * 100 > sample_count; }
  Vec3 sample_point(std::size_t s) const;
  std::size_t samples_per_box() const {
    return static_cast<std::size_t>((m + 1) * (m + 1) * (m + 1) + m * m * m);
  }
  /// Calls f(sample_index) for every sample of box b, vertices first.
  template <class F>
  void for_each_box_sample(std::size_t b, F&& f) const {
    const auto c = cover.cell(b);
    const int i0 = c[0] * m, j0 = c[1] * m, k0 = c[2] * m;
    for (int k = k0; k <= k0 + m; ++k)
      for (int j = j0; j <= j0 + m; ++j)
        for (int i = i0; i <= i0 + m; ++i)
          f(static_cast<std::size_t>(i) +
            vertex_dims[0] * (static_cast<std::size_t>(j) + vertex_dims[1] * static_cast<std::size_t>(k)));
    for (int k = k0; k < k0 + m; ++k)
      for (int j = j0; j < j0 + m; ++j)
        for (int i = i0; i < i0 + m; ++i)
          f(vertex_count + static_cast<std::size_t>(i) +
            center_dims[0] * (static_cast<std::size_t>(j) + center_dims[1] * static_cast<std::size_t>(k)));
  }

  /// Calls f(target) for every edge target of box b at radius eps + spread,
  /// with duplicates. The EXIT node is cover.box_count().
  template <class F>
  void for_each_edge_target(std::size_t b, double eps, F&& f) const;
};

TransitionData compute_transition_data(const Field& field, const BoxCover& cover,
                                       const TransitionOptions& opts = {}, Exec exec = Exec::parallel);

/// Sorted, deduplicated out-neighbours of every box (CSR).
struct EdgeLists {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> targets;
};

/// Raises BudgetError when more than max_edges edges are produced.
EdgeLists enumerate_edges(const TransitionData& data, double eps, std::size_t max_edges,
                          Exec exec = Exec::parallel);

template <class F>
void TransitionData::for_each_edge_target(std::size_t b, double eps, F&& f) const {
  const std::size_t exit_node = cover.box_count();
  const std::size_t n = nt();
  for_each_box_sample(b, [&](std::size_t s) {
    if (failed[s]) return;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3& img = images[s * n + k];
      if (!img.allFinite()) {
        f(exit_node);
        continue;
      }
      if (!cover.region().contains(img)) f(exit_node);
      const double r = eps + spread[b * n + k];
      std::array<int, 3> lo, hi;
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, cover.axis_cell(a, img[a] - r) - 1);
        hi[a] = std::min(cover.counts()[a] - 1, cover.axis_cell(a, img[a] + r) + 1);
      }
      for (int kk = lo[2]; kk <= hi[2]; ++kk)
        for (int jj = lo[1]; jj <= hi[1]; ++jj)
          for (int ii = lo[0]; ii <= hi[0]; ++ii) {
            const std::array<int, 3> c{ii, jj, kk};
            if (ball_hits(cover, img, r, c, c)) f(cover.index(ii, jj, kk));
          }
    }
  });
}

}  // namespace singflow
