#include "singflow/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace singflow {

Vec3 TransitionData::sample_point(std::size_t s) const {
  const Vec3 step = cover.h() / m;
  Vec3 p;
  if (s < vertex_count) {
    std::array<int, 3> c;
    c[0] = static_cast<int>(s % vertex_dims[0]);
    s /= vertex_dims[0];
    c[1] = static_cast<int>(s % vertex_dims[1]);
    c[2] = static_cast<int>(s / vertex_dims[1]);
    for (int a = 0; a < 3; ++a)
      p[a] = c[a] == vertex_dims[a] - 1 ? cover.region().hi[a] : cover.region().lo[a] + c[a] * step[a];
    return p;
  }
  s -= vertex_count;
  const int i = static_cast<int>(s % center_dims[0]);
  s /= center_dims[0];
  const int j = static_cast<int>(s % center_dims[1]);
  const int k = static_cast<int>(s / center_dims[1]);
  return cover.region().lo + Vec3(i + 0.5, j + 0.5, k + 0.5).cwiseProduct(step);
}

namespace {

void integrate_sample(const Field& field, const Vec3& x, const std::vector<double>& times, double tol,
                      Vec3* img, double* dn, std::uint8_t& failed) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  FlowOptions opts;
  opts.tol = tol;
  try {
    TangentIntegrator integ(field, x, opts);
    for (std::size_t k = 0; k < times.size(); ++k) {
      try {
        integ.advance_to(times[k]);
      } catch (const RegionEscapeError&) {
        for (; k < times.size(); ++k) {
          img[k] = Vec3::Constant(nan);
          dn[k] = nan;
        }
        return;
      }
      img[k] = integ.point();
      dn[k] = integ.cocycle().operatorNorm();
    }
  } catch (const NumericalError&) {
    failed = 1;
  }
}

}  // namespace

TransitionData compute_transition_data(const Field& field, const BoxCover& cover,
                                       const TransitionOptions& opts, Exec exec) {
  if (opts.time_samples.empty()) throw ConfigError("time_samples must be non-empty");
  for (double t : opts.time_samples)
    if (!(t >= 1.0 && t <= 2.0)) throw ConfigError("time_samples must lie in [1, 2]");
  if (opts.samples_per_edge < 1) throw ConfigError("samples_per_edge must be at least 1");
  if (!(opts.tol > 0)) throw ConfigError("integration tolerance must be positive");

  TransitionData d;
  d.cover = cover;
  d.times = opts.time_samples;
  std::sort(d.times.begin(), d.times.end());
  d.m = opts.samples_per_edge;
  d.vertex_count = 1;
  std::size_t centers = 1;
  for (int a = 0; a < 3; ++a) {
    d.center_dims[a] = cover.counts()[a] * d.m;
    d.vertex_dims[a] = d.center_dims[a] + 1;
    d.vertex_count *= d.vertex_dims[a];
    centers *= d.center_dims[a];
  }
  d.sample_count = d.vertex_count + centers;
  const std::size_t nt = d.nt();
  d.images.assign(d.sample_count * nt, Vec3::Zero());
  d.dnorm.assign(d.sample_count * nt, 0.0);
  d.failed.assign(d.sample_count, 0);

  const auto n_samples = static_cast<std::ptrdiff_t>(d.sample_count);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t s = 0; s < n_samples; ++s)
      integrate_sample(field, d.sample_point(s), d.times, opts.tol, &d.images[s * nt], &d.dnorm[s * nt],
                       d.failed[s]);
  } else {
    for (std::ptrdiff_t s = 0; s < n_samples; ++s)
      integrate_sample(field, d.sample_point(s), d.times, opts.tol, &d.images[s * nt], &d.dnorm[s * nt],
                       d.failed[s]);
  }
  d.failed_count = static_cast<std::size_t>(std::count(d.failed.begin(), d.failed.end(), 1));

  const double radius = cover.box_diameter() / (2.0 * d.m);
  const auto n_boxes = static_cast<std::ptrdiff_t>(cover.box_count());
  d.spread.assign(cover.box_count() * nt, 0.0);
  auto box_spread = [&](std::ptrdiff_t b) {
    d.for_each_box_sample(b, [&](std::size_t s) {
      if (d.failed[s]) return;
      for (std::size_t k = 0; k < nt; ++k) {
        const double v = d.dnorm[s * nt + k];
        if (std::isfinite(v)) d.spread[b * nt + k] = std::max(d.spread[b * nt + k], v * radius);
      }
    });
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n_boxes; ++b) box_spread(b);
  } else {
    for (std::ptrdiff_t b = 0; b < n_boxes; ++b) box_spread(b);
  }
  return d;
}

EdgeLists enumerate_edges(const TransitionData& data, double eps, std::size_t max_edges, Exec exec) {
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  const std::size_t n = data.cover.box_count();
  std::vector<std::vector<std::uint32_t>> lists(n);
  std::atomic<std::size_t> total{0};
  std::atomic<bool> over{false};
  auto one_box = [&](std::size_t b) {
    if (over.load(std::memory_order_relaxed)) return;
    auto& out = lists[b];
    data.for_each_edge_target(b, eps, [&](std::size_t t) { out.push_back(static_cast<std::uint32_t>(t)); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.shrink_to_fit();
    if (total.fetch_add(out.size()) + out.size() > max_edges) over = true;
  };
  const auto nb = static_cast<std::ptrdiff_t>(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t b = 0; b < nb; ++b) one_box(b);
  } else {
    for (std::ptrdiff_t b = 0; b < nb; ++b) one_box(b);
  }
  if (over)
    throw BudgetError("transition graph exceeds the edge budget of " + std::to_string(max_edges) +
                          " (at least " + std::to_string(total.load()) + " edges)",
                      total.load());
  EdgeLists e;
  e.offsets.resize(n + 1, 0);
  for (std::size_t b = 0; b < n; ++b) e.offsets[b + 1] = e.offsets[b] + lists[b].size();
  e.targets.reserve(e.offsets[n]);
  for (auto& l : lists) {
    e.targets.insert(e.targets.end(), l.begin(), l.end());
    std::vector<std::uint32_t>().swap(l);
  }
  return e;
}

}  // namespace singflow
