#include "singflow/chainrec.hpp"

#include <algorithm>

namespace singflow {

Digraph Digraph::from_edges(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  Digraph g;
  g.node_count = n;
  g.offsets.assign(n + 1, 0);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw PreconditionError("edge endpoint out of range");
    ++g.offsets[a + 1];
  }
  for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] += g.offsets[v];
  g.targets.reserve(edges.size());
  for (const auto& e : edges) g.targets.push_back(e.second);
  return g;
}

bool Digraph::has_edge(std::size_t a, std::size_t b) const {
  return std::binary_search(begin(a), end(a), static_cast<std::uint32_t>(b));
}

SccResult strongly_connected_components(const Digraph& g) {
  const std::size_t n = g.node_count;
  constexpr std::uint32_t kUnset = 0xffffffffu;
  std::vector<std::uint32_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<char> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> calls;  // (node, next edge offset)
  std::vector<std::uint32_t> comp_size;
  std::uint32_t counter = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    calls.emplace_back(static_cast<std::uint32_t>(root), g.offsets[root]);
    index[root] = low[root] = counter++;
    stack.push_back(static_cast<std::uint32_t>(root));
    on_stack[root] = 1;
    while (!calls.empty()) {
      auto& [v, e] = calls.back();
      if (e < g.offsets[v + 1]) {
        const std::uint32_t w = g.targets[e++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          calls.emplace_back(w, g.offsets[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::uint32_t done = v;
      calls.pop_back();
      if (!calls.empty()) low[calls.back().first] = std::min(low[calls.back().first], low[done]);
      if (low[done] == index[done]) {
        const auto c = static_cast<std::uint32_t>(comp_size.size());
        std::uint32_t size = 0, w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = c;
          ++size;
        } while (w != done);
        comp_size.push_back(size);
      }
    }
  }

  std::vector<char> nontrivial(comp_size.size(), 0);
  for (std::size_t c = 0; c < comp_size.size(); ++c) nontrivial[c] = comp_size[c] >= 2;
  for (std::size_t v = 0; v < n; ++v)
    if (g.has_edge(v, v)) nontrivial[comp[v]] = 1;

  SccResult r;
  r.recurrent.assign(n, -1);
  std::vector<int> label(comp_size.size(), -1);
  for (std::size_t v = 0; v < n; ++v) {
    const auto c = comp[v];
    if (!nontrivial[c]) continue;
    if (label[c] < 0) label[c] = r.recurrent_count++;
    r.recurrent[v] = label[c];
  }
  return r;
}

BoxGraph build_transition_graph(const TransitionData& data, double eps, std::size_t max_edges, Exec exec) {
  EdgeLists edges = enumerate_edges(data, eps, max_edges, exec);
  BoxGraph bg;
  bg.cover = data.cover;
  bg.eps = eps;
  bg.time_samples = data.times;
  bg.samples_per_edge = data.m;
  bg.sample_count = data.sample_count;
  bg.failed_samples = data.failed_count;
  bg.low_confidence = data.low_confidence();
  const std::size_t n = data.cover.box_count();
  bg.graph.node_count = n + 1;
  bg.graph.offsets = std::move(edges.offsets);
  bg.graph.offsets.push_back(bg.graph.offsets.back());  // EXIT has no out-edges
  bg.graph.targets = std::move(edges.targets);
  SccResult scc = strongly_connected_components(bg.graph);
  bg.scc.assign(scc.recurrent.begin(), scc.recurrent.begin() + static_cast<std::ptrdiff_t>(n));
  bg.scc_count = scc.recurrent_count;
  return bg;
}

BoxGraph build_transition_graph(const Field& field, const BoxCover& cover, double eps,
                                const GraphOptions& opts) {
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  const TransitionData data = compute_transition_data(field, cover, opts.transition, opts.exec);
  return build_transition_graph(data, eps, opts.max_edges, opts.exec);
}

std::vector<std::size_t> chain_recurrent_boxes(const BoxGraph& graph) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < graph.scc.size(); ++b)
    if (graph.scc[b] >= 0) out.push_back(b);
  return out;
}

namespace {

std::size_t locate_or_throw(const BoxCover& cover, const Vec3& x) {
  const auto b = cover.locate(x);
  if (!b) throw PreconditionError("point lies outside the covered region");
  return *b;
}

}  // namespace

std::vector<std::size_t> chain_class_of(const BoxGraph& graph, const Vec3& x) {
  const std::size_t b0 = locate_or_throw(graph.cover, x);
  const int label = graph.scc[b0];
  if (label < 0) throw NotRecurrentError("box of the selected point is not chain recurrent");
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < graph.scc.size(); ++b)
    if (graph.scc[b] == label) out.push_back(b);
  return out;
}

std::vector<std::vector<std::size_t>> scc_members(const BoxGraph& graph) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(graph.scc_count));
  for (std::size_t b = 0; b < graph.scc.size(); ++b)
    if (graph.scc[b] >= 0) out[static_cast<std::size_t>(graph.scc[b])].push_back(b);
  return out;
}

namespace {

/// Hierarchy of occupancy counts over the box grid; level l node covers
/// 2^l boxes per axis.
class OccupancyPyramid {
 public:
  OccupancyPyramid(const BoxCover& cover, bool full) : cover_(cover) {
    std::array<int, 3> dims = cover.counts();
    while (true) {
      dims_.push_back(dims);
      counts_.emplace_back(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0u);
      if (dims[0] == 1 && dims[1] == 1 && dims[2] == 1) break;
      for (int& d : dims) d = (d + 1) / 2;
    }
    if (full)
      for (std::size_t b = 0; b < cover.box_count(); ++b) insert(b);
  }

  bool contains(std::size_t b) const { return counts_[0][b] != 0; }

  void insert(std::size_t b) { update(b, +1); }
  void erase(std::size_t b) { update(b, -1); }

  /// Removes every member whose box is within distance < r of p, reporting it to f.
  template <class F>
  void extract_in_ball(const Vec3& p, double r, F&& f) {
    descend(top(), 0, 0, 0, p, r * r, [&](std::size_t b) {
      erase(b);
      f(b);
      return false;
    });
  }

  bool any_in_ball(const Vec3& p, double r) const {
    return const_cast<OccupancyPyramid*>(this)->descend(top(), 0, 0, 0, p, r * r,
                                                         [](std::size_t) { return true; });
  }

 private:
  int top() const { return static_cast<int>(dims_.size()) - 1; }

  std::size_t node(int l, int i, int j, int k) const {
    const auto& d = dims_[l];
    return static_cast<std::size_t>(i) + d[0] * (static_cast<std::size_t>(j) + d[1] * static_cast<std::size_t>(k));
  }

  void update(std::size_t b, int delta) {
    auto c = cover_.cell(b);
    for (std::size_t l = 0; l < dims_.size(); ++l) {
      counts_[l][node(static_cast<int>(l), c[0], c[1], c[2])] += static_cast<std::uint32_t>(delta);
      for (int& v : c) v >>= 1;
    }
  }

  /// Visits members within the ball; stops and returns true once f returns true.
  template <class F>
  bool descend(int l, int i, int j, int k, const Vec3& p, double r2, F&& f) {
    if (counts_[l][node(l, i, j, k)] == 0) return false;
    const std::array<int, 3> lo{i << l, j << l, k << l};
    std::array<int, 3> hi;
    for (int a = 0; a < 3; ++a) hi[a] = std::min(lo[a] + (1 << l) - 1, cover_.counts()[a] - 1);
    if (!(cover_.distance_sq(p, lo, hi) < r2)) return false;
    if (l == 0) return f(cover_.index(i, j, k));
    const auto& d = dims_[l - 1];
    for (int kk = 2 * k; kk <= std::min(2 * k + 1, d[2] - 1); ++kk)
      for (int jj = 2 * j; jj <= std::min(2 * j + 1, d[1] - 1); ++jj)
        for (int ii = 2 * i; ii <= std::min(2 * i + 1, d[0] - 1); ++ii)
          if (descend(l - 1, ii, jj, kk, p, r2, f)) return true;
    return false;
  }

  const BoxCover& cover_;
  std::vector<std::array<int, 3>> dims_;
  std::vector<std::vector<std::uint32_t>> counts_;
};

}  // namespace

std::vector<std::size_t> chain_class_of(const TransitionData& data, double eps, const Vec3& x) {
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  const BoxCover& cover = data.cover;
  const std::size_t b0 = locate_or_throw(cover, x);
  const std::size_t nt = data.nt();

  auto for_each_ball = [&](std::size_t b, auto&& g) {
    bool stop = false;
    data.for_each_box_sample(b, [&](std::size_t s) {
      if (stop || data.failed[s]) return;
      for (std::size_t k = 0; k < nt && !stop; ++k) {
        const Vec3& img = data.images[s * nt + k];
        if (img.allFinite()) stop = g(img, eps + data.spread[b * nt + k]);
      }
    });
  };

  OccupancyPyramid unvisited(cover, true);
  std::vector<std::size_t> queue{b0};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t src = queue[head];
    for_each_ball(src, [&](const Vec3& img, double r) {
      unvisited.extract_in_ball(img, r, [&](std::size_t b) { queue.push_back(b); });
      return false;
    });
  }
  if (unvisited.contains(b0)) throw NotRecurrentError("box of the selected point is not chain recurrent");

  // queue[0] is b0 as a source; it reappears later once reached.
  std::vector<std::size_t> candidates(queue.begin() + 1, queue.end());
  std::sort(candidates.begin(), candidates.end());
  OccupancyPyramid members(cover, false);
  members.insert(b0);
  bool changed = true;
  bool ascending = true;
  while (changed) {
    changed = false;
    auto sweep = [&](std::size_t b) {
      if (members.contains(b)) return;
      bool hit = false;
      for_each_ball(b, [&](const Vec3& img, double r) { return hit = members.any_in_ball(img, r); });
      if (hit) {
        members.insert(b);
        changed = true;
      }
    };
    if (ascending)
      for (std::size_t b : candidates) sweep(b);
    else
      for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) sweep(*it);
    ascending = !ascending;
  }
  std::vector<std::size_t> out;
  for (std::size_t b : candidates)
    if (members.contains(b)) out.push_back(b);
  return out;
}

}  // namespace singflow
