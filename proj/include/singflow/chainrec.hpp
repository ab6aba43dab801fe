#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "singflow/kernels.hpp"

namespace singflow {

/// Directed graph in CSR form.
struct Digraph {
  std::size_t node_count = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> targets;

  static Digraph from_edges(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);
  std::size_t edge_count() const { return targets.size(); }
  const std::uint32_t* begin(std::size_t v) const { return targets.data() + offsets[v]; }
  const std::uint32_t* end(std::size_t v) const { return targets.data() + offsets[v + 1]; }
  bool has_edge(std::size_t a, std::size_t b) const;
};

/// Tarjan SCC. `recurrent` labels nodes of non-trivial SCCs (>= 2 nodes or a
/// self-loop) 0, 1, ... in order of their smallest node; other nodes get -1.
struct SccResult {
  std::vector<int> recurrent;
  int recurrent_count = 0;
};

SccResult strongly_connected_components(const Digraph& g);

/// epsilon-pseudo-orbit transition graph over a box cover. Node
/// cover.box_count() is the EXIT node.
struct BoxGraph {
  BoxCover cover;
  double eps = 0.0;
  std::vector<double> time_samples;
  int samples_per_edge = 1;
  Digraph graph;
  std::vector<int> scc;  // per box, -1 for non-recurrent
  int scc_count = 0;
  std::size_t sample_count = 0;
  std::size_t failed_samples = 0;
  bool low_confidence = false;

  std::size_t exit_node() const { return cover.box_count(); }
  std::size_t edge_count() const { return graph.edge_count(); }
  bool has_edge(std::size_t a, std::size_t b) const { return graph.has_edge(a, b); }
};

struct GraphOptions {
  TransitionOptions transition;
  std::size_t max_edges = 100'000'000;
  Exec exec = Exec::parallel;
};

BoxGraph build_transition_graph(const TransitionData& data, double eps,
                                std::size_t max_edges = 100'000'000, Exec exec = Exec::parallel);
BoxGraph build_transition_graph(const Field& field, const BoxCover& cover, double eps,
                                const GraphOptions& opts = {});

/// Boxes in non-trivial SCCs, ascending.
std::vector<std::size_t> chain_recurrent_boxes(const BoxGraph& graph);

/// Box-level chain class of x (the SCC of x's box), ascending. Raises
/// PreconditionError outside the region and NotRecurrentError when the box
/// is not recurrent.
std::vector<std::size_t> chain_class_of(const BoxGraph& graph, const Vec3& x);

/// Same class computed without materializing edges: forward reachability
/// from x's box intersected with backward reachability, both through ball
/// queries on occupancy pyramids. Intended for covers too fine for explicit
/// edge lists.
std::vector<std::size_t> chain_class_of(const TransitionData& data, double eps, const Vec3& x);

/// Members of each recurrent SCC, indexed by label.
std::vector<std::vector<std::size_t>> scc_members(const BoxGraph& graph);

}  // namespace singflow
