#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include "pinchlab/core.hpp"
#include "pinchlab/mesh.hpp"

namespace pinchlab {

// Edge graph of the mesh with one level of edge-midpoint Steiner nodes.
// Within each face all six nodes are pairwise connected by straight (hence
// intrinsic) segments, which keeps the graph-metric overestimate small.
// Nodes 0..nV-1 are the mesh vertices; node nV+e is the midpoint of edge e.
struct SurfaceGraph {
  Eigen::MatrixXd positions;                       // one row per node
  std::vector<std::vector<std::pair<int, double>>> adjacency;
  int n_mesh_vertices = 0;
  std::vector<std::array<int, 2>> midpoint_edges;  // endpoints of edge behind each midpoint

  int n_nodes() const { return static_cast<int>(positions.rows()); }
};

inline SurfaceGraph build_surface_graph(const TriangleMesh& mesh) {
  SurfaceGraph graph;
  graph.n_mesh_vertices = static_cast<int>(mesh.n_vertices());

  std::unordered_map<std::uint64_t, int> edge_node;
  edge_node.reserve(static_cast<std::size_t>(mesh.n_faces()) * 2);
  std::vector<std::array<int, 2>> edges;
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    for (int e = 0; e < 3; ++e) {
      int a = mesh.F(f, e), b = mesh.F(f, (e + 1) % 3);
      auto key = detail::edge_key(a, b);
      if (!edge_node.count(key)) {
        edge_node[key] = graph.n_mesh_vertices + static_cast<int>(edges.size());
        edges.push_back({std::min(a, b), std::max(a, b)});
      }
    }
  }
  graph.midpoint_edges = edges;

  const int n_nodes = graph.n_mesh_vertices + static_cast<int>(edges.size());
  graph.positions.resize(n_nodes, 3);
  graph.positions.topRows(mesh.n_vertices()) = mesh.V;
  for (std::size_t e = 0; e < edges.size(); ++e)
    graph.positions.row(graph.n_mesh_vertices + static_cast<Eigen::Index>(e)) =
        0.5 * (mesh.V.row(edges[e][0]) + mesh.V.row(edges[e][1]));

  graph.adjacency.resize(n_nodes);
  std::unordered_map<std::uint64_t, bool> seen_pair;
  seen_pair.reserve(static_cast<std::size_t>(mesh.n_faces()) * 15);
  auto connect = [&](int a, int b) {
    auto key = detail::edge_key(a, b);
    if (seen_pair.emplace(key, true).second) {
      double w = (graph.positions.row(a) - graph.positions.row(b)).norm();
      graph.adjacency[a].emplace_back(b, w);
      graph.adjacency[b].emplace_back(a, w);
    }
  };
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    int v0 = mesh.F(f, 0), v1 = mesh.F(f, 1), v2 = mesh.F(f, 2);
    int m01 = edge_node[detail::edge_key(v0, v1)];
    int m12 = edge_node[detail::edge_key(v1, v2)];
    int m20 = edge_node[detail::edge_key(v2, v0)];
    const int nodes[6] = {v0, v1, v2, m01, m12, m20};
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j) connect(nodes[i], nodes[j]);
  }
  return graph;
}

struct GeodesicField {
  Eigen::VectorXd distance;       // per graph node
  std::vector<int> predecessor;   // -1 at sources / unreached
};

// Multi-source Dijkstra over the graph; max_radius > 0 truncates the search.
inline GeodesicField multi_source_dijkstra(const SurfaceGraph& graph,
                                           const std::vector<int>& sources,
                                           double max_radius = -1.0) {
  if (sources.empty()) throw ValidationError("geodesic field needs a non-empty source set");
  const int n = graph.n_nodes();
  GeodesicField out;
  out.distance = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  out.predecessor.assign(n, -1);

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (int s : sources) {
    if (s < 0 || s >= n) throw ValidationError("geodesic source index out of range");
    if (out.distance[s] > 0.0) {
      out.distance[s] = 0.0;
      queue.emplace(0.0, s);
    }
  }
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > out.distance[u]) continue;
    if (max_radius > 0.0 && d > max_radius) break;
    for (auto [v, w] : graph.adjacency[u]) {
      double nd = d + w;
      if (nd < out.distance[v]) {
        out.distance[v] = nd;
        out.predecessor[v] = u;
        queue.emplace(nd, v);
      }
    }
  }
  return out;
}

// Intrinsic distance to a vertex set A, reported at the mesh vertices.
inline VertexField geodesic_field(const TriangleMesh& mesh, const std::vector<int>& A) {
  SurfaceGraph graph = build_surface_graph(mesh);
  GeodesicField field = multi_source_dijkstra(graph, A);
  Eigen::VectorXd at_vertices = field.distance.head(mesh.n_vertices());
  if (!at_vertices.allFinite())
    throw ValidationError("source set misses a connected component of the mesh");
  return make_field(mesh, std::move(at_vertices));
}

// Walk predecessors from a node back to the nearest source.
inline std::vector<int> extract_path(const GeodesicField& field, int node) {
  std::vector<int> path;
  for (int u = node; u != -1; u = field.predecessor[u]) path.push_back(u);
  return path;  // ends at the source
}

}  // namespace pinchlab
