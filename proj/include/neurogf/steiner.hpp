#pragma once

#include <queue>

#include "neurogf/mesh.hpp"

namespace neurogf {

// Graph over mesh vertices plus k uniformly spaced Steiner points per edge.
// Within every face, all boundary nodes (3 vertices + Steiner points of its
// 3 edges) are pairwise connected, so shortest paths may cross faces away
// from vertices. Accuracy tightens as k grows.
struct SteinerGraph {
  struct Provenance {
    int vertex = -1;  // >= 0 for mesh-vertex nodes
    int edge = -1;    // >= 0 for Steiner nodes
    double frac = 0;  // position along the edge for Steiner nodes
  };

  std::vector<Vec3> nodes;  // mesh vertices first, then Steiner points
  std::vector<Provenance> provenance;
  std::vector<std::pair<int, int>> edges;  // unique undirected mesh edges (lo, hi)
  int k = 0;
  int num_mesh_vertices = 0;

  // CSR adjacency
  std::vector<size_t> adj_offset;
  std::vector<int> adj_node;
  std::vector<double> adj_len;

  size_t node_count() const { return nodes.size(); }
  size_t arc_count() const { return adj_node.size() / 2; }  // undirected

  int steiner_node(int edge, int j) const {  // j in [1, k]
    return num_mesh_vertices + edge * k + (j - 1);
  }
};

inline SteinerGraph build_steiner_graph(const TriangleMesh& mesh, int k) {
  if (k < 0) throw std::invalid_argument("build_steiner_graph: k must be >= 0");
  SteinerGraph g;
  g.k = k;
  g.num_mesh_vertices = int(mesh.vertex_count());
  g.edges = unique_edges(mesh);

  g.nodes.reserve(mesh.vertex_count() + g.edges.size() * size_t(k));
  g.provenance.reserve(g.nodes.capacity());
  for (int v = 0; v < g.num_mesh_vertices; ++v) {
    g.nodes.push_back(mesh.vertices[v]);
    g.provenance.push_back({v, -1, 0.0});
  }
  for (size_t e = 0; e < g.edges.size(); ++e) {
    Vec3 a = mesh.vertices[g.edges[e].first];
    Vec3 b = mesh.vertices[g.edges[e].second];
    for (int j = 1; j <= k; ++j) {
      double t = double(j) / double(k + 1);
      g.nodes.push_back(a * (1.0 - t) + b * t);
      g.provenance.push_back({-1, int(e), t});
    }
  }

  std::map<std::pair<int, int>, int> edge_index;
  for (size_t e = 0; e < g.edges.size(); ++e) edge_index[g.edges[e]] = int(e);

  std::vector<std::pair<int, int>> arcs;  // (u, v) with u < v; lengths recomputed later
  // all pairs among the k+2 nodes of each edge (collinear chain, shared by faces)
  std::vector<int> en;
  for (size_t e = 0; e < g.edges.size(); ++e) {
    en.clear();
    en.push_back(g.edges[e].first);
    en.push_back(g.edges[e].second);
    for (int j = 1; j <= k; ++j) en.push_back(g.steiner_node(int(e), j));
    for (size_t x = 0; x < en.size(); ++x)
      for (size_t y = x + 1; y < en.size(); ++y)
        arcs.emplace_back(std::min(en[x], en[y]), std::max(en[x], en[y]));
  }
  // cross pairs between different edges of each face
  std::vector<int> fe[3];
  for (const auto& f : mesh.faces) {
    for (int s = 0; s < 3; ++s) {
      int a = f[s], b = f[(s + 1) % 3];
      int e = edge_index.at({std::min(a, b), std::max(a, b)});
      fe[s].clear();
      fe[s].push_back(a);
      fe[s].push_back(b);
      for (int j = 1; j <= k; ++j) fe[s].push_back(g.steiner_node(e, j));
    }
    for (int s = 0; s < 3; ++s) {
      int t = (s + 1) % 3;
      for (int u : fe[s])
        for (int v : fe[t]) {
          if (u == v) continue;
          // vertex-vertex pairs live on an edge of the face; already added above
          bool both_vertices = u < g.num_mesh_vertices && v < g.num_mesh_vertices;
          if (both_vertices) continue;
          arcs.emplace_back(std::min(u, v), std::max(u, v));
        }
    }
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  // CSR over both directions
  size_t n = g.nodes.size();
  std::vector<size_t> deg(n, 0);
  for (auto [u, v] : arcs) { ++deg[u]; ++deg[v]; }
  g.adj_offset.assign(n + 1, 0);
  for (size_t i = 0; i < n; ++i) g.adj_offset[i + 1] = g.adj_offset[i] + deg[i];
  g.adj_node.resize(g.adj_offset[n]);
  g.adj_len.resize(g.adj_offset[n]);
  std::vector<size_t> cursor(g.adj_offset.begin(), g.adj_offset.end() - 1);
  for (auto [u, v] : arcs) {
    double len = norm(g.nodes[u] - g.nodes[v]);
    if (len <= 0.0)
      throw std::runtime_error("build_steiner_graph: zero-length arc (duplicate vertices?)");
    g.adj_node[cursor[u]] = v; g.adj_len[cursor[u]] = len; ++cursor[u];
    g.adj_node[cursor[v]] = u; g.adj_len[cursor[v]] = len; ++cursor[v];
  }
  return g;
}

struct SsadResult {
  std::vector<double> distance;   // +inf where unreachable
  std::vector<int> predecessor;   // -1 at source / unreachable
  int source = -1;
};

inline SsadResult oracle_ssad(const SteinerGraph& g, int source) {
  size_t n = g.node_count();
  if (source < 0 || size_t(source) >= n)
    throw std::invalid_argument("oracle_ssad: source node out of range");
  SsadResult r;
  r.source = source;
  r.distance.assign(n, std::numeric_limits<double>::infinity());
  r.predecessor.assign(n, -1);
  r.distance[source] = 0.0;

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > r.distance[u]) continue;  // stale entry
    for (size_t a = g.adj_offset[u]; a < g.adj_offset[u + 1]; ++a) {
      int v = g.adj_node[a];
      double nd = d + g.adj_len[a];
      if (nd < r.distance[v]) {
        r.distance[v] = nd;
        r.predecessor[v] = u;
        heap.push({nd, v});
      }
    }
  }
  return r;
}

inline std::vector<Vec3> extract_path(const SteinerGraph& g, const SsadResult& ssad, int target) {
  if (target < 0 || size_t(target) >= g.node_count())
    throw std::invalid_argument("extract_path: target node out of range");
  if (target == ssad.source) return {g.nodes[target]};
  if (!std::isfinite(ssad.distance[target]))
    throw std::runtime_error("extract_path: target unreachable from source");
  std::vector<Vec3> rev;
  int cur = target;
  while (cur != -1) {
    rev.push_back(g.nodes[cur]);
    cur = ssad.predecessor[cur];
  }
  std::reverse(rev.begin(), rev.end());
  return rev;
}

// Uniform-arclength resampling to exactly m points; endpoints preserved.
inline std::vector<Vec3> resample_path(const std::vector<Vec3>& poly, int m) {
  if (poly.empty()) throw std::invalid_argument("resample_path: empty polyline");
  if (m < 2) throw std::invalid_argument("resample_path: m must be >= 2");
  std::vector<double> cum(poly.size(), 0.0);
  for (size_t i = 1; i < poly.size(); ++i)
    cum[i] = cum[i - 1] + norm(poly[i] - poly[i - 1]);
  double total = cum.back();
  if (total <= 0.0) return std::vector<Vec3>(m, poly.front());

  std::vector<Vec3> out(m);
  out.front() = poly.front();
  out.back() = poly.back();
  size_t seg = 0;
  for (int i = 1; i + 1 < m; ++i) {
    double t = total * double(i) / double(m - 1);
    while (seg + 2 < poly.size() && cum[seg + 1] < t) ++seg;
    double len = cum[seg + 1] - cum[seg];
    double r = len > 0 ? (t - cum[seg]) / len : 0.0;
    out[i] = poly[seg] * (1.0 - r) + poly[seg + 1] * r;
  }
  return out;
}

inline double polyline_length(const std::vector<Vec3>& poly) {
  double s = 0;
  for (size_t i = 1; i < poly.size(); ++i) s += norm(poly[i] - poly[i - 1]);
  return s;
}

}  // namespace neurogf
