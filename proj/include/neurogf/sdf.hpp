#pragma once

#include <atomic>
#include <functional>

#include "neurogf/mesh.hpp"

namespace neurogf {

// closest point on triangle abc to p (Ericson, Real-Time Collision Detection)
inline Vec3 closest_point_triangle(Vec3 p, Vec3 a, Vec3 b, Vec3 c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return a;
  Vec3 bp = p - b;
  double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  Vec3 cp = p - c;
  double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && d4 - d3 >= 0 && d5 - d6 >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Midpoint-split AABB tree over mesh triangles for closest-point queries.
class BvhTree {
 public:
  struct Hit {
    Vec3 point;
    double dist2 = std::numeric_limits<double>::infinity();
    int face = -1;
  };

  BvhTree() = default;
  explicit BvhTree(const TriangleMesh& mesh) { build(mesh); }

  void build(const TriangleMesh& mesh) {
    mesh_ = &mesh;
    size_t nf = mesh.face_count();
    if (nf == 0) throw std::invalid_argument("BvhTree: empty mesh");
    tri_.resize(nf);
    for (size_t i = 0; i < nf; ++i) tri_[i] = int(i);
    centroids_.resize(nf);
    for (size_t i = 0; i < nf; ++i) {
      const auto& f = mesh.faces[i];
      centroids_[i] = (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0;
    }
    nodes_.clear();
    nodes_.reserve(2 * nf);
    build_node(0, nf);
    centroids_.clear();
    centroids_.shrink_to_fit();
  }

  Hit closest(Vec3 p) const {
    Hit best;
    descend(0, p, best);
    return best;
  }

  double distance(Vec3 p) const { return std::sqrt(closest(p).dist2); }

 private:
  struct Node {
    Aabb box;
    int left = -1;   // child index, or -1 for leaf
    int right = -1;
    int start = 0;   // leaf triangle range in tri_
    int count = 0;
  };

  int build_node(size_t begin, size_t end) {
    int idx = int(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    for (size_t i = begin; i < end; ++i) {
      const auto& f = mesh_->faces[tri_[i]];
      for (int c = 0; c < 3; ++c) box.expand(mesh_->vertices[f[c]]);
    }
    nodes_[idx].box = box;
    if (end - begin <= 4) {
      nodes_[idx].start = int(begin);
      nodes_[idx].count = int(end - begin);
      return idx;
    }
    Vec3 ext = box.extent();
    int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    double mid = box.center()[axis];
    auto it = std::partition(tri_.begin() + begin, tri_.begin() + end,
                             [&](int t) { return centroids_[t][axis] < mid; });
    size_t split = size_t(it - tri_.begin());
    if (split == begin || split == end) split = (begin + end) / 2;  // fallback: median
    int l = build_node(begin, split);
    int r = build_node(split, end);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  void descend(int ni, Vec3 p, Hit& best) const {
    const Node& n = nodes_[ni];
    if (n.box.dist2(p) >= best.dist2) return;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        const auto& f = mesh_->faces[tri_[i]];
        Vec3 q = closest_point_triangle(p, mesh_->vertices[f[0]], mesh_->vertices[f[1]],
                                        mesh_->vertices[f[2]]);
        double d2 = norm2(p - q);
        if (d2 < best.dist2) {
          best.dist2 = d2;
          best.point = q;
          best.face = tri_[i];
        }
      }
      return;
    }
    double dl = nodes_[n.left].box.dist2(p);
    double dr = nodes_[n.right].box.dist2(p);
    if (dl < dr) {
      descend(n.left, p, best);
      descend(n.right, p, best);
    } else {
      descend(n.right, p, best);
      descend(n.left, p, best);
    }
  }

  const TriangleMesh* mesh_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<int> tri_;
  std::vector<Vec3> centroids_;
};

// Generalized winding number (sum of signed solid angles / 4pi).
inline double winding_number(const TriangleMesh& mesh, Vec3 q) {
  double acc = 0;
  for (const auto& f : mesh.faces) {
    Vec3 a = mesh.vertices[f[0]] - q;
    Vec3 b = mesh.vertices[f[1]] - q;
    Vec3 c = mesh.vertices[f[2]] - q;
    double la = norm(a), lb = norm(b), lc = norm(c);
    double den = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
    double num = dot(a, cross(b, c));
    acc += 2.0 * std::atan2(num, den);
  }
  return acc / (4.0 * 3.14159265358979323846);
}

struct SdfSample {
  Vec3 position;
  float signed_distance = 0;
};

// Ground-truth signed distance: unsigned distance via BVH, sign via winding
// number > 0.5. Queries falling in the ambiguous winding band are counted.
class SdfOracle {
 public:
  explicit SdfOracle(const TriangleMesh& mesh) : mesh_(&mesh), bvh_(mesh) {}

  double operator()(Vec3 q) const {
    double d = bvh_.distance(q);
    double w = winding_number(*mesh_, q);
    if (w > 0.45 && w < 0.55) ++ambiguous_;
    return w > 0.5 ? -d : d;
  }

  double unsigned_distance(Vec3 q) const { return bvh_.distance(q); }
  const BvhTree& bvh() const { return bvh_; }
  const TriangleMesh& mesh() const { return *mesh_; }
  size_t ambiguous_queries() const { return ambiguous_; }

 private:
  const TriangleMesh* mesh_;
  BvhTree bvh_;
  mutable std::atomic<size_t> ambiguous_{0};
};

inline Vec3 sample_surface_point(const TriangleMesh& mesh, const std::vector<double>& cum_area,
                                 Rng& rng) {
  double u = rng.uniform() * cum_area.back();
  size_t f = size_t(std::lower_bound(cum_area.begin(), cum_area.end(), u) - cum_area.begin());
  if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
  double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
  const auto& t = mesh.faces[f];
  return mesh.vertices[t[0]] * (1 - r1) + mesh.vertices[t[1]] * (r1 * (1 - r2)) +
         mesh.vertices[t[2]] * (r1 * r2);
}

inline std::vector<double> cumulative_face_areas(const TriangleMesh& mesh) {
  std::vector<double> cum(mesh.face_count());
  double acc = 0;
  for (size_t f = 0; f < mesh.face_count(); ++f) {
    acc += face_area(mesh, int(f));
    cum[f] = acc;
  }
  return cum;
}

// Half uniform in the unit ball, half near-surface (Gaussian jitter, sigma
// 0.02 normalized units); all labeled by the oracle.
inline std::vector<SdfSample> sample_sdf_queries(const SdfOracle& oracle, size_t n,
                                                 uint64_t seed, double near_sigma = 0.02) {
  if (n < 1) throw std::invalid_argument("sample_sdf_queries: n must be >= 1");
  Rng rng = make_rng(seed ^ 0x5df5df5dull);
  auto cum = cumulative_face_areas(oracle.mesh());
  std::vector<SdfSample> out;
  out.reserve(n);
  size_t n_uniform = n / 2;
  for (size_t i = 0; i < n; ++i) {
    Vec3 q;
    if (i < n_uniform) {
      q = rng.in_unit_ball();
    } else {
      q = sample_surface_point(oracle.mesh(), cum, rng);
      q += Vec3{rng.normal(0, near_sigma), rng.normal(0, near_sigma), rng.normal(0, near_sigma)};
    }
    out.push_back({q, float(oracle(q))});
  }
  return out;
}

// --------------------------------------------------------------------------
// NGFV volume: signed distances on a regular grid spanning [-1,1]^3
// --------------------------------------------------------------------------

struct SdfGrid {
  uint32_t nx = 0, ny = 0, nz = 0;
  std::vector<float> values;  // x-fastest order

  float at(uint32_t x, uint32_t y, uint32_t z) const {
    return values[(size_t(z) * ny + y) * nx + x];
  }
};

inline SdfGrid export_sdf_grid(const std::function<double(Vec3)>& field, uint32_t resolution,
                               size_t mem_cap = memory_cap_bytes()) {
  if (resolution < 2) throw std::invalid_argument("export_sdf_grid: resolution must be >= 2");
  size_t total = size_t(resolution) * resolution * resolution;
  if (total * sizeof(float) > mem_cap)
    throw std::runtime_error("export_sdf_grid: " + std::to_string(resolution) +
                             "^3 grid exceeds the memory cap (" +
                             std::to_string(mem_cap / (1024 * 1024)) + " MB)");
  SdfGrid grid;
  grid.nx = grid.ny = grid.nz = resolution;
  grid.values.resize(total);
  double step = 2.0 / double(resolution - 1);
  size_t i = 0;
  for (uint32_t z = 0; z < resolution; ++z)
    for (uint32_t y = 0; y < resolution; ++y)
      for (uint32_t x = 0; x < resolution; ++x)
        grid.values[i++] =
            float(field({-1.0 + step * x, -1.0 + step * y, -1.0 + step * z}));
  return grid;
}

inline void save_sdf_grid(const SdfGrid& grid, const std::string& path) {
  auto os = io::open_out(path);
  io::write_magic(os, "NGFV");
  io::write_pod(os, grid.nx);
  io::write_pod(os, grid.ny);
  io::write_pod(os, grid.nz);
  io::write_bytes(os, grid.values.data(), grid.values.size() * sizeof(float));
  if (!os) throw std::runtime_error("save_sdf_grid: write failed: " + path);
}

inline SdfGrid load_sdf_grid(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, "NGFV", path);
  SdfGrid grid;
  grid.nx = io::read_pod<uint32_t>(is);
  grid.ny = io::read_pod<uint32_t>(is);
  grid.nz = io::read_pod<uint32_t>(is);
  grid.values.resize(size_t(grid.nx) * grid.ny * grid.nz);
  io::read_bytes(is, grid.values.data(), grid.values.size() * sizeof(float));
  return grid;
}

// --------------------------------------------------------------------------
// NGFS sample cache (written by `prepare`, optionally consumed by training)
// --------------------------------------------------------------------------

inline void save_sdf_samples(const std::vector<SdfSample>& samples, const std::string& path) {
  auto os = io::open_out(path);
  io::write_magic(os, "NGFS");
  io::write_pod<uint64_t>(os, samples.size());
  for (const auto& s : samples) {
    float row[4] = {float(s.position.x), float(s.position.y), float(s.position.z),
                    s.signed_distance};
    io::write_bytes(os, row, sizeof(row));
  }
  if (!os) throw std::runtime_error("save_sdf_samples: write failed: " + path);
}

inline std::vector<SdfSample> load_sdf_samples(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, "NGFS", path);
  uint64_t n = io::read_pod<uint64_t>(is);
  std::vector<SdfSample> out(n);
  for (auto& s : out) {
    float row[4];
    io::read_bytes(is, row, sizeof(row));
    s.position = {row[0], row[1], row[2]};
    s.signed_distance = row[3];
  }
  return out;
}

}  // namespace neurogf
