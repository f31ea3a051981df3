#pragma once

#include <atomic>
#include <thread>

#include "neurogf/steiner.hpp"

namespace neurogf {

// One ground-truth sample. path_flag: 0 = distance only, 1 = long path
// (m_long points), 2 = short path (m_short points). For path records the
// stored distance is the arclength of the stored resampled curve, so the
// record is self-consistent at f32 precision.
struct GeodesicRecord {
  uint32_t source = 0;
  uint32_t target = 0;
  float distance = 0;
  uint8_t path_flag = 0;
  std::vector<std::array<float, 3>> path;

  bool has_path() const { return path_flag != 0; }
};

struct Dataset {
  uint32_t m_long = 128;
  uint32_t m_short = 32;
  std::vector<GeodesicRecord> records;

  size_t path_record_count() const {
    size_t n = 0;
    for (const auto& r : records) n += r.has_path();
    return n;
  }
};

struct DatasetOptions {
  size_t n_sources = 1024;
  size_t gdist_targets_per_source = 4096;
  size_t path_targets_per_source = 2048;
  int steiner_k = 4;
  uint64_t seed = 0;
  size_t training_pool = 20000;  // farthest-point-sampled vertex pool
  double long_threshold = 0.5;   // normalized units; >= threshold uses m_long
  uint32_t m_long = 128;
  uint32_t m_short = 32;
  int threads = 0;  // 0 = NEUROGF_THREADS / hardware
};

struct DatasetStats {
  size_t skipped_unreachable = 0;
  size_t pool_size = 0;
  size_t sources = 0;
};

namespace detail {

inline float cast_up(double d) {
  // round toward +inf so stored distances never fall below the exact value
  float f = float(d);
  if (double(f) < d) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

inline std::array<float, 3> to_f32(Vec3 v) {
  return {float(v.x), float(v.y), float(v.z)};
}

// distinct draws from [0, n) excluding `exclude`, deterministic under rng
inline std::vector<int> draw_distinct(Rng& rng, size_t n, size_t count, int exclude) {
  std::vector<int> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = int(i);
  if (exclude >= 0 && size_t(exclude) < n) {
    std::swap(idx[exclude], idx[n - 1]);
    idx.pop_back();
  }
  count = std::min(count, idx.size());
  for (size_t i = 0; i < count; ++i) {
    size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

}  // namespace detail

inline GeodesicRecord make_path_record(const SteinerGraph& graph, const SsadResult& ssad,
                                       int source, int target, const DatasetOptions& opt) {
  GeodesicRecord rec;
  rec.source = uint32_t(source);
  rec.target = uint32_t(target);
  auto poly = extract_path(graph, ssad, target);
  bool is_long = ssad.distance[target] >= opt.long_threshold;
  rec.path_flag = is_long ? 1 : 2;
  uint32_t m = is_long ? opt.m_long : opt.m_short;
  auto pts = resample_path(poly, int(m));
  rec.path.reserve(m);
  for (const Vec3& p : pts) rec.path.push_back(detail::to_f32(p));
  // distance = arclength of the stored f32 curve (double accumulation)
  double s = 0;
  for (size_t i = 1; i < rec.path.size(); ++i) {
    double dx = double(rec.path[i][0]) - rec.path[i - 1][0];
    double dy = double(rec.path[i][1]) - rec.path[i - 1][1];
    double dz = double(rec.path[i][2]) - rec.path[i - 1][2];
    s += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  rec.distance = detail::cast_up(s);
  return rec;
}

inline Dataset generate_dataset(const TriangleMesh& mesh, const DatasetOptions& opt,
                                DatasetStats* stats = nullptr) {
  if (opt.n_sources < 1) throw std::invalid_argument("generate_dataset: n_sources must be >= 1");
  Dataset ds;
  ds.m_long = opt.m_long;
  ds.m_short = opt.m_short;

  size_t pool_n = std::min(opt.training_pool, mesh.vertex_count());
  std::vector<int> pool = sample_training_vertices(mesh, pool_n, opt.seed);
  size_t n_sources = std::min(opt.n_sources, pool.size());

  SteinerGraph graph = build_steiner_graph(mesh, opt.steiner_k);

  // sources are the farthest-point prefix of the pool; per-source work is
  // independent and merged in source order
  std::vector<std::vector<GeodesicRecord>> slots(n_sources);
  std::atomic<size_t> skipped{0};
  std::atomic<size_t> next{0};
  Rng base = make_rng(opt.seed);

  auto worker = [&]() {
    for (;;) {
      size_t si = next.fetch_add(1);
      if (si >= n_sources) return;
      int source = pool[si];
      Rng rng = base.fork(0x5eed0000 + si);
      SsadResult ssad = oracle_ssad(graph, source);

      auto targets = detail::draw_distinct(
          rng, pool.size(), opt.gdist_targets_per_source + opt.path_targets_per_source, int(si));
      auto& out = slots[si];
      out.reserve(targets.size());
      for (size_t t = 0; t < targets.size(); ++t) {
        int target = pool[targets[t]];
        if (!std::isfinite(ssad.distance[target])) {
          skipped.fetch_add(1);
          continue;
        }
        if (t < opt.gdist_targets_per_source) {
          GeodesicRecord rec;
          rec.source = uint32_t(source);
          rec.target = uint32_t(target);
          rec.distance = detail::cast_up(ssad.distance[target]);
          out.push_back(std::move(rec));
        } else {
          out.push_back(make_path_record(graph, ssad, source, target, opt));
        }
      }
    }
  };

  int nthreads = opt.threads > 0 ? opt.threads : worker_threads();
  nthreads = int(std::min<size_t>(nthreads, n_sources));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> ts;
    for (int i = 0; i < nthreads; ++i) ts.emplace_back(worker);
    for (auto& t : ts) t.join();
  }

  for (auto& s : slots)
    for (auto& r : s) ds.records.push_back(std::move(r));

  if (stats) {
    stats->skipped_unreachable = skipped.load();
    stats->pool_size = pool.size();
    stats->sources = n_sources;
  }
  return ds;
}

// --------------------------------------------------------------------------
// NGFD binary file
// --------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& path) {
  auto os = io::open_out(path);
  io::write_magic(os, "NGFD");
  io::write_pod<uint32_t>(os, 1);  // version
  io::write_pod<uint64_t>(os, ds.records.size());
  io::write_pod<uint32_t>(os, ds.m_long);
  io::write_pod<uint32_t>(os, ds.m_short);
  for (const auto& r : ds.records) {
    io::write_pod(os, r.source);
    io::write_pod(os, r.target);
    io::write_pod(os, r.distance);
    io::write_pod(os, r.path_flag);
    if (r.path_flag) {
      uint32_t m = r.path_flag == 1 ? ds.m_long : ds.m_short;
      if (r.path.size() != m)
        throw std::runtime_error("save_dataset: record path size inconsistent with flag");
      io::write_bytes(os, r.path.data(), sizeof(float) * 3 * m);
    }
  }
  if (!os) throw std::runtime_error("save_dataset: write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, "NGFD", path);
  uint32_t version = io::read_pod<uint32_t>(is);
  if (version != 1)
    throw std::runtime_error(path + ": unsupported NGFD version " + std::to_string(version));
  uint64_t count = io::read_pod<uint64_t>(is);
  Dataset ds;
  ds.m_long = io::read_pod<uint32_t>(is);
  ds.m_short = io::read_pod<uint32_t>(is);
  ds.records.resize(count);
  for (auto& r : ds.records) {
    r.source = io::read_pod<uint32_t>(is);
    r.target = io::read_pod<uint32_t>(is);
    r.distance = io::read_pod<float>(is);
    r.path_flag = io::read_pod<uint8_t>(is);
    if (r.path_flag > 2)
      throw std::runtime_error(path + ": corrupt record (path flag " +
                               std::to_string(int(r.path_flag)) + ")");
    if (r.path_flag) {
      uint32_t m = r.path_flag == 1 ? ds.m_long : ds.m_short;
      r.path.resize(m);
      io::read_bytes(is, r.path.data(), sizeof(float) * 3 * m);
    }
  }
  return ds;
}

inline void export_dataset_csv(const Dataset& ds, const std::string& path) {
  auto os = io::open_out(path, false);
  os << "source,target,distance,path_flag,path_points\n";
  for (const auto& r : ds.records)
    os << r.source << "," << r.target << "," << r.distance << "," << int(r.path_flag) << ","
       << r.path.size() << "\n";
}

// record sanity used by tests and on-write validation
inline bool validate_record(const TriangleMesh& mesh, const Dataset& ds,
                            const GeodesicRecord& r, std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (r.source >= mesh.vertex_count() || r.target >= mesh.vertex_count())
    return fail("vertex id out of range");
  auto s32 = detail::to_f32(mesh.vertices[r.source]);
  auto t32 = detail::to_f32(mesh.vertices[r.target]);
  if (!r.has_path()) {
    double eu = norm(mesh.vertices[r.source] - mesh.vertices[r.target]);
    if (double(r.distance) < eu - 1e-9) return fail("distance below euclidean bound");
    return true;
  }
  uint32_t m = r.path_flag == 1 ? ds.m_long : ds.m_short;
  if (r.path.size() != m) return fail("path length inconsistent with flag");
  for (int c = 0; c < 3; ++c) {
    if (std::abs(double(r.path.front()[c]) - s32[c]) > 1e-9) return fail("path[0] != source");
    if (std::abs(double(r.path.back()[c]) - t32[c]) > 1e-9) return fail("path[M-1] != target");
  }
  double eu = 0, s = 0;
  for (int c = 0; c < 3; ++c) {
    double d = double(r.path.back()[c]) - r.path.front()[c];
    eu += d * d;
  }
  eu = std::sqrt(eu);
  if (double(r.distance) < eu - 1e-9) return fail("distance below euclidean bound");
  for (size_t i = 1; i < r.path.size(); ++i) {
    double dx = double(r.path[i][0]) - r.path[i - 1][0];
    double dy = double(r.path[i][1]) - r.path[i - 1][1];
    double dz = double(r.path[i][2]) - r.path[i - 1][2];
    s += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  if (s > 0 && std::abs(s - double(r.distance)) / s > 1e-6)
    return fail("path arclength inconsistent with distance");
  return true;
}

}  // namespace neurogf
