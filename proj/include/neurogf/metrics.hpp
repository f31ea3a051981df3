#pragma once

#include <iomanip>

#include "neurogf/steiner.hpp"

namespace neurogf {

// mean relative error |d - d~| / d~ * 100%; pairs with gt <= 0 are excluded
inline double mre(const std::vector<double>& pred, const std::vector<double>& gt,
                  size_t* excluded = nullptr) {
  if (pred.size() != gt.size()) throw std::invalid_argument("mre: size mismatch");
  double acc = 0;
  size_t n = 0, skip = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (gt[i] <= 0) {
      ++skip;
      continue;
    }
    acc += std::abs(pred[i] - gt[i]) / gt[i];
    ++n;
  }
  if (excluded) *excluded = skip;
  if (n == 0) throw std::invalid_argument("mre: no pairs with positive ground truth");
  return acc / double(n) * 100.0;
}

// Symmetric Chamfer with L1 point metric over curves arclength-resampled to
// a fixed 1024 points ("around 1K" pinned for determinism).
constexpr int kChamferSamples = 1024;

inline double chamfer_l1(const std::vector<Vec3>& curve_a, const std::vector<Vec3>& curve_b,
                         int samples = kChamferSamples) {
  if (curve_a.size() < 2 || curve_b.size() < 2)
    throw std::invalid_argument("chamfer_l1: curves need >= 2 points");
  auto a = resample_path(curve_a, samples);
  auto b = resample_path(curve_b, samples);
  auto one_way = [&](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double acc = 0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) {
        double d = std::abs(p.x - q.x) + std::abs(p.y - q.y) + std::abs(p.z - q.z);
        if (d < best) best = d;
      }
      acc += best;
    }
    return acc / double(from.size());
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

inline std::vector<Vec3> to_polyline(const std::vector<std::array<float, 3>>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p[0], p[1], p[2]});
  return out;
}

// ---------------------------------------------------------------------------
// Per-vertex error map: relative error vs an oracle distance field, written
// as the PLY `quality` property.
// ---------------------------------------------------------------------------

struct ErrorMapStats {
  double mean = 0;
  double max = 0;
  size_t excluded = 0;  // zero-gt vertices (the source itself)
};

inline ErrorMapStats export_error_map(const TriangleMesh& mesh,
                                      const std::vector<double>& predicted,
                                      const std::vector<double>& oracle,
                                      const std::string& path) {
  if (predicted.size() != mesh.vertex_count() || oracle.size() != mesh.vertex_count())
    throw std::invalid_argument("export_error_map: field size mismatch");
  std::vector<float> quality(mesh.vertex_count(), 0.0f);
  ErrorMapStats st;
  size_t n = 0;
  for (size_t i = 0; i < quality.size(); ++i) {
    if (oracle[i] <= 0 || !std::isfinite(oracle[i])) {
      ++st.excluded;
      continue;
    }
    double rel = std::abs(predicted[i] - oracle[i]) / oracle[i];
    quality[i] = float(rel);
    st.mean += rel;
    st.max = std::max(st.max, rel);
    ++n;
  }
  st.mean = n ? st.mean / double(n) : 0.0;
  save_ply(mesh, path, &quality);
  return st;
}

// ---------------------------------------------------------------------------
// Result table (text or CSV)
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string name;
  size_t vertices = 0;
  double tau = 0;
  double mre_percent = 0;
  double chamfer = 0;         // raw value; printed as x1e-2
  double ssad_ms = 0;         // batched SSAD wall time per 1K targets
  std::string note;
};

inline std::string render_report(const std::vector<ReportRow>& rows, bool csv = false) {
  std::ostringstream os;
  if (csv) {
    os << "mesh,vertices,tau,mre_percent,chamfer_l1,ssad_ms_per_1k,note\n";
    for (const auto& r : rows)
      os << r.name << "," << r.vertices << "," << r.tau << "," << r.mre_percent << ","
         << r.chamfer << "," << r.ssad_ms << "," << r.note << "\n";
    return os.str();
  }
  os << std::left << std::setw(16) << "mesh" << std::right << std::setw(10) << "|V|"
     << std::setw(8) << "tau" << std::setw(10) << "MRE(%)" << std::setw(14) << "CD(x1e-2)"
     << std::setw(14) << "SSAD ms/1K" << "  note\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(16) << r.name << std::right << std::setw(10) << r.vertices
       << std::setw(8) << std::fixed << std::setprecision(2) << r.tau << std::setw(10)
       << std::setprecision(3) << r.mre_percent << std::setw(14) << std::setprecision(3)
       << r.chamfer * 100.0 << std::setw(14) << std::setprecision(2) << r.ssad_ms << "  "
       << r.note << "\n";
  }
  return os.str();
}

}  // namespace neurogf
