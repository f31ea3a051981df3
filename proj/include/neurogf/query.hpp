#pragma once

#include "neurogf/model.hpp"
#include "neurogf/sdf.hpp"

namespace neurogf {

// Online query answering against a trained model. All queries are batched
// through the same row-independent kernels, so batched and one-at-a-time
// evaluation agree bitwise. Reentrant: const model, no query-time state.
class QueryEngine {
 public:
  explicit QueryEngine(NeuroGFModel model, std::optional<NormTransform> transform = {})
      : model_(std::move(model)), transform_(transform) {}

  const NeuroGFModel& model() const { return model_; }

  Vec3 to_normalized(Vec3 q) const { return transform_ ? transform_->to_normalized(q) : q; }

  // geodesic distance between two query points (normalized units); self-pairs
  // return the model's self-pair constant and can be flagged by the caller
  float query_p2p(Vec3 qs, Vec3 qt, bool* self_pair = nullptr) const {
    if (self_pair) *self_pair = to_normalized(qs) == to_normalized(qt);
    return query_ssad(qs, {qt})[0];
  }

  std::vector<float> query_ssad(Vec3 qs, const std::vector<Vec3>& targets) const {
    if (targets.empty()) throw std::invalid_argument("query_ssad: empty target list");
    NoGradGuard ng;
    TensorPtr es = embed_one(qs);
    std::vector<float> out(targets.size());
    constexpr size_t kChunk = 8192;
    for (size_t begin = 0; begin < targets.size(); begin += kChunk) {
      size_t n = std::min(kChunk, targets.size() - begin);
      TensorPtr et = embed_points(targets, begin, n);
      TensorPtr es_rep = ops::repeat_rows(es, int(n));
      TensorPtr d = model_.predict_gdist(es_rep, et);
      std::memcpy(out.data() + begin, d->data(), n * sizeof(float));
    }
    return out;
  }

  // per-target minimum over per-source SSAD fields
  std::vector<float> query_msad(const std::vector<Vec3>& sources,
                                const std::vector<Vec3>& targets) const {
    if (sources.empty()) throw std::invalid_argument("query_msad: empty source list");
    std::vector<float> best;
    for (const Vec3& s : sources) {
      auto d = query_ssad(s, targets);
      if (best.empty()) {
        best = std::move(d);
      } else {
        for (size_t i = 0; i < best.size(); ++i) best[i] = std::min(best[i], d[i]);
      }
    }
    return best;
  }

  // shortest path as M ordered points (normalized coordinates). M is a free
  // inference-time knob. pin_endpoints replaces the first/last points with
  // the queries for consumers that need exact endpoints.
  std::vector<Vec3> query_path(Vec3 qs, Vec3 qt, int M, bool pin_endpoints = false) const {
    if (M < 2) throw std::invalid_argument("query_path: M must be >= 2");
    NoGradGuard ng;
    Vec3 ns = to_normalized(qs), nt = to_normalized(qt);
    auto src = Tensor::constant(1, 3);
    auto tgt = Tensor::constant(1, 3);
    for (int c = 0; c < 3; ++c) {
      src->val[c] = float(ns[c]);
      tgt->val[c] = float(nt[c]);
    }
    TensorPtr es = model_.embed_points(src);
    TensorPtr et = model_.embed_points(tgt);
    TensorPtr curve = model_.predict_path(es, et, sample_line_primitive(src, tgt, M), M);
    std::vector<Vec3> out(M);
    for (int m = 0; m < M; ++m)
      out[m] = {curve->val[m * 3], curve->val[m * 3 + 1], curve->val[m * 3 + 2]};
    if (pin_endpoints) {
      out.front() = ns;
      out.back() = nt;
    }
    return out;
  }

 private:
  TensorPtr embed_one(Vec3 q) const {
    Vec3 n = to_normalized(q);
    auto t = Tensor::constant(1, 3);
    for (int c = 0; c < 3; ++c) t->val[c] = float(n[c]);
    return model_.embed_points(t);
  }

  TensorPtr embed_points(const std::vector<Vec3>& pts, size_t begin, size_t n) const {
    auto t = Tensor::constant(int(n), 3);
    for (size_t i = 0; i < n; ++i) {
      Vec3 v = to_normalized(pts[begin + i]);
      t->val[i * 3 + 0] = float(v.x);
      t->val[i * 3 + 1] = float(v.y);
      t->val[i * 3 + 2] = float(v.z);
    }
    return model_.embed_points(t);
  }

  NeuroGFModel model_;
  std::optional<NormTransform> transform_;
};

// Replace every curve point with its exact closest point on the surface.
inline std::vector<Vec3> project_path(const BvhTree& bvh, const std::vector<Vec3>& curve) {
  std::vector<Vec3> out;
  out.reserve(curve.size());
  for (const Vec3& p : curve) out.push_back(bvh.closest(p).point);
  return out;
}

// queries whose oracle |SDF| exceeds the threshold are flagged as off-surface
inline std::vector<bool> offsurface_flags(const SdfOracle& oracle, const std::vector<Vec3>& pts,
                                          double threshold = 0.05) {
  std::vector<bool> flags(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) flags[i] = oracle.unsigned_distance(pts[i]) > threshold;
  return flags;
}

// OBJ polyline export (v records + one l record)
inline void save_path_obj(const std::vector<Vec3>& curve, const std::string& path) {
  auto os = io::open_out(path, false);
  os.precision(9);
  for (const Vec3& p : curve) os << "v " << p.x << " " << p.y << " " << p.z << "\n";
  os << "l";
  for (size_t i = 1; i <= curve.size(); ++i) os << " " << i;
  os << "\n";
}

inline void save_path_csv(const std::vector<Vec3>& curve, const std::string& path) {
  auto os = io::open_out(path, false);
  os.precision(9);
  os << "x,y,z\n";
  for (const Vec3& p : curve) os << p.x << "," << p.y << "," << p.z << "\n";
}

}  // namespace neurogf
