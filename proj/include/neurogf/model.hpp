#pragma once

#include "neurogf/optim.hpp"

namespace neurogf {

// ---------------------------------------------------------------------------
// NeuroGF model: a shared query-point embedding followed by three independent
// branches (geodesic distance, shortest path, signed distance), plus an
// optional frozen SDF network used by the curve-distribution loss.
// ---------------------------------------------------------------------------

struct Mlp {
  std::vector<TensorPtr> W, b;  // W[i]: (out x in), b[i]: (1 x out)

  size_t layer_count() const { return W.size(); }

  void add_layer(int in, int out, bool frozen = false) {
    auto w = frozen ? Tensor::create(out, in) : Tensor::param(out, in);
    auto bias = frozen ? Tensor::create(1, out) : Tensor::param(1, out);
    if (frozen) {
      w->grad.assign(w->size(), 0.0f);
      bias->grad.assign(bias->size(), 0.0f);
    }
    W.push_back(w);
    b.push_back(bias);
  }

  // ReLU between layers, final layer linear
  TensorPtr forward(TensorPtr x) const {
    for (size_t i = 0; i < W.size(); ++i) {
      x = ops::linear(x, W[i], b[i]);
      if (i + 1 < W.size()) x = ops::relu(x);
    }
    return x;
  }

  void init_kaiming(Rng& rng) {
    for (size_t i = 0; i < W.size(); ++i) {
      int fan_in = W[i]->cols;
      float bound = std::sqrt(6.0f / float(fan_in));
      for (auto& v : W[i]->val) v = float(rng.uniform(-bound, bound));
      std::fill(b[i]->val.begin(), b[i]->val.end(), 0.0f);
    }
  }

  size_t param_count() const {
    size_t n = 0;
    for (size_t i = 0; i < W.size(); ++i) n += W[i]->size() + b[i]->size();
    return n;
  }

  void collect(std::vector<TensorPtr>& out) const {
    for (size_t i = 0; i < W.size(); ++i) {
      out.push_back(W[i]);
      out.push_back(b[i]);
    }
  }
};

// Independent SDF network (embedding stack + sdist head). Used both as the
// pre-trained frozen reference and as the trainee during pre-training.
struct PhiModel {
  int de = 0;
  Mlp embed, sdist;
  bool frozen = false;

  static PhiModel make(int de, bool frozen) {
    if (de % 4 != 0 || de < 4) throw std::invalid_argument("PhiModel: D_e must be a multiple of 4");
    PhiModel m;
    m.de = de;
    m.frozen = frozen;
    m.embed.add_layer(3, de / 4, frozen);
    m.embed.add_layer(de / 4, de / 2, frozen);
    m.embed.add_layer(de / 2, de, frozen);
    m.sdist.add_layer(de, de / 4, frozen);
    m.sdist.add_layer(de / 4, 64, frozen);
    m.sdist.add_layer(64, 1, frozen);
    return m;
  }

  void init(uint64_t seed) {
    Rng rng = make_rng(seed ^ 0x9910bull);
    embed.init_kaiming(rng);
    sdist.init_kaiming(rng);
  }

  TensorPtr forward(const TensorPtr& q) const { return sdist.forward(embed.forward(q)); }

  std::vector<TensorPtr> params() const {
    std::vector<TensorPtr> out;
    embed.collect(out);
    sdist.collect(out);
    return out;
  }

  uint64_t param_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : params()) h = fnv1a(p->val.data(), p->val.size() * sizeof(float), h);
    return h;
  }
};

struct NeuroGFModel {
  int de = 0;
  Mlp embed;   // 3 -> de/4 -> de/2 -> de
  Mlp gdist;   // de -> de/4 -> 64 -> 1 (softplus head applied in predict)
  TensorPtr hbar_w, hbar_b;  // 2*de -> de, single FC layer
  Mlp spath;   // de+3 -> 128 -> 64 -> 32 -> 3
  Mlp sdist;   // de -> de/4 -> 64 -> 1
  std::shared_ptr<PhiModel> frozen_phi;  // optional

  static NeuroGFModel make(int de) {
    if (de % 4 != 0 || de < 4)
      throw std::invalid_argument("NeuroGFModel: D_e must be a multiple of 4");
    NeuroGFModel m;
    m.de = de;
    m.embed.add_layer(3, de / 4);
    m.embed.add_layer(de / 4, de / 2);
    m.embed.add_layer(de / 2, de);
    m.gdist.add_layer(de, de / 4);
    m.gdist.add_layer(de / 4, 64);
    m.gdist.add_layer(64, 1);
    m.hbar_w = Tensor::param(de, 2 * de);
    m.hbar_b = Tensor::param(1, de);
    m.spath.add_layer(de + 3, 128);
    m.spath.add_layer(128, 64);
    m.spath.add_layer(64, 32);
    m.spath.add_layer(32, 3);
    m.sdist.add_layer(de, de / 4);
    m.sdist.add_layer(de / 4, 64);
    m.sdist.add_layer(64, 1);
    return m;
  }

  void init(uint64_t seed) {
    Rng rng = make_rng(seed);
    embed.init_kaiming(rng);
    gdist.init_kaiming(rng);
    {
      int fan_in = hbar_w->cols;
      float bound = std::sqrt(6.0f / float(fan_in));
      for (auto& v : hbar_w->val) v = float(rng.uniform(-bound, bound));
      std::fill(hbar_b->val.begin(), hbar_b->val.end(), 0.0f);
    }
    spath.init_kaiming(rng);
    sdist.init_kaiming(rng);
    // zero-init the last path layer: untrained curves collapse to the origin
    // instead of exploding, which keeps early training stable
    std::fill(spath.W.back()->val.begin(), spath.W.back()->val.end(), 0.0f);
    std::fill(spath.b.back()->val.begin(), spath.b.back()->val.end(), 0.0f);
  }

  std::vector<TensorPtr> params() const {
    std::vector<TensorPtr> out;
    embed.collect(out);
    gdist.collect(out);
    out.push_back(hbar_w);
    out.push_back(hbar_b);
    spath.collect(out);
    sdist.collect(out);
    return out;
  }

  size_t param_count() const {
    size_t n = embed.param_count() + gdist.param_count() + spath.param_count() +
               sdist.param_count();
    return n + hbar_w->size() + hbar_b->size();
  }

  static size_t expected_param_count(int de) {
    auto fc = [](size_t in, size_t out) { return in * out + out; };
    size_t q = size_t(de) / 4, h = size_t(de) / 2, d = size_t(de);
    return fc(3, q) + fc(q, h) + fc(h, d) +           // embedding stack
           fc(d, q) + fc(q, 64) + fc(64, 1) +         // B_gdist
           fc(2 * d, d) +                             // hbar
           fc(d + 3, 128) + fc(128, 64) + fc(64, 32) + fc(32, 3) +  // B_spath
           fc(d, q) + fc(q, 64) + fc(64, 1);          // B'_sdist
  }

  uint64_t param_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : params()) h = fnv1a(p->val.data(), p->val.size() * sizeof(float), h);
    return h;
  }

  // ---- forward pieces (graph-recording; wrap in NoGradGuard for inference) ----

  TensorPtr embed_points(const TensorPtr& pts) const { return embed.forward(pts); }

  // d = softplus(B_gdist(|e_s - e_t|)); symmetric in its arguments by construction
  TensorPtr predict_gdist(const TensorPtr& es, const TensorPtr& et) const {
    return ops::softplus(gdist.forward(ops::abs_val(ops::sub(es, et))));
  }

  TensorPtr guidance(const TensorPtr& es, const TensorPtr& et) const {
    return ops::linear(ops::concat(es, et), hbar_w, hbar_b);
  }

  // line: (B*M x 3) primitive; returns deformed curve points (B*M x 3)
  TensorPtr predict_path(const TensorPtr& es, const TensorPtr& et, const TensorPtr& line,
                         int M) const {
    TensorPtr g = guidance(es, et);
    TensorPtr gg = ops::repeat_rows(g, M);
    return spath.forward(ops::concat(gg, line));
  }

  TensorPtr predict_sdf(const TensorPtr& e) const { return sdist.forward(e); }
};

// Straight-segment primitive between query pairs, f32, sample m at fraction
// m/(M-1). src/tgt: (B x 3) -> (B*M x 3).
inline TensorPtr sample_line_primitive(const TensorPtr& src, const TensorPtr& tgt, int M) {
  if (M < 2) throw std::invalid_argument("sample_line_primitive: M must be >= 2");
  if (src->rows != tgt->rows || src->cols != 3 || tgt->cols != 3)
    throw std::invalid_argument("sample_line_primitive: expected matching (B x 3) inputs");
  int B = src->rows;
  auto line = Tensor::constant(B * M, 3);
  for (int b = 0; b < B; ++b) {
    const float* s = src->data() + size_t(b) * 3;
    const float* t = tgt->data() + size_t(b) * 3;
    for (int m = 0; m < M; ++m) {
      float r = float(m) / float(M - 1);
      float* p = line->data() + (size_t(b) * M + m) * 3;
      for (int c = 0; c < 3; ++c) p[c] = s[c] + (t[c] - s[c]) * r;
    }
  }
  return line;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossWeights {
  float gdist = 1.0f, spath = 1.0f, sdist = 1.0f, ccl = 1.0f, dcp = 1.0f;
};

struct LossFlags {
  bool gdist = true, spath = true, sdist = true, ccl = true, dcp = true;

  bool any() const { return gdist || spath || sdist || ccl || dcp; }
};

struct LossValues {
  double gdist = 0, spath = 0, sdist = 0, ccl = 0, dcp = 0;
  double total = 0;
};

// One uniform-M group of path supervision
struct PathBatch {
  TensorPtr src, tgt;       // (B x 3)
  TensorPtr gt_curve;       // (B*M x 3)
  TensorPtr gt_length;      // (B x 1), ground-truth chord-sum lengths
  int count = 0;
  int m = 0;
};

struct TrainingBatch {
  TensorPtr gd_src, gd_tgt;  // (B x 3)
  TensorPtr gd_gt;           // (B x 1)
  PathBatch paths_long, paths_short;
  TensorPtr sdf_q;           // (B x 3)
  TensorPtr sdf_gt;          // (B x 1)
};

// Total = sum of enabled weighted terms. Path-dependent terms average over
// the long and short groups weighted by sample count. Gradients flow into
// the model only; the frozen phi network contributes values, never updates.
inline std::pair<TensorPtr, LossValues> compute_losses(const NeuroGFModel& model,
                                                       const TrainingBatch& batch,
                                                       const LossWeights& w,
                                                       const LossFlags& flags) {
  if (!flags.any()) throw std::invalid_argument("compute_losses: all loss terms disabled");
  if (flags.dcp && !model.frozen_phi)
    throw std::invalid_argument("compute_losses: dcp loss requires a frozen phi network");

  LossValues vals;
  TensorPtr total;
  auto accumulate = [&](TensorPtr term, float weight) {
    TensorPtr weighted = ops::scale(term, weight);
    total = total ? ops::add(total, weighted) : weighted;
  };

  if (flags.gdist) {
    if (!batch.gd_src) throw std::invalid_argument("compute_losses: gdist batch missing");
    TensorPtr es = model.embed_points(batch.gd_src);
    TensorPtr et = model.embed_points(batch.gd_tgt);
    TensorPtr d = model.predict_gdist(es, et);
    TensorPtr term = ops::l1_loss(d, batch.gd_gt);
    vals.gdist = term->scalar();
    accumulate(term, w.gdist);
  }

  if (flags.spath || flags.ccl || flags.dcp) {
    int n_total = batch.paths_long.count + batch.paths_short.count;
    if (n_total == 0) throw std::invalid_argument("compute_losses: path batch missing");
    TensorPtr sp_term, ccl_term, dcp_term;
    for (const PathBatch* g : {&batch.paths_long, &batch.paths_short}) {
      if (g->count == 0) continue;
      float frac = float(g->count) / float(n_total);
      TensorPtr es = model.embed_points(g->src);
      TensorPtr et = model.embed_points(g->tgt);
      TensorPtr line = sample_line_primitive(g->src, g->tgt, g->m);
      TensorPtr curve = model.predict_path(es, et, line, g->m);
      if (flags.spath) {
        TensorPtr t = ops::scale(ops::l1_loss(curve, g->gt_curve), frac);
        sp_term = sp_term ? ops::add(sp_term, t) : t;
      }
      if (flags.ccl) {
        TensorPtr len = ops::curve_length(curve, g->count, g->m);
        TensorPtr t = ops::scale(ops::mean_all(ops::abs_val(ops::sub(len, g->gt_length))), frac);
        ccl_term = ccl_term ? ops::add(ccl_term, t) : t;
      }
      if (flags.dcp) {
        TensorPtr s = model.frozen_phi->forward(curve);
        TensorPtr t = ops::scale(ops::mean_all(ops::abs_val(s)), frac);
        dcp_term = dcp_term ? ops::add(dcp_term, t) : t;
      }
    }
    if (sp_term) {
      vals.spath = sp_term->scalar();
      accumulate(sp_term, w.spath);
    }
    if (ccl_term) {
      vals.ccl = ccl_term->scalar();
      accumulate(ccl_term, w.ccl);
    }
    if (dcp_term) {
      vals.dcp = dcp_term->scalar();
      accumulate(dcp_term, w.dcp);
    }
  }

  if (flags.sdist) {
    if (!batch.sdf_q) throw std::invalid_argument("compute_losses: sdf batch missing");
    TensorPtr e = model.embed_points(batch.sdf_q);
    TensorPtr s = model.predict_sdf(e);
    TensorPtr term = ops::l1_loss(s, batch.sdf_gt);
    vals.sdist = term->scalar();
    accumulate(term, w.sdist);
  }

  vals.total = total->scalar();
  return {total, vals};
}

// ---------------------------------------------------------------------------
// NGFC checkpoint container
// ---------------------------------------------------------------------------

namespace ckpt {

constexpr uint32_t kFlagGdist = 1u << 0;
constexpr uint32_t kFlagSpath = 1u << 1;
constexpr uint32_t kFlagSdist = 1u << 2;
constexpr uint32_t kFlagPhi = 1u << 3;
constexpr uint32_t kTagMain = 0x4E49414Du;  // "MAIN"
constexpr uint32_t kTagPhi = 0x49485046u;   // "FPHI"

inline void write_layer(std::ostream& os, const TensorPtr& W, const TensorPtr& b) {
  io::write_pod<uint32_t>(os, uint32_t(W->rows));
  io::write_pod<uint32_t>(os, uint32_t(W->cols));
  io::write_bytes(os, W->val.data(), W->size() * sizeof(float));
  io::write_bytes(os, b->val.data(), b->size() * sizeof(float));
}

inline void read_layer(std::istream& is, const TensorPtr& W, const TensorPtr& b,
                       const std::string& path) {
  uint32_t rows = io::read_pod<uint32_t>(is);
  uint32_t cols = io::read_pod<uint32_t>(is);
  if (int(rows) != W->rows || int(cols) != W->cols)
    throw std::runtime_error(path + ": layer shape mismatch (" + std::to_string(rows) + "x" +
                             std::to_string(cols) + " vs expected " + std::to_string(W->rows) +
                             "x" + std::to_string(W->cols) + ")");
  io::read_bytes(is, W->val.data(), W->size() * sizeof(float));
  io::read_bytes(is, b->val.data(), b->size() * sizeof(float));
}

}  // namespace ckpt

inline void save_checkpoint(const NeuroGFModel& model, const std::string& path) {
  auto os = io::open_out(path);
  io::write_magic(os, "NGFC");
  io::write_pod<uint32_t>(os, 1);  // version
  io::write_pod<uint32_t>(os, uint32_t(model.de));
  uint32_t flags = ckpt::kFlagGdist | ckpt::kFlagSpath | ckpt::kFlagSdist;
  if (model.frozen_phi) flags |= ckpt::kFlagPhi;
  io::write_pod(os, flags);

  auto write_mlp = [&](const Mlp& m) {
    for (size_t i = 0; i < m.layer_count(); ++i) ckpt::write_layer(os, m.W[i], m.b[i]);
  };
  io::write_pod(os, ckpt::kTagMain);
  io::write_pod<uint32_t>(os, 14);  // layer count
  write_mlp(model.embed);
  write_mlp(model.gdist);
  ckpt::write_layer(os, model.hbar_w, model.hbar_b);
  write_mlp(model.spath);
  write_mlp(model.sdist);

  if (model.frozen_phi) {
    io::write_pod(os, ckpt::kTagPhi);
    io::write_pod<uint32_t>(os, 6);
    write_mlp(model.frozen_phi->embed);
    write_mlp(model.frozen_phi->sdist);
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

inline NeuroGFModel load_checkpoint(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, "NGFC", path);
  uint32_t version = io::read_pod<uint32_t>(is);
  if (version != 1)
    throw std::runtime_error(path + ": unsupported NGFC version " + std::to_string(version));
  uint32_t de = io::read_pod<uint32_t>(is);
  uint32_t flags = io::read_pod<uint32_t>(is);

  NeuroGFModel model = NeuroGFModel::make(int(de));
  auto read_mlp = [&](const Mlp& m) {
    for (size_t i = 0; i < m.layer_count(); ++i) ckpt::read_layer(is, m.W[i], m.b[i], path);
  };
  uint32_t tag = io::read_pod<uint32_t>(is);
  if (tag != ckpt::kTagMain) throw std::runtime_error(path + ": expected MAIN section");
  uint32_t nlayers = io::read_pod<uint32_t>(is);
  if (nlayers != 14)
    throw std::runtime_error(path + ": unexpected MAIN layer count " + std::to_string(nlayers));
  read_mlp(model.embed);
  read_mlp(model.gdist);
  ckpt::read_layer(is, model.hbar_w, model.hbar_b, path);
  read_mlp(model.spath);
  read_mlp(model.sdist);

  if (flags & ckpt::kFlagPhi) {
    uint32_t ptag = io::read_pod<uint32_t>(is);
    if (ptag != ckpt::kTagPhi) throw std::runtime_error(path + ": expected FPHI section");
    uint32_t pn = io::read_pod<uint32_t>(is);
    if (pn != 6)
      throw std::runtime_error(path + ": unexpected FPHI layer count " + std::to_string(pn));
    auto phi = std::make_shared<PhiModel>(PhiModel::make(int(de), /*frozen=*/true));
    read_mlp(phi->embed);
    read_mlp(phi->sdist);
    model.frozen_phi = phi;
  }
  return model;
}

inline void save_phi_checkpoint(const PhiModel& phi, const std::string& path) {
  auto os = io::open_out(path);
  io::write_magic(os, "NGFC");
  io::write_pod<uint32_t>(os, 1);
  io::write_pod<uint32_t>(os, uint32_t(phi.de));
  io::write_pod<uint32_t>(os, ckpt::kFlagPhi);
  io::write_pod(os, ckpt::kTagPhi);
  io::write_pod<uint32_t>(os, 6);
  for (size_t i = 0; i < phi.embed.layer_count(); ++i)
    ckpt::write_layer(os, phi.embed.W[i], phi.embed.b[i]);
  for (size_t i = 0; i < phi.sdist.layer_count(); ++i)
    ckpt::write_layer(os, phi.sdist.W[i], phi.sdist.b[i]);
  if (!os) throw std::runtime_error("save_phi_checkpoint: write failed: " + path);
}

inline PhiModel load_phi_checkpoint(const std::string& path, bool frozen = true) {
  auto is = io::open_in(path);
  io::expect_magic(is, "NGFC", path);
  uint32_t version = io::read_pod<uint32_t>(is);
  if (version != 1)
    throw std::runtime_error(path + ": unsupported NGFC version " + std::to_string(version));
  uint32_t de = io::read_pod<uint32_t>(is);
  uint32_t flags = io::read_pod<uint32_t>(is);
  if (!(flags & ckpt::kFlagPhi)) throw std::runtime_error(path + ": no phi section present");
  // skip MAIN section if this is a full checkpoint
  uint32_t tag = io::read_pod<uint32_t>(is);
  PhiModel phi = PhiModel::make(int(de), frozen);
  if (tag == ckpt::kTagMain) {
    uint32_t nlayers = io::read_pod<uint32_t>(is);
    for (uint32_t i = 0; i < nlayers; ++i) {
      uint32_t rows = io::read_pod<uint32_t>(is);
      uint32_t cols = io::read_pod<uint32_t>(is);
      is.seekg(std::streamoff(sizeof(float) * (size_t(rows) * cols + rows)), std::ios::cur);
    }
    tag = io::read_pod<uint32_t>(is);
  }
  if (tag != ckpt::kTagPhi) throw std::runtime_error(path + ": expected FPHI section");
  uint32_t pn = io::read_pod<uint32_t>(is);
  if (pn != 6) throw std::runtime_error(path + ": unexpected FPHI layer count");
  for (size_t i = 0; i < phi.embed.layer_count(); ++i)
    ckpt::read_layer(is, phi.embed.W[i], phi.embed.b[i], path);
  for (size_t i = 0; i < phi.sdist.layer_count(); ++i)
    ckpt::read_layer(is, phi.sdist.W[i], phi.sdist.b[i], path);
  return phi;
}

}  // namespace neurogf
