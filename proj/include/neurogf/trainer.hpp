#pragma once

#include "neurogf/dataset.hpp"
#include "neurogf/metrics.hpp"
#include "neurogf/model.hpp"
#include "neurogf/sdf.hpp"

namespace neurogf {

struct TrainConfig {
  int epochs = 500;
  int iterations_per_epoch = 200;
  double lr_max = 0.01;
  double lr_min = 0.0001;
  int de = 256;

  // per-epoch pools
  size_t sdf_pool = 30000;
  size_t gdist_pool = 90000;
  size_t path_pool = 20000;

  // minibatch sizes per iteration
  size_t batch_gdist = 4096;
  size_t batch_path = 512;
  size_t batch_sdf = 2048;

  uint32_t m_long = 128;
  uint32_t m_short = 32;
  double long_threshold = 0.5;

  LossWeights weights;
  LossFlags flags;

  uint64_t seed = 0;
  double holdout_fraction = 0.1;
  int phi_epochs = 100;

  // evaluation caps (holdout MRE uses all pairs; chamfer is sampled per epoch)
  size_t eval_paths_per_epoch = 32;

  int threads = 0;  // 0 = NEUROGF_THREADS / hardware; oracle labeling only

  void validate() const {
    if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
    if (iterations_per_epoch < 1) throw std::invalid_argument("config: iterations must be >= 1");
    if (de < 4 || de % 4) throw std::invalid_argument("config: de must be a multiple of 4");
    if (long_threshold <= 0) throw std::invalid_argument("config: long_threshold must be > 0");
    if (!flags.any()) throw std::invalid_argument("config: at least one loss term enabled");
    if (batch_gdist > gdist_pool || batch_path > path_pool || batch_sdf > sdf_pool)
      throw std::invalid_argument("config: minibatch sizes must not exceed pool sizes");
    if (holdout_fraction <= 0 || holdout_fraction >= 1)
      throw std::invalid_argument("config: holdout_fraction must be in (0,1)");
  }
};

// Desk-scale preset: D_e=128, 100 epochs, pools scaled x0.25. Targets a
// sub-30-minute single-core run on meshes up to ~10K vertices.
inline TrainConfig desk_preset() {
  TrainConfig c;
  c.epochs = 100;
  c.iterations_per_epoch = 100;
  c.de = 128;
  c.sdf_pool = 7500;
  c.gdist_pool = 22500;
  c.path_pool = 5000;
  c.batch_gdist = 1024;
  c.batch_path = 32;
  c.batch_sdf = 256;
  c.phi_epochs = 60;
  return c;
}

// --------------------------------------------------------------------------
// flat key=value config files
// --------------------------------------------------------------------------

inline void save_config(const TrainConfig& c, const std::string& path) {
  auto os = io::open_out(path, false);
  os << "epochs=" << c.epochs << "\n";
  os << "iterations_per_epoch=" << c.iterations_per_epoch << "\n";
  os << "lr_max=" << c.lr_max << "\n";
  os << "lr_min=" << c.lr_min << "\n";
  os << "de=" << c.de << "\n";
  os << "sdf_pool=" << c.sdf_pool << "\n";
  os << "gdist_pool=" << c.gdist_pool << "\n";
  os << "path_pool=" << c.path_pool << "\n";
  os << "batch_gdist=" << c.batch_gdist << "\n";
  os << "batch_path=" << c.batch_path << "\n";
  os << "batch_sdf=" << c.batch_sdf << "\n";
  os << "m_long=" << c.m_long << "\n";
  os << "m_short=" << c.m_short << "\n";
  os << "long_threshold=" << c.long_threshold << "\n";
  os << "w_gdist=" << c.weights.gdist << "\n";
  os << "w_spath=" << c.weights.spath << "\n";
  os << "w_sdist=" << c.weights.sdist << "\n";
  os << "w_ccl=" << c.weights.ccl << "\n";
  os << "w_dcp=" << c.weights.dcp << "\n";
  os << "enable_gdist=" << int(c.flags.gdist) << "\n";
  os << "enable_spath=" << int(c.flags.spath) << "\n";
  os << "enable_sdist=" << int(c.flags.sdist) << "\n";
  os << "enable_ccl=" << int(c.flags.ccl) << "\n";
  os << "enable_dcp=" << int(c.flags.dcp) << "\n";
  os << "seed=" << c.seed << "\n";
  os << "holdout_fraction=" << c.holdout_fraction << "\n";
  os << "phi_epochs=" << c.phi_epochs << "\n";
  os << "eval_paths_per_epoch=" << c.eval_paths_per_epoch << "\n";
}

inline TrainConfig load_config(const std::string& path) {
  auto is = io::open_in(path, false);
  TrainConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto d = [&] { return std::stod(val); };
    auto i = [&] { return std::stoll(val); };
    if (key == "epochs") c.epochs = int(i());
    else if (key == "iterations_per_epoch") c.iterations_per_epoch = int(i());
    else if (key == "lr_max") c.lr_max = d();
    else if (key == "lr_min") c.lr_min = d();
    else if (key == "de") c.de = int(i());
    else if (key == "sdf_pool") c.sdf_pool = size_t(i());
    else if (key == "gdist_pool") c.gdist_pool = size_t(i());
    else if (key == "path_pool") c.path_pool = size_t(i());
    else if (key == "batch_gdist") c.batch_gdist = size_t(i());
    else if (key == "batch_path") c.batch_path = size_t(i());
    else if (key == "batch_sdf") c.batch_sdf = size_t(i());
    else if (key == "m_long") c.m_long = uint32_t(i());
    else if (key == "m_short") c.m_short = uint32_t(i());
    else if (key == "long_threshold") c.long_threshold = d();
    else if (key == "w_gdist") c.weights.gdist = float(d());
    else if (key == "w_spath") c.weights.spath = float(d());
    else if (key == "w_sdist") c.weights.sdist = float(d());
    else if (key == "w_ccl") c.weights.ccl = float(d());
    else if (key == "w_dcp") c.weights.dcp = float(d());
    else if (key == "enable_gdist") c.flags.gdist = i() != 0;
    else if (key == "enable_spath") c.flags.spath = i() != 0;
    else if (key == "enable_sdist") c.flags.sdist = i() != 0;
    else if (key == "enable_ccl") c.flags.ccl = i() != 0;
    else if (key == "enable_dcp") c.flags.dcp = i() != 0;
    else if (key == "seed") c.seed = uint64_t(i());
    else if (key == "holdout_fraction") c.holdout_fraction = d();
    else if (key == "phi_epochs") c.phi_epochs = int(i());
    else if (key == "eval_paths_per_epoch") c.eval_paths_per_epoch = size_t(i());
    else throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return c;
}

// --------------------------------------------------------------------------
// holdout split: disjoint, deterministic under seed, never touched by training
// --------------------------------------------------------------------------

inline std::pair<Dataset, Dataset> holdout_split(const Dataset& ds, double fraction,
                                                 uint64_t seed) {
  if (fraction <= 0 || fraction >= 1)
    throw std::invalid_argument("holdout_split: fraction must be in (0,1)");
  std::vector<size_t> idx(ds.records.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = make_rng(seed ^ 0x401d0177ull);
  rng.shuffle(idx);
  size_t n_hold = size_t(std::llround(double(ds.records.size()) * fraction));
  Dataset train, hold;
  train.m_long = hold.m_long = ds.m_long;
  train.m_short = hold.m_short = ds.m_short;
  for (size_t i = 0; i < idx.size(); ++i)
    (i < n_hold ? hold : train).records.push_back(ds.records[idx[i]]);
  return {train, hold};
}

// --------------------------------------------------------------------------
// training internals
// --------------------------------------------------------------------------

struct MetricsRow {
  int epoch = 0;
  double lr = 0;
  LossValues losses;
  double holdout_mre = std::numeric_limits<double>::quiet_NaN();       // %
  double holdout_chamfer = std::numeric_limits<double>::quiet_NaN();
  double holdout_sdf_l1 = std::numeric_limits<double>::quiet_NaN();
};

inline void save_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  auto os = io::open_out(path, false);
  os << "epoch,lr,loss_gdist,loss_spath,loss_sdist,loss_ccl,loss_dcp,loss_total,"
        "holdout_mre,holdout_chamfer,holdout_sdf_l1\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.epoch << "," << r.lr << "," << r.losses.gdist << "," << r.losses.spath << ","
       << r.losses.sdist << "," << r.losses.ccl << "," << r.losses.dcp << "," << r.losses.total
       << "," << r.holdout_mre << "," << r.holdout_chamfer << "," << r.holdout_sdf_l1 << "\n";
}

namespace detail {

inline std::vector<std::array<float, 3>> vertex_f32(const TriangleMesh& mesh) {
  std::vector<std::array<float, 3>> v(mesh.vertex_count());
  for (size_t i = 0; i < v.size(); ++i) v[i] = to_f32(mesh.vertices[i]);
  return v;
}

inline TensorPtr points_tensor(const std::vector<std::array<float, 3>>& verts,
                               const std::vector<uint32_t>& ids) {
  auto t = Tensor::constant(int(ids.size()), 3);
  for (size_t i = 0; i < ids.size(); ++i)
    std::memcpy(t->data() + i * 3, verts[ids[i]].data(), 12);
  return t;
}

// labels sampled positions in parallel; output order is by index, so the
// result is independent of the thread count
inline std::vector<SdfSample> sample_sdf_pool(const SdfOracle& oracle, size_t n, uint64_t seed,
                                              int threads) {
  Rng rng = make_rng(seed ^ 0x5df9001ull);
  auto cum = cumulative_face_areas(oracle.mesh());
  std::vector<Vec3> pos(n);
  size_t n_uniform = n / 2;
  for (size_t i = 0; i < n; ++i) {
    if (i < n_uniform) {
      pos[i] = rng.in_unit_ball();
    } else {
      Vec3 q = sample_surface_point(oracle.mesh(), cum, rng);
      pos[i] = q + Vec3{rng.normal(0, 0.02), rng.normal(0, 0.02), rng.normal(0, 0.02)};
    }
  }
  std::vector<SdfSample> out(n);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(64);
      if (i >= n) return;
      size_t hi = std::min(n, i + 64);
      for (; i < hi; ++i) out[i] = {pos[i], float(oracle(pos[i]))};
    }
  };
  int nt = threads > 0 ? threads : worker_threads();
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> ts;
    for (int t = 0; t < nt; ++t) ts.emplace_back(worker);
    for (auto& t : ts) t.join();
  }
  return out;
}

struct ParamSnapshot {
  std::vector<std::vector<float>> vals;

  static ParamSnapshot take(const std::vector<TensorPtr>& params) {
    ParamSnapshot s;
    s.vals.reserve(params.size());
    for (const auto& p : params) s.vals.push_back(p->val);
    return s;
  }
  void restore(const std::vector<TensorPtr>& params) const {
    if (params.size() != vals.size()) throw std::logic_error("snapshot size mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i]->val = vals[i];
  }
};

}  // namespace detail

// --------------------------------------------------------------------------
// Stage 1: pre-train the independent SDF network
// --------------------------------------------------------------------------

struct PhiResult {
  PhiModel phi;                 // not yet frozen
  double holdout_l1 = 0;        // mean |s - s~| on held-out samples
  std::vector<MetricsRow> log;
};

inline PhiResult pretrain_phi(const SdfOracle& oracle, const TrainConfig& cfg) {
  cfg.validate();
  PhiResult res;
  res.phi = PhiModel::make(cfg.de, /*frozen=*/false);
  res.phi.init(cfg.seed);
  AdamW opt(res.phi.params());
  Rng rng = make_rng(cfg.seed ^ 0x0f117a11ull);

  auto holdout = detail::sample_sdf_pool(oracle, 2048, cfg.seed ^ 0xeeee, cfg.threads);
  auto eval = [&]() {
    NoGradGuard ng;
    auto q = Tensor::constant(int(holdout.size()), 3);
    for (size_t i = 0; i < holdout.size(); ++i) {
      q->val[i * 3 + 0] = float(holdout[i].position.x);
      q->val[i * 3 + 1] = float(holdout[i].position.y);
      q->val[i * 3 + 2] = float(holdout[i].position.z);
    }
    auto s = res.phi.forward(q);
    double acc = 0;
    for (size_t i = 0; i < holdout.size(); ++i)
      acc += std::abs(double(s->val[i]) - holdout[i].signed_distance);
    return acc / double(holdout.size());
  };

  for (int epoch = 0; epoch < cfg.phi_epochs; ++epoch) {
    double lr = cosine_lr(epoch, cfg.phi_epochs, cfg.lr_max, cfg.lr_min);
    auto pool = detail::sample_sdf_pool(oracle, cfg.sdf_pool, cfg.seed + 7919 * (epoch + 1),
                                        cfg.threads);
    double last = 0;
    for (int it = 0; it < cfg.iterations_per_epoch; ++it) {
      auto q = Tensor::constant(int(cfg.batch_sdf), 3);
      auto gt = Tensor::constant(int(cfg.batch_sdf), 1);
      for (size_t i = 0; i < cfg.batch_sdf; ++i) {
        const auto& s = pool[rng.below(pool.size())];
        q->val[i * 3 + 0] = float(s.position.x);
        q->val[i * 3 + 1] = float(s.position.y);
        q->val[i * 3 + 2] = float(s.position.z);
        gt->val[i] = s.signed_distance;
      }
      auto loss = ops::l1_loss(res.phi.forward(q), gt);
      last = loss->scalar();
      if (!std::isfinite(last))
        throw std::runtime_error("pretrain_phi: loss diverged (NaN/Inf) at epoch " +
                                 std::to_string(epoch));
      opt.zero_grad();
      backward(loss);
      opt.step(lr);
    }
    MetricsRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.losses.sdist = last;
    row.losses.total = last;
    row.holdout_sdf_l1 = eval();
    res.log.push_back(row);
  }
  res.holdout_l1 = cfg.phi_epochs > 0 ? res.log.back().holdout_sdf_l1 : eval();
  return res;
}

inline void freeze(PhiModel& phi) {
  for (auto& p : phi.params()) {
    p->requires_grad = false;
    p->grad_path = false;
    p->grad.assign(p->size(), 0.0f);
  }
  phi.frozen = true;
}

// --------------------------------------------------------------------------
// Stage 2: overfit the full model
// --------------------------------------------------------------------------

struct TrainResult {
  NeuroGFModel model;           // best-holdout weights
  std::vector<MetricsRow> log;
  double best_metric = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
};

inline TrainResult train(const TriangleMesh& mesh, const SdfOracle& oracle,
                         const Dataset& train_ds, const Dataset& holdout_ds,
                         const TrainConfig& cfg,
                         std::shared_ptr<PhiModel> phi = nullptr) {
  cfg.validate();
  if (cfg.flags.dcp && !phi)
    throw std::invalid_argument("train: dcp loss enabled but no frozen phi provided");
  if (phi && !phi->frozen) throw std::invalid_argument("train: phi must be frozen");
  if ((cfg.flags.spath || cfg.flags.ccl || cfg.flags.dcp)) {
    bool any_path = false;
    for (const auto& r : train_ds.records)
      if (r.has_path()) { any_path = true; break; }
    if (!any_path)
      throw std::invalid_argument("train: path losses enabled but dataset has no path records");
  }

  TrainResult res;
  res.model = NeuroGFModel::make(cfg.de);
  res.model.init(cfg.seed);
  res.model.frozen_phi = phi;
  uint64_t phi_hash = phi ? phi->param_hash() : 0;

  auto verts = detail::vertex_f32(mesh);
  Rng rng = make_rng(cfg.seed ^ 0x7a117a11ull);

  // index the training records once
  std::vector<size_t> gd_records, path_records;
  for (size_t i = 0; i < train_ds.records.size(); ++i)
    (train_ds.records[i].has_path() ? path_records : gd_records).push_back(i);

  // holdout eval tensors (gdist pairs) are fixed across epochs
  std::vector<uint32_t> ho_src, ho_tgt;
  std::vector<double> ho_gt;
  for (const auto& r : holdout_ds.records) {
    if (r.has_path() || r.distance <= 0) continue;
    ho_src.push_back(r.source);
    ho_tgt.push_back(r.target);
    ho_gt.push_back(r.distance);
  }
  std::vector<const GeodesicRecord*> ho_paths;
  for (const auto& r : holdout_ds.records)
    if (r.has_path()) ho_paths.push_back(&r);

  auto holdout_sdf = detail::sample_sdf_pool(oracle, 2048, cfg.seed ^ 0xeeee, cfg.threads);

  auto evaluate = [&](MetricsRow& row) {
    NoGradGuard ng;
    if (!ho_src.empty() && cfg.flags.gdist) {
      auto es = res.model.embed_points(detail::points_tensor(verts, ho_src));
      auto et = res.model.embed_points(detail::points_tensor(verts, ho_tgt));
      auto d = res.model.predict_gdist(es, et);
      std::vector<double> pred(ho_gt.size());
      for (size_t i = 0; i < pred.size(); ++i) pred[i] = d->val[i];
      row.holdout_mre = mre(pred, ho_gt);
    }
    if (!ho_paths.empty() && cfg.flags.spath) {
      size_t n = std::min(cfg.eval_paths_per_epoch, ho_paths.size());
      double acc = 0;
      for (size_t i = 0; i < n; ++i) {
        const auto& r = *ho_paths[i];
        int m = r.path_flag == 1 ? int(train_ds.m_long) : int(train_ds.m_short);
        auto src = detail::points_tensor(verts, {r.source});
        auto tgt = detail::points_tensor(verts, {r.target});
        auto es = res.model.embed_points(src);
        auto et = res.model.embed_points(tgt);
        auto curve = res.model.predict_path(es, et, sample_line_primitive(src, tgt, m), m);
        std::vector<Vec3> pred(m);
        for (int j = 0; j < m; ++j)
          pred[j] = {curve->val[j * 3], curve->val[j * 3 + 1], curve->val[j * 3 + 2]};
        acc += chamfer_l1(pred, to_polyline(r.path));
      }
      row.holdout_chamfer = acc / double(n);
    }
    if (cfg.flags.sdist) {
      auto q = Tensor::constant(int(holdout_sdf.size()), 3);
      for (size_t i = 0; i < holdout_sdf.size(); ++i) {
        q->val[i * 3 + 0] = float(holdout_sdf[i].position.x);
        q->val[i * 3 + 1] = float(holdout_sdf[i].position.y);
        q->val[i * 3 + 2] = float(holdout_sdf[i].position.z);
      }
      auto s = res.model.predict_sdf(res.model.embed_points(q));
      double acc = 0;
      for (size_t i = 0; i < holdout_sdf.size(); ++i)
        acc += std::abs(double(s->val[i]) - holdout_sdf[i].signed_distance);
      row.holdout_sdf_l1 = acc / double(holdout_sdf.size());
    }
  };

  auto metric_of = [&](const MetricsRow& row) {
    if (cfg.flags.gdist) return row.holdout_mre;
    if (cfg.flags.spath) return row.holdout_chamfer;
    return row.holdout_sdf_l1;
  };

  auto params = res.model.params();
  AdamW opt(params);
  detail::ParamSnapshot best = detail::ParamSnapshot::take(params);

  if (cfg.epochs == 0) {
    MetricsRow row;
    row.epoch = 0;
    row.lr = cfg.lr_max;
    evaluate(row);
    res.log.push_back(row);
    res.best_metric = metric_of(row);
    res.best_epoch = 0;
    return res;
  }

  bool need_paths = cfg.flags.spath || cfg.flags.ccl || cfg.flags.dcp;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max, cfg.lr_min);

    // fresh pools: record subsets plus newly labeled SDF queries
    std::vector<size_t> gd_pool, path_pool;
    if (cfg.flags.gdist) {
      gd_pool.resize(std::min(cfg.gdist_pool, gd_records.size()));
      for (auto& v : gd_pool) v = gd_records[rng.below(gd_records.size())];
    }
    if (need_paths) {
      path_pool.resize(std::min(cfg.path_pool, path_records.size()));
      for (auto& v : path_pool) v = path_records[rng.below(path_records.size())];
    }
    std::vector<SdfSample> sdf_pool;
    if (cfg.flags.sdist)
      sdf_pool = detail::sample_sdf_pool(oracle, cfg.sdf_pool,
                                         cfg.seed + 104729 * (epoch + 1), cfg.threads);

    LossValues epoch_losses;
    for (int it = 0; it < cfg.iterations_per_epoch; ++it) {
      TrainingBatch batch;
      if (cfg.flags.gdist) {
        std::vector<uint32_t> src(cfg.batch_gdist), tgt(cfg.batch_gdist);
        batch.gd_gt = Tensor::constant(int(cfg.batch_gdist), 1);
        for (size_t i = 0; i < cfg.batch_gdist; ++i) {
          const auto& r = train_ds.records[gd_pool[rng.below(gd_pool.size())]];
          src[i] = r.source;
          tgt[i] = r.target;
          batch.gd_gt->val[i] = r.distance;
        }
        batch.gd_src = detail::points_tensor(verts, src);
        batch.gd_tgt = detail::points_tensor(verts, tgt);
      }
      if (need_paths) {
        std::vector<const GeodesicRecord*> longs, shorts;
        for (size_t i = 0; i < cfg.batch_path; ++i) {
          const auto& r = train_ds.records[path_pool[rng.below(path_pool.size())]];
          (r.path_flag == 1 ? longs : shorts).push_back(&r);
        }
        auto fill = [&](PathBatch& pb, const std::vector<const GeodesicRecord*>& recs, int m) {
          pb.count = int(recs.size());
          pb.m = m;
          if (recs.empty()) return;
          std::vector<uint32_t> src(recs.size()), tgt(recs.size());
          pb.gt_curve = Tensor::constant(int(recs.size()) * m, 3);
          pb.gt_length = Tensor::constant(int(recs.size()), 1);
          for (size_t i = 0; i < recs.size(); ++i) {
            src[i] = recs[i]->source;
            tgt[i] = recs[i]->target;
            std::memcpy(pb.gt_curve->data() + i * size_t(m) * 3, recs[i]->path.data(),
                        sizeof(float) * 3 * m);
            pb.gt_length->val[i] = recs[i]->distance;
          }
          pb.src = detail::points_tensor(verts, src);
          pb.tgt = detail::points_tensor(verts, tgt);
        };
        fill(batch.paths_long, longs, int(train_ds.m_long));
        fill(batch.paths_short, shorts, int(train_ds.m_short));
      }
      if (cfg.flags.sdist) {
        batch.sdf_q = Tensor::constant(int(cfg.batch_sdf), 3);
        batch.sdf_gt = Tensor::constant(int(cfg.batch_sdf), 1);
        for (size_t i = 0; i < cfg.batch_sdf; ++i) {
          const auto& s = sdf_pool[rng.below(sdf_pool.size())];
          batch.sdf_q->val[i * 3 + 0] = float(s.position.x);
          batch.sdf_q->val[i * 3 + 1] = float(s.position.y);
          batch.sdf_q->val[i * 3 + 2] = float(s.position.z);
          batch.sdf_gt->val[i] = s.signed_distance;
        }
      }

      auto [total, vals] = compute_losses(res.model, batch, cfg.weights, cfg.flags);
      if (!std::isfinite(vals.total))
        throw std::runtime_error("train: loss diverged (NaN/Inf) at epoch " +
                                 std::to_string(epoch) + " iteration " + std::to_string(it));
      opt.zero_grad();
      backward(total);
      opt.step(lr);
      epoch_losses = vals;
    }

    if (phi && phi->param_hash() != phi_hash)
      throw std::runtime_error("train: frozen phi parameters changed during epoch " +
                               std::to_string(epoch));

    MetricsRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.losses = epoch_losses;
    evaluate(row);
    res.log.push_back(row);
    double metric = metric_of(row);
    if (std::isfinite(metric) && metric < res.best_metric) {
      res.best_metric = metric;
      res.best_epoch = epoch;
      best = detail::ParamSnapshot::take(params);
    }
  }

  if (res.best_epoch >= 0) best.restore(params);
  return res;
}

}  // namespace neurogf
