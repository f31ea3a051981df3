// neurogf: overfit a neural geodesic field to one mesh and answer
// distance/path/SDF queries from it.
//
//   neurogf prepare  --mesh bunny.obj --out data/
//   neurogf train    --mesh data/mesh_normalized.ply --dataset data/dataset.ngfd --out run/
//   neurogf query p2p|ssad|msad|path ...
//   neurogf eval     --model run/model.ngfc --mesh ... --dataset-holdout run/holdout.ngfd

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "neurogf/neurogf.hpp"

namespace fs = std::filesystem;
using namespace neurogf;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec3 parse_point(const std::string& s) {
  Vec3 v;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &v.x, &v.y, &v.z) != 3)
    throw CLI::ValidationError("expected a point as x,y,z: '" + s + "'");
  return v;
}

TriangleMesh load_normalized(const std::string& path) {
  return normalize_unit_sphere(load_mesh(path));
}

struct PrepareArgs {
  std::string mesh_path, out_dir;
  size_t sources = 1024;
  size_t gdist_targets = 4096;
  size_t path_targets = 2048;
  int steiner_k = 4;
  uint64_t seed = 0;
  size_t pool = 20000;
  uint32_t m_long = 128, m_short = 32;
  double threshold = 0.5;
  size_t sdf_samples = 30000;
  int threads = 0;
  bool csv = false;
  bool strict = false;
};

int run_prepare(const PrepareArgs& a) {
  auto t0 = Clock::now();
  TriangleMesh raw = load_mesh(a.mesh_path, a.strict);
  TriangleMesh mesh = normalize_unit_sphere(raw);
  std::cout << "mesh: " << mesh.vertex_count() << " vertices, " << mesh.face_count()
            << " faces";
  if (mesh.dropped_faces) std::cout << " (" << mesh.dropped_faces << " degenerate dropped)";
  std::cout << "\nanisotropy (diagnostic tau): " << compute_anisotropy(mesh) << "\n";

  fs::create_directories(a.out_dir);
  save_ply(mesh, (fs::path(a.out_dir) / "mesh_normalized.ply").string());

  DatasetOptions opt;
  opt.n_sources = a.sources;
  opt.gdist_targets_per_source = a.gdist_targets;
  opt.path_targets_per_source = a.path_targets;
  opt.steiner_k = a.steiner_k;
  opt.seed = a.seed;
  opt.training_pool = a.pool;
  opt.long_threshold = a.threshold;
  opt.m_long = a.m_long;
  opt.m_short = a.m_short;
  opt.threads = a.threads;

  auto t1 = Clock::now();
  DatasetStats stats;
  Dataset ds = generate_dataset(mesh, opt, &stats);
  double oracle_s = seconds_since(t1);
  save_dataset(ds, (fs::path(a.out_dir) / "dataset.ngfd").string());
  if (a.csv) export_dataset_csv(ds, (fs::path(a.out_dir) / "dataset.csv").string());

  SdfOracle oracle(mesh);
  auto sdf = sample_sdf_queries(oracle, a.sdf_samples, a.seed);
  save_sdf_samples(sdf, (fs::path(a.out_dir) / "sdf_cache.ngfs").string());

  std::cout << "sources: " << stats.sources << " (pool " << stats.pool_size << ")\n";
  std::cout << "records: " << ds.records.size() << " (" << ds.path_record_count()
            << " with paths, " << stats.skipped_unreachable << " unreachable skipped)\n";
  std::cout << "sdf samples: " << sdf.size() << "\n";
  std::cout << "oracle time: " << oracle_s << " s, total: " << seconds_since(t0) << " s\n";
  std::cout << "wrote " << a.out_dir << "/{mesh_normalized.ply, dataset.ngfd, sdf_cache.ngfs}"
            << (a.csv ? " + dataset.csv" : "") << "\n";
  return 0;
}

struct TrainArgs {
  std::string mesh_path, dataset_path, out_dir, config_path, phi_path;
  std::string ablate;
  int de = -1;
  int epochs = -1;
  int64_t seed = -1;
  bool desk = false;
  int threads = 0;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (a.desk) cfg = desk_preset();
  if (!a.config_path.empty()) cfg = load_config(a.config_path);
  if (a.de > 0) cfg.de = a.de;
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  if (a.seed >= 0) cfg.seed = uint64_t(a.seed);
  cfg.threads = a.threads;
  if (!a.ablate.empty()) {
    std::stringstream ss(a.ablate);
    std::string term;
    while (std::getline(ss, term, ',')) {
      if (term == "gdist") cfg.flags.gdist = false;
      else if (term == "spath") cfg.flags.spath = cfg.flags.ccl = cfg.flags.dcp = false;
      else if (term == "sdist") cfg.flags.sdist = false;
      else if (term == "ccl") cfg.flags.ccl = false;
      else if (term == "dcp") cfg.flags.dcp = false;
      else throw CLI::ValidationError("unknown ablation term '" + term + "'");
    }
  }
  cfg.validate();

  TriangleMesh mesh = load_normalized(a.mesh_path);
  Dataset full = load_dataset(a.dataset_path);
  auto [train_ds, holdout_ds] = holdout_split(full, cfg.holdout_fraction, cfg.seed);
  std::cout << "dataset: " << train_ds.records.size() << " train / " << holdout_ds.records.size()
            << " holdout records\n";

  SdfOracle oracle(mesh);
  fs::create_directories(a.out_dir);

  std::shared_ptr<PhiModel> phi;
  if (cfg.flags.dcp) {
    if (!a.phi_path.empty()) {
      phi = std::make_shared<PhiModel>(load_phi_checkpoint(a.phi_path));
    } else {
      auto t0 = Clock::now();
      PhiResult pr = pretrain_phi(oracle, cfg);
      std::cout << "phi pretrain: holdout |L1| " << pr.holdout_l1 << " in "
                << seconds_since(t0) << " s\n";
      phi = std::make_shared<PhiModel>(std::move(pr.phi));
      freeze(*phi);
      save_phi_checkpoint(*phi, (fs::path(a.out_dir) / "phi.ngfc").string());
    }
    if (!phi->frozen) freeze(*phi);
  }

  auto t0 = Clock::now();
  TrainResult result = train(mesh, oracle, train_ds, holdout_ds, cfg, phi);
  double train_s = seconds_since(t0);

  save_checkpoint(result.model, (fs::path(a.out_dir) / "model.ngfc").string());
  save_metrics_csv(result.log, (fs::path(a.out_dir) / "metrics.csv").string());
  save_dataset(holdout_ds, (fs::path(a.out_dir) / "holdout.ngfd").string());
  save_config(cfg, (fs::path(a.out_dir) / "config.txt").string());

  std::cout << "trained " << cfg.epochs << " epochs in " << train_s << " s ("
            << result.model.param_count() << " parameters)\n";
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "holdout: MRE " << last.holdout_mre << " %, chamfer " << last.holdout_chamfer
              << ", sdf |L1| " << last.holdout_sdf_l1 << "\n";
    std::cout << "best epoch " << result.best_epoch << " (metric " << result.best_metric
              << ")\n";
  }
  std::cout << "wrote " << a.out_dir << "/{model.ngfc, metrics.csv, holdout.ngfd, config.txt}\n";
  return 0;
}

struct QueryArgs {
  std::string model_path, mesh_path, out_path;
  std::vector<std::string> sources;
  std::string target;
  int source_vertex = -1;
  int m = 128;
  bool project = false;
  bool pin = false;
};

QueryEngine make_engine(const QueryArgs& a, TriangleMesh* mesh_out = nullptr) {
  NeuroGFModel model = load_checkpoint(a.model_path);
  std::optional<NormTransform> tf;
  if (!a.mesh_path.empty()) {
    TriangleMesh mesh = load_normalized(a.mesh_path);
    tf = mesh.norm_transform;
    if (mesh_out) *mesh_out = std::move(mesh);
  }
  return QueryEngine(std::move(model), tf);
}

Vec3 query_source_point(const QueryArgs& a, const TriangleMesh& mesh) {
  if (a.source_vertex >= 0) {
    if (size_t(a.source_vertex) >= mesh.vertex_count())
      throw CLI::ValidationError("--source-vertex out of range");
    return mesh.vertices[a.source_vertex];
  }
  if (a.sources.empty()) throw CLI::ValidationError("a source point is required");
  return parse_point(a.sources[0]);
}

int run_query_p2p(const QueryArgs& a) {
  QueryEngine engine = make_engine(a);
  Vec3 qs = parse_point(a.sources.at(0));
  Vec3 qt = parse_point(a.target);
  bool self = false;
  float d = engine.query_p2p(qs, qt, &self);
  if (self)
    std::cerr << "warning: source equals target; reporting the model's self-pair constant\n";
  std::cout << d << "\n";
  return 0;
}

int run_query_field(const QueryArgs& a, bool msad) {
  TriangleMesh mesh;
  QueryEngine engine = make_engine(a, &mesh);
  if (mesh.empty()) throw CLI::ValidationError("--mesh is required for field queries");
  std::vector<Vec3> targets = mesh.vertices;  // already normalized

  std::vector<float> field;
  auto t0 = Clock::now();
  if (msad) {
    std::vector<Vec3> sources;
    for (const auto& s : a.sources) sources.push_back(parse_point(s));
    if (a.source_vertex >= 0) sources.push_back(mesh.vertices[a.source_vertex]);
    if (sources.empty()) throw CLI::ValidationError("msad needs at least one --source");
    field = engine.query_msad(sources, targets);
  } else {
    field = engine.query_ssad(query_source_point(a, mesh), targets);
  }
  double dt = seconds_since(t0);

  std::string out = a.out_path.empty() ? "field.ply" : a.out_path;
  save_ply(mesh, out, &field);
  std::cout << "queried " << targets.size() << " targets in " << dt * 1e3 << " ms; wrote " << out
            << "\n";
  return 0;
}

int run_query_path(const QueryArgs& a) {
  TriangleMesh mesh;
  QueryEngine engine = make_engine(a, &mesh);
  Vec3 qs = parse_point(a.sources.at(0));
  Vec3 qt = parse_point(a.target);
  auto curve = engine.query_path(qs, qt, a.m, a.pin);
  if (a.project) {
    if (mesh.empty()) throw CLI::ValidationError("--project requires --mesh");
    BvhTree bvh(mesh);
    curve = project_path(bvh, curve);
  }
  std::string out = a.out_path.empty() ? "path.obj" : a.out_path;
  if (out.size() > 4 && out.substr(out.size() - 4) == ".csv")
    save_path_csv(curve, out);
  else
    save_path_obj(curve, out);
  std::cout << "path with " << curve.size() << " points written to " << out << "\n";
  return 0;
}

struct EvalArgs {
  std::string model_path, mesh_path, holdout_path, report_path;
  int error_map_source = -1;
  std::string error_map_path = "error_map.ply";
  int steiner_k = 4;
  int sdf_grid = 0;
  std::string sdf_grid_path = "sdf_grid.ngfv";
  size_t max_paths = 256;
};

int run_eval(const EvalArgs& a) {
  NeuroGFModel model = load_checkpoint(a.model_path);
  TriangleMesh mesh = load_normalized(a.mesh_path);
  QueryEngine engine(std::move(model), mesh.norm_transform);
  Dataset holdout = load_dataset(a.holdout_path);

  // distance accuracy on held-out pairs
  std::vector<double> pred, gt;
  for (const auto& r : holdout.records) {
    if (r.has_path() || r.distance <= 0) continue;
    pred.push_back(engine.query_p2p(mesh.vertices[r.source], mesh.vertices[r.target]));
    gt.push_back(r.distance);
  }
  double mre_pct = pred.empty() ? std::numeric_limits<double>::quiet_NaN() : mre(pred, gt);

  // path accuracy
  double chamfer_sum = 0;
  size_t n_paths = 0;
  for (const auto& r : holdout.records) {
    if (!r.has_path()) continue;
    if (n_paths >= a.max_paths) break;
    int m = r.path_flag == 1 ? int(holdout.m_long) : int(holdout.m_short);
    auto curve = engine.query_path(mesh.vertices[r.source], mesh.vertices[r.target], m);
    chamfer_sum += chamfer_l1(curve, to_polyline(r.path));
    ++n_paths;
  }
  double chamfer = n_paths ? chamfer_sum / double(n_paths)
                           : std::numeric_limits<double>::quiet_NaN();

  // batched SSAD timing per 1K targets
  auto t0 = Clock::now();
  auto field = engine.query_ssad(mesh.vertices[0], mesh.vertices);
  double ssad_ms = seconds_since(t0) * 1e3 * 1000.0 / double(mesh.vertex_count());

  ReportRow row;
  row.name = fs::path(a.mesh_path).stem().string();
  row.vertices = mesh.vertex_count();
  row.tau = compute_anisotropy(mesh);
  row.mre_percent = mre_pct;
  row.chamfer = chamfer;
  row.ssad_ms = ssad_ms;
  row.note = std::to_string(pred.size()) + " pairs, " + std::to_string(n_paths) + " paths";
  std::cout << render_report({row});
  if (!a.report_path.empty()) {
    auto os = io::open_out(a.report_path, false);
    os << render_report({row}, /*csv=*/true);
    std::cout << "report written to " << a.report_path << "\n";
  }

  if (a.error_map_source >= 0) {
    if (size_t(a.error_map_source) >= mesh.vertex_count())
      throw CLI::ValidationError("--error-map-source out of range");
    SteinerGraph graph = build_steiner_graph(mesh, a.steiner_k);
    SsadResult oracle_field = oracle_ssad(graph, a.error_map_source);
    std::vector<double> oracle_d(mesh.vertex_count());
    for (size_t i = 0; i < mesh.vertex_count(); ++i) oracle_d[i] = oracle_field.distance[i];
    std::vector<double> model_d(field.begin(), field.end());
    auto st = export_error_map(mesh, model_d, oracle_d, a.error_map_path);
    std::cout << "error map: mean " << st.mean * 100 << " %, max " << st.max * 100
              << " %; wrote " << a.error_map_path << "\n";
  }

  if (a.sdf_grid >= 2) {
    const NeuroGFModel& m = engine.model();
    auto eval_sdf = [&](Vec3 q) {
      NoGradGuard ng;
      auto t = Tensor::constant(1, 3);
      t->val[0] = float(q.x);
      t->val[1] = float(q.y);
      t->val[2] = float(q.z);
      return double(m.predict_sdf(m.embed_points(t))->val[0]);
    };
    SdfGrid grid = export_sdf_grid(eval_sdf, uint32_t(a.sdf_grid));
    save_sdf_grid(grid, a.sdf_grid_path);
    std::cout << "sdf grid " << a.sdf_grid << "^3 written to " << a.sdf_grid_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural geodesic fields: overfit one mesh, query distances/paths/SDF"};
  app.require_subcommand(1);

  PrepareArgs pa;
  auto* prepare = app.add_subcommand("prepare", "generate ground-truth data from a mesh");
  prepare->add_option("--mesh", pa.mesh_path, "input mesh (.obj/.ply)")->required();
  prepare->add_option("--out", pa.out_dir, "output directory")->required();
  prepare->add_option("--sources", pa.sources, "number of source vertices");
  prepare->add_option("--gdist-targets", pa.gdist_targets, "distance targets per source");
  prepare->add_option("--path-targets", pa.path_targets, "path targets per source");
  prepare->add_option("--steiner-k", pa.steiner_k, "Steiner points per edge");
  prepare->add_option("--seed", pa.seed, "RNG seed");
  prepare->add_option("--pool", pa.pool, "training vertex pool size");
  prepare->add_option("--m-long", pa.m_long, "points per long path");
  prepare->add_option("--m-short", pa.m_short, "points per short path");
  prepare->add_option("--threshold", pa.threshold, "long/short distance threshold");
  prepare->add_option("--sdf-samples", pa.sdf_samples, "SDF cache sample count");
  prepare->add_option("--threads", pa.threads, "oracle worker threads (0 = auto)");
  prepare->add_flag("--csv", pa.csv, "also export dataset.csv");
  prepare->add_flag("--strict", pa.strict, "error out on degenerate faces");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "pre-train phi, then overfit the model");
  train_cmd->add_option("--mesh", ta.mesh_path, "normalized mesh")->required();
  train_cmd->add_option("--dataset", ta.dataset_path, "NGFD dataset")->required();
  train_cmd->add_option("--out", ta.out_dir, "output directory")->required();
  train_cmd->add_option("--config", ta.config_path, "key=value config file");
  train_cmd->add_option("--de", ta.de, "embedding width D_e");
  train_cmd->add_option("--epochs", ta.epochs, "training epochs");
  train_cmd->add_option("--seed", ta.seed, "RNG seed");
  train_cmd->add_option("--ablate", ta.ablate, "comma list: gdist,spath,sdist,ccl,dcp");
  train_cmd->add_option("--phi", ta.phi_path, "reuse a pre-trained phi checkpoint");
  train_cmd->add_option("--threads", ta.threads, "oracle labeling threads (0 = auto)");
  train_cmd->add_flag("--desk", ta.desk, "desk-scale preset (D_e=128, 100 epochs)");

  auto* query = app.add_subcommand("query", "answer queries from a trained model");
  query->require_subcommand(1);
  QueryArgs qa;
  auto add_common = [&](CLI::App* sub, bool needs_target) {
    sub->add_option("--model", qa.model_path, "NGFC checkpoint")->required();
    sub->add_option("--mesh", qa.mesh_path, "mesh for normalization / targets");
    sub->add_option("--source", qa.sources, "source point x,y,z (repeatable for msad)");
    sub->add_option("--source-vertex", qa.source_vertex, "source mesh vertex id");
    sub->add_option("--out", qa.out_path, "output file");
    if (needs_target) sub->add_option("--target", qa.target, "target point x,y,z");
  };
  auto* q_p2p = query->add_subcommand("p2p", "point-to-point distance");
  add_common(q_p2p, true);
  auto* q_ssad = query->add_subcommand("ssad", "single-source field over mesh vertices");
  add_common(q_ssad, false);
  auto* q_msad = query->add_subcommand("msad", "multi-source field over mesh vertices");
  add_common(q_msad, false);
  auto* q_path = query->add_subcommand("path", "shortest path curve");
  add_common(q_path, true);
  q_path->add_option("-M,--points", qa.m, "curve point count");
  q_path->add_flag("--project", qa.project, "project curve points onto the surface");
  q_path->add_flag("--pin-endpoints", qa.pin, "replace first/last points with the queries");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model against held-out records");
  eval_cmd->add_option("--model", ea.model_path, "NGFC checkpoint")->required();
  eval_cmd->add_option("--mesh", ea.mesh_path, "mesh")->required();
  eval_cmd->add_option("--dataset-holdout", ea.holdout_path, "held-out NGFD records")->required();
  eval_cmd->add_option("--report", ea.report_path, "write CSV report");
  eval_cmd->add_option("--error-map-source", ea.error_map_source, "vertex id for error map");
  eval_cmd->add_option("--error-map", ea.error_map_path, "error map PLY path");
  eval_cmd->add_option("--steiner-k", ea.steiner_k, "oracle density for the error map");
  eval_cmd->add_option("--sdf-grid", ea.sdf_grid, "export model SDF on an N^3 grid");
  eval_cmd->add_option("--sdf-grid-out", ea.sdf_grid_path, "NGFV output path");
  eval_cmd->add_option("--max-paths", ea.max_paths, "cap on evaluated holdout paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (*prepare) return run_prepare(pa);
    if (*train_cmd) return run_train(ta);
    if (*q_p2p) return run_query_p2p(qa);
    if (*q_ssad) return run_query_field(qa, false);
    if (*q_msad) return run_query_field(qa, true);
    if (*q_path) return run_query_path(qa);
    if (*eval_cmd) return run_eval(ea);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
