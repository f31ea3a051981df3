#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "neurogf/core.hpp"

namespace neurogf {

// Maps raw input coordinates onto the normalized frame: p_norm = (p_raw - center) * scale.
struct NormTransform {
  Vec3 center{0, 0, 0};
  double scale = 1.0;

  Vec3 to_normalized(Vec3 raw) const { return (raw - center) * scale; }
  Vec3 to_raw(Vec3 n) const { return n / scale + center; }
  bool is_identity() const { return center == Vec3{0, 0, 0} && scale == 1.0; }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  NormTransform norm_transform;   // raw -> current coordinates
  int dropped_faces = 0;          // degenerate faces removed at ingestion

  size_t vertex_count() const { return vertices.size(); }
  size_t face_count() const { return faces.size(); }
  bool empty() const { return vertices.empty() || faces.empty(); }

  Aabb bounds() const {
    Aabb b;
    for (const Vec3& v : vertices) b.expand(v);
    return b;
  }
};

enum class MeshFormat { OBJ, PLY };

namespace detail {

inline bool face_degenerate(const TriangleMesh& m, const std::array<int, 3>& f) {
  if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return true;
  Vec3 n = cross(m.vertices[f[1]] - m.vertices[f[0]], m.vertices[f[2]] - m.vertices[f[0]]);
  return norm2(n) == 0.0;
}

// Drops zero-area/duplicate-index faces; throws in strict mode.
inline void finalize_faces(TriangleMesh& m, bool strict, const std::string& origin) {
  std::vector<std::array<int, 3>> kept;
  kept.reserve(m.faces.size());
  for (const auto& f : m.faces) {
    for (int idx : f) {
      if (idx < 0 || size_t(idx) >= m.vertices.size())
        throw std::runtime_error(origin + ": face index " + std::to_string(idx + 1) +
                                 " out of range (vertex count " +
                                 std::to_string(m.vertices.size()) + ")");
    }
    if (face_degenerate(m, f)) {
      if (strict) throw std::runtime_error(origin + ": degenerate face in strict mode");
      ++m.dropped_faces;
      continue;
    }
    kept.push_back(f);
  }
  m.faces = std::move(kept);
  if (m.vertices.empty() || m.faces.empty())
    throw std::runtime_error(origin + ": empty mesh after ingestion");
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace((unsigned char)s[i])) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace((unsigned char)s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(std::string_view tok, const std::string& where) {
  try {
    return std::stod(std::string(tok));
  } catch (...) {
    throw std::runtime_error(where + ": bad number '" + std::string(tok) + "'");
  }
}

inline long parse_long(std::string_view tok, const std::string& where) {
  long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw std::runtime_error(where + ": bad integer '" + std::string(tok) + "'");
  return v;
}

}  // namespace detail

// --------------------------------------------------------------------------
// OBJ (ASCII v/f records, 1-based indices, polygons fan-triangulated)
// --------------------------------------------------------------------------

inline TriangleMesh load_obj(const std::string& path, bool strict = false) {
  auto is = io::open_in(path, false);
  TriangleMesh m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    std::string where = path + ":" + std::to_string(lineno);
    if (toks[0] == "v") {
      if (toks.size() < 4) throw std::runtime_error(where + ": vertex needs 3 coordinates");
      m.vertices.push_back({detail::parse_double(toks[1], where),
                            detail::parse_double(toks[2], where),
                            detail::parse_double(toks[3], where)});
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw std::runtime_error(where + ": face needs >= 3 indices");
      std::vector<int> poly;
      for (size_t t = 1; t < toks.size(); ++t) {
        std::string_view ref = toks[t];
        size_t slash = ref.find('/');
        if (slash != std::string_view::npos) ref = ref.substr(0, slash);
        long idx = detail::parse_long(ref, where);
        if (idx < 0) idx = long(m.vertices.size()) + idx + 1;  // relative indices
        if (idx < 1 || size_t(idx) > m.vertices.size())
          throw std::runtime_error(where + ": face index " + std::to_string(idx) +
                                   " out of range (vertex count " +
                                   std::to_string(m.vertices.size()) + ")");
        poly.push_back(int(idx - 1));
      }
      for (size_t t = 2; t < poly.size(); ++t)
        m.faces.push_back({poly[0], poly[int(t) - 1], poly[t]});
    }
    // other records (vn, vt, o, g, usemtl, ...) are ignored
  }
  detail::finalize_faces(m, strict, path);
  return m;
}

// --------------------------------------------------------------------------
// PLY (ascii and binary_little_endian; vertex x/y/z + face vertex_indices)
// --------------------------------------------------------------------------

namespace detail {

struct PlyProp {
  std::string name;
  std::string type;        // scalar type, or list value type
  std::string count_type;  // nonempty for list properties
};

inline size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw std::runtime_error("ply: unknown type '" + t + "'");
}

inline double ply_read_scalar(std::istream& is, const std::string& t) {
  size_t n = ply_type_size(t);
  unsigned char buf[8];
  io::read_bytes(is, buf, n);
  if (t == "float" || t == "float32") { float f; std::memcpy(&f, buf, 4); return f; }
  if (t == "double" || t == "float64") { double d; std::memcpy(&d, buf, 8); return d; }
  // integer types
  int64_t v = 0;
  bool sgn = (t[0] != 'u');
  std::memcpy(&v, buf, n);
  if (sgn && n < 8) {  // sign-extend
    int64_t m = int64_t(1) << (8 * n - 1);
    v = (v ^ m) - m;
  }
  return double(v);
}

}  // namespace detail

inline TriangleMesh load_ply(const std::string& path, bool strict = false) {
  auto is = io::open_in(path);
  std::string line;
  if (!std::getline(is, line) || line.substr(0, 3) != "ply")
    throw std::runtime_error(path + ":1: not a PLY file");

  enum { ASCII, BINARY_LE } fmt = ASCII;
  struct Element {
    std::string name;
    size_t count = 0;
    std::vector<detail::PlyProp> props;
  };
  std::vector<Element> elements;
  int lineno = 1;
  bool have_format = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
    std::string where = path + ":" + std::to_string(lineno);
    if (toks[0] == "format") {
      if (toks.size() < 2) throw std::runtime_error(where + ": malformed format line");
      if (toks[1] == "ascii") fmt = ASCII;
      else if (toks[1] == "binary_little_endian") fmt = BINARY_LE;
      else throw std::runtime_error(where + ": unsupported format '" + std::string(toks[1]) + "'");
      have_format = true;
    } else if (toks[0] == "element") {
      if (toks.size() < 3) throw std::runtime_error(where + ": malformed element line");
      elements.push_back({std::string(toks[1]), size_t(detail::parse_long(toks[2], where)), {}});
    } else if (toks[0] == "property") {
      if (elements.empty()) throw std::runtime_error(where + ": property before element");
      if (toks.size() >= 5 && toks[1] == "list") {
        elements.back().props.push_back(
            {std::string(toks[4]), std::string(toks[3]), std::string(toks[2])});
      } else if (toks.size() >= 3) {
        elements.back().props.push_back({std::string(toks[2]), std::string(toks[1]), ""});
      } else {
        throw std::runtime_error(where + ": malformed property line");
      }
    } else if (toks[0] == "end_header") {
      break;
    } else {
      throw std::runtime_error(where + ": unexpected header token '" + std::string(toks[0]) + "'");
    }
  }
  if (!have_format) throw std::runtime_error(path + ": missing format line");

  TriangleMesh m;
  auto read_ascii_line = [&](std::vector<double>& vals) {
    vals.clear();
    if (!std::getline(is, line)) throw std::runtime_error(path + ": unexpected end of data");
    ++lineno;
    for (auto t : detail::split_ws(line))
      vals.push_back(detail::parse_double(t, path + ":" + std::to_string(lineno)));
  };

  for (const auto& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (size_t p = 0; p < el.props.size(); ++p) {
        if (el.props[p].name == "x") ix = int(p);
        if (el.props[p].name == "y") iy = int(p);
        if (el.props[p].name == "z") iz = int(p);
        if (!el.props[p].count_type.empty())
          throw std::runtime_error(path + ": list property on vertex element is unsupported");
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw std::runtime_error(path + ": vertex element lacks x/y/z properties");
      m.vertices.reserve(el.count);
      std::vector<double> vals;
      for (size_t i = 0; i < el.count; ++i) {
        if (fmt == ASCII) {
          read_ascii_line(vals);
          if (vals.size() < el.props.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": short vertex row");
        } else {
          vals.clear();
          for (const auto& p : el.props) vals.push_back(detail::ply_read_scalar(is, p.type));
        }
        m.vertices.push_back({vals[ix], vals[iy], vals[iz]});
      }
    } else if (el.name == "face") {
      m.faces.reserve(el.count);
      for (size_t i = 0; i < el.count; ++i) {
        std::vector<long> poly;
        if (fmt == ASCII) {
          std::vector<double> vals;
          read_ascii_line(vals);
          if (vals.empty()) throw std::runtime_error(path + ": short face row");
          size_t n = size_t(vals[0]);
          if (vals.size() < 1 + n) throw std::runtime_error(path + ": short face row");
          for (size_t t = 0; t < n; ++t) poly.push_back(long(vals[1 + t]));
        } else {
          for (const auto& p : el.props) {
            if (!p.count_type.empty()) {
              size_t n = size_t(detail::ply_read_scalar(is, p.count_type));
              for (size_t t = 0; t < n; ++t)
                poly.push_back(long(detail::ply_read_scalar(is, p.type)));
            } else {
              detail::ply_read_scalar(is, p.type);  // skip
            }
          }
        }
        if (poly.size() < 3) throw std::runtime_error(path + ": face with < 3 vertices");
        for (size_t t = 2; t < poly.size(); ++t)
          m.faces.push_back({int(poly[0]), int(poly[t - 1]), int(poly[t])});
      }
    } else {
      // skip unknown element payload
      for (size_t i = 0; i < el.count; ++i) {
        if (fmt == ASCII) {
          if (!std::getline(is, line)) throw std::runtime_error(path + ": unexpected end of data");
          ++lineno;
        } else {
          for (const auto& p : el.props) {
            if (!p.count_type.empty()) {
              size_t n = size_t(detail::ply_read_scalar(is, p.count_type));
              for (size_t t = 0; t < n; ++t) detail::ply_read_scalar(is, p.type);
            } else {
              detail::ply_read_scalar(is, p.type);
            }
          }
        }
      }
    }
  }
  detail::finalize_faces(m, strict, path);
  return m;
}

inline TriangleMesh load_mesh(const std::string& path, MeshFormat fmt, bool strict = false) {
  return fmt == MeshFormat::OBJ ? load_obj(path, strict) : load_ply(path, strict);
}

// format from file extension
inline TriangleMesh load_mesh(const std::string& path, bool strict = false) {
  auto dotpos = path.find_last_of('.');
  std::string ext = dotpos == std::string::npos ? "" : path.substr(dotpos + 1);
  for (auto& c : ext) c = char(std::tolower((unsigned char)c));
  if (ext == "obj") return load_obj(path, strict);
  if (ext == "ply") return load_ply(path, strict);
  throw std::runtime_error(path + ": unknown mesh extension '" + ext + "' (expected obj/ply)");
}

// --------------------------------------------------------------------------
// PLY output, optionally with a per-vertex f32 `quality` property
// --------------------------------------------------------------------------

inline void save_ply(const TriangleMesh& m, const std::string& path,
                     const std::vector<float>* quality = nullptr, bool binary = true) {
  if (quality && quality->size() != m.vertices.size())
    throw std::invalid_argument("save_ply: quality size mismatch");
  auto os = io::open_out(path);
  os << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  os << "element vertex " << m.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (quality) os << "property float quality\n";
  os << "element face " << m.faces.size() << "\n";
  os << "property list uchar int vertex_indices\nend_header\n";
  if (binary) {
    for (size_t i = 0; i < m.vertices.size(); ++i) {
      float v[3] = {float(m.vertices[i].x), float(m.vertices[i].y), float(m.vertices[i].z)};
      io::write_bytes(os, v, 12);
      if (quality) io::write_pod(os, (*quality)[i]);
    }
    for (const auto& f : m.faces) {
      io::write_pod(os, uint8_t(3));
      int idx[3] = {f[0], f[1], f[2]};
      io::write_bytes(os, idx, 12);
    }
  } else {
    os.precision(9);
    for (size_t i = 0; i < m.vertices.size(); ++i) {
      os << m.vertices[i].x << " " << m.vertices[i].y << " " << m.vertices[i].z;
      if (quality) os << " " << (*quality)[i];
      os << "\n";
    }
    for (const auto& f : m.faces) os << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
  }
  if (!os) throw std::runtime_error("save_ply: write failed: " + path);
}

// --------------------------------------------------------------------------
// Normalization into the unit sphere
// --------------------------------------------------------------------------

inline TriangleMesh normalize_unit_sphere(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw std::invalid_argument("normalize_unit_sphere: empty mesh");
  Aabb b = mesh.bounds();
  Vec3 center = b.center();
  double max_norm = 0;
  for (const Vec3& v : mesh.vertices) max_norm = std::max(max_norm, norm(v - center));
  if (max_norm == 0)
    throw std::runtime_error("normalize_unit_sphere: all vertices coincident");
  double scale = 1.0 / max_norm;

  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = (v - center) * scale;
  // compose with any transform already applied so norm_transform always maps raw input
  const NormTransform& prev = mesh.norm_transform;
  out.norm_transform.center = prev.center + center / prev.scale;
  out.norm_transform.scale = prev.scale * scale;
  return out;
}

// --------------------------------------------------------------------------
// Farthest-point sampling over mesh vertices
// --------------------------------------------------------------------------

inline std::vector<int> sample_training_vertices(const TriangleMesh& mesh, size_t n,
                                                 uint64_t seed, int* clamped = nullptr) {
  size_t nv = mesh.vertex_count();
  if (nv == 0) throw std::invalid_argument("sample_training_vertices: empty mesh");
  if (n < 1) throw std::invalid_argument("sample_training_vertices: n must be >= 1");
  if (n > nv) {
    if (clamped) *clamped = int(n - nv);
    n = nv;
  } else if (clamped) {
    *clamped = 0;
  }
  Rng rng = make_rng(seed);
  std::vector<int> picked;
  picked.reserve(n);
  int start = int(rng.below(nv));
  picked.push_back(start);
  std::vector<double> d2(nv);
  for (size_t i = 0; i < nv; ++i) d2[i] = norm2(mesh.vertices[i] - mesh.vertices[start]);
  while (picked.size() < n) {
    int best = 0;
    double bd = -1;
    for (size_t i = 0; i < nv; ++i)
      if (d2[i] > bd) { bd = d2[i]; best = int(i); }
    picked.push_back(best);
    for (size_t i = 0; i < nv; ++i)
      d2[i] = std::min(d2[i], norm2(mesh.vertices[i] - mesh.vertices[best]));
  }
  return picked;
}

// --------------------------------------------------------------------------
// Diagnostic anisotropy: mean longest/shortest edge ratio per face.
// Not comparable to published anisotropy figures; reported for information.
// --------------------------------------------------------------------------

inline double compute_anisotropy(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw std::invalid_argument("compute_anisotropy: empty mesh");
  double sum = 0;
  for (const auto& f : mesh.faces) {
    double e0 = norm(mesh.vertices[f[1]] - mesh.vertices[f[0]]);
    double e1 = norm(mesh.vertices[f[2]] - mesh.vertices[f[1]]);
    double e2 = norm(mesh.vertices[f[0]] - mesh.vertices[f[2]]);
    double lo = std::min({e0, e1, e2}), hi = std::max({e0, e1, e2});
    sum += hi / lo;
  }
  return sum / double(mesh.faces.size());
}

// --------------------------------------------------------------------------
// Shared helpers
// --------------------------------------------------------------------------

inline std::vector<std::pair<int, int>> unique_edges(const TriangleMesh& mesh) {
  std::vector<std::pair<int, int>> es;
  es.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces)
    for (int e = 0; e < 3; ++e) {
      int a = f[e], b = f[(e + 1) % 3];
      es.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(es.begin(), es.end());
  es.erase(std::unique(es.begin(), es.end()), es.end());
  return es;
}

inline double face_area(const TriangleMesh& m, int f) {
  const auto& t = m.faces[f];
  return 0.5 * norm(cross(m.vertices[t[1]] - m.vertices[t[0]], m.vertices[t[2]] - m.vertices[t[0]]));
}

}  // namespace neurogf
