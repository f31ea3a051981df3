#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace neurogf {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

// ---------------------------------------------------------------------------
// 3D vector (double precision for geometry; the network consumes f32 copies)
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline Vec3 operator*(double s, Vec3 a) { return a * s; }
inline Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }
inline Vec3& operator-=(Vec3& a, Vec3 b) { a = a - b; return a; }
inline bool operator==(Vec3 a, Vec3 b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(Vec3 a) { return dot(a, a); }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  double n = norm(a);
  return n > 0 ? a / n : Vec3{0, 0, 0};
}
inline bool finite(Vec3 a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

struct Aabb {
  Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::lowest()};

  void expand(Vec3 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  void expand(const Aabb& b) { expand(b.lo); expand(b.hi); }
  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 extent() const { return hi - lo; }
  // squared distance from a point to this box
  double dist2(Vec3 p) const {
    double d = 0;
    for (int i = 0; i < 3; ++i) {
      double v = p[i];
      if (v < lo[i]) d += (lo[i] - v) * (lo[i] - v);
      if (v > hi[i]) d += (v - hi[i]) * (v - hi[i]);
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. Engine is std::mt19937_64; the variate transforms are
// spelled out here so that streams are identical across standard libraries.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed ^ 0x9e3779b97f4a7c15ull) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // unbiased integer in [0, n)
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    uint64_t limit = ~uint64_t(0) - (~uint64_t(0) % n);
    uint64_t v;
    do { v = next_u64(); } while (v >= limit);
    return v % n;
  }

  double normal(double mean = 0.0, double sigma = 1.0) {
    // Box-Muller, first branch only (keeps the stream stateless)
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Vec3 in_unit_ball() {
    // radius via cube-root transform, direction via normalized gaussian
    Vec3 dir{normal(), normal(), normal()};
    double n = norm(dir);
    if (n == 0) return {0, 0, 0};
    double r = std::cbrt(uniform());
    return dir * (r / n);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  // independent stream for a keyed subtask (per-source workers etc.)
  Rng fork(uint64_t key) const {
    uint64_t h = seed_mix_ ^ (key + 0x9e3779b97f4a7c15ull + (seed_mix_ << 6) + (seed_mix_ >> 2));
    return Rng(splitmix(h));
  }

  explicit Rng(uint64_t seed, uint64_t mix) : eng_(seed), seed_mix_(mix) {}

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }
  std::mt19937_64 eng_;
  uint64_t seed_mix_ = 0;
};

inline Rng make_rng(uint64_t seed) { return Rng(seed, seed); }

// FNV-1a over raw bytes; used for checkpoint/parameter integrity checks
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Little-endian binary IO
// ---------------------------------------------------------------------------

namespace io {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("unexpected end of file");
  return v;
}

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), std::streamsize(n));
}

inline void read_bytes(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), std::streamsize(n));
  if (!is) throw std::runtime_error("unexpected end of file");
}

inline void write_magic(std::ostream& os, const char m[5]) { os.write(m, 4); }

inline void expect_magic(std::istream& is, const char m[5], const std::string& what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, m, 4) != 0)
    throw std::runtime_error(what + ": bad magic (expected \"" + m + "\")");
}

inline std::ofstream open_out(const std::string& path, bool binary = true) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path, bool binary = true) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return is;
}

}  // namespace io

// number of worker threads: NEUROGF_THREADS env var, else hardware concurrency
inline int worker_threads() {
  if (const char* e = std::getenv("NEUROGF_THREADS")) {
    int n = std::atoi(e);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

// memory cap in MB for large allocations (SDF grid export); 0 = default 2048
inline size_t memory_cap_bytes() {
  size_t mb = 2048;
  if (const char* e = std::getenv("NEUROGF_MEM_CAP_MB")) {
    long v = std::atol(e);
    if (v > 0) mb = size_t(v);
  }
  return mb * 1024 * 1024;
}

}  // namespace neurogf
