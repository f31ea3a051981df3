#include <catch2/catch_amalgamated.hpp>

#include "neurogf/mesh.hpp"
#include "testutil.hpp"

using namespace neurogf;
using testutil::TempDir;

TEST_CASE("obj loading handles the minimal closed mesh") {
  TempDir tmp;
  testutil::write_text(tmp.file("tetra.obj"),
                       "v 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\n"
                       "f 1 2 3\nf 1 4 2\nf 1 3 4\nf 2 4 3\n");
  TriangleMesh m = load_mesh(tmp.file("tetra.obj"));
  CHECK(m.vertex_count() == 4);
  CHECK(m.face_count() == 4);
  CHECK(m.dropped_faces == 0);
}

TEST_CASE("obj loading reports out-of-range indices with the line number") {
  TempDir tmp;
  testutil::write_text(tmp.file("bad.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 10\n");
  CHECK_THROWS_WITH(load_mesh(tmp.file("bad.obj")),
                    Catch::Matchers::ContainsSubstring("bad.obj:5") &&
                        Catch::Matchers::ContainsSubstring("10"));
}

TEST_CASE("obj polygons are fan-triangulated") {
  TempDir tmp;
  testutil::write_text(tmp.file("quad.obj"),
                       "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  TriangleMesh m = load_mesh(tmp.file("quad.obj"));
  CHECK(m.face_count() == 2);
}

TEST_CASE("obj face records with texture/normal refs parse") {
  TempDir tmp;
  testutil::write_text(tmp.file("t.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n");
  CHECK(load_mesh(tmp.file("t.obj")).face_count() == 1);
}

TEST_CASE("degenerate faces are dropped and counted, or rejected in strict mode") {
  TempDir tmp;
  testutil::write_text(tmp.file("d.obj"),
                       "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\nf 1 2 2\n");
  TriangleMesh m = load_mesh(tmp.file("d.obj"));
  CHECK(m.face_count() == 1);
  CHECK(m.dropped_faces == 2);
  CHECK_THROWS_WITH(load_mesh(tmp.file("d.obj"), /*strict=*/true),
                    Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("empty mesh is an error") {
  TempDir tmp;
  testutil::write_text(tmp.file("e.obj"), "v 0 0 0\n");
  CHECK_THROWS(load_mesh(tmp.file("e.obj")));
}

TEST_CASE("ply round-trips in ascii and binary, with quality") {
  TempDir tmp;
  TriangleMesh m = testutil::icosphere(1);
  std::vector<float> quality(m.vertex_count());
  for (size_t i = 0; i < quality.size(); ++i) quality[i] = float(i) * 0.5f;

  for (bool binary : {false, true}) {
    std::string p = tmp.file(binary ? "b.ply" : "a.ply");
    save_ply(m, p, &quality, binary);
    TriangleMesh r = load_ply(p);
    REQUIRE(r.vertex_count() == m.vertex_count());
    REQUIRE(r.face_count() == m.face_count());
    for (size_t i = 0; i < m.vertex_count(); ++i)
      CHECK(norm(r.vertices[i] - m.vertices[i]) < 1e-6);
    CHECK(r.faces == m.faces);
  }
}

TEST_CASE("ply rejects malformed headers") {
  TempDir tmp;
  testutil::write_text(tmp.file("x.ply"), "not a ply\n");
  CHECK_THROWS(load_ply(tmp.file("x.ply")));
  testutil::write_text(tmp.file("y.ply"), "ply\nformat binary_big_endian 1.0\nend_header\n");
  CHECK_THROWS_WITH(load_ply(tmp.file("y.ply")),
                    Catch::Matchers::ContainsSubstring("binary_big_endian"));
}

TEST_CASE("normalization maps the +-2 cube onto the unit sphere exactly") {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({i & 1 ? 2.0 : -2.0, i & 2 ? 2.0 : -2.0, i & 4 ? 2.0 : -2.0});
  // a couple of faces so the mesh is non-empty; normalization only reads vertices
  m.faces = {{0, 1, 2}, {4, 5, 6}};
  TriangleMesh n = normalize_unit_sphere(m);
  double target = 1.0;
  for (const Vec3& v : n.vertices) CHECK(norm(v) == Catch::Approx(target).margin(1e-12));
  CHECK(n.norm_transform.scale == Catch::Approx(1.0 / std::sqrt(12.0)));
}

TEST_CASE("normalizing an already-normalized mesh is the identity") {
  TriangleMesh m = normalize_unit_sphere(testutil::icosphere(2));
  TriangleMesh n = normalize_unit_sphere(m);
  CHECK(std::abs(n.norm_transform.scale - m.norm_transform.scale) < 1e-9 * m.norm_transform.scale);
  for (size_t i = 0; i < m.vertex_count(); ++i)
    CHECK(norm(n.vertices[i] - m.vertices[i]) < 1e-6);
}

TEST_CASE("normalization recovers a pure translation") {
  TriangleMesh m = testutil::tetrahedron();
  for (Vec3& v : m.vertices) v += Vec3{5, 0, 0};
  TriangleMesh n = normalize_unit_sphere(m);
  CHECK(n.norm_transform.center.x == Catch::Approx(5.0).margin(1e-12));
  CHECK(n.norm_transform.center.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(n.norm_transform.center.z == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("norm_transform round-trips back to raw coordinates") {
  TriangleMesh raw = testutil::icosphere(1);
  for (Vec3& v : raw.vertices) v = v * 3.7 + Vec3{1, -2, 0.5};
  TriangleMesh n = normalize_unit_sphere(raw);
  for (size_t i = 0; i < raw.vertex_count(); ++i) {
    Vec3 back = n.norm_transform.to_raw(n.vertices[i]);
    CHECK(norm(back - raw.vertices[i]) < 1e-6 * norm(raw.vertices[i]));
  }
}

TEST_CASE("farthest-point sampling covers edge cases and is reproducible") {
  TriangleMesh m = testutil::icosphere(2);  // 162 vertices

  SECTION("n equals vertex count returns every vertex") {
    auto s = sample_training_vertices(m, m.vertex_count(), 1);
    std::sort(s.begin(), s.end());
    for (size_t i = 0; i < s.size(); ++i) CHECK(s[i] == int(i));
  }
  SECTION("n = 1 returns a single seed vertex") {
    auto s = sample_training_vertices(m, 1, 1);
    REQUIRE(s.size() == 1);
  }
  SECTION("n beyond vertex count clamps with a warning count") {
    int clamped = 0;
    auto s = sample_training_vertices(m, m.vertex_count() + 5, 1, &clamped);
    CHECK(s.size() == m.vertex_count());
    CHECK(clamped == 5);
  }
  SECTION("same seed gives bitwise identical samples") {
    auto a = sample_training_vertices(m, 50, 42);
    auto b = sample_training_vertices(m, 50, 42);
    CHECK(a == b);
  }
}

TEST_CASE("fps coverage matches an independent greedy oracle on the icosphere") {
  TriangleMesh m = testutil::icosphere(3);
  REQUIRE(m.vertex_count() == 642);
  auto got = sample_training_vertices(m, 12, 7);

  // independent exhaustive greedy FPS starting from vertex 0
  std::vector<int> oracle{0};
  std::vector<double> d2(m.vertex_count());
  for (size_t i = 0; i < d2.size(); ++i) d2[i] = norm2(m.vertices[i] - m.vertices[0]);
  while (oracle.size() < 12) {
    int best = int(std::max_element(d2.begin(), d2.end()) - d2.begin());
    oracle.push_back(best);
    for (size_t i = 0; i < d2.size(); ++i)
      d2[i] = std::min(d2[i], norm2(m.vertices[i] - m.vertices[best]));
  }
  auto min_pairwise = [&](const std::vector<int>& s) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < s.size(); ++i)
      for (size_t j = i + 1; j < s.size(); ++j)
        best = std::min(best, norm(m.vertices[s[i]] - m.vertices[s[j]]));
    return best;
  };
  CHECK(min_pairwise(got) >= 0.9 * min_pairwise(oracle));
}

TEST_CASE("anisotropy diagnostic") {
  SECTION("equilateral faces give exactly 1") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
    m.faces = {{0, 1, 2}};
    CHECK(compute_anisotropy(m) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("3-4-5 right triangle gives 5/3") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 4, 0}};
    m.faces = {{0, 1, 2}};
    CHECK(compute_anisotropy(m) == Catch::Approx(5.0 / 3.0));
  }
  SECTION("1x10 slivers exceed 10") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 1, 0}, {10, 1, 0}};
    m.faces = {{0, 1, 2}, {1, 3, 2}};
    CHECK(compute_anisotropy(m) >= 10.0);
  }
}

TEST_CASE("unique_edges counts follow euler's formula on the icosphere") {
  TriangleMesh m = testutil::icosphere(2);
  auto edges = unique_edges(m);
  CHECK(edges.size() == m.vertex_count() + m.face_count() - 2);
}
