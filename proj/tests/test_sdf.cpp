#include <catch2/catch_amalgamated.hpp>

#include "neurogf/sdf.hpp"
#include "testutil.hpp"

using namespace neurogf;
using testutil::TempDir;

TEST_CASE("closest point on triangle covers all voronoi regions") {
  Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};
  CHECK(norm(closest_point_triangle({-1, -1, 0}, a, b, c) - a) < 1e-15);      // vertex
  CHECK(norm(closest_point_triangle({2, 0.5, 0}, a, b, c) - b) < 1e-12);      // vertex b region
  CHECK(norm(closest_point_triangle({0.5, -1, 0}, a, b, c) - Vec3{0.5, 0, 0}) < 1e-15);  // edge
  CHECK(norm(closest_point_triangle({0.25, 0.25, 5}, a, b, c) - Vec3{0.25, 0.25, 0}) < 1e-15);
}

TEST_CASE("bvh distances agree with brute force on random probes") {
  TriangleMesh m = testutil::icosphere(2);
  BvhTree bvh(m);
  Rng rng = make_rng(5);
  for (int i = 0; i < 200; ++i) {
    Vec3 q{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    double brute = std::numeric_limits<double>::infinity();
    for (const auto& f : m.faces) {
      Vec3 p = closest_point_triangle(q, m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]);
      brute = std::min(brute, norm(q - p));
    }
    CHECK(bvh.distance(q) == Catch::Approx(brute).margin(1e-12));
  }
}

TEST_CASE("winding number separates inside from outside") {
  TriangleMesh m = testutil::icosphere(2);
  CHECK(winding_number(m, {0, 0, 0}) == Catch::Approx(1.0).margin(1e-9));
  CHECK(winding_number(m, {2, 0, 0}) == Catch::Approx(0.0).margin(1e-9));
  CHECK(winding_number(m, {0.45, 0.2, -0.1}) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("signed distance on the icosphere tracks the analytic sphere") {
  TriangleMesh m = testutil::icosphere(4);
  SdfOracle oracle(m);
  SECTION("mesh vertices are on the zero set") {
    for (int i = 0; i < 40; ++i) CHECK(std::abs(oracle(m.vertices[i * 7])) < 1e-9);
  }
  SECTION("origin is at minus the tessellation inradius") {
    double s = oracle({0, 0, 0});
    CHECK(s < 0);
    CHECK(std::abs(s - (-1.0)) < 5e-3);
  }
  SECTION("outside probe") {
    CHECK(std::abs(oracle({2, 0, 0}) - 1.0) < 5e-3);
  }
  SECTION("random probes within analytic tolerance") {
    Rng rng = make_rng(17);
    for (int i = 0; i < 300; ++i) {
      Vec3 q = rng.in_unit_ball() * 1.4;
      double analytic = norm(q) - 1.0;
      CHECK(std::abs(oracle(q) - analytic) < 5e-3);
    }
  }
}

TEST_CASE("sign flips across the surface along the normal") {
  TriangleMesh m = testutil::icosphere(3);
  SdfOracle oracle(m);
  Rng rng = make_rng(23);
  auto cum = cumulative_face_areas(m);
  for (int i = 0; i < 50; ++i) {
    Vec3 p = sample_surface_point(m, cum, rng);
    Vec3 n = normalized(p);  // outward normal of the sphere
    CHECK(oracle(p + n * 1e-2) > 0);
    CHECK(oracle(p - n * 1e-2) < 0);
  }
}

TEST_CASE("oracle field is approximately eikonal away from the surface") {
  TriangleMesh m = testutil::icosphere(3);
  SdfOracle oracle(m);
  Rng rng = make_rng(31);
  const double h = 1e-4;
  int ok = 0, total = 0;
  while (total < 100) {
    Vec3 q = rng.in_unit_ball() * 1.3;
    if (std::abs(norm(q) - 1.0) < 0.05 || norm(q) < 0.1) continue;  // skip surface/medial zones
    ++total;
    double gx = (oracle({q.x + h, q.y, q.z}) - oracle({q.x - h, q.y, q.z})) / (2 * h);
    double gy = (oracle({q.x, q.y + h, q.z}) - oracle({q.x, q.y - h, q.z})) / (2 * h);
    double gz = (oracle({q.x, q.y, q.z + h}) - oracle({q.x, q.y, q.z - h})) / (2 * h);
    double g = std::sqrt(gx * gx + gy * gy + gz * gz);
    if (g >= 0.9 && g <= 1.1) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("sample_sdf_queries labels deterministically and stays in-bounds") {
  TriangleMesh m = testutil::icosphere(2);
  SdfOracle oracle(m);
  SECTION("n = 1") {
    auto s = sample_sdf_queries(oracle, 1, 9);
    REQUIRE(s.size() == 1);
  }
  SECTION("uniform half lies inside the unit ball") {
    auto s = sample_sdf_queries(oracle, 400, 9);
    for (size_t i = 0; i < 200; ++i) CHECK(norm(s[i].position) <= 1.0 + 1e-12);
  }
  SECTION("labels match the oracle and reruns are identical") {
    auto a = sample_sdf_queries(oracle, 64, 9);
    auto b = sample_sdf_queries(oracle, 64, 9);
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].position == b[i].position);
      CHECK(a[i].signed_distance == b[i].signed_distance);
      CHECK(a[i].signed_distance == Catch::Approx(oracle(a[i].position)).margin(1e-6));
    }
  }
}

TEST_CASE("sdf grid export") {
  TriangleMesh m = testutil::icosphere(2);
  SdfOracle oracle(m);
  auto field = [&](Vec3 q) { return oracle(q); };

  SECTION("resolution 2 samples the cube corners") {
    SdfGrid g = export_sdf_grid(field, 2);
    REQUIRE(g.values.size() == 8);
    CHECK(g.at(0, 0, 0) == Catch::Approx(oracle({-1, -1, -1})).margin(1e-7));
    CHECK(g.at(1, 1, 1) == Catch::Approx(oracle({1, 1, 1})).margin(1e-7));
  }
  SECTION("sphere grid values approximate the analytic sdf") {
    SdfGrid g = export_sdf_grid(field, 16);
    double step = 2.0 / 15.0, err = 0;
    for (uint32_t z = 0; z < 16; ++z)
      for (uint32_t y = 0; y < 16; ++y)
        for (uint32_t x = 0; x < 16; ++x) {
          Vec3 q{-1 + step * x, -1 + step * y, -1 + step * z};
          err += std::abs(double(g.at(x, y, z)) - (norm(q) - 1.0));
        }
    CHECK(err / (16.0 * 16 * 16) < 5e-3);
  }
  SECTION("memory cap rejects oversized volumes") {
    CHECK_THROWS_WITH(export_sdf_grid(field, 4096, /*mem_cap=*/1024 * 1024),
                      Catch::Matchers::ContainsSubstring("memory cap"));
  }
  SECTION("ngfv round-trip") {
    TempDir tmp;
    SdfGrid g = export_sdf_grid(field, 8);
    save_sdf_grid(g, tmp.file("g.ngfv"));
    SdfGrid r = load_sdf_grid(tmp.file("g.ngfv"));
    CHECK(r.nx == 8);
    CHECK(r.values == g.values);
  }
}

TEST_CASE("ngfs sample cache round-trips") {
  TriangleMesh m = testutil::icosphere(1);
  SdfOracle oracle(m);
  auto s = sample_sdf_queries(oracle, 32, 4);
  TempDir tmp;
  save_sdf_samples(s, tmp.file("s.ngfs"));
  auto r = load_sdf_samples(tmp.file("s.ngfs"));
  REQUIRE(r.size() == s.size());
  for (size_t i = 0; i < r.size(); ++i) {
    CHECK(float(r[i].position.x) == float(s[i].position.x));
    CHECK(r[i].signed_distance == s[i].signed_distance);
  }
}
