#include "warplab/fiber.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "warplab/core.hpp"

using namespace warplab;
using Catch::Approx;

namespace {

Field pseudo_random_field(const DiscreteFiber& f, std::uint64_t seed) {
  Rng rng(seed);
  Field u(f.node_count());
  for (auto& v : u) v = rng.uniform(-1.0, 1.0);
  return u;
}

double lb_eigen_error(int nodes) {
  auto f = build_torus({1.0, 1.0}, {nodes, nodes});
  Field u(f.node_count());
  for (int p = 0; p < f.node_count(); ++p)
    u[p] = std::sin(2 * M_PI * f.coords(p)[0]);
  auto lap = laplace_beltrami(f, u);
  double err = 0;
  for (int p = 0; p < f.node_count(); ++p)
    err = std::max(err, std::abs(lap[p] + 4 * M_PI * M_PI * u[p]));
  return err;
}

}  // namespace

TEST_CASE("torus construction") {
  auto f = build_torus({1.0, 1.0}, {64, 64});
  CHECK(f.node_count() == 4096);
  CHECK(f.h[0] == Approx(1.0 / 64));
  CHECK(f.boundary_free());
  CHECK(f.total_volume() == Approx(1.0));
  CHECK_THROWS_AS(build_torus({1.0, 1.0}, {4, 64}), std::invalid_argument);
  CHECK_THROWS_AS(build_torus({-1.0, 1.0}, {64, 64}), std::invalid_argument);
}

TEST_CASE("disk grid construction") {
  auto f = build_disk_grid(2, 3.0, 0.05);
  for (int p = 0; p < f.node_count(); ++p) {
    auto x = f.coords(p);
    CHECK(x[0] * x[0] + x[1] * x[1] <= 9.0 + 1e-9);
  }
  int nb = 0;
  for (int p = 0; p < f.node_count(); ++p)
    if (f.is_boundary(p)) ++nb;
  CHECK(nb > 0);
  CHECK_FALSE(f.boundary_free());
  // area of the disk, up to the lattice boundary layer
  CHECK(f.total_volume() == Approx(M_PI * 9.0).epsilon(0.02));
  CHECK_THROWS_AS(build_disk_grid(2, 3.0, 1.0), std::invalid_argument);
}

TEST_CASE("sphere-product fiber curvature evaluators") {
  auto f = build_sphere_torus(1.0, 4, 16, 1.0);
  CHECK(f.dim() == 3);
  CHECK(f.node_count() == 2562 * 16);
  // tangent basis at vertex 0
  auto p0 = f.sphere.pos[0];
  std::vector<double> t1 = {-p0[1], p0[0], 0.0, 0.0};
  double nrm = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1]);
  t1[0] /= nrm;
  t1[1] /= nrm;
  std::vector<double> t2 = {p0[1] * t1[2] - p0[2] * t1[1],
                            p0[2] * t1[0] - p0[0] * t1[2],
                            p0[0] * t1[1] - p0[1] * t1[0], 0.0};
  std::vector<double> ring = {0.0, 0.0, 0.0, 1.0};
  CHECK(f.sectional(0, t1, t2) == Approx(1.0).margin(1e-12));
  CHECK(f.sectional(0, t1, ring) == Approx(0.0).margin(1e-12));
  CHECK(f.ricci_form(0, t1, t1) == Approx(1.0).margin(1e-12));
  CHECK(f.ricci_form(0, ring, ring) == 0.0);
  CHECK(f.ricci_direction_min() == 0.0);

  auto rho2 = build_sphere_torus(2.0, 2, 16, 1.0);
  CHECK(rho2.sectional(0, t1, t2) == Approx(0.25).margin(1e-12));
}

TEST_CASE("gradient of a constant field vanishes") {
  auto torus = build_torus({1.0, 2.0}, {16, 32});
  Field c(torus.node_count(), 3.5);
  auto g = gradient(torus, c);
  for (int d = 0; d < 2; ++d) CHECK(linf(g.comp[d]) == 0.0);
  auto prod = build_sphere_torus(1.0, 2, 16, 1.0);
  Field cp(prod.node_count(), 3.5);
  auto gp = gradient(prod, cp);
  double m = 0;
  for (auto& v : gp.sphere_face)
    m = std::max({m, std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
  CHECK(m < 1e-12);
  CHECK(linf(gp.ring_comp) < 1e-14);
}

TEST_CASE("Laplace-Beltrami eigenfunction and second-order convergence") {
  double e32 = lb_eigen_error(32), e64 = lb_eigen_error(64), e128 = lb_eigen_error(128);
  CHECK(e64 < 0.05);
  CHECK(e32 / e64 > 3.5);
  CHECK(e64 / e128 > 3.5);
}

TEST_CASE("div(grad) equals laplace_beltrami and integration by parts is exact") {
  auto torus = build_torus({1.0, 1.0}, {24, 24});
  auto a = pseudo_random_field(torus, 11);
  auto b = pseudo_random_field(torus, 12);
  auto lap = laplace_beltrami(torus, b);
  auto dg = divergence(torus, gradient(torus, b));
  double m = 0;
  for (size_t p = 0; p < lap.size(); ++p) m = std::max(m, std::abs(lap[p] - dg[p]));
  CHECK(m < 1e-10);
  double ibp = grad_dot(torus, gradient(torus, a), gradient(torus, b)) +
               dot(torus, a, lap);
  CHECK(std::abs(ibp) < 1e-10);

  auto prod = build_sphere_torus(1.0, 2, 16, 1.0);
  auto ap = pseudo_random_field(prod, 21);
  auto bp = pseudo_random_field(prod, 22);
  double ibp2 = grad_dot(prod, gradient(prod, ap), gradient(prod, bp)) +
                dot(prod, ap, laplace_beltrami(prod, bp));
  double scale = std::abs(grad_dot(prod, gradient(prod, ap), gradient(prod, bp)));
  CHECK(std::abs(ibp2) < 1e-10 * std::max(1.0, scale));
}

TEST_CASE("product Laplacian converges on a product eigenfunction") {
  // mass-weighted L2 error; the twelve valence-5 vertices cap the max norm
  auto err_at = [](int subdiv, int ring) {
    auto f = build_sphere_torus(1.0, subdiv, ring, 1.0);
    int V = int(f.sphere.pos.size());
    Field u(f.node_count());
    for (int k = 0; k < f.ring_nodes; ++k)
      for (int v = 0; v < V; ++v)
        u[v + V * k] = f.sphere.pos[v][2] *
                       std::cos(2 * M_PI * k * f.ring_h / f.ring_length);
    auto lap = laplace_beltrami(f, u);
    double lam = 2.0 + 4 * M_PI * M_PI;  // sphere l=1 plus first ring mode
    auto m = f.node_measures();
    double err = 0, vol = 0;
    for (int p = 0; p < f.node_count(); ++p) {
      err += m[p] * std::pow(lap[p] + lam * u[p], 2);
      vol += m[p];
    }
    return std::sqrt(err / vol);
  };
  double e2 = err_at(2, 16), e3 = err_at(3, 32), e4 = err_at(4, 64);
  CHECK(e3 < e2);
  CHECK(e4 < e3);
  CHECK(e2 / e4 > 4.0);  // order >= 1 over two halvings
}

TEST_CASE("geodesic balls") {
  SECTION("disk-grid ball node count matches the area") {
    auto f = build_disk_grid(2, 1.6, 0.05);
    int center = nearest_node(f, {0.0, 0.0});
    auto ball = geodesic_ball(f, center, 1.0);
    CHECK_FALSE(ball.truncated);
    CHECK(double(ball.members.size()) ==
          Approx(M_PI / (0.05 * 0.05)).epsilon(0.03));
    CHECK(!ball.boundary.empty());
  }
  SECTION("radius below the spacing keeps only the center") {
    auto f = build_torus({1.0, 1.0}, {16, 16});
    auto ball = geodesic_ball(f, 5, 1.0 / 40);
    CHECK(ball.members == std::vector<int>{5});
  }
  SECTION("oversized torus ball is truncated and swallows every node") {
    auto f = build_torus({1.0, 1.0}, {16, 16});
    auto ball = geodesic_ball(f, 0, 10.0);
    CHECK(ball.truncated);
    CHECK(int(ball.members.size()) == f.node_count());
  }
  SECTION("bad inputs") {
    auto f = build_torus({1.0, 1.0}, {16, 16});
    CHECK_THROWS_AS(geodesic_ball(f, 0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(geodesic_ball(f, -3, 1.0), std::invalid_argument);
  }
}

TEST_CASE("volume growth exponents") {
  SECTION("planar") {
    auto f = build_disk_grid(2, 3.5, 0.05);
    int center = nearest_node(f, {0.0, 0.0});
    auto tab = volume_growth(f, center, {0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
    REQUIRE(tab.has_exponent);
    CHECK(tab.exponent == Approx(2.0).margin(0.1));
    for (size_t i = 1; i < tab.rows.size(); ++i)
      CHECK(tab.rows[i].volume >= tab.rows[i - 1].volume);
  }
  SECTION("three dimensional") {
    auto f = build_disk_grid(3, 3.3, 0.15);
    int center = nearest_node(f, {0.0, 0.0, 0.0});
    auto tab = volume_growth(f, center, {0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
    REQUIRE(tab.has_exponent);
    CHECK(tab.exponent == Approx(3.0).margin(0.1));
  }
  SECTION("degenerate single-radius table") {
    auto f = build_disk_grid(2, 2.0, 0.1);
    auto tab = volume_growth(f, nearest_node(f, {0.0, 0.0}), {1.0});
    CHECK(tab.rows.size() == 1);
    CHECK_FALSE(tab.has_exponent);
  }
  SECTION("truncated balls are excluded from the fit") {
    auto f = build_torus({1.0, 1.0}, {32, 32});
    auto tab = volume_growth(f, 0, {0.1, 0.2, 0.4, 5.0});
    CHECK(tab.rows.back().truncated);
    REQUIRE(tab.has_exponent);
    CHECK(tab.exponent == Approx(2.0).margin(0.25));
  }
  SECTION("radii must increase") {
    auto f = build_torus({1.0, 1.0}, {16, 16});
    CHECK_THROWS_AS(volume_growth(f, 0, {1.0, 0.5}), std::invalid_argument);
  }
}

TEST_CASE("field csv round trip") {
  auto f = build_torus({1.0, 1.0}, {8, 8});
  auto u = pseudo_random_field(f, 99);
  std::string path = "field_roundtrip.csv";
  write_field_csv(path, f.all_coords(), u);
  auto v = read_field_csv(path);
  REQUIRE(v.size() == u.size());
  for (size_t i = 0; i < u.size(); ++i) CHECK(v[i] == Approx(u[i]).margin(1e-15));
}
