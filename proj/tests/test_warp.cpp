#include "warplab/warp.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "warplab/fiber.hpp"

using namespace warplab;
using Catch::Approx;

namespace {

// 4th-order central differences, the independent oracle for derivatives.
struct Fd {
  double fp, fpp;
};
template <class F>
Fd fd4(F&& f, double t, double h) {
  Fd out;
  out.fp = (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
  out.fpp = (-f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) -
             f(t - 2 * h)) / (12 * h * h);
  return out;
}

std::vector<WarpSpec> analytic_families() {
  return {WarpSpec::constant(2.0),
          WarpSpec::linear(1.0, 0.0, {0.0, kInf}),
          WarpSpec::power(0.5, {0.0, kInf}),
          WarpSpec::exponential(-1.0),
          WarpSpec::logistic(2.0, 1.0, {0.05, 10.0})};
}

}  // namespace

TEST_CASE("eval_warp closed forms") {
  auto c = WarpSpec::constant(1.0);
  auto e0 = c.eval(0.3);
  CHECK(e0.f == 1.0);
  CHECK(e0.fp == 0.0);
  CHECK(e0.fpp == 0.0);
  CHECK(e0.logfpp == 0.0);

  auto lin = WarpSpec::linear(1.0, 0.0, {0.0, kInf});
  auto e1 = lin.eval(2.0);
  CHECK(e1.f == 2.0);
  CHECK(e1.fp == 1.0);
  CHECK(e1.fpp == 0.0);
  CHECK(e1.logfpp == Approx(-0.25).margin(1e-15));

  auto ex = WarpSpec::exponential(-1.0);
  auto e2 = ex.eval(0.0);
  CHECK(e2.f == 1.0);
  CHECK(e2.fp == -1.0);
  CHECK(e2.fpp == 1.0);
  CHECK(e2.logfpp == 0.0);
}

TEST_CASE("eval_warp domain error names the interval") {
  auto lin = WarpSpec::linear(1.0, 0.0, {0.0, kInf});
  CHECK_THROWS_WITH(lin.eval(-1.0), Catch::Matchers::ContainsSubstring("(0"));
  CHECK_THROWS_AS(lin.eval(0.0), std::domain_error);  // interval is open
}

TEST_CASE("slice mean curvature and shape scalar") {
  CHECK(slice_mean_curvature(WarpSpec::constant(1.0), 5.0) == 0.0);
  auto lin = WarpSpec::linear(1.0, 0.0, {0.0, kInf});
  CHECK(slice_mean_curvature(lin, 2.0) == Approx(-0.5));
  CHECK(slice_shape_scalar(lin, 2.0) == Approx(0.5));
  CHECK(slice_mean_curvature(WarpSpec::exponential(-1.0), 0.0) == Approx(1.0));
}

TEST_CASE("analytic derivatives match 4th-order finite differences") {
  Rng rng(20240801);
  for (auto& spec : analytic_families()) {
    Interval box = spec.finite_slab(Interval{0.2, 6.0});
    for (int trial = 0; trial < 100; ++trial) {
      double t = rng.uniform(box.lo + 0.05, box.hi - 0.05);
      double h = 1e-3 * std::max(1.0, std::abs(t));
      auto e = spec.eval(t);
      auto fd = fd4([&](double s) { return spec.eval(s).f; }, t, h);
      auto fdlog = fd4([&](double s) { return std::log(spec.eval(s).f); }, t, h);
      // absolute floor keeps finite-difference roundoff out of the relative
      // comparison when the true derivative vanishes
      double scale_p = std::max(std::abs(e.fp), 1e-2);
      double scale_pp = std::max(std::abs(e.fpp), 1e-2);
      double scale_lg = std::max(std::abs(e.logfpp), 1e-2);
      CHECK(std::abs(e.fp - fd.fp) / scale_p < 1e-6);
      CHECK(std::abs(e.fpp - fd.fpp) / scale_pp < 1e-6);
      CHECK(std::abs(e.logfpp - fdlog.fpp) / scale_lg < 1e-6);
    }
  }
}

TEST_CASE("positivity is validated per family") {
  CHECK_THROWS_AS(WarpSpec::constant(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(WarpSpec::linear(1.0, 0.0, Interval{-1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(WarpSpec::linear(1.0, 0.0, Interval{-kInf, 5.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(WarpSpec::power(2.0, Interval{-1.0, 1.0}), std::invalid_argument);
  CHECK_NOTHROW(WarpSpec::linear(-1.0, 5.0, Interval{-kInf, 5.0}));
}

TEST_CASE("tabulated spline tracks its source function") {
  std::vector<double> ts, ys;
  for (int i = 0; i <= 400; ++i) {
    double t = 1.0 + 2.0 * i / 400.0;
    ts.push_back(t);
    ys.push_back(t * std::exp(-0.3 * t));
  }
  auto spec = WarpSpec::tabulated(ts, ys);
  for (double t : {1.3, 1.9, 2.55}) {
    auto e = spec.eval(t);
    double f = t * std::exp(-0.3 * t);
    double fp = (1 - 0.3 * t) * std::exp(-0.3 * t);
    CHECK(e.f == Approx(f).epsilon(1e-8));
    CHECK(e.fp == Approx(fp).epsilon(1e-4));
  }
  std::vector<double> bad = ys;
  bad[5] = -1.0;
  CHECK_THROWS_AS(WarpSpec::tabulated(ts, bad), std::invalid_argument);
}

TEST_CASE("concavity flags") {
  CHECK(WarpSpec::linear(1.0, 0.0, {0.0, kInf}).f_concave_on({1.0, 3.0}));
  CHECK(WarpSpec::power(0.5, {0.0, kInf}).f_concave_on({1.0, 3.0}));
  CHECK_FALSE(WarpSpec::exponential(1.0).f_concave_on({0.0, 2.0}));
  CHECK(WarpSpec::logistic(1.0, 1.0, {0.1, 6.0}).f_concave_on({0.1, 6.0}));
  CHECK_FALSE(WarpSpec::logistic(1.0, 1.0, {-6.0, -0.1}).f_concave_on({-6.0, -0.1}));
  CHECK(WarpSpec::logistic(1.0, 1.0, {-6.0, 6.0}).log_concave_on({-6.0, 6.0}));
  CHECK_FALSE(WarpSpec::power(-1.0, {0.0, kInf}).log_concave_on({1.0, 2.0}));
}

TEST_CASE("TCC certificate on the supported fibers") {
  auto torus = build_torus({1.0, 1.0}, {16, 16});

  SECTION("static product over a flat torus is certified") {
    auto rep = check_tcc(WarpSpec::constant(1.0), torus, 2);
    CHECK(rep.f_concave);
    CHECK(rep.fiber_ricci_min == 0.0);
    CHECK(rep.sup_ricci_bound_needed == Approx(0.0).margin(1e-12));
    CHECK(rep.satisfied);
  }
  SECTION("f = t over a flat fiber is certified") {
    auto rep = check_tcc(WarpSpec::linear(1.0, 0.0, {0.0, kInf}), torus, 2,
                         Interval{1.0, 3.0});
    CHECK(rep.f_concave);
    CHECK(rep.sup_ricci_bound_needed == Approx(-2.0).margin(1e-9));
    CHECK(rep.satisfied);
  }
  SECTION("convex warp fails with f_concave = false") {
    auto rep = check_tcc(WarpSpec::exponential(1.0), torus, 2, Interval{0.0, 2.0});
    CHECK_FALSE(rep.f_concave);
    CHECK_FALSE(rep.satisfied);
  }
  SECTION("fiber dimension must match") {
    CHECK_THROWS_AS(check_tcc(WarpSpec::constant(1.0), torus, 3),
                    std::invalid_argument);
  }
  SECTION("sphere product fiber") {
    auto prod = build_sphere_torus(1.0, 2, 16, 1.0);
    auto rep = check_tcc(WarpSpec::constant(1.0), prod, 3);
    CHECK(rep.satisfied);
  }
}

TEST_CASE("TCC verdict is monotone in the data") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    double ricmin = rng.uniform(-3.0, 3.0);
    double sup = rng.uniform(-3.0, 3.0);
    bool concave = rng.uniform(0.0, 1.0) < 0.5;
    bool base = tcc_satisfied(concave, ricmin, sup);
    if (base) {
      CHECK(tcc_satisfied(concave, ricmin + 1.0, sup));
      CHECK(tcc_satisfied(concave, ricmin, sup - 1.0));
    }
  }
}
