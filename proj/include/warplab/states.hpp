#pragma once

#include <cmath>
#include <vector>

#include "warplab/fiber.hpp"
#include "warplab/graph_geometry.hpp"
#include "warplab/warp.hpp"

namespace warplab {

// Height field t0 + sum of low-frequency torus modes. The continuum object is
// resolution-independent, so the same state can be sampled across a
// refinement chain.
struct AnalyticState {
  double t0 = 0;
  struct Mode {
    int kx = 0, ky = 0;
    double amp = 0, phase = 0;
  };
  std::vector<Mode> modes;
  double Lx = 1, Ly = 1;

  double eval(double x, double y) const {
    double v = t0;
    for (const auto& m : modes)
      v += m.amp * std::cos(2 * M_PI * (m.kx * x / Lx + m.ky * y / Ly) + m.phase);
    return v;
  }

  void grad(double x, double y, double& gx, double& gy) const {
    gx = gy = 0;
    for (const auto& m : modes) {
      double s = -m.amp *
                 std::sin(2 * M_PI * (m.kx * x / Lx + m.ky * y / Ly) + m.phase) *
                 2 * M_PI;
      gx += s * m.kx / Lx;
      gy += s * m.ky / Ly;
    }
  }

  Field sample(const DiscreteFiber& torus) const {
    Field u(torus.node_count());
    for (int p = 0; p < torus.node_count(); ++p) {
      auto x = torus.coords(p);
      u[p] = eval(x[0], x[1]);
    }
    return u;
  }

  // max over a dense sample of |Du| / f(u)
  double max_ratio(const WarpSpec& warp, int samples = 256) const {
    double m = 0;
    for (int i = 0; i < samples; ++i)
      for (int j = 0; j < samples; ++j) {
        double x = (i + 0.5) * Lx / samples, y = (j + 0.5) * Ly / samples;
        double gx, gy;
        grad(x, y, gx, gy);
        double u = eval(x, y);
        if (!warp.interval.contains(u)) return kInf;
        m = std::max(m, std::sqrt(gx * gx + gy * gy) / warp.eval(u).f);
      }
    return m;
  }
};

// Random smooth spacelike state with max |Du|/f(u) close to target_ratio.
inline AnalyticState random_analytic_state(const WarpSpec& warp, double t0,
                                           double Lx, double Ly,
                                           double target_ratio, Rng& rng,
                                           int max_wavenumber = 2, int n_modes = 4) {
  AnalyticState st;
  st.t0 = t0;
  st.Lx = Lx;
  st.Ly = Ly;
  for (int m = 0; m < n_modes; ++m) {
    AnalyticState::Mode mode;
    do {
      mode.kx = rng.uniform_int(-max_wavenumber, max_wavenumber);
      mode.ky = rng.uniform_int(-max_wavenumber, max_wavenumber);
    } while (mode.kx == 0 && mode.ky == 0);
    mode.amp = rng.uniform(0.2, 1.0);
    mode.phase = rng.uniform(0.0, 2 * M_PI);
    st.modes.push_back(mode);
  }
  for (int pass = 0; pass < 4; ++pass) {
    double m = st.max_ratio(warp, 128);
    if (!std::isfinite(m)) {
      // fell out of the warp interval: shrink hard and retry
      for (auto& mode : st.modes) mode.amp *= 0.25;
      continue;
    }
    if (m <= 0) break;
    double scale = target_ratio / m;
    for (auto& mode : st.modes) mode.amp *= scale;
  }
  return st;
}

}  // namespace warplab
