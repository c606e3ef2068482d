#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "warplab/fiber.hpp"
#include "warplab/graph_geometry.hpp"

namespace warplab {

// A fiber together with an optional per-node Riemannian metric. Without a
// metric it is the raw flat fiber; with one it is a graph surface (F, g_u).
struct MetricSurface {
  const DiscreteFiber* fiber = nullptr;
  int n = 0;
  std::vector<double> G;  // per-node n*n metric, empty for the raw fiber
  Field mass;             // node measure under the metric

  bool has_metric() const { return !G.empty(); }

  static MetricSurface from_fiber(const DiscreteFiber& f) {
    if (f.kind == FiberKind::SphereProduct)
      throw std::invalid_argument("capacity surfaces require structured fibers");
    if (f.dim() < 2 || f.dim() > 3)
      throw std::invalid_argument("capacity experiments support dimension 2 or 3");
    MetricSurface s;
    s.fiber = &f;
    s.n = f.dim();
    s.mass = f.node_measures();
    return s;
  }

  static MetricSurface from_state(const GraphState& st, const GeometryFields& g) {
    if (g.n != 2)
      throw std::invalid_argument("graph-surface capacity supports dimension 2");
    MetricSurface s;
    s.fiber = st.fiber;
    s.n = g.n;
    s.G = g.G;
    s.mass.resize(g.N);
    double cell = 1;
    for (double hd : st.fiber->h) cell *= hd;
    for (int p = 0; p < g.N; ++p) s.mass[p] = std::sqrt(g.detG[p]) * cell;
    return s;
  }

  void metric_at(int p, double* out) const {
    if (has_metric()) {
      for (int a = 0; a < n * n; ++a) out[a] = G[size_t(p) * n * n + a];
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i * n + j] = (i == j) ? 1.0 : 0.0;
    }
  }
};

// Geodesic distances from a center node: closed form on raw fibers, Dijkstra
// over an extended lattice stencil under the node metric otherwise. The
// 16-neighborhood keeps the lattice metrication error below ~3%.
inline Field surface_distance(const MetricSurface& s, int center,
                              bool force_dijkstra = false) {
  const DiscreteFiber& fib = *s.fiber;
  if (!s.has_metric() && !force_dijkstra) {
    Field d(fib.node_count());
    for (int p = 0; p < fib.node_count(); ++p) d[p] = fib.distance(center, p);
    return d;
  }
  std::vector<std::vector<int>> offsets;
  if (s.n == 2) {
    offsets = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {2, -1}, {1, 2}, {1, -2}};
  } else {
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          if (a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0))))
            offsets.push_back({a, b, c});
  }
  double Gp[9], Gq[9];
  auto edge_len = [&](int p, int q, const std::vector<int>& off) {
    double dx[3] = {0, 0, 0};
    for (int d = 0; d < s.n; ++d) dx[d] = off[d] * fib.h[d];
    s.metric_at(p, Gp);
    s.metric_at(q, Gq);
    double a = 0, b = 0;
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j) {
        a += Gp[i * s.n + j] * dx[i] * dx[j];
        b += Gq[i * s.n + j] * dx[i] * dx[j];
      }
    return 0.5 * (std::sqrt(std::max(a, 0.0)) + std::sqrt(std::max(b, 0.0)));
  };
  Field dist(fib.node_count(), kInf);
  dist[center] = 0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, center});
  std::vector<int> noff(s.n);
  while (!pq.empty()) {
    auto [d0, p] = pq.top();
    pq.pop();
    if (d0 > dist[p] + 1e-15) continue;
    for (auto& off : offsets)
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        for (int k = 0; k < s.n; ++k) noff[k] = sgn * off[k];
        int q = fib.lattice_shift(p, noff);
        if (q < 0) continue;
        double nd = d0 + edge_len(p, q, off);
        if (nd < dist[q] - 1e-15) {
          dist[q] = nd;
          pq.push({nd, q});
        }
      }
  }
  return dist;
}

// Assembled Dirichlet energy form: E(v) = v^T K v equals the metric Dirichlet
// integral. Flat fibers use staggered edge differences; metric surfaces use
// P1 elements on the split cells, so the form stays symmetric positive.
struct DirichletForm {
  int N = 0;
  struct Element {
    int nodes[3];
    int nn;
    double K[9];  // local stiffness, nn x nn
  };
  std::vector<Element> elements;
  Eigen::SparseMatrix<double> K;
  Field mass;

  double energy(const Field& v) const {
    double e = 0;
    for (const auto& el : elements)
      for (int a = 0; a < el.nn; ++a)
        for (int b = 0; b < el.nn; ++b)
          e += el.K[a * el.nn + b] * v[el.nodes[a]] * v[el.nodes[b]];
    return e;
  }

  // Energy restricted to elements fully inside the mask.
  double energy_within(const Field& v, const std::vector<char>& mask) const {
    double e = 0;
    for (const auto& el : elements) {
      bool in = true;
      for (int a = 0; a < el.nn; ++a) in = in && mask[el.nodes[a]];
      if (!in) continue;
      for (int a = 0; a < el.nn; ++a)
        for (int b = 0; b < el.nn; ++b)
          e += el.K[a * el.nn + b] * v[el.nodes[a]] * v[el.nodes[b]];
    }
    return e;
  }

  // Metric Laplacian: Delta v = -(K v) / mass.
  Field laplacian(const Field& v) const {
    Eigen::Map<const Eigen::VectorXd> vv(v.data(), N);
    Eigen::VectorXd kv = K * vv;
    Field out(N);
    for (int p = 0; p < N; ++p) out[p] = -kv[p] / mass[p];
    return out;
  }
};

inline DirichletForm build_form(const MetricSurface& s) {
  const DiscreteFiber& fib = *s.fiber;
  DirichletForm form;
  form.N = fib.node_count();
  form.mass = s.mass;
  if (!s.has_metric()) {
    double cell = 1;
    for (double hd : fib.h) cell *= hd;
    for (int d = 0; d < s.n; ++d)
      for (int p = 0; p < form.N; ++p) {
        int q = fib.shift1(p, d, +1);
        if (q < 0) continue;
        double w = cell / (fib.h[d] * fib.h[d]);
        DirichletForm::Element el;
        el.nn = 2;
        el.nodes[0] = p;
        el.nodes[1] = q;
        el.K[0] = w;
        el.K[1] = -w;
        el.K[2] = -w;
        el.K[3] = w;
        form.elements.push_back(el);
      }
  } else {
    // two P1 triangles per lattice cell, metric averaged over the corners
    double h0 = fib.h[0], h1 = fib.h[1];
    double g[4], gi[4];
    auto add_triangle = [&](int a, int b, int c, const double grads[3][2]) {
      // average metric of the corners
      double acc[4] = {0, 0, 0, 0};
      double tmp[4];
      for (int v : {a, b, c}) {
        s.metric_at(v, tmp);
        for (int k = 0; k < 4; ++k) acc[k] += tmp[k] / 3.0;
      }
      for (int k = 0; k < 4; ++k) g[k] = acc[k];
      double det = g[0] * g[3] - g[1] * g[2];
      if (det <= 0) throw std::invalid_argument("build_form: degenerate metric");
      gi[0] = g[3] / det;
      gi[3] = g[0] / det;
      gi[1] = gi[2] = -g[1] / det;
      double area = 0.5 * h0 * h1 * std::sqrt(det);
      DirichletForm::Element el;
      el.nn = 3;
      el.nodes[0] = a;
      el.nodes[1] = b;
      el.nodes[2] = c;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double acc2 = 0;
          for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
              acc2 += grads[i][x] * gi[x * 2 + y] * grads[j][y];
          el.K[i * 3 + j] = area * acc2;
        }
      form.elements.push_back(el);
    };
    for (int p = 0; p < form.N; ++p) {
      int px = fib.shift1(p, 0, +1);
      int py = fib.shift1(p, 1, +1);
      if (px < 0 || py < 0) continue;
      std::vector<int> diag_off = {1, 1};
      int pxy = fib.lattice_shift(p, diag_off);
      if (pxy < 0) continue;
      // triangle (p, px, py): hat gradients in coordinates
      double g1[3][2] = {{-1 / h0, -1 / h1}, {1 / h0, 0}, {0, 1 / h1}};
      add_triangle(p, px, py, g1);
      // triangle (px, pxy, py)
      double g2[3][2] = {{1 / h0, -1 / h1}, {0, 1 / h1}, {-1 / h0, 0}};
      add_triangle(px, pxy, py, g2);
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(form.elements.size() * 9);
  for (const auto& el : form.elements)
    for (int a = 0; a < el.nn; ++a)
      for (int b = 0; b < el.nn; ++b)
        trips.emplace_back(el.nodes[a], el.nodes[b], el.K[a * el.nn + b]);
  form.K.resize(form.N, form.N);
  form.K.setFromTriplets(trips.begin(), trips.end());
  return form;
}

struct CapacityReport {
  double r = 0, R = 0;
  double cap = 0;  // Dirichlet energy of the equilibrium potential
  double mu = 0;   // 1 / cap
  Field potential;
  double residual = 0;     // max |Delta v| over free nodes
  double cg_residual = 0;  // achieved relative CG residual
  bool truncated = false;
  double max_principle_violation = 0;
  int inner_nodes = 0, outer_nodes = 0, free_nodes = 0;
};

inline CapacityReport capacity(const MetricSurface& s, const DirichletForm& form,
                               int center, double r, double R,
                               bool force_dijkstra = false, double cg_tol = 1e-10) {
  if (!(r > 0) || !(r < R)) throw std::invalid_argument("capacity: need 0 < r < R");
  const DiscreteFiber& fib = *s.fiber;
  CapacityReport rep;
  rep.r = r;
  rep.R = R;
  rep.truncated = R >= fib.ball_extent(center);
  Field dist = surface_distance(s, center, force_dijkstra);

  std::vector<int> state(form.N, 0);  // 0 free, 1 inner, 2 outer
  for (int p = 0; p < form.N; ++p) {
    if (dist[p] <= r)
      state[p] = 1;
    else if (dist[p] >= R || (fib.kind == FiberKind::Grid && fib.is_boundary(p)))
      state[p] = 2;
  }
  Field v(form.N, 0.0);
  std::vector<int> free_ids;
  for (int p = 0; p < form.N; ++p) {
    if (state[p] == 1) {
      v[p] = 1.0;
      rep.inner_nodes++;
    } else if (state[p] == 2) {
      rep.outer_nodes++;
    } else {
      free_ids.push_back(p);
    }
  }
  rep.free_nodes = int(free_ids.size());
  if (rep.inner_nodes == 0 || rep.outer_nodes == 0)
    throw std::invalid_argument("capacity: empty condenser plate");

  if (!free_ids.empty()) {
    std::vector<int> col(form.N, -1);
    for (int i = 0; i < int(free_ids.size()); ++i) col[free_ids[i]] = i;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(free_ids.size());
    for (int k = 0; k < form.K.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(form.K, k); it; ++it) {
        int i = int(it.row()), j = int(it.col());
        if (col[i] < 0) continue;
        if (col[j] >= 0)
          trips.emplace_back(col[i], col[j], it.value());
        else
          rhs[col[i]] -= it.value() * v[j];
      }
    Eigen::SparseMatrix<double> Kff(free_ids.size(), free_ids.size());
    Kff.setFromTriplets(trips.begin(), trips.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(cg_tol);
    cg.setMaxIterations(200000);
    cg.compute(Kff);
    Eigen::VectorXd x = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      throw std::runtime_error("capacity: conjugate gradient did not converge");
    rep.cg_residual = cg.error();
    for (int i = 0; i < int(free_ids.size()); ++i) v[free_ids[i]] = x[i];
  }

  rep.cap = form.energy(v);
  rep.mu = 1.0 / rep.cap;
  rep.potential = v;
  Field lap = form.laplacian(v);
  for (int p : free_ids) rep.residual = std::max(rep.residual, std::abs(lap[p]));
  for (int p = 0; p < form.N; ++p)
    rep.max_principle_violation =
        std::max({rep.max_principle_violation, v[p] - 1.0, -v[p]});
  return rep;
}

inline CapacityReport capacity(const MetricSurface& s, int center, double r,
                               double R, bool force_dijkstra = false,
                               double cg_tol = 1e-10) {
  auto form = build_form(s);
  return capacity(s, form, center, r, R, force_dijkstra, cg_tol);
}

// ---- parabolicity trend -----------------------------------------------------

struct TrendThresholds {
  double min_span = 8.0;           // required R_last / R_first
  double decrease_fraction = 0.3;  // parabolic needs cap to drop by this much
  double asymptote_fraction = 0.1; // ... and the fitted asymptote below this
};

struct TrendReport {
  struct Row {
    double R = 0, cap = 0, residual = 0;
    bool truncated = false;
  };
  double r = 0;
  std::vector<Row> rows;
  std::string verdict;  // parabolic-trend | nonparabolic-trend | no-verdict
  double fitted_asymptote = 0;
  double decrease = 0;  // 1 - cap_last / cap_first
  bool monotone = true;
  bool any_truncated = false;
};

// Verdict from the capacity rows alone, so the classification is testable
// against synthetic data.
inline void classify_trend(TrendReport& rep, TrendThresholds th = {}) {
  rep.monotone = true;
  for (size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].cap > rep.rows[i - 1].cap * (1 + 1e-12)) rep.monotone = false;
  if (rep.rows.size() < 3 || rep.any_truncated) {
    rep.verdict = "no-verdict";
    return;
  }
  // capacity against 1/log(R/r); the planar condenser decays linearly there
  std::vector<double> x, y;
  for (auto& row : rep.rows) {
    x.push_back(1.0 / std::log(row.R / rep.r));
    y.push_back(row.cap);
  }
  rep.fitted_asymptote = ls_affine(x, y).first;
  double first = rep.rows.front().cap, last = rep.rows.back().cap;
  rep.decrease = 1.0 - last / first;
  double span = rep.rows.back().R / rep.rows.front().R;
  if (span < th.min_span) {
    rep.verdict = "no-verdict";
  } else if (rep.decrease >= th.decrease_fraction &&
             rep.fitted_asymptote <= th.asymptote_fraction * first) {
    rep.verdict = "parabolic-trend";
  } else if (rep.fitted_asymptote > th.asymptote_fraction * first) {
    rep.verdict = "nonparabolic-trend";
  } else {
    rep.verdict = "no-verdict";
  }
}

inline TrendReport parabolicity_trend(const MetricSurface& s, int center, double r,
                                      const std::vector<double>& R_list,
                                      bool force_dijkstra = false,
                                      TrendThresholds th = {}) {
  for (size_t i = 1; i < R_list.size(); ++i)
    if (R_list[i] <= R_list[i - 1])
      throw std::invalid_argument("parabolicity_trend: radii must increase");
  TrendReport rep;
  rep.r = r;
  auto form = build_form(s);
  for (double R : R_list) {
    auto c = capacity(s, form, center, r, R, force_dijkstra);
    rep.rows.push_back({R, c.cap, c.residual, c.truncated});
    rep.any_truncated = rep.any_truncated || c.truncated;
  }
  classify_trend(rep, th);
  return rep;
}

// ---- capacity energy bound --------------------------------------------------

struct EnergyBoundReport {
  double lhs = 0;       // energy of v inside B_r
  double rhs = 0;       // 4 sup_{B_R} v^2 * cap(r, R)
  double cap = 0;
  double sup_v2 = 0;
  bool pass = false;
  double worst_hypothesis = 0;  // min of v * Delta v over checked nodes
  int worst_node = -1;
};

// Checks  int_{B_r} |grad v|^2 <= 4 sup_{B_R} v^2 * cap(r,R)  for fields with
// v * Delta v >= 0. The hypothesis is evaluated away from `exclude` (condenser
// plates carry a boundary measure, not a pointwise Laplacian).
inline EnergyBoundReport capacity_energy_bound(const MetricSurface& s, const Field& v,
                                       int center, double r, double R,
                                       const std::vector<char>& exclude = {},
                                       double hyp_tol = 1e-6,
                                       bool force_dijkstra = false) {
  const DiscreteFiber& fib = *s.fiber;
  if (int(v.size()) != fib.node_count())
    throw std::invalid_argument("capacity_energy_bound: field length mismatch");
  auto form = build_form(s);
  Field dist = surface_distance(s, center, force_dijkstra);
  Field lap = form.laplacian(v);

  EnergyBoundReport rep;
  rep.worst_hypothesis = kInf;
  for (int p = 0; p < fib.node_count(); ++p) {
    if (dist[p] > R) continue;
    if (!exclude.empty() && exclude[p]) continue;
    if (fib.kind == FiberKind::Grid && fib.is_boundary(p)) continue;
    double h = v[p] * lap[p];
    if (h < rep.worst_hypothesis) {
      rep.worst_hypothesis = h;
      rep.worst_node = p;
    }
  }
  if (rep.worst_hypothesis < -hyp_tol)
    throw HypothesisError("capacity_energy_bound: v * Delta v = " +
                          std::to_string(rep.worst_hypothesis) + " at node " +
                          std::to_string(rep.worst_node));

  std::vector<char> in_r(fib.node_count(), 0);
  for (int p = 0; p < fib.node_count(); ++p) in_r[p] = dist[p] <= r;
  rep.lhs = form.energy_within(v, in_r);
  auto c = capacity(s, form, center, r, R, force_dijkstra);
  rep.cap = c.cap;
  for (int p = 0; p < fib.node_count(); ++p)
    if (dist[p] <= R) rep.sup_v2 = std::max(rep.sup_v2, v[p] * v[p]);
  rep.rhs = 4.0 * rep.sup_v2 * rep.cap;
  rep.pass = rep.lhs <= rep.rhs * (1 + 1e-10) + 1e-14;
  return rep;
}

}  // namespace warplab
