#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "warplab/core.hpp"
#include "warplab/fiber.hpp"
#include "warplab/warp.hpp"

namespace warplab {

struct CausalityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConditioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HypothesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Height field over a structured fiber, viewed as the spacelike graph it
// induces inside the warped product. lambda is the enforced ellipticity
// margin: |Du| <= lambda * f(u).
struct GraphState {
  const DiscreteFiber* fiber = nullptr;
  WarpSpec warp;
  Field u;
  double lambda = 0.9;
};

inline GraphState make_state(const DiscreteFiber& fiber, WarpSpec warp, Field u,
                             double lambda) {
  if (fiber.kind == FiberKind::SphereProduct)
    throw std::invalid_argument("graph states require a structured fiber");
  if (fiber.dim() < 2)
    throw std::invalid_argument("graph states require fiber dimension >= 2");
  if (int(u.size()) != fiber.node_count())
    throw std::invalid_argument("make_state: field length mismatch");
  if (!(lambda > 0 && lambda < 1))
    throw std::invalid_argument("make_state: lambda must lie in (0,1)");
  for (size_t p = 0; p < u.size(); ++p)
    if (!warp.interval.contains(u[p]))
      throw std::domain_error("make_state: u leaves the warp interval " +
                              warp.interval.str() + " at node " + std::to_string(p));
  return GraphState{&fiber, std::move(warp), std::move(u), lambda};
}

struct MarginReport {
  enum class Verdict { LambdaElliptic, Spacelike, Failed };
  double max_ratio = 0;  // max |Du| / f(u)
  int worst_node = -1;
  Verdict verdict = Verdict::Failed;
  std::vector<int> failed_nodes;  // ratio >= 1
};

inline MarginReport check_spacelike(const GraphState& st) {
  auto g2 = node_grad_norm2(*st.fiber, st.u);
  MarginReport rep;
  for (int p = 0; p < st.fiber->node_count(); ++p) {
    double ratio = std::sqrt(g2[p]) / st.warp.eval(st.u[p]).f;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.worst_node = p;
    }
    if (ratio >= 1.0) rep.failed_nodes.push_back(p);
  }
  rep.verdict = !rep.failed_nodes.empty() ? MarginReport::Verdict::Failed
                : rep.max_ratio <= st.lambda ? MarginReport::Verdict::LambdaElliptic
                                             : MarginReport::Verdict::Spacelike;
  return rep;
}

struct GeometryOptions {
  std::optional<double> H_constant;  // fix H; otherwise the pointwise trace is used
  // Add the exact n*K^T(H) term to the Codazzi-derived closed forms, making
  // them pointwise identities for non-constant H; the term vanishes on CMC
  // states. Ignored when H_constant is set.
  bool variable_H_correction = true;
  double margin_guard = 0.98;  // conditioning guard on |Du|/f(u)
};

// Per-node extrinsic package of the graph: hyperbolic angle, unit normal,
// shape operator in the coordinate tangent frame {d_i + u_i d_t}, and every
// closed-form Laplacian/curvature slot used by the identity suites.
struct GeometryFields {
  int n = 0;
  int N = 0;
  Field f, fp, fpp, logfpp;
  std::vector<Field> du;  // central-difference components of Du
  Field du_norm2;
  Field W;  // sqrt(f^2 - |Du|^2)
  Field coshphi, sinh2phi, speed;
  Field N_t;                    // = -coshphi
  std::vector<Field> N_F;       // fiber components of the unit normal
  std::vector<Field> grad_tau;  // g_u-gradient of the height, coordinate comps
  std::vector<double> G, Ginv;  // induced metric and inverse, N*n*n row-major
  Field detG;
  std::vector<double> A;  // shape operator, N*n*n row-major, A[p](i,j) = A^i_j
  Field H_shape;          // -(1/n) trace A
  Field traceA2;
  Field g_A_dt_dt;  // g(A dt^T, dt^T)
  double sym_defect_max = 0;
  double tangency_defect_max = 0;
  Field H_used;  // per-node H entering the closed forms
  Field hess2_closed;
  Field hess2_kt;  // direct operator assembly coshphi*A - (f'/f)(I + grad tau (x) d tau)
  Field laptau_rhs, lapftau_rhs, lapfcosh_rhs, deltacosh_rhs;
  Field ric_KT_N, rf_value, ricci_fiber_NN;
  Field variable_H_term;  // n K^T(H) as applied (zero for CMC evaluation)

  double mat(const std::vector<double>& M, int p, int i, int j) const {
    return M[size_t(p) * n * n + i * n + j];
  }
};

namespace detail {

inline void invert_spd(const double* g, double* inv, int n, double& det) {
  if (n == 2) {
    det = g[0] * g[3] - g[1] * g[2];
    inv[0] = g[3] / det;
    inv[3] = g[0] / det;
    inv[1] = -g[1] / det;
    inv[2] = -g[2] / det;
    return;
  }
  if (n == 3) {
    double c00 = g[4] * g[8] - g[5] * g[7];
    double c01 = g[5] * g[6] - g[3] * g[8];
    double c02 = g[3] * g[7] - g[4] * g[6];
    det = g[0] * c00 + g[1] * c01 + g[2] * c02;
    inv[0] = c00 / det;
    inv[1] = (g[2] * g[7] - g[1] * g[8]) / det;
    inv[2] = (g[1] * g[5] - g[2] * g[4]) / det;
    inv[3] = c01 / det;
    inv[4] = (g[0] * g[8] - g[2] * g[6]) / det;
    inv[5] = (g[2] * g[3] - g[0] * g[5]) / det;
    inv[6] = c02 / det;
    inv[7] = (g[1] * g[6] - g[0] * g[7]) / det;
    inv[8] = (g[0] * g[4] - g[1] * g[3]) / det;
    return;
  }
  throw std::invalid_argument("invert_spd: n must be 2 or 3");
}

}  // namespace detail

inline GeometryFields compute_geometry(const GraphState& st,
                                       const GeometryOptions& opts = {}) {
  const DiscreteFiber& fib = *st.fiber;
  GeometryFields g;
  g.n = fib.dim();
  g.N = fib.node_count();
  const int n = g.n, N = g.N;

  g.f.resize(N);
  g.fp.resize(N);
  g.fpp.resize(N);
  g.logfpp.resize(N);
  for (int p = 0; p < N; ++p) {
    auto e = st.warp.eval(st.u[p]);
    g.f[p] = e.f;
    g.fp[p] = e.fp;
    g.fpp[p] = e.fpp;
    g.logfpp[p] = e.logfpp;
  }

  g.du = node_gradient(fib, st.u);
  g.du_norm2.assign(N, 0.0);
  for (int d = 0; d < n; ++d)
    for (int p = 0; p < N; ++p) g.du_norm2[p] += g.du[d][p] * g.du[d][p];

  g.W.resize(N);
  for (int p = 0; p < N; ++p) {
    double ratio = std::sqrt(g.du_norm2[p]) / g.f[p];
    if (ratio >= 1.0)
      throw CausalityError("graph is not spacelike at node " + std::to_string(p) +
                           " (|Du|/f = " + std::to_string(ratio) + ")");
    if (ratio > opts.margin_guard)
      throw ConditioningError("|Du|/f(u) = " + std::to_string(ratio) + " at node " +
                              std::to_string(p) + " exceeds the guard " +
                              std::to_string(opts.margin_guard));
    g.W[p] = std::sqrt(g.f[p] * g.f[p] - g.du_norm2[p]);
  }

  g.coshphi.resize(N);
  g.sinh2phi.resize(N);
  g.speed.resize(N);
  g.N_t.resize(N);
  g.N_F.assign(n, Field(N));
  for (int p = 0; p < N; ++p) {
    g.coshphi[p] = g.f[p] / g.W[p];
    g.sinh2phi[p] = g.du_norm2[p] / (g.W[p] * g.W[p]);
    g.speed[p] = std::sqrt(g.du_norm2[p]) / g.f[p];
    g.N_t[p] = -g.coshphi[p];
    for (int d = 0; d < n; ++d) g.N_F[d][p] = -g.du[d][p] / (g.f[p] * g.W[p]);
  }

  g.G.resize(size_t(N) * n * n);
  g.Ginv.resize(size_t(N) * n * n);
  g.detG.resize(N);
  g.grad_tau.assign(n, Field(N, 0.0));
  for (int p = 0; p < N; ++p) {
    double* G = &g.G[size_t(p) * n * n];
    double* Gi = &g.Ginv[size_t(p) * n * n];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        G[i * n + j] = (i == j ? g.f[p] * g.f[p] : 0.0) - g.du[i][p] * g.du[j][p];
    detail::invert_spd(G, Gi, n, g.detG[p]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g.grad_tau[i][p] += Gi[i * n + j] * g.du[j][p];
  }

  // Shape operator: A E_i = -nabla_{E_i} N with the warped-product connection.
  // Fiber Christoffels vanish for the flat structured kinds.
  g.A.assign(size_t(N) * n * n, 0.0);
  std::vector<std::vector<Field>> dN(n);  // dN[j][i] = central diff of N^j along i
  for (int j = 0; j < n; ++j) dN[j] = node_gradient(fib, g.N_F[j]);
  auto dNt = node_gradient(fib, g.N_t);
  g.tangency_defect_max = 0;
  g.sym_defect_max = 0;
  for (int p = 0; p < N; ++p) {
    double b = g.fp[p] / g.f[p];
    double* A = &g.A[size_t(p) * n * n];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        A[j * n + i] = -(dN[j][i][p] + b * (g.N_t[p] * (i == j ? 1.0 : 0.0) +
                                            g.du[i][p] * g.N_F[j][p]));
    // tangency of nabla_{E_i} N: t-component must equal sum_j A^j_i u_j
    for (int i = 0; i < n; ++i) {
      double t_comp = -(dNt[i][p] + g.f[p] * g.fp[p] * g.N_F[i][p]);
      double tangent = 0;
      for (int j = 0; j < n; ++j) tangent += A[j * n + i] * g.du[j][p];
      g.tangency_defect_max = std::max(g.tangency_defect_max, std::abs(t_comp - tangent));
    }
    // symmetry of the second fundamental form G*A
    const double* G = &g.G[size_t(p) * n * n];
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double sij = 0, sji = 0;
        for (int k = 0; k < n; ++k) {
          sij += G[i * n + k] * A[k * n + j];
          sji += G[j * n + k] * A[k * n + i];
        }
        g.sym_defect_max = std::max(g.sym_defect_max, std::abs(sij - sji));
      }
  }

  g.H_shape.resize(N);
  g.traceA2.resize(N);
  g.g_A_dt_dt.resize(N);
  for (int p = 0; p < N; ++p) {
    const double* A = &g.A[size_t(p) * n * n];
    const double* G = &g.G[size_t(p) * n * n];
    double tr = 0, tr2 = 0;
    for (int i = 0; i < n; ++i) tr += A[i * n + i];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) tr2 += A[i * n + j] * A[j * n + i];
    g.H_shape[p] = -tr / n;
    g.traceA2[p] = tr2;
    // g(A grad tau, grad tau); dt^T = -grad tau, the sign squares away
    double Av[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) Av[i] += A[i * n + k] * g.grad_tau[k][p];
    double val = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) val += G[i * n + j] * Av[i] * g.grad_tau[j][p];
    g.g_A_dt_dt[p] = val;
  }

  g.H_used.resize(N);
  for (int p = 0; p < N; ++p)
    g.H_used[p] = opts.H_constant ? *opts.H_constant : g.H_shape[p];

  g.ricci_fiber_NN.assign(N, 0.0);
  if (fib.kind == FiberKind::SphereProduct)
    throw std::logic_error("unreachable: product fibers rejected in make_state");

  // n K^T(H) = -n f(u) g_u(grad H, grad tau), the exact non-CMC remainder of
  // the Codazzi-derived forms. Zero when H is held constant.
  g.variable_H_term.assign(N, 0.0);
  if (!opts.H_constant && opts.variable_H_correction) {
    auto dH = node_gradient(fib, g.H_shape);
    for (int p = 0; p < N; ++p) {
      const double* Gi = &g.Ginv[size_t(p) * n * n];
      double ip = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ip += dH[i][p] * Gi[i * n + j] * g.du[j][p];
      g.variable_H_term[p] = -double(n) * g.f[p] * ip;
    }
  }

  g.hess2_closed.resize(N);
  g.hess2_kt.resize(N);
  g.laptau_rhs.resize(N);
  g.lapftau_rhs.resize(N);
  g.lapfcosh_rhs.resize(N);
  g.deltacosh_rhs.resize(N);
  g.ric_KT_N.resize(N);
  g.rf_value.resize(N);
  for (int p = 0; p < N; ++p) {
    double f = g.f[p], fp = g.fp[p], b = fp / f, L = g.logfpp[p];
    double c = g.coshphi[p], s = g.sinh2phi[p];
    double H = g.H_used[p];
    double ricNN = g.ricci_fiber_NN[p];
    double tA2 = g.traceA2[p], gA = g.g_A_dt_dt[p];

    g.laptau_rhs[p] = -b * (n + s) - n * H * c;
    g.lapftau_rhs[p] = -n * fp * fp / f + s * f * L - n * H * fp * c;
    g.ric_KT_N[p] = f * c * ricNN - (n - 1) * f * c * s * L;
    g.lapfcosh_rhs[p] = g.ric_KT_N[p] + fp * n * H + f * c * tA2 + g.variable_H_term[p];
    g.deltacosh_rhs[p] = n * H * b * (1 + c * c) + c * (ricNN - n * s * L) +
                         b * b * c * (n + 2 * s) + c * tA2 - 2 * b * gA +
                         g.variable_H_term[p] / f;
    g.rf_value[p] = ricNN - (n - 1) * L * s;
    g.hess2_closed[p] = b * b * ((n - 1) + c * c * c * c) + c * c * tA2 +
                        2 * n * H * b * c - 2 * b * c * gA;

    // |Hess tau|^2 from the operator coshphi*A - (f'/f)(I + grad tau (x) d tau)
    const double* A = &g.A[size_t(p) * n * n];
    double Ht[9];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        Ht[i * n + j] = c * A[i * n + j] - b * ((i == j) ? 1.0 : 0.0) -
                        b * g.grad_tau[i][p] * g.du[j][p];
    double tr2 = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) tr2 += Ht[i * n + j] * Ht[j * n + i];
    g.hess2_kt[p] = tr2;
  }
  return g;
}

// Unit normal as ambient components; throws CausalityError on non-spacelike
// input. Returned via GeometryFields (N_t, N_F).
inline GeometryFields normal_field(const GraphState& st) {
  GeometryOptions opts;
  opts.margin_guard = 1.0;  // normal is defined up to the light cone
  return compute_geometry(st, opts);
}

// ---- divergence-form mean curvature ---------------------------------------
// Independent discretization of H(u): conservative fluxes on staggered edges
// with midpoint coefficients, plus the nodal zeroth-order term.

inline Field mean_curvature_div(const GraphState& st) {
  const DiscreteFiber& fib = *st.fiber;
  const int n = fib.dim(), N = fib.node_count();
  auto gc = node_gradient(fib, st.u);  // central comps for transverse terms
  Field div_term(N, 0.0);
  for (int d = 0; d < n; ++d) {
    Field flux(N, 0.0);
    for (int p = 0; p < N; ++p) {
      int q = fib.shift1(p, d, +1);
      if (q < 0) continue;
      double D = (st.u[q] - st.u[p]) / fib.h[d];
      double grad2 = D * D;
      for (int t = 0; t < n; ++t) {
        if (t == d) continue;
        double T = 0.5 * (gc[t][p] + gc[t][q]);
        grad2 += T * T;
      }
      double um = 0.5 * (st.u[p] + st.u[q]);
      double fm = st.warp.eval(um).f;
      double under = fm * fm - grad2;
      if (under <= 0)
        throw CausalityError("edge gradient reaches the light cone near node " +
                             std::to_string(p));
      flux[p] = D / (n * fm * std::sqrt(under));
    }
    for (int p = 0; p < N; ++p) {
      int q = fib.shift1(p, d, -1);
      double left = q >= 0 ? flux[q] : 0.0;
      div_term[p] += (flux[p] - left) / fib.h[d];
    }
  }
  auto g2 = node_grad_norm2(fib, st.u);
  Field H(N, 0.0);
  for (int p = 0; p < N; ++p) {
    if (fib.is_boundary(p)) continue;
    auto e = st.warp.eval(st.u[p]);
    double W2 = e.f * e.f - g2[p];
    if (W2 <= 0)
      throw CausalityError("graph is not spacelike at node " + std::to_string(p));
    double W = std::sqrt(W2);
    H[p] = -div_term[p] - e.fp / (n * W) * (n + g2[p] / (e.f * e.f));
  }
  return H;
}

// ---- operators under the induced metric g_u -------------------------------

inline std::vector<Field> gu_gradient(const GraphState& st, const GeometryFields& g,
                                      const Field& v) {
  const DiscreteFiber& fib = *st.fiber;
  const int n = g.n, N = g.N;
  auto dv = node_gradient(fib, v);
  std::vector<Field> out(n, Field(N, 0.0));
  for (int p = 0; p < N; ++p) {
    const double* Gi = &g.Ginv[size_t(p) * n * n];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out[i][p] += Gi[i * n + j] * dv[j][p];
  }
  return out;
}

inline Field gu_laplacian(const GraphState& st, const GeometryFields& g,
                          const Field& v) {
  const DiscreteFiber& fib = *st.fiber;
  const int n = g.n, N = g.N;
  auto dv = node_gradient(fib, v);
  // contravariant flux J^i = sqrt(det G) G^{ij} dv_j at nodes
  std::vector<Field> J(n, Field(N, 0.0));
  for (int p = 0; p < N; ++p) {
    double sd = std::sqrt(g.detG[p]);
    const double* Gi = &g.Ginv[size_t(p) * n * n];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) J[i][p] += sd * Gi[i * n + j] * dv[j][p];
  }
  Field out(N, 0.0);
  for (int i = 0; i < n; ++i) {
    auto dJ = node_gradient(fib, J[i]);
    for (int p = 0; p < N; ++p) out[p] += dJ[i][p];
  }
  for (int p = 0; p < N; ++p) out[p] /= std::sqrt(g.detG[p]);
  return out;
}

// Intrinsic |Hess v|^2 under g_u, with Christoffel symbols assembled from
// central differences of the metric field. Independent of the shape-operator
// route; used by the convergence studies.
inline Field gu_hessian_norm2(const GraphState& st, const GeometryFields& g,
                              const Field& v) {
  const DiscreteFiber& fib = *st.fiber;
  const int n = g.n, N = g.N;
  auto dv = node_gradient(fib, v);
  // second partials
  std::vector<std::vector<Field>> d2(n, std::vector<Field>(n, Field(N, 0.0)));
  for (int i = 0; i < n; ++i) {
    auto di = node_gradient(fib, dv[i]);
    for (int j = 0; j < n; ++j) d2[i][j] = di[j];
  }
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < N; ++p) {
      int qp = fib.shift1(p, i, +1), qm = fib.shift1(p, i, -1);
      if (qp >= 0 && qm >= 0)
        d2[i][i][p] = (v[qp] - 2 * v[p] + v[qm]) / (fib.h[i] * fib.h[i]);
    }
  // metric derivatives
  std::vector<std::vector<Field>> dG(n * n);
  for (int a = 0; a < n * n; ++a) {
    Field comp(N);
    for (int p = 0; p < N; ++p) comp[p] = g.G[size_t(p) * n * n + a];
    dG[a] = node_gradient(fib, comp);
  }
  Field out(N, 0.0);
  for (int p = 0; p < N; ++p) {
    const double* Gi = &g.Ginv[size_t(p) * n * n];
    double hess[9];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double gamma_dv = 0;
        for (int k = 0; k < n; ++k) {
          double gam = 0;
          for (int l = 0; l < n; ++l)
            gam += 0.5 * Gi[k * n + l] *
                   (dG[l * n + j][i][p] + dG[l * n + i][j][p] - dG[i * n + j][l][p]);
          gamma_dv += gam * dv[k][p];
        }
        hess[i * n + j] = d2[i][j][p] - gamma_dv;
      }
    double acc = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            acc += Gi[i * n + a] * Gi[j * n + b] * hess[i * n + j] * hess[a * n + b];
    out[p] = acc;
  }
  return out;
}

}  // namespace warplab
