#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "warplab/fiber.hpp"
#include "warplab/graph_geometry.hpp"
#include "warplab/states.hpp"
#include "warplab/warp.hpp"

namespace warplab {

struct SolveConfig {
  double H = 0;
  double lambda = 0.9;
  double tol_residual = 1e-9;  // scaled max-norm
  int max_newton = 40;
  double damping_init = 1.0;
  double backtrack = 0.5;
  int max_backtracks = 25;
  bool continuation = true;  // pseudo-transient fallback after Newton stalls
  double dt0 = 0.05;
  int max_flow_steps = 400;
  int restarts = 1;  // independent random starts for nonexistence probing
  std::uint64_t seed = 1;
  double t0 = 0;          // center height for random initial data
  double init_ratio = 0.5;  // random data targets init_ratio * lambda gradient
};

struct SolveResult {
  enum class Status {
    Converged,
    NonexistenceEvidence,
    Diverged,
    ConstraintViolated,
    MaxIters
  };
  Status status = Status::Diverged;
  Field u_final;
  std::vector<double> residual_history;  // scaled norms, one per accepted step
  std::optional<double> slice_t0;
  double slice_deviation = kInf;
  double constraint_min_margin = kInf;  // min over iterates of lambda f(u) - |Du|
  int newton_iters = 0;
  int restarts_used = 1;
  std::string message;
};

inline const char* status_name(SolveResult::Status s) {
  switch (s) {
    case SolveResult::Status::Converged: return "converged";
    case SolveResult::Status::NonexistenceEvidence: return "nonexistence-evidence";
    case SolveResult::Status::Diverged: return "diverged";
    case SolveResult::Status::ConstraintViolated: return "constraint-violated";
    case SolveResult::Status::MaxIters: return "max-iters";
  }
  return "?";
}

namespace detail {

struct EdgeGeom {
  double D = 0;       // (u_q - u_p)/h
  double s = 0;       // |Du|^2 sampled on the edge
  double um = 0;      // midpoint height
  double T[3] = {};   // averaged transverse components
  bool ok = false;    // stays below the light cone
};

}  // namespace detail

// Prescribed-curvature residual: r(u) = div(Du / (n f W)) + H + z(u), which
// vanishes exactly when the divergence-form mean curvature equals H. Fluxes
// live on staggered edges with midpoint coefficients; z carries the warp term.
class CmcSystem {
 public:
  CmcSystem(const DiscreteFiber& fib, const WarpSpec& warp, double lambda)
      : fib_(fib), warp_(warp), lambda_(lambda), n_(fib.dim()) {
    if (fib.kind == FiberKind::SphereProduct)
      throw std::invalid_argument("solver requires a structured fiber");
    // constant-mode kernel: f' == 0 leaves r(u) invariant under constant
    // shifts on boundary-free fibers; deflate with a Lagrange border
    deflate_ = warp.family == WarpFamily::Constant && fib.boundary_free();
    free_.reserve(fib.node_count());
    for (int p = 0; p < fib.node_count(); ++p)
      if (!fib.is_boundary(p)) free_.push_back(p);
  }

  int n() const { return n_; }
  bool deflated() const { return deflate_; }
  const std::vector<int>& free_nodes() const { return free_; }

  // largest |Du|/f(u) over node and edge samplings; inf when u leaves the
  // warp interval
  double margin_ratio(const Field& u) const {
    for (double v : u)
      if (!warp_.interval.contains(v)) return kInf;
    auto g2 = node_grad_norm2(fib_, u);
    double worst = 0;
    for (int p = 0; p < fib_.node_count(); ++p)
      worst = std::max(worst, std::sqrt(g2[p]) / warp_.eval(u[p]).f);
    auto gc = node_gradient(fib_, u);
    for (int d = 0; d < n_; ++d)
      for (int p = 0; p < fib_.node_count(); ++p) {
        auto eg = edge_geom(u, gc, p, d);
        if (eg.ok)
          worst = std::max(worst, std::sqrt(eg.s) / warp_.eval(eg.um).f);
        else if (fib_.shift1(p, d, +1) >= 0)
          return kInf;
      }
    return worst;
  }

  double min_margin(const Field& u) const {
    auto g2 = node_grad_norm2(fib_, u);
    double m = kInf;
    for (int p = 0; p < fib_.node_count(); ++p)
      m = std::min(m, lambda_ * warp_.eval(u[p]).f - std::sqrt(g2[p]));
    return m;
  }

  Field residual(const Field& u, double H) const {
    check_field(fib_, u, "residual");
    const int N = fib_.node_count();
    auto gc = node_gradient(fib_, u);
    Field r(N, 0.0);
    for (int d = 0; d < n_; ++d) {
      Field flux(N, 0.0);
      for (int p = 0; p < N; ++p) {
        auto eg = edge_geom(u, gc, p, d);
        if (!eg.ok) {
          if (fib_.shift1(p, d, +1) >= 0)
            throw CausalityError("edge gradient reaches the light cone near node " +
                                 std::to_string(p));
          continue;
        }
        auto e = warp_.eval(eg.um);
        double W = std::sqrt(e.f * e.f - eg.s);
        flux[p] = eg.D / (n_ * e.f * W);
      }
      for (int p = 0; p < N; ++p) {
        int q = fib_.shift1(p, d, -1);
        double left = q >= 0 ? flux[q] : 0.0;
        r[p] += (flux[p] - left) / fib_.h[d];
      }
    }
    auto g2 = node_grad_norm2(fib_, u);
    for (int p = 0; p < N; ++p) {
      if (fib_.is_boundary(p)) {
        r[p] = 0;
        continue;
      }
      auto e = warp_.eval(u[p]);
      double W2 = e.f * e.f - g2[p];
      if (W2 <= 0)
        throw CausalityError("node gradient reaches the light cone at node " +
                             std::to_string(p));
      double W = std::sqrt(W2);
      r[p] += H + e.fp / (n_ * W) * (n_ + g2[p] / (e.f * e.f));
    }
    return r;
  }

  double scaled_norm(const Field& r, const Field& u, double H) const {
    double scale = 1.0;
    for (int p = 0; p < fib_.node_count(); ++p) {
      auto e = warp_.eval(u[p]);
      scale = std::max(scale, std::abs(H) + std::abs(e.fp / e.f));
    }
    double m = 0;
    for (int p : free_) m = std::max(m, std::abs(r[p]));
    return m / scale;
  }

  // Analytic Jacobian of the residual on free nodes, as triplets into the
  // (possibly bordered) system matrix.
  Eigen::SparseMatrix<double> jacobian(const Field& u) const {
    const int N = fib_.node_count();
    std::vector<int> col(N, -1);
    for (int i = 0; i < int(free_.size()); ++i) col[free_[i]] = i;
    int dim = int(free_.size()) + (deflate_ ? 1 : 0);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(N) * (3 * n_ * n_ + 4));
    auto gc = node_gradient(fib_, u);

    auto add = [&](int p, int m, double v) {
      if (p >= 0 && m >= 0 && col[p] >= 0 && col[m] >= 0 && v != 0.0)
        trips.emplace_back(col[p], col[m], v);
    };

    for (int d = 0; d < n_; ++d)
      for (int p = 0; p < N; ++p) {
        int q = fib_.shift1(p, d, +1);
        if (q < 0) continue;
        auto eg = edge_geom(u, gc, p, d);
        if (!eg.ok)
          throw CausalityError("jacobian at a superluminal edge near node " +
                               std::to_string(p));
        auto e = warp_.eval(eg.um);
        double W2 = e.f * e.f - eg.s;
        double W = std::sqrt(W2);
        double c = 1.0 / (n_ * e.f * W);
        // dependencies: u_p, u_q, and transverse neighbors of both ends
        struct Dep {
          int node;
          double dD, dum, dT[3];
        };
        std::vector<Dep> deps;
        auto dep_of = [&](int node) -> Dep& {
          for (auto& dd : deps)
            if (dd.node == node) return dd;
          deps.push_back({node, 0, 0, {0, 0, 0}});
          return deps.back();
        };
        {
          auto& dp = dep_of(p);
          dp.dD = -1.0 / fib_.h[d];
          dp.dum = 0.5;
          auto& dq = dep_of(q);
          dq.dD = 1.0 / fib_.h[d];
          dq.dum = 0.5;
        }
        for (int t = 0; t < n_; ++t) {
          if (t == d) continue;
          for (int end : {p, q}) {
            int tp = fib_.shift1(end, t, +1), tm = fib_.shift1(end, t, -1);
            if (tp >= 0 && tm >= 0) {
              dep_of(tp).dT[t] += 0.5 / (2 * fib_.h[t]);
              dep_of(tm).dT[t] -= 0.5 / (2 * fib_.h[t]);
            } else if (tp >= 0) {
              dep_of(tp).dT[t] += 0.5 / fib_.h[t];
              dep_of(end).dT[t] -= 0.5 / fib_.h[t];
            } else if (tm >= 0) {
              dep_of(end).dT[t] += 0.5 / fib_.h[t];
              dep_of(tm).dT[t] -= 0.5 / fib_.h[t];
            }
          }
        }
        for (auto& dd : deps) {
          double ds = 2 * eg.D * dd.dD;
          for (int t = 0; t < n_; ++t)
            if (t != d) ds += 2 * eg.T[t] * dd.dT[t];
          // dc = -c * (f'/f dum + (f f' dum - ds/2)/W^2)
          double dc = -c * (e.fp / e.f * dd.dum +
                            (e.f * e.fp * dd.dum - 0.5 * ds) / W2);
          double dflux = c * dd.dD + eg.D * dc;
          double v = dflux / fib_.h[d];
          add(p, dd.node, v);
          add(q, dd.node, -v);
        }
      }

    auto g2 = node_grad_norm2(fib_, u);
    for (int p = 0; p < N; ++p) {
      if (col[p] < 0) continue;
      auto e = warp_.eval(u[p]);
      double W2 = e.f * e.f - g2[p];
      double W = std::sqrt(W2);
      double phi = n_ + g2[p] / (e.f * e.f);
      // d z / d u_p through f, f', W
      double dz_up = e.fpp * phi / (n_ * W) +
                     e.fp * (-2 * g2[p] * e.fp / std::pow(e.f, 3)) / (n_ * W) -
                     e.fp * phi / (n_ * W2 * W) * (e.f * e.fp);
      add(p, p, dz_up);
      // d z / d (neighbors) through |Du|^2
      for (int t = 0; t < n_; ++t) {
        int tp = fib_.shift1(p, t, +1), tm = fib_.shift1(p, t, -1);
        double coef_p = 0, coef_tp = 0, coef_tm = 0;
        if (tp >= 0 && tm >= 0) {
          coef_tp = 2 * gc[t][p] / (2 * fib_.h[t]);
          coef_tm = -2 * gc[t][p] / (2 * fib_.h[t]);
        } else if (tp >= 0) {
          coef_tp = 2 * gc[t][p] / fib_.h[t];
          coef_p = -2 * gc[t][p] / fib_.h[t];
        } else if (tm >= 0) {
          coef_p = 2 * gc[t][p] / fib_.h[t];
          coef_tm = -2 * gc[t][p] / fib_.h[t];
        }
        double dz_dg2 = e.fp / (n_ * W) / (e.f * e.f) +
                        e.fp * phi / (2 * n_ * W2 * W);
        add(p, tp, dz_dg2 * coef_tp);
        add(p, tm, dz_dg2 * coef_tm);
        add(p, p, dz_dg2 * coef_p);
      }
    }

    Eigen::SparseMatrix<double> J(dim, dim);
    if (deflate_) {
      auto m = fib_.node_measures();
      double vol = 0;
      for (int p : free_) vol += m[p];
      int last = int(free_.size());
      for (int i = 0; i < int(free_.size()); ++i) {
        trips.emplace_back(i, last, m[free_[i]] / vol);
        trips.emplace_back(last, i, m[free_[i]] / vol);
      }
    }
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  }

  // Jacobian-vector product via central finite differences of the residual.
  Field jac_fd_dir(const Field& u, double H, const Field& v, double step) const {
    Field up = u, um = u;
    for (size_t i = 0; i < u.size(); ++i) {
      up[i] += step * v[i];
      um[i] -= step * v[i];
    }
    auto rp = residual(up, H);
    auto rm = residual(um, H);
    Field out(u.size());
    for (size_t i = 0; i < u.size(); ++i) out[i] = (rp[i] - rm[i]) / (2 * step);
    return out;
  }

 private:
  detail::EdgeGeom edge_geom(const Field& u, const std::vector<Field>& gc, int p,
                             int d) const {
    detail::EdgeGeom eg;
    int q = fib_.shift1(p, d, +1);
    if (q < 0) return eg;
    eg.D = (u[q] - u[p]) / fib_.h[d];
    eg.um = 0.5 * (u[p] + u[q]);
    eg.s = eg.D * eg.D;
    for (int t = 0; t < n_; ++t) {
      if (t == d) continue;
      eg.T[t] = 0.5 * (gc[t][p] + gc[t][q]);
      eg.s += eg.T[t] * eg.T[t];
    }
    if (!warp_.interval.contains(eg.um)) return eg;
    auto e = warp_.eval(eg.um);
    eg.ok = eg.s < e.f * e.f;
    return eg;
  }

  const DiscreteFiber& fib_;
  const WarpSpec& warp_;
  double lambda_;
  int n_;
  bool deflate_ = false;
  std::vector<int> free_;
};

inline Field residual(const GraphState& st, double H) {
  CmcSystem sys(*st.fiber, st.warp, st.lambda);
  return sys.residual(st.u, H);
}

// Damped Newton with constraint-preserving line search; steps that violate
// the ellipticity margin are rejected, never projected. Pseudo-transient
// continuation (u += dt * r, a curvature-flow analog) kicks in after
// repeated backtracking failures.
inline SolveResult solve_cmc(const DiscreteFiber& fib, const WarpSpec& warp,
                             const SolveConfig& cfg, Field u0) {
  CmcSystem sys(fib, warp, cfg.lambda);
  SolveResult res;
  res.u_final = std::move(u0);

  if (sys.margin_ratio(res.u_final) > cfg.lambda) {
    res.status = SolveResult::Status::ConstraintViolated;
    res.message = "initial data violates the ellipticity margin";
    return res;
  }

  Field r = sys.residual(res.u_final, cfg.H);
  double rn = sys.scaled_norm(r, res.u_final, cfg.H);
  res.residual_history.push_back(rn);
  res.constraint_min_margin = sys.min_margin(res.u_final);
  double r0 = rn;
  int stalled_backtracks = 0;

  auto try_step = [&](const Field& dir, double alpha, Field& out) {
    out = res.u_final;
    for (size_t i = 0; i < out.size(); ++i) out[i] += alpha * dir[i];
    return sys.margin_ratio(out) <= cfg.lambda;
  };

  for (int it = 0; it < cfg.max_newton; ++it) {
    if (rn <= cfg.tol_residual) break;
    Eigen::SparseMatrix<double> J = sys.jacobian(res.u_final);
    int nf = int(sys.free_nodes().size());
    int dim = J.rows();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < nf; ++i) rhs[i] = -r[sys.free_nodes()[i]];
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    bool newton_ok = lu.info() == Eigen::Success;
    Field dir(res.u_final.size(), 0.0);
    if (newton_ok) {
      Eigen::VectorXd dx = lu.solve(rhs);
      newton_ok = lu.info() == Eigen::Success && dx.allFinite();
      if (newton_ok)
        for (int i = 0; i < nf; ++i) dir[sys.free_nodes()[i]] = dx[i];
    }

    bool accepted = false;
    if (newton_ok) {
      double alpha = cfg.damping_init;
      for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
        Field trial;
        if (try_step(dir, alpha, trial)) {
          Field rt;
          try {
            rt = sys.residual(trial, cfg.H);
          } catch (const CausalityError&) {
            alpha *= cfg.backtrack;
            continue;
          }
          double rtn = sys.scaled_norm(rt, trial, cfg.H);
          if (rtn < rn * (1 - 1e-4 * alpha)) {
            res.u_final = std::move(trial);
            r = std::move(rt);
            rn = rtn;
            res.residual_history.push_back(rn);
            res.constraint_min_margin =
                std::min(res.constraint_min_margin, sys.min_margin(res.u_final));
            accepted = true;
            res.newton_iters++;
            break;
          }
        }
        alpha *= cfg.backtrack;
      }
    }

    if (!accepted) {
      stalled_backtracks++;
      if (!cfg.continuation || stalled_backtracks > 3) {
        res.status = SolveResult::Status::MaxIters;
        res.message = "Newton stalled; residual bounded away from zero";
        break;
      }
      // pseudo-transient continuation: follow u_t = r(u)
      double dt = cfg.dt0;
      double target = rn * 0.5;
      bool improved = false;
      for (int fs = 0; fs < cfg.max_flow_steps && rn > target; ++fs) {
        Field trial;
        if (try_step(r, dt, trial)) {
          Field rt;
          bool ok = true;
          try {
            rt = sys.residual(trial, cfg.H);
          } catch (const CausalityError&) {
            ok = false;
          }
          if (ok) {
            double rtn = sys.scaled_norm(rt, trial, cfg.H);
            if (rtn < rn) {
              res.u_final = std::move(trial);
              r = std::move(rt);
              rn = rtn;
              res.constraint_min_margin = std::min(res.constraint_min_margin,
                                                   sys.min_margin(res.u_final));
              dt *= 1.25;
              improved = true;
              continue;
            }
          }
        }
        dt *= 0.5;
        if (dt < 1e-12) break;
      }
      res.residual_history.push_back(rn);
      if (!improved) {
        res.status = SolveResult::Status::MaxIters;
        res.message = "continuation could not reduce the residual";
        break;
      }
    }

    if (!std::isfinite(rn) || rn > 1e6 * std::max(r0, 1.0)) {
      res.status = SolveResult::Status::Diverged;
      res.message = "residual blow-up";
      break;
    }
  }

  if (rn <= cfg.tol_residual) {
    res.status = SolveResult::Status::Converged;
    double lo = field_min(res.u_final), hi = field_max(res.u_final);
    res.slice_t0 = 0.5 * (lo + hi);
    res.slice_deviation = 0.5 * (hi - lo);
  } else if (res.message.empty()) {
    res.status = SolveResult::Status::MaxIters;
    res.message = "iteration budget exhausted";
  }
  return res;
}

// Restart protocol: the first run starts from u0 when given, further runs
// from seeded random spacelike data. Nonexistence evidence requires every
// restart to fail, and at least 10 of them.
inline SolveResult solve_cmc_restarts(const DiscreteFiber& fib, const WarpSpec& warp,
                                      const SolveConfig& cfg,
                                      std::optional<Field> u0 = std::nullopt) {
  SolveResult last;
  for (int run = 0; run < std::max(1, cfg.restarts); ++run) {
    Field init;
    if (run == 0 && u0) {
      init = *u0;
    } else {
      Rng rng(cfg.seed + 7919 * run);
      auto as = random_analytic_state(warp, cfg.t0, fib.box[0] * fib.h[0],
                                      fib.box[1] * fib.h[1],
                                      cfg.init_ratio * cfg.lambda, rng);
      init = as.sample(fib);
    }
    auto res = solve_cmc(fib, warp, cfg, std::move(init));
    res.restarts_used = run + 1;
    if (res.status == SolveResult::Status::Converged) return res;
    last = std::move(res);
  }
  if (cfg.restarts >= 10) {
    last.status = SolveResult::Status::NonexistenceEvidence;
    last.message = "all " + std::to_string(cfg.restarts) +
                   " restarts failed to converge inside the constraint set";
    last.restarts_used = cfg.restarts;
  }
  return last;
}

// ---- slab squeeze check -----------------------------------------------------

struct SlabSqueezeReport {
  bool skipped = false;
  std::string reason;
  double H_lo = 0;  // -f'(sup u)/f(sup u)
  double H_hi = 0;  // -f'(inf u)/f(inf u)
  double H = 0;
  bool pass = false;
};

inline SlabSqueezeReport slab_squeeze_check(const SolveResult& result, const WarpSpec& warp,
                           double H, double tol = 1e-6) {
  SlabSqueezeReport rep;
  rep.H = H;
  if (result.status != SolveResult::Status::Converged) {
    rep.skipped = true;
    rep.reason = "result not converged";
    return rep;
  }
  double lo = field_min(result.u_final), hi = field_max(result.u_final);
  if (!warp.log_concave_on(warp.interval.truncate(lo, hi))) {
    rep.skipped = true;
    rep.reason = "(log f)'' <= 0 not certified on the data slab";
    return rep;
  }
  rep.H_lo = slice_mean_curvature(warp, hi);
  rep.H_hi = slice_mean_curvature(warp, lo);
  rep.pass = rep.H_lo - tol <= H && H <= rep.H_hi + tol;
  return rep;
}

// ---- sweep over target curvatures -------------------------------------------

struct SweepEntry {
  double H = 0;
  SolveResult::Status status = SolveResult::Status::Diverged;
  std::optional<double> slice_t0;
  double slice_deviation = kInf;
  double final_residual = 0;
  // hypothesis annotations over the realized height range
  bool t4_hypothesis = false;    // H^2 <= inf (f'/f)^2
  bool none_threshold = false;   // H^2 <= (4/n) inf (f'/f)^2
  int restarts_used = 1;
};

inline std::vector<SweepEntry> sweep(const DiscreteFiber& fib, const WarpSpec& warp,
                                     const std::vector<double>& H_grid,
                                     SolveConfig cfg) {
  std::vector<SweepEntry> out;
  for (double H : H_grid) {
    cfg.H = H;
    auto res = solve_cmc_restarts(fib, warp, cfg);
    SweepEntry e;
    e.H = H;
    e.status = res.status;
    e.slice_t0 = res.slice_t0;
    e.slice_deviation = res.slice_deviation;
    e.final_residual =
        res.residual_history.empty() ? kInf : res.residual_history.back();
    e.restarts_used = res.restarts_used;
    double lo = field_min(res.u_final), hi = field_max(res.u_final);
    double inf_b2 = kInf;
    for (double t : warp.sample_points(warp.interval.truncate(lo, hi), 512)) {
      auto ev = warp.eval(t);
      inf_b2 = std::min(inf_b2, (ev.fp / ev.f) * (ev.fp / ev.f));
    }
    e.t4_hypothesis = H * H <= inf_b2 * (1 + 1e-8) + 1e-12;
    e.none_threshold = H * H <= (4.0 / fib.dim()) * inf_b2 * (1 + 1e-8) + 1e-12;
    out.push_back(e);
  }
  return out;
}

}  // namespace warplab
