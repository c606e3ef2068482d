#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "warplab/core.hpp"

namespace warplab {

enum class WarpFamily { Constant, Linear, Power, Exponential, Logistic, Spline };

inline const char* family_name(WarpFamily f) {
  switch (f) {
    case WarpFamily::Constant: return "constant";
    case WarpFamily::Linear: return "linear";
    case WarpFamily::Power: return "power";
    case WarpFamily::Exponential: return "exponential";
    case WarpFamily::Logistic: return "logistic";
    case WarpFamily::Spline: return "spline";
  }
  return "?";
}

struct WarpEval {
  double f;        // f(t)
  double fp;       // f'(t)
  double fpp;      // f''(t)
  double logfpp;   // (log f)''(t) = (f f'' - f'^2)/f^2
};

namespace detail {

// Natural cubic spline through (t_i, y_i); stores per-knot second derivatives.
struct CubicSpline {
  std::vector<double> t, y, m;  // m = second derivatives at knots

  void build(std::vector<double> ts, std::vector<double> ys) {
    if (ts.size() != ys.size() || ts.size() < 3)
      throw std::invalid_argument("spline: need >= 3 knots");
    for (size_t i = 1; i < ts.size(); ++i)
      if (!(ts[i] > ts[i - 1]))
        throw std::invalid_argument("spline: knots must be strictly increasing");
    t = std::move(ts);
    y = std::move(ys);
    size_t n = t.size();
    m.assign(n, 0.0);
    // Thomas solve for interior second derivatives, natural ends.
    std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
    for (size_t i = 1; i + 1 < n; ++i) {
      double hl = t[i] - t[i - 1], hr = t[i + 1] - t[i];
      a[i] = hl / 6.0;
      b[i] = (hl + hr) / 3.0;
      c[i] = hr / 6.0;
      d[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
    }
    for (size_t i = 2; i + 1 < n; ++i) {
      double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    for (size_t i = n - 2; i >= 1; --i) {
      m[i] = (d[i] - c[i] * (i + 2 < n ? m[i + 1] : 0.0)) / b[i];
      if (i == 1) break;
    }
  }

  size_t segment(double x) const {
    size_t lo = 0, hi = t.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      (t[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }

  void eval(double x, double& f, double& fp, double& fpp) const {
    size_t i = segment(x);
    double h = t[i + 1] - t[i];
    double A = (t[i + 1] - x) / h, B = (x - t[i]) / h;
    f = A * y[i] + B * y[i + 1] +
        ((A * A * A - A) * m[i] + (B * B * B - B) * m[i + 1]) * h * h / 6.0;
    fp = (y[i + 1] - y[i]) / h +
         ((3 * B * B - 1) * m[i + 1] - (3 * A * A - 1) * m[i]) * h / 6.0;
    fpp = A * m[i] + B * m[i + 1];
  }
};

}  // namespace detail

// Analytic warping function family on an open interval. f > 0 on the whole
// interval is required; validated analytically per family plus by sampling.
struct WarpSpec {
  WarpFamily family = WarpFamily::Constant;
  std::vector<double> params;
  Interval interval;
  detail::CubicSpline spline;

  static WarpSpec constant(double c, Interval I = {}) {
    WarpSpec s{WarpFamily::Constant, {c}, I, {}};
    s.validate();
    return s;
  }
  static WarpSpec linear(double a, double b, Interval I) {
    WarpSpec s{WarpFamily::Linear, {a, b}, I, {}};
    s.validate();
    return s;
  }
  static WarpSpec power(double k, Interval I) {
    WarpSpec s{WarpFamily::Power, {k}, I, {}};
    s.validate();
    return s;
  }
  static WarpSpec exponential(double a, Interval I = {}) {
    WarpSpec s{WarpFamily::Exponential, {a}, I, {}};
    s.validate();
    return s;
  }
  static WarpSpec logistic(double c, double a, Interval I) {
    WarpSpec s{WarpFamily::Logistic, {c, a}, I, {}};
    s.validate();
    return s;
  }
  // Tabulated values interpolated by a natural cubic spline. Derivative
  // accuracy is limited by the table resolution; intended for ad-hoc warps,
  // not for the tight derivative checks the analytic families satisfy.
  static WarpSpec tabulated(std::vector<double> ts, std::vector<double> ys) {
    WarpSpec s;
    s.family = WarpFamily::Spline;
    s.spline.build(std::move(ts), std::move(ys));
    s.interval = {s.spline.t.front(), s.spline.t.back()};
    s.validate();
    return s;
  }

  void require_inside(double t) const {
    if (!interval.contains(t))
      throw std::domain_error(std::string("warp '") + family_name(family) +
                              "': t=" + std::to_string(t) +
                              " outside interval " + interval.str());
  }

  WarpEval eval(double t) const {
    require_inside(t);
    WarpEval e{};
    switch (family) {
      case WarpFamily::Constant: {
        e.f = params[0];
        e.fp = e.fpp = e.logfpp = 0.0;
        break;
      }
      case WarpFamily::Linear: {
        double a = params[0], b = params[1];
        e.f = a * t + b;
        e.fp = a;
        e.fpp = 0.0;
        e.logfpp = -(a * a) / (e.f * e.f);
        break;
      }
      case WarpFamily::Power: {
        double k = params[0];
        e.f = std::pow(t, k);
        e.fp = k * std::pow(t, k - 1);
        e.fpp = k * (k - 1) * std::pow(t, k - 2);
        e.logfpp = -k / (t * t);
        break;
      }
      case WarpFamily::Exponential: {
        double a = params[0];
        e.f = std::exp(a * t);
        e.fp = a * e.f;
        e.fpp = a * a * e.f;
        e.logfpp = 0.0;
        break;
      }
      case WarpFamily::Logistic: {
        double c = params[0], a = params[1];
        double s = 1.0 / (1.0 + std::exp(-a * t));
        e.f = c * s;
        e.fp = c * a * s * (1.0 - s);
        e.fpp = c * a * a * s * (1.0 - s) * (1.0 - 2.0 * s);
        e.logfpp = -a * a * s * (1.0 - s);
        break;
      }
      case WarpFamily::Spline: {
        spline.eval(t, e.f, e.fp, e.fpp);
        e.logfpp = (e.f * e.fpp - e.fp * e.fp) / (e.f * e.f);
        break;
      }
    }
    return e;
  }

  double f(double t) const { return eval(t).f; }

  // Sign of f'' is constant for every analytic family, so concavity on a
  // sub-interval reduces to endpoint/param checks; sampling is the guard
  // against parameter mistakes and covers the spline family.
  bool f_concave_on(const Interval& slab, int samples = 2048) const {
    switch (family) {
      case WarpFamily::Constant:
      case WarpFamily::Linear:
        return true;
      case WarpFamily::Exponential:
        return params[0] == 0.0;
      case WarpFamily::Power: {
        double k = params[0];
        return k * (k - 1) <= 0.0;  // t^k on t>0
      }
      default:
        break;
    }
    for (double t : sample_points(slab, samples))
      if (eval(t).fpp > 1e-12 * std::max(1.0, std::abs(eval(t).f))) return false;
    return true;
  }

  bool log_concave_on(const Interval& slab, int samples = 2048) const {
    switch (family) {
      case WarpFamily::Constant:
      case WarpFamily::Linear:
      case WarpFamily::Exponential:
      case WarpFamily::Logistic:
        return true;  // (log f)'' <= 0 identically
      case WarpFamily::Power:
        return params[0] >= 0.0;  // (log t^k)'' = -k/t^2
      default:
        break;
    }
    for (double t : sample_points(slab, samples))
      if (eval(t).logfpp > 1e-12) return false;
    return true;
  }

  std::vector<double> sample_points(const Interval& slab, int samples) const {
    Interval s = finite_slab(slab);
    std::vector<double> out;
    out.reserve(samples);
    for (int i = 0; i < samples; ++i) {
      double a = (i + 0.5) / double(samples);
      out.push_back(s.lo + a * (s.hi - s.lo));
    }
    return out;
  }

  // Clamp an evaluation slab to something finite and inside the domain.
  Interval finite_slab(Interval slab) const {
    slab.lo = std::max(slab.lo, interval.lo);
    slab.hi = std::min(slab.hi, interval.hi);
    if (!std::isfinite(slab.lo) || !std::isfinite(slab.hi)) {
      double lo = std::isfinite(slab.lo) ? slab.lo : (std::isfinite(slab.hi) ? slab.hi - 10.0 : -5.0);
      double hi = std::isfinite(slab.hi) ? slab.hi : lo + 10.0;
      slab = {lo, hi};
      slab.lo = std::max(slab.lo, interval.lo);
      slab.hi = std::min(slab.hi, interval.hi);
    }
    double eps = 1e-9 * std::max(1.0, std::abs(slab.lo) + std::abs(slab.hi));
    return {slab.lo + eps, slab.hi - eps};
  }

  void validate() const {
    switch (family) {
      case WarpFamily::Constant:
        if (params.size() != 1 || params[0] <= 0)
          throw std::invalid_argument("constant warp needs c > 0");
        break;
      case WarpFamily::Linear: {
        if (params.size() != 2) throw std::invalid_argument("linear warp needs {a, b}");
        double a = params[0], b = params[1];
        auto end_value = [&](double t) {
          if (std::isfinite(t)) return a * t + b;
          return (a == 0) ? b : (t > 0 ? a * kInf : -a * kInf);
        };
        if (end_value(interval.lo) < 0 || end_value(interval.hi) < 0 ||
            (a == 0 && b <= 0))
          throw std::invalid_argument("linear warp not positive on " + interval.str());
        break;
      }
      case WarpFamily::Power:
        if (params.size() != 1) throw std::invalid_argument("power warp needs {k}");
        if (interval.lo < 0)
          throw std::invalid_argument("power warp requires interval inside (0, inf)");
        break;
      case WarpFamily::Exponential:
        if (params.size() != 1) throw std::invalid_argument("exponential warp needs {a}");
        break;
      case WarpFamily::Logistic:
        if (params.size() != 2 || params[0] <= 0)
          throw std::invalid_argument("logistic warp needs {c > 0, a}");
        break;
      case WarpFamily::Spline: {
        for (double v : spline.y)
          if (v <= 0) throw std::invalid_argument("tabulated warp has non-positive values");
        break;
      }
    }
    for (double t : sample_points(interval, 512))
      if (eval(t).f <= 0)
        throw std::invalid_argument(std::string("warp '") + family_name(family) +
                                    "' is not positive on " + interval.str());
  }

  std::string name() const { return family_name(family); }
};

// Mean curvature of the level hypersurface t = t0.
inline double slice_mean_curvature(const WarpSpec& spec, double t0) {
  auto e = spec.eval(t0);
  return -e.fp / e.f;
}

// Scalar of the (diagonal) slice shape operator.
inline double slice_shape_scalar(const WarpSpec& spec, double t0) {
  auto e = spec.eval(t0);
  return e.fp / e.f;
}

struct TccReport {
  bool f_concave = false;
  double fiber_ricci_min = 0;        // inf of Ric over unit fiber directions
  double sup_ricci_bound_needed = 0; // sup_t of n(f f'' - f'^2)
  bool satisfied = false;
  double worst_t = 0;                // argmax of the needed bound
  Interval slab;                     // where the hypotheses were sampled
  int samples = 0;
  std::vector<double> sample_t;
  std::vector<double> ricci_bound_needed;  // n(f f'' - f'^2) at sample_t
};

inline bool tcc_satisfied(bool f_concave, double fiber_ricci_min,
                          double sup_ricci_bound_needed) {
  return f_concave && fiber_ricci_min >= sup_ricci_bound_needed - 1e-12;
}

// FiberT must expose dim() and ricci_direction_min().
template <class FiberT>
TccReport check_tcc(const WarpSpec& spec, const FiberT& fiber, int n,
                    std::optional<Interval> slab = std::nullopt,
                    int samples = 10000) {
  if (n < 2) throw std::invalid_argument("check_tcc: fiber dimension n must be >= 2");
  if (n != fiber.dim())
    throw std::invalid_argument("check_tcc: n does not match the fiber dimension");
  TccReport rep;
  rep.slab = spec.finite_slab(slab.value_or(spec.interval));
  rep.samples = samples;
  rep.f_concave = spec.f_concave_on(rep.slab, samples);
  rep.fiber_ricci_min = fiber.ricci_direction_min();
  rep.sample_t = spec.sample_points(rep.slab, samples);
  rep.ricci_bound_needed.reserve(rep.sample_t.size());
  double sup = -kInf, worst = rep.slab.lo;
  for (double t : rep.sample_t) {
    auto e = spec.eval(t);
    double needed = n * (e.f * e.fpp - e.fp * e.fp);
    rep.ricci_bound_needed.push_back(needed);
    if (needed > sup) {
      sup = needed;
      worst = t;
    }
  }
  rep.sup_ricci_bound_needed = sup;
  rep.worst_t = worst;
  rep.satisfied = tcc_satisfied(rep.f_concave, rep.fiber_ricci_min, sup);
  return rep;
}

}  // namespace warplab
