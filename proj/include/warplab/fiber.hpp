#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "warplab/core.hpp"

namespace warplab {

enum class FiberKind { Torus, Grid, SphereProduct };

struct BallSet {
  int center = -1;
  double radius = 0;
  std::vector<int> members;   // sorted by node id
  std::vector<int> boundary;  // members with a neighbor outside
  bool truncated = false;     // ball reached the mesh extent / wrapped around
};

// Vector fields are stored in the discretization-native layout:
//  - structured grids: staggered edge components, comp[d][p] lives on the
//    edge (p, p+e_d);
//  - sphere x ring products: a 3-vector per (face, ring layer) for the
//    sphere block plus a staggered ring component per (vertex, ring edge).
struct VecField {
  std::vector<Field> comp;
  std::vector<std::array<double, 3>> sphere_face;
  Field ring_comp;
};

namespace detail {

struct TriMesh {
  std::vector<std::array<double, 3>> pos;
  std::vector<std::array<int, 3>> tri;
  std::vector<double> face_area;
  std::vector<double> dual_area;  // barycentric vertex area
  // Gradient of the hat function of corner c on face f (3-vector).
  std::vector<std::array<std::array<double, 3>, 3>> hat_grad;

  static std::array<double, 3> sub(const std::array<double, 3>& a,
                                   const std::array<double, 3>& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  }
  static std::array<double, 3> cross(const std::array<double, 3>& a,
                                     const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
  }
  static double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  }
  static double norm3(const std::array<double, 3>& a) { return std::sqrt(dot3(a, a)); }

  void finalize() {
    size_t nf = tri.size();
    face_area.assign(nf, 0);
    hat_grad.assign(nf, {});
    dual_area.assign(pos.size(), 0);
    for (size_t f = 0; f < nf; ++f) {
      auto [i, j, k] = tri[f];
      auto e0 = sub(pos[k], pos[j]);  // edge opposite corner 0
      auto e1 = sub(pos[i], pos[k]);
      auto e2 = sub(pos[j], pos[i]);
      auto nrm = cross(e2, {-e1[0], -e1[1], -e1[2]});
      double A2 = norm3(nrm);
      face_area[f] = 0.5 * A2;
      std::array<double, 3> unit = {nrm[0] / A2, nrm[1] / A2, nrm[2] / A2};
      // grad of hat_c = (n x e_opposite) / (2A)
      auto g = [&](const std::array<double, 3>& e) {
        auto v = cross(unit, e);
        return std::array<double, 3>{v[0] / A2, v[1] / A2, v[2] / A2};
      };
      hat_grad[f][0] = g(e0);
      hat_grad[f][1] = g(e1);
      hat_grad[f][2] = g(e2);
      for (int c = 0; c < 3; ++c) dual_area[tri[f][c]] += face_area[f] / 3.0;
    }
  }
};

inline TriMesh icosphere(double rho, int subdiv) {
  TriMesh m;
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<std::array<double, 3>> v = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  auto project = [&](std::array<double, 3>& p) {
    double r = TriMesh::norm3(p);
    p = {p[0] * rho / r, p[1] * rho / r, p[2] * rho / r};
  };
  for (auto& p : v) project(p);
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      std::array<double, 3> p = {(v[a][0] + v[b][0]) / 2, (v[a][1] + v[b][1]) / 2,
                                 (v[a][2] + v[b][2]) / 2};
      project(p);
      v.push_back(p);
      int id = int(v.size()) - 1;
      mid[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (auto& t : f) {
      int a = midpoint(t[0], t[1]);
      int b = midpoint(t[1], t[2]);
      int c = midpoint(t[2], t[0]);
      nf.push_back({t[0], a, c});
      nf.push_back({t[1], b, a});
      nf.push_back({t[2], c, b});
      nf.push_back({a, b, c});
    }
    f = std::move(nf);
  }
  m.pos = std::move(v);
  m.tri = std::move(f);
  m.finalize();
  return m;
}

}  // namespace detail

// A sampled Riemannian fiber with analytic curvature. Supported kinds keep
// Ric and sectional curvature closed-form: flat tori, flat disk/ball grids
// (Dirichlet boundary), and round-sphere x flat-ring products.
struct DiscreteFiber {
  FiberKind kind = FiberKind::Torus;
  int n = 0;  // fiber dimension

  // structured kinds
  std::vector<int> box;        // lattice extent per axis
  std::vector<double> h;       // spacing per axis
  std::vector<double> origin;  // coordinates of lattice point (0,...,0)
  bool periodic = false;
  double disk_radius = 0;           // Grid kind: nodes satisfy |x| <= disk_radius
  std::vector<int> node_of_lat;     // lattice -> node id (-1 outside), Grid kind
  std::vector<int> lat_of_node;     // node id -> lattice index, Grid kind
  std::vector<bool> boundary_mask;  // per node, Grid kind

  // product kind
  detail::TriMesh sphere;
  double rho = 1;
  int ring_nodes = 0;
  double ring_length = 0;
  double ring_h = 0;

  int node_count_ = 0;

  int node_count() const { return node_count_; }
  int dim() const { return n; }
  bool boundary_free() const { return kind != FiberKind::Grid; }

  // ---- structured lattice helpers -------------------------------------

  int lat_index(const std::vector<int>& mi) const {
    int idx = 0, stride = 1;
    for (int d = 0; d < int(box.size()); ++d) {
      idx += mi[d] * stride;
      stride *= box[d];
    }
    return idx;
  }

  std::vector<int> lat_multi(int lat) const {
    std::vector<int> mi(box.size());
    for (int d = 0; d < int(box.size()); ++d) {
      mi[d] = lat % box[d];
      lat /= box[d];
    }
    return mi;
  }

  int node_from_lat(int lat) const {
    return kind == FiberKind::Grid ? node_of_lat[lat] : lat;
  }
  int lat_from_node(int id) const {
    return kind == FiberKind::Grid ? lat_of_node[id] : id;
  }

  // Neighbor by a lattice offset; -1 when it leaves the mesh (Grid kind).
  int lattice_shift(int id, const std::vector<int>& delta) const {
    auto mi = lat_multi(lat_from_node(id));
    for (int d = 0; d < int(box.size()); ++d) {
      mi[d] += delta[d];
      if (periodic) {
        mi[d] %= box[d];
        if (mi[d] < 0) mi[d] += box[d];
      } else if (mi[d] < 0 || mi[d] >= box[d]) {
        return -1;
      }
    }
    return node_from_lat(lat_index(mi));
  }

  int shift1(int id, int d, int step) const {
    std::vector<int> delta(box.size(), 0);
    delta[d] = step;
    return lattice_shift(id, delta);
  }

  bool is_boundary(int id) const {
    return kind == FiberKind::Grid && boundary_mask[id];
  }

  std::vector<double> coords(int id) const {
    if (kind == FiberKind::SphereProduct) {
      int v = id % int(sphere.pos.size());
      int k = id / int(sphere.pos.size());
      auto& p = sphere.pos[v];
      return {p[0], p[1], p[2], k * ring_h};
    }
    auto mi = lat_multi(lat_from_node(id));
    std::vector<double> x(n);
    for (int d = 0; d < n; ++d) x[d] = origin[d] + mi[d] * h[d];
    return x;
  }

  std::vector<std::vector<double>> all_coords() const {
    std::vector<std::vector<double>> out(node_count());
    for (int i = 0; i < node_count(); ++i) out[i] = coords(i);
    return out;
  }

  double node_measure(int /*id*/) const {
    if (kind == FiberKind::SphereProduct)
      throw std::logic_error("node_measure(id): use node_measures() for products");
    double m = 1;
    for (double hd : h) m *= hd;
    return m;
  }

  Field node_measures() const {
    Field m(node_count());
    if (kind == FiberKind::SphereProduct) {
      int V = int(sphere.pos.size());
      for (int k = 0; k < ring_nodes; ++k)
        for (int v = 0; v < V; ++v) m[v + V * k] = sphere.dual_area[v] * ring_h;
      return m;
    }
    double cell = 1;
    for (double hd : h) cell *= hd;
    std::fill(m.begin(), m.end(), cell);
    return m;
  }

  double total_volume() const {
    auto m = node_measures();
    return std::accumulate(m.begin(), m.end(), 0.0);
  }

  // ---- curvature (analytic per kind) ----------------------------------

  double ricci_direction_min() const { return 0.0; }

  // Ric^F(X, Y). Structured: X, Y are n coordinate components (flat, so 0).
  // Product: X, Y are 4 components (ambient sphere tangent 3-vector + ring).
  double ricci_form(int id, const std::vector<double>& X,
                    const std::vector<double>& Y) const {
    if (kind != FiberKind::SphereProduct) return 0.0;
    (void)id;
    // S^2(rho): Ric = (1/rho^2) g_S; ring and mixed blocks vanish.
    return (X[0] * Y[0] + X[1] * Y[1] + X[2] * Y[2]) / (rho * rho);
  }

  double sectional(int id, const std::vector<double>& X,
                   const std::vector<double>& Y) const {
    if (kind != FiberKind::SphereProduct) return 0.0;
    (void)id;
    auto dotS = [](const std::vector<double>& a, const std::vector<double>& b) {
      return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    };
    double gXX = dotS(X, X) + X[3] * X[3];
    double gYY = dotS(Y, Y) + Y[3] * Y[3];
    double gXY = dotS(X, Y) + X[3] * Y[3];
    double denom = gXX * gYY - gXY * gXY;
    if (denom <= 0) throw std::invalid_argument("sectional: degenerate plane");
    double rxyyx = (dotS(X, X) * dotS(Y, Y) - dotS(X, Y) * dotS(X, Y)) / (rho * rho);
    return rxyyx / denom;
  }

  // ---- geodesic distance (closed form per kind) ------------------------

  double distance(int a, int b) const {
    auto xa = coords(a), xb = coords(b);
    switch (kind) {
      case FiberKind::Torus: {
        double s = 0;
        for (int d = 0; d < n; ++d) {
          double L = box[d] * h[d];
          double dx = std::abs(xa[d] - xb[d]);
          dx = std::min(dx, L - dx);
          s += dx * dx;
        }
        return std::sqrt(s);
      }
      case FiberKind::Grid: {
        double s = 0;
        for (int d = 0; d < n; ++d) s += (xa[d] - xb[d]) * (xa[d] - xb[d]);
        return std::sqrt(s);
      }
      case FiberKind::SphereProduct: {
        double c = (xa[0] * xb[0] + xa[1] * xb[1] + xa[2] * xb[2]) / (rho * rho);
        c = std::clamp(c, -1.0, 1.0);
        double ds = rho * std::acos(c);
        double dr = std::abs(xa[3] - xb[3]);
        dr = std::min(dr, ring_length - dr);
        return std::sqrt(ds * ds + dr * dr);
      }
    }
    return 0;
  }

  // Radius beyond which metric balls stop being embedded disks.
  double ball_extent(int center) const {
    switch (kind) {
      case FiberKind::Torus: {
        double m = kInf;
        for (int d = 0; d < n; ++d) m = std::min(m, box[d] * h[d] / 2.0);
        return m;
      }
      case FiberKind::Grid: {
        auto x = coords(center);
        double r = 0;
        for (int d = 0; d < n; ++d) r += x[d] * x[d];
        return disk_radius - std::sqrt(r);
      }
      case FiberKind::SphereProduct:
        return std::min(M_PI * rho, ring_length / 2.0);
    }
    return 0;
  }
};

// ---- constructors ------------------------------------------------------

inline DiscreteFiber build_torus(const std::vector<double>& lengths,
                                 const std::vector<int>& shape) {
  if (lengths.size() != shape.size() || lengths.empty())
    throw std::invalid_argument("torus: lengths/shape mismatch");
  DiscreteFiber f;
  f.kind = FiberKind::Torus;
  f.n = int(shape.size());
  f.periodic = true;
  f.box = shape;
  f.origin.assign(f.n, 0.0);
  for (int d = 0; d < f.n; ++d) {
    if (lengths[d] <= 0 || shape[d] <= 0)
      throw std::invalid_argument("torus: non-positive size");
    if (shape[d] < 8)
      throw std::invalid_argument("torus: resolution below 8 nodes per period");
    f.h.push_back(lengths[d] / shape[d]);
  }
  f.node_count_ = 1;
  for (int d : shape) f.node_count_ *= d;
  return f;
}

// Flat grid restricted to the Euclidean ball |x| <= radius, with a marked
// Dirichlet boundary ring (nodes having a lattice neighbor outside).
inline DiscreteFiber build_disk_grid(int dim, double radius, double hh) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("disk grid: dim must be 1..3");
  if (radius <= 0 || hh <= 0) throw std::invalid_argument("disk grid: non-positive size");
  if (radius / hh < 4)
    throw std::invalid_argument("disk grid: resolution below 8 nodes per diameter");
  DiscreteFiber f;
  f.kind = FiberKind::Grid;
  f.n = dim;
  f.periodic = false;
  f.disk_radius = radius;
  int half = int(std::floor(radius / hh)) + 1;
  int m = 2 * half + 1;
  f.box.assign(dim, m);
  f.h.assign(dim, hh);
  f.origin.assign(dim, -half * hh);
  int total = 1;
  for (int d = 0; d < dim; ++d) total *= m;
  f.node_of_lat.assign(total, -1);
  auto inside = [&](const std::vector<int>& mi) {
    double s = 0;
    for (int d = 0; d < dim; ++d) {
      double x = f.origin[d] + mi[d] * hh;
      s += x * x;
    }
    return s <= radius * radius + 1e-12;
  };
  for (int lat = 0; lat < total; ++lat) {
    auto mi = f.lat_multi(lat);
    if (inside(mi)) {
      f.node_of_lat[lat] = int(f.lat_of_node.size());
      f.lat_of_node.push_back(lat);
    }
  }
  f.node_count_ = int(f.lat_of_node.size());
  f.boundary_mask.assign(f.node_count_, false);
  for (int id = 0; id < f.node_count_; ++id) {
    for (int d = 0; d < dim && !f.boundary_mask[id]; ++d)
      for (int s = -1; s <= 1; s += 2)
        if (f.shift1(id, d, s) < 0) {
          f.boundary_mask[id] = true;
          break;
        }
  }
  return f;
}

inline DiscreteFiber build_sphere_torus(double rho, int subdiv, int ring_nodes,
                                        double ring_length) {
  if (rho <= 0 || ring_length <= 0)
    throw std::invalid_argument("sphere product: non-positive size");
  if (subdiv < 1 || ring_nodes < 8)
    throw std::invalid_argument("sphere product: resolution below minimum");
  DiscreteFiber f;
  f.kind = FiberKind::SphereProduct;
  f.n = 3;
  f.sphere = detail::icosphere(rho, subdiv);
  f.rho = rho;
  f.ring_nodes = ring_nodes;
  f.ring_length = ring_length;
  f.ring_h = ring_length / ring_nodes;
  f.node_count_ = int(f.sphere.pos.size()) * ring_nodes;
  return f;
}

// ---- first-order operators ----------------------------------------------
// gradient lives on staggered edges (faces for the sphere block); divergence
// is defined as its negative adjoint under the node-measure inner product,
// so integration by parts is exact on boundary-free meshes and
// div(grad u) == laplace_beltrami(u) identically.

inline void check_field(const DiscreteFiber& f, const Field& u, const char* who) {
  if (int(u.size()) != f.node_count())
    throw std::invalid_argument(std::string(who) + ": field length mismatch");
}

inline VecField gradient(const DiscreteFiber& f, const Field& u) {
  check_field(f, u, "gradient");
  VecField g;
  if (f.kind == FiberKind::SphereProduct) {
    int V = int(f.sphere.pos.size());
    int F = int(f.sphere.tri.size());
    g.sphere_face.assign(size_t(F) * f.ring_nodes, {0, 0, 0});
    g.ring_comp.assign(u.size(), 0.0);
    for (int k = 0; k < f.ring_nodes; ++k) {
      for (int fc = 0; fc < F; ++fc) {
        auto& out = g.sphere_face[fc + size_t(F) * k];
        for (int c = 0; c < 3; ++c) {
          double uv = u[f.sphere.tri[fc][c] + V * k];
          for (int a = 0; a < 3; ++a) out[a] += uv * f.sphere.hat_grad[fc][c][a];
        }
      }
      int kp = (k + 1) % f.ring_nodes;
      for (int v = 0; v < V; ++v)
        g.ring_comp[v + V * k] = (u[v + V * kp] - u[v + V * k]) / f.ring_h;
    }
    return g;
  }
  g.comp.assign(f.n, Field(u.size(), 0.0));
  for (int d = 0; d < f.n; ++d)
    for (int p = 0; p < f.node_count(); ++p) {
      int q = f.shift1(p, d, +1);
      if (q >= 0) g.comp[d][p] = (u[q] - u[p]) / f.h[d];
    }
  return g;
}

inline Field divergence(const DiscreteFiber& f, const VecField& g) {
  Field out(f.node_count(), 0.0);
  if (f.kind == FiberKind::SphereProduct) {
    int V = int(f.sphere.pos.size());
    int F = int(f.sphere.tri.size());
    for (int k = 0; k < f.ring_nodes; ++k) {
      for (int fc = 0; fc < F; ++fc) {
        auto& gv = g.sphere_face[fc + size_t(F) * k];
        for (int c = 0; c < 3; ++c) {
          double acc = 0;
          for (int a = 0; a < 3; ++a) acc += gv[a] * f.sphere.hat_grad[fc][c][a];
          out[f.sphere.tri[fc][c] + V * k] -=
              f.sphere.face_area[fc] * acc / f.sphere.dual_area[f.sphere.tri[fc][c]];
        }
      }
      int km = (k - 1 + f.ring_nodes) % f.ring_nodes;
      for (int v = 0; v < V; ++v)
        out[v + V * k] += (g.ring_comp[v + V * k] - g.ring_comp[v + V * km]) / f.ring_h;
    }
    return out;
  }
  for (int d = 0; d < f.n; ++d)
    for (int p = 0; p < f.node_count(); ++p) {
      int q = f.shift1(p, d, -1);
      double left = q >= 0 ? g.comp[d][q] : 0.0;
      out[p] += (g.comp[d][p] - left) / f.h[d];
    }
  return out;
}

inline Field laplace_beltrami(const DiscreteFiber& f, const Field& u) {
  check_field(f, u, "laplace_beltrami");
  if (f.kind == FiberKind::SphereProduct) return divergence(f, gradient(f, u));
  Field out(u.size(), 0.0);
  for (int p = 0; p < f.node_count(); ++p) {
    if (f.is_boundary(p)) continue;
    double acc = 0;
    for (int d = 0; d < f.n; ++d) {
      int qp = f.shift1(p, d, +1), qm = f.shift1(p, d, -1);
      if (qp < 0 || qm < 0) { acc = 0; break; }
      acc += (u[qp] - 2 * u[p] + u[qm]) / (f.h[d] * f.h[d]);
    }
    out[p] = acc;
  }
  return out;
}

// Per-node gradient components by central differences (one-sided at a grid
// boundary). This is the sampling used for pointwise geometric fields.
inline std::vector<Field> node_gradient(const DiscreteFiber& f, const Field& u) {
  check_field(f, u, "node_gradient");
  if (f.kind == FiberKind::SphereProduct)
    throw std::invalid_argument("node_gradient: structured fibers only");
  std::vector<Field> g(f.n, Field(u.size(), 0.0));
  for (int d = 0; d < f.n; ++d)
    for (int p = 0; p < f.node_count(); ++p) {
      int qp = f.shift1(p, d, +1), qm = f.shift1(p, d, -1);
      if (qp >= 0 && qm >= 0)
        g[d][p] = (u[qp] - u[qm]) / (2 * f.h[d]);
      else if (qp >= 0)
        g[d][p] = (u[qp] - u[p]) / f.h[d];
      else if (qm >= 0)
        g[d][p] = (u[p] - u[qm]) / f.h[d];
    }
  return g;
}

inline Field node_grad_norm2(const DiscreteFiber& f, const Field& u) {
  auto g = node_gradient(f, u);
  Field out(u.size(), 0.0);
  for (int d = 0; d < f.n; ++d)
    for (size_t p = 0; p < u.size(); ++p) out[p] += g[d][p] * g[d][p];
  return out;
}

inline double dot(const DiscreteFiber& f, const Field& a, const Field& b) {
  check_field(f, a, "dot");
  check_field(f, b, "dot");
  auto m = f.node_measures();
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += m[i] * a[i] * b[i];
  return s;
}

inline double grad_dot(const DiscreteFiber& f, const VecField& a, const VecField& b) {
  double s = 0;
  if (f.kind == FiberKind::SphereProduct) {
    int F = int(f.sphere.tri.size());
    int V = int(f.sphere.pos.size());
    for (int k = 0; k < f.ring_nodes; ++k)
      for (int fc = 0; fc < F; ++fc) {
        auto& va = a.sphere_face[fc + size_t(F) * k];
        auto& vb = b.sphere_face[fc + size_t(F) * k];
        s += f.sphere.face_area[fc] * f.ring_h *
             (va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2]);
      }
    for (int k = 0; k < f.ring_nodes; ++k)
      for (int v = 0; v < V; ++v)
        s += f.sphere.dual_area[v] * f.ring_h * a.ring_comp[v + V * k] *
             b.ring_comp[v + V * k];
    return s;
  }
  double cell = 1;
  for (double hd : f.h) cell *= hd;
  for (int d = 0; d < f.n; ++d)
    for (int p = 0; p < f.node_count(); ++p)
      s += cell * a.comp[d][p] * b.comp[d][p];
  return s;
}

// ---- geodesic balls and volume growth ------------------------------------

inline BallSet geodesic_ball(const DiscreteFiber& f, int center, double radius) {
  if (radius <= 0) throw std::invalid_argument("geodesic_ball: radius must be > 0");
  if (center < 0 || center >= f.node_count())
    throw std::invalid_argument("geodesic_ball: bad center node");
  BallSet b;
  b.center = center;
  b.radius = radius;
  b.truncated = radius >= f.ball_extent(center);
  std::vector<char> in(f.node_count(), 0);
  for (int id = 0; id < f.node_count(); ++id)
    if (f.distance(center, id) <= radius) {
      in[id] = 1;
      b.members.push_back(id);
    }
  if (f.kind == FiberKind::SphereProduct) {
    int V = int(f.sphere.pos.size());
    std::vector<std::vector<int>> vnbr(V);
    for (auto& t : f.sphere.tri)
      for (int c = 0; c < 3; ++c) {
        vnbr[t[c]].push_back(t[(c + 1) % 3]);
        vnbr[t[c]].push_back(t[(c + 2) % 3]);
      }
    for (int id : b.members) {
      int v = id % V, k = id / V;
      bool bd = false;
      for (int w : vnbr[v])
        if (!in[w + V * k]) { bd = true; break; }
      for (int dk = -1; dk <= 1 && !bd; dk += 2) {
        int kk = (k + dk + f.ring_nodes) % f.ring_nodes;
        if (!in[v + V * kk]) bd = true;
      }
      if (bd) b.boundary.push_back(id);
    }
    return b;
  }
  for (int id : b.members) {
    bool bd = false;
    for (int d = 0; d < f.n && !bd; ++d)
      for (int s = -1; s <= 1; s += 2) {
        int q = f.shift1(id, d, s);
        if (q < 0 || !in[q]) { bd = true; break; }
      }
    if (bd) b.boundary.push_back(id);
  }
  return b;
}

struct VolumeGrowthRow {
  double radius = 0;
  double volume = 0;
  bool truncated = false;
};

struct VolumeGrowthTable {
  std::vector<VolumeGrowthRow> rows;
  bool has_exponent = false;
  double exponent = 0;  // least-squares slope of log vol vs log r
};

inline VolumeGrowthTable volume_growth(const DiscreteFiber& f, int center,
                                       const std::vector<double>& radii) {
  for (size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] <= 0) throw std::invalid_argument("volume_growth: radii must be > 0");
    if (i > 0 && radii[i] <= radii[i - 1])
      throw std::invalid_argument("volume_growth: radii must be increasing");
  }
  VolumeGrowthTable out;
  auto m = f.node_measures();
  std::vector<double> lr, lv;
  for (double r : radii) {
    auto ball = geodesic_ball(f, center, r);
    double vol = 0;
    for (int id : ball.members) vol += m[id];
    out.rows.push_back({r, vol, ball.truncated});
    if (!ball.truncated && vol > 0) {
      lr.push_back(std::log(r));
      lv.push_back(std::log(vol));
    }
  }
  if (lr.size() >= 2) {
    out.exponent = ls_slope(lr, lv);
    out.has_exponent = true;
  }
  return out;
}

inline int nearest_node(const DiscreteFiber& f, const std::vector<double>& x) {
  if (f.kind == FiberKind::SphereProduct)
    throw std::invalid_argument("nearest_node: structured fibers only");
  std::vector<int> mi(f.n);
  for (int d = 0; d < f.n; ++d) {
    int i = int(std::lround((x[d] - f.origin[d]) / f.h[d]));
    if (f.periodic) {
      i %= f.box[d];
      if (i < 0) i += f.box[d];
    } else {
      i = std::clamp(i, 0, f.box[d] - 1);
    }
    mi[d] = i;
  }
  int id = f.node_from_lat(f.lat_index(mi));
  if (id < 0) throw std::invalid_argument("nearest_node: point outside mesh");
  return id;
}

}  // namespace warplab
