#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace warplab {

using Field = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Open interval (lo, hi); infinite ends allowed.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool contains(double t) const { return t > lo && t < hi; }

  std::string str() const {
    std::ostringstream os;
    os << "(" << lo << ", " << hi << ")";
    return os.str();
  }

  // Intersection with [a,b] expanded by a relative margin, for evaluating
  // hypotheses only on the realized data range.
  Interval truncate(double a, double b, double rel_margin = 0.1) const {
    double span = b - a;
    double pad = rel_margin * (span > 0 ? span : std::max(std::abs(a), 1.0));
    Interval out;
    out.lo = std::max(lo, a - pad);
    out.hi = std::min(hi, b + pad);
    return out;
  }
};

inline double linf(const Field& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double field_min(const Field& v) {
  double m = kInf;
  for (double x : v) m = std::min(m, x);
  return m;
}

inline double field_max(const Field& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  return m;
}

inline double mean_abs(const Field& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s / double(v.size());
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ls_slope: need >= 2 paired samples");
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= double(x.size());
  my /= double(x.size());
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("ls_slope: degenerate abscissae");
  return sxy / sxx;
}

// Least-squares fit y = a + b*x; returns {a, b}.
inline std::pair<double, double> ls_affine(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  double b = ls_slope(x, y);
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= double(x.size());
  my /= double(x.size());
  return {my - b * mx, b};
}

// Deterministic RNG used across experiments; never seeded from the clock.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double a, double b) {
    std::uniform_real_distribution<double> d(a, b);
    return d(gen);
  }
  int uniform_int(int a, int b) {
    std::uniform_int_distribution<int> d(a, b);
    return d(gen);
  }
};

inline void write_field_csv(const std::string& path,
                            const std::vector<std::vector<double>>& coords,
                            const Field& values) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  size_t dim = coords.empty() ? 0 : coords[0].size();
  os << "node";
  for (size_t d = 0; d < dim; ++d) os << ",x" << d;
  os << ",value\n";
  os.precision(17);
  for (size_t i = 0; i < values.size(); ++i) {
    os << i;
    for (size_t d = 0; d < dim; ++d) os << "," << coords[i][d];
    os << "," << values[i] << "\n";
  }
}

// Reads the value column of a field CSV written by write_field_csv.
inline Field read_field_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  Field out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto pos = line.rfind(',');
    if (pos == std::string::npos) throw std::runtime_error(path + ": malformed row");
    out.push_back(std::stod(line.substr(pos + 1)));
  }
  return out;
}

}  // namespace warplab
