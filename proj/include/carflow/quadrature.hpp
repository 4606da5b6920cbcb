#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "carflow/types.hpp"

namespace carflow {

namespace quadrature {

// 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr double kGLNodes[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
inline constexpr double kGLWeights[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

template <typename F>
double gl16(const F& f, double a, double b) {
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) acc += kGLWeights[i] * f(m + h * kGLNodes[i]);
  return acc * h;
}

namespace detail {
template <typename F>
double adapt(const F& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = gl16(f, a, m), right = gl16(f, m, b);
  const double delta = left + right - whole;
  if (std::abs(delta) <= tol || depth >= 24) return left + right;
  return adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1);
}
}  // namespace detail

/// Adaptive Gauss-Legendre on a finite interval.
template <typename F>
double adaptive(const F& f, double a, double b, double tol = 1e-10) {
  return detail::adapt(f, a, b, gl16(f, a, b), tol, 0);
}

/// Integral over a dyadic range [2^k_lo, 2^k_hi], log-subdivided, with a
/// per-shell breakdown. Returns the shells as (lo, hi, value).
struct Shell {
  double lo, hi, value;
};

template <typename F>
std::vector<Shell> dyadic_shells(const F& f, int k_lo, int k_hi, int panels_per_shell = 4) {
  std::vector<Shell> shells;
  shells.reserve(static_cast<std::size_t>(k_hi - k_lo));
  for (int k = k_lo; k < k_hi; ++k) {
    const double lo = std::ldexp(1.0, k), hi = std::ldexp(1.0, k + 1);
    double v = 0.0;
    for (int j = 0; j < panels_per_shell; ++j) {
      const double a = lo * std::pow(2.0, static_cast<double>(j) / panels_per_shell);
      const double b = lo * std::pow(2.0, static_cast<double>(j + 1) / panels_per_shell);
      v += gl16(f, a, b);
    }
    shells.push_back({lo, hi, v});
  }
  return shells;
}

}  // namespace quadrature

/// Filon-type quadrature of int f(p) e^{-ipx} dp for a smooth matrix-valued f.
///
/// The mesh interpolates f quadratically per panel once; each transform
/// evaluation then uses exact polynomial-times-exponential moments, so the
/// cost and the accuracy are uniform in x. Panels are uniform near the origin
/// and grow geometrically outward, matching power-law integrands.
class FilonMesh {
 public:
  struct Params {
    double p_uniform = 4.0;    // |p| below which panels are uniform
    double uniform_width = 0.25;
    double growth = 1.07;      // geometric panel growth beyond p_uniform
    double p_max = 1e8;        // truncation of the integration range
  };

  FilonMesh(const std::function<Matrix(double)>& f, int dim) : FilonMesh(f, dim, Params()) {}

  FilonMesh(const std::function<Matrix(double)>& f, int dim, const Params& params)
      : dim_(dim) {
    std::vector<double> edges;  // non-negative edges, mirrored later
    edges.push_back(0.0);
    double p = 0.0;
    while (p < params.p_uniform) {
      p += params.uniform_width;
      edges.push_back(p);
    }
    while (p < params.p_max) {
      p *= params.growth;
      edges.push_back(std::min(p, params.p_max));
    }
    panels_.reserve(2 * edges.size());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      add_panel(f, edges[i], edges[i + 1]);
      add_panel(f, -edges[i + 1], -edges[i]);
    }
  }

  /// int_{-p_max}^{p_max} f(p) e^{-ipx} dp.
  Matrix transform(double x) const {
    Matrix acc = Matrix::Zero(dim_, dim_);
    for (const Panel& pn : panels_) {
      const double z = pn.h * x;
      Complex m0, m1, m2;
      moments(z, m0, m1, m2);
      const Complex phase = std::exp(Complex(0.0, -pn.m * x)) * pn.h;
      acc += phase * (m0 * pn.c0 + m1 * pn.c1 + m2 * pn.c2);
    }
    return acc;
  }

  std::size_t panel_count() const { return panels_.size(); }

 private:
  struct Panel {
    double m, h;        // center, half-width
    Matrix c0, c1, c2;  // quadratic coefficients in u = (p - m)/h
  };

  void add_panel(const std::function<Matrix(double)>& f, double a, double b) {
    Panel pn;
    pn.m = 0.5 * (a + b);
    pn.h = 0.5 * (b - a);
    const Matrix fa = f(a), fm = f(pn.m), fb = f(b);
    pn.c0 = fm;
    pn.c1 = 0.5 * (fb - fa);
    pn.c2 = 0.5 * (fa + fb) - fm;
    panels_.push_back(std::move(pn));
  }

  // Moments M_k(z) = int_{-1}^{1} u^k e^{-iuz} du.
  static void moments(double z, Complex& m0, Complex& m1, Complex& m2) {
    const double az = std::abs(z);
    if (az < 0.35) {
      const double z2 = z * z;
      m0 = 2.0 * (1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0);
      m1 = Complex(0.0, -2.0) * (z / 3.0 - z * z2 / 30.0 + z * z2 * z2 / 840.0);
      m2 = 2.0 * (1.0 / 3.0 - z2 / 10.0 + z2 * z2 / 168.0);
      return;
    }
    const double s = std::sin(z), c = std::cos(z);
    m0 = 2.0 * s / z;
    m1 = Complex(0.0, -2.0) * (s - z * c) / (z * z);
    m2 = 2.0 * ((z * z - 2.0) * s + 2.0 * z * c) / (z * z * z);
  }

  int dim_;
  std::vector<Panel> panels_;
};

}  // namespace carflow
