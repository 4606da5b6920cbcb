#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "carflow/quad.hpp"
#include "carflow/quadrature.hpp"
#include "carflow/symbol.hpp"
#include "carflow/verdict.hpp"

namespace carflow {
namespace spectral {

enum class Method { ViaDerivative, ViaDifference };

/// The regular part Phi_hat_0 of the Fourier transform of a symbol, sampled
/// on a log-spaced grid +-(step ... window). x = 0 is excluded: the regular
/// part is only defined away from the Dirac mass at the origin, and the x->0
/// behavior is always assessed by exponent fitting, never pointwise.
///
/// Convention: Phi_hat(x) = int Phi(p) e^{-ipx} dp, so Plancherel reads
/// int tr|Phi_hat_0|^2 dx = 2 pi int tr|Phi - Phi(inf)|^2 dp.
struct RegularPart {
  std::vector<double> xs;      // strictly increasing, negative then positive
  std::vector<Matrix> values;  // Phi_hat_0(x) per grid point
  Method method = Method::ViaDerivative;
  double window = 0.0;  // X_max
  double step = 0.0;    // smallest |x| sampled
  int dim = 0;

  std::size_t size() const { return xs.size(); }
};

struct GridParams {
  double window = 1e3;
  double step = 1e-6;  // smallest |x|; small enough for 16 singular-end shells
  int points_per_decade = 128;
  FilonMesh::Params mesh;
};

namespace detail {

inline std::vector<double> log_grid(const GridParams& g) {
  std::vector<double> pos;
  const double ratio = std::pow(10.0, 1.0 / g.points_per_decade);
  for (double x = g.step; x <= g.window * (1.0 + 1e-12); x *= ratio) pos.push_back(x);
  std::vector<double> xs;
  xs.reserve(2 * pos.size());
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) xs.push_back(-*it);
  xs.insert(xs.end(), pos.begin(), pos.end());
  return xs;
}

}  // namespace detail

/// Phi_hat_0(x) = (Fourier transform of Phi')(x) / (ix). Dividing by ix kills
/// the Dirac term of Phi_hat at 0, which never enters any criterion here.
inline RegularPart regular_part_via_derivative(const Symbol& s, const GridParams& g = {}) {
  if (!s.has_derivative())
    throw std::invalid_argument("regular_part_via_derivative: symbol has no analytic derivative");
  FilonMesh mesh([&s](double p) { return s.derivative(p); }, s.dimension, g.mesh);
  RegularPart r;
  r.method = Method::ViaDerivative;
  r.window = g.window;
  r.step = g.step;
  r.dim = s.dimension;
  r.xs = detail::log_grid(g);
  r.values.reserve(r.xs.size());
  for (double x : r.xs) r.values.push_back((mesh.transform(x) / Complex(0.0, x)).eval());
  return r;
}

/// Phi_hat_0 as the plain Fourier transform of Phi - Phi(inf); requires the
/// limit at infinity. Serves as an independent route for cross-checks.
inline RegularPart regular_part_via_difference(const Symbol& s, const GridParams& g = {}) {
  const auto limit = limit_at_infinity(s);
  if (!limit)
    throw std::invalid_argument("regular_part_via_difference: symbol has no limit at infinity");
  const Matrix q = *limit;
  FilonMesh mesh([&s, &q](double p) { return (s.evaluate(p) - q).eval(); }, s.dimension, g.mesh);
  RegularPart r;
  r.method = Method::ViaDifference;
  r.window = g.window;
  r.step = g.step;
  r.dim = s.dimension;
  r.xs = detail::log_grid(g);
  r.values.reserve(r.xs.size());
  for (double x : r.xs) r.values.push_back(mesh.transform(x));
  return r;
}

namespace detail {

/// Trapezoid sums of f(x_i) over the grid, bucketed into dyadic shells in |x|.
inline std::vector<ShellEntry> shell_sums(const RegularPart& r,
                                          const std::function<double(double, const Matrix&)>& f,
                                          int k_min, int k_max) {
  std::vector<ShellEntry> shells(static_cast<std::size_t>(k_max - k_min));
  for (int k = k_min; k < k_max; ++k)
    shells[k - k_min] = {std::ldexp(1.0, k), std::ldexp(1.0, k + 1), 0.0};
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double a = r.xs[i], b = r.xs[i + 1];
    if (a < 0.0 && b > 0.0) continue;  // the gap across 0 is never integrated
    const double mid = 0.5 * (std::abs(a) + std::abs(b));
    const int k = static_cast<int>(std::floor(std::log2(mid)));
    if (k < k_min || k >= k_max) continue;
    const double seg = 0.5 * (f(a, r.values[i]) + f(b, r.values[i + 1])) * (b - a);
    shells[k - k_min].value += seg;
  }
  return shells;
}

}  // namespace detail

/// int_R |x|^mu tr(|Phi_hat_0(x)|^2) dx over the sampled window, classified
/// by tail exponents at both x->0 and x->inf.
inline IntegralVerdict weighted_energy(const RegularPart& r, double mu,
                                       const quad::ShellConfig& base = {}) {
  if (r.size() == 0) throw std::invalid_argument("weighted_energy: empty RegularPart");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("weighted_energy: mu must be in (0,1]");
  quad::ShellConfig cfg = base;
  cfg.echo = "weighted_energy mu=" + std::to_string(mu) + " window=" + std::to_string(r.window) +
             " step=" + std::to_string(r.step);
  const int k_min = static_cast<int>(std::floor(std::log2(r.step)));
  const int k_max = static_cast<int>(std::ceil(std::log2(r.window)));
  cfg.k_min = k_min;
  cfg.k_max = k_max;
  auto f = [mu](double x, const Matrix& v) { return std::pow(std::abs(x), mu) * tr_abs_sq(v); };
  return quad::classify_from_shells(detail::shell_sums(r, f, k_min, k_max), cfg);
}

/// (1/4 pi^2) int w(t) tr(|Phi_hat_0(t)|^2) dt, the right-hand side of the
/// interval-compression Hilbert-Schmidt formula. The weight's support
/// [support_lo, support_hi] must lie inside the sampled window.
inline double weight_integral(const RegularPart& r, const std::function<double(double)>& w,
                              double support_lo, double support_hi) {
  if (support_lo < -r.window || support_hi > r.window)
    throw std::invalid_argument("weight_integral: weight support exceeds the sampled window; "
                                "rebuild the RegularPart with a larger window");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double a = r.xs[i], b = r.xs[i + 1];
    if (a < 0.0 && b > 0.0) continue;
    if (b < support_lo || a > support_hi) continue;
    const double fa = w(a) * tr_abs_sq(r.values[i]);
    const double fb = w(b) * tr_abs_sq(r.values[i + 1]);
    acc += 0.5 * (fa + fb) * (b - a);
  }
  return acc / (4.0 * kPi * kPi);
}

/// CSV export: `x, tr_abs2` rows, with full matrix entries appended when
/// `full_matrix` is set.
inline void export_csv(const RegularPart& r, std::ostream& out, bool full_matrix = false) {
  out << "x,tr_abs2";
  if (full_matrix)
    for (int i = 0; i < r.dim; ++i)
      for (int j = 0; j < r.dim; ++j) out << ",re_" << i + 1 << j + 1 << ",im_" << i + 1 << j + 1;
  out << "\n";
  for (std::size_t k = 0; k < r.size(); ++k) {
    out << r.xs[k] << "," << tr_abs_sq(r.values[k]);
    if (full_matrix)
      for (int i = 0; i < r.dim; ++i)
        for (int j = 0; j < r.dim; ++j)
          out << "," << r.values[k](i, j).real() << "," << r.values[k](i, j).imag();
    out << "\n";
  }
}

}  // namespace spectral
}  // namespace carflow
