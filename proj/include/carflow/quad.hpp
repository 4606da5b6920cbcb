#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "carflow/quadrature.hpp"
#include "carflow/symbol.hpp"
#include "carflow/verdict.hpp"

namespace carflow {
namespace quad {

struct ShellConfig {
  int k_min = -30;            // singular-end shells start at 2^k_min
  int k_max = 140;            // far-end shells stop at 2^k_max
  int fit_j_min = 4;          // shells enter a fit only beyond |log2 lo| >= this
  // Integrand densities at or below this are floating-point noise (symbols
  // are O(1) projections, so cancellation bottoms out near eps^2 ~ 1e-32);
  // such shells are treated as exact zeros. Without this, the ~1e-32 floor
  // of tr|Phi - Q|^2 grows like the shell width and fakes a divergence.
  double noise_density = 1e-31;
  double eta = default_eta();
  int panels_per_shell = 2;
  std::string echo;
};

namespace detail_fit {

/// Tail contribution beyond the last sampled shell, from the fitted model.
inline double tail_extrapolation(const ShellSample& last, const ExponentFit& fit) {
  const double r = std::exp(fit.slope);
  if (r < 0.95) return last.value * r / (1.0 - r);
  if (fit.log_power < -1.1)  // j^c tail: sum_{j'>j} ~ value * j / (-c - 1)
    return last.value * last.j / (-fit.log_power - 1.0);
  return 0.0;
}

}  // namespace detail_fit

/// Classifies a one-dimensional singular integral from its dyadic shell
/// sequence (ordered from the singular end outward). Both ends are judged
/// independently; the middle shells only enter the total value.
inline IntegralVerdict classify_from_shells(std::vector<ShellEntry> shells,
                                            const ShellConfig& cfg = {}) {
  IntegralVerdict v;
  v.params = cfg.echo;
  v.shells = std::move(shells);
  for (auto& sh : v.shells)
    if (sh.hi > sh.lo && sh.value / (sh.hi - sh.lo) <= cfg.noise_density) sh.value = 0.0;
  double total = 0.0;
  for (const auto& sh : v.shells) total += sh.value;
  if (total <= 1e-30) {
    v.status = Status::Convergent;
    v.value = 0.0;
    v.diagnostic = "integrand numerically zero";
    return v;
  }

  std::vector<ShellSample> toward_zero, toward_inf;
  for (const auto& sh : v.shells) {
    const double k = std::log2(sh.lo);
    if (k <= -cfg.fit_j_min) toward_zero.push_back({-k, sh.value});
    if (k >= cfg.fit_j_min) toward_inf.push_back({k, sh.value});
  }
  std::reverse(toward_zero.begin(), toward_zero.end());

  auto [st0, fit0] = detail::classify_end(toward_zero, cfg.eta, total);
  auto [st1, fit1] = detail::classify_end(toward_inf, cfg.eta, total);

  if (st0 == Status::Divergent || st1 == Status::Divergent)
    v.status = Status::Divergent;
  else if (st0 == Status::Inconclusive || st1 == Status::Inconclusive)
    v.status = Status::Inconclusive;
  else
    v.status = Status::Convergent;

  v.fit_zero = fit0;
  v.fit_inf = fit1;
  // Dominant singular end: the one closer to divergence.
  if (fit0 && fit1)
    v.tail_exponent = fit0->slope > fit1->slope ? fit0 : fit1;
  else
    v.tail_exponent = fit0 ? fit0 : fit1;

  std::ostringstream diag;
  diag << "end x->0: " << to_string(st0);
  if (fit0) diag << " (slope " << fit0->slope << " +- " << fit0->stderr_
                 << ", log_power " << fit0->log_power << ")";
  diag << "; end x->inf: " << to_string(st1);
  if (fit1) diag << " (slope " << fit1->slope << " +- " << fit1->stderr_
                 << ", log_power " << fit1->log_power << ")";
  v.diagnostic = diag.str();

  if (v.status == Status::Convergent) {
    double value = total;
    if (fit1 && !toward_inf.empty())
      value += detail_fit::tail_extrapolation(toward_inf.back(), *fit1);
    if (fit0 && !toward_zero.empty())
      value += detail_fit::tail_extrapolation(toward_zero.back(), *fit0);
    v.value = value;
  }
  return v;
}

/// Shared driver: classifies int_0^inf g(t) dt by dyadic shell bookkeeping
/// at both ends. `g` must be nonnegative.
inline IntegralVerdict classify_positive_integral(const std::function<double(double)>& g,
                                                  const ShellConfig& cfg = {}) {
  const auto raw = quadrature::dyadic_shells(g, cfg.k_min, cfg.k_max, cfg.panels_per_shell);
  std::vector<ShellEntry> shells;
  shells.reserve(raw.size());
  for (const auto& sh : raw) shells.push_back({sh.lo, sh.hi, sh.value});
  return classify_from_shells(std::move(shells), cfg);
}

/// int_0^inf tr(|Phi(2p) - Phi(p)|^2) p^{-mu} dp   (necessary for CABATIF).
inline IntegralVerdict dyadic_difference(const Symbol& s, double mu, const ShellConfig& base = {}) {
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("dyadic_difference: mu must be in (0,1]");
  ShellConfig cfg = base;
  cfg.echo = "dyadic_difference mu=" + std::to_string(mu);
  auto g = [&s, mu](double p) {
    return tr_abs_sq(s.evaluate(2 * p) - s.evaluate(p)) * std::pow(p, -mu);
  };
  return classify_positive_integral(g, cfg);
}

/// int_0^inf tr(|Phi'(p)|^2) p^{2-mu} dp   (sufficient for CABATIF).
inline IntegralVerdict derivative_criterion(const Symbol& s, double mu, const ShellConfig& base = {}) {
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("derivative_criterion: mu must be in (0,1]");
  if (!s.has_derivative())
    throw std::invalid_argument("derivative_criterion: symbol has no analytic derivative");
  ShellConfig cfg = base;
  cfg.echo = "derivative_criterion mu=" + std::to_string(mu);
  auto g = [&s, mu](double p) {
    return tr_abs_sq(s.derivative(p)) * std::pow(p, 2.0 - mu);
  };
  return classify_positive_integral(g, cfg);
}

/// int_R tr(|Phi(p) - Psi(p)|^2) dp, folded onto (0, inf).
inline IntegralVerdict l2_distance(const Symbol& s, const std::function<Matrix(double)>& other,
                                   int other_dim, const ShellConfig& base = {}) {
  if (s.dimension != other_dim) throw std::invalid_argument("l2_distance: dimension mismatch");
  ShellConfig cfg = base;
  cfg.echo = "l2_distance";
  auto g = [&s, &other](double p) {
    return tr_abs_sq(s.evaluate(p) - other(p)) + tr_abs_sq(s.evaluate(-p) - other(-p));
  };
  return classify_positive_integral(g, cfg);
}

inline IntegralVerdict l2_distance(const Symbol& s, const Symbol& t, const ShellConfig& base = {}) {
  return l2_distance(s, [&t](double p) { return t.evaluate(p); }, t.dimension, base);
}

inline IntegralVerdict l2_distance(const Symbol& s, const ProjectionMatrix& q,
                                   const ShellConfig& base = {}) {
  const Matrix m = q.entries;
  return l2_distance(s, [m](double) { return m; }, q.dimension, base);
}

namespace detail_besov {

/// g(u) = int_R tr(|Phi(v+u) - Phi(v)|^2) dv.
///
/// The integrand concentrates near v = 0 and near v = -u (where one of the
/// two arguments crosses the origin). Splitting at the symmetry point
/// v = -u/2 and substituting v -> -u - v on the left half folds the second
/// concentration point onto v = 0, so dyadic shells in |v| around 0 resolve
/// both. (Resolving v = -u inside a far shell of width ~|u| would otherwise
/// require the quadrature to see an O(1)-wide feature there.)
inline double difference_energy(const Symbol& s, double u) {
  const double uu = std::abs(u);  // the integral is invariant under u -> -u
  // D(v) = F(v) + F(-u - v) for v > -u/2, with F(v) = tr|Phi(v+u) - Phi(v)|^2,
  // evaluated at +v and -v to cover both sides of 0.
  auto f = [&s, uu](double v) { return tr_abs_sq(s.evaluate(v + uu) - s.evaluate(v)); };
  auto d = [&f, uu](double v) { return f(v) + f(-uu - v); };
  double acc = 0.0;
  // (-u/2, 0): dyadic shells in |v|, capped at u/2.
  for (int k = -20; k < 30; ++k) {
    const double lo = std::ldexp(1.0, k);
    if (lo >= 0.5 * uu) break;
    const double hi = std::min(std::ldexp(1.0, k + 1), 0.5 * uu);
    acc += quadrature::gl16(d, -hi, -std::sqrt(lo * hi)) +
           quadrature::gl16(d, -std::sqrt(lo * hi), -lo);
    if (hi == 0.5 * uu) break;
  }
  // (0, inf): dyadic shells with early termination once far shells stop
  // contributing (the integrand is bump-free there).
  for (int k = -20; k < 30; ++k) {
    const double lo = std::ldexp(1.0, k), hi = std::ldexp(1.0, k + 1);
    const double v = quadrature::gl16(d, lo, std::sqrt(lo * hi)) +
                     quadrature::gl16(d, std::sqrt(lo * hi), hi);
    acc += v;
    if (k > 4 && hi > 4.0 * uu && v < 1e-12 * acc) break;
  }
  return acc;
}

}  // namespace detail_besov

/// Double Besov-type integral over R^2 of tr(|Phi(p)-Phi(q)|^2)/|p-q|^{1+mu},
/// via the substitution u = p - q (the inner v-integral is evaluated per
/// dyadic u-shell). The band |u| < 1e-6 below the smallest shell is excluded;
/// its contribution is bounded by the local Lipschitz estimate and covered by
/// the singular-end extrapolation.
inline IntegralVerdict besov_double(const Symbol& s, double mu, const ShellConfig& base = {}) {
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("besov_double: mu must be in (0,1]");
  ShellConfig cfg = base;
  cfg.echo = "besov_double mu=" + std::to_string(mu);
  // the inner v-integral is truncated at 2^30, so outer shells beyond 2^26
  // would see a saturated (false) plateau
  cfg.k_min = std::max(cfg.k_min, -20);
  cfg.k_max = std::min(cfg.k_max, 26);
  auto g = [&s, mu](double u) {
    const double both = detail_besov::difference_energy(s, u) +
                        detail_besov::difference_energy(s, -u);
    return both * std::pow(u, -1.0 - mu);
  };
  return classify_positive_integral(g, cfg);
}

/// Circle-case identity: lhs is the double integral over [0,2pi]^2 of
/// |h(e^{is})-h(e^{it})|^2/|e^{is}-e^{it}|^2, rhs is 4 pi^2 sum |n||h^(n)|^2.
/// For a trigonometric polynomial the integrand is itself a trigonometric
/// polynomial, so the offset product grid below is exact once the grid beats
/// the degree.
inline std::pair<double, double> circle_identity_check(const std::map<int, Complex>& coeffs) {
  int degree = 0;
  double rhs = 0.0;
  for (const auto& [n, c] : coeffs) {
    degree = std::max(degree, std::abs(n));
    rhs += 4.0 * kPi * kPi * std::abs(n) * std::norm(c);
  }
  const int m = std::max(64, 8 * (degree + 1));
  auto h = [&coeffs](double t) {
    Complex acc = 0.0;
    for (const auto& [n, c] : coeffs) acc += c * std::exp(Complex(0.0, n * t));
    return acc;
  };
  std::vector<Complex> h_int(m), h_half(m);
  for (int j = 0; j < m; ++j) {
    h_int[j] = h(kTwoPi * j / m);
    h_half[j] = h(kTwoPi * (j + 0.5) / m);
  }
  // t on the half grid, s = t + sigma with sigma on the half grid, so t+sigma
  // lands on the integer grid and sigma never hits 0.
  double lhs = 0.0;
  for (int l = 0; l < m; ++l) {
    const double sigma = kTwoPi * (l + 0.5) / m;
    const double denom = std::norm(std::exp(Complex(0.0, sigma)) - 1.0);
    double row = 0.0;
    for (int j = 0; j < m; ++j) row += std::norm(h_int[(j + l + 1) % m] - h_half[j]);
    lhs += row / denom;
  }
  lhs *= (kTwoPi / m) * (kTwoPi / m);
  return {lhs, rhs};
}

/// C(mu) = (2^{1-mu}/pi) int_R sin^2 r / |r|^{1+mu} dr, by quadrature with an
/// integration-by-parts tail. C(1) = 1 exactly.
inline double sine_constant(double mu) {
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("sine_constant: mu must be in (0,1]");
  const double R = 2000.0;
  auto f = [mu](double r) { return std::sin(r) * std::sin(r) * std::pow(r, -1.0 - mu); };
  double integral = quadrature::adaptive(f, 1e-12, 1.0, 1e-13);
  // [1, R] in oscillation-sized panels
  for (double a = 1.0; a < R; a += 1.0) integral += quadrature::gl16(f, a, std::min(a + 1.0, R));
  // tail: sin^2 = (1 - cos 2r)/2; power part exact, cosine part by two IBPs
  integral += 0.5 * std::pow(R, -mu) / mu;
  const double cos_tail = -std::sin(2 * R) * std::pow(R, -1.0 - mu) / 2.0 +
                          (1.0 + mu) * std::cos(2 * R) * std::pow(R, -2.0 - mu) / 4.0;
  integral -= 0.5 * cos_tail;
  return std::pow(2.0, 1.0 - mu) / kPi * 2.0 * integral;
}

/// Scalar Plancherel-type identity behind the Besov equivalence:
/// lhs = double integral of |psi(p)-psi(q)|^2/|p-q|^{1+mu},
/// rhs = C(mu) * int |x|^mu |psi_hat(x)|^2 dx.
/// `q_half_range` bounds the decay of psi; `x_half_range` that of psi_hat.
inline std::pair<double, double> sine_factor_check(const std::function<double(double)>& psi,
                                                   const std::function<double(double)>& psi_hat,
                                                   double mu, double q_half_range = 10.0,
                                                   double x_half_range = 40.0) {
  // G(u) = int |psi(q+u)-psi(q)|^2 dq is even in u.
  auto big_g = [&psi, q_half_range](double u) {
    auto d = [&psi, u](double q) {
      const double t = psi(q + u) - psi(q);
      return t * t;
    };
    return quadrature::adaptive(d, -q_half_range - std::abs(u), q_half_range, 1e-12);
  };
  double lhs = 0.0;
  double norm_sq = quadrature::adaptive([&psi](double q) { return psi(q) * psi(q); },
                                        -q_half_range, q_half_range, 1e-13);
  const double u_cut = 64.0;
  for (int k = -24; k < 6; ++k) {
    const double lo = std::ldexp(1.0, k), hi = std::ldexp(1.0, k + 1);
    auto f = [&big_g, mu](double u) { return big_g(u) * std::pow(u, -1.0 - mu); };
    lhs += quadrature::gl16(f, lo, std::sqrt(lo * hi)) + quadrature::gl16(f, std::sqrt(lo * hi), hi);
  }
  // beyond u_cut the overlap term is numerically dead and G(u) = 2 |psi|^2
  lhs += 2.0 * norm_sq * std::pow(u_cut, -mu) / mu;
  lhs *= 2.0;  // fold u < 0

  auto weighted = [&psi_hat, mu](double x) {
    const double v = psi_hat(x);
    return std::pow(std::abs(x), mu) * v * v;
  };
  const double energy = quadrature::adaptive(weighted, -x_half_range, 0.0, 1e-12) +
                        quadrature::adaptive(weighted, 0.0, x_half_range, 1e-12);
  return {lhs, sine_constant(mu) * energy};
}

}  // namespace quad
}  // namespace carflow
