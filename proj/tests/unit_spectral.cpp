#include <cmath>
#include <sstream>

#include "doctest.h"

#include "carflow/spectral.hpp"
#include "carflow/symbol.hpp"

using namespace carflow;

namespace {

spectral::GridParams small_grid() {
  spectral::GridParams g;
  g.window = 64.0;
  g.step = 1e-3;
  g.points_per_decade = 64;
  return g;
}

}  // namespace

TEST_CASE("the two transform routes agree away from the origin") {
  const Symbol s = make_nu(0.5);
  const spectral::GridParams g = small_grid();
  const auto via_d = spectral::regular_part_via_derivative(s, g);
  const auto via_q = spectral::regular_part_via_difference(s, g);
  REQUIRE(via_d.size() == via_q.size());
  CHECK(via_d.method == spectral::Method::ViaDerivative);
  CHECK(via_q.method == spectral::Method::ViaDifference);
  double worst = 0.0;
  for (std::size_t i = 0; i < via_d.size(); ++i) {
    if (std::abs(via_d.xs[i]) > 10.0) continue;  // compare where both are well-conditioned
    worst = std::max(worst, (via_d.values[i] - via_q.values[i]).norm());
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("grid construction and preconditions") {
  const Symbol s = make_nu(0.5);
  Symbol no_deriv = s;
  no_deriv.derivative = nullptr;
  CHECK_THROWS_AS(spectral::regular_part_via_derivative(no_deriv, small_grid()),
                  std::invalid_argument);
  const Symbol ll = make_loglog();  // no limit at infinity
  CHECK_THROWS_AS(spectral::regular_part_via_difference(ll, small_grid()), std::invalid_argument);

  const auto r = spectral::regular_part_via_derivative(s, small_grid());
  // grid is symmetric, strictly increasing, and excludes 0
  for (std::size_t i = 0; i + 1 < r.size(); ++i) CHECK(r.xs[i] < r.xs[i + 1]);
  CHECK(r.xs.front() == doctest::Approx(-r.xs.back()));
  for (double x : r.xs) CHECK(x != 0.0);
}

TEST_CASE("Plancherel consistency of the transform energy") {
  // int_{|x| <= window} tr|Phi_hat_0|^2 dx approaches
  // 2 pi int tr|Phi - Q_inf|^2 dp (the window captures nearly all the energy
  // at nu = 0.5, where the symbol-side integrand decays like p^{-2}).
  const Symbol s = make_nu(0.5);
  spectral::GridParams g = small_grid();
  g.window = 2048.0;
  g.step = 1e-4;
  const auto r = spectral::regular_part_via_derivative(s, g);
  double lhs = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    if (r.xs[i] < 0.0 && r.xs[i + 1] > 0.0) continue;
    lhs += 0.5 * (tr_abs_sq(r.values[i]) + tr_abs_sq(r.values[i + 1])) * (r.xs[i + 1] - r.xs[i]);
  }
  const Matrix q = *limit_at_infinity(s);
  const double sym_side = quadrature::adaptive(
      [&](double p) { return tr_abs_sq(s.evaluate(p) - q) + tr_abs_sq(s.evaluate(-p) - q); }, 0.0,
      1e5, 1e-10);
  CHECK(lhs == doctest::Approx(kTwoPi * sym_side).epsilon(0.02));
}

TEST_CASE("weighted energy classifies the power family correctly") {
  const Symbol s = make_nu(0.5);
  const auto r = spectral::regular_part_via_derivative(s, spectral::GridParams{});
  // admissibility criterion (mu = 1) holds for every nu > 0
  CHECK(spectral::weighted_energy(r, 1.0).status == Status::Convergent);
  CHECK_THROWS_AS(spectral::weighted_energy(r, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(spectral::weighted_energy(r, 1.5), std::invalid_argument);
}

TEST_CASE("weight integrals respect the sampled window") {
  const Symbol s = make_nu(0.5);
  const auto r = spectral::regular_part_via_derivative(s, small_grid());
  auto w = [](double t) { return t > 1.0 && t < 2.0 ? 1.0 : 0.0; };
  const double v = spectral::weight_integral(r, w, 1.0, 2.0);
  CHECK(v > 0.0);
  CHECK_THROWS_AS(spectral::weight_integral(r, w, -1.0, 1e6), std::invalid_argument);
}

TEST_CASE("CSV export carries the documented header") {
  const Symbol s = make_nu(0.5);
  spectral::GridParams g = small_grid();
  g.window = 1e-2;  // tiny grid; just exercise the format
  const auto r = spectral::regular_part_via_derivative(s, g);
  std::ostringstream plain, full;
  spectral::export_csv(r, plain);
  spectral::export_csv(r, full, true);
  CHECK(plain.str().rfind("x,tr_abs2\n", 0) == 0);
  CHECK(full.str().rfind("x,tr_abs2,re_11,im_11", 0) == 0);
  // one row per grid point plus the header
  const auto count_lines = [](const std::string& t) {
    std::size_t n = 0;
    for (char c : t)
      if (c == '\n') ++n;
    return n;
  };
  CHECK(count_lines(plain.str()) == r.size() + 1);
}
