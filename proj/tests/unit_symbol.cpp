#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"

#include "carflow/symbol.hpp"

using namespace carflow;

namespace {

Matrix half_ones() {
  Matrix m(2, 2);
  m << 0.5, 0.5, 0.5, 0.5;
  return m;
}

}  // namespace

TEST_CASE("constant symbols carry their projection everywhere") {
  Matrix q(2, 2);
  q << 1, 0, 0, 0;
  const Symbol s = make_constant(ProjectionMatrix(q));
  CHECK(s.dimension == 2);
  CHECK((s.evaluate(3.7) - q).norm() == 0.0);
  CHECK(s.derivative(1.0).norm() == 0.0);
  CHECK(s.parity == Parity::Even);
  REQUIRE(limit_at_infinity(s).has_value());
  CHECK((*limit_at_infinity(s) - q).norm() == 0.0);
  check_symbol(s, {-10.0, 0.0, 5.0});
}

TEST_CASE("ProjectionMatrix rejects non-projections") {
  Matrix bad(2, 2);
  bad << 0.9, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(ProjectionMatrix{bad}, std::invalid_argument);
  Matrix nonherm(2, 2);
  nonherm << 1.0, 0.1, 0.0, 0.0;
  CHECK_THROWS_AS(ProjectionMatrix{nonherm}, std::invalid_argument);
}

TEST_CASE("the power-family symbol is a smooth even projection field") {
  const Symbol s = make_nu(0.5);
  check_symbol(s, {0.0, 0.1, 1.0, 31.4, 1e6});
  REQUIRE(s.has_derivative());
  // derivative against a centered difference
  const double p = 0.7, h = 1e-6;
  const Matrix fd = (s.evaluate(p + h) - s.evaluate(p - h)) / (2.0 * h);
  CHECK((s.derivative(p) - fd).norm() <= 1e-8);
  // limit at infinity: theta -> 0, so Phi -> (1/2) ones
  REQUIRE(limit_at_infinity(s).has_value());
  CHECK((*limit_at_infinity(s) - half_ones()).norm() <= 1e-12);
  CHECK(s.family.kind == FamilyKind::PowersNu);
  CHECK(s.family.nu == doctest::Approx(0.5));
}

TEST_CASE("the slow-phase symbol has no limit but a consistent C^1 profile") {
  const Symbol s = make_loglog();
  check_symbol(s, {0.0, 1.0, 7.0, 100.0, 1e8});
  CHECK_FALSE(limit_at_infinity(s).has_value());
  REQUIRE(s.has_derivative());
  for (double p : {2.0, 3.6, 7.3, 8.0, 50.0}) {  // spans plateau, blend, asymptotic
    const double h = 1e-6;
    const Matrix fd = (s.evaluate(p + h) - s.evaluate(p - h)) / (2.0 * h);
    CHECK((s.derivative(p) - fd).norm() <= 1e-7);
  }
}

TEST_CASE("nearest_projection rounds spectrally and flags ambiguity") {
  Matrix m(2, 2);
  m << 0.9, 0.0, 0.0, 0.1;
  const ProjectionMatrix q = nearest_projection(m);
  Matrix want(2, 2);
  want << 1, 0, 0, 0;
  CHECK((q.entries - want).norm() <= 1e-12);

  CHECK_THROWS_AS(nearest_projection((0.5 * Matrix::Identity(2, 2)).eval()), std::domain_error);

  Matrix nonherm(2, 2);
  nonherm << 1.0, 0.3, 0.0, 0.0;
  CHECK_THROWS_AS(nearest_projection(nonherm), std::invalid_argument);
}

TEST_CASE("sampled symbols load, interpolate, and validate") {
  const std::string path = "unit_symbol_sampled.csv";
  {
    std::ofstream out(path);
    out << "# N=1 parity=even\n";
    out << "-2,1,0\n";
    out << "-1,1,0\n";
    out << "1,0,0\n";
    out << "2,0,0\n";
  }
  const Symbol s = load_sampled(path);
  CHECK(s.dimension == 1);
  CHECK(s.parity == Parity::Even);
  CHECK(s.evaluate(-3.0)(0, 0).real() == doctest::Approx(1.0));  // clamped
  CHECK(s.evaluate(1.5)(0, 0).real() == doctest::Approx(0.0));
  REQUIRE(s.sample_range.has_value());
  CHECK(s.sample_range->first == doctest::Approx(-2.0));
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_sampled("no_such_file.csv"), std::runtime_error);

  const std::string bad = "unit_symbol_bad.csv";
  {
    std::ofstream out(bad);
    out << "N=1 parity=even\n";  // missing the leading '#'
    out << "0,1,0\n1,1,0\n";
  }
  CHECK_THROWS_AS(load_sampled(bad), std::runtime_error);
  std::remove(bad.c_str());

  const std::string nonproj = "unit_symbol_nonproj.csv";
  {
    std::ofstream out(nonproj);
    out << "# N=1 parity=even\n";
    out << "0,0.4,0\n1,0.4,0\n";  // 0.4 is not idempotent
  }
  CHECK_THROWS_AS(load_sampled(nonproj), std::runtime_error);
  std::remove(nonproj.c_str());
}
