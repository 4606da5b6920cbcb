#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "doctest.h"

#include "carflow/opdisc.hpp"
#include "carflow/symbol.hpp"

using namespace carflow;
using partition::IntervalUnion;

namespace {

Symbol constant_symbol() {
  Matrix q(2, 2);
  q << 1, 0, 0, 0;
  return make_constant(ProjectionMatrix(q));
}

Eigen::MatrixXcd random_projection(int dim, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  const Eigen::MatrixXcd u = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, rank);
  return u * u.adjoint();
}

}  // namespace

TEST_CASE("grid geometry and validation") {
  const opdisc::Grid g(8.0, 16);
  CHECK(g.dx() == doctest::Approx(0.5));
  CHECK(g.x_center(0) == doctest::Approx(-3.75));
  CHECK(g.x_center(15) == doctest::Approx(3.75));
  CHECK(g.freq(8) == doctest::Approx(0.0));
  CHECK(g.freq(9) == doctest::Approx(kTwoPi / 8.0));
  CHECK_THROWS_AS(opdisc::Grid(0.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(opdisc::Grid(8.0, 12), std::invalid_argument);
}

TEST_CASE("constant symbols give a pure diagonal kernel") {
  const Symbol s = constant_symbol();
  const opdisc::Grid g(16.0, 64);
  const opdisc::SymbolKernel ker(s, g);
  CHECK((ker.kappa(0) - s.evaluate(0.0)).norm() <= 1e-12);
  for (int d = 1; d < 64; ++d) CHECK(std::sqrt(ker.s(d)) <= 1e-12);
  CHECK(ker.s(5) == ker.s(5 - 64));  // M-periodicity of the index
}

TEST_CASE("time-basis and frequency-basis realizations are unitarily consistent") {
  const Symbol s = make_nu(0.5);
  const opdisc::Grid g(20.0, 64);
  const auto freq = opdisc::fourier_multiplier(s, g);
  const auto time = opdisc::multiplier_time_basis(s, g);
  CHECK(freq.basis == opdisc::Basis::Frequency);
  CHECK(time.basis == opdisc::Basis::Time);
  // unitary change of basis preserves trace and Hilbert-Schmidt norm
  CHECK(time.matrix.trace().real() ==
        doctest::Approx(freq.matrix.trace().real()).epsilon(1e-10));
  CHECK(time.matrix.norm() == doctest::Approx(freq.matrix.norm()).epsilon(1e-10));
  // the dense cap is enforced
  CHECK_THROWS_AS(opdisc::fourier_multiplier(s, opdisc::Grid(20.0, 4096)),
                  std::invalid_argument);
}

TEST_CASE("interval projections are diagonal 0/1 with measure-consistent rank") {
  const opdisc::Grid g(16.0, 64);  // dx = 0.25
  const auto p = opdisc::interval_projection(IntervalUnion({{0.0, 1.0}}), g);
  CHECK((p.matrix * p.matrix - p.matrix).norm() <= 1e-14);
  CHECK(p.matrix.trace().real() == doctest::Approx(4.0));  // 1.0 / dx cells
  CHECK_THROWS_AS(opdisc::interval_projection(IntervalUnion({{0.0, 100.0}}), g),
                  std::invalid_argument);
}

TEST_CASE("kernel-based HS norms match the dense matrices") {
  const Symbol s = make_nu(0.5);
  const opdisc::Grid g(20.0, 64);
  const opdisc::SymbolKernel ker(s, g);
  const IntervalUnion i_set({{0.0, 2.0}}), j_set({{3.0, 5.0}});
  const auto c = opdisc::multiplier_time_basis(s, g);
  const auto pi = opdisc::interval_projection(i_set, g, s.dimension);
  const auto pj = opdisc::interval_projection(j_set, g, s.dimension);
  const double dense = (pj.matrix * c.matrix * pi.matrix).norm();
  CHECK(opdisc::compressed_hs(ker, i_set, j_set) == doctest::Approx(dense).epsilon(1e-12));

  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(c.matrix.rows(), c.matrix.cols());
  const double dense_h = ((id - pi.matrix) * c.matrix * pi.matrix).norm();
  CHECK(opdisc::hankel_hs(ker, i_set) == doctest::Approx(dense_h).epsilon(1e-12));

  CHECK_THROWS_AS(opdisc::compressed_hs(ker, i_set, IntervalUnion({{1.0, 4.0}})),
                  std::invalid_argument);
}

TEST_CASE("HS functionals vanish for constant symbols") {
  const Symbol s = constant_symbol();
  const opdisc::Grid g(32.0, 256);
  const opdisc::SymbolKernel ker(s, g);
  CHECK(opdisc::compressed_hs(ker, IntervalUnion({{0.0, 1.0}}), IntervalUnion({{2.0, 3.0}})) <=
        1e-10);
  CHECK(opdisc::hankel_hs(ker, IntervalUnion({{0.0, 1.0}})) <= 1e-10);
  CHECK(opdisc::toeplitz_trace_defect(ker) <= 1e-10);
  CHECK(opdisc::shift_defect(ker, 1.0).value <= 1e-10);
}

TEST_CASE("adjoint symmetry of the compression norm for self-adjoint symbols") {
  const Symbol s = make_nu(0.3);
  const opdisc::Grid g(40.0, 512);
  const opdisc::SymbolKernel ker(s, g);
  const IntervalUnion a({{0.0, 1.0}}), b({{2.5, 4.0}});
  CHECK(opdisc::compressed_hs(ker, a, b) ==
        doctest::Approx(opdisc::compressed_hs(ker, b, a)).epsilon(1e-12));
}

TEST_CASE("shift defect bookkeeping") {
  const Symbol s = make_nu(0.5);
  const opdisc::Grid g(32.0, 256);  // dx = 0.125
  const opdisc::SymbolKernel ker(s, g);
  const auto zero = opdisc::shift_defect(ker, 0.0);
  CHECK(zero.value == 0.0);
  CHECK(zero.cells == 0);
  const auto one = opdisc::shift_defect(ker, 1.0);
  CHECK(one.cells == 8);
  CHECK(one.t_rounded == doctest::Approx(1.0));
  CHECK(one.value <= 1e-10);  // the lattice shift commutes with the kernel exactly
  const auto off = opdisc::shift_defect(ker, 1.01);
  CHECK(off.cells == 8);
  CHECK(off.rounding == doctest::Approx(0.01));
  CHECK_THROWS_AS(opdisc::shift_defect(ker, 100.0), std::invalid_argument);
}

TEST_CASE("projection-pair identity: closed form and random pairs") {
  Eigen::MatrixXcd p(2, 2), q(2, 2);
  p << 1, 0, 0, 0;
  q << 0.5, 0.5, 0.5, 0.5;
  const auto [lhs, rhs] = opdisc::pq_identity(p, q);
  CHECK(lhs == doctest::Approx(0.5).epsilon(1e-12));  // tr(c^2 s^2) = 1/4, norm = 1/2
  CHECK(rhs == doctest::Approx(0.5).epsilon(1e-12));

  const auto [same_l, same_r] = opdisc::pq_identity(p, p);
  CHECK(same_l <= 1e-14);
  CHECK(same_r <= 1e-14);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 2 + static_cast<int>(rng() % 7);
    const auto a = random_projection(dim, 1 + static_cast<int>(rng() % dim), rng);
    const auto b = random_projection(dim, 1 + static_cast<int>(rng() % dim), rng);
    const auto [l, r] = opdisc::pq_identity(a, b);
    CHECK(std::abs(l - r) <= 1e-10 * std::max(l, 1.0));
  }

  Eigen::MatrixXcd not_proj(2, 2);
  not_proj << 0.3, 0, 0, 0;
  CHECK_THROWS_AS(opdisc::pq_identity(not_proj, p), std::invalid_argument);
}

TEST_CASE("quasi-equivalence functional closed forms") {
  const Eigen::MatrixXcd half = 0.5 * Eigen::MatrixXcd::Identity(2, 2);
  Eigen::MatrixXcd e(2, 2);
  e << 1, 0, 0, 0;
  CHECK(opdisc::qe_functional(e, e) <= 1e-14);          // equal projections
  CHECK(opdisc::qe_functional(half, e) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(opdisc::qe_functional(half, half) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(opdisc::qe_functional((2.0 * e).eval(), e), std::invalid_argument);
}

TEST_CASE("partition partial sums flag exhausted resolution") {
  const Symbol s = make_nu(0.2);
  const opdisc::Grid g(32.0, 1024);  // dx = 1/32; lengths 1, 1/4, then 1/9 < 4 dx
  const opdisc::SymbolKernel ker(s, g);
  const auto scheme = partition::build_from_mu(0.5, 100);
  const auto res = opdisc::cabatif_hs_partial_sum(ker, scheme, 10);
  CHECK(res.resolution_exhausted);
  CHECK(res.resolved_terms == 2);
  REQUIRE(res.partial.size() == 2);
  CHECK(res.partial[1] >= res.partial[0]);  // running sums are nondecreasing
}

TEST_CASE("binary operator export carries the documented layout") {
  const Symbol s = constant_symbol();
  const opdisc::Grid g(4.0, 4);
  const auto op = opdisc::fourier_multiplier(s, g);
  const std::string path = "unit_opdisc_export.bin";
  opdisc::write_operator(op, path);
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  char magic[8];
  in.read(magic, 8);
  CHECK(std::memcmp(magic, "CFOP0001", 8) == 0);
  std::int64_t m = 0, n = 0;
  double l = 0.0;
  std::int8_t basis = -1;
  in.read(reinterpret_cast<char*>(&m), sizeof(m));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&l), sizeof(l));
  in.read(reinterpret_cast<char*>(&basis), sizeof(basis));
  CHECK(m == 4);
  CHECK(n == 2);
  CHECK(l == doctest::Approx(4.0));
  CHECK(basis == 1);  // frequency
  double re = 0.0, im = 0.0;
  in.read(reinterpret_cast<char*>(&re), sizeof(re));
  in.read(reinterpret_cast<char*>(&im), sizeof(im));
  CHECK(re == doctest::Approx(op.matrix(0, 0).real()));
  CHECK(im == doctest::Approx(op.matrix(0, 0).imag()));
  std::remove(path.c_str());
}

TEST_CASE("HS norms are unitarily invariant") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  const int dim = 12;
  Eigen::MatrixXcd a(dim, dim), z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      a(i, j) = Complex(gauss(rng), gauss(rng));
      z(i, j) = Complex(gauss(rng), gauss(rng));
    }
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  const Eigen::MatrixXcd u = qr.householderQ();
  CHECK((u * a).norm() == doctest::Approx(a.norm()).epsilon(1e-10));
  CHECK((a * u).norm() == doctest::Approx(a.norm()).epsilon(1e-10));
}
