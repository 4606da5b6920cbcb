#include <cmath>
#include <random>

#include "doctest.h"

#include "carflow/car.hpp"
#include "carflow/opdisc.hpp"

using namespace carflow;

namespace {

Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
  return v;
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

TEST_CASE("anticommutation relations hold exactly on small mode counts") {
  std::mt19937_64 rng(5);
  for (int n : {1, 2, 4}) {
    const car::CarRep rep = car::build_rep(n);
    const long dim = 1L << n;
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = random_vector(n, rng), y = random_vector(n, rng);
      const Eigen::MatrixXcd ax = rep.a(x), ay = rep.a(y), ays = rep.a_star(y);
      CHECK((ax * ay + ay * ax).norm() <= 1e-12 * x.norm() * y.norm());
      const Complex pairing = car::inner(x, y);
      CHECK((ax * ays + ays * ax - pairing * id).norm() <= 1e-12 * x.norm() * y.norm());
    }
    // a(y)^* annihilates the vacuum
    const Vector y = random_vector(n, rng);
    CHECK((rep.a_star(y) * rep.vacuum).norm() <= 1e-13 * y.norm());
  }
  CHECK_THROWS_AS(car::build_rep(0), std::invalid_argument);
  CHECK_THROWS_AS(car::build_rep(11), std::invalid_argument);
}

TEST_CASE("a(x) is conjugate-linear in x") {
  const car::CarRep rep = car::build_rep(3);
  std::mt19937_64 rng(9);
  const Vector x = random_vector(3, rng);
  const Complex c(0.7, -1.3);
  CHECK((rep.a((c * x).eval()) - std::conj(c) * rep.a(x)).norm() <= 1e-13);
  CHECK((rep.a_star((c * x).eval()) - c * rep.a_star(x)).norm() <= 1e-13);
}

TEST_CASE("covariance validation") {
  CHECK_THROWS_AS(car::CovarianceMatrix((2.0 * Eigen::MatrixXcd::Identity(2, 2)).eval()),
                  std::invalid_argument);
  Eigen::MatrixXcd nonherm(2, 2);
  nonherm << 0.5, 0.3, 0.0, 0.5;
  CHECK_THROWS_AS(car::CovarianceMatrix{nonherm}, std::invalid_argument);
  const car::CovarianceMatrix half((0.5 * Eigen::MatrixXcd::Identity(2, 2)).eval());
  CHECK_FALSE(half.is_projection());
  const car::CovarianceMatrix full(Eigen::MatrixXcd::Identity(2, 2));
  CHECK(full.is_projection());
}

TEST_CASE("quasi-free moments: determinant structure") {
  std::mt19937_64 rng(13);
  const int n = 4;
  const car::CovarianceMatrix p(random_projection(n, 2, rng));

  // empty word: the state is normalized
  CHECK(std::abs(car::quasi_free_moment(p, {}, {}) - Complex(1.0)) <= 1e-14);
  // unbalanced words vanish
  car::Word unbalanced;
  unbalanced.xs.push_back(random_vector(n, rng));
  CHECK(std::abs(car::quasi_free_moment(p, unbalanced)) == 0.0);
  // degree one: phi(a(x) a(y)^*) = <P x, y>
  const Vector x = random_vector(n, rng), y = random_vector(n, rng);
  CHECK(std::abs(car::quasi_free_moment(p, {x}, {y}) - car::inner((p.a * x).eval(), y)) <= 1e-13);
  // positivity of the Gram determinant for repeated vectors
  const Complex diag = car::quasi_free_moment(p, {x}, {x});
  CHECK(diag.real() >= -1e-10);
  CHECK(std::abs(diag.imag()) <= 1e-12);
}

TEST_CASE("the explicit Fock state reproduces the determinant formula") {
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + trial % 3;
    const int rank = 1 + static_cast<int>(rng() % n);
    const car::CovarianceMatrix p(random_projection(n, rank, rng));
    car::Word w;
    const int deg = 1 + trial % 2;
    for (int i = 0; i < deg; ++i) {
      w.xs.push_back(random_vector(n, rng));
      w.ys.push_back(random_vector(n, rng));
    }
    worst = std::max(worst,
                     std::abs(car::fock_state_expectation(p, w) - car::quasi_free_moment(p, w)));
  }
  CHECK(worst <= 1e-10);

  // vacuum (zero covariance): only the CAR pairing term survives
  const car::CovarianceMatrix vac(Eigen::MatrixXcd::Zero(3, 3));
  car::Word w;
  w.xs.push_back(random_vector(3, rng));
  w.ys.push_back(random_vector(3, rng));
  CHECK(std::abs(car::fock_state_expectation(vac, w)) <= 1e-13);  // phi(a a^*) ... det<0 x, y> = 0

  const car::CovarianceMatrix half((0.5 * Eigen::MatrixXcd::Identity(2, 2)).eval());
  CHECK_THROWS_AS(car::fock_state_expectation(half, w), std::invalid_argument);
}

TEST_CASE("gauge invariance: unbalanced words have zero expectation") {
  std::mt19937_64 rng(31);
  const car::CovarianceMatrix p(random_projection(4, 2, rng));
  std::vector<car::Word> words;
  for (int i = 0; i < 6; ++i) {
    car::Word w;
    const int nx = 1 + static_cast<int>(rng() % 3), ny = 1 + static_cast<int>(rng() % 3);
    if (nx == ny) continue;
    for (int k = 0; k < nx; ++k) w.xs.push_back(random_vector(4, rng));
    for (int k = 0; k < ny; ++k) w.ys.push_back(random_vector(4, rng));
    words.push_back(std::move(w));
  }
  const auto rep = car::gauge_invariance_check(p, words);
  CHECK(rep.pass);
  CHECK(rep.words_checked == static_cast<int>(words.size()));
}

TEST_CASE("equal projections are trivially quasi-equivalent") {
  std::mt19937_64 rng(41);
  const Eigen::MatrixXcd p = random_projection(5, 2, rng);
  CHECK(opdisc::qe_functional(p, p) <= 1e-10);
}
