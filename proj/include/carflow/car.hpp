#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "carflow/types.hpp"

namespace carflow {
namespace car {

/// Convention (fixed once, used everywhere): the inner product is linear in
/// its second slot, <u, v> = sum_i conj(u_i) v_i, and x -> a(x) is
/// conjugate-linear, realized as a(x) = sum_i conj(x_i) c_i^dagger over
/// Jordan-Wigner raising operators. Then both relations hold verbatim:
///   a(x) a(y) + a(y) a(x) = 0,
///   a(x) a(y)^* + a(y)^* a(x) = <x, y> 1,
/// the vacuum is the zero-covariance state (a(y)^* annihilates it), and the
/// fully filled state has covariance 1.
inline Complex inner(const Vector& u, const Vector& v) { return u.dot(v); }

/// Exact CAR representation on n modes (2^n-dimensional Fock space).
struct CarRep {
  int n = 0;
  std::vector<Eigen::MatrixXcd> lowering;  // c_i, Jordan-Wigner
  Eigen::VectorXcd vacuum;

  Eigen::MatrixXcd a(const Vector& x) const {
    check_dim(x);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(vacuum.size(), vacuum.size());
    for (int i = 0; i < n; ++i) acc += std::conj(x(i)) * lowering[i].adjoint();
    return acc;
  }

  Eigen::MatrixXcd a_star(const Vector& x) const {
    check_dim(x);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(vacuum.size(), vacuum.size());
    for (int i = 0; i < n; ++i) acc += x(i) * lowering[i];
    return acc;
  }

 private:
  void check_dim(const Vector& x) const {
    if (x.size() != n) throw std::invalid_argument("CarRep: vector dimension != mode count");
  }
};

/// Jordan-Wigner construction: c_i = Z^{(i-1)} (x) sigma_minus (x) 1^{(n-i)},
/// with basis index bit i set = mode i occupied (mode 1 most significant).
inline CarRep build_rep(int n) {
  if (n < 1 || n > 10) throw std::invalid_argument("build_rep: n must be in [1, 10]");
  const long dim = 1L << n;
  CarRep rep;
  rep.n = n;
  rep.vacuum = Eigen::VectorXcd::Zero(dim);
  rep.vacuum(0) = 1.0;
  Eigen::Matrix2cd z, sm, id;
  z << 1, 0, 0, -1;
  sm << 0, 1, 0, 0;  // maps |occupied> to |empty>
  id.setIdentity();
  for (int i = 1; i <= n; ++i) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Ones(1, 1);
    for (int f = 1; f <= n; ++f) {
      const Eigen::Matrix2cd& factor = f < i ? z : (f == i ? sm : id);
      Eigen::MatrixXcd next(acc.rows() * 2, acc.cols() * 2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) next.block(r * acc.rows(), c * acc.cols(), acc.rows(), acc.cols()) = factor(r, c) * acc;
      acc.swap(next);
    }
    rep.lowering.push_back(std::move(acc));
  }
  return rep;
}

/// Covariance operator of a gauge-invariant quasi-free state: self-adjoint
/// with spectrum in [0, 1] (validated to 1e-12).
struct CovarianceMatrix {
  Eigen::MatrixXcd a;

  explicit CovarianceMatrix(Eigen::MatrixXcd m) : a(std::move(m)) {
    if (a.rows() != a.cols()) throw std::invalid_argument("CovarianceMatrix: not square");
    if ((a - a.adjoint()).norm() > 1e-12 * std::max<double>(1.0, a.norm()))
      throw std::invalid_argument("CovarianceMatrix: not self-adjoint");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 || es.eigenvalues().maxCoeff() > 1.0 + 1e-12)
      throw std::invalid_argument("CovarianceMatrix: spectrum outside [0, 1]");
  }

  int modes() const { return static_cast<int>(a.rows()); }
  bool is_projection(double tol = 1e-10) const { return (a * a - a).norm() <= tol; }
};

/// A monomial a(x_k) ... a(x_1) a(y_1)^* ... a(y_m)^*; xs = (x_1, ..., x_k).
struct Word {
  std::vector<Vector> xs;
  std::vector<Vector> ys;
};

/// The quasi-free moment phi( a(x_n)...a(x_1) a(y_1)*...a(y_m)* ) =
/// delta_{n,m} det( <A x_i, y_j> ).
inline Complex quasi_free_moment(const CovarianceMatrix& cov, const std::vector<Vector>& xs,
                                 const std::vector<Vector>& ys) {
  if (xs.size() != ys.size()) return Complex(0.0, 0.0);
  const int k = static_cast<int>(xs.size());
  if (k == 0) return Complex(1.0, 0.0);
  Eigen::MatrixXcd gram(k, k);
  for (int i = 0; i < k; ++i) {
    if (xs[i].size() != cov.modes() || ys[i].size() != cov.modes())
      throw std::invalid_argument("quasi_free_moment: vector dimension != covariance dimension");
    for (int j = 0; j < k; ++j) gram(i, j) = inner(cov.a * xs[i], ys[j]);
  }
  return gram.determinant();
}

inline Complex quasi_free_moment(const CovarianceMatrix& cov, const Word& w) {
  return quasi_free_moment(cov, w.xs, w.ys);
}

/// The explicit pure state for a projection covariance: fill the rank-P
/// modes over the Fock vacuum and take the matrix element.
inline Complex fock_state_expectation(const CovarianceMatrix& p, const Word& w) {
  if (!p.is_projection()) throw std::invalid_argument("fock_state_expectation: covariance is not a projection");
  const int n = p.modes();
  const CarRep rep = build_rep(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p.a);
  Eigen::VectorXcd state = rep.vacuum;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i) > 0.5) state = rep.a(es.eigenvectors().col(i)) * state;

  Eigen::VectorXcd v = state;
  for (auto it = w.ys.rbegin(); it != w.ys.rend(); ++it) v = rep.a_star(*it) * v;
  for (const Vector& x : w.xs) v = rep.a(x) * v;
  return state.dot(v);
}

struct GaugeReport {
  int words_checked = 0;
  double max_abs = 0.0;
  bool pass = false;
};

/// Unbalanced words (creation count != annihilation count) must have zero
/// expectation in any gauge-invariant quasi-free state; checked in the
/// explicit representation for a projection covariance.
inline GaugeReport gauge_invariance_check(const CovarianceMatrix& p,
                                          const std::vector<Word>& words,
                                          double tol = 1e-10) {
  GaugeReport rep;
  for (const Word& w : words) {
    if (w.xs.size() == w.ys.size()) continue;
    rep.max_abs = std::max(rep.max_abs, std::abs(fock_state_expectation(p, w)));
    ++rep.words_checked;
  }
  rep.pass = rep.max_abs <= tol;
  return rep;
}

}  // namespace car
}  // namespace carflow
