#pragma once

#include <complex>
#include <Eigen/Dense>

namespace carflow {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Frobenius (Hilbert-Schmidt) norm squared.
inline double hs_norm_sq(const Matrix& m) { return m.squaredNorm(); }

/// tr(|M|^2) = tr(M* M), always real for any square M.
inline double tr_abs_sq(const Matrix& m) { return m.squaredNorm(); }

}  // namespace carflow
