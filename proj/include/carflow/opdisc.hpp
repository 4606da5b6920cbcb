#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "carflow/partition.hpp"
#include "carflow/symbol.hpp"
#include "carflow/types.hpp"

namespace carflow {
namespace opdisc {

/// Uniform grid on the time window [-L/2, L/2] with M cells (M a power of
/// two). Cell centers x_j = -L/2 + (j + 1/2) dx; frequency points
/// p_k = 2 pi (k - M/2) / L, symmetric about 0.
struct Grid {
  double L = 0.0;
  int M = 0;

  Grid(double L_, int M_) : L(L_), M(M_) {
    if (!(L > 0.0)) throw std::invalid_argument("Grid: L must be positive");
    if (M < 2 || (M & (M - 1)) != 0) throw std::invalid_argument("Grid: M must be a power of two >= 2");
  }

  double dx() const { return L / M; }
  double x_center(int j) const { return -0.5 * L + (j + 0.5) * dx(); }
  double freq(int k) const { return kTwoPi * (k - M / 2) / L; }
};

enum class Basis { Time, Frequency };

/// Dense realization of a discretized operator, for small grids only.
/// The hard cap keeps this an oracle at desk scale; the Hilbert-Schmidt
/// functionals below never build dense matrices and work at M = 2^14.
inline constexpr int kDenseCap = 4096;  // max M*N for dense construction

struct DiscretizedOperator {
  Eigen::MatrixXcd matrix;
  Grid grid;
  int dim = 0;  // N, the symbol dimension (or block size)
  Basis basis = Basis::Time;
};

namespace detail {

inline void check_dense_cap(const Grid& g, int dim) {
  if (static_cast<long>(g.M) * dim > kDenseCap)
    throw std::invalid_argument("dense operator: M*N exceeds the dense cap " +
                                std::to_string(kDenseCap) +
                                "; use the kernel-based functionals instead");
}

inline bool contains(const partition::IntervalUnion& e, double x) {
  for (const auto& [a, b] : e.intervals())
    if (x > a && x < b) return true;
  return false;
}

inline std::vector<int> cells_in(const partition::IntervalUnion& e, const Grid& g) {
  std::vector<int> idx;
  for (int j = 0; j < g.M; ++j)
    if (contains(e, g.x_center(j))) idx.push_back(j);
  return idx;
}

inline void check_inside_window(const partition::IntervalUnion& e, const Grid& g,
                                const char* who) {
  for (const auto& [a, b] : e.intervals())
    if (a < -0.5 * g.L || b > 0.5 * g.L)
      throw std::invalid_argument(std::string(who) + ": interval union exceeds the time window");
}

}  // namespace detail

/// The time-basis kernel of the discretized Fourier multiplier C_Phi:
/// entry block (j', j) is kappa(j' - j) with
///   kappa(d) = (1/M) sum_k Phi(p_k) e^{i 2 pi (k - M/2) d / M},
/// which is M-periodic in d (M even). s(d) = ||kappa(d)||_F^2.
/// Built with N^2 inverse FFTs of length M; no dense matrix is formed.
class SymbolKernel {
 public:
  SymbolKernel(const Symbol& s, const Grid& g) : grid_(g), dim_(s.dimension) {
    const int m = g.M;
    std::vector<Matrix> freq_values(m);
    for (int k = 0; k < m; ++k) freq_values[k] = s.evaluate(g.freq(k));

    kappa_.assign(m, Matrix::Zero(dim_, dim_));
    std::vector<std::complex<double>> in(m), out(m);
    fftw_plan plan = fftw_plan_dft_1d(m, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()),
                                      FFTW_BACKWARD, FFTW_ESTIMATE);
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b) {
        for (int k = 0; k < m; ++k) in[k] = freq_values[k](a, b);
        fftw_execute(plan);
        for (int d = 0; d < m; ++d) {
          // e^{-i pi d} carries the -M/2 frequency offset
          const double sign = (d % 2 == 0) ? 1.0 : -1.0;
          kappa_[d](a, b) = sign * out[d] / static_cast<double>(m);
        }
      }
    fftw_destroy_plan(plan);

    s_.resize(m);
    for (int d = 0; d < m; ++d) s_[d] = kappa_[d].squaredNorm();
  }

  const Grid& grid() const { return grid_; }
  int dim() const { return dim_; }

  const Matrix& kappa(int d) const { return kappa_[mod(d)]; }
  double s(int d) const { return s_[mod(d)]; }

 private:
  int mod(int d) const {
    int r = d % grid_.M;
    return r < 0 ? r + grid_.M : r;
  }

  Grid grid_;
  int dim_;
  std::vector<Matrix> kappa_;
  std::vector<double> s_;
};

/// C_Phi as a dense block-diagonal matrix over the frequency grid.
inline DiscretizedOperator fourier_multiplier(const Symbol& s, const Grid& g) {
  detail::check_dense_cap(g, s.dimension);
  const int n = s.dimension;
  DiscretizedOperator op{Eigen::MatrixXcd::Zero(g.M * n, g.M * n), g, n, Basis::Frequency};
  for (int k = 0; k < g.M; ++k)
    op.matrix.block(k * n, k * n, n, n) = s.evaluate(g.freq(k));
  return op;
}

/// The same operator in the time basis, with blocks kappa(j' - j).
inline DiscretizedOperator multiplier_time_basis(const Symbol& s, const Grid& g) {
  detail::check_dense_cap(g, s.dimension);
  const SymbolKernel ker(s, g);
  const int n = s.dimension;
  DiscretizedOperator op{Eigen::MatrixXcd::Zero(g.M * n, g.M * n), g, n, Basis::Time};
  for (int jp = 0; jp < g.M; ++jp)
    for (int j = 0; j < g.M; ++j) op.matrix.block(jp * n, j * n, n, n) = ker.kappa(jp - j);
  return op;
}

/// P_E as a diagonal 0/1 matrix over time cells (a cell belongs to E iff its
/// center does), blocks of size dim.
inline DiscretizedOperator interval_projection(const partition::IntervalUnion& e, const Grid& g,
                                               int dim = 1) {
  detail::check_inside_window(e, g, "interval_projection");
  detail::check_dense_cap(g, dim);
  DiscretizedOperator op{Eigen::MatrixXcd::Zero(g.M * dim, g.M * dim), g, dim, Basis::Time};
  for (int j : detail::cells_in(e, g))
    op.matrix.block(j * dim, j * dim, dim, dim) = Eigen::MatrixXcd::Identity(dim, dim);
  return op;
}

/// ||P_J C_Phi P_I||_{H.S.} = sqrt(sum_{j in I, j' in J} s(j' - j)).
inline double compressed_hs(const SymbolKernel& ker, const partition::IntervalUnion& i_set,
                            const partition::IntervalUnion& j_set) {
  const Grid& g = ker.grid();
  detail::check_inside_window(i_set, g, "compressed_hs");
  detail::check_inside_window(j_set, g, "compressed_hs");
  if (i_set.intersection_measure(j_set) > 0.0)
    throw std::invalid_argument("compressed_hs: I and J must be disjoint");
  const auto ii = detail::cells_in(i_set, g);
  const auto jj = detail::cells_in(j_set, g);
  double acc = 0.0;
  for (int j : ii)
    for (int jp : jj) acc += ker.s(jp - j);
  return std::sqrt(acc);
}

inline double compressed_hs(const Symbol& s, const partition::IntervalUnion& i_set,
                            const partition::IntervalUnion& j_set, const Grid& g) {
  return compressed_hs(SymbolKernel(s, g), i_set, j_set);
}

/// ||(1 - P_E) C_Phi P_E||_{H.S.}: pairs with the source cell in E and the
/// target cell anywhere else in the window.
inline double hankel_hs(const SymbolKernel& ker, const partition::IntervalUnion& e) {
  const Grid& g = ker.grid();
  detail::check_inside_window(e, g, "hankel_hs");
  const auto ee = detail::cells_in(e, g);
  std::vector<char> in_e(g.M, 0);
  for (int j : ee) in_e[j] = 1;
  double acc = 0.0;
  for (int j : ee)
    for (int jp = 0; jp < g.M; ++jp)
      if (!in_e[jp]) acc += ker.s(jp - j);
  return std::sqrt(acc);
}

inline double hankel_hs(const Symbol& s, const partition::IntervalUnion& e, const Grid& g) {
  return hankel_hs(SymbolKernel(s, g), e);
}

/// tr(T - T^2) for T = P_+ C_Phi P_+ on the positive half of the window.
/// For projection-valued symbols C_Phi is itself a projection on the grid,
/// so this equals ||(1 - P_+) C_Phi P_+||^2 exactly.
inline double toeplitz_trace_defect(const SymbolKernel& ker) {
  const Grid& g = ker.grid();
  partition::IntervalUnion positive_half({{0.0, 0.5 * g.L}});
  const double h = hankel_hs(ker, positive_half);
  return h * h;
}

struct ShiftDefectResult {
  double value = 0.0;        // ||S_t* T S_t - T||_{H.S.} over the comparable core
  double t_rounded = 0.0;    // t snapped to the cell lattice
  double rounding = 0.0;     // |t - t_rounded| <= dx/2, halves per grid doubling
  int cells = 0;             // lattice shift in cells
};

/// Discretized shift-invariance defect for T = P_+ C_Phi P_+ on the positive
/// half of the window. In the continuum S_t* T_Phi S_t = T_Phi exactly. On
/// the grid the shift is realized at the rounded lattice step r = round(t/dx);
/// entries whose shifted image leaves the window are not representable (their
/// continuum counterparts agree trivially, since the positive-half indicator
/// is 1 far above the origin) and are excluded from the comparison. The
/// residual `value` is then the accumulated mask mismatch over the comparable
/// core, and `rounding` carries the lattice-quantization error of t itself,
/// which halves on every grid doubling.
inline ShiftDefectResult shift_defect(const SymbolKernel& ker, double t) {
  const Grid& g = ker.grid();
  if (!(t >= 0.0 && t < 0.25 * g.L))
    throw std::invalid_argument("shift_defect: need 0 <= t < L/4");
  ShiftDefectResult res;
  res.cells = static_cast<int>(std::lround(t / g.dx()));
  res.t_rounded = res.cells * g.dx();
  res.rounding = std::abs(t - res.t_rounded);
  const int m = g.M, r = res.cells;
  if (r == 0) return res;

  // Comparable core: outer mask u_j (cell in the positive half) and shifted
  // image inside the window. Over it T has entries kappa(j'-j) u_j u_j' and
  // S_t* T S_t has kappa(j'-j) u_j u_j' w_j w_j' with w_j = [x_{j+r} > 0].
  // c(d) counts index pairs at lag d where the two masks disagree.
  auto positions = [m](const std::vector<char>& a) {
    std::vector<int> p;
    for (int j = 0; j < m; ++j)
      if (a[j]) p.push_back(j);
    return p;
  };
  std::vector<char> core(m, 0), kept(m, 0);
  for (int j = 0; j + r < m; ++j) {
    if (g.x_center(j) > 0.0) core[j] = 1;
    if (core[j] && g.x_center(j + r) > 0.0) kept[j] = 1;
  }
  const auto pc = positions(core), pk = positions(kept);
  std::vector<double> c(2 * m - 1, 0.0);
  for (int j : pc)
    for (int jp : pc) c[jp - j + m - 1] += 1.0;
  for (int j : pk)
    for (int jp : pk) c[jp - j + m - 1] -= 1.0;
  double acc = 0.0;
  for (int d = -(m - 1); d <= m - 1; ++d)
    if (c[d + m - 1] != 0.0) acc += ker.s(d) * c[d + m - 1];
  res.value = std::sqrt(std::max(acc, 0.0));
  return res;
}

inline ShiftDefectResult shift_defect(const Symbol& s, double t, const Grid& g) {
  return shift_defect(SymbolKernel(s, g), t);
}

namespace detail {

inline void check_projection(const Eigen::MatrixXcd& p, const char* who) {
  const double tol = 1e-10 * std::max(1.0, p.norm());
  if ((p - p.adjoint()).norm() > tol || (p * p - p).norm() > tol)
    throw std::invalid_argument(std::string(who) + ": input is not a projection");
}

}  // namespace detail

/// (||(1-P) Q P||_{H.S.}, ||(1-Q) P Q||_{H.S.}) -- equal for any projection
/// pair; both sides are computed independently.
inline std::pair<double, double> pq_identity(const Eigen::MatrixXcd& p,
                                             const Eigen::MatrixXcd& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.rows() != p.cols())
    throw std::invalid_argument("pq_identity: P and Q must be square of equal size");
  detail::check_projection(p, "pq_identity");
  detail::check_projection(q, "pq_identity");
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(p.rows(), p.cols());
  const double lhs = ((id - p) * q * p).norm();
  const double rhs = ((id - q) * p * q).norm();
  return {lhs, rhs};
}

/// tr(B(1-A)B + (1-B)A(1-B)) for positive contractions A, B.
inline double qe_functional(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw std::invalid_argument("qe_functional: A and B must be square of equal size");
  auto check_contraction = [](const Eigen::MatrixXcd& m) {
    if ((m - m.adjoint()).norm() > 1e-10 * std::max(1.0, m.norm()))
      throw std::invalid_argument("qe_functional: input is not self-adjoint");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 || es.eigenvalues().maxCoeff() > 1.0 + 1e-10)
      throw std::invalid_argument("qe_functional: spectrum outside [0, 1]");
  };
  check_contraction(a);
  check_contraction(b);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXcd term = b * (id - a) * b + (id - b) * a * (id - b);
  return term.trace().real();
}

struct PartialSumResult {
  std::vector<double> partial;  // running sums of ||H_{I_n}||^2
  int resolved_terms = 0;       // terms before interval widths fell below 4 cells
  bool resolution_exhausted = false;
};

/// Running partial sums of ||(1 - P_{I_n}) C_Phi P_{I_n}||^2 over the
/// partition intervals, with a flag once intervals drop below 4 grid cells.
inline PartialSumResult cabatif_hs_partial_sum(const SymbolKernel& ker,
                                               const partition::PartitionScheme& scheme,
                                               int n_terms) {
  const Grid& g = ker.grid();
  PartialSumResult res;
  double acc = 0.0;
  for (int n = 0; n < n_terms && n < scheme.n_max; ++n) {
    const double lo = static_cast<double>(scheme.a[n]);
    const double hi = static_cast<double>(scheme.a[n + 1]);
    if (hi > 0.5 * g.L)
      throw std::invalid_argument("cabatif_hs_partial_sum: partition exceeds the window");
    if (hi - lo < 4.0 * g.dx()) {
      res.resolution_exhausted = true;
      break;
    }
    const double h = hankel_hs(ker, partition::IntervalUnion({{lo, hi}}));
    acc += h * h;
    res.partial.push_back(acc);
    res.resolved_terms = n + 1;
  }
  return res;
}

/// Binary export: magic "CFOP0001", then int64 M, int64 N, double L,
/// int8 basis (0 = time, 1 = frequency), then the matrix row-major as
/// complex128 (real, imag doubles), little-endian.
inline void write_operator(const DiscretizedOperator& op, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_operator: cannot open " + path);
  out.write("CFOP0001", 8);
  const std::int64_t m = op.grid.M, n = op.dim;
  const double l = op.grid.L;
  const std::int8_t basis = op.basis == Basis::Time ? 0 : 1;
  out.write(reinterpret_cast<const char*>(&m), sizeof(m));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&l), sizeof(l));
  out.write(reinterpret_cast<const char*>(&basis), sizeof(basis));
  for (Eigen::Index r = 0; r < op.matrix.rows(); ++r)
    for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) {
      const double re = op.matrix(r, c).real(), im = op.matrix(r, c).imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(re));
      out.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
}

}  // namespace opdisc
}  // namespace carflow
