#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carflow/types.hpp"

namespace carflow {

enum class Parity { Even, Unknown };

enum class FamilyKind { Constant, PowersTheta, PowersNu, LogLog, Sampled };

/// Provenance tag carried by every symbol; echoed into reports.
struct FamilyTag {
  FamilyKind kind = FamilyKind::Constant;
  double nu = 0.0;           // meaningful for PowersNu
  std::string description;   // human-readable, e.g. "powers-nu:0.2"
};

/// A validated N x N orthogonal projection (Q^2 = Q = Q*).
struct ProjectionMatrix {
  int dimension;
  Matrix entries;

  static constexpr double kTol = 1e-12;

  explicit ProjectionMatrix(Matrix q) : dimension(static_cast<int>(q.rows())), entries(std::move(q)) {
    if (entries.rows() != entries.cols() || entries.rows() < 1)
      throw std::invalid_argument("ProjectionMatrix: matrix must be square and non-empty");
    const double herm = (entries - entries.adjoint()).norm();
    const double idem = (entries * entries - entries).norm();
    if (herm > kTol || idem > kTol)
      throw std::invalid_argument("ProjectionMatrix: not a projection (|Q-Q*|=" + std::to_string(herm) +
                                  ", |Q^2-Q|=" + std::to_string(idem) + ")");
  }
};

/// Scalar phase profile theta for Powers-type symbols.
struct ScalarProfile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> deriv;
  std::optional<double> limit_at_inf;  // lim_{|p|->inf} theta(p), when it exists
};

/// A matrix-valued projection function on the real line.
///
/// Immutable after construction; `evaluate` and `derivative` are pure and may
/// be called concurrently from many threads.
struct Symbol {
  int dimension = 1;
  std::function<Matrix(double)> evaluate;
  std::function<Matrix(double)> derivative;  // empty when no analytic derivative
  Parity parity = Parity::Unknown;
  FamilyTag family;
  // Closed-form limit at infinity for analytic families; nullopt when the
  // limit genuinely does not exist (log-log) or is unknown (sampled data).
  std::optional<Matrix> analytic_limit;
  // For sampled symbols: the [p_min, p_max] range of the grid.
  std::optional<std::pair<double, double>> sample_range;

  bool has_derivative() const { return static_cast<bool>(derivative); }
};

inline Symbol make_constant(const ProjectionMatrix& q) {
  Symbol s;
  s.dimension = q.dimension;
  const Matrix qm = q.entries;
  s.evaluate = [qm](double) { return qm; };
  s.derivative = [n = q.dimension](double) { return Matrix::Zero(n, n).eval(); };
  s.parity = Parity::Even;
  s.family = {FamilyKind::Constant, 0.0, "constant"};
  s.analytic_limit = qm;
  return s;
}

/// Powers symbol Phi(p) = 1/2 [[1, e^{i theta}], [e^{-i theta}, 1]].
inline Symbol make_powers(const ScalarProfile& theta) {
  Symbol s;
  s.dimension = 2;
  auto th = theta.value;
  auto dth = theta.deriv;
  s.evaluate = [th](double p) {
    const Complex e = std::exp(Complex(0.0, th(p)));
    Matrix m(2, 2);
    m << 0.5, 0.5 * e, 0.5 * std::conj(e), 0.5;
    return m;
  };
  if (dth) {
    s.derivative = [th, dth](double p) {
      const Complex e = std::exp(Complex(0.0, th(p)));
      const Complex ide = Complex(0.0, dth(p)) * e;
      Matrix m(2, 2);
      m << 0.0, 0.5 * ide, 0.5 * std::conj(ide), 0.0;
      return m;
    };
  }
  s.parity = Parity::Even;
  s.family = {FamilyKind::PowersTheta, 0.0, "powers-theta:" + theta.name};
  if (theta.limit_at_inf) {
    const Complex e = std::exp(Complex(0.0, *theta.limit_at_inf));
    Matrix m(2, 2);
    m << 0.5, 0.5 * e, 0.5 * std::conj(e), 0.5;
    s.analytic_limit = m;
  }
  return s;
}

/// theta_nu(p) = (1+p^2)^{-nu}.
inline ScalarProfile nu_profile(double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu_profile: nu must be positive");
  ScalarProfile prof;
  prof.name = "nu=" + std::to_string(nu);
  prof.value = [nu](double p) { return std::pow(1.0 + p * p, -nu); };
  prof.deriv = [nu](double p) { return -2.0 * nu * p * std::pow(1.0 + p * p, -nu - 1.0); };
  prof.limit_at_inf = 0.0;
  return prof;
}

inline Symbol make_nu(double nu) {
  Symbol s = make_powers(nu_profile(nu));
  s.family = {FamilyKind::PowersNu, nu, "powers-nu:" + std::to_string(nu)};
  return s;
}

/// Smooth even profile equal to log(log|p|) for |p| >= e^2, interpolated by a
/// C^1 cubic on [e^2/2, e^2] down to a constant. The crossover is a fixed
/// choice recorded in the family tag; the asymptotic verdicts do not depend
/// on it.
inline ScalarProfile loglog_profile() {
  const double b = std::exp(2.0);       // crossover
  const double a = 0.5 * b;             // start of the blend
  const double fb = std::log(std::log(b));
  const double dfb = 1.0 / (b * std::log(b));
  const double c0 = fb - 0.5 * (b - a) * dfb;  // plateau value, makes the blend gentle
  ScalarProfile prof;
  prof.name = "loglog(crossover=e^2)";
  prof.value = [=](double p) {
    const double q = std::abs(p);
    if (q >= b) return std::log(std::log(q));
    if (q <= a) return c0;
    // cubic Hermite on [a,b]: H(a)=c0, H'(a)=0, H(b)=fb, H'(b)=dfb
    const double t = (q - a) / (b - a);
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * c0 + h01 * fb + h11 * (b - a) * dfb;
  };
  prof.deriv = [=](double p) {
    const double q = std::abs(p);
    const double sign = (p < 0) ? -1.0 : 1.0;
    if (q >= b) return sign / (q * std::log(q));
    if (q <= a) return 0.0;
    const double t = (q - a) / (b - a);
    const double dh00 = 6 * t * (t - 1);
    const double dh01 = -dh00;
    const double dh11 = t * (3 * t - 2);
    return sign * (dh00 * c0 + dh01 * fb + dh11 * (b - a) * dfb) / (b - a);
  };
  prof.limit_at_inf = std::nullopt;
  return prof;
}

inline Symbol make_loglog() {
  Symbol s = make_powers(loglog_profile());
  s.family = {FamilyKind::LogLog, 0.0, "powers-loglog"};
  s.analytic_limit = std::nullopt;
  return s;
}

namespace detail {

struct SampledData {
  int dimension;
  Parity parity;
  std::vector<double> ps;
  std::vector<Matrix> values;
};

inline Matrix interp_sampled(const SampledData& d, double p) {
  if (p <= d.ps.front()) return d.values.front();
  if (p >= d.ps.back()) return d.values.back();
  const auto it = std::upper_bound(d.ps.begin(), d.ps.end(), p);
  const std::size_t i = static_cast<std::size_t>(it - d.ps.begin());
  const double t = (p - d.ps[i - 1]) / (d.ps[i] - d.ps[i - 1]);
  return ((1.0 - t) * d.values[i - 1] + t * d.values[i]).eval();
}

}  // namespace detail

/// Loads a sampled symbol from CSV.
/// Header: `# N=<int> parity=<even|unknown>`, rows `p, re_11, im_11, ...` row-major.
/// Projection tolerance is 1e-6 here (text serialization carries quantization
/// error), against 1e-10 for analytic families.
inline Symbol load_sampled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_sampled: cannot open " + path);
  std::string header;
  std::getline(in, header);
  int n = 0;
  std::string parity_str;
  {
    std::istringstream hs(header);
    std::string hash, ntok, ptok;
    hs >> hash >> ntok >> ptok;
    if (hash != "#" || ntok.rfind("N=", 0) != 0 || ptok.rfind("parity=", 0) != 0)
      throw std::runtime_error("load_sampled: malformed header: " + header);
    n = std::stoi(ntok.substr(2));
    parity_str = ptok.substr(7);
  }
  if (n < 1) throw std::runtime_error("load_sampled: invalid dimension in header");
  Parity parity = parity_str == "even" ? Parity::Even : Parity::Unknown;

  auto data = std::make_shared<detail::SampledData>();
  data->dimension = n;
  data->parity = parity;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> cols;
    std::string tok;
    while (std::getline(ls, tok, ',')) cols.push_back(std::stod(tok));
    if (cols.size() != 1 + 2 * static_cast<std::size_t>(n) * n)
      throw std::runtime_error("load_sampled: malformed row: " + line);
    if (!data->ps.empty() && cols[0] <= data->ps.back())
      throw std::runtime_error("load_sampled: p column not strictly increasing");
    data->ps.push_back(cols[0]);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = Complex(cols[1 + 2 * (i * n + j)], cols[2 + 2 * (i * n + j)]);
    const double herm = (m - m.adjoint()).norm();
    const double idem = (m * m - m).norm();
    if (herm > 1e-6 || idem > 1e-6)
      throw std::runtime_error("load_sampled: sample at p=" + std::to_string(cols[0]) +
                               " fails the projection invariant");
    data->values.push_back(std::move(m));
  }
  if (data->ps.size() < 2) throw std::runtime_error("load_sampled: need at least two samples");

  Symbol s;
  s.dimension = n;
  s.parity = parity;
  s.family = {FamilyKind::Sampled, 0.0, "sampled:" + path};
  s.sample_range = {data->ps.front(), data->ps.back()};
  s.evaluate = [data](double p) { return detail::interp_sampled(*data, p); };
  return s;
}

/// Cesaro mean of a sampled symbol over the outer `frac` of its grid (both ends).
namespace detail {
inline Matrix outer_mean(const Symbol& s, double frac, int samples = 256) {
  const double lo = s.sample_range ? s.sample_range->first : 1.0;
  const double hi = s.sample_range ? s.sample_range->second : 1e6;
  const double span = hi - lo;
  Matrix acc = Matrix::Zero(s.dimension, s.dimension);
  int count = 0;
  // outer `frac` of the range at both ends
  for (int i = 0; i < samples; ++i) {
    const double t = frac * span * (i + 0.5) / samples;
    acc += s.evaluate(hi - t) + s.evaluate(lo + t);
    count += 2;
  }
  return (acc / count).eval();
}
}  // namespace detail

/// The limit of Phi at |p| -> infinity, when it exists.
/// Analytic families report their closed form; sampled symbols get the Cesaro
/// mean over the outer 10% of the range, returned only when the 10% and 5%
/// windows agree within 1e-3.
inline std::optional<Matrix> limit_at_infinity(const Symbol& s) {
  if (s.family.kind != FamilyKind::Sampled) return s.analytic_limit;
  const Matrix m10 = detail::outer_mean(s, 0.10);
  const Matrix m05 = detail::outer_mean(s, 0.05);
  if ((m10 - m05).norm() < 1e-3) return m10;
  return std::nullopt;
}

/// Spectral rounding of a self-adjoint matrix to the nearest projection:
/// eigenvalues >= 1/2 map to 1, others to 0, eigenvectors retained.
/// Throws when an eigenvalue sits within 1e-6 of 1/2 (ambiguous rounding).
inline ProjectionMatrix nearest_projection(const Matrix& m) {
  if ((m - m.adjoint()).norm() > 1e-8)
    throw std::invalid_argument("nearest_projection: input is not self-adjoint");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const auto& evals = es.eigenvalues();
  Eigen::VectorXd rounded(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (std::abs(evals[i] - 0.5) < 1e-6)
      throw std::domain_error("nearest_projection: eigenvalue " + std::to_string(evals[i]) +
                              " is ambiguous (within 1e-6 of 1/2)");
    rounded[i] = evals[i] >= 0.5 ? 1.0 : 0.0;
  }
  Matrix q = es.eigenvectors() * rounded.asDiagonal() * es.eigenvectors().adjoint();
  q = 0.5 * (q + q.adjoint().eval());
  return ProjectionMatrix(q);
}

/// Checks the pointwise Symbol invariants at the given frequencies.
/// Tolerance 1e-10 for analytic families, 1e-6 for sampled data.
inline void check_symbol(const Symbol& s, const std::vector<double>& ps) {
  const double tol = s.family.kind == FamilyKind::Sampled ? 1e-6 : 1e-10;
  for (double p : ps) {
    const Matrix m = s.evaluate(p);
    if ((m - m.adjoint()).norm() > tol)
      throw std::domain_error("Symbol: Phi(p) not self-adjoint at p=" + std::to_string(p));
    if ((m * m - m).norm() > tol)
      throw std::domain_error("Symbol: Phi(p) not idempotent at p=" + std::to_string(p));
    if (s.parity == Parity::Even && (s.evaluate(-p) - m).norm() > tol)
      throw std::domain_error("Symbol: parity=even violated at p=" + std::to_string(p));
  }
}

}  // namespace carflow
