#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "carflow/quad.hpp"
#include "carflow/spectral.hpp"
#include "carflow/symbol.hpp"
#include "carflow/verdict.hpp"

namespace carflow {
namespace classify {

struct AdmissibilityReport {
  Status verdict = Status::Inconclusive;
  std::vector<std::pair<std::string, IntegralVerdict>> criteria;
  bool consistent = true;
  std::string note;
};

enum class FlowKind { TypeI, TypeIII, Inconclusive };

inline const char* to_string(FlowKind k) {
  switch (k) {
    case FlowKind::TypeI: return "TypeI";
    case FlowKind::TypeIII: return "TypeIII";
    default: return "Inconclusive";
  }
}

struct FlowTypeReport {
  FlowKind kind = FlowKind::Inconclusive;
  std::optional<Matrix> q;  // the intertwining projection for TypeI
  std::string evidence;     // "family-analytic" or "heuristic-complete"
  std::vector<std::pair<std::string, IntegralVerdict>> candidates;
  std::string diagnostic;
};

enum class CabatifVerdict { Cabatif, NotCabatif, Inconclusive };

inline const char* to_string(CabatifVerdict v) {
  switch (v) {
    case CabatifVerdict::Cabatif: return "CABATIF";
    case CabatifVerdict::NotCabatif: return "NotCABATIF";
    default: return "Inconclusive";
  }
}

struct CabatifReport {
  double mu = 0.0;
  CabatifVerdict verdict = CabatifVerdict::Inconclusive;
  std::vector<std::string> fired;  // which conditions decided the verdict
  std::vector<std::pair<std::string, IntegralVerdict>> criteria;
};

struct DistinguishReport {
  double nu1 = 0.0, nu2 = 0.0, mu_star = 0.0;
  bool distinguished = false;
  CabatifReport report1, report2;  // at mu_star, for nu1 and nu2
};

struct Options {
  quad::ShellConfig shells;
  spectral::GridParams grid;
  bool energy_cross_check = true;  // run the Fourier-side criterion too
};

namespace detail {

/// Mean of Phi over +-[R, 2R] (both tails averaged), by composite quadrature.
inline Matrix outer_cesaro_mean(const Symbol& s, double r) {
  Matrix acc = Matrix::Zero(s.dimension, s.dimension);
  auto add = [&](double a, double b) {
    const double m = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int i = 0; i < 16; ++i)
      acc += quadrature::kGLWeights[i] * h * s.evaluate(m + h * quadrature::kGLNodes[i]);
  };
  const int panels = 8;
  for (int j = 0; j < panels; ++j) {
    add(r + j * r / panels, r + (j + 1) * r / panels);
    add(-2.0 * r + j * r / panels, -2.0 * r + (j + 1) * r / panels);
  }
  return acc / (2.0 * r);
}

/// Lebesgue measure of {p in +-[R,2R] : ||Phi(p) - Q||_F >= thresh},
/// by midpoint sampling.
inline double far_measure(const Symbol& s, const Matrix& q, double r, double thresh = 1e-2) {
  const int samples = 256;
  int far = 0;
  for (int j = 0; j < samples; ++j) {
    const double p = r * (1.0 + (j + 0.5) / samples);
    if ((s.evaluate(p) - q).norm() >= thresh) ++far;
    if ((s.evaluate(-p) - q).norm() >= thresh) ++far;
  }
  return r * far / samples;
}

}  // namespace detail

/// Lazily shares the expensive intermediates (the Fourier-side regular part)
/// across the criteria evaluated for one symbol.
class Analyzer {
 public:
  explicit Analyzer(Symbol s, Options opt = {}) : s_(std::move(s)), opt_(opt) {}

  const Symbol& symbol() const { return s_; }

  /// Injects a precomputed regular part (e.g. from an on-disk cache); must
  /// match the symbol and the grid this analyzer would use.
  void set_regular_part(spectral::RegularPart r) { reg_ = std::move(r); }
  bool has_regular_part() const { return reg_.has_value(); }

  const spectral::RegularPart& regular_part() {
    if (!reg_) {
      if (s_.has_derivative())
        reg_ = spectral::regular_part_via_derivative(s_, opt_.grid);
      else
        reg_ = spectral::regular_part_via_difference(s_, opt_.grid);
    }
    return *reg_;
  }

  /// Admissibility: the mu = 1 criteria, cheapest first, with the decided
  /// ones required to agree. A disagreement is reported, never resolved.
  AdmissibilityReport check_admissible() {
    AdmissibilityReport rep;
    if (s_.has_derivative())
      rep.criteria.emplace_back("derivative mu=1", quad::derivative_criterion(s_, 1.0, opt_.shells));
    if (rep.criteria.empty() || rep.criteria.back().second.status == Status::Inconclusive)
      rep.criteria.emplace_back("besov mu=1", quad::besov_double(s_, 1.0, opt_.shells));
    if (opt_.energy_cross_check)
      rep.criteria.emplace_back("weighted_energy mu=1",
                                spectral::weighted_energy(regular_part(), 1.0, opt_.shells));
    Status decided = Status::Inconclusive;
    for (const auto& [name, v] : rep.criteria) {
      if (v.status == Status::Inconclusive) continue;
      if (decided == Status::Inconclusive) {
        decided = v.status;
      } else if (decided != v.status) {
        rep.consistent = false;
        rep.note = "criteria disagree: " + name + " contradicts an earlier decided criterion";
      }
    }
    rep.verdict = rep.consistent ? decided : Status::Inconclusive;
    return rep;
  }

  /// Type I vs type III. With a limit Q at infinity the dichotomy is decided
  /// by the single integral tr|Phi - Q|^2 (tag "family-analytic"). Without a
  /// limit, candidate projections come from outer Cesaro means; TypeIII
  /// requires every candidate to fail and each to stay far from the symbol
  /// on a diverging measure of frequencies (tag "heuristic-complete").
  FlowTypeReport classify_flow_type() {
    const AdmissibilityReport adm = check_admissible();
    if (adm.verdict != Status::Convergent)
      throw std::invalid_argument("classify_flow_type: symbol is not admissible (precondition)");

    FlowTypeReport rep;
    const auto limit = limit_at_infinity(s_);
    if (limit) {
      std::optional<ProjectionMatrix> pq;
      try {
        pq = nearest_projection(*limit);
      } catch (const std::domain_error&) {
        rep.kind = FlowKind::Inconclusive;
        rep.diagnostic = "limit at infinity is ambiguous between projections";
        return rep;
      }
      const IntegralVerdict v = quad::l2_distance(s_, *pq, opt_.shells);
      rep.candidates.emplace_back("nearest_projection(limit)", v);
      rep.evidence = "family-analytic";
      if (v.status == Status::Convergent) {
        rep.kind = FlowKind::TypeI;
        rep.q = pq->entries;
      } else if (v.status == Status::Divergent) {
        rep.kind = FlowKind::TypeIII;
      }
      return rep;
    }

    // no limit: heuristic candidate generation from outer Cesaro means
    std::vector<ProjectionMatrix> candidates;
    for (double r : {1e2, 1e4, 1e6}) {
      try {
        const ProjectionMatrix q = nearest_projection(detail::outer_cesaro_mean(s_, r));
        bool dup = false;
        for (const ProjectionMatrix& c : candidates)
          if ((c.entries - q.entries).norm() < 1e-8) dup = true;
        if (!dup) candidates.push_back(q);
      } catch (const std::domain_error&) {
      }
    }
    bool all_divergent = !candidates.empty();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const IntegralVerdict v = quad::l2_distance(s_, candidates[i], opt_.shells);
      rep.candidates.emplace_back("cesaro candidate " + std::to_string(i), v);
      if (v.status == Status::Convergent) {
        rep.kind = FlowKind::TypeI;
        rep.q = candidates[i].entries;
        rep.evidence = "heuristic-complete";
        return rep;
      }
      if (v.status != Status::Divergent) all_divergent = false;
    }
    // diverging-measure diagnostic: beyond the candidate windows the symbol
    // must stay >= 1e-2 away from every candidate on >= 1/4 of +-[R, 2R]
    bool far = all_divergent;
    std::ostringstream diag;
    for (const ProjectionMatrix& q : candidates)
      for (double r : {1e7, 1e8}) {
        const double m = detail::far_measure(s_, q.entries, r);
        diag << "far_measure(R=" << r << ")=" << m << "; ";
        if (m < 0.25 * r) far = false;
      }
    rep.diagnostic = diag.str();
    rep.evidence = "heuristic-complete";
    rep.kind = far ? FlowKind::TypeIII : FlowKind::Inconclusive;
    return rep;
  }

  /// CABATIF for the partition of exponent mu. The one-dimensional
  /// conditions decide: the dyadic-difference integral is necessary (its
  /// divergence gives NotCABATIF), the derivative/Besov integral sufficient;
  /// the Fourier-side energy is recorded as a cross-check only.
  CabatifReport cabatif(double mu) {
    if (!(mu > 0.0 && mu < 1.0))
      throw std::invalid_argument("cabatif: mu must be in (0,1)");
    if (s_.parity != Parity::Even)
      throw std::invalid_argument(
          "cabatif: the partition criteria require an even symbol, Phi(p) = Phi(-p)");
    CabatifReport rep;
    rep.mu = mu;
    const IntegralVerdict necessary = quad::dyadic_difference(s_, mu, opt_.shells);
    rep.criteria.emplace_back("dyadic_difference (necessary)", necessary);
    IntegralVerdict sufficient;
    if (s_.has_derivative()) {
      sufficient = quad::derivative_criterion(s_, mu, opt_.shells);
      rep.criteria.emplace_back("derivative_criterion (sufficient)", sufficient);
    } else {
      sufficient = quad::besov_double(s_, mu, opt_.shells);
      rep.criteria.emplace_back("besov_double (sufficient)", sufficient);
    }
    if (opt_.energy_cross_check)
      rep.criteria.emplace_back("weighted_energy (cross-check)",
                                spectral::weighted_energy(regular_part(), mu, opt_.shells));
    if (necessary.status == Status::Divergent) {
      rep.verdict = CabatifVerdict::NotCabatif;
      rep.fired.push_back("necessary condition diverges");
    } else if (sufficient.status == Status::Convergent) {
      rep.verdict = CabatifVerdict::Cabatif;
      rep.fired.push_back("sufficient condition converges");
    }
    return rep;
  }

 private:
  Symbol s_;
  Options opt_;
  std::optional<spectral::RegularPart> reg_;
};

/// Separation of the power family: pick mu* in the open window
/// (1 - 4 nu2, 1 - 4 nu1) and show exactly one of the pair is CABATIF there.
inline DistinguishReport distinguish_pair(double nu1, double nu2, const Options& opt = {}) {
  if (!(nu1 > 0.0 && nu1 < nu2 && nu2 <= 0.25))
    throw std::invalid_argument(
        "distinguish_pair: need 0 < nu1 < nu2 <= 0.25 (empty exponent window otherwise)");
  DistinguishReport rep;
  rep.nu1 = nu1;
  rep.nu2 = nu2;
  rep.mu_star = 1.0 - 2.0 * (nu1 + nu2);  // midpoint of (1-4 nu2, 1-4 nu1)
  Analyzer a1(make_nu(nu1), opt), a2(make_nu(nu2), opt);
  rep.report1 = a1.cabatif(rep.mu_star);
  rep.report2 = a2.cabatif(rep.mu_star);
  rep.distinguished = rep.report1.verdict == CabatifVerdict::NotCabatif &&
                      rep.report2.verdict == CabatifVerdict::Cabatif;
  return rep;
}

struct EquivalenceReport {
  IntegralVerdict distance;
  std::string conclusion;
};

/// The sufficient cocycle-conjugacy condition: finite L2 distance of symbols.
inline EquivalenceReport l2_equivalent(const Symbol& s, const Symbol& t, const Options& opt = {}) {
  EquivalenceReport rep;
  rep.distance = quad::l2_distance(s, t, opt.shells);
  switch (rep.distance.status) {
    case Status::Convergent:
      rep.conclusion = "cocycle conjugate (sufficient condition met)";
      break;
    case Status::Divergent:
      rep.conclusion = "condition fails (no conclusion from the L2 criterion alone)";
      break;
    default:
      rep.conclusion = "inconclusive";
  }
  return rep;
}

/// Everything the CLI reports for one symbol.
struct ClassificationReport {
  std::string symbol_description;
  AdmissibilityReport admissible;
  std::optional<FlowTypeReport> flow_type;
  std::map<double, CabatifReport> cabatif;
};

inline ClassificationReport full_report(const Symbol& s, const std::vector<double>& mus,
                                        const Options& opt = {}) {
  Analyzer an(s, opt);
  ClassificationReport rep;
  rep.symbol_description = s.family.description;
  rep.admissible = an.check_admissible();
  if (rep.admissible.verdict == Status::Convergent) rep.flow_type = an.classify_flow_type();
  for (double mu : mus) rep.cabatif.emplace(mu, an.cabatif(mu));
  return rep;
}

}  // namespace classify
}  // namespace carflow
