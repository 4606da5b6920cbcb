#include <cmath>

#include "doctest.h"

#include "carflow/classify.hpp"

using namespace carflow;

namespace {

Symbol constant_symbol() {
  Matrix q(2, 2);
  q << 1, 0, 0, 0;
  return make_constant(ProjectionMatrix(q));
}

/// Two-valued jump symbol: Q1 below 0, an orthogonal Q2 above. The jump makes
/// the double difference integral diverge logarithmically, so it is not
/// admissible.
Symbol jump_symbol() {
  Matrix q1(2, 2), q2(2, 2);
  q1 << 1, 0, 0, 0;
  q2 << 0, 0, 0, 1;
  Symbol s;
  s.dimension = 2;
  s.evaluate = [q1, q2](double p) { return p < 0.0 ? q1 : q2; };
  s.parity = Parity::Unknown;
  s.family = {FamilyKind::Sampled, 0.0, "jump"};
  s.analytic_limit = std::nullopt;
  return s;
}

}  // namespace

TEST_CASE("constant symbols: admissible, type I, CABATIF at every mu") {
  classify::Analyzer an(constant_symbol());
  const auto adm = an.check_admissible();
  CHECK(adm.verdict == Status::Convergent);
  CHECK(adm.consistent);

  const auto flow = an.classify_flow_type();
  CHECK(flow.kind == classify::FlowKind::TypeI);
  CHECK(flow.evidence == "family-analytic");
  REQUIRE(flow.q.has_value());
  CHECK((*flow.q - constant_symbol().evaluate(0.0)).norm() <= 1e-10);

  const auto cab = an.cabatif(0.5);
  CHECK(cab.verdict == classify::CabatifVerdict::Cabatif);
  CHECK_THROWS_AS(an.cabatif(0.0), std::invalid_argument);
  CHECK_THROWS_AS(an.cabatif(1.0), std::invalid_argument);
}

TEST_CASE("jump symbols are rejected as inadmissible before typing") {
  classify::Options opt;
  opt.energy_cross_check = false;  // no derivative and no limit: Fourier side unavailable
  classify::Analyzer an(jump_symbol(), opt);
  const auto adm = an.check_admissible();
  CHECK(adm.verdict == Status::Divergent);
  CHECK_THROWS_AS(an.classify_flow_type(), std::invalid_argument);
  // the partition criteria require an even symbol
  CHECK_THROWS_AS(an.cabatif(0.5), std::invalid_argument);
}

TEST_CASE("the type verdict flips across nu = 1/4") {
  classify::Options opt;
  opt.energy_cross_check = false;
  {
    classify::Analyzer an(make_nu(0.5), opt);
    const auto flow = an.classify_flow_type();
    CHECK(flow.kind == classify::FlowKind::TypeI);
    REQUIRE(flow.q.has_value());
    Matrix half(2, 2);
    half << 0.5, 0.5, 0.5, 0.5;
    CHECK((*flow.q - half).norm() <= 1e-10);
    // the recorded distance verdict behind a TypeI answer must be Convergent
    REQUIRE(!flow.candidates.empty());
    CHECK(flow.candidates.front().second.status == Status::Convergent);
  }
  {
    classify::Analyzer an(make_nu(0.2), opt);
    const auto flow = an.classify_flow_type();
    CHECK(flow.kind == classify::FlowKind::TypeIII);
    CHECK_FALSE(flow.q.has_value());
  }
}

TEST_CASE("pair separation at the midpoint exponent") {
  classify::Options opt;
  opt.energy_cross_check = false;
  const auto rep = classify::distinguish_pair(0.05, 0.2, opt);
  CHECK(rep.mu_star == doctest::Approx(0.5));
  CHECK(rep.distinguished);
  CHECK(rep.report1.verdict == classify::CabatifVerdict::NotCabatif);
  CHECK(rep.report2.verdict == classify::CabatifVerdict::Cabatif);

  CHECK_THROWS_AS(classify::distinguish_pair(0.2, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(classify::distinguish_pair(0.1, 0.3), std::invalid_argument);
}

TEST_CASE("the L2 perturbation criterion on symbol pairs") {
  const auto same = classify::l2_equivalent(make_nu(0.5), make_nu(0.5));
  CHECK(same.distance.status == Status::Convergent);
  CHECK(same.conclusion.find("cocycle conjugate") != std::string::npos);

  // nu = 0.05 vs its limit projection: infinite distance, criterion fails
  const auto far = classify::l2_equivalent(make_nu(0.05), constant_symbol());
  CHECK(far.distance.status == Status::Divergent);
}

TEST_CASE("full reports assemble every section") {
  classify::Options opt;
  opt.energy_cross_check = false;
  const auto rep = classify::full_report(make_nu(0.5), {0.3, 0.7}, opt);
  CHECK(rep.symbol_description.find("powers-nu") != std::string::npos);
  CHECK(rep.admissible.verdict == Status::Convergent);
  REQUIRE(rep.flow_type.has_value());
  CHECK(rep.flow_type->kind == classify::FlowKind::TypeI);
  REQUIRE(rep.cabatif.size() == 2);
  // 1 - 4 nu = -1 < mu for both: CABATIF either way
  CHECK(rep.cabatif.at(0.3).verdict == classify::CabatifVerdict::Cabatif);
  CHECK(rep.cabatif.at(0.7).verdict == classify::CabatifVerdict::Cabatif);
}
