#include <sstream>

#include "doctest.h"
#include "qvnn/config.hpp"
#include "qvnn/errors.hpp"
#include "qvnn/sdp.hpp"

using namespace qvnn;

namespace {

RealMatrix diag2(double a, double b) {
  RealMatrix m = RealMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

AffineLmi one_var(const std::string& name, const RealMatrix& f, Sense sense = Sense::positive_definite) {
  return {name, sense, RealMatrix::Zero(f.rows(), f.cols()), {{0, f}}};
}

// Independent check on raw matrices: min eigenvalue of each LMI in ">"
// orientation, relative to its margin weight.
double raw_min_slack(const StandardSdp& sdp, const RealVector& x) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& l : sdp.lmis) {
    RealMatrix g = l.evaluate(x);
    if (l.sense == Sense::negative_definite) g = -g;
    worst = std::min(worst, Eigen::SelfAdjointEigenSolver<RealMatrix>(g).eigenvalues()(0) /
                                l.margin_weight);
  }
  return worst;
}

void check_sound(const StandardSdp& sdp, const FeasibilityResult& r, const SolverConfig& cfg) {
  if (r.status != FeasibilityStatus::feasible) return;
  CHECK(r.margin >= cfg.margin_tolerance);
  CHECK(raw_min_slack(sdp, r.x) >= cfg.margin_tolerance / 2);
  for (double e : r.per_constraint_min_eig) CHECK(e >= r.margin - cfg.newton_tolerance);
}

}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.barrier_shrink = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SolverConfig{};
  cfg.margin_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("interval toy with constant terms") {
  StandardSdp sdp;
  sdp.num_vars = 1;
  sdp.lmis.push_back({"interval", Sense::positive_definite, diag2(-1.0, 3.0), {{0, diag2(1.0, -1.0)}}});
  SolverConfig cfg;
  cfg.allow_constant = true;
  cfg.trust_radius = 10.0;
  const FeasibilityResult r = solve_feasibility(sdp, cfg);
  REQUIRE(r.status == FeasibilityStatus::feasible);
  CHECK(r.margin == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-4));
  check_sound(sdp, r, cfg);

  cfg.allow_constant = false;
  CHECK_THROWS_AS(solve_feasibility(sdp, cfg), InputError);
}

TEST_CASE("negated identity reaches the trust radius") {
  StandardSdp sdp;
  sdp.num_vars = 1;
  sdp.lmis.push_back(one_var("neg", -RealMatrix::Identity(3, 3)));
  SolverConfig cfg;
  cfg.trust_radius = 2.0;
  const FeasibilityResult r = solve_feasibility(sdp, cfg);
  REQUIRE(r.status == FeasibilityStatus::feasible);
  CHECK(r.margin == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(r.x(0) == doctest::Approx(-2.0).epsilon(1e-5));
  check_sound(sdp, r, cfg);
}

TEST_CASE("negative-definite sense is oriented") {
  StandardSdp sdp;
  sdp.num_vars = 1;
  sdp.lmis.push_back(one_var("nd", RealMatrix::Identity(2, 2), Sense::negative_definite));
  const FeasibilityResult r = solve_feasibility(sdp, SolverConfig{});
  REQUIRE(r.status == FeasibilityStatus::feasible);
  CHECK(r.x(0) < 0.0);
  check_sound(sdp, r, SolverConfig{});
}

TEST_CASE("opposing pair is infeasible at tolerance") {
  StandardSdp sdp;
  sdp.num_vars = 1;
  sdp.lmis.push_back(one_var("up", RealMatrix::Identity(1, 1)));
  sdp.lmis.push_back(one_var("down", -RealMatrix::Identity(1, 1)));
  const FeasibilityResult r = solve_feasibility(sdp, SolverConfig{});
  CHECK(r.status == FeasibilityStatus::infeasible_at_tolerance);
  CHECK(r.margin < SolverConfig{}.margin_tolerance);
}

TEST_CASE("non-symmetric coefficients are rejected") {
  StandardSdp sdp;
  sdp.num_vars = 1;
  RealMatrix f = RealMatrix::Identity(2, 2);
  f(0, 1) = 1.0;
  sdp.lmis.push_back(one_var("bad", f));
  CHECK_THROWS_AS(solve_feasibility(sdp, SolverConfig{}), InputError);
}

TEST_CASE("scaling bookkeeping") {
  StandardSdp unit;
  unit.num_vars = 1;
  unit.lmis.push_back(one_var("u", RealMatrix::Identity(1, 1)));
  const auto [s1, rec1] = scale_problem(unit);
  CHECK(rec1.var_factor(0) == 1.0);
  CHECK(rec1.lmi_factor(0) == 1.0);

  StandardSdp big = unit;
  big.lmis[0].coeffs[0].second *= 1e6;
  const auto [s2, rec2] = scale_problem(big);
  CHECK(rec2.var_factor(0) * rec2.lmi_factor(0) == doctest::Approx(1e-6).epsilon(1e-12));
  const RealVector y = RealVector::Constant(1, 0.5);
  const RealVector x = rec2.unscale(y);
  CHECK((big.lmis[0].evaluate(x) * rec2.lmi_factor(0) - s2.lmis[0].evaluate(y)).norm() <= 1e-15);

  StandardSdp dropped;
  dropped.num_vars = 2;
  dropped.lmis.push_back(one_var("u", RealMatrix::Identity(1, 1)));
  CHECK(scale_problem(dropped).second.dropped_vars == std::vector<int>{1});
}

TEST_CASE("scaling one variable leaves the classification unchanged") {
  StandardSdp sdp;
  sdp.num_vars = 2;
  sdp.lmis.push_back({"a", Sense::positive_definite, RealMatrix::Zero(2, 2), {{0, diag2(1, 0)}, {1, diag2(0, 1)}}});
  sdp.lmis.push_back({"b", Sense::positive_definite, RealMatrix::Zero(2, 2), {{0, diag2(-1, 1)}, {1, diag2(2, 0)}}});
  const auto base = solve_feasibility(sdp, SolverConfig{});
  StandardSdp stretched = sdp;
  for (auto& l : stretched.lmis) {
    for (auto& [i, f] : l.coeffs) {
      if (i == 1) f *= 1e3;
    }
  }
  const auto other = solve_feasibility(stretched, SolverConfig{});
  CHECK(base.status == other.status);
  check_sound(sdp, base, SolverConfig{});
  check_sound(stretched, other, SolverConfig{});
}

TEST_CASE("fixed seed is deterministic") {
  StandardSdp sdp;
  sdp.num_vars = 2;
  sdp.lmis.push_back({"a", Sense::positive_definite, RealMatrix::Zero(2, 2), {{0, diag2(1, 2)}, {1, diag2(0.5, -1)}}});
  sdp.lmis.push_back({"b", Sense::negative_definite, RealMatrix::Zero(2, 2), {{0, diag2(-1, 0)}, {1, diag2(1, -3)}}});
  std::ostringstream d1, d2;
  SolverConfig cfg;
  cfg.diagnostics = &d1;
  const auto a = solve_feasibility(sdp, cfg);
  cfg.diagnostics = &d2;
  const auto b = solve_feasibility(sdp, cfg);
  CHECK(a.status == b.status);
  CHECK(a.outer_iterations == b.outer_iterations);
  CHECK(a.newton_iterations == b.newton_iterations);
  CHECK(a.margin == b.margin);
  CHECK(d1.str() == d2.str());
  // iteration,barrier_weight,t,min_eig per outer iteration; best t never decreases.
  std::istringstream lines(d1.str());
  std::string line;
  double last_t = -std::numeric_limits<double>::infinity();
  int rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string cell[4];
    for (auto& c : cell) std::getline(fields, c, ',');
    const double t = std::stod(cell[2]);
    CHECK(t >= last_t);
    last_t = t;
    ++rows;
  }
  CHECK(rows == a.outer_iterations);
  check_sound(sdp, a, cfg);
}

TEST_CASE("alternating projection oracle") {
  StandardSdp sdp;
  sdp.num_vars = 1;
  sdp.lmis.push_back(one_var("id", RealMatrix::Identity(2, 2)));
  const auto found = alternating_projection_oracle(sdp, 0.5, 200);
  REQUIRE(found.has_value());
  CHECK((*found)(0) >= 0.25);

  sdp.lmis.push_back(one_var("neg", -RealMatrix::Identity(2, 2)));
  CHECK_FALSE(alternating_projection_oracle(sdp, 0.1, 200).has_value());
}

TEST_CASE("criterion SDP of the reduced-coupling model") {
  const ModelConfig cfg = load_model_config(QVNN_SOURCE_DIR "/data/reduced_coupling.json");
  const StandardSdp sdp = build_criterion_sdp(cfg.model);
  CHECK(sdp.num_vars == 136);
  const auto [scaled, rec] = scale_problem(sdp);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& l : scaled.lmis) {
    for (const auto& [i, f] : l.coeffs) {
      lo = std::min(lo, f.norm());
      hi = std::max(hi, f.norm());
    }
  }
  MESSAGE("post-scaling coefficient norms in [" << lo << ", " << hi << "]");
  CHECK(hi <= 1.0 + 1e-12);

  SolverConfig sc;
  const FeasibilityResult r = solve_feasibility(scaled, sc);
  REQUIRE(r.status == FeasibilityStatus::feasible);
  check_sound(scaled, r, sc);
  // Soundness at quaternion level, in the original coordinates.
  RealVector x = rec.unscale(r.x);
  x /= x.cwiseAbs().maxCoeff();
  const CertificateReport report = verify_certificate(cfg.model, devectorize(x, 2), sc.margin_tolerance / 2);
  CHECK(report.valid);
}
