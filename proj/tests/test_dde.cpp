#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "qvnn/config.hpp"
#include "qvnn/dde.hpp"
#include "qvnn/errors.hpp"
#include "qvnn/sdp.hpp"
#include "support.hpp"

using namespace qvnn;
using namespace qvnn::testing;

namespace {

NetworkModel scalar_leak_model(double c, double delta) {
  NetworkModel m;
  m.n = 1;
  m.c = RealVector::Constant(1, c);
  m.gamma = RealVector::Ones(1);
  m.activation_gain = RealVector::Zero(1);
  m.a = QuatMatrix::zero(1, 1);
  m.b = QuatMatrix::zero(1, 1);
  m.delta = delta;
  return m;
}

DelayPair no_delay() { return {DelaySpec::constant_delay(0.0), DelaySpec::constant_delay(0.0)}; }

double endpoint(const NetworkModel& m, double horizon, double h) {
  const Trajectory tr = integrate(m, no_delay(), InitialHistory::constant(RealVector::Constant(4, 1.0)), horizon, h);
  return tr.samples.state(tr.size() - 1)(0);
}

// RK4 for one quaternion neuron with constant delays that are multiples of
// the step: grid lookbacks are read by index, half-step lookbacks by the
// cubic Hermite midpoint of the neighbouring samples.
std::vector<Quaternion> reference_constant_delay(const NetworkModel& m, double tau, const Quaternion& x0,
                                                 double horizon, double h) {
  const Quaternion a = m.a.entry(0, 0), b = m.b.entry(0, 0);
  const double c = m.c(0), gain = m.activation_gain(0);
  auto g = [gain](const Quaternion& q) {
    return Quaternion(gain * std::tanh(q.w), gain * std::tanh(q.x), gain * std::tanh(q.y), gain * std::tanh(q.z));
  };
  auto f = [&](const Quaternion& x, const Quaternion& leak, const Quaternion& del) {
    return -c * leak + a * g(x) + b * g(del);
  };
  const long lag_leak = std::lround(m.delta / h), lag_state = std::lround(tau / h);
  const long steps = std::lround(horizon / h);
  std::vector<Quaternion> xs{x0}, ds;
  auto at = [&](long k) { return k <= 0 ? (k == 0 ? xs[0] : x0) : xs[k]; };
  // Value at grid index k + 1/2 (k may be negative).
  auto mid = [&](long k) {
    if (k < 0) return x0;
    return 0.5 * xs[k] + (0.125 * h) * ds[k] + 0.5 * xs[k + 1] - (0.125 * h) * ds[k + 1];
  };
  ds.push_back(f(x0, at(-lag_leak), at(-lag_state)));
  for (long k = 0; k < steps; ++k) {
    const Quaternion xn = xs[k];
    const Quaternion k1 = ds[k];
    const Quaternion k2 = f(xn + (0.5 * h) * k1, mid(k - lag_leak), mid(k - lag_state));
    const Quaternion k3 = f(xn + (0.5 * h) * k2, mid(k - lag_leak), mid(k - lag_state));
    const Quaternion k4 = f(xn + h * k3, at(k + 1 - lag_leak), at(k + 1 - lag_state));
    xs.push_back(xn + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    ds.push_back(f(xs.back(), at(k + 1 - lag_leak), at(k + 1 - lag_state)));
  }
  return xs;
}

}  // namespace

TEST_CASE("delay specs") {
  const DelaySpec d = DelaySpec::sinusoid(0.45, 0.25, 0.0, 1.0);
  CHECK(d.bound() == doctest::Approx(0.7));
  CHECK(d.rate_bound() == doctest::Approx(0.45));
  CHECK(d.raw(-M_PI / 2) == doctest::Approx(-0.2));
  CHECK(d.effective(-M_PI / 2) == 0.0);
  DelaySpec raw = d;
  raw.clamp_negative = false;
  CHECK(raw.effective(-M_PI / 2) == doctest::Approx(-0.2));
  CHECK(DelaySpec::constant_delay(0.3).bound() == 0.3);
  CHECK(DelaySpec::constant_delay(0.3).rate_bound() == 0.0);
}

TEST_CASE("activation examples and Lipschitz sampling") {
  CHECK(activation(Quaternion(), 0.2) == Quaternion());
  CHECK(activation(Quaternion(50.0), 0.2).w == doctest::Approx(0.2));
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Quaternion u1 = random_quaternion(rng, 2.0), u2 = random_quaternion(rng, 2.0);
    const double num = (activation(u1, 0.2) - activation(u2, 0.2)).norm();
    worst = std::max(worst, num / (u1 - u2).norm());
  }
  CHECK(worst <= 0.2 + 1e-12);
}

TEST_CASE("equilibrium shift") {
  NetworkModel m = scalar_leak_model(1.0, 0.0);
  m.external_input = std::vector<Quaternion>{Quaternion(3.0)};
  const ShiftedSystem s = equilibrium_shift(m);
  CHECK(s.equilibrium[0].w == doctest::Approx(3.0));
  CHECK_FALSE(s.model.external_input.has_value());

  const ModelConfig cfg = load_model_config(QVNN_SOURCE_DIR "/data/paper_sec4.json");
  const ShiftedSystem p = equilibrium_shift(cfg.model);
  for (const auto& q : p.equilibrium) CHECK(q.norm() < 1e-12);
  // f(0) = 0 exactly after the shift.
  NetworkModel shifted = cfg.model;
  shifted.external_input = std::vector<Quaternion>{Quaternion(0.5, 0.1, 0, 0), Quaternion(-0.2, 0, 0.3, 0)};
  const ShiftedSystem q = equilibrium_shift(shifted);
  CHECK(q.activation.apply(RealVector(RealVector::Zero(8))).norm() == 0.0);

  NetworkModel wrong = m;
  wrong.equilibrium = std::vector<Quaternion>{Quaternion(2.0)};
  CHECK_THROWS_AS(equilibrium_shift(wrong), InputError);
  wrong.equilibrium = std::vector<Quaternion>{Quaternion(3.0)};
  CHECK(equilibrium_shift(wrong).equilibrium[0] == Quaternion(3.0));
}

TEST_CASE("zero history stays at the equilibrium") {
  const ModelConfig cfg = load_model_config(QVNN_SOURCE_DIR "/data/paper_sec4.json");
  const Trajectory tr = integrate(cfg.model, cfg.delays, InitialHistory::constant(RealVector::Zero(8)), 2.0, 1e-3);
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) worst = std::max(worst, tr.sup_norm(k));
  CHECK(worst <= 1e-14);
  const ConvergenceMetrics cm = convergence_metrics(tr);
  CHECK(cm.tail_sup_norm == 0.0);
  REQUIRE(cm.time_to_threshold.has_value());
  CHECK(*cm.time_to_threshold == 0.0);
}

TEST_CASE("scalar leak-delay problem decays and converges at fourth order") {
  const NetworkModel m = scalar_leak_model(1.0, 0.5);
  const double horizon = 5.0;
  const double ref = endpoint(m, horizon, 5e-5);
  CHECK(std::abs(ref) < 1.0);
  const std::vector<double> steps{4e-3, 2e-3, 1e-3, 5e-4};
  std::vector<double> lx, ly;
  for (double h : steps) {
    lx.push_back(std::log(h));
    ly.push_back(std::log(std::abs(endpoint(m, horizon, h) - ref)));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double order = sxy / sxx;
  MESSAGE("observed order " << order);
  CHECK(order >= 3.5);
}

TEST_CASE("constant delays agree with the indexed reference") {
  NetworkModel m = scalar_leak_model(2.0, 0.3);
  m.gamma = RealVector::Ones(1);
  m.activation_gain = RealVector::Constant(1, 0.8);
  m.a.set_entry(0, 0, Quaternion(0.3, -0.5, 0.2, 0.4));
  m.b.set_entry(0, 0, Quaternion(-0.4, 0.1, 0.6, -0.2));
  m.d1 = 0.2;
  m.d2 = 0.1;
  const double h = 0.01;
  const Quaternion x0(0.7, -0.3, 0.5, 0.9);
  const DelayPair delays{DelaySpec::constant_delay(0.2), DelaySpec::constant_delay(0.1)};
  const Trajectory tr = integrate(m, delays, InitialHistory::constant(pack({x0})), 5.0, h);
  const auto ref = reference_constant_delay(m, 0.3, x0, 5.0, h);
  REQUIRE(ref.size() == tr.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, (tr.state(k)[0] - ref[k]).norm());
  CHECK(worst <= 1e-10);
}

TEST_CASE("history lookups never extrapolate") {
  InitialHistory init = InitialHistory::constant(RealVector::Ones(4));
  init.lookback = 1.0;
  HistoryBuffer buf(init, 0.1, 4);
  buf.push(RealVector::Ones(4), RealVector::Zero(4));
  buf.push(RealVector::Ones(4), RealVector::Zero(4));
  CHECK(buf.value(-1.0)(0) == 1.0);
  CHECK_THROWS_AS(buf.value(-1.01), InputError);
  CHECK_THROWS_AS(buf.value(0.11), InputError);
  CHECK_NOTHROW(buf.value(0.1));

  const NetworkModel m = scalar_leak_model(1.0, 0.5);
  InitialHistory short_hist = InitialHistory::constant(RealVector::Ones(4));
  short_hist.lookback = 0.4;
  CHECK_THROWS_AS(integrate(m, no_delay(), short_hist, 1.0, 1e-2), InputError);
  CHECK_THROWS_AS(integrate(m, no_delay(), InitialHistory::constant(RealVector::Ones(4)), 0.0, 1e-2), InputError);
}

TEST_CASE("divergence is reported with its time") {
  NetworkModel m = scalar_leak_model(1.0, 30.0);
  m.a.set_entry(0, 0, Quaternion(1e300));
  m.gamma(0) = m.activation_gain(0) = 1e300;
  try {
    integrate(m, no_delay(), InitialHistory::constant(RealVector::Ones(4)), 5.0, 0.1);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("convergence metrics on a diverging toy") {
  InitialHistory init = InitialHistory::constant(RealVector::Constant(4, 1.0));
  init.lookback = 0.5;
  Trajectory tr{1, 0.5, HistoryBuffer(init, 0.01, 4)};
  for (int k = 0; k <= 500; ++k) {
    const double v = std::exp(0.01 * k);
    tr.samples.push(RealVector::Constant(4, v), RealVector::Constant(4, v));
  }
  const ConvergenceMetrics cm = convergence_metrics(tr);
  CHECK_FALSE(cm.time_to_threshold.has_value());
  CHECK_FALSE(cm.monotone_envelope);
  CHECK(cm.tail_sup_norm == doctest::Approx(2.0 * std::exp(5.0)));
}

TEST_CASE("functional on constant trajectories") {
  std::mt19937_64 rng(3);
  const NetworkModel m = random_model(rng, 2);
  DecisionVars v = random_vars(rng, 2);
  for (auto& p : v.p) p = random_pd_matrix(rng, 2);
  for (auto& q : v.q) q = random_pd_matrix(rng, 2);
  for (auto& r : v.r) r = random_pd_matrix(rng, 2);
  const DelayPair delays{DelaySpec::constant_delay(m.d1), DelaySpec::constant_delay(m.d2)};

  auto constant_traj = [&](const RealVector& x) {
    Trajectory tr{2, 10.0, HistoryBuffer(InitialHistory::constant(x), 1e-3, 8)};
    for (int k = 0; k <= 100; ++k) tr.samples.push(x, RealVector::Zero(8));
    return tr;
  };

  const LyapunovSample zero = evaluate_lkf(constant_traj(RealVector::Zero(8)), m, delays, v, 0.1);
  CHECK(zero.total == 0.0);

  const QuatMatrix c = random_quat_matrix(rng, 2, 1);
  const RealVector x = pack({c.entry(0, 0), c.entry(1, 0)});
  const LyapunovSample s = evaluate_lkf(constant_traj(x), m, delays, v, 0.1);
  CHECK(s.v4 == 0.0);
  const double expected_v2 = m.delta * quadratic_form(v.p[1], c) +
                             0.5 * std::pow(m.delta, 3) * quadratic_form(v.p[2], c);
  CHECK(s.v2 == doctest::Approx(expected_v2).epsilon(1e-10));
  const QuatMatrix z = c - m.delta * (m.c_matrix() * c);
  CHECK(s.v1 == doctest::Approx(quadratic_form(v.p[0], z)).epsilon(1e-10));
  CHECK(s.v3 > 0.0);
  CHECK(s.total == doctest::Approx(s.v1 + s.v2 + s.v3 + s.v4));
  CHECK_THROWS_AS(evaluate_lkf(constant_traj(x), m, delays, v, 0.2), InputError);
}

TEST_CASE("certified functional decreases along a reduced-coupling trajectory") {
  const ModelConfig cfg = load_model_config(QVNN_SOURCE_DIR "/data/reduced_coupling.json");
  const auto [sdp, rec] = scale_problem(build_criterion_sdp(cfg.model));
  const FeasibilityResult r = solve_feasibility(sdp, SolverConfig{});
  REQUIRE(r.status == FeasibilityStatus::feasible);
  RealVector xv = rec.unscale(r.x);
  xv /= xv.cwiseAbs().maxCoeff();
  const DecisionVars vars = devectorize(xv, 2);
  REQUIRE(verify_certificate(cfg.model, vars, 5e-7).valid);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RealVector x0(8);
  for (auto& e : x0) e = u(rng);
  const Trajectory tr = integrate(cfg.model, cfg.delays, InitialHistory::constant(x0), 5.0, 1e-3);
  const double v0 = evaluate_lkf(tr, cfg.model, cfg.delays, vars, 0.0).total;
  CHECK(v0 > 0.0);
  double prev = v0, worst_rise = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 100; ++k) {
    const LyapunovSample s = evaluate_lkf(tr, cfg.model, cfg.delays, vars, 0.05 * k);
    CHECK(s.v1 >= 0.0);
    CHECK(s.v2 >= 0.0);
    CHECK(s.v3 >= 0.0);
    CHECK(s.v4 >= 0.0);
    worst_rise = std::max(worst_rise, s.total - prev);
    prev = s.total;
  }
  CHECK(worst_rise <= 1e-6 * v0);
  CHECK(convergence_metrics(tr).monotone_envelope);
}
