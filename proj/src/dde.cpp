#include "qvnn/dde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

#include "qvnn/errors.hpp"

namespace qvnn {

// ---------------------------------------------------------------------------
// Delays and activation

DelaySpec DelaySpec::constant_delay(double v) {
  DelaySpec d;
  d.kind = Kind::constant;
  d.value = v;
  return d;
}

DelaySpec DelaySpec::sinusoid(double amplitude, double offset, double phase, double omega) {
  DelaySpec d;
  d.kind = Kind::sinusoid;
  d.amplitude = amplitude;
  d.offset = offset;
  d.phase = phase;
  d.omega = omega;
  return d;
}

double DelaySpec::raw(double t) const {
  if (kind == Kind::constant) return value;
  return amplitude * std::sin(omega * t + phase) + offset;
}

double DelaySpec::effective(double t) const {
  const double r = raw(t);
  return clamp_negative ? std::max(r, 0.0) : r;
}

double DelaySpec::bound() const {
  if (kind == Kind::constant) return value;
  if (omega == 0.0) return amplitude * std::sin(phase) + offset;
  return std::abs(amplitude) + offset;
}

double DelaySpec::rate_bound() const {
  if (kind == Kind::constant) return 0.0;
  return std::abs(amplitude * omega);
}

Quaternion activation(const Quaternion& s, double gain) {
  return {gain * std::tanh(s.w), gain * std::tanh(s.x), gain * std::tanh(s.y),
          gain * std::tanh(s.z)};
}

Quaternion ShiftedActivation::apply(int i, const Quaternion& x) const {
  const Quaternion& y = offset[i];
  return activation(x + y, gain(i)) - activation(y, gain(i));
}

RealVector ShiftedActivation::apply(const RealVector& x) const {
  RealVector out(x.size());
  const int n = static_cast<int>(x.size() / 4);
  for (int i = 0; i < n; ++i) {
    const Quaternion q = apply(i, Quaternion{x(4 * i), x(4 * i + 1), x(4 * i + 2), x(4 * i + 3)});
    out.segment<4>(4 * i) << q.w, q.x, q.y, q.z;
  }
  return out;
}

RealVector pack(const std::vector<Quaternion>& v) {
  RealVector out(4 * static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out.segment<4>(4 * i) << v[i].w, v[i].x, v[i].y, v[i].z;
  return out;
}

std::vector<Quaternion> unpack(const RealVector& v) {
  std::vector<Quaternion> out(v.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {v(4 * i), v(4 * i + 1), v(4 * i + 2), v(4 * i + 3)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Equilibrium

namespace {

RealVector split_tanh(const RealVector& y, const RealVector& gain) {
  RealVector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = gain(i / 4) * std::tanh(y(i));
  return out;
}

}  // namespace

ShiftedSystem equilibrium_shift(const NetworkModel& model) {
  model.validate();
  const int n = model.n;
  const RealMatrix ab = real_left_action(model.a + model.b);
  RealVector c4(4 * n);
  for (int i = 0; i < n; ++i) c4.segment<4>(4 * i).setConstant(model.c(i));
  const RealVector h =
      model.external_input ? pack(*model.external_input) : RealVector(RealVector::Zero(4 * n));

  auto residual = [&](const RealVector& y) -> RealVector {
    return -c4.cwiseProduct(y) + ab * split_tanh(y, model.activation_gain) + h;
  };

  RealVector y;
  if (model.equilibrium) {
    y = pack(*model.equilibrium);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff() + y.cwiseAbs().maxCoeff());
    if (residual(y).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      throw InputError("supplied equilibrium does not satisfy the equilibrium equation");
    }
  } else {
    // Damped iteration y <- (1 - w) y + w C^{-1} ((A + B) g(y) + h).
    y = RealVector::Zero(4 * n);
    double w = 1.0;
    double prev_step = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < 10000; ++it) {
      const RealVector target = (ab * split_tanh(y, model.activation_gain) + h).cwiseQuotient(c4);
      const RealVector next = (1.0 - w) * y + w * target;
      const double step = (next - y).cwiseAbs().maxCoeff();
      y = next;
      const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
      if (step <= 1e-15 * scale && residual(y).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
        converged = true;
        break;
      }
      if (step > prev_step) w = std::max(1e-3, 0.5 * w);
      prev_step = step;
    }
    if (!converged) {
      throw NoEquilibriumError("equilibrium fixed-point iteration did not converge");
    }
  }

  ShiftedSystem sys;
  sys.model = model;
  sys.model.external_input.reset();
  sys.model.equilibrium.reset();
  sys.equilibrium = unpack(y);
  sys.activation.gain = model.activation_gain;
  sys.activation.offset = sys.equilibrium;
  return sys;
}

// ---------------------------------------------------------------------------
// History

InitialHistory InitialHistory::constant(const RealVector& x0) {
  InitialHistory h;
  h.value = [x0](double) { return x0; };
  h.derivative = [dim = x0.size()](double) { return RealVector(RealVector::Zero(dim)); };
  return h;
}

HistoryBuffer::HistoryBuffer(InitialHistory init, double step, int dim)
    : init_(std::move(init)), step_(step), dim_(dim) {
  if (!(step_ > 0.0)) throw InputError("history step must be positive");
  if (!init_.value || !init_.derivative) throw InputError("initial history is incomplete");
}

void HistoryBuffer::push(RealVector x, RealVector dx) {
  if (x.size() != dim_ || dx.size() != dim_) throw ShapeError("history sample has wrong size");
  xs_.push_back(std::move(x));
  dxs_.push_back(std::move(dx));
}

void HistoryBuffer::set_last_derivative(RealVector dx) {
  if (dxs_.empty() || dx.size() != dim_) throw ShapeError("no sample to update");
  dxs_.back() = std::move(dx);
}

double HistoryBuffer::last_time() const {
  return xs_.empty() ? 0.0 : time(xs_.size() - 1);
}

void HistoryBuffer::check_range(double s) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(s));
  if (s < start_time() - tol) {
    throw InputError("history lookup at t=" + std::to_string(s) + " before history start " +
                     std::to_string(start_time()));
  }
  if (s > last_time() + tol) {
    throw InputError("history lookup at t=" + std::to_string(s) + " beyond last sample " +
                     std::to_string(last_time()));
  }
}

namespace {

struct HermiteWeights {
  double h00, h10, h01, h11;
};

HermiteWeights hermite(double th) {
  const double t2 = th * th;
  const double t3 = t2 * th;
  return {2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + th, -2 * t3 + 3 * t2, t3 - t2};
}

HermiteWeights hermite_derivative(double th) {
  const double t2 = th * th;
  return {6 * t2 - 6 * th, 3 * t2 - 4 * th + 1, -6 * t2 + 6 * th, 3 * t2 - 2 * th};
}

}  // namespace

RealVector HistoryBuffer::value(double s) const {
  check_range(s);
  if (s <= 0.0 || xs_.size() < 2) return s <= 0.0 ? init_.value(s) : xs_.front();
  const auto last = xs_.size() - 1;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(s / step_)), last - 1);
  const double th = (s - time(k)) / step_;
  const HermiteWeights w = hermite(th);
  return w.h00 * xs_[k] + (w.h10 * step_) * dxs_[k] + w.h01 * xs_[k + 1] +
         (w.h11 * step_) * dxs_[k + 1];
}

RealVector HistoryBuffer::derivative(double s) const {
  check_range(s);
  if (s < 0.0) return init_.derivative(s);
  if (xs_.size() < 2) return dxs_.front();
  const auto last = xs_.size() - 1;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(s / step_)), last - 1);
  const double th = (s - time(k)) / step_;
  const HermiteWeights w = hermite_derivative(th);
  return (w.h00 / step_) * xs_[k] + w.h10 * dxs_[k] + (w.h01 / step_) * xs_[k + 1] +
         w.h11 * dxs_[k + 1];
}

double Trajectory::sup_norm(std::size_t k) const {
  const RealVector& x = samples.state(k);
  double m = 0.0;
  for (int i = 0; i < n; ++i) m = std::max(m, x.segment<4>(4 * i).norm());
  return m;
}

// ---------------------------------------------------------------------------
// Integration

Trajectory integrate(const NetworkModel& model, const DelayPair& delays,
                     const InitialHistory& history, double horizon, double h_step) {
  if (!(h_step > 0.0) || !std::isfinite(h_step)) throw InputError("h_step must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive");
  const ShiftedSystem sys = equilibrium_shift(model);
  const int n = model.n;
  const int dim = 4 * n;

  const double lookback = model.delta + std::max(0.0, delays.d1.bound()) +
                          std::max(0.0, delays.d2.bound());
  if (history.lookback < lookback - 1e-12) {
    throw InputError("initial history covers " + std::to_string(history.lookback) +
                     " s but the system looks back " + std::to_string(lookback) + " s");
  }

  const RealMatrix la = real_left_action(model.a);
  const RealMatrix lb = real_left_action(model.b);
  RealVector c4(dim);
  for (int i = 0; i < n; ++i) c4.segment<4>(4 * i).setConstant(model.c(i));

  Trajectory traj{n, lookback, HistoryBuffer(history, h_step, dim)};
  HistoryBuffer& buf = traj.samples;

  auto rhs = [&](const RealVector& x, const RealVector& x_leak, const RealVector& x_delay) {
    RealVector dx = -c4.cwiseProduct(x_leak) + la * sys.activation.apply(x) +
                    lb * sys.activation.apply(x_delay);
    return dx;
  };

  // Delayed state for a stage at time s with provisional state xs. Lookups
  // that land inside the current step [tn, s] use the stage estimate.
  auto delayed = [&](double s, double tau, double tn, const RealVector& xn,
                     const RealVector& xs) -> RealVector {
    const double q = s - tau;
    if (q <= tn) return buf.value(q);
    if (tau <= 0.0 || s <= tn) return xs;
    const double frac = (q - tn) / (s - tn);
    return xn + frac * (xs - xn);
  };
  auto state_delay = [&](double s) { return delays.d1.effective(s) + delays.d2.effective(s); };

  auto stage = [&](double s, double tn, const RealVector& xn, const RealVector& xs) {
    return rhs(xs, delayed(s, model.delta, tn, xn, xs), delayed(s, state_delay(s), tn, xn, xs));
  };

  const RealVector x0 = history.value(0.0);
  if (x0.size() != dim) throw ShapeError("initial history has wrong dimension");
  // Derivative at t=0 from the right.
  buf.push(x0, stage(0.0, 0.0, x0, x0));

  const auto steps = static_cast<std::size_t>(std::ceil(horizon / h_step - 1e-9));
  for (std::size_t k = 0; k < steps; ++k) {
    const double tn = buf.time(k);
    const double half = tn + 0.5 * h_step;
    const double next = buf.time(k + 1);
    const RealVector& xn = buf.state(k);
    const RealVector k1 = buf.state_derivative(k);
    const RealVector x2 = xn + (0.5 * h_step) * k1;
    const RealVector k2 = stage(half, tn, xn, x2);
    const RealVector x3 = xn + (0.5 * h_step) * k2;
    const RealVector k3 = stage(half, tn, xn, x3);
    const RealVector x4 = xn + h_step * k3;
    const RealVector k4 = stage(next, tn, xn, x4);
    RealVector xnext = xn + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!xnext.allFinite()) {
      throw DivergenceError("state became non-finite at t=" + std::to_string(next), next);
    }
    // Push first so the derivative evaluation can read x(next - tau) for tau > 0.
    buf.push(xnext, RealVector::Zero(dim));
    RealVector dx = stage(next, next, xnext, xnext);
    buf.set_last_derivative(std::move(dx));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Lyapunov-Krasovskii functional

RealMatrix real_quadratic_form(const HermitianQuatMatrix& h) {
  // Re(a* b) of two quaternions is the dot product of their coefficients,
  // so x* H x = vec(x)^T L(H) vec(x) with L the real left action.
  const RealMatrix l = real_left_action(h.matrix());
  return 0.5 * (l + l.transpose());
}

namespace {

// Composite Simpson on [a, b] with roughly one panel per grid step, split at
// the points in `breaks` that fall inside (a, b).
template <class F>
double simpson(double a, double b, double h, std::initializer_list<double> breaks, F&& f) {
  if (b <= a) return 0.0;
  std::vector<double> cuts{a};
  for (double c : breaks) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double lo = cuts[seg];
    const double hi = cuts[seg + 1];
    if (hi <= lo) continue;
    int m = std::max(2, static_cast<int>(std::ceil((hi - lo) / h - 1e-9)));
    if (m % 2) ++m;
    const double w = (hi - lo) / m;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * w);
    total += acc * w / 3.0;
  }
  return total;
}

}  // namespace

LyapunovSample evaluate_lkf(const Trajectory& traj, const NetworkModel& model,
                            const DelayPair& delays, const DecisionVars& vars, double t) {
  model.validate();
  if (vars.n() != model.n) throw ShapeError("decision variables do not match the model size");
  const HistoryBuffer& buf = traj.samples;
  const double h = buf.step();
  const double d = model.d();
  const double reach = std::max({model.delta, d, delays.d1.effective(t) + delays.d2.effective(t)});
  if (t - reach < buf.start_time() - 1e-12 || t > buf.last_time() + 1e-12) {
    throw InputError("trajectory does not cover the functional's lookback at t=" +
                     std::to_string(t));
  }
  const ShiftedActivation act = equilibrium_shift(model).activation;

  const RealMatrix kp1 = real_quadratic_form(vars.p[0]);
  const RealMatrix kp2 = real_quadratic_form(vars.p[1]);
  const RealMatrix kp3 = real_quadratic_form(vars.p[2]);
  std::array<RealMatrix, 6> kq;
  for (int i = 0; i < 6; ++i) kq[i] = real_quadratic_form(vars.q[i]);
  const RealMatrix kr1 = real_quadratic_form(vars.r[0]);
  const RealMatrix kr2 = real_quadratic_form(vars.r[1]);

  auto form = [](const RealMatrix& k, const RealVector& x) { return x.dot(k * x); };
  auto xs = [&](double s) { return buf.value(s); };
  auto dxs = [&](double s) { return buf.derivative(s); };

  LyapunovSample out{};
  out.t = t;

  // V1
  RealVector leak(4 * model.n);
  leak.setZero();
  for (int c = 0; c < leak.size(); ++c) {
    leak(c) = simpson(t - model.delta, t, h, {0.0}, [&](double s) { return xs(s)(c); });
  }
  RealVector c4(4 * model.n);
  for (int i = 0; i < model.n; ++i) c4.segment<4>(4 * i).setConstant(model.c(i));
  const RealVector z = xs(t) - c4.cwiseProduct(leak);
  out.v1 = form(kp1, z);

  // V2
  const double delta = model.delta;
  out.v2 = simpson(t - delta, t, h, {0.0}, [&](double s) {
    const RealVector x = xs(s);
    return form(kp2, x) + delta * (delta - (t - s)) * form(kp3, x);
  });

  // V3
  const double d1t = delays.d1.effective(t);
  const double dt = d1t + delays.d2.effective(t);
  out.v3 = simpson(t - d1t, t, h, {0.0}, [&](double s) {
    const RealVector x = xs(s);
    return form(kq[0], x) + form(kq[1], act.apply(x));
  });
  out.v3 += simpson(t - dt, t, h, {0.0}, [&](double s) {
    const RealVector x = xs(s);
    return form(kq[2], x) + form(kq[3], act.apply(x));
  });
  out.v3 += simpson(t - model.d1, t, h, {0.0}, [&](double s) { return form(kq[4], xs(s)); });
  out.v3 += simpson(t - d, t, h, {0.0}, [&](double s) { return form(kq[5], xs(s)); });

  // V4: the double integrals reduce to weighted single integrals.
  const double d1 = model.d1;
  const double d2 = model.d2;
  out.v4 = d1 * simpson(t - d1, t, h, {0.0}, [&](double s) {
    return (d1 - (t - s)) * form(kr1, dxs(s));
  });
  out.v4 += d2 * simpson(t - d, t, h, {0.0, t - d1}, [&](double s) {
    const double weight = s >= t - d1 ? d2 : d - (t - s);
    return weight * form(kr2, dxs(s));
  });

  out.total = out.v1 + out.v2 + out.v3 + out.v4;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence metrics

ConvergenceMetrics convergence_metrics(const Trajectory& traj, double threshold) {
  ConvergenceMetrics m{0.0, std::nullopt, true};
  const std::size_t count = traj.size();
  if (count == 0) return m;
  const double horizon = traj.horizon();
  std::vector<double> norms(count);
  for (std::size_t k = 0; k < count; ++k) norms[k] = traj.sup_norm(k);

  for (std::size_t k = 0; k < count; ++k) {
    if (traj.time(k) >= 0.9 * horizon - 1e-12) m.tail_sup_norm = std::max(m.tail_sup_norm, norms[k]);
    if (!m.time_to_threshold && norms[k] < threshold) m.time_to_threshold = traj.time(k);
  }

  const double window = std::max(traj.lookback, 10.0 * traj.samples.step());
  const auto per_window =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window / traj.samples.step())));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start < count; start += per_window) {
    const std::size_t end = std::min(count, start + per_window);
    const double peak = *std::max_element(norms.begin() + start, norms.begin() + end);
    if (peak > prev * (1.0 + 1e-12) + 1e-300) {
      m.monotone_envelope = false;
      break;
    }
    prev = peak;
  }
  return m;
}

}  // namespace qvnn
