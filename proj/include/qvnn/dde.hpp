#pragma once

// Fixed-step RK4 integration of the shifted network
//
//   x'(t) = -C x(t - delta) + A f(x(t)) + B f(x(t - d1(t) - d2(t)))
//
// with delayed states read from a cubic Hermite history, plus evaluation of
// the Lyapunov-Krasovskii functional along a trajectory.

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "qvnn/lmi.hpp"
#include "qvnn/network_model.hpp"

namespace qvnn {

/// d(t) = amplitude * sin(omega t + phase) + offset, or a constant.
struct DelaySpec {
  enum class Kind { constant, sinusoid };
  Kind kind = Kind::constant;
  double value = 0.0;  // constant delay
  double amplitude = 0.0;
  double offset = 0.0;
  double phase = 0.0;
  double omega = 0.0;
  bool clamp_negative = true;

  static DelaySpec constant_delay(double v);
  static DelaySpec sinusoid(double amplitude, double offset, double phase, double omega);

  double raw(double t) const;
  /// Delay actually applied: max(raw, 0) when clamping.
  double effective(double t) const;
  /// Maximum of the un-clamped function.
  double bound() const;
  /// Bound on |d'(t)|.
  double rate_bound() const;
};

struct DelayPair {
  DelaySpec d1;
  DelaySpec d2;
};

/// Split-type activation: gain * tanh applied to each real component.
Quaternion activation(const Quaternion& s, double gain);

/// f_i(x) = g_i(x + y*_i) - g_i(y*_i) for the split tanh g_i.
struct ShiftedActivation {
  RealVector gain;
  std::vector<Quaternion> offset;

  Quaternion apply(int i, const Quaternion& x) const;
  /// Applies neuron-wise to a packed state (4 reals per neuron).
  RealVector apply(const RealVector& x) const;
};

struct ShiftedSystem {
  NetworkModel model;  // external input and equilibrium cleared
  ShiftedActivation activation;
  std::vector<Quaternion> equilibrium;
};

/// Moves the equilibrium y* to the origin. Solves -C y + (A + B) g(y) + h = 0
/// by damped fixed-point iteration when y* is not supplied.
ShiftedSystem equilibrium_shift(const NetworkModel& model);

// Packed states: neuron i occupies entries [4i, 4i + 4) as (w, x, y, z).
RealVector pack(const std::vector<Quaternion>& v);
std::vector<Quaternion> unpack(const RealVector& v);

/// History on [-lookback, 0] for the integration start time 0.
struct InitialHistory {
  std::function<RealVector(double)> value;
  std::function<RealVector(double)> derivative;
  double lookback = std::numeric_limits<double>::infinity();

  static InitialHistory constant(const RealVector& x0);
};

/// Initial history followed by uniformly spaced samples with derivatives.
/// Lookups outside [start, last sample] throw InputError.
class HistoryBuffer {
 public:
  HistoryBuffer(InitialHistory init, double step, int dim);

  void push(RealVector x, RealVector dx);
  /// Replaces the derivative stored with the most recent sample.
  void set_last_derivative(RealVector dx);

  RealVector value(double s) const;
  RealVector derivative(double s) const;

  double start_time() const { return -init_.lookback; }
  double last_time() const;
  double step() const { return step_; }
  int dim() const { return dim_; }
  std::size_t size() const { return xs_.size(); }
  double time(std::size_t k) const { return static_cast<double>(k) * step_; }
  const RealVector& state(std::size_t k) const { return xs_[k]; }
  const RealVector& state_derivative(std::size_t k) const { return dxs_[k]; }

 private:
  void check_range(double s) const;
  InitialHistory init_;
  double step_;
  int dim_;
  std::vector<RealVector> xs_;
  std::vector<RealVector> dxs_;
};

/// Sampled solution on t = 0, h, 2h, ... in shifted coordinates x = y - y*.
struct Trajectory {
  int n = 0;
  double lookback = 0.0;  // delta + d1 + d2 of the simulated system
  HistoryBuffer samples;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t k) const { return samples.time(k); }
  double horizon() const { return samples.last_time(); }
  std::vector<Quaternion> state(std::size_t k) const { return unpack(samples.state(k)); }
  /// max_i |x_i| at sample k.
  double sup_norm(std::size_t k) const;
};

Trajectory integrate(const NetworkModel& model, const DelayPair& delays,
                     const InitialHistory& history, double horizon, double h_step);

struct LyapunovSample {
  double t;
  double v1, v2, v3, v4;
  double total;
};

/// Evaluates V = V1 + V2 + V3 + V4 at time t by composite Simpson quadrature.
LyapunovSample evaluate_lkf(const Trajectory& traj, const NetworkModel& model,
                            const DelayPair& delays, const DecisionVars& vars, double t);

struct ConvergenceMetrics {
  double tail_sup_norm;  // over the last 10% of the horizon
  std::optional<double> time_to_threshold;
  /// Maxima of ||x||_inf over consecutive windows of one lookback length are
  /// nonincreasing.
  bool monotone_envelope;
};

ConvergenceMetrics convergence_metrics(const Trajectory& traj, double threshold = 1e-3);

/// Real symmetric K with vec(x)^T K vec(x) = x* H x for packed quaternion x.
RealMatrix real_quadratic_form(const HermitianQuatMatrix& h);

}  // namespace qvnn
