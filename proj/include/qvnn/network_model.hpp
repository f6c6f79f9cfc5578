#pragma once

#include <optional>
#include <vector>

#include "qvnn/quaternion.hpp"

namespace qvnn {

/// A quaternion-valued network with leakage delay and two additive
/// time-varying state delays:
///
///   y'(t) = -C y(t - delta) + A g(y(t)) + B g(y(t - d1(t) - d2(t))) + h
///
/// C and Gamma are diagonal; `c` and `gamma` hold their diagonals.
struct NetworkModel {
  int n = 0;
  RealVector c;
  QuatMatrix a;
  QuatMatrix b;
  double delta = 0.0;
  double d1 = 0.0;  // upper bound of d1(t)
  double d2 = 0.0;  // upper bound of d2(t)
  double mu1 = 0.0;  // rate bound of d1(t)
  double mu2 = 0.0;  // rate bound of d2(t)
  RealVector gamma;  // Lipschitz constants of the activations
  /// Gain of the split tanh activation g_i(s) = gain_i * tanh(s) per neuron.
  RealVector activation_gain;
  std::optional<std::vector<Quaternion>> external_input;
  std::optional<std::vector<Quaternion>> equilibrium;

  double d() const { return d1 + d2; }
  double mu() const { return mu1 + mu2; }

  QuatMatrix c_matrix() const { return QuatMatrix::real_diagonal(c); }
  QuatMatrix gamma_matrix() const { return QuatMatrix::real_diagonal(gamma); }

  /// Throws InputError / ShapeError if any model invariant is violated.
  void validate() const;
};

}  // namespace qvnn
