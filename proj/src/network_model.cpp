#include "qvnn/network_model.hpp"

#include <cmath>
#include <string>

#include "qvnn/errors.hpp"

namespace qvnn {

namespace {

void require_finite_nonneg(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw InputError(std::string(name) + " must be a finite non-negative number");
  }
}

}  // namespace

void NetworkModel::validate() const {
  if (n <= 0) throw InputError("n must be positive");
  if (c.size() != n) throw ShapeError("C diagonal must have n entries");
  if (gamma.size() != n) throw ShapeError("gamma must have n entries");
  if (activation_gain.size() != n) throw ShapeError("activation gain must have n entries");
  if (a.rows() != n || a.cols() != n) throw ShapeError("A must be n x n");
  if (b.rows() != n || b.cols() != n) throw ShapeError("B must be n x n");
  for (int i = 0; i < n; ++i) {
    if (!(c(i) > 0.0) || !std::isfinite(c(i))) throw InputError("C entries must be positive");
    if (!(gamma(i) > 0.0) || !std::isfinite(gamma(i))) {
      throw InputError("gamma entries must be positive");
    }
    if (!(activation_gain(i) >= 0.0) || !std::isfinite(activation_gain(i))) {
      throw InputError("activation gains must be non-negative");
    }
    // Split tanh with gain k is k-Lipschitz in the quaternion modulus.
    if (activation_gain(i) > gamma(i) * (1.0 + 1e-12)) {
      throw InputError("activation gain exceeds its Lipschitz bound gamma");
    }
  }
  require_finite_nonneg(delta, "delta");
  require_finite_nonneg(d1, "d1");
  require_finite_nonneg(d2, "d2");
  require_finite_nonneg(mu1, "mu1");
  require_finite_nonneg(mu2, "mu2");
  if (external_input && static_cast<int>(external_input->size()) != n) {
    throw ShapeError("external input must have n entries");
  }
  if (equilibrium && static_cast<int>(equilibrium->size()) != n) {
    throw ShapeError("equilibrium must have n entries");
  }
}

}  // namespace qvnn
