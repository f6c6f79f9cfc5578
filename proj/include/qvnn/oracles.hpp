#pragma once

// Numerical checks of the two integral/matrix inequalities the stability
// proof relies on: the quaternion Jensen inequality and the reciprocally
// convex combination bound.

#include <cstdint>
#include <random>
#include <vector>

#include "qvnn/quaternion.hpp"

namespace qvnn {

/// Piecewise-linear path of quaternion n-vectors on a strictly increasing grid.
class VectorPath {
 public:
  /// Throws InputError on a non-increasing grid, mismatched sample sizes or
  /// non-finite values.
  VectorPath(std::vector<double> grid, std::vector<QuatMatrix> samples);

  double a() const { return grid_.front(); }
  double b() const { return grid_.back(); }
  Eigen::Index dimension() const { return samples_.front().rows(); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<QuatMatrix>& samples() const { return samples_; }

  /// Linear interpolation inside segment k at local fraction theta in [0, 1].
  QuatMatrix at(std::size_t k, double theta) const;

 private:
  std::vector<double> grid_;
  std::vector<QuatMatrix> samples_;  // n x 1 columns
};

/// (b - a) int w* M w ds - (int w ds)* M (int w ds). Simpson with segment
/// midpoints, exact for piecewise-linear paths. Throws InputError unless M
/// is positive definite.
double jensen_gap(const VectorPath& path, const HermitianQuatMatrix& m);

struct RcInstance {
  QuatMatrix xi;  // m x 1
  QuatMatrix w1;  // n x m
  QuatMatrix w2;  // n x m
  HermitianQuatMatrix p;
  QuatMatrix x_coupling;  // n x n
  double alpha_step = 1e-3;
  double alpha_margin = 1e-3;

  /// Throws InputError unless shapes agree, P is positive definite and
  /// [[P, X], [X*, P]] is positive semidefinite (eigenvalues >= -1e-10).
  void validate() const;
};

/// Xi(alpha) = (1/alpha) a* P a + (1/(1-alpha)) b* P b with a = W1 xi, b = W2 xi.
std::vector<double> rc_lhs_on_grid(const RcInstance& inst);

/// min over the alpha grid of Xi(alpha) minus (a, b)* [[P, X], [X*, P]] (a, b).
double rc_gap(const RcInstance& inst);

// ---------------------------------------------------------------------------
// Random instance generators

QuatMatrix random_quat_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale = 1.0);
/// G G* + floor * I with G random.
HermitianQuatMatrix random_pd_matrix(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1);
/// Random piecewise-linear path on [a, b] with `segments` uneven segments.
VectorPath random_path(std::mt19937_64& rng, Eigen::Index n, int segments);
/// P > 0, then X = P^{1/2} K P^{1/2} with ||K||_2 <= 1, so the coupling
/// block is positive semidefinite by construction.
RcInstance random_rc_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m);

struct GapStatistics {
  int count = 0;
  double min = 0.0;
  double mean = 0.0;
};

struct OracleReport {
  GapStatistics jensen;
  GapStatistics rc;
  bool all_nonnegative = true;  // every gap >= -1e-9
};

/// Runs `count` random instances of each oracle from the given seed.
OracleReport run_oracle_batch(int count, std::uint64_t seed);

}  // namespace qvnn
