#pragma once

// Strict feasibility of homogeneous real LMI systems via max-margin
// reformulation:
//
//   maximize t  s.t.  G_k(x) - w_k t I >= 0 for all k,
//                     |x_i| <= trust_radius * b_i
//
// where the weights w_k and box scales b_i are 1 unless the problem was
// rescaled by scale_problem.
// solved with a log-det barrier and damped Newton steps.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qvnn/lmi.hpp"

namespace qvnn {

struct SolverConfig {
  double margin_tolerance = 1e-6;
  double newton_tolerance = 1e-9;
  int max_outer_iters = 60;
  int max_newton_iters = 100;
  double barrier_shrink = 0.2;
  double trust_radius = 1.0;
  std::uint64_t seed = 1;
  /// Stop once the barrier gap bound falls below relative_gap * |t|.
  double relative_gap = 1e-4;
  /// Accept non-zero constant terms (hand-built test problems).
  bool allow_constant = false;
  /// Optional CSV stream: iteration,barrier_weight,t,min_eig.
  std::ostream* diagnostics = nullptr;

  void validate() const;
};

enum class FeasibilityStatus { feasible, infeasible_at_tolerance, numerical_failure };

std::string to_string(FeasibilityStatus s);

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::numerical_failure;
  double margin = 0.0;
  RealVector x;
  /// Smallest eigenvalue of each constraint written as G_k(x) > 0, divided
  /// by its margin weight.
  std::vector<double> per_constraint_min_eig;
  int outer_iterations = 0;
  int newton_iterations = 0;
  int attempts = 0;
  double wall_time = 0.0;
  std::string diagnostic;
};

/// Throws InputError for non-symmetric coefficients or (unless allowed)
/// non-zero constant terms.
FeasibilityResult solve_feasibility(const StandardSdp& sdp, const SolverConfig& cfg);

/// Smallest eigenvalue of every constraint in "G_k(x) > 0" orientation,
/// divided by the LMI's margin weight.
std::vector<double> constraint_min_eigs(const StandardSdp& sdp, const RealVector& x);

/// Variable and per-LMI scaling. Scaled coefficient of variable i in LMI k
/// is lmi_factor[k] * var_factor[i] * F_ki; original x_i = var_factor[i] * y_i.
/// Margin weights and box bounds are rescaled alongside, so the scaled
/// problem is equivalent to the original one (same optimal margin).
struct ScalingRecord {
  RealVector var_factor;
  RealVector lmi_factor;
  std::vector<int> dropped_vars;  // variables whose coefficients are all zero

  RealVector unscale(const RealVector& y) const;
};

std::pair<StandardSdp, ScalingRecord> scale_problem(const StandardSdp& sdp);

/// Second-opinion search by alternating projection between the shifted PSD
/// cones and the affine image of the variables. Returns x only if every
/// constraint's min eigenvalue is at least 0.5 * target_margin.
std::optional<RealVector> alternating_projection_oracle(const StandardSdp& sdp,
                                                        double target_margin, int iters);

}  // namespace qvnn
