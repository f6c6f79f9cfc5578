#pragma once

// Stability criterion for the delayed QVNN: decision variables, the
// quaternion LMIs (two coupling blocks and the 11x11 block matrix Omega),
// and the lowering chain quaternion -> complex -> real symmetric.

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qvnn/network_model.hpp"
#include "qvnn/quaternion.hpp"

namespace qvnn {

/// Decision variables of the criterion. M1..M3 are positive diagonals,
/// P/Q/R are Hermitian, U, V, S1, S2 are unstructured.
struct DecisionVars {
  std::array<RealVector, 3> m;
  std::array<HermitianQuatMatrix, 3> p;
  std::array<HermitianQuatMatrix, 6> q;
  std::array<HermitianQuatMatrix, 2> r;
  QuatMatrix u;
  QuatMatrix v;
  QuatMatrix s1;
  QuatMatrix s2;

  static DecisionVars zeros(int n);
  int n() const { return static_cast<int>(u.rows()); }
  DecisionVars scaled(double t) const;
};

/// Labels of the 11 blocks of the augmented state used by Omega.
enum class StateBlock : int {
  x = 0,
  x_dot,
  x_leak,          // x(t - delta)
  x_d1t,           // x(t - d1(t))
  x_dt,            // x(t - d(t))
  x_d1,            // x(t - d1)
  x_d,             // x(t - d)
  f_x,             // f(x(t))
  f_d1t,           // f(x(t - d1(t)))
  f_dt,            // f(x(t - d(t)))
  leak_integral,   // integral of x over [t - delta, t]
};

struct StateVectorLayout {
  static constexpr int kBlocks = 11;
  int n;
  int dimension() const { return kBlocks * n; }
  int offset(StateBlock b) const { return static_cast<int>(b) * n; }
  static std::string label(StateBlock b);
};

// ---------------------------------------------------------------------------
// Scalar parameterization

enum class VarComponent { diagonal, a1_real, a1_imag, a2_real, a2_imag };

/// Origin of one real scalar decision variable.
struct VarOrigin {
  std::string matrix;  // "M1", "P2", "U", ...
  int row;
  int col;
  VarComponent component;
};

/// Variable order: M1..M3, P1..P3, Q1..Q6, R1, R2, U, V, S1, S2.
/// A Hermitian n x n contributes n^2 + n(n-1) scalars, an unstructured one 4n^2.
std::vector<VarOrigin> build_var_map(int n);
int num_scalar_vars(int n);
RealVector vectorize(const DecisionVars& vars);
DecisionVars devectorize(const RealVector& x, int n);

// ---------------------------------------------------------------------------
// Quaternion-level constraints

enum class Sense { positive_definite, negative_definite };

std::string to_string(Sense s);

struct QuatConstraint {
  std::string name;
  Sense sense;
  std::function<HermitianQuatMatrix(const DecisionVars&)> build;
};

/// [[R1, U], [U*, R1]] and [[R2, V], [V*, R2]].
std::pair<HermitianQuatMatrix, HermitianQuatMatrix> assemble_constraint_3_4(
    const DecisionVars& vars);

/// The 11n x 11n Hermitian block matrix Omega.
HermitianQuatMatrix assemble_omega(const NetworkModel& model, const DecisionVars& vars);

/// Upper-triangle (row, col) block indices (0-based) that assemble_omega fills.
const std::vector<std::pair<int, int>>& omega_nonzero_blocks();

/// All constraints of the criterion: M1..M3 > 0, P/Q/R > 0, the two
/// coupling LMIs > 0 and Omega < 0.
std::vector<QuatConstraint> criterion_constraints(const NetworkModel& model);

// ---------------------------------------------------------------------------
// Affine forms and lowering

struct QuatAffineLmi {
  std::string name;
  Sense sense;
  HermitianQuatMatrix constant;
  std::vector<HermitianQuatMatrix> coeffs;  // one per scalar variable
};

struct ComplexAffineLmi {
  std::string name;
  Sense sense;
  ComplexMatrix constant;
  std::vector<ComplexMatrix> coeffs;
};

/// sense(constant + sum_i x_i coeffs[i]); only nonzero coefficients stored.
struct AffineLmi {
  std::string name;
  Sense sense;
  RealMatrix constant;
  std::vector<std::pair<int, RealMatrix>> coeffs;
  /// The margin t enters this LMI as margin_weight * t * I (1 unless rescaled).
  double margin_weight = 1.0;

  int dimension() const { return static_cast<int>(constant.rows()); }
  RealMatrix evaluate(const RealVector& x) const;
};

struct StandardSdp {
  int num_vars = 0;
  std::vector<AffineLmi> lmis;
  std::vector<VarOrigin> var_map;  // empty for hand-built problems
  /// Per-variable box scale: |x_i| <= trust_radius * var_bound[i]. Empty = all ones.
  RealVector var_bound;
};

/// Extracts the affine form of a constraint by evaluating it at zero and
/// at every unit vector of the scalar parameterization.
QuatAffineLmi linearize(const QuatConstraint& c, int n);
/// Applies complex_embed to the constant and every coefficient.
ComplexAffineLmi lower_to_complex(const QuatAffineLmi& q);
/// Applies real_embed per LMI and drops zero coefficients.
StandardSdp lower_to_real(const std::vector<ComplexAffineLmi>& lmis, int num_vars,
                          std::vector<VarOrigin> var_map = {});

/// Full chain for a model; throws PreconditionError if any constant term is nonzero.
StandardSdp build_criterion_sdp(const NetworkModel& model);

// ---------------------------------------------------------------------------
// Certificate checking

struct ConstraintCheck {
  std::string name;
  Sense sense;
  double min_eigenvalue;
  double max_eigenvalue;
  /// min eigenvalue for "> 0", minus the max eigenvalue for "< 0".
  double slack;
};

struct CertificateReport {
  std::vector<ConstraintCheck> checks;
  double worst_slack;
  bool valid;
};

/// Re-checks every constraint in quaternion arithmetic; valid iff each
/// slack is at least `margin` (and strictly positive).
CertificateReport verify_certificate(const NetworkModel& model, const DecisionVars& vars,
                                     double margin);

nlohmann::json certificate_to_json(const DecisionVars& vars);
DecisionVars certificate_from_json(const nlohmann::json& j);

}  // namespace qvnn
