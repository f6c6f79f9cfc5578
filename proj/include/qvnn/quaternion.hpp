#pragma once

// Quaternion scalars and matrices in the complex-pair basis A = A1 + A2 j,
// together with the quaternion -> complex -> real embedding chain used for
// all definiteness questions.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace qvnn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Quaternion w + x i + y j + z k.
struct Quaternion {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Quaternion() = default;
  constexpr Quaternion(double w_, double x_, double y_, double z_)
      : w(w_), x(x_), y(y_), z(z_) {}
  constexpr explicit Quaternion(double real) : w(real) {}

  static constexpr Quaternion i() { return {0, 1, 0, 0}; }
  static constexpr Quaternion j() { return {0, 0, 1, 0}; }
  static constexpr Quaternion k() { return {0, 0, 0, 1}; }

  /// Plural decomposition q = c1 + c2 j with c1 = w + x i, c2 = y + z i.
  std::pair<Complex, Complex> decompose() const { return {{w, x}, {y, z}}; }
  static Quaternion recompose(Complex c1, Complex c2) {
    return {c1.real(), c1.imag(), c2.real(), c2.imag()};
  }

  Quaternion conj() const { return {w, -x, -y, -z}; }
  double norm_squared() const { return w * w + x * x + y * y + z * z; }
  double norm() const;

  Quaternion& operator+=(const Quaternion& o);
  Quaternion& operator-=(const Quaternion& o);
  Quaternion& operator*=(double s);

  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

Quaternion operator+(Quaternion a, const Quaternion& b);
Quaternion operator-(Quaternion a, const Quaternion& b);
Quaternion operator-(const Quaternion& a);
Quaternion operator*(double s, Quaternion a);
Quaternion operator*(Quaternion a, double s);
/// Hamilton product (non-commutative).
Quaternion operator*(const Quaternion& m, const Quaternion& n);

inline Quaternion quat_mul(const Quaternion& m, const Quaternion& n) { return m * n; }
inline Quaternion quat_conj(const Quaternion& m) { return m.conj(); }

/// 4x4 real matrix L(q) with L(q) [p.w p.x p.y p.z]^T = coefficients of q p.
Eigen::Matrix4d left_multiplication_matrix(const Quaternion& q);

/// Dense quaternion matrix stored as the complex pair (A1, A2), A = A1 + A2 j.
class QuatMatrix {
 public:
  QuatMatrix() = default;
  QuatMatrix(Eigen::Index rows, Eigen::Index cols);
  /// Throws ShapeError when a1 and a2 differ in shape.
  QuatMatrix(ComplexMatrix a1, ComplexMatrix a2);

  static QuatMatrix zero(Eigen::Index rows, Eigen::Index cols);
  static QuatMatrix identity(Eigen::Index n);
  static QuatMatrix from_complex(const ComplexMatrix& c);
  static QuatMatrix from_real(const RealMatrix& r);
  static QuatMatrix real_diagonal(const RealVector& d);

  Eigen::Index rows() const { return a1_.rows(); }
  Eigen::Index cols() const { return a1_.cols(); }
  bool is_square() const { return rows() == cols(); }

  const ComplexMatrix& a1() const { return a1_; }
  const ComplexMatrix& a2() const { return a2_; }

  Quaternion entry(Eigen::Index r, Eigen::Index c) const;
  void set_entry(Eigen::Index r, Eigen::Index c, const Quaternion& q);

  QuatMatrix block(Eigen::Index r, Eigen::Index c, Eigen::Index nr, Eigen::Index nc) const;
  void set_block(Eigen::Index r, Eigen::Index c, const QuatMatrix& b);

  /// A* = A1* - A2^T j.
  QuatMatrix adjoint() const;
  /// Largest absolute value over all real coefficients.
  double max_abs() const;

  QuatMatrix& operator+=(const QuatMatrix& o);
  QuatMatrix& operator-=(const QuatMatrix& o);
  QuatMatrix& operator*=(double s);

 private:
  ComplexMatrix a1_;
  ComplexMatrix a2_;
};

QuatMatrix operator+(QuatMatrix a, const QuatMatrix& b);
QuatMatrix operator-(QuatMatrix a, const QuatMatrix& b);
QuatMatrix operator-(const QuatMatrix& a);
QuatMatrix operator*(double s, QuatMatrix a);
/// AB = (A1 B1 - A2 conj(B2)) + (A1 B2 + A2 conj(B1)) j.
QuatMatrix operator*(const QuatMatrix& a, const QuatMatrix& b);

inline QuatMatrix qmat_mul(const QuatMatrix& a, const QuatMatrix& b) { return a * b; }
inline QuatMatrix qmat_conj_transpose(const QuatMatrix& a) { return a.adjoint(); }

/// Quaternion Hermitian matrix: a1 complex Hermitian, a2 complex skew-symmetric.
///
/// Construction from a general QuatMatrix symmetrizes structure violations up
/// to kStructureTolerance * max(1, max|entry|) and throws PreconditionError
/// beyond that.
class HermitianQuatMatrix {
 public:
  static constexpr double kStructureTolerance = 1e-12;

  HermitianQuatMatrix() = default;
  explicit HermitianQuatMatrix(const QuatMatrix& m);
  HermitianQuatMatrix(ComplexMatrix a1, ComplexMatrix a2);

  /// Reads the upper triangle (diagonal included) and mirrors it, so the
  /// result is exactly Hermitian regardless of the lower triangle.
  static HermitianQuatMatrix from_upper(const QuatMatrix& m);
  static HermitianQuatMatrix zero(Eigen::Index n);
  static HermitianQuatMatrix identity(Eigen::Index n);

  Eigen::Index size() const { return m_.rows(); }
  const QuatMatrix& matrix() const { return m_; }
  operator const QuatMatrix&() const { return m_; }

  HermitianQuatMatrix& operator+=(const HermitianQuatMatrix& o);
  HermitianQuatMatrix& operator*=(double s);

 private:
  struct Trusted {};
  HermitianQuatMatrix(QuatMatrix m, Trusted) : m_(std::move(m)) {}
  QuatMatrix m_;
};

HermitianQuatMatrix operator+(HermitianQuatMatrix a, const HermitianQuatMatrix& b);
HermitianQuatMatrix operator*(double s, HermitianQuatMatrix a);

/// 4r x 4c real matrix acting on packed quaternion vectors as left
/// multiplication by the quaternion matrix (block (i, j) = L(a_ij)).
RealMatrix real_left_action(const QuatMatrix& a);

/// 2n x 2n complex matrix [[A1, -A2], [conj(A2), conj(A1)]].
ComplexMatrix complex_embed(const QuatMatrix& a);
/// Inverse of complex_embed: reads A1 from the top-left block and A2 from
/// the negated top-right block.
QuatMatrix from_complex_embedding(const ComplexMatrix& e);

/// 2m x 2m real symmetric matrix [[S, -T], [T, S]] for h = S + iT Hermitian.
RealMatrix real_embed(const ComplexMatrix& h);

/// Sorted eigenvalues of the real embedding of the complex embedding (each
/// quaternion eigenvalue appears four times).
RealVector embedded_eigenvalues(const HermitianQuatMatrix& h);

enum class DefinitenessClass {
  positive_definite,
  negative_definite,
  indefinite,
  semidefinite_degenerate,
};

std::string to_string(DefinitenessClass c);

struct Definiteness {
  DefinitenessClass kind;
  double min_eigenvalue;
  double max_eigenvalue;
};

/// Classifies via the embedding spectrum; eigenvalues with
/// |lambda| <= 1e-10 * max(1, ||h||_2) count as zero.
Definiteness definiteness(const HermitianQuatMatrix& h);

/// xi* h xi for a quaternion column vector. Throws NumericalError if the
/// imaginary parts exceed 1e-10 relative to the magnitude of the form.
double quadratic_form(const HermitianQuatMatrix& h, const QuatMatrix& xi);

/// Principal square root of a positive semidefinite Hermitian quaternion matrix.
HermitianQuatMatrix hermitian_sqrt(const HermitianQuatMatrix& h);

/// Spectral norm (largest singular value) of a quaternion matrix.
double spectral_norm(const QuatMatrix& a);

// JSON text format: {"rows": r, "cols": c, "entries": [[w,x,y,z], ...]}
// in row-major order.
nlohmann::json to_json(const QuatMatrix& m);
QuatMatrix quat_matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Quaternion& q);
Quaternion quaternion_from_json(const nlohmann::json& j);

}  // namespace qvnn
