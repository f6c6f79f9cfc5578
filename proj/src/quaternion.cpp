#include "qvnn/quaternion.hpp"

#include <algorithm>
#include <cmath>

#include "qvnn/errors.hpp"

namespace qvnn {

double Quaternion::norm() const { return std::sqrt(norm_squared()); }

Quaternion& Quaternion::operator+=(const Quaternion& o) {
  w += o.w;
  x += o.x;
  y += o.y;
  z += o.z;
  return *this;
}

Quaternion& Quaternion::operator-=(const Quaternion& o) {
  w -= o.w;
  x -= o.x;
  y -= o.y;
  z -= o.z;
  return *this;
}

Quaternion& Quaternion::operator*=(double s) {
  w *= s;
  x *= s;
  y *= s;
  z *= s;
  return *this;
}

Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
Quaternion operator-(const Quaternion& a) { return {-a.w, -a.x, -a.y, -a.z}; }
Quaternion operator*(double s, Quaternion a) { return a *= s; }
Quaternion operator*(Quaternion a, double s) { return a *= s; }

Quaternion operator*(const Quaternion& m, const Quaternion& n) {
  return {m.w * n.w - m.x * n.x - m.y * n.y - m.z * n.z,
          m.w * n.x + m.x * n.w + m.y * n.z - m.z * n.y,
          m.w * n.y + m.y * n.w - m.x * n.z + m.z * n.x,
          m.w * n.z + m.z * n.w + m.x * n.y - m.y * n.x};
}

Eigen::Matrix4d left_multiplication_matrix(const Quaternion& q) {
  Eigen::Matrix4d l;
  // clang-format off
  l << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w, -q.z,  q.y,
       q.y,  q.z,  q.w, -q.x,
       q.z, -q.y,  q.x,  q.w;
  // clang-format on
  return l;
}

// ---------------------------------------------------------------------------
// QuatMatrix

QuatMatrix::QuatMatrix(Eigen::Index rows, Eigen::Index cols)
    : a1_(ComplexMatrix::Zero(rows, cols)), a2_(ComplexMatrix::Zero(rows, cols)) {}

QuatMatrix::QuatMatrix(ComplexMatrix a1, ComplexMatrix a2)
    : a1_(std::move(a1)), a2_(std::move(a2)) {
  if (a1_.rows() != a2_.rows() || a1_.cols() != a2_.cols()) {
    throw ShapeError("QuatMatrix: complex parts differ in shape");
  }
}

QuatMatrix QuatMatrix::zero(Eigen::Index rows, Eigen::Index cols) {
  return QuatMatrix(rows, cols);
}

QuatMatrix QuatMatrix::identity(Eigen::Index n) {
  return QuatMatrix(ComplexMatrix::Identity(n, n), ComplexMatrix::Zero(n, n));
}

QuatMatrix QuatMatrix::from_complex(const ComplexMatrix& c) {
  return QuatMatrix(c, ComplexMatrix::Zero(c.rows(), c.cols()));
}

QuatMatrix QuatMatrix::from_real(const RealMatrix& r) {
  return from_complex(r.cast<Complex>());
}

QuatMatrix QuatMatrix::real_diagonal(const RealVector& d) {
  return from_real(d.asDiagonal().toDenseMatrix());
}

Quaternion QuatMatrix::entry(Eigen::Index r, Eigen::Index c) const {
  return Quaternion::recompose(a1_(r, c), a2_(r, c));
}

void QuatMatrix::set_entry(Eigen::Index r, Eigen::Index c, const Quaternion& q) {
  auto [c1, c2] = q.decompose();
  a1_(r, c) = c1;
  a2_(r, c) = c2;
}

QuatMatrix QuatMatrix::block(Eigen::Index r, Eigen::Index c, Eigen::Index nr,
                             Eigen::Index nc) const {
  if (r < 0 || c < 0 || r + nr > rows() || c + nc > cols()) {
    throw ShapeError("QuatMatrix::block out of range");
  }
  return QuatMatrix(a1_.block(r, c, nr, nc), a2_.block(r, c, nr, nc));
}

void QuatMatrix::set_block(Eigen::Index r, Eigen::Index c, const QuatMatrix& b) {
  if (r < 0 || c < 0 || r + b.rows() > rows() || c + b.cols() > cols()) {
    throw ShapeError("QuatMatrix::set_block out of range");
  }
  a1_.block(r, c, b.rows(), b.cols()) = b.a1_;
  a2_.block(r, c, b.rows(), b.cols()) = b.a2_;
}

QuatMatrix QuatMatrix::adjoint() const {
  return QuatMatrix(a1_.adjoint(), -a2_.transpose());
}

double QuatMatrix::max_abs() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a1_.size(); ++i) {
    const Complex c1 = a1_.data()[i];
    const Complex c2 = a2_.data()[i];
    m = std::max({m, std::abs(c1.real()), std::abs(c1.imag()), std::abs(c2.real()),
                  std::abs(c2.imag())});
  }
  return m;
}

QuatMatrix& QuatMatrix::operator+=(const QuatMatrix& o) {
  if (rows() != o.rows() || cols() != o.cols()) throw ShapeError("QuatMatrix +: shape mismatch");
  a1_ += o.a1_;
  a2_ += o.a2_;
  return *this;
}

QuatMatrix& QuatMatrix::operator-=(const QuatMatrix& o) {
  if (rows() != o.rows() || cols() != o.cols()) throw ShapeError("QuatMatrix -: shape mismatch");
  a1_ -= o.a1_;
  a2_ -= o.a2_;
  return *this;
}

QuatMatrix& QuatMatrix::operator*=(double s) {
  a1_ *= s;
  a2_ *= s;
  return *this;
}

QuatMatrix operator+(QuatMatrix a, const QuatMatrix& b) { return a += b; }
QuatMatrix operator-(QuatMatrix a, const QuatMatrix& b) { return a -= b; }
QuatMatrix operator-(const QuatMatrix& a) { return QuatMatrix(-a.a1(), -a.a2()); }
QuatMatrix operator*(double s, QuatMatrix a) { return a *= s; }

QuatMatrix operator*(const QuatMatrix& a, const QuatMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("qmat_mul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  ComplexMatrix c1 = a.a1() * b.a1() - a.a2() * b.a2().conjugate();
  ComplexMatrix c2 = a.a1() * b.a2() + a.a2() * b.a1().conjugate();
  return QuatMatrix(std::move(c1), std::move(c2));
}

// ---------------------------------------------------------------------------
// HermitianQuatMatrix

namespace {

double structure_scale(const QuatMatrix& m) { return std::max(1.0, m.max_abs()); }

}  // namespace

HermitianQuatMatrix::HermitianQuatMatrix(const QuatMatrix& m) {
  if (!m.is_square()) throw ShapeError("HermitianQuatMatrix: matrix is not square");
  const double tol = kStructureTolerance * structure_scale(m);
  const ComplexMatrix herm_defect = m.a1() - m.a1().adjoint();
  const ComplexMatrix skew_defect = m.a2() + m.a2().transpose();
  const double defect = std::max(herm_defect.cwiseAbs().maxCoeff(),
                                 skew_defect.cwiseAbs().maxCoeff());
  if (m.rows() > 0 && defect > tol) {
    throw PreconditionError("HermitianQuatMatrix: structure violation " + std::to_string(defect) +
                            " exceeds tolerance");
  }
  ComplexMatrix a1 = 0.5 * (m.a1() + m.a1().adjoint());
  ComplexMatrix a2 = 0.5 * (m.a2() - m.a2().transpose());
  m_ = QuatMatrix(std::move(a1), std::move(a2));
}

HermitianQuatMatrix::HermitianQuatMatrix(ComplexMatrix a1, ComplexMatrix a2)
    : HermitianQuatMatrix(QuatMatrix(std::move(a1), std::move(a2))) {}

HermitianQuatMatrix HermitianQuatMatrix::from_upper(const QuatMatrix& m) {
  if (!m.is_square()) throw ShapeError("from_upper: matrix is not square");
  const Eigen::Index n = m.rows();
  ComplexMatrix a1 = ComplexMatrix::Zero(n, n);
  ComplexMatrix a2 = ComplexMatrix::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    a1(r, r) = Complex(m.a1()(r, r).real(), 0.0);
    for (Eigen::Index c = r + 1; c < n; ++c) {
      a1(r, c) = m.a1()(r, c);
      a1(c, r) = std::conj(m.a1()(r, c));
      a2(r, c) = m.a2()(r, c);
      a2(c, r) = -m.a2()(r, c);
    }
  }
  return HermitianQuatMatrix(QuatMatrix(std::move(a1), std::move(a2)), Trusted{});
}

HermitianQuatMatrix HermitianQuatMatrix::zero(Eigen::Index n) {
  return HermitianQuatMatrix(QuatMatrix::zero(n, n), Trusted{});
}

HermitianQuatMatrix HermitianQuatMatrix::identity(Eigen::Index n) {
  return HermitianQuatMatrix(QuatMatrix::identity(n), Trusted{});
}

HermitianQuatMatrix& HermitianQuatMatrix::operator+=(const HermitianQuatMatrix& o) {
  m_ += o.m_;
  return *this;
}

HermitianQuatMatrix& HermitianQuatMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

HermitianQuatMatrix operator+(HermitianQuatMatrix a, const HermitianQuatMatrix& b) {
  return a += b;
}
HermitianQuatMatrix operator*(double s, HermitianQuatMatrix a) { return a *= s; }

// ---------------------------------------------------------------------------
// Embeddings

RealMatrix real_left_action(const QuatMatrix& a) {
  RealMatrix out(4 * a.rows(), 4 * a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out.block<4, 4>(4 * r, 4 * c) = left_multiplication_matrix(a.entry(r, c));
    }
  }
  return out;
}

ComplexMatrix complex_embed(const QuatMatrix& a) {
  if (!a.is_square()) throw ShapeError("complex_embed: matrix is not square");
  const Eigen::Index n = a.rows();
  ComplexMatrix e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = a.a1();
  e.topRightCorner(n, n) = -a.a2();
  e.bottomLeftCorner(n, n) = a.a2().conjugate();
  e.bottomRightCorner(n, n) = a.a1().conjugate();
  return e;
}

QuatMatrix from_complex_embedding(const ComplexMatrix& e) {
  if (e.rows() != e.cols() || e.rows() % 2 != 0) {
    throw ShapeError("from_complex_embedding: expected an even square matrix");
  }
  const Eigen::Index n = e.rows() / 2;
  return QuatMatrix(e.topLeftCorner(n, n), -e.topRightCorner(n, n));
}

RealMatrix real_embed(const ComplexMatrix& h) {
  if (h.rows() != h.cols()) throw ShapeError("real_embed: matrix is not square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double defect = h.size() == 0 ? 0.0 : (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-12 * scale) {
    throw PreconditionError("real_embed: matrix is not Hermitian (defect " +
                            std::to_string(defect) + ")");
  }
  const Eigen::Index m = h.rows();
  const RealMatrix s = h.real();
  const RealMatrix t = h.imag();
  RealMatrix r(2 * m, 2 * m);
  r.topLeftCorner(m, m) = s;
  r.topRightCorner(m, m) = -t;
  r.bottomLeftCorner(m, m) = t;
  r.bottomRightCorner(m, m) = s;
  // Exact symmetry; the defect above is at round-off level.
  return 0.5 * (r + r.transpose());
}

RealVector embedded_eigenvalues(const HermitianQuatMatrix& h) {
  if (h.size() == 0) return RealVector();
  const RealMatrix r = real_embed(complex_embed(h.matrix()));
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(r, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
  return es.eigenvalues();
}

std::string to_string(DefinitenessClass c) {
  switch (c) {
    case DefinitenessClass::positive_definite:
      return "positive_definite";
    case DefinitenessClass::negative_definite:
      return "negative_definite";
    case DefinitenessClass::indefinite:
      return "indefinite";
    case DefinitenessClass::semidefinite_degenerate:
      return "semidefinite_degenerate";
  }
  return "unknown";
}

Definiteness definiteness(const HermitianQuatMatrix& h) {
  if (h.size() == 0) throw ShapeError("definiteness: empty matrix");
  const RealVector ev = embedded_eigenvalues(h);
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  const double tol = 1e-10 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  DefinitenessClass kind;
  if (lo > tol) {
    kind = DefinitenessClass::positive_definite;
  } else if (hi < -tol) {
    kind = DefinitenessClass::negative_definite;
  } else if (lo < -tol && hi > tol) {
    kind = DefinitenessClass::indefinite;
  } else {
    kind = DefinitenessClass::semidefinite_degenerate;
  }
  return {kind, lo, hi};
}

double quadratic_form(const HermitianQuatMatrix& h, const QuatMatrix& xi) {
  if (xi.cols() != 1 || xi.rows() != h.size()) {
    throw ShapeError("quadratic_form: vector does not match matrix size");
  }
  const QuatMatrix v = xi.adjoint() * h.matrix() * xi;
  const Quaternion q = v.entry(0, 0);
  const double xi_sq = xi.a1().squaredNorm() + xi.a2().squaredNorm();
  const double scale =
      std::max(1.0, h.matrix().max_abs() * static_cast<double>(h.size()) * xi_sq);
  const double residue = std::max({std::abs(q.x), std::abs(q.y), std::abs(q.z)});
  if (residue > 1e-10 * scale) {
    throw NumericalError("quadratic_form: non-real result, residue " + std::to_string(residue));
  }
  return q.w;
}

HermitianQuatMatrix hermitian_sqrt(const HermitianQuatMatrix& h) {
  const ComplexMatrix e = complex_embed(h.matrix());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(e);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_sqrt: eigensolver failed");
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw PreconditionError("hermitian_sqrt: matrix is not positive semidefinite");
  }
  const RealVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const ComplexMatrix s =
      es.eigenvectors() * root.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  return HermitianQuatMatrix(from_complex_embedding(0.5 * (s + s.adjoint())));
}

double spectral_norm(const QuatMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  // The embedding of a rectangular matrix has the same block form.
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  ComplexMatrix e(2 * r, 2 * c);
  e.topLeftCorner(r, c) = a.a1();
  e.topRightCorner(r, c) = -a.a2();
  e.bottomLeftCorner(r, c) = a.a2().conjugate();
  e.bottomRightCorner(r, c) = a.a1().conjugate();
  Eigen::JacobiSVD<ComplexMatrix> svd(e);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Quaternion& q) { return nlohmann::json::array({q.w, q.x, q.y, q.z}); }

Quaternion quaternion_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw InputError("quaternion must be an array [w, x, y, z]");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw InputError("quaternion coefficients must be numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

nlohmann::json to_json(const QuatMatrix& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) entries.push_back(to_json(m.entry(r, c)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

QuatMatrix quat_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries")) {
    throw InputError("quaternion matrix must be an object with rows, cols, entries");
  }
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer()) {
    throw InputError("quaternion matrix rows/cols must be integers");
  }
  const auto rows = j["rows"].get<long long>();
  const auto cols = j["cols"].get<long long>();
  if (rows <= 0 || cols <= 0) throw InputError("quaternion matrix dimensions must be positive");
  const auto& entries = j["entries"];
  if (!entries.is_array() || static_cast<long long>(entries.size()) != rows * cols) {
    throw InputError("quaternion matrix entry count must equal rows * cols");
  }
  QuatMatrix m(rows, cols);
  for (long long r = 0; r < rows; ++r) {
    for (long long c = 0; c < cols; ++c) {
      m.set_entry(r, c, quaternion_from_json(entries[r * cols + c]));
    }
  }
  return m;
}

}  // namespace qvnn
