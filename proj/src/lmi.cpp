#include "qvnn/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qvnn/errors.hpp"

namespace qvnn {

DecisionVars DecisionVars::zeros(int n) {
  DecisionVars v;
  for (auto& m : v.m) m = RealVector::Zero(n);
  for (auto& p : v.p) p = HermitianQuatMatrix::zero(n);
  for (auto& q : v.q) q = HermitianQuatMatrix::zero(n);
  for (auto& r : v.r) r = HermitianQuatMatrix::zero(n);
  v.u = v.v = v.s1 = v.s2 = QuatMatrix::zero(n, n);
  return v;
}

DecisionVars DecisionVars::scaled(double t) const {
  DecisionVars out = *this;
  for (auto& m : out.m) m *= t;
  for (auto& p : out.p) p *= t;
  for (auto& q : out.q) q *= t;
  for (auto& r : out.r) r *= t;
  out.u *= t;
  out.v *= t;
  out.s1 *= t;
  out.s2 *= t;
  return out;
}

std::string StateVectorLayout::label(StateBlock b) {
  switch (b) {
    case StateBlock::x: return "x(t)";
    case StateBlock::x_dot: return "x'(t)";
    case StateBlock::x_leak: return "x(t-delta)";
    case StateBlock::x_d1t: return "x(t-d1(t))";
    case StateBlock::x_dt: return "x(t-d(t))";
    case StateBlock::x_d1: return "x(t-d1)";
    case StateBlock::x_d: return "x(t-d)";
    case StateBlock::f_x: return "f(x(t))";
    case StateBlock::f_d1t: return "f(x(t-d1(t)))";
    case StateBlock::f_dt: return "f(x(t-d(t)))";
    case StateBlock::leak_integral: return "int x";
  }
  return "?";
}

std::string to_string(Sense s) {
  return s == Sense::positive_definite ? "positive_definite" : "negative_definite";
}

// ---------------------------------------------------------------------------
// Scalar parameterization

namespace {

const std::array<std::string, 3> kMNames{"M1", "M2", "M3"};
const std::array<std::string, 3> kPNames{"P1", "P2", "P3"};
const std::array<std::string, 6> kQNames{"Q1", "Q2", "Q3", "Q4", "Q5", "Q6"};
const std::array<std::string, 2> kRNames{"R1", "R2"};
const std::array<std::string, 4> kFreeNames{"U", "V", "S1", "S2"};

void append_hermitian(std::vector<VarOrigin>& map, const std::string& name, int n) {
  for (int i = 0; i < n; ++i) map.push_back({name, i, i, VarComponent::diagonal});
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      map.push_back({name, r, c, VarComponent::a1_real});
      map.push_back({name, r, c, VarComponent::a1_imag});
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      map.push_back({name, r, c, VarComponent::a2_real});
      map.push_back({name, r, c, VarComponent::a2_imag});
    }
  }
}

void append_general(std::vector<VarOrigin>& map, const std::string& name, int n) {
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      map.push_back({name, r, c, VarComponent::a1_real});
      map.push_back({name, r, c, VarComponent::a1_imag});
      map.push_back({name, r, c, VarComponent::a2_real});
      map.push_back({name, r, c, VarComponent::a2_imag});
    }
  }
}

// Cursor over the flat vector; reads in build_var_map order.
class Reader {
 public:
  explicit Reader(const RealVector& x) : x_(x) {}
  double next() {
    if (pos_ >= x_.size()) throw ShapeError("devectorize: vector too short");
    return x_(pos_++);
  }
  Eigen::Index pos() const { return pos_; }

 private:
  const RealVector& x_;
  Eigen::Index pos_ = 0;
};

HermitianQuatMatrix read_hermitian(Reader& rd, int n) {
  ComplexMatrix a1 = ComplexMatrix::Zero(n, n);
  ComplexMatrix a2 = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) a1(i, i) = rd.next();
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      const double re = rd.next();
      const double im = rd.next();
      a1(r, c) = Complex(re, im);
      a1(c, r) = Complex(re, -im);
    }
  }
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      const double re = rd.next();
      const double im = rd.next();
      a2(r, c) = Complex(re, im);
      a2(c, r) = -Complex(re, im);
    }
  }
  return HermitianQuatMatrix(QuatMatrix(std::move(a1), std::move(a2)));
}

QuatMatrix read_general(Reader& rd, int n) {
  QuatMatrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double w = rd.next();
      const double x = rd.next();
      const double y = rd.next();
      const double z = rd.next();
      m.set_entry(r, c, {w, x, y, z});
    }
  }
  return m;
}

void write_hermitian(std::vector<double>& out, const HermitianQuatMatrix& h) {
  const auto& m = h.matrix();
  const auto n = m.rows();
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(m.a1()(i, i).real());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = r + 1; c < n; ++c) {
      out.push_back(m.a1()(r, c).real());
      out.push_back(m.a1()(r, c).imag());
    }
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = r + 1; c < n; ++c) {
      out.push_back(m.a2()(r, c).real());
      out.push_back(m.a2()(r, c).imag());
    }
  }
}

void write_general(std::vector<double>& out, const QuatMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Quaternion q = m.entry(r, c);
      out.insert(out.end(), {q.w, q.x, q.y, q.z});
    }
  }
}

}  // namespace

std::vector<VarOrigin> build_var_map(int n) {
  std::vector<VarOrigin> map;
  for (const auto& name : kMNames) {
    for (int i = 0; i < n; ++i) map.push_back({name, i, i, VarComponent::diagonal});
  }
  for (const auto& name : kPNames) append_hermitian(map, name, n);
  for (const auto& name : kQNames) append_hermitian(map, name, n);
  for (const auto& name : kRNames) append_hermitian(map, name, n);
  for (const auto& name : kFreeNames) append_general(map, name, n);
  return map;
}

int num_scalar_vars(int n) { return 3 * n + 11 * (n * n + n * (n - 1)) + 4 * 4 * n * n; }

RealVector vectorize(const DecisionVars& vars) {
  std::vector<double> out;
  for (const auto& m : vars.m) out.insert(out.end(), m.data(), m.data() + m.size());
  for (const auto& p : vars.p) write_hermitian(out, p);
  for (const auto& q : vars.q) write_hermitian(out, q);
  for (const auto& r : vars.r) write_hermitian(out, r);
  for (const QuatMatrix* g : {&vars.u, &vars.v, &vars.s1, &vars.s2}) write_general(out, *g);
  return Eigen::Map<const RealVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

DecisionVars devectorize(const RealVector& x, int n) {
  if (x.size() != num_scalar_vars(n)) {
    throw ShapeError("devectorize: expected " + std::to_string(num_scalar_vars(n)) +
                     " scalars, got " + std::to_string(x.size()));
  }
  Reader rd(x);
  DecisionVars v;
  for (auto& m : v.m) {
    m.resize(n);
    for (int i = 0; i < n; ++i) m(i) = rd.next();
  }
  for (auto& p : v.p) p = read_hermitian(rd, n);
  for (auto& q : v.q) q = read_hermitian(rd, n);
  for (auto& r : v.r) r = read_hermitian(rd, n);
  v.u = read_general(rd, n);
  v.v = read_general(rd, n);
  v.s1 = read_general(rd, n);
  v.s2 = read_general(rd, n);
  return v;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

void check_vars(const DecisionVars& vars, int n) {
  auto bad = [n](const QuatMatrix& m) { return m.rows() != n || m.cols() != n; };
  for (const auto& m : vars.m) {
    if (m.size() != n) throw ShapeError("decision variable M has wrong size");
  }
  for (const auto& p : vars.p) {
    if (bad(p.matrix())) throw ShapeError("decision variable P has wrong size");
  }
  for (const auto& q : vars.q) {
    if (bad(q.matrix())) throw ShapeError("decision variable Q has wrong size");
  }
  for (const auto& r : vars.r) {
    if (bad(r.matrix())) throw ShapeError("decision variable R has wrong size");
  }
  if (bad(vars.u) || bad(vars.v) || bad(vars.s1) || bad(vars.s2)) {
    throw ShapeError("decision variable U/V/S has wrong size");
  }
}

HermitianQuatMatrix coupling_block(const HermitianQuatMatrix& r, const QuatMatrix& x) {
  const auto n = r.size();
  QuatMatrix m(2 * n, 2 * n);
  m.set_block(0, 0, r);
  m.set_block(0, n, x);
  m.set_block(n, n, r);
  return HermitianQuatMatrix::from_upper(m);
}

}  // namespace

std::pair<HermitianQuatMatrix, HermitianQuatMatrix> assemble_constraint_3_4(
    const DecisionVars& vars) {
  check_vars(vars, vars.n());
  return {coupling_block(vars.r[0], vars.u), coupling_block(vars.r[1], vars.v)};
}

const std::vector<std::pair<int, int>>& omega_nonzero_blocks() {
  static const std::vector<std::pair<int, int>> blocks{
      {0, 0}, {0, 3}, {0, 5},  {0, 7}, {0, 9}, {0, 10}, {1, 1}, {1, 2}, {1, 7},
      {1, 9}, {2, 2}, {2, 7},  {2, 9}, {3, 3}, {3, 5},  {4, 4}, {4, 5}, {4, 6},
      {5, 5}, {5, 6}, {6, 6},  {7, 7}, {7, 10}, {8, 8}, {9, 9}, {9, 10}, {10, 10}};
  return blocks;
}

HermitianQuatMatrix assemble_omega(const NetworkModel& model, const DecisionVars& vars) {
  const int n = model.n;
  if (vars.n() != n) throw ShapeError("assemble_omega: variables do not match model size");
  check_vars(vars, n);
  if (model.a.rows() != n || model.b.rows() != n) {
    throw ShapeError("assemble_omega: interconnection matrices do not match model size");
  }

  const QuatMatrix c = model.c_matrix();
  const QuatMatrix g = model.gamma_matrix();
  const QuatMatrix& a = model.a;
  const QuatMatrix& b = model.b;
  const QuatMatrix& p1 = vars.p[0];
  const QuatMatrix& p2 = vars.p[1];
  const QuatMatrix& p3 = vars.p[2];
  const QuatMatrix& q1 = vars.q[0];
  const QuatMatrix& q2 = vars.q[1];
  const QuatMatrix& q3 = vars.q[2];
  const QuatMatrix& q4 = vars.q[3];
  const QuatMatrix& q5 = vars.q[4];
  const QuatMatrix& q6 = vars.q[5];
  const QuatMatrix& r1 = vars.r[0];
  const QuatMatrix& r2 = vars.r[1];
  const QuatMatrix& u = vars.u;
  const QuatMatrix& v = vars.v;
  const QuatMatrix& s1 = vars.s1;
  const QuatMatrix& s2 = vars.s2;
  const QuatMatrix m1 = QuatMatrix::real_diagonal(vars.m[0]);
  const QuatMatrix m2 = QuatMatrix::real_diagonal(vars.m[1]);
  const QuatMatrix m3 = QuatMatrix::real_diagonal(vars.m[2]);
  const double delta = model.delta;
  const double mu1 = model.mu1;
  const double mu = model.mu();
  const QuatMatrix u_h = u.adjoint();
  const QuatMatrix v_h = v.adjoint();
  const QuatMatrix s1_h = s1.adjoint();
  const QuatMatrix s2_h = s2.adjoint();

  QuatMatrix omega(11 * n, 11 * n);
  auto put = [&](int i, int j, const QuatMatrix& blk) { omega.set_block(i * n, j * n, blk); };

  put(0, 0, -(p1 * c) - c * p1 + p2 + (delta * delta) * p3 + q1 + q3 + q5 + q6 - r1 +
                g * m1 * g);
  put(0, 3, r1 - u_h);
  put(0, 5, u_h);
  put(0, 7, p1 * a);
  put(0, 9, p1 * b);
  put(0, 10, c * p1 * c);
  put(1, 1, (model.d1 * model.d1) * r1 + (model.d2 * model.d2) * r2 - s1 - s1_h);
  put(1, 2, -(s1_h * c) - s2);
  put(1, 7, s1_h * a);
  put(1, 9, s1_h * b);
  put(2, 2, -p2 - c * s2 - s2_h * c);
  put(2, 7, s2_h * a);
  put(2, 9, s2_h * b);
  put(3, 3, -(1.0 - mu1) * q1 - r1 - r1.adjoint() + u + u_h + g * m2 * g);
  put(3, 5, r1 - u_h);
  put(4, 4, -(1.0 - mu) * q3 - r2 - r2.adjoint() + v + v_h + g * m3 * g);
  put(4, 5, r2.adjoint() - v);
  put(4, 6, r2 - v_h);
  put(5, 5, -q5 - r1 - r2);
  put(5, 6, v_h);
  put(6, 6, -q6 - r2);
  put(7, 7, q2 + q4 - m1);
  put(7, 10, -(a.adjoint() * p1 * c));
  put(8, 8, -(1.0 - mu1) * q2 - m2);
  put(9, 9, -(1.0 - mu) * q4 - m3);
  put(9, 10, -(b.adjoint() * p1 * c));
  put(10, 10, -p3);

  return HermitianQuatMatrix::from_upper(omega);
}

std::vector<QuatConstraint> criterion_constraints(const NetworkModel& model) {
  std::vector<QuatConstraint> out;
  const int n = model.n;
  for (int k = 0; k < 3; ++k) {
    out.push_back({kMNames[k], Sense::positive_definite, [k, n](const DecisionVars& v) {
                     if (v.m[k].size() != n) throw ShapeError("M has wrong size");
                     return HermitianQuatMatrix::from_upper(QuatMatrix::real_diagonal(v.m[k]));
                   }});
  }
  for (int k = 0; k < 3; ++k) {
    out.push_back({kPNames[k], Sense::positive_definite,
                   [k](const DecisionVars& v) { return v.p[k]; }});
  }
  for (int k = 0; k < 6; ++k) {
    out.push_back({kQNames[k], Sense::positive_definite,
                   [k](const DecisionVars& v) { return v.q[k]; }});
  }
  for (int k = 0; k < 2; ++k) {
    out.push_back({kRNames[k], Sense::positive_definite,
                   [k](const DecisionVars& v) { return v.r[k]; }});
  }
  out.push_back({"[R1 U; U* R1]", Sense::positive_definite,
                 [](const DecisionVars& v) { return assemble_constraint_3_4(v).first; }});
  out.push_back({"[R2 V; V* R2]", Sense::positive_definite,
                 [](const DecisionVars& v) { return assemble_constraint_3_4(v).second; }});
  out.push_back({"Omega", Sense::negative_definite,
                 [model](const DecisionVars& v) { return assemble_omega(model, v); }});
  return out;
}

// ---------------------------------------------------------------------------
// Lowering

RealMatrix AffineLmi::evaluate(const RealVector& x) const {
  RealMatrix g = constant;
  for (const auto& [idx, f] : coeffs) {
    if (idx < 0 || idx >= x.size()) throw ShapeError("AffineLmi::evaluate: variable out of range");
    g += x(idx) * f;
  }
  return g;
}

QuatAffineLmi linearize(const QuatConstraint& c, int n) {
  const int nv = num_scalar_vars(n);
  QuatAffineLmi out{c.name, c.sense, c.build(DecisionVars::zeros(n)), {}};
  out.coeffs.reserve(nv);
  RealVector e = RealVector::Zero(nv);
  for (int i = 0; i < nv; ++i) {
    e(i) = 1.0;
    HermitianQuatMatrix h = c.build(devectorize(e, n));
    e(i) = 0.0;
    // Subtract the constant so a non-homogeneous form still linearizes exactly.
    out.coeffs.push_back(HermitianQuatMatrix(h.matrix() - out.constant.matrix()));
  }
  return out;
}

ComplexAffineLmi lower_to_complex(const QuatAffineLmi& q) {
  ComplexAffineLmi out{q.name, q.sense, complex_embed(q.constant.matrix()), {}};
  out.coeffs.reserve(q.coeffs.size());
  for (const auto& c : q.coeffs) out.coeffs.push_back(complex_embed(c.matrix()));
  return out;
}

StandardSdp lower_to_real(const std::vector<ComplexAffineLmi>& lmis, int num_vars,
                          std::vector<VarOrigin> var_map) {
  StandardSdp sdp;
  sdp.num_vars = num_vars;
  sdp.var_map = std::move(var_map);
  for (const auto& lmi : lmis) {
    if (static_cast<int>(lmi.coeffs.size()) != num_vars) {
      throw ShapeError("lower_to_real: coefficient count does not match num_vars");
    }
    AffineLmi out{lmi.name, lmi.sense, real_embed(lmi.constant), {}};
    for (int i = 0; i < num_vars; ++i) {
      if (lmi.coeffs[i].cwiseAbs().maxCoeff() == 0.0) continue;
      out.coeffs.emplace_back(i, real_embed(lmi.coeffs[i]));
    }
    sdp.lmis.push_back(std::move(out));
  }
  return sdp;
}

StandardSdp build_criterion_sdp(const NetworkModel& model) {
  model.validate();
  std::vector<ComplexAffineLmi> complex_lmis;
  for (const auto& c : criterion_constraints(model)) {
    QuatAffineLmi q = linearize(c, model.n);
    if (q.constant.matrix().max_abs() != 0.0) {
      throw PreconditionError("criterion constraint '" + c.name + "' is not homogeneous");
    }
    complex_lmis.push_back(lower_to_complex(q));
  }
  return lower_to_real(complex_lmis, num_scalar_vars(model.n), build_var_map(model.n));
}

// ---------------------------------------------------------------------------
// Verification

CertificateReport verify_certificate(const NetworkModel& model, const DecisionVars& vars,
                                     double margin) {
  if (vars.n() != model.n) throw ShapeError("verify_certificate: size mismatch");
  CertificateReport report{{}, std::numeric_limits<double>::infinity(), true};
  for (const auto& c : criterion_constraints(model)) {
    const Definiteness d = definiteness(c.build(vars));
    const double slack =
        c.sense == Sense::positive_definite ? d.min_eigenvalue : -d.max_eigenvalue;
    report.checks.push_back({c.name, c.sense, d.min_eigenvalue, d.max_eigenvalue, slack});
    report.worst_slack = std::min(report.worst_slack, slack);
  }
  report.valid = report.worst_slack > 0.0 && report.worst_slack >= margin;
  return report;
}

nlohmann::json certificate_to_json(const DecisionVars& vars) {
  nlohmann::json j;
  j["n"] = vars.n();
  for (int k = 0; k < 3; ++k) {
    j[kMNames[k]] = std::vector<double>(vars.m[k].data(), vars.m[k].data() + vars.m[k].size());
  }
  for (int k = 0; k < 3; ++k) j[kPNames[k]] = to_json(vars.p[k].matrix());
  for (int k = 0; k < 6; ++k) j[kQNames[k]] = to_json(vars.q[k].matrix());
  for (int k = 0; k < 2; ++k) j[kRNames[k]] = to_json(vars.r[k].matrix());
  j["U"] = to_json(vars.u);
  j["V"] = to_json(vars.v);
  j["S1"] = to_json(vars.s1);
  j["S2"] = to_json(vars.s2);
  return j;
}

DecisionVars certificate_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer()) {
    throw InputError("certificate must be an object with integer n");
  }
  const int n = j["n"].get<int>();
  if (n <= 0) throw InputError("certificate n must be positive");
  auto field = [&](const std::string& key) -> const nlohmann::json& {
    if (!j.contains(key)) throw InputError("certificate is missing '" + key + "'");
    return j[key];
  };
  auto square = [&](const std::string& key) {
    QuatMatrix m = quat_matrix_from_json(field(key));
    if (m.rows() != n || m.cols() != n) throw ShapeError("certificate matrix " + key + " is not n x n");
    return m;
  };
  DecisionVars v;
  for (int k = 0; k < 3; ++k) {
    const auto& arr = field(kMNames[k]);
    if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
      throw InputError("certificate " + kMNames[k] + " must have n entries");
    }
    v.m[k].resize(n);
    for (int i = 0; i < n; ++i) v.m[k](i) = arr[i].get<double>();
  }
  for (int k = 0; k < 3; ++k) v.p[k] = HermitianQuatMatrix(square(kPNames[k]));
  for (int k = 0; k < 6; ++k) v.q[k] = HermitianQuatMatrix(square(kQNames[k]));
  for (int k = 0; k < 2; ++k) v.r[k] = HermitianQuatMatrix(square(kRNames[k]));
  v.u = square("U");
  v.v = square("V");
  v.s1 = square("S1");
  v.s2 = square("S2");
  return v;
}

}  // namespace qvnn
