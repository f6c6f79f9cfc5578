#pragma once

// Helpers shared by the unit tests and the acceptance runner: random
// instances, a per-entry quaternion matrix type used as a brute-force
// oracle, and an independent assembly of Omega from the derivative
// estimates of the Lyapunov functional.

#include <random>
#include <vector>

#include "qvnn/lmi.hpp"
#include "qvnn/network_model.hpp"
#include "qvnn/oracles.hpp"
#include "qvnn/quaternion.hpp"

namespace qvnn::testing {

inline Quaternion random_quaternion(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng), g(rng), g(rng)};
}

inline HermitianQuatMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  return HermitianQuatMatrix::from_upper(random_quat_matrix(rng, n, n));
}

inline DecisionVars random_vars(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  DecisionVars v = DecisionVars::zeros(n);
  for (auto& m : v.m) {
    for (int i = 0; i < n; ++i) m(i) = pos(rng);
  }
  for (auto& p : v.p) p = random_hermitian(rng, n);
  for (auto& q : v.q) q = random_hermitian(rng, n);
  for (auto& r : v.r) r = random_hermitian(rng, n);
  v.u = random_quat_matrix(rng, n, n);
  v.v = random_quat_matrix(rng, n, n);
  v.s1 = random_quat_matrix(rng, n, n);
  v.s2 = random_quat_matrix(rng, n, n);
  return v;
}

inline NetworkModel random_model(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(0.2, 3.0);
  std::uniform_real_distribution<double> rate(0.0, 0.9);
  NetworkModel m;
  m.n = n;
  m.c.resize(n);
  m.gamma.resize(n);
  for (int i = 0; i < n; ++i) {
    m.c(i) = pos(rng);
    m.gamma(i) = pos(rng);
  }
  m.activation_gain = m.gamma;
  m.a = random_quat_matrix(rng, n, n);
  m.b = random_quat_matrix(rng, n, n);
  m.delta = pos(rng);
  m.d1 = pos(rng);
  m.d2 = pos(rng);
  m.mu1 = rate(rng) / 2;
  m.mu2 = rate(rng) / 2;
  return m;
}

// ---------------------------------------------------------------------------
// Per-entry quaternion matrices

using Grid = std::vector<std::vector<Quaternion>>;

inline Grid to_grid(const QuatMatrix& m) {
  Grid g(m.rows(), std::vector<Quaternion>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) g[r][c] = m.entry(r, c);
  }
  return g;
}

inline Grid grid_zero(std::size_t r, std::size_t c) {
  return Grid(r, std::vector<Quaternion>(c));
}

inline Grid grid_mul(const Grid& a, const Grid& b) {
  Grid out = grid_zero(a.size(), b.front().size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < b.front().size(); ++c) {
      Quaternion acc;
      for (std::size_t k = 0; k < b.size(); ++k) acc += quat_mul(a[r][k], b[k][c]);
      out[r][c] = acc;
    }
  }
  return out;
}

inline Grid grid_adjoint(const Grid& a) {
  Grid out = grid_zero(a.front().size(), a.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) out[c][r] = quat_conj(a[r][c]);
  }
  return out;
}

inline Grid grid_add(Grid a, const Grid& b, double s = 1.0) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) a[r][c] += s * b[r][c];
  }
  return a;
}

inline Grid grid_diag(const RealVector& d) {
  Grid out = grid_zero(d.size(), d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) out[i][i] = Quaternion(d(i));
  return out;
}

inline double grid_distance(const Grid& a, const QuatMatrix& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      worst = std::max(worst, (a[r][c] - b.entry(r, c)).norm());
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Omega from the derivative estimates, term by term. Blocks are 0-based:
// 0 x, 1 x', 2 x(t-delta), 3 x(t-d1(t)), 4 x(t-d(t)), 5 x(t-d1), 6 x(t-d),
// 7 f(x), 8 f(x(t-d1(t))), 9 f(x(t-d(t))), 10 integral over the leak window.

class OmegaTerms {
 public:
  explicit OmegaTerms(int n) : n_(n), blocks_(11, std::vector<Grid>(11, grid_zero(n, n))) {}

  // eta_i* X eta_i
  void diag(int i, const Grid& x) { blocks_[i][i] = grid_add(blocks_[i][i], x); }
  // eta_i* X eta_j + eta_j* X* eta_i
  void pair(int i, int j, const Grid& x) {
    blocks_[i][j] = grid_add(blocks_[i][j], x);
    blocks_[j][i] = grid_add(blocks_[j][i], grid_adjoint(x));
  }
  // Subtracts the quadratic form of a 3x3 block matrix on blocks (i0, i1, i2).
  void subtract3(const int idx[3], const Grid k[3][3]) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        blocks_[idx[a]][idx[b]] = grid_add(blocks_[idx[a]][idx[b]], k[a][b], -1.0);
      }
    }
  }
  const Grid& block(int i, int j) const { return blocks_[i][j]; }

 private:
  int n_;
  std::vector<std::vector<Grid>> blocks_;
};

inline OmegaTerms omega_from_derivation(const NetworkModel& model, const DecisionVars& v) {
  const int n = model.n;
  const Grid c = grid_diag(model.c);
  const Grid gm = grid_diag(model.gamma);
  const Grid a = to_grid(model.a);
  const Grid b = to_grid(model.b);
  const Grid p1 = to_grid(v.p[0]), p2 = to_grid(v.p[1]), p3 = to_grid(v.p[2]);
  Grid q[6];
  for (int i = 0; i < 6; ++i) q[i] = to_grid(v.q[i]);
  const Grid r1 = to_grid(v.r[0]), r2 = to_grid(v.r[1]);
  const Grid u = to_grid(v.u), vv = to_grid(v.v);
  const Grid s1 = to_grid(v.s1), s2 = to_grid(v.s2);
  const Grid m1 = grid_diag(v.m[0]), m2 = grid_diag(v.m[1]), m3 = grid_diag(v.m[2]);
  const double mu = model.mu1 + model.mu2;
  auto neg = [](const Grid& g) { return grid_add(grid_zero(g.size(), g.size()), g, -1.0); };
  auto scale = [](const Grid& g, double s) { return grid_add(grid_zero(g.size(), g.size()), g, s); };
  auto mul = grid_mul;
  auto adj = grid_adjoint;
  auto add = [](const Grid& x, const Grid& y) { return grid_add(x, y); };
  auto sub = [](const Grid& x, const Grid& y) { return grid_add(x, y, -1.0); };

  OmegaTerms t(n);
  // Derivative of the leak-corrected quadratic term.
  t.diag(0, neg(add(mul(p1, c), mul(c, p1))));
  t.pair(0, 7, mul(p1, a));
  t.pair(0, 9, mul(p1, b));
  t.pair(10, 0, mul(mul(c, p1), c));
  t.pair(10, 7, neg(mul(mul(c, p1), a)));
  t.pair(10, 9, neg(mul(mul(c, p1), b)));
  // Leak-window integrals (Jensen on the double integral).
  t.diag(0, add(p2, scale(p3, model.delta * model.delta)));
  t.diag(2, neg(p2));
  t.diag(10, neg(p3));
  // Delay-window integrals.
  t.diag(0, add(add(q[0], q[2]), add(q[4], q[5])));
  t.diag(5, neg(q[4]));
  t.diag(6, neg(q[5]));
  t.diag(3, scale(q[0], -(1.0 - model.mu1)));
  t.diag(4, scale(q[2], -(1.0 - mu)));
  t.diag(7, add(q[1], q[3]));
  t.diag(8, scale(q[1], -(1.0 - model.mu1)));
  t.diag(9, scale(q[3], -(1.0 - mu)));
  // Derivative double integrals and the reciprocally convex bounds.
  t.diag(1, add(scale(r1, model.d1 * model.d1), scale(r2, model.d2 * model.d2)));
  {
    const Grid us = adj(u);
    const Grid k[3][3] = {{r1, neg(us), add(neg(r1), us)},
                          {neg(u), r1, add(neg(r1), u)},
                          {add(neg(r1), u), add(neg(r1), us), sub(sub(scale(r1, 2.0), u), us)}};
    const int idx[3] = {0, 5, 3};
    t.subtract3(idx, k);
  }
  {
    const Grid vs = adj(vv);
    const Grid k[3][3] = {{r2, neg(vs), add(neg(r2), vs)},
                          {neg(vv), r2, add(neg(r2), vv)},
                          {add(neg(r2), vv), add(neg(r2), vs), sub(sub(scale(r2, 2.0), vv), vs)}};
    const int idx[3] = {5, 6, 4};
    t.subtract3(idx, k);
  }
  // Sector conditions of the activations.
  t.diag(0, mul(mul(gm, m1), gm));
  t.diag(7, neg(m1));
  t.diag(3, mul(mul(gm, m2), gm));
  t.diag(8, neg(m2));
  t.diag(4, mul(mul(gm, m3), gm));
  t.diag(9, neg(m3));
  // Free-weighting identity.
  t.diag(1, neg(add(s1, adj(s1))));
  t.pair(1, 2, neg(add(mul(adj(s1), c), s2)));
  t.pair(1, 7, mul(adj(s1), a));
  t.pair(1, 9, mul(adj(s1), b));
  t.diag(2, neg(add(mul(c, s2), mul(adj(s2), c))));
  t.pair(2, 7, mul(adj(s2), a));
  t.pair(2, 9, mul(adj(s2), b));
  return t;
}

}  // namespace qvnn::testing
