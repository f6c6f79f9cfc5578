#include "qvnn/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "qvnn/errors.hpp"

namespace qvnn {

VectorPath::VectorPath(std::vector<double> grid, std::vector<QuatMatrix> samples)
    : grid_(std::move(grid)), samples_(std::move(samples)) {
  if (grid_.size() < 2) throw InputError("path needs at least two grid points");
  if (grid_.size() != samples_.size()) throw InputError("grid and samples differ in length");
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    if (!std::isfinite(grid_[k])) throw InputError("non-finite grid point");
    if (k > 0 && !(grid_[k] > grid_[k - 1])) throw InputError("grid must be strictly increasing");
    const QuatMatrix& s = samples_[k];
    if (s.cols() != 1 || s.rows() != samples_.front().rows() || s.rows() == 0) {
      throw InputError("path samples must be column vectors of one size");
    }
    if (!s.a1().allFinite() || !s.a2().allFinite()) throw InputError("non-finite path sample");
  }
}

QuatMatrix VectorPath::at(std::size_t k, double theta) const {
  return (1.0 - theta) * samples_[k] + theta * samples_[k + 1];
}

double jensen_gap(const VectorPath& path, const HermitianQuatMatrix& m) {
  if (m.size() != path.dimension()) throw ShapeError("M does not match the path dimension");
  if (definiteness(m).kind != DefinitenessClass::positive_definite) {
    throw InputError("Jensen weight matrix must be positive definite");
  }
  const auto& grid = path.grid();
  QuatMatrix integral = QuatMatrix::zero(path.dimension(), 1);
  double weighted = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double h = grid[k + 1] - grid[k];
    const QuatMatrix lo = path.at(k, 0.0);
    const QuatMatrix mid = path.at(k, 0.5);
    const QuatMatrix hi = path.at(k, 1.0);
    integral += (h / 6.0) * (lo + 4.0 * mid + hi);
    weighted += (h / 6.0) * (quadratic_form(m, lo) + 4.0 * quadratic_form(m, mid) +
                             quadratic_form(m, hi));
  }
  return (path.b() - path.a()) * weighted - quadratic_form(m, integral);
}

void RcInstance::validate() const {
  const Eigen::Index n = p.size();
  if (xi.cols() != 1) throw InputError("xi must be a column vector");
  const Eigen::Index m = xi.rows();
  if (w1.rows() != n || w1.cols() != m || w2.rows() != n || w2.cols() != m) {
    throw InputError("W1 and W2 must be n x m");
  }
  if (x_coupling.rows() != n || x_coupling.cols() != n) throw InputError("X must be n x n");
  if (!(alpha_step > 0.0) || !(alpha_margin > 0.0) || alpha_margin >= 0.5) {
    throw InputError("invalid alpha grid");
  }
  if (definiteness(p).kind != DefinitenessClass::positive_definite) {
    throw InputError("P must be positive definite");
  }
  QuatMatrix block = QuatMatrix::zero(2 * n, 2 * n);
  block.set_block(0, 0, p);
  block.set_block(0, n, x_coupling);
  block.set_block(n, 0, x_coupling.adjoint());
  block.set_block(n, n, p);
  const RealVector eig = embedded_eigenvalues(HermitianQuatMatrix::from_upper(block));
  if (eig(0) < -1e-10) throw InputError("coupling block [[P, X], [X*, P]] is not semidefinite");
}

namespace {

std::vector<double> alpha_grid(const RcInstance& inst) {
  std::vector<double> alphas;
  const auto steps =
      static_cast<long>(std::floor((1.0 - 2.0 * inst.alpha_margin) / inst.alpha_step + 1e-9));
  for (long i = 0; i <= steps; ++i) alphas.push_back(inst.alpha_margin + i * inst.alpha_step);
  return alphas;
}

}  // namespace

std::vector<double> rc_lhs_on_grid(const RcInstance& inst) {
  inst.validate();
  const double qa = quadratic_form(inst.p, inst.w1 * inst.xi);
  const double qb = quadratic_form(inst.p, inst.w2 * inst.xi);
  std::vector<double> out;
  for (double alpha : alpha_grid(inst)) out.push_back(qa / alpha + qb / (1.0 - alpha));
  return out;
}

double rc_gap(const RcInstance& inst) {
  const std::vector<double> lhs = rc_lhs_on_grid(inst);
  const Eigen::Index n = inst.p.size();
  QuatMatrix block = QuatMatrix::zero(2 * n, 2 * n);
  block.set_block(0, 0, inst.p);
  block.set_block(0, n, inst.x_coupling);
  block.set_block(n, n, inst.p);
  QuatMatrix stacked = QuatMatrix::zero(2 * n, 1);
  stacked.set_block(0, 0, inst.w1 * inst.xi);
  stacked.set_block(n, 0, inst.w2 * inst.xi);
  const double rhs = quadratic_form(HermitianQuatMatrix::from_upper(block), stacked);
  return *std::min_element(lhs.begin(), lhs.end()) - rhs;
}

// ---------------------------------------------------------------------------

QuatMatrix random_quat_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale) {
  std::normal_distribution<double> g(0.0, scale);
  QuatMatrix out = QuatMatrix::zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out.set_entry(r, c, {g(rng), g(rng), g(rng), g(rng)});
  }
  return out;
}

HermitianQuatMatrix random_pd_matrix(std::mt19937_64& rng, Eigen::Index n, double floor) {
  const QuatMatrix g = random_quat_matrix(rng, n, n);
  return HermitianQuatMatrix::from_upper(g * g.adjoint() + floor * QuatMatrix::identity(n));
}

VectorPath random_path(std::mt19937_64& rng, Eigen::Index n, int segments) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::uniform_real_distribution<double> start(-1.0, 1.0);
  std::vector<double> grid{start(rng)};
  std::vector<QuatMatrix> samples{random_quat_matrix(rng, n, 1)};
  for (int k = 0; k < segments; ++k) {
    grid.push_back(grid.back() + u(rng));
    samples.push_back(random_quat_matrix(rng, n, 1));
  }
  return VectorPath(std::move(grid), std::move(samples));
}

RcInstance random_rc_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  RcInstance inst;
  inst.p = random_pd_matrix(rng, n);
  QuatMatrix k = random_quat_matrix(rng, n, n);
  std::uniform_real_distribution<double> shrink(0.0, 1.0);
  const double norm = spectral_norm(k);
  if (norm > 0.0) k *= shrink(rng) / norm;
  const HermitianQuatMatrix root = hermitian_sqrt(inst.p);
  inst.x_coupling = root.matrix() * k * root.matrix();
  inst.xi = random_quat_matrix(rng, m, 1);
  inst.w1 = random_quat_matrix(rng, n, m);
  inst.w2 = random_quat_matrix(rng, n, m);
  return inst;
}

namespace {

void accumulate(GapStatistics& s, double gap) {
  s.min = s.count == 0 ? gap : std::min(s.min, gap);
  s.mean += (gap - s.mean) / (s.count + 1);
  ++s.count;
}

}  // namespace

OracleReport run_oracle_batch(int count, std::uint64_t seed) {
  if (count < 0) throw InputError("sample count must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> segs(1, 12);
  OracleReport report;
  for (int i = 0; i < count; ++i) {
    const Eigen::Index n = dim(rng);
    const VectorPath path = random_path(rng, n, segs(rng));
    const HermitianQuatMatrix m = random_pd_matrix(rng, n);
    const double gap = jensen_gap(path, m);
    accumulate(report.jensen, gap);
    if (gap < -1e-9) report.all_nonnegative = false;
  }
  for (int i = 0; i < count; ++i) {
    const Eigen::Index n = dim(rng);
    const Eigen::Index m = dim(rng);
    const double gap = rc_gap(random_rc_instance(rng, n, m));
    accumulate(report.rc, gap);
    if (gap < -1e-9) report.all_nonnegative = false;
  }
  return report;
}

}  // namespace qvnn
