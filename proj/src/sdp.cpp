#include "qvnn/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "qvnn/errors.hpp"

namespace qvnn {

void SolverConfig::validate() const {
  if (!(margin_tolerance > 0.0) || !(newton_tolerance > 0.0) || !(relative_gap > 0.0)) {
    throw InputError("solver tolerances must be positive");
  }
  if (!(barrier_shrink > 0.0 && barrier_shrink < 1.0)) {
    throw InputError("barrier_shrink must lie in (0, 1)");
  }
  if (!(trust_radius > 0.0)) throw InputError("trust_radius must be positive");
  if (max_outer_iters <= 0 || max_newton_iters <= 0) {
    throw InputError("iteration limits must be positive");
  }
}

std::string to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::feasible: return "feasible";
    case FeasibilityStatus::infeasible_at_tolerance: return "infeasible_at_tolerance";
    case FeasibilityStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

// Nonzero rows/columns of a symmetric coefficient and the compact matrix on them.
struct Support {
  std::vector<int> index;
  RealMatrix compact;
};

// One LMI oriented as G(x) = constant + sum x_i coeff_i > weight * t * I.
struct Block {
  RealMatrix constant;
  double weight = 1.0;
  std::vector<int> vars;
  std::vector<RealMatrix> coeffs;
  std::vector<Support> support;
};

bool is_symmetric(const RealMatrix& m) {
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

std::vector<Block> oriented_blocks(const StandardSdp& sdp, bool allow_constant) {
  std::vector<Block> blocks;
  blocks.reserve(sdp.lmis.size());
  for (const auto& lmi : sdp.lmis) {
    const int d = lmi.dimension();
    if (lmi.constant.cols() != d) throw InputError("LMI '" + lmi.name + "' is not square");
    if (!is_symmetric(lmi.constant)) {
      throw InputError("LMI '" + lmi.name + "' has a non-symmetric constant term");
    }
    if (!allow_constant && lmi.constant.size() > 0 && lmi.constant.cwiseAbs().maxCoeff() != 0.0) {
      throw InputError("LMI '" + lmi.name + "' is not homogeneous");
    }
    if (!(lmi.margin_weight > 0.0) || !std::isfinite(lmi.margin_weight)) {
      throw InputError("LMI '" + lmi.name + "' has a non-positive margin weight");
    }
    const double sign = lmi.sense == Sense::positive_definite ? 1.0 : -1.0;
    Block b{sign * lmi.constant, lmi.margin_weight, {}, {}, {}};
    for (const auto& [idx, f] : lmi.coeffs) {
      if (idx < 0 || idx >= sdp.num_vars) {
        throw InputError("LMI '" + lmi.name + "' references an unknown variable");
      }
      if (f.rows() != d || f.cols() != d) {
        throw InputError("LMI '" + lmi.name + "' has a coefficient of the wrong size");
      }
      if (!is_symmetric(f)) {
        throw InputError("LMI '" + lmi.name + "' has a non-symmetric coefficient");
      }
      b.vars.push_back(idx);
      b.coeffs.push_back(sign * f);
      Support sup;
      for (int r = 0; r < d; ++r) {
        if ((f.row(r).array() != 0.0).any()) sup.index.push_back(r);
      }
      const auto k = static_cast<Eigen::Index>(sup.index.size());
      sup.compact.resize(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) sup.compact(i, j) = sign * f(sup.index[i], sup.index[j]);
      }
      b.support.push_back(std::move(sup));
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

RealVector box_bounds(const StandardSdp& sdp, double rho) {
  if (sdp.var_bound.size() == 0) return RealVector::Constant(sdp.num_vars, rho);
  if (sdp.var_bound.size() != sdp.num_vars) throw InputError("var_bound has the wrong size");
  for (Eigen::Index i = 0; i < sdp.var_bound.size(); ++i) {
    if (!(sdp.var_bound(i) > 0.0) || !std::isfinite(sdp.var_bound(i))) {
      throw InputError("var_bound entries must be positive and finite");
    }
  }
  return rho * sdp.var_bound;
}

RealMatrix block_value(const Block& b, const RealVector& x) {
  RealMatrix g = b.constant;
  for (std::size_t a = 0; a < b.vars.size(); ++a) g += x(b.vars[a]) * b.coeffs[a];
  return g;
}

double min_eig(const RealMatrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Largest t with G_k(x) >= weight_k * t * I for every k.
double margin_of(const std::vector<Block>& blocks, const RealVector& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) m = std::min(m, min_eig(block_value(b, x)) / b.weight);
  return m;
}

// Barrier objective tau * (-t) - sum log det(G_k - w_k t I) - sum log(rho_i^2 - x_i^2).
// Returns +inf outside the domain.
double objective(const std::vector<Block>& blocks, const RealVector& x, double t, double tau,
                 const RealVector& rho) {
  double f = -tau * t;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double gap = rho(i) * rho(i) - x(i) * x(i);
    if (!(gap > 0.0)) return std::numeric_limits<double>::infinity();
    f -= std::log(gap);
  }
  for (const auto& b : blocks) {
    RealMatrix s = block_value(b, x);
    s.diagonal().array() -= b.weight * t;
    Eigen::LLT<RealMatrix> llt(s);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const RealVector diag = llt.matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > 0.0)) return std::numeric_limits<double>::infinity();
      f -= 2.0 * std::log(diag(i));
    }
  }
  return f;
}

struct Derivatives {
  RealVector grad;
  RealMatrix hess;
};

// Gradient and Hessian over z = (x, t); t is the last coordinate. With
// W = S^{-1}: d/dx_a (-log det S) = -tr(W F_a) and the Hessian entry is
// tr(W F_a W F_b). W F_a W is formed on the support of F_a only.
Derivatives derivatives(const std::vector<Block>& blocks, const RealVector& x, double t,
                        double tau, const RealVector& rho) {
  const Eigen::Index nv = x.size();
  Derivatives d{RealVector::Zero(nv + 1), RealMatrix::Zero(nv + 1, nv + 1)};
  d.grad(nv) = -tau;
  for (Eigen::Index i = 0; i < nv; ++i) {
    const double lo = rho(i) + x(i);
    const double hi = rho(i) - x(i);
    d.grad(i) += 1.0 / hi - 1.0 / lo;
    d.hess(i, i) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
  }
  for (const auto& b : blocks) {
    const Eigen::Index dim = b.constant.rows();
    if (dim == 0) continue;
    RealMatrix s = block_value(b, x);
    s.diagonal().array() -= b.weight * t;
    Eigen::LLT<RealMatrix> llt(s);
    if (llt.info() != Eigen::Success) throw NumericalError("iterate left the barrier domain");
    const RealMatrix w = llt.solve(RealMatrix::Identity(dim, dim));
    const double wt = b.weight;

    d.grad(nv) += wt * w.trace();
    d.hess(nv, nv) += wt * wt * w.squaredNorm();
    const auto m = static_cast<Eigen::Index>(b.vars.size());
    RealMatrix cols;   // W(:, K)
    RealMatrix wfw;    // W F_a W
    for (Eigen::Index a = 0; a < m; ++a) {
      const Support& sa = b.support[a];
      const auto k = static_cast<Eigen::Index>(sa.index.size());
      cols.resize(dim, k);
      for (Eigen::Index j = 0; j < k; ++j) cols.col(j) = w.col(sa.index[j]);
      wfw.noalias() = cols * sa.compact * cols.transpose();

      double tr = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        tr += sa.compact.row(i).dot(cols.row(sa.index[i]));
      }
      const Eigen::Index ga = b.vars[a];
      d.grad(ga) -= tr;
      const double tr_t = wfw.trace();
      d.hess(ga, nv) -= wt * tr_t;
      d.hess(nv, ga) -= wt * tr_t;
      for (Eigen::Index c = a; c < m; ++c) {
        const Support& sc = b.support[c];
        double h = 0.0;
        for (std::size_t i = 0; i < sc.index.size(); ++i) {
          for (std::size_t j = 0; j < sc.index.size(); ++j) {
            h += sc.compact(i, j) * wfw(sc.index[j], sc.index[i]);
          }
        }
        const Eigen::Index gc = b.vars[c];
        d.hess(ga, gc) += h;
        if (gc != ga) d.hess(gc, ga) += h;
      }
    }
  }
  return d;
}

struct AttemptOutcome {
  bool failed = false;
  std::string diagnostic;
  double best_margin = -std::numeric_limits<double>::infinity();
  RealVector best_x;
  int outer = 0;
  int newton = 0;
};

// Centering accuracy (half squared Newton decrement) used before the final
// barrier stage; tighter centering there only costs Newton steps.
constexpr double kCenteringTolerance = 1e-3;

AttemptOutcome run_attempt(const std::vector<Block>& blocks, const RealVector& rho,
                           const SolverConfig& cfg, std::uint64_t seed) {
  AttemptOutcome out;
  const auto nv = static_cast<int>(rho.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.1, 0.1);
  RealVector x(nv);
  for (int i = 0; i < nv; ++i) x(i) = unif(rng) * rho(i);

  double m0 = margin_of(blocks, x);
  if (!std::isfinite(m0)) m0 = 0.0;  // no constraints
  double t = m0 - std::max(1.0, 0.1 * std::abs(m0));
  out.best_margin = m0;
  out.best_x = x;

  double nu = 2.0 * nv;
  for (const auto& b : blocks) nu += static_cast<double>(b.constant.rows());
  nu = std::max(nu, 1.0);

  double tau = 1.0;
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    ++out.outer;
    const bool final_stage =
        nu / tau <= std::max(cfg.newton_tolerance, cfg.relative_gap * std::abs(out.best_margin));
    const double centering = final_stage ? cfg.newton_tolerance
                                         : std::max(cfg.newton_tolerance, kCenteringTolerance);
    for (int it = 0; it < cfg.max_newton_iters; ++it) {
      Derivatives d;
      try {
        d = derivatives(blocks, x, t, tau, rho);
      } catch (const NumericalError& e) {
        out.failed = true;
        out.diagnostic = e.what();
        return out;
      }
      // Regularize until the Hessian factors.
      Eigen::LLT<RealMatrix> hl(d.hess);
      double reg = 1e-12 * std::max(1.0, d.hess.diagonal().cwiseAbs().maxCoeff());
      int tries = 0;
      while (hl.info() != Eigen::Success) {
        if (++tries > 60) {
          out.failed = true;
          out.diagnostic = "Hessian not positive definite after regularization";
          return out;
        }
        RealMatrix h = d.hess;
        h.diagonal().array() += reg;
        hl.compute(h);
        reg *= 2.0;
      }
      const RealVector step = -hl.solve(d.grad);
      const double decrement_sq = -d.grad.dot(step);
      ++out.newton;
      if (!std::isfinite(decrement_sq)) {
        out.failed = true;
        out.diagnostic = "non-finite Newton decrement";
        return out;
      }
      if (decrement_sq / 2.0 <= centering) break;

      const double f0 = objective(blocks, x, t, tau, rho);
      // Backtracking from the full step (Armijo on the barrier objective).
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const RealVector xn = x + alpha * step.head(nv);
        const double tn = t + alpha * step(nv);
        const double f1 = objective(blocks, xn, tn, tau, rho);
        if (f1 <= f0 - 0.01 * alpha * decrement_sq) {
          x = xn;
          t = tn;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;  // stalled at round-off level
    }

    const double m = margin_of(blocks, x);
    if (m > out.best_margin) {
      out.best_margin = m;
      out.best_x = x;
    }
    const double gap = nu / tau;
    if (cfg.diagnostics) {
      *cfg.diagnostics << outer << ',' << 1.0 / tau << ',' << out.best_margin << ',' << m << '\n';
    }
    if (final_stage) break;
    if (t + gap < cfg.margin_tolerance && out.best_margin < cfg.margin_tolerance) {
      break;  // the optimum cannot reach the tolerance
    }
    tau /= cfg.barrier_shrink;
  }
  return out;
}

}  // namespace

std::vector<double> constraint_min_eigs(const StandardSdp& sdp, const RealVector& x) {
  std::vector<double> out;
  for (const auto& b : oriented_blocks(sdp, true)) {
    out.push_back(min_eig(block_value(b, x)) / b.weight);
  }
  return out;
}

FeasibilityResult solve_feasibility(const StandardSdp& sdp, const SolverConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Block> blocks = oriented_blocks(sdp, cfg.allow_constant);
  const RealVector rho = box_bounds(sdp, cfg.trust_radius);

  FeasibilityResult result;
  AttemptOutcome outcome;
  for (int attempt = 0; attempt < 5; ++attempt) {
    result.attempts = attempt + 1;
    AttemptOutcome o = run_attempt(blocks, rho, cfg, cfg.seed + attempt);
    result.outer_iterations += o.outer;
    result.newton_iterations += o.newton;
    const bool better = attempt == 0 || (!o.failed && (outcome.failed ||
                                                        o.best_margin > outcome.best_margin));
    if (better) outcome = std::move(o);
    if (!outcome.failed) break;
  }

  result.x = outcome.best_x;
  result.margin = outcome.best_margin;
  result.diagnostic = outcome.diagnostic;
  for (const auto& b : blocks) {
    result.per_constraint_min_eig.push_back(min_eig(block_value(b, result.x)) / b.weight);
  }
  if (outcome.failed) {
    result.status = FeasibilityStatus::numerical_failure;
  } else if (result.margin >= cfg.margin_tolerance) {
    result.status = FeasibilityStatus::feasible;
  } else {
    result.status = FeasibilityStatus::infeasible_at_tolerance;
  }
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Scaling

RealVector ScalingRecord::unscale(const RealVector& y) const {
  if (y.size() != var_factor.size()) throw ShapeError("unscale: size mismatch");
  return var_factor.cwiseProduct(y);
}

std::pair<StandardSdp, ScalingRecord> scale_problem(const StandardSdp& sdp) {
  const int nv = sdp.num_vars;
  const int nl = static_cast<int>(sdp.lmis.size());
  // Frobenius norms of every (LMI, variable) coefficient.
  std::vector<std::vector<std::pair<int, double>>> norms(nl);
  std::vector<bool> used(nv, false);
  for (int k = 0; k < nl; ++k) {
    for (const auto& [idx, f] : sdp.lmis[k].coeffs) {
      const double nrm = f.norm();
      if (nrm > 0.0) {
        norms[k].emplace_back(idx, nrm);
        used[idx] = true;
      }
    }
  }

  ScalingRecord rec{RealVector::Ones(nv), RealVector::Ones(nl), {}};
  for (int iter = 0; iter < 100; ++iter) {
    double worst = 0.0;
    for (int k = 0; k < nl; ++k) {
      double mx = 0.0;
      for (const auto& [i, nrm] : norms[k]) mx = std::max(mx, rec.lmi_factor(k) * rec.var_factor(i) * nrm);
      if (mx > 0.0) {
        rec.lmi_factor(k) /= std::sqrt(mx);
        worst = std::max(worst, std::abs(std::log(mx)));
      }
    }
    RealVector col_max = RealVector::Zero(nv);
    for (int k = 0; k < nl; ++k) {
      for (const auto& [i, nrm] : norms[k]) {
        col_max(i) = std::max(col_max(i), rec.lmi_factor(k) * rec.var_factor(i) * nrm);
      }
    }
    for (int i = 0; i < nv; ++i) {
      if (col_max(i) > 0.0) {
        rec.var_factor(i) /= std::sqrt(col_max(i));
        worst = std::max(worst, std::abs(std::log(col_max(i))));
      }
    }
    if (worst < 1e-13) break;
  }
  const double top = nl > 0 ? rec.lmi_factor.maxCoeff() : 1.0;
  if (top > 0.0) {
    rec.lmi_factor /= top;
    rec.var_factor *= top;
  }
  for (int i = 0; i < nv; ++i) {
    if (!used[i]) {
      rec.dropped_vars.push_back(i);
      rec.var_factor(i) = 0.0;
    }
  }

  const RealVector bound =
      sdp.var_bound.size() == 0 ? RealVector(RealVector::Ones(nv)) : sdp.var_bound;
  if (bound.size() != nv) throw InputError("var_bound has the wrong size");

  // x = var_factor * y and every LMI multiplied by lmi_factor: the margin
  // weight and box bounds absorb the factors, so the scaled problem has the
  // same optimal margin as the original.
  StandardSdp out;
  out.num_vars = nv;
  out.var_map = sdp.var_map;
  out.var_bound.resize(nv);
  for (int i = 0; i < nv; ++i) out.var_bound(i) = used[i] ? bound(i) / rec.var_factor(i) : bound(i);
  for (int k = 0; k < nl; ++k) {
    const auto& lmi = sdp.lmis[k];
    AffineLmi s{lmi.name, lmi.sense, rec.lmi_factor(k) * lmi.constant, {},
                rec.lmi_factor(k) * lmi.margin_weight};
    for (const auto& [idx, f] : lmi.coeffs) {
      if (!used[idx]) continue;
      s.coeffs.emplace_back(idx, (rec.lmi_factor(k) * rec.var_factor(idx)) * f);
    }
    out.lmis.push_back(std::move(s));
  }
  return {std::move(out), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Alternating projection

std::optional<RealVector> alternating_projection_oracle(const StandardSdp& sdp,
                                                        double target_margin, int iters) {
  const std::vector<Block> blocks = oriented_blocks(sdp, true);
  const int nv = sdp.num_vars;

  RealMatrix gram = RealMatrix::Zero(nv, nv);
  for (const auto& b : blocks) {
    for (std::size_t a = 0; a < b.vars.size(); ++a) {
      for (std::size_t c = 0; c < b.vars.size(); ++c) {
        gram(b.vars[a], b.vars[c]) += (b.coeffs[a].array() * b.coeffs[c].array()).sum();
      }
    }
  }
  const double ridge = 1e-12 * std::max(1.0, gram.trace());
  gram.diagonal().array() += ridge;
  const Eigen::LDLT<RealMatrix> ldlt(gram);

  std::vector<RealMatrix> targets;
  for (const auto& b : blocks) {
    const auto d = b.constant.rows();
    targets.push_back(target_margin * RealMatrix::Identity(d, d));
  }

  RealVector x = RealVector::Zero(nv);
  for (int it = 0; it < iters; ++it) {
    // Least-squares fit of the affine image to the current cone points.
    RealVector rhs = RealVector::Zero(nv);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const RealMatrix resid = targets[k] - blocks[k].constant;
      for (std::size_t a = 0; a < blocks[k].vars.size(); ++a) {
        rhs(blocks[k].vars[a]) += (blocks[k].coeffs[a].array() * resid.array()).sum();
      }
    }
    x = ldlt.solve(rhs);

    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const RealMatrix g = block_value(blocks[k], x);
      if (g.size() == 0) continue;
      const auto d = g.rows();
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(g - target_margin * RealMatrix::Identity(d, d));
      worst = std::min(worst, es.eigenvalues()(0) + target_margin);
      const RealVector clipped = es.eigenvalues().cwiseMax(0.0);
      targets[k] = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose() +
                   target_margin * RealMatrix::Identity(d, d);
    }
    if (worst >= 0.5 * target_margin) return x;
  }
  return std::nullopt;
}

}  // namespace qvnn
