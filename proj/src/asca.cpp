// src/asca.cpp

#include "mcbf/asca.hpp"

#include "mcbf/errors.hpp"
#include "mcbf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcbf {

void AscaConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("asca: rho must be positive");
  if (!(inner_tol > 0.0)) throw std::invalid_argument("asca: inner_tol must be positive");
  if (max_inner < 1) throw std::invalid_argument("asca: max_inner must be >= 1");
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Root of a strictly decreasing function on [lo, hi] with value(lo) > 0 and
// value(hi) <= 0. Newton steps are kept inside the bracket, otherwise the
// midpoint is taken. Returns the iterate with the smallest |value|.
template <class Fn, class Deriv>
double decreasing_root(Fn value, Deriv slope, double lo, double hi, double start) {
  double x = std::clamp(start, lo, hi);
  double best = x;
  double best_abs = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 300; ++it) {
    const double fx = value(x);
    if (std::abs(fx) < best_abs) {
      best_abs = std::abs(fx);
      best = x;
    }
    if (fx == 0.0) break;
    if (fx > 0.0) lo = x; else hi = x;
    if (hi - lo <= 2.0 * kEps * std::max(std::abs(hi), 1e-300)) break;
    const double d = slope(x);
    double nx = (d < 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    if (std::abs(nx - x) <= kEps * std::abs(x)) {
      x = nx;
      if (std::abs(value(x)) < best_abs) best = x;
      break;
    }
    x = nx;
  }
  return best;
}

}  // namespace

double solve_cubic_nu(double others_sq_sum, double e2, double e3_sq, double re_e3_e1,
                      double gamma) {
  if (!(e3_sq > 0.0)) throw std::invalid_argument("solve_cubic_nu: |e3|^2 must be positive");
  const double s = others_sq_sum;
  auto value = [&](double nu) {
    const double den = 1.0 + nu * gamma;
    return e2 + gamma * s / (den * den) - 2.0 * re_e3_e1 - 2.0 * nu * e3_sq;
  };
  auto slope = [&](double nu) {
    const double den = 1.0 + nu * gamma;
    return -2.0 * gamma * gamma * s / (den * den * den) - 2.0 * e3_sq;
  };
  if (!(value(0.0) > 0.0)) return 0.0;
  double hi = 1.0;
  while (value(hi) > 0.0) hi *= 2.0;
  // The function is convex and decreasing, so Newton from the left bracket
  // end approaches the root monotonically.
  return decreasing_root(value, slope, 0.0, hi, 0.0);
}

BlockSolution project_block(const ProjectionBlock& b) {
  const Eigen::Index g = b.e1.size();
  double others = 0.0;
  for (Eigen::Index j = 0; j < g; ++j)
    if (j != b.own) others += std::norm(b.e1(j));
  const double re = (b.e3 * b.e1(b.own)).real();
  BlockSolution out;
  if (b.e2 + b.gamma * others - 2.0 * re <= 0.0) {
    out.d = b.e1;
    return out;
  }
  const double e3_sq = std::norm(b.e3);
  if (!(e3_sq > 0.0)) throw DegenerateAnchor("d-update: e3 vanishes with an active constraint");
  const double nu = solve_cubic_nu(others, b.e2, e3_sq, re, b.gamma);
  out.multiplier = nu;
  out.d = b.e1 / (1.0 + nu * b.gamma);
  out.d(b.own) = b.e1(b.own) + nu * std::conj(b.e3);
  return out;
}

CMat d_update(const ScaSubproblem& sub, const CVec& a, const CMat& q) {
  const WeightProblem& wp = sub.problem();
  const GroupLayout& layout = wp.layout();
  if (q.rows() != wp.num_groups() || q.cols() != wp.num_users())
    throw DimensionError("q must be G x K_tot");
  const CMat e1 = wp.projections(a) - q;
  CMat d(wp.num_groups(), wp.num_users());
  ProjectionBlock block;
  for (int u = 0; u < wp.num_users(); ++u) {
    const int i = layout.group_of(u);
    const double anchor_scale = group_segment(sub.anchor(), layout, i).norm() * wp.f(i, u).norm();
    if (std::abs(sub.e3()(u)) < 1e-12 * anchor_scale || anchor_scale == 0.0)
      throw DegenerateAnchor("d-update: anchor has v_i^H f_iik = 0");
    block.e1 = e1.col(u);
    block.own = i;
    block.e2 = sub.e2()(u);
    block.e3 = sub.e3()(u);
    block.gamma = wp.sinr_targets()(u);
    d.col(u) = project_block(block).d;
  }
  return d;
}

AscaFactors::AscaFactors(const WeightProblem& wp, double rho) : rho_(rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  for (int j = 0; j < wp.num_groups(); ++j) {
    CMat m = wp.gram(j) + (0.5 * rho) * (wp.f_table(j) * wp.f_table(j).adjoint());
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::LLT<CMat> llt(m);
    if (llt.info() != Eigen::Success) throw InternalError("a-update matrix is not definite");
    factors_.push_back(std::move(llt));
  }
}

CVec a_update(const WeightProblem& wp, const AscaFactors& factors, const CMat& d, const CMat& q) {
  CVec a(wp.num_users());
  for (int j = 0; j < wp.num_groups(); ++j) {
    CVec rhs = wp.f_table(j) * (d.row(j) + q.row(j)).adjoint();
    group_segment(a, wp.layout(), j) = (0.5 * factors.rho()) * factors.factor(j).solve(rhs);
  }
  return a;
}

CMat q_update(const WeightProblem& wp, const CMat& d, const CVec& a, const CMat& q) {
  return q + d - wp.projections(a);
}

double augmented_lagrangian(const WeightProblem& wp, const CMat& d, const CVec& a, const CMat& q,
                            double rho) {
  return weight_objective(wp, a) + 0.5 * rho * (d - wp.projections(a) + q).squaredNorm();
}

AscaInnerResult asca_inner_solve(const ScaSubproblem& sub, const AscaFactors& factors,
                                 const CVec& a0, const AscaConfig& cfg,
                                 const AdmmObserver& observer) {
  cfg.validate();
  const WeightProblem& wp = sub.problem();
  if (a0.size() != wp.num_users()) throw DimensionError("a0 must have K_tot entries");
  AscaInnerResult res;
  res.state.a = a0;
  res.state.d = CMat::Zero(wp.num_groups(), wp.num_users());
  res.state.q = CMat::Zero(wp.num_groups(), wp.num_users());
  for (int n = 0; n < cfg.max_inner; ++n) {
    res.state.d = d_update(sub, res.state.a, res.state.q);
    CVec next = a_update(wp, factors, res.state.d, res.state.q);
    res.state.q = q_update(wp, res.state.d, next, res.state.q);
    if (!next.allFinite()) throw EngineFailure("asca: iterate diverged");
    const double norm = next.norm();
    const double rel = norm > 0.0 ? (next - res.state.a).norm() / norm : 0.0;
    res.state.a = std::move(next);
    res.iterations = n + 1;
    if (observer) observer(res.iterations, res.state);
    if (rel <= cfg.inner_tol) {
      res.converged = true;
      break;
    }
  }
  res.primal_residual = (res.state.d - wp.projections(res.state.a)).norm() /
                        std::sqrt(static_cast<double>(wp.num_groups() * wp.num_users()));
  return res;
}

AscaEngine::AscaEngine(const WeightProblem& wp, AscaConfig cfg)
    : wp_(&wp), cfg_(cfg), factors_(wp, cfg.rho) {
  cfg_.validate();
}

InnerResult AscaEngine::solve(const ScaSubproblem& sub, const CVec& start) {
  if (&sub.problem() != wp_) throw std::invalid_argument("subproblem from another weight problem");
  AscaInnerResult r = asca_inner_solve(sub, factors_, start, cfg_);
  InnerResult out;
  out.weights = std::move(r.state.a);
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.residual = r.primal_residual;
  return out;
}

double solve_quartic_mu(double others_sq_sum, double own_sq, double gamma, double sigma2) {
  if (!(own_sq > 0.0)) throw std::invalid_argument("solve_quartic_mu: |e1_own|^2 must be positive");
  const double s = others_sq_sum;
  auto value = [&](double mu) {
    const double a = 1.0 + mu * gamma;
    const double b = 1.0 - mu;
    return gamma * s / (a * a) + gamma * sigma2 - own_sq / (b * b);
  };
  auto slope = [&](double mu) {
    const double a = 1.0 + mu * gamma;
    const double b = 1.0 - mu;
    return -2.0 * gamma * gamma * s / (a * a * a) - 2.0 * own_sq / (b * b * b);
  };
  if (!(value(0.0) > 0.0)) return 0.0;
  // value -> -inf as mu -> 1; the root is below 1 - sqrt(E / (gamma (S + sigma^2))).
  double hi = 1.0 - std::sqrt(own_sq / (gamma * (s + sigma2))) * 0.5;
  while (value(hi) > 0.0) hi = 0.5 * (hi + 1.0);
  return decreasing_root(value, slope, 0.0, hi, 0.0);
}

BlockSolution project_feasibility_block(const FeasibilityBlock& b) {
  const Eigen::Index g = b.e1.size();
  double others = 0.0;
  for (Eigen::Index j = 0; j < g; ++j)
    if (j != b.own) others += std::norm(b.e1(j));
  const double own_sq = std::norm(b.e1(b.own));
  BlockSolution out;
  if (b.gamma * (others + b.sigma2) - own_sq <= 0.0) {
    out.d = b.e1;
    return out;
  }
  if (own_sq <= 1e-28 * b.gamma * (others + b.sigma2)) {
    // Degenerate direction: shrink interference as with mu = 1 and put the
    // signal on the constraint boundary with zero phase.
    out.multiplier = 1.0;
    out.d = b.e1 / (1.0 + b.gamma);
    double shrunk = 0.0;
    for (Eigen::Index j = 0; j < g; ++j)
      if (j != b.own) shrunk += std::norm(out.d(j));
    out.d(b.own) = std::sqrt(b.gamma * (shrunk + b.sigma2));
    return out;
  }
  const double mu = solve_quartic_mu(others, own_sq, b.gamma, b.sigma2);
  out.multiplier = mu;
  out.d = b.e1 / (1.0 + mu * b.gamma);
  out.d(b.own) = b.e1(b.own) / (1.0 - mu);
  return out;
}

InitResult aim_init(const WeightProblem& wp, std::uint64_t seed, int max_iters, int retries) {
  if (max_iters < 1 || retries < 1) throw std::invalid_argument("aim: max_iters and retries >= 1");
  const GroupLayout& layout = wp.layout();
  const int groups = wp.num_groups();
  const int total = wp.num_users();

  std::vector<Eigen::LLT<CMat>> factors;
  for (int j = 0; j < groups; ++j) {
    CMat m = wp.f_table(j) * wp.f_table(j).adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::LLT<CMat> llt(m);
    if (llt.info() != Eigen::Success) {
      const double reg = 1e-10 * m.trace().real() / m.rows();
      m.diagonal().array() += std::max(reg, std::numeric_limits<double>::min());
      llt.compute(m);
      if (llt.info() != Eigen::Success) throw InternalError("aim: Gram matrix not invertible");
    }
    factors.push_back(std::move(llt));
  }

  const double gamma_max = wp.sinr_targets().maxCoeff();
  RVec group_scale(groups);
  for (int i = 0; i < groups; ++i) {
    double mean_norm = 0.0;
    for (int k = 0; k < layout.size(i); ++k) mean_norm += wp.f(i, layout.index(i, k)).norm();
    mean_norm /= layout.size(i);
    group_scale(i) = mean_norm > 0.0 ? std::sqrt(gamma_max * wp.noise_power()) / mean_norm : 1.0;
  }

  InitResult res;
  FeasibilityBlock block;
  block.sigma2 = wp.noise_power();
  for (int attempt = 0; attempt < retries; ++attempt) {
    res.attempts = attempt + 1;
    GaussianStream rng(derive_seed(seed, 0x41494dULL + static_cast<std::uint64_t>(attempt)));
    CVec a(total);
    for (int u = 0; u < total; ++u) a(u) = group_scale(layout.group_of(u)) * rng.complex_normal();
    CMat q = CMat::Zero(groups, total);
    CMat d(groups, total);
    bool diverged = false;
    for (int n = 0; n < max_iters; ++n) {
      if (wp.p1_feasible(a, 0.0)) break;
      ++res.iterations;
      const CMat e1 = wp.projections(a) - q;
      for (int u = 0; u < total; ++u) {
        block.e1 = e1.col(u);
        block.own = layout.group_of(u);
        block.gamma = wp.sinr_targets()(u);
        d.col(u) = project_feasibility_block(block).d;
      }
      for (int j = 0; j < groups; ++j)
        group_segment(a, layout, j) = factors[j].solve(wp.f_table(j) * (d.row(j) + q.row(j)).adjoint());
      q += d - wp.projections(a);
      if (!a.allFinite()) {
        diverged = true;
        break;
      }
    }
    if (diverged) continue;
    if (wp.p1_feasible(a, 0.0)) {
      res.weights = std::move(a);
      return res;
    }
    if (auto s = feasibility_scale(wp, a)) {
      CVec scaled = (*s * (1.0 + 1e-9)) * a;
      if (wp.p1_feasible(scaled, 0.0)) {
        res.weights = std::move(scaled);
        res.rescued_by_scaling = true;
        return res;
      }
    }
  }
  return res;
}

}  // namespace mcbf
