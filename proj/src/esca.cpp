// src/esca.cpp

#include "mcbf/esca.hpp"

#include "mcbf/errors.hpp"
#include "mcbf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcbf {

void EscaConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("esca: alpha must be positive");
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("esca: c must lie in (0, 1)");
  if (!(inner_tol > 0.0)) throw std::invalid_argument("esca: inner_tol must be positive");
  if (max_inner < 1) throw std::invalid_argument("esca: max_inner must be >= 1");
}

namespace {

// Column j holds Ftilde_{j,u}^T x_j for every user u, stacked in pairs.
RMat group_projections(const RealWeightProblem& rp, const RVec& x) {
  if (x.size() != 2 * rp.num_users()) throw DimensionError("x must have 2 K_tot entries");
  RMat z(2 * rp.num_users(), rp.num_groups());
  for (int j = 0; j < rp.num_groups(); ++j)
    z.col(j).noalias() =
        rp.lifted_f[j].transpose() * x.segment(rp.real_offset(j), rp.real_size(j));
  return z;
}

double pair_sq(const RMat& z, int u, int j) {
  return z(2 * u, j) * z(2 * u, j) + z(2 * u + 1, j) * z(2 * u + 1, j);
}

double interference(const RMat& z, int u, int own, int groups) {
  double s = 0.0;
  for (int j = 0; j < groups; ++j)
    if (j != own) s += pair_sq(z, u, j);
  return s;
}

void project(SaddleState& u) { u.eta = u.eta.cwiseMax(0.0); }

SaddleState step_from(const SaddleState& base, const RVec& g, double alpha) {
  const Eigen::Index nx = base.x.size();
  SaddleState out{base.x - alpha * g.head(nx), base.eta - alpha * g.tail(base.eta.size())};
  project(out);
  return out;
}

double distance(const SaddleState& a, const SaddleState& b) {
  return std::sqrt((a.x - b.x).squaredNorm() + (a.eta - b.eta).squaredNorm());
}

}  // namespace

RVec SaddleOperator::operator_value(const SaddleState& u) const {
  RVec g(u.x.size() + u.eta.size());
  g.head(u.x.size()) = grad_x(u.x, u.eta);
  g.tail(u.eta.size()) = -constraints(u.x);
  return g;
}

RealScaSubproblem::RealScaSubproblem(const RealWeightProblem& rp, RVec anchor)
    : rp_(&rp), y_(std::move(anchor)) {
  const RMat z = group_projections(rp, y_);
  const int total = rp.num_users();
  anchor_proj_.resize(2, total);
  anchor_signal_.resize(total);
  scale_.resize(total);
  for (int u = 0; u < total; ++u) {
    const int i = rp.layout.group_of(u);
    anchor_proj_.col(u) = z.block(2 * u, i, 2, 1);
    anchor_signal_(u) = anchor_proj_.col(u).squaredNorm();
    scale_(u) = anchor_signal_(u) + rp.sinr_targets(u) * rp.noise_power;
  }
}

double RealScaSubproblem::objective(const RVec& x) const {
  double total = 0.0;
  for (int g = 0; g < rp_->num_groups(); ++g) {
    auto seg = x.segment(rp_->real_offset(g), rp_->real_size(g));
    total += seg.dot(rp_->gram_lift[g] * seg);
  }
  return total;
}

RVec RealScaSubproblem::constraints(const RVec& x) const {
  const RMat z = group_projections(*rp_, x);
  const int total = rp_->num_users();
  RVec phi(total);
  for (int u = 0; u < total; ++u) {
    const int i = rp_->layout.group_of(u);
    const double gamma = rp_->sinr_targets(u);
    const double cross = anchor_proj_(0, u) * z(2 * u, i) + anchor_proj_(1, u) * z(2 * u + 1, i);
    phi(u) = anchor_signal_(u) + gamma * interference(z, u, i, rp_->num_groups()) - 2.0 * cross +
             gamma * rp_->noise_power;
  }
  return phi;
}

RVec RealScaSubproblem::grad_x(const RVec& x, const RVec& eta) const {
  const RMat z = group_projections(*rp_, x);
  const int total = rp_->num_users();
  RVec grad(x.size());
  RVec r(2 * total);
  for (int i = 0; i < rp_->num_groups(); ++i) {
    for (int u = 0; u < total; ++u) {
      if (rp_->layout.group_of(u) == i) {
        r.segment<2>(2 * u) = -eta(u) * anchor_proj_.col(u);
      } else {
        r.segment<2>(2 * u) = (rp_->sinr_targets(u) * eta(u)) * z.block(2 * u, i, 2, 1);
      }
    }
    auto xi = x.segment(rp_->real_offset(i), rp_->real_size(i));
    grad.segment(rp_->real_offset(i), rp_->real_size(i)).noalias() =
        2.0 * (rp_->gram_lift[i] * xi) + 2.0 * (rp_->lifted_f[i] * r);
  }
  return grad;
}

double RealScaSubproblem::lagrangian(const RVec& x, const RVec& eta) const {
  return objective(x) + eta.dot(constraints(x));
}

RVec FeasibilityOperator::constraints(const RVec& x) const {
  const RMat z = group_projections(*rp_, x);
  const int total = rp_->num_users();
  RVec phi(total);
  for (int u = 0; u < total; ++u) {
    const int i = rp_->layout.group_of(u);
    const double gamma = rp_->sinr_targets(u);
    phi(u) = gamma * interference(z, u, i, rp_->num_groups()) - pair_sq(z, u, i) +
             gamma * rp_->noise_power;
  }
  return phi;
}

RVec FeasibilityOperator::grad_x(const RVec& x, const RVec& eta) const {
  const RMat z = group_projections(*rp_, x);
  const int total = rp_->num_users();
  RVec grad(x.size());
  RVec r(2 * total);
  for (int i = 0; i < rp_->num_groups(); ++i) {
    for (int u = 0; u < total; ++u) {
      const double w = rp_->layout.group_of(u) == i ? -eta(u) : rp_->sinr_targets(u) * eta(u);
      r.segment<2>(2 * u) = w * z.block(2 * u, i, 2, 1);
    }
    grad.segment(rp_->real_offset(i), rp_->real_size(i)).noalias() = 2.0 * (rp_->lifted_f[i] * r);
  }
  return grad;
}

double FeasibilityOperator::lagrangian(const RVec& x, const RVec& eta) const {
  return eta.dot(constraints(x));
}

RVec grad_x(const RealScaSubproblem& sub, const RVec& x, const RVec& eta) {
  return sub.grad_x(x, eta);
}

RVec grad_eta(const RealScaSubproblem& sub, const RVec& x) { return sub.constraints(x); }

ExtragradientStep extragradient_iterate(const SaddleOperator& op, const SaddleState& state,
                                        double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  ExtragradientStep s;
  const RVec g_state = op.operator_value(state);
  s.predictor = step_from(state, g_state, alpha);
  const RVec g_pred = op.operator_value(s.predictor);
  s.next = step_from(state, g_pred, alpha);
  s.alpha_used = alpha;
  s.d_u = distance(s.predictor, state);
  s.d_g = (g_pred - g_state).norm();
  s.alpha_hat = s.d_g > 0.0 ? s.d_u / s.d_g : std::numeric_limits<double>::infinity();
  return s;
}

double adaptive_step(const SaddleState& state, const SaddleState& predictor, const RVec& g_state,
                     const RVec& g_predictor, double alpha, double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  const double d_g = (g_predictor - g_state).norm();
  if (d_g == 0.0) return alpha;
  return std::min(alpha, c * distance(predictor, state) / d_g);
}

ExtragradientStep adaptive_extragradient_step(const SaddleOperator& op, const SaddleState& state,
                                              double alpha, double c) {
  ExtragradientStep s;
  const RVec g_state = op.operator_value(state);
  s.predictor = step_from(state, g_state, alpha);
  RVec g_pred = op.operator_value(s.predictor);
  s.d_u = distance(s.predictor, state);
  s.d_g = (g_pred - g_state).norm();
  s.alpha_hat =
      s.d_g > 0.0 ? c * s.d_u / s.d_g : std::numeric_limits<double>::infinity();
  s.alpha_used = adaptive_step(state, s.predictor, g_state, g_pred, alpha, c);
  if (s.alpha_used < alpha) {
    s.predictor = step_from(state, g_state, s.alpha_used);
    g_pred = op.operator_value(s.predictor);
  }
  s.next = step_from(state, g_pred, s.alpha_used);
  return s;
}

EscaInnerResult esca_inner_solve(const RealScaSubproblem& sub, const RVec& x0,
                                 const EscaConfig& cfg, const TrajectoryObserver& observer) {
  cfg.validate();
  if (x0.size() != 2 * sub.problem().num_users()) throw DimensionError("x0 has wrong length");
  EscaInnerResult res;
  res.state = {x0, RVec::Zero(sub.problem().num_users())};
  double obj = sub.objective(x0);
  for (int n = 0; n < cfg.max_inner; ++n) {
    ExtragradientStep step = adaptive_extragradient_step(sub, res.state, cfg.alpha, cfg.c);
    if (!step.next.x.allFinite() || !step.next.eta.allFinite())
      throw EngineFailure("esca: iterate diverged");
    if (observer) observer(res.state, step);
    const double xnorm = step.next.x.norm();
    const double rel = xnorm > 0.0 ? (step.next.x - res.state.x).norm() / xnorm : 0.0;
    res.state = std::move(step.next);
    res.iterations = n + 1;
    const double violation =
        sub.constraints(res.state.x).cwiseQuotient(sub.constraint_scale()).maxCoeff();
    if (rel <= cfg.inner_tol && violation <= cfg.inner_tol) {
      res.converged = true;
      break;
    }
    // Plateau exit: constraints met and the objective has stopped moving.
    const double next_obj = sub.objective(res.state.x);
    if (std::abs(next_obj - obj) <= 0.1 * cfg.inner_tol * std::abs(next_obj) && violation <= 1e-6) {
      res.converged = true;
      break;
    }
    obj = next_obj;
  }
  return res;
}

EscaEngine::EscaEngine(const WeightProblem& wp, EscaConfig cfg)
    : wp_(&wp), rp_(lift_real(wp)), cfg_(cfg) {
  cfg_.validate();
}

InnerResult EscaEngine::solve(const ScaSubproblem& sub, const CVec& start) {
  if (&sub.problem() != wp_) throw std::invalid_argument("subproblem from another weight problem");
  RealScaSubproblem real_sub(rp_, to_real(sub.anchor(), rp_.layout));
  EscaInnerResult r = esca_inner_solve(real_sub, to_real(start, rp_.layout), cfg_);
  InnerResult out;
  out.weights = to_complex(r.state.x, rp_.layout);
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.residual = std::max(
      0.0, real_sub.constraints(r.state.x).cwiseQuotient(real_sub.constraint_scale()).maxCoeff());
  return out;
}

InitResult eim_init(const WeightProblem& wp, std::uint64_t seed, int max_iters, int retries,
                    const EscaConfig& cfg) {
  cfg.validate();
  if (max_iters < 1 || retries < 1) throw std::invalid_argument("eim: max_iters and retries >= 1");
  const RealWeightProblem rp = lift_real(wp);
  const FeasibilityOperator op(rp);
  const GroupLayout& layout = wp.layout();
  const double gamma_max = wp.sinr_targets().maxCoeff();

  // Per-group start scale sqrt(gamma_max sigma^2) / mean_k ||f_iik||.
  RVec group_scale(layout.num_groups());
  for (int i = 0; i < layout.num_groups(); ++i) {
    double mean_norm = 0.0;
    for (int k = 0; k < layout.size(i); ++k) mean_norm += wp.f(i, layout.index(i, k)).norm();
    mean_norm /= layout.size(i);
    group_scale(i) = mean_norm > 0.0 ? std::sqrt(gamma_max * wp.noise_power()) / mean_norm : 1.0;
  }

  InitResult res;
  for (int attempt = 0; attempt < retries; ++attempt) {
    res.attempts = attempt + 1;
    GaussianStream rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    SaddleState state{RVec(2 * layout.total()), RVec::Zero(layout.total())};
    for (int i = 0; i < layout.num_groups(); ++i)
      for (int m = 0; m < rp.real_size(i); ++m)
        state.x(rp.real_offset(i) + m) = group_scale(i) * rng.normal();

    bool diverged = false;
    for (int n = 0; n < max_iters; ++n) {
      if ((op.constraints(state.x).array() < 0.0).all()) break;
      ExtragradientStep step = adaptive_extragradient_step(op, state, cfg.alpha, cfg.c);
      ++res.iterations;
      if (!step.next.x.allFinite() || !step.next.eta.allFinite()) {
        diverged = true;
        break;
      }
      state = std::move(step.next);
    }
    if (diverged) continue;
    CVec a = to_complex(state.x, layout);
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
