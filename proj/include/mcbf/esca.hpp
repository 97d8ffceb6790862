// include/mcbf/esca.hpp
//
// Extragradient engine. Each convexified subproblem is solved through its
// Lagrangian saddle point: u = (x, eta) in R^{2K_tot} x R_+^{K_tot} with the
// monotone operator g(u) = [grad_x L; -grad_eta L]. One iteration is
//
//   predictor  ubar = P_U(u - alpha g(u))
//   corrector  u+   = P_U(u - alpha g(ubar))
//
// where P_U clamps the multipliers at zero. The step is adapted as
// min(alpha, c * ||ubar - u|| / ||g(ubar) - g(u)||); when the adaptive value is
// smaller the predictor is recomputed with it.

#pragma once

#include "mcbf/sca.hpp"
#include "mcbf/structure.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mcbf {

struct EscaConfig {
  double alpha = 0.1;       // base step
  double c = 0.8;           // prediction constant in (0, 1)
  double inner_tol = 1e-3;  // relative change of x between iterations
  int max_inner = 5000;

  void validate() const;
};

struct SaddleState {
  RVec x;    // stacked lifted weights, 2 K_tot
  RVec eta;  // multipliers, K_tot, always >= 0
};

// Lagrangian that is linear in the multipliers: L(x, eta) = f(x) + eta^T phi(x).
class SaddleOperator {
 public:
  virtual ~SaddleOperator() = default;
  virtual RVec grad_x(const RVec& x, const RVec& eta) const = 0;
  // phi(x), which is also grad_eta L.
  virtual RVec constraints(const RVec& x) const = 0;
  virtual double lagrangian(const RVec& x, const RVec& eta) const = 0;

  // g(u) stacked as [grad_x L; -phi(x)].
  RVec operator_value(const SaddleState& u) const;
};

// Lifted subproblem around anchor y (the lifting of v).
class RealScaSubproblem final : public SaddleOperator {
 public:
  RealScaSubproblem(const RealWeightProblem& rp, RVec anchor);

  const RealWeightProblem& problem() const { return *rp_; }
  const RVec& anchor() const { return y_; }
  // y_i^T F_iiu y_i + gamma_u sigma^2: the scale of constraint u.
  const RVec& constraint_scale() const { return scale_; }

  double objective(const RVec& x) const;
  RVec grad_x(const RVec& x, const RVec& eta) const override;
  RVec constraints(const RVec& x) const override;
  double lagrangian(const RVec& x, const RVec& eta) const override;

 private:
  const RealWeightProblem* rp_;
  RVec y_;
  RMat anchor_proj_;  // 2 x K_tot, column u = Ftilde_{i,u}^T y_i for the user's own group
  RVec anchor_signal_;
  RVec scale_;
};

// Feasibility Lagrangian used by EIM: f = 0 and
// phi_u(x) = gamma_u sum_{j != i} x_j^T F_ju x_j - x_i^T F_iu x_i + gamma_u sigma^2.
class FeasibilityOperator final : public SaddleOperator {
 public:
  explicit FeasibilityOperator(const RealWeightProblem& rp) : rp_(&rp) {}

  RVec grad_x(const RVec& x, const RVec& eta) const override;
  RVec constraints(const RVec& x) const override;
  double lagrangian(const RVec& x, const RVec& eta) const override;

 private:
  const RealWeightProblem* rp_;
};

RVec grad_x(const RealScaSubproblem& sub, const RVec& x, const RVec& eta);
RVec grad_eta(const RealScaSubproblem& sub, const RVec& x);

struct ExtragradientStep {
  SaddleState next;
  SaddleState predictor;
  double alpha_used = 0.0;
  double alpha_hat = 0.0;  // c * d_u / d_g from the base-step prediction (c = 1 for fixed steps)
  double d_u = 0.0;
  double d_g = 0.0;
};

// One extragradient iteration with a fixed step.
ExtragradientStep extragradient_iterate(const SaddleOperator& op, const SaddleState& state,
                                        double alpha);

// min(alpha, c * ||pred - state|| / ||g_pred - g_state||); alpha when the
// operator difference vanishes.
double adaptive_step(const SaddleState& state, const SaddleState& predictor, const RVec& g_state,
                     const RVec& g_predictor, double alpha, double c);

// Prediction with the base step, correction of the step size, and the update
// with the corrected step.
ExtragradientStep adaptive_extragradient_step(const SaddleOperator& op, const SaddleState& state,
                                              double alpha, double c);

struct EscaInnerResult {
  SaddleState state;
  int iterations = 0;
  bool converged = false;
};

using TrajectoryObserver = std::function<void(const SaddleState& before, const ExtragradientStep&)>;

EscaInnerResult esca_inner_solve(const RealScaSubproblem& sub, const RVec& x0,
                                 const EscaConfig& cfg, const TrajectoryObserver& observer = {});

class EscaEngine final : public InnerEngine {
 public:
  EscaEngine(const WeightProblem& wp, EscaConfig cfg = {});

  std::string_view name() const override { return "esca"; }
  const WeightProblem& problem() const override { return *wp_; }
  const RealWeightProblem& lifted() const { return rp_; }
  const EscaConfig& config() const { return cfg_; }
  InnerResult solve(const ScaSubproblem& sub, const CVec& start) override;

 private:
  const WeightProblem* wp_;
  RealWeightProblem rp_;
  EscaConfig cfg_;
};

// Extragradient feasibility search from random starts. Each attempt runs up to
// max_iters iterations and stops at the first iterate meeting every SINR
// target; an attempt that ends infeasible but with signal > gamma *
// interference everywhere is rescued by a common power scale.
InitResult eim_init(const WeightProblem& wp, std::uint64_t seed, int max_iters = 2000,
                    int retries = 20, const EscaConfig& cfg = {});

}  // namespace mcbf
