// include/mcbf/asca.hpp
//
// ADMM engine. With auxiliaries d_jiu = a_j^H f_jiu the subproblem splits
// into a d-block (one small projection per user onto its convexified
// constraint) and an a-block (one linear solve per group whose matrix is
// fixed for the whole run). Both blocks have closed forms:
//
//   d_iu = e1_iu + nu e3_u^*,  d_ju = e1_ju / (1 + nu gamma_u)  (j != i)
//   a_j  = (rho/2) (C_j^H C_j + (rho/2) sum_u f_ju f_ju^H)^{-1} sum_u (d_ju + q_ju)^* f_ju
//
// where nu >= 0 is the root of a strictly decreasing scalar function. Dual
// variables are kept in scaled form: q += d - a^H f.

#pragma once

#include "mcbf/sca.hpp"
#include "mcbf/structure.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mcbf {

struct AscaConfig {
  double rho = 0.2;
  double inner_tol = 1e-3;
  int max_inner = 5000;

  void validate() const;
};

struct AdmmState {
  CVec a;  // K_tot
  CMat d;  // G x K_tot, entry (j, u) tracks a_j^H f_{j,u}
  CMat q;  // scaled duals, same shape as d
};

// One user's d-block: minimize sum_j |d_j - e1_j|^2 subject to
// e2 + gamma sum_{j != own} |d_j|^2 - 2 Re{d_own e3} <= 0.
struct ProjectionBlock {
  CVec e1;
  int own = 0;
  double e2 = 0.0;
  cdouble e3;
  double gamma = 1.0;
};

struct BlockSolution {
  CVec d;
  double multiplier = 0.0;  // nu (ASCA) or mu (AIM)
};

// Positive root of e2 + gamma S / (1 + nu gamma)^2 - 2 re_e3_e1 - 2 nu |e3|^2,
// which is strictly decreasing in nu. Requires |e3|^2 > 0 and a positive
// value at nu = 0. Safeguarded Newton inside a doubling bracket.
double solve_cubic_nu(double others_sq_sum, double e2, double e3_sq, double re_e3_e1,
                      double gamma);

BlockSolution project_block(const ProjectionBlock& block);

// Full d-update. Throws DegenerateAnchor when some |e3_u| is negligible.
CMat d_update(const ScaSubproblem& sub, const CVec& a, const CMat& q);

// Per-group Cholesky factors of C_j^H C_j + (rho/2) sum_u f_ju f_ju^H.
class AscaFactors {
 public:
  AscaFactors(const WeightProblem& wp, double rho);
  double rho() const { return rho_; }
  const Eigen::LLT<CMat>& factor(int j) const { return factors_[j]; }

 private:
  double rho_;
  std::vector<Eigen::LLT<CMat>> factors_;
};

CVec a_update(const WeightProblem& wp, const AscaFactors& factors, const CMat& d, const CMat& q);

CMat q_update(const WeightProblem& wp, const CMat& d, const CVec& a, const CMat& q);

// Augmented Lagrangian without the indicator term (callers keep d feasible).
double augmented_lagrangian(const WeightProblem& wp, const CMat& d, const CVec& a, const CMat& q,
                            double rho);

struct AscaInnerResult {
  AdmmState state;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;  // ||d - a^H f|| / sqrt(G K_tot)
};

using AdmmObserver = std::function<void(int iteration, const AdmmState&)>;

AscaInnerResult asca_inner_solve(const ScaSubproblem& sub, const AscaFactors& factors,
                                 const CVec& a0, const AscaConfig& cfg,
                                 const AdmmObserver& observer = {});

class AscaEngine final : public InnerEngine {
 public:
  AscaEngine(const WeightProblem& wp, AscaConfig cfg = {});

  std::string_view name() const override { return "asca"; }
  const WeightProblem& problem() const override { return *wp_; }
  const AscaConfig& config() const { return cfg_; }
  const AscaFactors& factors() const { return factors_; }
  InnerResult solve(const ScaSubproblem& sub, const CVec& start) override;

 private:
  const WeightProblem* wp_;
  AscaConfig cfg_;
  AscaFactors factors_;
};

// AIM d-block: minimize sum_j |d_j - e1_j|^2 subject to
// gamma sum_{j != own} |d_j|^2 + gamma sigma^2 - |d_own|^2 <= 0.
struct FeasibilityBlock {
  CVec e1;
  int own = 0;
  double gamma = 1.0;
  double sigma2 = 1.0;
};

// Root in (0, 1) of gamma S / (1 + mu gamma)^2 + gamma sigma^2 - E / (1 - mu)^2,
// where E = |e1_own|^2 > 0 and the value at mu = 0 is positive.
double solve_quartic_mu(double others_sq_sum, double own_sq, double gamma, double sigma2);

BlockSolution project_feasibility_block(const FeasibilityBlock& block);

// ADMM feasibility search from random starts (d-step above, least-squares
// a-step). Stops at the first iterate meeting every SINR target.
InitResult aim_init(const WeightProblem& wp, std::uint64_t seed, int max_iters = 2000,
                    int retries = 20);

}  // namespace mcbf
