// include/mcbf/structure.hpp
//
// Optimal-structure reduction of the QoS problem. Beamformers are restricted
// to w_i = R^{-1}(lambda) H_i a_i, which turns the N-dimensional problem into
// one over K_tot complex weights a:
//
//   min  sum_i ||C_i a_i||^2
//   s.t. |a_i^H f_iik|^2 / (sum_{j != i} |a_j^H f_jik|^2 + sigma^2) >= gamma_ik
//
// with C_i = R^{-1} H_i and f_jik = C_j^H h_ik. Any lambda >= 0 gives a valid
// parameterization; lambda only affects solution quality.

#pragma once

#include "mcbf/instance.hpp"
#include "mcbf/types.hpp"

#include <vector>

namespace mcbf {

struct DualParams {
  RVec lambda;  // one entry per user, >= 0
};

struct FixedPointResult {
  DualParams params;
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;  // max relative change of the final sweep
};

// R(lambda) = I + sum_u lambda_u gamma_u h_u h_u^H.
CMat build_R(const ProblemInstance& inst, const DualParams& dual);

// Uplink-downlink duality fixed point
//   lambda_u = 1 / ((1 + gamma_u) h_u^H R(lambda)^{-1} h_u),
// iterated in the equivalent form lambda_u <- 1 / (h_u^H R_{-u}^{-1} h_u),
// where R_{-u} leaves out user u's own term, started from lambda_u = 1/N. The quadratic forms are evaluated in K_tot
// dimensions through the Woodbury identity, so no N x N factorization is done
// per sweep.
FixedPointResult fixed_point_lambda(const ProblemInstance& inst, int max_iters = 200,
                                    double tol = 1e-5);

class WeightProblem {
 public:
  const GroupLayout& layout() const { return layout_; }
  int num_groups() const { return layout_.num_groups(); }
  int num_users() const { return layout_.total(); }
  int num_antennas() const { return num_antennas_; }
  const RVec& sinr_targets() const { return gammas_; }
  double noise_power() const { return sigma2_; }
  const DualParams& dual() const { return dual_; }

  // C_g = R^{-1} H_g, N x K_g.
  const CMat& filter(int g) const { return filters_[g]; }
  // K_j x K_tot table whose column u is f_{j,u} = C_j^H h_u.
  const CMat& f_table(int j) const { return f_tables_[j]; }
  auto f(int j, int u) const { return f_tables_[j].col(u); }
  // C_g^H C_g, Hermitian PSD.
  const CMat& gram(int g) const { return grams_[g]; }

  // G x K_tot matrix with entry (j, u) = a_j^H f_{j,u}.
  CMat projections(const CVec& a) const;

  // SINR of every user under weights a, evaluated entirely in weight space.
  RVec p1_sinr(const CVec& a) const;
  bool p1_feasible(const CVec& a, double rel_tol) const;

 private:
  friend WeightProblem build_weight_problem(const ProblemInstance&, const DualParams&);

  GroupLayout layout_;
  int num_antennas_ = 0;
  RVec gammas_;
  double sigma2_ = 1.0;
  DualParams dual_;
  std::vector<CMat> filters_;
  std::vector<CMat> f_tables_;
  std::vector<CMat> grams_;
};

// One Cholesky factorization of R, then C = R^{-1} H by triangular solves.
WeightProblem build_weight_problem(const ProblemInstance& inst, const DualParams& dual);

// Convenience: fixed point with default settings, then build.
WeightProblem build_weight_problem(const ProblemInstance& inst);

// w_i = C_i a_i.
BeamformingSolution recover_beamformers(const WeightProblem& wp, const CVec& a);

// sum_i a_i^H (C_i^H C_i) a_i, computed from the cached Gram matrices.
double weight_objective(const WeightProblem& wp, const CVec& a);

// Least-squares weights for a given beamformer: a_i = argmin ||C_i a_i - w_i||.
CVec project_beamformers(const WeightProblem& wp, const BeamformingSolution& w);

// Real lifting. A complex K-vector a maps to x = [Re a; Im a] per group, and
// |a_j^H f|^2 = ||Ftilde^T x_j||^2 with Ftilde = [Re f, -Im f; Im f, Re f].
struct RealWeightProblem {
  GroupLayout layout;
  std::vector<RMat> gram_lift;    // 2K_g x 2K_g, equals A_g^T A_g
  std::vector<RMat> operator_A;   // 2K_g x 2K_g factor with ||A_g x||^2 = x^T gram_lift x
  std::vector<RMat> lifted_f;     // 2K_j x 2K_tot, columns (2u, 2u+1) hold Ftilde_{j,u}
  RVec sinr_targets;
  double noise_power = 1.0;

  int num_groups() const { return layout.num_groups(); }
  int num_users() const { return layout.total(); }
  int real_offset(int g) const { return 2 * layout.offset(g); }
  int real_size(int g) const { return 2 * layout.size(g); }
};

RealWeightProblem lift_real(const WeightProblem& wp);

// [Re H, -Im H; Im H, Re H] for a Hermitian H: a^H H a = x^T lift(H) x.
RMat lift_hermitian(const CMat& h);
// Ftilde for a single complex vector.
RMat lift_vector(const Eigen::Ref<const CVec>& f);

RVec to_real(const CVec& a, const GroupLayout& layout);
CVec to_complex(const RVec& x, const GroupLayout& layout);

}  // namespace mcbf
