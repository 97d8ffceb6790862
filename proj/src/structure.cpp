// src/structure.cpp

#include "mcbf/structure.hpp"

#include "mcbf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcbf {

namespace {

void check_dual(const ProblemInstance& inst, const DualParams& dual) {
  if (dual.lambda.size() != inst.num_users())
    throw DimensionError("lambda must have one entry per user");
  if ((dual.lambda.array() < 0.0).any()) throw std::invalid_argument("lambda must be >= 0");
}

// lambda is clamped to this value so a divergent iteration (more users than
// the antennas can separate) stays finite.
constexpr double kLambdaCap = 1e12;

}  // namespace

CMat build_R(const ProblemInstance& inst, const DualParams& dual) {
  check_dual(inst, dual);
  RVec weights = dual.lambda.cwiseProduct(inst.sinr_targets);
  CMat scaled = inst.channels * weights.cwiseSqrt().asDiagonal();
  CMat r = CMat::Identity(inst.num_antennas, inst.num_antennas);
  r.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  r.triangularView<Eigen::StrictlyUpper>() = r.adjoint();
  return r;
}

FixedPointResult fixed_point_lambda(const ProblemInstance& inst, int max_iters, double tol) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int total = inst.num_users();
  const CMat gram = inst.channels.adjoint() * inst.channels;
  const RVec gram_diag = gram.diagonal().real();

  FixedPointResult res;
  RVec lambda = RVec::Constant(total, 1.0 / inst.num_antennas);
  for (int it = 1; it <= max_iters; ++it) {
    // h_u^H R^{-1} h_u = G_uu - [X^H (I + D^1/2 G D^1/2)^{-1} X]_uu, X = D^1/2 G.
    RVec root = lambda.cwiseProduct(inst.sinr_targets).cwiseSqrt();
    CMat x = root.asDiagonal() * gram;
    CMat b = x * root.asDiagonal();
    b.diagonal().array() += 1.0;
    Eigen::LLT<CMat> llt(b);
    if (llt.info() != Eigen::Success) throw InternalError("fixed point: factorization failed");
    CMat y = llt.solve(x);
    RVec next(total);
    for (int u = 0; u < total; ++u) {
      double quad = gram_diag(u) - (x.col(u).adjoint() * y.col(u))(0).real();
      quad = std::max(quad, std::numeric_limits<double>::min());
      // Remove the user's own term: t = h^H R_{-u}^{-1} h = s / (1 - q s).
      const double q = lambda(u) * inst.sinr_targets(u);
      const double rest = std::max(1.0 - q * quad, std::numeric_limits<double>::epsilon());
      const double t = quad / rest;
      next(u) = std::min(1.0 / t, kLambdaCap);
    }
    double change = 0.0;
    for (int u = 0; u < total; ++u)
      change = std::max(change, std::abs(next(u) - lambda(u)) / std::max(next(u), 1e-300));
    lambda = next;
    res.iterations = it;
    res.last_change = change;
    if (change <= tol) {
      res.converged = true;
      break;
    }
  }
  res.params.lambda = lambda;
  return res;
}

WeightProblem build_weight_problem(const ProblemInstance& inst, const DualParams& dual) {
  inst.validate();
  check_dual(inst, dual);
  Eigen::LLT<CMat> llt(build_R(inst, dual));
  if (llt.info() != Eigen::Success)
    throw InternalError("R(lambda) factorization failed; R >= I should always be definite");
  const CMat c_all = llt.solve(inst.channels);

  WeightProblem wp;
  wp.layout_ = inst.layout;
  wp.num_antennas_ = inst.num_antennas;
  wp.gammas_ = inst.sinr_targets;
  wp.sigma2_ = inst.noise_power;
  wp.dual_ = dual;
  for (int g = 0; g < inst.num_groups(); ++g) {
    CMat c = c_all.middleCols(inst.layout.offset(g), inst.layout.size(g));
    wp.f_tables_.push_back(c.adjoint() * inst.channels);
    CMat gram = c.adjoint() * c;
    gram = 0.5 * (gram + gram.adjoint()).eval();
    wp.grams_.push_back(std::move(gram));
    wp.filters_.push_back(std::move(c));
  }
  return wp;
}

WeightProblem build_weight_problem(const ProblemInstance& inst) {
  return build_weight_problem(inst, fixed_point_lambda(inst).params);
}

CMat WeightProblem::projections(const CVec& a) const {
  if (a.size() != num_users()) throw DimensionError("weights must have K_tot entries");
  CMat out(num_groups(), num_users());
  for (int j = 0; j < num_groups(); ++j)
    out.row(j) = group_segment(a, layout_, j).adjoint() * f_tables_[j];
  return out;
}

RVec WeightProblem::p1_sinr(const CVec& a) const {
  const RMat gains = projections(a).cwiseAbs2();
  RVec out(num_users());
  for (int u = 0; u < num_users(); ++u) {
    const int i = layout_.group_of(u);
    const double signal = gains(i, u);
    out(u) = signal / (std::max(gains.col(u).sum() - signal, 0.0) + sigma2_);
  }
  return out;
}

bool WeightProblem::p1_feasible(const CVec& a, double rel_tol) const {
  return (p1_sinr(a).array() >= gammas_.array() * (1.0 - rel_tol)).all();
}

BeamformingSolution recover_beamformers(const WeightProblem& wp, const CVec& a) {
  if (a.size() != wp.num_users()) throw DimensionError("weights must have K_tot entries");
  BeamformingSolution w;
  for (int g = 0; g < wp.num_groups(); ++g)
    w.beams.push_back(wp.filter(g) * group_segment(a, wp.layout(), g));
  return w;
}

double weight_objective(const WeightProblem& wp, const CVec& a) {
  if (a.size() != wp.num_users()) throw DimensionError("weights must have K_tot entries");
  double total = 0.0;
  for (int g = 0; g < wp.num_groups(); ++g) {
    auto seg = group_segment(a, wp.layout(), g);
    total += (seg.adjoint() * wp.gram(g) * seg)(0).real();
  }
  return std::max(total, 0.0);
}

CVec project_beamformers(const WeightProblem& wp, const BeamformingSolution& w) {
  if (static_cast<int>(w.beams.size()) != wp.num_groups())
    throw DimensionError("beamformer count does not match group count");
  CVec a(wp.num_users());
  for (int g = 0; g < wp.num_groups(); ++g)
    group_segment(a, wp.layout(), g) =
        wp.filter(g).colPivHouseholderQr().solve(w.beams[g]);
  return a;
}

RMat lift_hermitian(const CMat& h) {
  const Eigen::Index k = h.rows();
  RMat out(2 * k, 2 * k);
  out.topLeftCorner(k, k) = h.real();
  out.topRightCorner(k, k) = -h.imag();
  out.bottomLeftCorner(k, k) = h.imag();
  out.bottomRightCorner(k, k) = h.real();
  return out;
}

RMat lift_vector(const Eigen::Ref<const CVec>& f) {
  const Eigen::Index k = f.size();
  RMat out(2 * k, 2);
  out.col(0) << f.real(), f.imag();
  out.col(1) << -f.imag(), f.real();
  return out;
}

RVec to_real(const CVec& a, const GroupLayout& layout) {
  if (a.size() != layout.total()) throw DimensionError("weights must have K_tot entries");
  RVec x(2 * layout.total());
  for (int g = 0; g < layout.num_groups(); ++g) {
    const int k = layout.size(g);
    auto seg = group_segment(a, layout, g);
    x.segment(2 * layout.offset(g), k) = seg.real();
    x.segment(2 * layout.offset(g) + k, k) = seg.imag();
  }
  return x;
}

CVec to_complex(const RVec& x, const GroupLayout& layout) {
  if (x.size() != 2 * layout.total()) throw DimensionError("lifted vector must have 2 K_tot entries");
  CVec a(layout.total());
  for (int g = 0; g < layout.num_groups(); ++g) {
    const int k = layout.size(g);
    for (int m = 0; m < k; ++m)
      a(layout.offset(g) + m) =
          cdouble(x(2 * layout.offset(g) + m), x(2 * layout.offset(g) + k + m));
  }
  return a;
}

RealWeightProblem lift_real(const WeightProblem& wp) {
  RealWeightProblem rp;
  rp.layout = wp.layout();
  rp.sinr_targets = wp.sinr_targets();
  rp.noise_power = wp.noise_power();
  const int total = wp.num_users();
  for (int g = 0; g < wp.num_groups(); ++g) {
    RMat m = lift_hermitian(wp.gram(g));
    // A_g with A_g^T A_g = M: the transposed Cholesky factor when M is
    // definite, a symmetric square root when C_g is rank deficient (N < K_g).
    Eigen::LLT<RMat> llt(m);
    RMat a;
    if (llt.info() == Eigen::Success) {
      a = llt.matrixU();
    } else {
      Eigen::SelfAdjointEigenSolver<RMat> eig(m);
      a = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
          eig.eigenvectors().transpose();
    }
    rp.gram_lift.push_back(std::move(m));
    rp.operator_A.push_back(std::move(a));

    const int k = wp.layout().size(g);
    RMat lf(2 * k, 2 * total);
    for (int u = 0; u < total; ++u) lf.middleCols(2 * u, 2) = lift_vector(wp.f(g, u));
    rp.lifted_f.push_back(std::move(lf));
  }
  return rp;
}

}  // namespace mcbf
