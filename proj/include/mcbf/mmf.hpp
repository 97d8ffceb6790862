// include/mcbf/mmf.hpp
//
// Max-min-fair beamforming under a total power budget P. Two routes:
//
// * scaling: take a QoS solution w^Q at the targets gamma (power P^Q) and
//   use w^s = sqrt(P / P^Q) w^Q. With s = P / P^Q and I^Q the inter-group
//   interference under w^Q, the achieved objective obeys
//     s min (I^Q + sigma^2) / (s I^Q + sigma^2) <= t^s
//       <= (P / P_opt) max (I^Q + sigma^2) / (s I^Q + sigma^2)
//   where P_opt is the optimal QoS power.
// * bisection: the QoS power at targets t gamma is increasing in t, so t is
//   bisected until that power matches P.

#pragma once

#include "mcbf/instance.hpp"
#include "mcbf/qos.hpp"

#include <vector>

namespace mcbf {

// min over users of SINR_u / gamma_u.
double min_weighted_sinr(const ProblemInstance& inst, const BeamformingSolution& w);

struct MmfCertificate {
  BeamformingSolution beams;  // w^s
  double power_budget = 0.0;  // P
  double qos_power = 0.0;     // P^Q
  double t_s = 0.0;
  RVec qos_interference;      // I^Q per user
  double noise_power = 1.0;
  double lower_bound = 0.0;

  double scale() const { return power_budget / qos_power; }
};

// Throws InfeasibleInput when w_qos misses a target by more than rel_tol.
MmfCertificate scale_solution(const ProblemInstance& inst, const BeamformingSolution& w_qos,
                              double power, double rel_tol = 1e-6);

// Right-hand bound for a given optimal-power estimate; non-increasing in p_opt.
double upper_bound(const MmfCertificate& cert, double p_opt);

struct BisectionConfig {
  double t_lo = 0.1;
  double t_hi = 10.0;
  double bis_tol = 1e-2;  // relative power mismatch
  int max_expansions = 6;
  int max_steps = 60;
};

struct BisectionPoint {
  double t = 0.0;
  double power = 0.0;  // QoS power achieved at targets t gamma
  BeamformingSolution beams;
};

struct BisectionResult {
  BeamformingSolution beams;  // total power P
  double t = 0.0;             // min weighted SINR of `beams`
  double t_param = 0.0;       // bisection parameter at termination
  double power_at_t = 0.0;
  int steps = 0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  std::vector<BisectionPoint> trace;  // sorted by t
};

// Throws BracketFailure when expansion cannot bracket P, and EngineFailure when
// no feasible start can be found at some t.
BisectionResult mmf_bisection(const ProblemInstance& inst, double power, const QosOptions& opt,
                              const BisectionConfig& cfg = {});

}  // namespace mcbf
