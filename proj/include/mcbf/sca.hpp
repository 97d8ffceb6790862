// include/mcbf/sca.hpp
//
// Successive convex approximation of the weight problem. Around an anchor v
// the signal term |a_i^H f_iik|^2 is replaced by its tangent lower bound
// 2 Re{a_i^H f f^H v_i} - |v_i^H f|^2, giving convex constraints
//
//   e2_u + gamma_u sum_{j != i} |a_j^H f_ju|^2 - 2 Re{(a_i^H f_iu) e3_u} <= 0
//
// with e2_u = |v_i^H f_iu|^2 + gamma_u sigma^2 and e3_u = f_iu^H v_i. Every
// point satisfying them also satisfies the original SINR constraints.

#pragma once

#include "mcbf/structure.hpp"
#include "mcbf/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcbf {

class ScaSubproblem {
 public:
  ScaSubproblem(const WeightProblem& wp, CVec anchor);

  const WeightProblem& problem() const { return *wp_; }
  const CVec& anchor() const { return anchor_; }
  const RVec& e2() const { return e2_; }
  const CVec& e3() const { return e3_; }
  // G x K_tot table of v_j^H f_ju.
  const CMat& anchor_projections() const { return anchor_proj_; }

  // Left-hand sides of the convexified constraints (feasible iff <= 0).
  RVec constraint_values(const CVec& a) const;
  // constraint_values / e2, the natural scale of each constraint.
  double max_normalized_violation(const CVec& a) const;

 private:
  const WeightProblem* wp_;
  CVec anchor_;
  CMat anchor_proj_;
  RVec e2_;
  CVec e3_;
};

ScaSubproblem convexify(const WeightProblem& wp, const CVec& anchor);

// Returns a point satisfying every convexified constraint. A feasible
// candidate is returned unchanged. Otherwise the candidate is scaled up by the
// smallest factor s >= 1 that restores feasibility; when no such factor
// exists the candidate is pulled back towards the anchor along the segment
// joining them.
CVec restore_feasibility(const ScaSubproblem& sub, const CVec& candidate);

// c when it does not raise the objective above v, otherwise the minimizer of
// the objective on the segment from v to c. When v and c both satisfy the
// convexified constraints around v, so does every point between.
CVec segment_minimizer(const WeightProblem& wp, const CVec& v, const CVec& c);

struct InnerResult {
  CVec weights;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // engine specific (ADMM primal residual, ESCA slack)
};

class InnerEngine {
 public:
  virtual ~InnerEngine() = default;
  virtual std::string_view name() const = 0;
  virtual const WeightProblem& problem() const = 0;
  // Approximately solves the subproblem, starting from `start`.
  virtual InnerResult solve(const ScaSubproblem& sub, const CVec& start) = 0;
};

struct ScaConfig {
  double outer_tol = 1e-3;
  int max_outer = 200;
};

enum class Termination { Converged, MaxOuter, EngineFailure };
std::string_view to_string(Termination t);

struct SolveReport {
  CVec weights;
  BeamformingSolution beams;
  double power = 0.0;
  std::vector<double> power_trace;   // objective at v0, v1, ...
  std::vector<int> inner_iterations; // one entry per outer iteration
  double wall_ms = 0.0;
  Termination termination = Termination::MaxOuter;
  std::string failure;

  int outer_iterations() const { return static_cast<int>(inner_iterations.size()); }
  int total_inner_iterations() const;
};

// Runs SCA from a feasible start. Throws InfeasibleStart when v0 violates an
// SINR constraint by more than 1e-9 relative. An EngineFailure part way
// through ends the run with the last (feasible) iterate. A restored inner
// solution with more power than the anchor is pulled back along the segment
// to the anchor, so the power trace never increases.
SolveReport sca_solve(const WeightProblem& wp, InnerEngine& engine, const CVec& v0,
                      const ScaConfig& cfg = {});

// Initializer outcome shared by EIM and AIM.
struct InitResult {
  std::optional<CVec> weights;
  int attempts = 0;
  int iterations = 0;  // summed over attempts
  bool rescued_by_scaling = false;
};

// Smallest common scale s making every SINR constraint hold for s * a, if
// one exists (requires signal > gamma * interference for every user).
std::optional<double> feasibility_scale(const WeightProblem& wp, const CVec& a);

}  // namespace mcbf
