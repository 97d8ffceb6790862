// src/sca.cpp

#include "mcbf/sca.hpp"

#include "mcbf/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace mcbf {

ScaSubproblem::ScaSubproblem(const WeightProblem& wp, CVec anchor)
    : wp_(&wp), anchor_(std::move(anchor)) {
  if (anchor_.size() != wp.num_users()) throw DimensionError("anchor must have K_tot entries");
  anchor_proj_ = wp.projections(anchor_);
  const int total = wp.num_users();
  e2_.resize(total);
  e3_.resize(total);
  for (int u = 0; u < total; ++u) {
    const int i = wp.layout().group_of(u);
    e2_(u) = std::norm(anchor_proj_(i, u)) + wp.sinr_targets()(u) * wp.noise_power();
    e3_(u) = std::conj(anchor_proj_(i, u));
  }
}

RVec ScaSubproblem::constraint_values(const CVec& a) const {
  const CMat p = wp_->projections(a);
  const int total = wp_->num_users();
  RVec out(total);
  for (int u = 0; u < total; ++u) {
    const int i = wp_->layout().group_of(u);
    const double interf = p.col(u).cwiseAbs2().sum() - std::norm(p(i, u));
    out(u) = e2_(u) + wp_->sinr_targets()(u) * interf - 2.0 * (p(i, u) * e3_(u)).real();
  }
  return out;
}

double ScaSubproblem::max_normalized_violation(const CVec& a) const {
  return constraint_values(a).cwiseQuotient(e2_).maxCoeff();
}

ScaSubproblem convexify(const WeightProblem& wp, const CVec& anchor) {
  return ScaSubproblem(wp, anchor);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Feasible scales s for the constraint gamma I s^2 - 2 S s + e2 <= 0.
struct Interval {
  double lo = 0.0;
  double hi = kInf;
  bool empty() const { return !(lo <= hi); }
};

Interval scale_interval(double gi, double s, double e2) {
  if (s <= 0.0) return {1.0, 0.0};
  if (gi <= 0.0) return {e2 / (2.0 * s), kInf};
  const double disc = s * s - gi * e2;
  if (disc < 0.0) return {1.0, 0.0};
  const double root = std::sqrt(disc);
  return {e2 / (s + root), (s + root) / gi};
}

bool all_feasible(const ScaSubproblem& sub, const CVec& a) {
  return (sub.constraint_values(a).array() <= 0.0).all();
}

std::optional<CVec> scale_up(const ScaSubproblem& sub, const CVec& a) {
  const WeightProblem& wp = sub.problem();
  const CMat p = wp.projections(a);
  Interval range{1.0, kInf};
  for (int u = 0; u < wp.num_users(); ++u) {
    const int i = wp.layout().group_of(u);
    const double gi =
        wp.sinr_targets()(u) * (p.col(u).cwiseAbs2().sum() - std::norm(p(i, u)));
    const double s = (p(i, u) * sub.e3()(u)).real();
    Interval iv = scale_interval(gi, s, sub.e2()(u));
    range.lo = std::max(range.lo, iv.lo);
    range.hi = std::min(range.hi, iv.hi);
    if (range.empty()) return std::nullopt;
  }
  for (double bump : {1e-12, 1e-9, 1e-6}) {
    double s = range.lo * (1.0 + bump);
    if (s > range.hi) s = 0.5 * (range.lo + range.hi);
    CVec out = s * a;
    if (all_feasible(sub, out)) return out;
  }
  return std::nullopt;
}

CVec pull_back(const ScaSubproblem& sub, const CVec& a) {
  const WeightProblem& wp = sub.problem();
  const CVec& v = sub.anchor();
  const CVec delta = a - v;
  const CMat pv = sub.anchor_projections();
  const CMat pd = wp.projections(delta);
  const RVec c0 = sub.constraint_values(v);
  double t = 1.0;
  for (int u = 0; u < wp.num_users(); ++u) {
    const int i = wp.layout().group_of(u);
    const double gamma = wp.sinr_targets()(u);
    double qa = 0.0, qb = 0.0;
    for (int j = 0; j < wp.num_groups(); ++j) {
      if (j == i) continue;
      qa += std::norm(pd(j, u));
      qb += (std::conj(pv(j, u)) * pd(j, u)).real();
    }
    qa *= gamma;
    qb = 2.0 * gamma * qb - 2.0 * (pd(i, u) * sub.e3()(u)).real();
    const double cc = std::min(c0(u), 0.0);
    // Largest root of qa t^2 + qb t + cc, with cc <= 0 so the root is >= 0.
    if (qa * 1.0 + qb + cc <= 0.0) continue;
    double root;
    if (qa > 0.0) {
      const double disc = std::max(qb * qb - 4.0 * qa * cc, 0.0);
      root = qb > 0.0 ? (-2.0 * cc) / (qb + std::sqrt(disc))
                      : (-qb + std::sqrt(disc)) / (2.0 * qa);
    } else {
      root = qb > 0.0 ? -cc / qb : 1.0;
    }
    t = std::min(t, std::max(root, 0.0));
  }
  for (double shrink : {1e-12, 1e-9, 1e-6, 1e-3}) {
    CVec out = v + (t * (1.0 - shrink)) * delta;
    if (all_feasible(sub, out)) return out;
  }
  return v;
}

}  // namespace

CVec restore_feasibility(const ScaSubproblem& sub, const CVec& candidate) {
  if (candidate.size() != sub.problem().num_users())
    throw DimensionError("candidate must have K_tot entries");
  if (all_feasible(sub, candidate)) return candidate;
  if (auto scaled = scale_up(sub, candidate)) return *scaled;
  return pull_back(sub, candidate);
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxOuter: return "max_outer";
    case Termination::EngineFailure: return "engine_failure";
  }
  return "unknown";
}

int SolveReport::total_inner_iterations() const {
  return std::accumulate(inner_iterations.begin(), inner_iterations.end(), 0);
}

CVec segment_minimizer(const WeightProblem& wp, const CVec& v, const CVec& c) {
  const double pv = weight_objective(wp, v);
  const double pc = weight_objective(wp, c);
  if (pc <= pv) return c;
  const double pd = weight_objective(wp, c - v);
  // P(v + tau (c - v)) = pv + (pc - pv - pd) tau + pd tau^2.
  if (!(pd > 0.0)) return v;
  const double tau = std::clamp(-(pc - pv - pd) / (2.0 * pd), 0.0, 1.0);
  if (tau == 1.0) return c;
  return v + tau * (c - v);
}

SolveReport sca_solve(const WeightProblem& wp, InnerEngine& engine, const CVec& v0,
                      const ScaConfig& cfg) {
  if (!(cfg.outer_tol > 0.0) || cfg.max_outer < 1)
    throw std::invalid_argument("outer_tol must be > 0 and max_outer >= 1");
  if (&engine.problem() != &wp)
    throw std::invalid_argument("engine was built for a different weight problem");
  if (v0.size() != wp.num_users()) throw DimensionError("v0 must have K_tot entries");
  if (!wp.p1_feasible(v0, 1e-9)) throw InfeasibleStart("initial weights violate an SINR target");

  const auto start = std::chrono::steady_clock::now();
  SolveReport rep;
  CVec v = v0;
  rep.power_trace.push_back(weight_objective(wp, v));
  for (int l = 0; l < cfg.max_outer; ++l) {
    const ScaSubproblem sub = convexify(wp, v);
    InnerResult inner;
    try {
      inner = engine.solve(sub, v);
    } catch (const EngineFailure& e) {
      rep.termination = Termination::EngineFailure;
      rep.failure = e.what();
      break;
    }
    rep.inner_iterations.push_back(inner.iterations);
    CVec next = segment_minimizer(wp, v, restore_feasibility(sub, inner.weights));
    const double norm = next.norm();
    const double change = norm > 0.0 ? (next - v).norm() / norm : 0.0;
    v = std::move(next);
    rep.power_trace.push_back(weight_objective(wp, v));
    if (change <= cfg.outer_tol) {
      rep.termination = Termination::Converged;
      break;
    }
  }
  rep.weights = v;
  rep.beams = recover_beamformers(wp, v);
  rep.power = weight_objective(wp, v);
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return rep;
}

std::optional<double> feasibility_scale(const WeightProblem& wp, const CVec& a) {
  const RMat gains = wp.projections(a).cwiseAbs2();
  double s2 = 0.0;
  for (int u = 0; u < wp.num_users(); ++u) {
    const int i = wp.layout().group_of(u);
    const double gamma = wp.sinr_targets()(u);
    const double signal = gains(i, u);
    const double interf = gains.col(u).sum() - signal;
    const double margin = signal - gamma * interf;
    if (!(margin > 0.0)) return std::nullopt;
    s2 = std::max(s2, gamma * wp.noise_power() / margin);
  }
  return std::sqrt(s2);
}

}  // namespace mcbf
