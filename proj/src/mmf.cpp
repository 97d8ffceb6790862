// src/mmf.cpp

#include "mcbf/mmf.hpp"

#include "mcbf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>

namespace mcbf {

double min_weighted_sinr(const ProblemInstance& inst, const BeamformingSolution& w) {
  return sinr(inst, w).cwiseQuotient(inst.sinr_targets).minCoeff();
}

MmfCertificate scale_solution(const ProblemInstance& inst, const BeamformingSolution& w_qos,
                              double power, double rel_tol) {
  if (!(power > 0.0)) throw std::invalid_argument("scale_solution: power must be positive");
  if (!check_qos_feasible(inst, w_qos, rel_tol))
    throw InfeasibleInput("scale_solution: QoS solution misses an SINR target");
  MmfCertificate cert;
  cert.power_budget = power;
  cert.qos_power = total_power(w_qos);
  if (!(cert.qos_power > 0.0)) throw InfeasibleInput("scale_solution: QoS solution has zero power");
  cert.noise_power = inst.noise_power;
  cert.qos_interference = interference(inst, w_qos);
  const double s = cert.scale();
  cert.beams = w_qos.scaled(std::sqrt(s));
  cert.t_s = min_weighted_sinr(inst, cert.beams);
  const RVec& iq = cert.qos_interference;
  const double sigma2 = inst.noise_power;
  cert.lower_bound =
      s * ((iq.array() + sigma2) / (s * iq.array() + sigma2)).minCoeff();
  return cert;
}

double upper_bound(const MmfCertificate& cert, double p_opt) {
  if (!(p_opt > 0.0)) throw std::invalid_argument("upper_bound: P_opt must be positive");
  const RVec& iq = cert.qos_interference;
  const double s = cert.scale();
  const double sigma2 = cert.noise_power;
  return (cert.power_budget / p_opt) *
         ((iq.array() + sigma2) / (s * iq.array() + sigma2)).maxCoeff();
}

namespace {

// Smallest common factor c with c * w meeting every target of `inst`, or
// empty when some user has signal <= gamma * interference.
std::optional<double> beam_feasibility_scale(const ProblemInstance& inst,
                                              const BeamformingSolution& w) {
  const RVec interf = interference(inst, w);
  double c2 = 0.0;
  for (int u = 0; u < inst.num_users(); ++u) {
    const int i = inst.layout.group_of(u);
    const double signal = std::norm(inst.channels.col(u).dot(w.beams[i]));
    const double margin = signal - inst.sinr_targets(u) * interf(u);
    if (!(margin > 0.0)) return std::nullopt;
    c2 = std::max(c2, inst.sinr_targets(u) * inst.noise_power / margin);
  }
  return std::sqrt(c2);
}

// Scaled copy of w that is feasible for `inst`, never larger than w itself
// when w is already feasible.
std::optional<BeamformingSolution> shrink_to_feasible(const ProblemInstance& inst,
                                                      const BeamformingSolution& w) {
  auto c = beam_feasibility_scale(inst, w);
  if (!c) return std::nullopt;
  for (double bump : {0.0, 1e-12, 1e-9}) {
    BeamformingSolution out = w.scaled(*c * (1.0 + bump));
    if (check_qos_feasible(inst, out, 0.0)) return out;
  }
  return std::nullopt;
}

struct Entry {
  double power = 0.0;
  BeamformingSolution beams;
};

class PowerCurve {
 public:
  PowerCurve(const ProblemInstance& inst, const QosOptions& opt) : inst_(&inst), opt_(opt) {}

  double evaluate(double t, BisectionResult& acc) {
    const ProblemInstance scaled = inst_->with_scaled_targets(t);
    const BeamformingSolution* warm = nullptr;
    auto above = points_.lower_bound(t);
    if (above != points_.end()) {
      warm = &above->second.beams;
    } else if (!points_.empty()) {
      warm = &std::prev(points_.end())->second.beams;
    }
    QosResult res = solve_qos(scaled, opt_, warm);
    if (!res.ok()) throw EngineFailure("bisection: no feasible start at t = " + std::to_string(t));
    acc.outer_iterations += res.report->outer_iterations();
    acc.inner_iterations += res.report->total_inner_iterations();
    Entry e{res.report->power, res.report->beams};

    // A solution found for larger targets is feasible here as well, so the
    // recorded power can only be improved by it, and vice versa for smaller t.
    for (auto it = points_.upper_bound(t); it != points_.end(); ++it) {
      if (it->second.power >= e.power) continue;
      if (auto shrunk = shrink_to_feasible(scaled, it->second.beams)) {
        const double p = total_power(*shrunk);
        if (p < e.power) e = Entry{p, std::move(*shrunk)};
      }
    }
    for (auto it = points_.begin(); it != points_.end() && it->first < t; ++it) {
      if (it->second.power <= e.power) continue;
      const ProblemInstance lower = inst_->with_scaled_targets(it->first);
      if (auto shrunk = shrink_to_feasible(lower, e.beams)) {
        const double p = total_power(*shrunk);
        if (p < it->second.power) it->second = Entry{p, std::move(*shrunk)};
      }
    }
    const double power = e.power;
    points_[t] = std::move(e);
    return power;
  }

  const std::map<double, Entry>& points() const { return points_; }

 private:
  const ProblemInstance* inst_;
  QosOptions opt_;
  std::map<double, Entry> points_;
};

}  // namespace

BisectionResult mmf_bisection(const ProblemInstance& inst, double power, const QosOptions& opt,
                              const BisectionConfig& cfg) {
  if (!(power > 0.0)) throw std::invalid_argument("mmf_bisection: power must be positive");
  if (!(cfg.t_lo > 0.0 && cfg.t_lo < cfg.t_hi))
    throw std::invalid_argument("mmf_bisection: need 0 < t_lo < t_hi");
  if (!(cfg.bis_tol > 0.0)) throw std::invalid_argument("mmf_bisection: bis_tol must be positive");

  BisectionResult res;
  PowerCurve curve(inst, opt);
  double lo = cfg.t_lo;
  double hi = cfg.t_hi;
  double p_lo = curve.evaluate(lo, res);
  for (int k = 0; p_lo > power && k < cfg.max_expansions; ++k) {
    lo *= 0.5;
    p_lo = curve.evaluate(lo, res);
  }
  if (p_lo > power) throw BracketFailure("mmf_bisection: power budget below the lower bracket");
  double p_hi = curve.evaluate(hi, res);
  for (int k = 0; p_hi < power && k < cfg.max_expansions; ++k) {
    hi *= 2.0;
    p_hi = curve.evaluate(hi, res);
  }
  if (p_hi < power) throw BracketFailure("mmf_bisection: power budget above the upper bracket");

  double t = lo;
  double p_t = p_lo;
  if (std::abs(p_hi - power) <= cfg.bis_tol * power) {
    t = hi;
    p_t = p_hi;
  }
  while (std::abs(p_t - power) > cfg.bis_tol * power && res.steps < cfg.max_steps &&
         hi / lo - 1.0 > 1e-12) {
    t = std::sqrt(lo * hi);
    p_t = curve.evaluate(t, res);
    ++res.steps;
    if (p_t <= power) lo = t; else hi = t;
  }
  res.t_param = t;
  res.power_at_t = curve.points().at(t).power;

  // Every recorded solution scaled to the budget is feasible; keep the best.
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [tp, e] : curve.points()) {
    res.trace.push_back(BisectionPoint{tp, e.power, e.beams});
    BeamformingSolution cand = e.beams.scaled(std::sqrt(power / e.power));
    const double value = min_weighted_sinr(inst, cand);
    if (value > best) {
      best = value;
      res.beams = std::move(cand);
    }
  }
  res.t = best;
  return res;
}

}  // namespace mcbf
