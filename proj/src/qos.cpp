// src/qos.cpp

#include "mcbf/qos.hpp"

#include "mcbf/structure.hpp"

#include <memory>
#include <stdexcept>

namespace mcbf {

std::string_view to_string(EngineKind e) { return e == EngineKind::Esca ? "esca" : "asca"; }
std::string_view to_string(InitKind i) { return i == InitKind::Eim ? "eim" : "aim"; }

EngineKind parse_engine(std::string_view s) {
  if (s == "esca") return EngineKind::Esca;
  if (s == "asca") return EngineKind::Asca;
  throw std::invalid_argument("unknown engine: " + std::string(s));
}

InitKind parse_init(std::string_view s) {
  if (s == "eim") return InitKind::Eim;
  if (s == "aim") return InitKind::Aim;
  throw std::invalid_argument("unknown initializer: " + std::string(s));
}

std::optional<CVec> warm_start_weights(const WeightProblem& wp, const BeamformingSolution& w) {
  CVec a = project_beamformers(wp, w);
  auto s = feasibility_scale(wp, a);
  if (!s) return std::nullopt;
  for (double bump : {1e-12, 1e-9, 1e-6}) {
    CVec scaled = (*s * (1.0 + bump)) * a;
    if (wp.p1_feasible(scaled, 0.0)) return scaled;
  }
  return std::nullopt;
}

InitResult run_initializer(const WeightProblem& wp, const QosOptions& opt) {
  if (opt.init == InitKind::Eim)
    return eim_init(wp, opt.init_seed, opt.init_iters, opt.init_retries, opt.esca);
  return aim_init(wp, opt.init_seed, opt.init_iters, opt.init_retries);
}

std::unique_ptr<InnerEngine> make_engine(const WeightProblem& wp, const QosOptions& opt) {
  if (opt.engine == EngineKind::Esca) return std::make_unique<EscaEngine>(wp, opt.esca);
  return std::make_unique<AscaEngine>(wp, opt.asca);
}

QosResult solve_qos(const ProblemInstance& inst, const QosOptions& opt,
                    const BeamformingSolution* warm) {
  inst.validate();
  const WeightProblem wp = build_weight_problem(inst);
  QosResult res;
  std::optional<CVec> v0;
  if (warm) {
    v0 = warm_start_weights(wp, *warm);
    res.warm_started = v0.has_value();
  }
  if (!v0) {
    res.init = run_initializer(wp, opt);
    v0 = res.init.weights;
  }
  res.init_ok = v0.has_value();
  if (!v0) return res;
  auto engine = make_engine(wp, opt);
  res.report = sca_solve(wp, *engine, *v0, opt.sca);
  return res;
}

}  // namespace mcbf
