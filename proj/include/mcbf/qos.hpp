// include/mcbf/qos.hpp
//
// End-to-end QoS solve: dual fixed point, weight problem, feasible start
// (initializer or warm start), then SCA with the chosen inner engine.

#pragma once

#include "mcbf/asca.hpp"
#include "mcbf/esca.hpp"
#include "mcbf/instance.hpp"
#include "mcbf/sca.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace mcbf {

enum class EngineKind { Esca, Asca };
enum class InitKind { Eim, Aim };

std::string_view to_string(EngineKind e);
std::string_view to_string(InitKind i);
EngineKind parse_engine(std::string_view s);
InitKind parse_init(std::string_view s);

struct QosOptions {
  EngineKind engine = EngineKind::Esca;
  InitKind init = InitKind::Eim;
  EscaConfig esca;
  AscaConfig asca;
  ScaConfig sca;
  std::uint64_t init_seed = 1;
  int init_iters = 2000;
  int init_retries = 20;
};

struct QosResult {
  bool init_ok = false;
  bool warm_started = false;
  InitResult init;
  std::optional<SolveReport> report;  // empty when no feasible start was found

  bool ok() const { return report.has_value(); }
};

// Feasible weights for `wp` derived from a beamformer: least-squares
// projection onto the structure followed by the smallest common scale that
// meets every target. Empty when some user cannot be served that way.
std::optional<CVec> warm_start_weights(const WeightProblem& wp, const BeamformingSolution& w);

// Runs the initializer selected in `opt` on `wp`.
InitResult run_initializer(const WeightProblem& wp, const QosOptions& opt);

std::unique_ptr<InnerEngine> make_engine(const WeightProblem& wp, const QosOptions& opt);

// A warm start, when given and usable, replaces the initializer.
QosResult solve_qos(const ProblemInstance& inst, const QosOptions& opt,
                    const BeamformingSolution* warm = nullptr);

}  // namespace mcbf
