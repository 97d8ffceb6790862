// include/mcbf/instance.hpp
//
// Problem data for downlink multi-group multicast beamforming and the
// evaluation of candidate beamformers (SINR, transmit power, QoS feasibility).

#pragma once

#include "mcbf/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcbf {

struct ProblemInstance {
  int num_antennas = 0;
  GroupLayout layout;
  CMat channels;      // N x K_tot, column u is h_u
  RVec sinr_targets;  // K_tot, gamma_u > 0
  double noise_power = 1.0;
  std::optional<double> power_budget;

  int num_groups() const { return layout.num_groups(); }
  int num_users() const { return layout.total(); }

  auto group_channels(int g) const {
    return channels.middleCols(layout.offset(g), layout.size(g));
  }

  // Throws InvalidInstance when any invariant is broken.
  void validate() const;

  // Copy with every SINR target multiplied by `factor`.
  ProblemInstance with_scaled_targets(double factor) const;
};

struct BeamformingSolution {
  std::vector<CVec> beams;  // one length-N vector per group

  static BeamformingSolution zeros(int groups, int antennas);
  BeamformingSolution scaled(double factor) const;
};

ProblemInstance generate_instance(int n, int groups, int users_per_group, double sinr_db,
                                  double sigma2, std::uint64_t seed);

// Flattened (group-major) vector of SINR_ik.
RVec sinr(const ProblemInstance& inst, const BeamformingSolution& w);

double total_power(const BeamformingSolution& w);

bool check_qos_feasible(const ProblemInstance& inst, const BeamformingSolution& w,
                        double rel_tol);

// Per-user inter-group interference sum_{j != i} |h_ik^H w_j|^2.
RVec interference(const ProblemInstance& inst, const BeamformingSolution& w);

double db(double ratio);
double from_db(double value_db);

// JSON persistence. Doubles are written in shortest round-trip form, so a
// write/read cycle reproduces every finite value exactly.
std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);
void write_instance(const ProblemInstance& inst, const std::filesystem::path& path);
ProblemInstance read_instance(const std::filesystem::path& path);

}  // namespace mcbf
