// src/instance.cpp

#include "mcbf/instance.hpp"

#include "mcbf/errors.hpp"
#include "mcbf/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace mcbf {

GroupLayout::GroupLayout(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  offsets_.reserve(sizes_.size());
  for (std::size_t g = 0; g < sizes_.size(); ++g) {
    if (sizes_[g] < 1) throw InvalidInstance("group sizes must be positive");
    offsets_.push_back(total_);
    for (int k = 0; k < sizes_[g]; ++k) group_of_.push_back(static_cast<int>(g));
    total_ += sizes_[g];
  }
}

void ProblemInstance::validate() const {
  if (num_antennas < 1) throw InvalidInstance("num_antennas must be positive");
  if (layout.num_groups() < 1) throw InvalidInstance("at least one group required");
  if (channels.rows() != num_antennas || channels.cols() != layout.total())
    throw InvalidInstance("channel matrix must be N x K_tot");
  if (sinr_targets.size() != layout.total())
    throw InvalidInstance("one SINR target per user required");
  if (!(sinr_targets.array() > 0.0).all()) throw InvalidInstance("SINR targets must be positive");
  if (!(noise_power > 0.0)) throw InvalidInstance("noise power must be positive");
  if (power_budget && !(*power_budget > 0.0))
    throw InvalidInstance("power budget must be positive");
  if (!channels.allFinite()) throw InvalidInstance("channels must be finite");
}

ProblemInstance ProblemInstance::with_scaled_targets(double factor) const {
  ProblemInstance out = *this;
  out.sinr_targets *= factor;
  return out;
}

BeamformingSolution BeamformingSolution::zeros(int groups, int antennas) {
  BeamformingSolution w;
  w.beams.assign(groups, CVec::Zero(antennas));
  return w;
}

BeamformingSolution BeamformingSolution::scaled(double factor) const {
  BeamformingSolution out = *this;
  for (auto& b : out.beams) b *= factor;
  return out;
}

ProblemInstance generate_instance(int n, int groups, int users_per_group, double sinr_db,
                                  double sigma2, std::uint64_t seed) {
  if (n < 1 || groups < 1 || users_per_group < 1)
    throw InvalidInstance("instance sizes must be >= 1");
  ProblemInstance inst;
  inst.num_antennas = n;
  inst.layout = GroupLayout(std::vector<int>(groups, users_per_group));
  inst.noise_power = sigma2;
  const int total = inst.layout.total();
  inst.sinr_targets = RVec::Constant(total, from_db(sinr_db));
  inst.channels.resize(n, total);
  GaussianStream rng(seed);
  // Column-major fill: user by user, antenna by antenna.
  for (int u = 0; u < total; ++u)
    for (int r = 0; r < n; ++r) inst.channels(r, u) = rng.complex_normal();
  inst.validate();
  return inst;
}

namespace {

void check_dims(const ProblemInstance& inst, const BeamformingSolution& w) {
  if (static_cast<int>(w.beams.size()) != inst.num_groups())
    throw DimensionError("beamformer count does not match group count");
  for (const auto& b : w.beams)
    if (b.size() != inst.num_antennas)
      throw DimensionError("beamformer length does not match antenna count");
}

}  // namespace

RVec sinr(const ProblemInstance& inst, const BeamformingSolution& w) {
  check_dims(inst, w);
  const int total = inst.num_users();
  // gains(j, u) = |w_j^H h_u|^2
  RMat gains(inst.num_groups(), total);
  for (int j = 0; j < inst.num_groups(); ++j)
    gains.row(j) = (w.beams[j].adjoint() * inst.channels).cwiseAbs2();
  RVec out(total);
  for (int u = 0; u < total; ++u) {
    const int i = inst.layout.group_of(u);
    const double signal = gains(i, u);
    const double interf = gains.col(u).sum() - signal;
    out(u) = signal / (std::max(interf, 0.0) + inst.noise_power);
  }
  return out;
}

RVec interference(const ProblemInstance& inst, const BeamformingSolution& w) {
  check_dims(inst, w);
  const int total = inst.num_users();
  RVec out = RVec::Zero(total);
  for (int j = 0; j < inst.num_groups(); ++j) {
    RVec g = (w.beams[j].adjoint() * inst.channels).cwiseAbs2().transpose();
    for (int u = 0; u < total; ++u)
      if (inst.layout.group_of(u) != j) out(u) += g(u);
  }
  return out;
}

double total_power(const BeamformingSolution& w) {
  double p = 0.0;
  for (const auto& b : w.beams) p += b.squaredNorm();
  return p;
}

bool check_qos_feasible(const ProblemInstance& inst, const BeamformingSolution& w,
                        double rel_tol) {
  RVec s = sinr(inst, w);
  return (s.array() >= inst.sinr_targets.array() * (1.0 - rel_tol)).all();
}

double db(double ratio) { return 10.0 * std::log10(ratio); }
double from_db(double value_db) { return std::pow(10.0, value_db / 10.0); }

std::string instance_to_json(const ProblemInstance& inst) {
  using nlohmann::json;
  json j;
  j["n"] = inst.num_antennas;
  j["sigma2"] = inst.noise_power;
  j["power_budget"] = inst.power_budget ? json(*inst.power_budget) : json(nullptr);
  json groups = json::array();
  for (int g = 0; g < inst.num_groups(); ++g) {
    json gammas = json::array();
    json chans = json::array();
    for (int k = 0; k < inst.layout.size(g); ++k) {
      const int u = inst.layout.index(g, k);
      gammas.push_back(inst.sinr_targets(u));
      json vec = json::array();
      for (int r = 0; r < inst.num_antennas; ++r)
        vec.push_back(json::array({inst.channels(r, u).real(), inst.channels(r, u).imag()}));
      chans.push_back(std::move(vec));
    }
    groups.push_back({{"gammas", std::move(gammas)}, {"channels", std::move(chans)}});
  }
  j["groups"] = std::move(groups);
  return j.dump();
}

ProblemInstance instance_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInstance(std::string("instance JSON: ") + e.what());
  }
  try {
    ProblemInstance inst;
    inst.num_antennas = j.at("n").get<int>();
    inst.noise_power = j.at("sigma2").get<double>();
    if (j.contains("power_budget") && !j["power_budget"].is_null())
      inst.power_budget = j["power_budget"].get<double>();
    const auto& groups = j.at("groups");
    std::vector<int> sizes;
    for (const auto& g : groups) sizes.push_back(static_cast<int>(g.at("channels").size()));
    inst.layout = GroupLayout(sizes);
    inst.channels.resize(inst.num_antennas, inst.layout.total());
    inst.sinr_targets.resize(inst.layout.total());
    for (int g = 0; g < inst.layout.num_groups(); ++g) {
      const auto& gj = groups[g];
      const auto& gammas = gj.at("gammas");
      const auto& chans = gj.at("channels");
      if (static_cast<int>(gammas.size()) != inst.layout.size(g))
        throw InvalidInstance("gammas/channels length mismatch");
      for (int k = 0; k < inst.layout.size(g); ++k) {
        const int u = inst.layout.index(g, k);
        inst.sinr_targets(u) = gammas[k].get<double>();
        const auto& vec = chans[k];
        if (static_cast<int>(vec.size()) != inst.num_antennas)
          throw InvalidInstance("channel vector length must equal n");
        for (int r = 0; r < inst.num_antennas; ++r)
          inst.channels(r, u) = cdouble(vec[r].at(0).get<double>(), vec[r].at(1).get<double>());
      }
    }
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw InvalidInstance(std::string("instance JSON: ") + e.what());
  }
}

void write_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << instance_to_json(inst) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ProblemInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace mcbf
