// include/mcbf/harness.hpp
//
// Experiment driver: expands a run configuration into (N, K, seed) cells,
// solves each cell (in parallel), and writes plot-ready CSV.

#pragma once

#include "mcbf/mmf.hpp"
#include "mcbf/qos.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mcbf {

enum class RunMode { Qos, MmfScaling, MmfBisection };

std::string_view to_string(RunMode m);
RunMode parse_mode(std::string_view s);

struct RunConfig {
  RunMode mode = RunMode::Qos;
  // Instance source: a file, or the generator over every (N, K, seed).
  std::optional<std::filesystem::path> instance_file;
  std::vector<int> n_values{64};
  int groups = 3;
  std::vector<int> k_values{4};
  double sinr_db = 10.0;
  double sigma2 = 1.0;
  std::vector<std::uint64_t> seeds{1};

  QosOptions qos;
  // Beamformers used as the start instead of an initializer.
  std::optional<std::filesystem::path> init_file;
  double power_db = 10.0;  // MMF budget P / sigma^2
  BisectionConfig bisection;
  int threads = 0;         // 0: hardware concurrency

  void validate() const;
  std::string init_label() const;
};

struct RunRecord {
  RunMode mode = RunMode::Qos;
  std::string engine;
  std::string init;
  int n = 0;
  int g = 0;
  int k = 0;
  std::uint64_t seed = 0;
  double sinr_target_db = 0.0;
  double power_db = 0.0;  // transmit power over sigma^2, dB
  std::optional<double> t_s;
  std::optional<double> t_lower_bound;
  int outer_iters = 0;
  int inner_iters_total = 0;
  bool init_ok = false;
  double wall_ms = 0.0;
  bool ok = false;
  std::string error;
  std::string config_hash;
  BeamformingSolution beams;  // returned solution, empty on failure
};

// Seed of the initializer stream for a cell with instance seed `seed`.
std::uint64_t init_seed_for(std::uint64_t seed);

nlohmann::json config_to_json(const RunConfig& cfg);
// Hex FNV-1a of the canonical config JSON.
std::string config_hash(const RunConfig& cfg);

// One record per (instance, seed), ordered by (N, K, seed). Solver errors are
// recorded on their row and do not stop the run.
std::vector<RunRecord> run(const RunConfig& cfg);

// Sweep grid: a JSON object whose list-valued "modes", "engines", "inits"
// fields are expanded into one RunConfig each.
std::vector<RunConfig> parse_grid(const nlohmann::json& grid);
std::vector<RunConfig> read_grid(const std::filesystem::path& path);

extern const char* const kCsvHeader;
void write_csv(std::ostream& os, const std::vector<RunRecord>& records);
// CSV plus a `<path>.meta.json` sidecar holding the configs and their hashes.
void write_results(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                   const std::vector<RunConfig>& configs);

struct SummaryRow {
  RunMode mode = RunMode::Qos;
  std::string engine;
  std::string init;
  int n = 0;
  int g = 0;
  int k = 0;
  int count = 0;
  int failures = 0;
  double power_db_mean = 0.0;
  double power_db_std = 0.0;
  double t_db_mean = 0.0;  // min weighted SINR in dB (MMF rows, NaN otherwise; written empty)
  double t_db_std = 0.0;
  double outer_mean = 0.0;
  double inner_mean = 0.0;
  double wall_ms_mean = 0.0;
};

// Per-configuration aggregates over successful rows. Throws on empty input.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

// Beamformer persistence: {"beams": [[[re, im], ...], ...]}.
void write_beams(const BeamformingSolution& w, const std::filesystem::path& path);
BeamformingSolution read_beams(const std::filesystem::path& path);

}  // namespace mcbf
