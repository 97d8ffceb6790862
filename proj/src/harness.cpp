// src/harness.cpp

#include "mcbf/harness.hpp"

#include "mcbf/errors.hpp"
#include "mcbf/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace mcbf {

using nlohmann::json;

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::Qos: return "qos";
    case RunMode::MmfScaling: return "mmf-scaling";
    case RunMode::MmfBisection: return "mmf-bisection";
  }
  return "?";
}

RunMode parse_mode(std::string_view s) {
  if (s == "qos") return RunMode::Qos;
  if (s == "mmf-scaling" || s == "scaling") return RunMode::MmfScaling;
  if (s == "mmf-bisection" || s == "bisection") return RunMode::MmfBisection;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

void RunConfig::validate() const {
  if (!instance_file) {
    if (n_values.empty() || k_values.empty()) throw std::invalid_argument("empty N or K list");
    for (int n : n_values)
      if (n < 1) throw std::invalid_argument("N must be >= 1");
    for (int k : k_values)
      if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (groups < 1) throw std::invalid_argument("groups must be >= 1");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  }
  if (seeds.empty()) throw std::invalid_argument("empty seed list");
  qos.esca.validate();
  qos.asca.validate();
  if (!(qos.sca.outer_tol > 0.0) || qos.sca.max_outer < 1)
    throw std::invalid_argument("invalid outer loop settings");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

std::string RunConfig::init_label() const {
  return init_file ? "file" : std::string(to_string(qos.init));
}

std::uint64_t init_seed_for(std::uint64_t seed) { return derive_seed(seed, 1); }

json config_to_json(const RunConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  if (cfg.instance_file) {
    j["instance"] = cfg.instance_file->string();
  } else {
    j["n"] = cfg.n_values;
    j["groups"] = cfg.groups;
    j["k"] = cfg.k_values;
    j["sinr_db"] = cfg.sinr_db;
    j["sigma2"] = cfg.sigma2;
  }
  j["seeds"] = cfg.seeds;
  j["engine"] = to_string(cfg.qos.engine);
  j["init"] = cfg.init_label();
  if (cfg.init_file) j["init_file"] = cfg.init_file->string();
  j["init_iters"] = cfg.qos.init_iters;
  j["init_retries"] = cfg.qos.init_retries;
  j["alpha"] = cfg.qos.esca.alpha;
  j["c"] = cfg.qos.esca.c;
  j["rho"] = cfg.qos.asca.rho;
  j["inner_tol"] = cfg.qos.engine == EngineKind::Esca ? cfg.qos.esca.inner_tol
                                                       : cfg.qos.asca.inner_tol;
  j["max_inner"] = cfg.qos.engine == EngineKind::Esca ? cfg.qos.esca.max_inner
                                                       : cfg.qos.asca.max_inner;
  j["outer_tol"] = cfg.qos.sca.outer_tol;
  j["max_outer"] = cfg.qos.sca.max_outer;
  if (cfg.mode != RunMode::Qos) j["power_db"] = cfg.power_db;
  if (cfg.mode == RunMode::MmfBisection) {
    j["t_lo"] = cfg.bisection.t_lo;
    j["t_hi"] = cfg.bisection.t_hi;
    j["bis_tol"] = cfg.bisection.bis_tol;
  }
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct Cell {
  int n = 0;
  int k = 0;
  std::uint64_t seed = 0;
};

RunRecord solve_cell(const RunConfig& cfg, const ProblemInstance& inst, std::uint64_t seed,
                     const BeamformingSolution* start) {
  RunRecord rec;
  rec.mode = cfg.mode;
  rec.engine = to_string(cfg.qos.engine);
  rec.init = cfg.init_label();
  rec.n = inst.num_antennas;
  rec.g = inst.num_groups();
  rec.k = inst.layout.size(0);
  rec.seed = seed;
  rec.sinr_target_db = db(inst.sinr_targets.maxCoeff());

  QosOptions opt = cfg.qos;
  opt.init_seed = init_seed_for(seed);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (cfg.mode == RunMode::MmfBisection) {
      const double budget = from_db(cfg.power_db) * inst.noise_power;
      BisectionResult b = mmf_bisection(inst, budget, opt, cfg.bisection);
      rec.init_ok = true;
      rec.t_s = b.t;
      rec.power_db = db(total_power(b.beams) / inst.noise_power);
      rec.outer_iters = b.outer_iterations;
      rec.inner_iters_total = b.inner_iterations;
      rec.beams = std::move(b.beams);
      rec.ok = true;
    } else {
      QosResult q = solve_qos(inst, opt, start);
      rec.init_ok = start ? q.warm_started : q.init_ok;
      if (!rec.init_ok) {
        rec.error = "no feasible start";
      } else {
        const SolveReport& r = *q.report;
        rec.outer_iters = r.outer_iterations();
        rec.inner_iters_total = r.total_inner_iterations();
        if (cfg.mode == RunMode::Qos) {
          rec.power_db = db(r.power / inst.noise_power);
          rec.beams = r.beams;
          rec.ok = true;
        } else {
          const double budget = from_db(cfg.power_db) * inst.noise_power;
          MmfCertificate cert = scale_solution(inst, r.beams, budget);
          rec.power_db = db(total_power(cert.beams) / inst.noise_power);
          rec.t_s = cert.t_s;
          rec.t_lower_bound = cert.lower_bound;
          rec.beams = std::move(cert.beams);
          rec.ok = true;
        }
        if (r.termination == Termination::EngineFailure) {
          rec.ok = false;
          rec.error = "engine failure: " + r.failure;
        }
      }
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

std::vector<RunRecord> run(const RunConfig& cfg) {
  cfg.validate();
  const std::string hash = config_hash(cfg);

  std::optional<ProblemInstance> file_inst;
  std::optional<BeamformingSolution> start;
  if (cfg.instance_file) file_inst = read_instance(*cfg.instance_file);
  if (cfg.init_file) start = read_beams(*cfg.init_file);

  std::vector<Cell> cells;
  if (file_inst) {
    for (auto s : cfg.seeds) cells.push_back({file_inst->num_antennas, file_inst->layout.size(0), s});
  } else {
    for (int n : cfg.n_values)
      for (int k : cfg.k_values)
        for (auto s : cfg.seeds) cells.push_back({n, k, s});
  }
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.n, a.k, a.seed) < std::tie(b.n, b.k, b.seed);
  });

  std::vector<RunRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < cells.size(); idx = next++) {
      const Cell& c = cells[idx];
      ProblemInstance inst =
          file_inst ? *file_inst
                    : generate_instance(c.n, cfg.groups, c.k, cfg.sinr_db, cfg.sigma2, c.seed);
      records[idx] = solve_cell(cfg, inst, c.seed, start ? &*start : nullptr);
      records[idx].config_hash = hash;
    }
  };
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(cells.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

namespace {

template <class T>
std::vector<T> list_or_scalar(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

std::vector<std::uint64_t> parse_seeds(const json& j) {
  if (!j.contains("seeds")) return {1};
  const json& v = j.at("seeds");
  if (v.is_object()) {
    const auto first = v.value("first", std::uint64_t{1});
    const auto count = v.at("count").get<std::uint64_t>();
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(first + i);
    return out;
  }
  return list_or_scalar<std::uint64_t>(j, "seeds", {1});
}

}  // namespace

std::vector<RunConfig> parse_grid(const json& grid) {
  if (!grid.is_object()) throw std::invalid_argument("grid must be a JSON object");
  RunConfig base;
  if (grid.contains("instance")) base.instance_file = grid.at("instance").get<std::string>();
  base.n_values = list_or_scalar<int>(grid, "n", base.n_values);
  base.k_values = list_or_scalar<int>(grid, "k", base.k_values);
  base.groups = grid.value("groups", base.groups);
  base.sinr_db = grid.value("sinr_db", base.sinr_db);
  base.sigma2 = grid.value("sigma2", base.sigma2);
  base.seeds = parse_seeds(grid);
  base.qos.esca.alpha = grid.value("alpha", base.qos.esca.alpha);
  base.qos.esca.c = grid.value("c", base.qos.esca.c);
  base.qos.asca.rho = grid.value("rho", base.qos.asca.rho);
  base.qos.sca.outer_tol = grid.value("outer_tol", base.qos.sca.outer_tol);
  base.qos.sca.max_outer = grid.value("max_outer", base.qos.sca.max_outer);
  base.qos.init_iters = grid.value("init_iters", base.qos.init_iters);
  base.qos.init_retries = grid.value("init_retries", base.qos.init_retries);
  base.power_db = grid.value("power_db", base.power_db);
  base.bisection.t_lo = grid.value("t_lo", base.bisection.t_lo);
  base.bisection.t_hi = grid.value("t_hi", base.bisection.t_hi);
  base.bisection.bis_tol = grid.value("bis_tol", base.bisection.bis_tol);
  base.threads = grid.value("threads", base.threads);
  if (grid.contains("esca_inner_tol")) base.qos.esca.inner_tol = grid.at("esca_inner_tol");
  if (grid.contains("asca_inner_tol")) base.qos.asca.inner_tol = grid.at("asca_inner_tol");
  if (grid.contains("max_inner")) {
    base.qos.esca.max_inner = grid.at("max_inner");
    base.qos.asca.max_inner = grid.at("max_inner");
  }

  std::vector<RunConfig> out;
  for (const auto& mode : list_or_scalar<std::string>(grid, "modes", {"qos"}))
    for (const auto& engine : list_or_scalar<std::string>(grid, "engines", {"esca"}))
      for (const auto& init : list_or_scalar<std::string>(grid, "inits", {"eim"})) {
        RunConfig cfg = base;
        cfg.mode = parse_mode(mode);
        cfg.qos.engine = parse_engine(engine);
        cfg.qos.init = parse_init(init);
        cfg.validate();
        out.push_back(std::move(cfg));
      }
  return out;
}

std::vector<RunConfig> read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed grid: ") + e.what());
  }
  return parse_grid(j);
}

const char* const kCsvHeader =
    "mode,engine,init,n,g,k,seed,sinr_target_db,power_db,t_s,t_lower_bound,outer_iters,"
    "inner_iters_total,init_ok,wall_ms";

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.mode) << ',' << r.engine << ',' << r.init << ',' << r.n << ',' << r.g << ','
       << r.k << ',' << r.seed << ',' << fmt(r.sinr_target_db) << ','
       << (r.ok ? fmt(r.power_db) : std::string()) << ',' << fmt(r.t_s) << ','
       << fmt(r.t_lower_bound) << ',' << r.outer_iters << ',' << r.inner_iters_total << ','
       << (r.init_ok ? 1 : 0) << ',' << fmt(r.wall_ms) << '\n';
  }
}

void write_results(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                   const std::vector<RunConfig>& configs) {
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, records);
  }
  json meta = json::array();
  for (const auto& c : configs) meta.push_back({{"config_hash", config_hash(c)}, {"config", config_to_json(c)}});
  json failures = json::array();
  for (const auto& r : records)
    if (!r.ok)
      failures.push_back({{"mode", to_string(r.mode)}, {"engine", r.engine}, {"n", r.n},
                          {"k", r.k}, {"seed", r.seed}, {"error", r.error}});
  std::ofstream side(path.string() + ".meta.json");
  if (!side) throw std::runtime_error("cannot write sidecar for " + path.string());
  side << json{{"runs", meta}, {"failures", failures}}.dump(2) << '\n';
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  using Key = std::tuple<int, std::string, std::string, int, int, int>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records)
    groups[{static_cast<int>(r.mode), r.engine, r.init, r.n, r.g, r.k}].push_back(&r);

  auto mean_std = [](const std::vector<double>& v) -> std::pair<double, double> {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
  };

  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : groups) {
    SummaryRow s;
    s.mode = static_cast<RunMode>(std::get<0>(key));
    s.engine = std::get<1>(key);
    s.init = std::get<2>(key);
    s.n = std::get<3>(key);
    s.g = std::get<4>(key);
    s.k = std::get<5>(key);
    s.count = static_cast<int>(rows.size());
    std::vector<double> power, t, outer, inner, wall;
    for (const RunRecord* r : rows) {
      if (!r->ok) {
        ++s.failures;
        continue;
      }
      power.push_back(r->power_db);
      if (r->t_s && *r->t_s > 0.0) t.push_back(db(*r->t_s));
      outer.push_back(r->outer_iters);
      inner.push_back(r->inner_iters_total);
      wall.push_back(r->wall_ms);
    }
    std::tie(s.power_db_mean, s.power_db_std) = mean_std(power);
    std::tie(s.t_db_mean, s.t_db_std) = mean_std(t);
    s.outer_mean = mean_std(outer).first;
    s.inner_mean = mean_std(inner).first;
    s.wall_ms_mean = mean_std(wall).first;
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "mode,engine,init,n,g,k,count,failures,power_db_mean,power_db_std,t_db_mean,t_db_std,"
        "outer_mean,inner_mean,wall_ms_mean\n";
  for (const auto& s : rows) {
    os << to_string(s.mode) << ',' << s.engine << ',' << s.init << ',' << s.n << ',' << s.g << ','
       << s.k << ',' << s.count << ',' << s.failures << ',' << fmt(s.power_db_mean) << ','
       << fmt(s.power_db_std) << ',' << fmt(s.t_db_mean) << ',' << fmt(s.t_db_std) << ','
       << fmt(s.outer_mean) << ',' << fmt(s.inner_mean) << ',' << fmt(s.wall_ms_mean) << '\n';
  }
}

void write_beams(const BeamformingSolution& w, const std::filesystem::path& path) {
  json beams = json::array();
  for (const auto& b : w.beams) {
    json v = json::array();
    for (Eigen::Index r = 0; r < b.size(); ++r) v.push_back(json::array({b(r).real(), b(r).imag()}));
    beams.push_back(std::move(v));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json{{"beams", beams}}.dump() << '\n';
}

BeamformingSolution read_beams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  BeamformingSolution w;
  try {
    json j;
    in >> j;
    for (const auto& v : j.at("beams")) {
      CVec b(static_cast<Eigen::Index>(v.size()));
      for (std::size_t r = 0; r < v.size(); ++r)
        b(static_cast<Eigen::Index>(r)) = {v[r].at(0).get<double>(), v[r].at(1).get<double>()};
      w.beams.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw InvalidInstance(std::string("malformed beamformer file: ") + e.what());
  }
  return w;
}

}  // namespace mcbf
