// tools/mcbf_cli.cpp
//
// mcbf gen | qos | mmf | sweep

#include "mcbf/harness.hpp"
#include "mcbf/instance.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct CommonArgs {
  std::string instance;
  int n = 64;
  int groups = 3;
  int users = 4;
  double sinr_db = 10.0;
  double sigma2 = 1.0;
  std::vector<std::uint64_t> seeds{1};
  std::string engine = "esca";
  std::string init = "eim";
  std::string init_file;
  double alpha = 0.1;
  double c = 0.8;
  double rho = 0.2;
  double inner_tol = -1.0;
  double outer_tol = 1e-3;
  int max_inner = 5000;
  int max_outer = 200;
  int threads = 0;
  std::string out;
  std::string beams_out;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--instance", a.instance, "instance JSON file");
  app->add_option("--n", a.n, "antennas")->check(CLI::PositiveNumber);
  app->add_option("--groups", a.groups, "groups")->check(CLI::PositiveNumber);
  app->add_option("--users", a.users, "users per group")->check(CLI::PositiveNumber);
  app->add_option("--sinr-db", a.sinr_db, "SINR target (dB)");
  app->add_option("--sigma2", a.sigma2, "noise power")->check(CLI::PositiveNumber);
  app->add_option("--seed,--seeds", a.seeds, "seed list")->delimiter(',');
  app->add_option("--engine", a.engine)->check(CLI::IsMember({"esca", "asca"}));
  app->add_option("--init", a.init)->check(CLI::IsMember({"eim", "aim", "file"}));
  app->add_option("--init-file", a.init_file, "beamformer JSON used as the start");
  app->add_option("--alpha", a.alpha);
  app->add_option("--c", a.c);
  app->add_option("--rho", a.rho);
  app->add_option("--inner-tol", a.inner_tol, "default 1e-3 (esca), 2e-4 (asca with aim)");
  app->add_option("--outer-tol", a.outer_tol);
  app->add_option("--max-inner", a.max_inner);
  app->add_option("--max-outer", a.max_outer);
  app->add_option("--threads", a.threads, "0 = all cores");
  app->add_option("--out", a.out, "CSV output (stdout when omitted)");
  app->add_option("--beams-out", a.beams_out, "beamformers of the first row (JSON)");
}

mcbf::RunConfig to_config(const CommonArgs& a, mcbf::RunMode mode) {
  mcbf::RunConfig cfg;
  cfg.mode = mode;
  if (!a.instance.empty()) cfg.instance_file = a.instance;
  cfg.n_values = {a.n};
  cfg.groups = a.groups;
  cfg.k_values = {a.users};
  cfg.sinr_db = a.sinr_db;
  cfg.sigma2 = a.sigma2;
  cfg.seeds = a.seeds;
  cfg.qos.engine = mcbf::parse_engine(a.engine);
  if (a.init == "file") {
    if (a.init_file.empty()) throw std::invalid_argument("--init file needs --init-file");
    cfg.init_file = a.init_file;
  } else {
    cfg.qos.init = mcbf::parse_init(a.init);
  }
  cfg.qos.esca.alpha = a.alpha;
  cfg.qos.esca.c = a.c;
  cfg.qos.asca.rho = a.rho;
  if (a.inner_tol > 0.0) {
    cfg.qos.esca.inner_tol = a.inner_tol;
    cfg.qos.asca.inner_tol = a.inner_tol;
  } else if (cfg.qos.init == mcbf::InitKind::Aim) {
    cfg.qos.asca.inner_tol = 0.2e-3;
  }
  cfg.qos.esca.max_inner = a.max_inner;
  cfg.qos.asca.max_inner = a.max_inner;
  cfg.qos.sca.outer_tol = a.outer_tol;
  cfg.qos.sca.max_outer = a.max_outer;
  cfg.threads = a.threads;
  return cfg;
}

int emit(const std::vector<mcbf::RunRecord>& records, const std::vector<mcbf::RunConfig>& configs,
         const std::string& out, const std::string& beams_out) {
  if (out.empty()) {
    mcbf::write_csv(std::cout, records);
  } else {
    mcbf::write_results(out, records, configs);
  }
  if (!beams_out.empty() && !records.empty() && records.front().ok)
    mcbf::write_beams(records.front().beams, beams_out);
  int failed = 0;
  for (const auto& r : records) {
    if (r.ok) continue;
    ++failed;
    std::cerr << "row n=" << r.n << " k=" << r.k << " seed=" << r.seed << " failed: " << r.error
              << '\n';
  }
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-group multicast beamforming solvers"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate an instance");
  int gn = 64, gg = 3, gu = 4;
  double gdb = 10.0, gs2 = 1.0;
  std::uint64_t gseed = 1;
  std::string gout;
  gen->add_option("--n", gn)->check(CLI::PositiveNumber);
  gen->add_option("--groups", gg)->check(CLI::PositiveNumber);
  gen->add_option("--users", gu)->check(CLI::PositiveNumber);
  gen->add_option("--sinr-db", gdb);
  gen->add_option("--sigma2", gs2)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gseed);
  gen->add_option("--out", gout)->required();

  CommonArgs qa;
  auto* qos = app.add_subcommand("qos", "minimum-power beamforming");
  add_common(qos, qa);

  CommonArgs ma;
  std::string mmode = "scaling";
  double power_db = 10.0, bis_tol = 1e-2, t_lo = 0.1, t_hi = 10.0;
  auto* mmf = app.add_subcommand("mmf", "max-min-fair beamforming");
  add_common(mmf, ma);
  mmf->add_option("--mode", mmode)->check(CLI::IsMember({"scaling", "bisection"}));
  mmf->add_option("--power-db", power_db, "budget P / sigma^2 (dB)");
  mmf->add_option("--bis-tol", bis_tol);
  mmf->add_option("--t-lo", t_lo);
  mmf->add_option("--t-hi", t_hi);

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  std::string grid, sout, summary;
  sweep->add_option("--grid", grid)->required();
  sweep->add_option("--out", sout, "CSV output (stdout when omitted)");
  sweep->add_option("--summary", summary, "per-configuration summary CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      mcbf::write_instance(mcbf::generate_instance(gn, gg, gu, gdb, gs2, gseed), gout);
      return 0;
    }
    if (*qos) {
      auto cfg = to_config(qa, mcbf::RunMode::Qos);
      return emit(mcbf::run(cfg), {cfg}, qa.out, qa.beams_out);
    }
    if (*mmf) {
      auto cfg = to_config(ma, mcbf::parse_mode(mmode));
      cfg.power_db = power_db;
      cfg.bisection.bis_tol = bis_tol;
      cfg.bisection.t_lo = t_lo;
      cfg.bisection.t_hi = t_hi;
      return emit(mcbf::run(cfg), {cfg}, ma.out, ma.beams_out);
    }
    if (*sweep) {
      auto configs = mcbf::read_grid(grid);
      std::vector<mcbf::RunRecord> all;
      for (const auto& cfg : configs) {
        auto recs = mcbf::run(cfg);
        all.insert(all.end(), recs.begin(), recs.end());
      }
      if (!summary.empty()) {
        std::ofstream os(summary);
        if (!os) throw std::runtime_error("cannot write " + summary);
        mcbf::write_summary_csv(os, mcbf::summarize(all));
      }
      return emit(all, configs, sout, "");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
