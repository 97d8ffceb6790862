#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcbf/asca.hpp"
#include "mcbf/esca.hpp"
#include "mcbf/mmf.hpp"
#include "support.hpp"

#include <cmath>

using namespace mcbf;
using testing_support::Gen;
using testing_support::rel_err;

TEST_CASE("instance JSON round trip is exact") {
  Gen gen(1);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = gen.instance(gen.integer(1, 12), gen.integer(1, 4), 4, 0.1, 100.0);
    auto back = instance_from_json(instance_to_json(inst));
    CHECK(back.num_antennas == inst.num_antennas);
    CHECK(back.layout.sizes() == inst.layout.sizes());
    CHECK((back.channels - inst.channels).norm() == 0.0);
    CHECK((back.sinr_targets - inst.sinr_targets).norm() == 0.0);
    CHECK(back.noise_power == inst.noise_power);
  }
}

TEST_CASE("R is Hermitian with eigenvalues at least one") {
  Gen gen(2);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = gen.instance(gen.integer(1, 10), gen.integer(1, 3), 3, 0.1, 10.0);
    DualParams dual{gen.rvec(inst.num_users()).cwiseAbs()};
    CMat r = build_R(inst, dual);
    CHECK((r - r.adjoint()).norm() <= 1e-12 * r.norm());
    Eigen::SelfAdjointEigenSolver<CMat> eig(r);
    CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-10);
  }
}

TEST_CASE("real lifting preserves values") {
  Gen gen(3);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = gen.instance(gen.integer(2, 8), gen.integer(1, 4), 4, 0.5, 5.0);
    auto wp = build_weight_problem(inst);
    CVec a = gen.cvec(wp.num_users());
    RVec x = to_real(a, wp.layout());
    CHECK((to_complex(x, wp.layout()) - a).norm() == 0.0);
    auto rp = lift_real(wp);
    double lifted = 0.0;
    for (int g = 0; g < wp.num_groups(); ++g) {
      RVec seg = x.segment(rp.real_offset(g), rp.real_size(g));
      lifted += (rp.operator_A[g] * seg).squaredNorm();
    }
    CHECK(rel_err(lifted, weight_objective(wp, a)) <= 1e-9);
  }
}

TEST_CASE("weight problem mirrors the beamforming problem") {
  Gen gen(4);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = gen.instance(gen.integer(2, 10), gen.integer(1, 4), 3, 0.5, 5.0);
    auto wp = build_weight_problem(inst);
    CVec a = gen.cvec(wp.num_users());
    auto w = recover_beamformers(wp, a);
    CHECK(rel_err(weight_objective(wp, a), total_power(w)) <= 1e-9);
    RVec s_inst = sinr(inst, w);
    RVec s_wp = wp.p1_sinr(a);
    for (int u = 0; u < wp.num_users(); ++u) CHECK(rel_err(s_wp(u), s_inst(u)) <= 1e-8);
  }
}

TEST_CASE("feasibility scale yields feasible weights") {
  Gen gen(5);
  int found = 0;
  for (int rep = 0; rep < 50; ++rep) {
    auto inst = gen.instance(gen.integer(4, 16), gen.integer(1, 3), 2, 0.1, 1.0);
    auto wp = build_weight_problem(inst);
    CVec a = gen.cvec(wp.num_users());
    auto s = feasibility_scale(wp, a);
    if (!s) continue;
    ++found;
    CHECK(wp.p1_feasible(*s * a, 1e-9));
  }
  CHECK(found > 0);
}

TEST_CASE("restoration always returns a point meeting the convexified constraints") {
  Gen gen(6);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = generate_instance(gen.integer(8, 24), gen.integer(2, 3), 2, 5.0, 1.0, 50 + rep);
    auto wp = build_weight_problem(inst);
    auto v = eim_init(wp, rep + 1).weights;
    REQUIRE(v.has_value());
    auto sub = convexify(wp, *v);
    for (int k = 0; k < 10; ++k) {
      CVec cand = gen.cvec(wp.num_users(), gen.uniform(0.01, 3.0) * v->norm());
      CHECK(sub.max_normalized_violation(restore_feasibility(sub, cand)) <= 1e-9);
    }
  }
}

TEST_CASE("SCA produces feasible, non-increasing power for both engines") {
  Gen gen(7);
  for (int rep = 0; rep < 8; ++rep) {
    auto inst = gen.instance(gen.integer(8, 32), gen.integer(1, 3), 4, 1.0, 10.0);
    for (auto engine : {EngineKind::Esca, EngineKind::Asca}) {
      QosOptions opt;
      opt.engine = engine;
      auto r = solve_qos(inst, opt);
      REQUIRE(r.ok());
      CHECK(check_qos_feasible(inst, r.report->beams, 1e-6));
      const auto& trace = r.report->power_trace;
      for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
    }
  }
}

TEST_CASE("scaling certificate holds on random instances") {
  Gen gen(8);
  for (int rep = 0; rep < 10; ++rep) {
    auto inst = gen.instance(gen.integer(8, 20), gen.integer(1, 3), 3, 1.0, 10.0);
    auto r = solve_qos(inst, QosOptions{});
    REQUIRE(r.ok());
    auto cert = scale_solution(inst, r.report->beams, gen.uniform(0.1, 100.0));
    CHECK(cert.t_s >= cert.lower_bound * (1.0 - 1e-12));
    CHECK(cert.lower_bound > 0.0);
  }
}
