#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcbf/errors.hpp"
#include "mcbf/mmf.hpp"
#include "support.hpp"

#include <cmath>

using namespace mcbf;
using testing_support::Gen;

namespace {

BeamformingSolution qos_beams(const ProblemInstance& inst) {
  auto r = solve_qos(inst, QosOptions{});
  REQUIRE(r.ok());
  return r.report->beams;
}

}  // namespace

TEST_CASE("min_weighted_sinr") {
  ProblemInstance inst;
  inst.num_antennas = 1;
  inst.layout = GroupLayout({1, 1});
  inst.channels = CMat::Ones(1, 2);
  inst.sinr_targets = RVec::Constant(2, 2.0);
  inst.noise_power = 1.0;
  BeamformingSolution w;
  w.beams = {CVec::Constant(1, 2.0), CVec::Constant(1, 1.0)};
  // SINR_0 = 4 / (1 + 1) = 2, SINR_1 = 1 / (4 + 1) = 0.2.
  CHECK(min_weighted_sinr(inst, w) == doctest::Approx(0.1));
  w.beams[1].setZero();
  CHECK(min_weighted_sinr(inst, w) == 0.0);
}

TEST_CASE("scaling at the QoS power is the identity") {
  auto inst = generate_instance(16, 3, 2, 10.0, 1.0, 1);
  auto w = qos_beams(inst);
  const double p = total_power(w);
  auto cert = scale_solution(inst, w, p);
  CHECK(cert.scale() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cert.lower_bound == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert.t_s == doctest::Approx(min_weighted_sinr(inst, w)).epsilon(1e-12));
  CHECK(cert.t_s >= cert.lower_bound - 1e-12);
  // A converged QoS solution meets its tightest target with equality.
  CHECK(std::abs(cert.t_s - 1.0) <= 1e-3);
}

TEST_CASE("single group: the lower bound is the scale") {
  auto inst = generate_instance(8, 1, 3, 5.0, 1.0, 2);
  auto w = qos_beams(inst);
  for (double s : {0.5, 2.0, 10.0}) {
    auto cert = scale_solution(inst, w, s * total_power(w));
    CHECK(cert.lower_bound == doctest::Approx(s).epsilon(1e-12));
    CHECK(cert.t_s == doctest::Approx(s * min_weighted_sinr(inst, w)).epsilon(1e-10));
  }
}

TEST_CASE("certificate bounds") {
  Gen gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    auto inst = generate_instance(gen.integer(8, 24), 3, 2, 10.0, 1.0, 100 + rep);
    auto w = qos_beams(inst);
    const double p_q = total_power(w);
    const double p = p_q * gen.uniform(0.2, 20.0);
    auto cert = scale_solution(inst, w, p);
    CHECK(cert.t_s >= cert.lower_bound * (1.0 - 1e-12));
    CHECK(total_power(cert.beams) == doctest::Approx(p).epsilon(1e-12));
    CHECK(upper_bound(cert, 0.5 * p_q) == doctest::Approx(2.0 * upper_bound(cert, p_q)));
    CHECK(upper_bound(cert, 0.9 * p_q) >= upper_bound(cert, p_q));
  }
}

TEST_CASE("per-user SINR grows with the scale") {
  auto inst = generate_instance(12, 3, 3, 10.0, 1.0, 4);
  auto w = qos_beams(inst);
  RVec prev = sinr(inst, w.scaled(0.1));
  for (double c : {0.3, 1.0, 3.0, 10.0}) {
    RVec cur = sinr(inst, w.scaled(c));
    CHECK((cur.array() >= prev.array()).all());
    prev = cur;
  }
}

TEST_CASE("scaling rejects bad input") {
  auto inst = generate_instance(8, 2, 2, 10.0, 1.0, 5);
  auto w = qos_beams(inst);
  CHECK_THROWS_AS(scale_solution(inst, w.scaled(0.5), 1.0), InfeasibleInput);
  CHECK_THROWS(scale_solution(inst, w, 0.0));
  auto cert = scale_solution(inst, w, 10.0);
  CHECK_THROWS(upper_bound(cert, 0.0));
  CHECK_THROWS(upper_bound(cert, -1.0));
}

TEST_CASE("bisection") {
  auto inst = generate_instance(16, 3, 2, 10.0, 1.0, 6);
  BisectionConfig cfg;
  cfg.bis_tol = 1e-3;

  SUBCASE("matches the target when the budget equals the QoS power") {
    auto w = qos_beams(inst);
    auto r = mmf_bisection(inst, total_power(w), QosOptions{}, cfg);
    CHECK(r.t == doctest::Approx(1.0).epsilon(0.02));
    CHECK(total_power(r.beams) == doctest::Approx(total_power(w)).epsilon(1e-9));
    CHECK(r.t == doctest::Approx(min_weighted_sinr(inst, r.beams)).epsilon(1e-12));
  }

  SUBCASE("no worse than scaling, with a monotone trace") {
    const double p = from_db(10.0) * inst.noise_power;
    auto cert = scale_solution(inst, qos_beams(inst), p);
    auto r = mmf_bisection(inst, p, QosOptions{}, cfg);
    CHECK(r.t >= cert.t_s - 1e-3);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      CHECK(r.trace[i].t > r.trace[i - 1].t);
      CHECK(r.trace[i].power >= r.trace[i - 1].power);
    }
    CHECK(r.steps >= 1);
    CHECK(r.outer_iterations > 0);
  }

  SUBCASE("validates its arguments") {
    CHECK_THROWS(mmf_bisection(inst, -1.0, QosOptions{}, cfg));
    BisectionConfig bad = cfg;
    bad.t_lo = 2.0;
    bad.t_hi = 1.0;
    CHECK_THROWS(mmf_bisection(inst, 10.0, QosOptions{}, bad));
  }

  SUBCASE("an unreachable budget cannot be bracketed") {
    BisectionConfig tight = cfg;
    tight.max_expansions = 0;
    CHECK_THROWS_AS(mmf_bisection(inst, 1e12, QosOptions{}, tight), BracketFailure);
  }
}
