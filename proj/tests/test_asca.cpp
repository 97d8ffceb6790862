#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcbf/asca.hpp"
#include "mcbf/errors.hpp"
#include "mcbf/esca.hpp"
#include "oracle/oracle.hpp"
#include "support.hpp"

#include <cmath>

using namespace mcbf;
using testing_support::Gen;

namespace {

ProjectionBlock random_block(Gen& gen) {
  ProjectionBlock b;
  const int g = gen.integer(1, 5);
  b.e1 = gen.cvec(g);
  b.own = gen.integer(0, g - 1);
  b.e3 = gen.cnormal();
  b.gamma = gen.uniform(0.1, 20.0);
  b.e2 = gen.uniform(0.01, 10.0);
  return b;
}

oracle::ProjectionCoefficients as_oracle(const ProjectionBlock& b) {
  return {b.e1, b.own, b.e2, b.e3, b.gamma};
}

double block_constraint(const ProjectionBlock& b, const CVec& d) {
  return oracle::projection_constraint(as_oracle(b), d);
}

struct Setup {
  ProblemInstance inst;
  WeightProblem wp;
  CVec v;
};

Setup feasible_setup(int n, int groups, int users, double sinr_db, std::uint64_t seed) {
  Setup s{generate_instance(n, groups, users, sinr_db, 1.0, seed), {}, {}};
  s.wp = build_weight_problem(s.inst);
  auto init = eim_init(s.wp, seed);
  REQUIRE(init.weights.has_value());
  s.v = *init.weights;
  return s;
}

}  // namespace

TEST_CASE("inactive block returns the input") {
  ProjectionBlock b;
  b.e1 = CVec::Zero(3);
  b.e1 << cdouble(0.1, 0.0), cdouble(5.0, 0.0), cdouble(0.0, 0.1);
  b.own = 1;
  b.e3 = cdouble(1.0, 0.0);
  b.e2 = 1.0;
  b.gamma = 2.0;
  REQUIRE(block_constraint(b, b.e1) < 0.0);
  auto s = project_block(b);
  CHECK(s.multiplier == 0.0);
  CHECK((s.d - b.e1).norm() == 0.0);
}

TEST_CASE("single group block is a halfspace projection") {
  Gen gen(1);
  for (int rep = 0; rep < 50; ++rep) {
    ProjectionBlock b;
    b.e1 = gen.cvec(1);
    b.e3 = gen.cnormal();
    b.e2 = gen.uniform(0.1, 5.0);
    b.gamma = gen.uniform(0.5, 5.0);
    const double excess = b.e2 - 2.0 * (b.e1(0) * b.e3).real();
    const double nu = std::max(0.0, excess / (2.0 * std::norm(b.e3)));
    const cdouble expect = b.e1(0) + nu * std::conj(b.e3);
    auto s = project_block(b);
    CHECK(std::abs(s.d(0) - expect) <= 1e-10 * (1.0 + std::abs(expect)));
    CHECK(s.multiplier == doctest::Approx(nu).epsilon(1e-9));
  }
}

TEST_CASE("projection agrees with the bisection reference") {
  Gen gen(2);
  for (int rep = 0; rep < 1000; ++rep) {
    auto b = random_block(gen);
    auto got = project_block(b);
    auto ref = oracle::qcqp1_projection_oracle(as_oracle(b));
    const double scale = std::max(1.0, ref.d.norm());
    CHECK((got.d - ref.d).norm() <= 1e-8 * scale);
    CHECK(block_constraint(b, got.d) <= 1e-9 * (b.e2 + scale * scale));
    CHECK(got.multiplier >= 0.0);
    CHECK(std::abs(got.multiplier * block_constraint(b, got.d)) <= 1e-9 * (b.e2 + scale * scale));
  }
}

TEST_CASE("cubic root without interference is linear") {
  // S = 0: e2 - 2 r - 2 nu |e3|^2 = 0.
  CHECK(solve_cubic_nu(0.0, 3.0, 2.0, 0.5, 4.0) ==
        doctest::Approx((3.0 - 1.0) / 4.0).epsilon(1e-12));
  CHECK(solve_cubic_nu(0.0, 1.0, 2.0, 1.0, 3.0) == 0.0);
}

TEST_CASE("d-update rejects a degenerate anchor") {
  auto s = feasible_setup(8, 2, 2, 5.0, 3);
  CVec v = s.v;
  group_segment(v, s.wp.layout(), 0).setZero();
  CHECK_THROWS_AS(d_update(convexify(s.wp, v), s.v, CMat::Zero(2, 4)), DegenerateAnchor);
}

TEST_CASE("a-update") {
  Gen gen(4);
  auto inst = gen.instance(6, 3, 3, 1.0, 5.0);
  auto wp = build_weight_problem(inst);
  const double rho = 0.7;
  AscaFactors factors(wp, rho);
  const int groups = wp.num_groups(), total = wp.num_users();

  SUBCASE("zero data gives zero weights") {
    CMat d = gen.cmat(groups, total);
    CHECK(a_update(wp, factors, d, -d).norm() == 0.0);
  }

  SUBCASE("stationarity of the a-subproblem") {
    CMat d = gen.cmat(groups, total), q = gen.cmat(groups, total);
    CVec a = a_update(wp, factors, d, q);
    for (int j = 0; j < groups; ++j) {
      const CMat& f = wp.f_table(j);
      CVec aj = group_segment(a, wp.layout(), j);
      // grad over conj(a_j): G a_j - (rho/2) sum_u f_u (d_u + q_u - a_j^H f_u)^*.
      CVec resid = (d.row(j) + q.row(j)).transpose() - (f.adjoint() * aj).conjugate();
      CVec grad = wp.gram(j) * aj - 0.5 * rho * f * resid.conjugate();
      CHECK(grad.norm() <= 1e-10 * (1.0 + (f * resid.conjugate()).norm()));
    }
  }

  SUBCASE("scalar groups") {
    auto one = generate_instance(4, 3, 1, 3.0, 1.0, 5);
    auto wp1 = build_weight_problem(one);
    AscaFactors f1(wp1, rho);
    CMat d = gen.cmat(3, 3), q = gen.cmat(3, 3);
    CVec a = a_update(wp1, f1, d, q);
    for (int j = 0; j < 3; ++j) {
      double den = wp1.gram(j)(0, 0).real();
      cdouble num = 0.0;
      for (int u = 0; u < 3; ++u) {
        const cdouble f = wp1.f(j, u)(0);
        den += 0.5 * rho * std::norm(f);
        num += 0.5 * rho * f * std::conj(d(j, u) + q(j, u));
      }
      CHECK(std::abs(a(j) - num / den) <= 1e-12 * (1.0 + std::abs(a(j))));
    }
  }
}

TEST_CASE("q-update accumulates the residual") {
  Gen gen(6);
  auto inst = gen.instance(5, 2, 2, 1.0, 3.0);
  auto wp = build_weight_problem(inst);
  CMat d = gen.cmat(2, wp.num_users()), q = gen.cmat(2, wp.num_users());
  CHECK((q_update(wp, d, CVec::Zero(wp.num_users()), q) - (q + d)).norm() < 1e-15);
  CVec a = gen.cvec(wp.num_users());
  CHECK((q_update(wp, wp.projections(a), a, q) - q).norm() < 1e-12);
}

TEST_CASE("each block update does not increase the augmented Lagrangian") {
  auto s = feasible_setup(20, 3, 3, 10.0, 7);
  const double rho = 0.2;
  AscaFactors factors(s.wp, rho);
  auto sub = convexify(s.wp, s.v);
  CVec a = s.v;
  CMat q = CMat::Zero(3, s.wp.num_users());
  CMat d = s.wp.projections(a);
  for (int n = 0; n < 30; ++n) {
    const double l0 = augmented_lagrangian(s.wp, d, a, q, rho);
    CMat d_next = d_update(sub, a, q);
    const double l1 = augmented_lagrangian(s.wp, d_next, a, q, rho);
    CVec a_next = a_update(s.wp, factors, d_next, q);
    const double l2 = augmented_lagrangian(s.wp, d_next, a_next, q, rho);
    CHECK(l1 <= l0 + 1e-10 * std::abs(l0));
    CHECK(l2 <= l1 + 1e-10 * std::abs(l1));
    d = d_next;
    a = a_next;
    q = q_update(s.wp, d, a, q);
  }
}

TEST_CASE("inner solve drives the primal residual down") {
  auto s = feasible_setup(32, 3, 4, 10.0, 8);
  AscaFactors factors(s.wp, 0.2);
  auto sub = convexify(s.wp, s.v);
  auto r = asca_inner_solve(sub, factors, s.v, {0.2, 1e-8, 100000});
  CHECK(r.converged);
  CHECK(r.primal_residual <= 1e-5 * s.wp.projections(s.v).norm());
  CHECK(sub.max_normalized_violation(r.state.a) <= 1e-4);
  CHECK(weight_objective(s.wp, r.state.a) <= weight_objective(s.wp, s.v) * (1.0 + 1e-6));
}

TEST_CASE("engine validates its configuration") {
  auto s = feasible_setup(8, 2, 2, 5.0, 9);
  CHECK_THROWS(AscaEngine(s.wp, {0.0, 1e-3, 10}));
  CHECK_THROWS(AscaEngine(s.wp, {0.2, -1.0, 10}));
  CHECK_THROWS(AscaEngine(s.wp, {0.2, 1e-3, 0}));
}

TEST_CASE("feasibility block") {
  Gen gen(10);

  SUBCASE("already feasible: multiplier zero") {
    FeasibilityBlock b{CVec::Zero(2), 0, 2.0, 0.5};
    b.e1 << cdouble(3.0, 1.0), cdouble(0.1, 0.0);
    auto s = project_feasibility_block(b);
    CHECK(s.multiplier == 0.0);
    CHECK((s.d - b.e1).norm() == 0.0);
    CHECK(solve_quartic_mu(0.01, 10.0, 2.0, 0.5) == 0.0);
  }

  SUBCASE("zero own entry lands on the boundary") {
    FeasibilityBlock b{gen.cvec(3), 1, 4.0, 1.0};
    b.e1(1) = 0.0;
    auto s = project_feasibility_block(b);
    double others = std::norm(s.d(0)) + std::norm(s.d(2));
    CHECK(std::norm(s.d(1)) == doctest::Approx(b.gamma * (others + b.sigma2)));
  }

  SUBCASE("root matches the reference and satisfies the constraint") {
    for (int rep = 0; rep < 1000; ++rep) {
      const int g = gen.integer(1, 5);
      FeasibilityBlock b{gen.cvec(g), gen.integer(0, g - 1), gen.uniform(0.5, 100.0),
                         gen.uniform(0.1, 2.0)};
      double others = b.e1.squaredNorm() - std::norm(b.e1(b.own));
      oracle::QuarticCoefficients qc{others, std::norm(b.e1(b.own)), b.gamma, b.sigma2};
      if (oracle::quartic_value(qc, 0.0) <= 0.0) continue;
      const double mu = solve_quartic_mu(qc.others_sq, qc.own_sq, qc.gamma, qc.sigma2);
      CHECK(mu > 0.0);
      CHECK(mu < 1.0);
      CHECK(mu == doctest::Approx(oracle::quartic_root_oracle(qc)).epsilon(1e-9));
      const double scale = qc.gamma * (qc.others_sq + qc.sigma2) + qc.own_sq;
      CHECK(std::abs(oracle::quartic_value(qc, mu)) <= 1e-10 * scale / ((1 - mu) * (1 - mu)));
    }
  }
}

TEST_CASE("AIM finds feasible starts") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = generate_instance(32, 3, 4, 10.0, 1.0, seed);
    auto wp = build_weight_problem(inst);
    auto r = aim_init(wp, seed);
    if (r.weights && wp.p1_feasible(*r.weights, 0.0)) ++ok;
    auto again = aim_init(wp, seed);
    if (r.weights && again.weights) CHECK((*r.weights - *again.weights).norm() == 0.0);
  }
  CHECK(ok == 10);
}

TEST_CASE("AIM reports an infeasible target") {
  auto inst = generate_instance(1, 2, 1, 20.0, 1.0, 12);
  auto wp = build_weight_problem(inst);
  auto r = aim_init(wp, 12, 100, 2);
  CHECK_FALSE(r.weights.has_value());
  CHECK(r.attempts == 2);
}
