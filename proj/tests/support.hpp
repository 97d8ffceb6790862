// tests/support.hpp
//
// Hand-rolled generators shared by the test executables.

#pragma once

#include "mcbf/instance.hpp"
#include "mcbf/rng.hpp"
#include "mcbf/structure.hpp"

#include <cstdint>
#include <vector>

namespace testing_support {

using namespace mcbf;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(rng_.uniform() * (hi - lo + 1));
  }
  double normal() { return rng_.normal(); }
  cdouble cnormal() { return rng_.complex_normal(); }

  CVec cvec(int n, double scale = 1.0) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * cnormal();
    return v;
  }
  RVec rvec(int n, double scale = 1.0) {
    RVec v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * normal();
    return v;
  }
  CMat cmat(int r, int c) {
    CMat m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = cnormal();
    return m;
  }

  // Instance with uneven group sizes and per-user targets.
  ProblemInstance instance(int n, int groups, int max_users, double gamma_lo, double gamma_hi) {
    std::vector<int> sizes;
    for (int g = 0; g < groups; ++g) sizes.push_back(integer(1, max_users));
    ProblemInstance inst;
    inst.num_antennas = n;
    inst.layout = GroupLayout(sizes);
    inst.channels = cmat(n, inst.layout.total());
    inst.sinr_targets.resize(inst.layout.total());
    for (int u = 0; u < inst.layout.total(); ++u) inst.sinr_targets(u) = uniform(gamma_lo, gamma_hi);
    inst.noise_power = uniform(0.5, 2.0);
    return inst;
  }

  BeamformingSolution beams(int groups, int n) {
    BeamformingSolution w;
    for (int g = 0; g < groups; ++g) w.beams.push_back(cvec(n));
    return w;
  }

 private:
  GaussianStream rng_;
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace testing_support
