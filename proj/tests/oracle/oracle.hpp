// tests/oracle/oracle.hpp
//
// Reference computations for tests only. Nothing here calls the production
// update code it is compared against.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>

namespace oracle {

using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using cdouble = std::complex<double>;

enum class ErrorNorm { Relative, Absolute };

struct FdConfig {
  double step = 1e-6;  // scaled by max(1, |x_i|)
  ErrorNorm norm = ErrorNorm::Relative;
};

RVec fd_gradient(const std::function<double(const RVec&)>& f, const RVec& x,
                 const FdConfig& cfg = {});

// ||a - b|| / max(||b||, floor) or ||a - b||, per cfg.norm.
double gradient_error(const RVec& a, const RVec& b, const FdConfig& cfg = {},
                      double floor = 1e-12);

// Projection of e1 onto {d : e2 + gamma sum_{j != own} |d_j|^2 - 2 Re{d_own e3} <= 0}.
struct ProjectionCoefficients {
  CVec e1;
  int own = 0;
  double e2 = 0.0;
  cdouble e3;
  double gamma = 1.0;
};

struct ProjectionResult {
  CVec d;
  double nu = 0.0;
};

double projection_constraint(const ProjectionCoefficients& b, const CVec& d);
// Bisection on the multiplier, with the constraint evaluated on the
// stationary point d(nu). Throws std::domain_error when |e3| = 0.
ProjectionResult qcqp1_projection_oracle(const ProjectionCoefficients& b, double tol = 1e-14);

// Feasibility block: gamma sum_{j != own} |d_j|^2 + gamma sigma^2 - |d_own|^2 <= 0.
struct QuarticCoefficients {
  double others_sq = 0.0;  // sum_{j != own} |e1_j|^2
  double own_sq = 0.0;     // |e1_own|^2
  double gamma = 1.0;
  double sigma2 = 1.0;
};

double quartic_value(const QuarticCoefficients& q, double mu);
// Bisection root on (0, 1 - 1e-12). Throws std::domain_error without a sign change.
double quartic_root_oracle(const QuarticCoefficients& q);

}  // namespace oracle
