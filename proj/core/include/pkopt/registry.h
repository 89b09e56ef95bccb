#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/basis.h"
#include "pkopt/model.h"

namespace pkopt {

/// A steady state (x_p, u_p, lambda_p) about which the Riccati oracle and the
/// Newton warm start are built.
struct SteadyStatePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;
};

/// A registered problem: model plus the defaults that go with it.
struct ProblemDefinition {
  OcpModel model;
  BoxDomain box;
  SteadyStatePoint steady_state;
};

/// Controlled Van der Pol oscillator
///   x1' = x2,  x2' = -x1 - (1 - x1^2) x2 / 2 + x1 u,  l = (x2^2 + u^2) / 2,
/// whose optimal value function is (x1^2 + x2^2) / 2 with feedback -x1 x2.
/// Region of interest [-1/2, 1/2]^4.
ProblemDefinition VanDerPolProblem();

/// Double integrator x1' = x2, x2' = u with l = (x1^2 + x2^2 + u^2) / 2.
/// Region of interest [-1/2, 1/2]^4.
ProblemDefinition DoubleIntegratorLqrProblem();

/// Looks up "vanderpol" or "double_integrator_lqr"; throws ConfigError for
/// other names.
ProblemDefinition RegistryProblem(const std::string& name);

std::vector<std::string> RegistryNames();

}  // namespace pkopt
