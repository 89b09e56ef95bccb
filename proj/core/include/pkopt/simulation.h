#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/integrator.h"
#include "pkopt/model.h"
#include "pkopt/registry.h"
#include "pkopt/synthesis.h"

namespace pkopt {

/// Second-order data of the Hamiltonian at a steady state:
/// A = f_x, B = f_u, Q = H_xx, R = H_uu, S = H_xu.
struct Linearization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd S;
};

struct SteadyState {
  Eigen::VectorXd x_p;
  Eigen::VectorXd u_p;
  Eigen::VectorXd lambda_p;
  Linearization lin;
};

/// Throws CheckError unless f(x_p, u_p) = 0 and H_u(x_p, u_p, lambda_p) = 0
/// to 1e-10.
SteadyState Linearize(const OcpModel& model, const SteadyStatePoint& point);

struct AreSolution {
  Eigen::MatrixXd P;
  /// Max-entry residual of P A + A'P + Q - (P B + S) R^-1 (P B + S)'.
  double residual = 0.0;
  /// Backward horizon needed for convergence.
  double horizon = 0.0;
};

double AreResidual(const Linearization& lin, const Eigen::MatrixXd& P);

/// Integrates the Riccati equation backward from eps*I, doubling the horizon
/// until |dP/dt| <= 1e-11. Throws SolverError on divergence, when the result
/// is not positive definite, or when the residual exceeds 1e-9.
AreSolution SolveAre(const Linearization& lin, double eps = 1e-6);

struct ClosedLoopResult {
  /// States x(t).
  Trajectory trajectory;
  /// Accumulated running cost  int_0^t (l - l_star) ds  at trajectory.times.
  std::vector<double> cost;
  /// Set when the costate solve failed and the rollout was truncated.
  bool truncated = false;
  std::string message;
};

/// x' = f(x, mu(x)) with mu from the feedback law, solved at every stage
/// point with a warm start from the previous solve. `initial_costate`
/// seeds the first solve, which selects the root that is continued.
ClosedLoopResult ClosedLoopRollout(
    const OcpModel& model, const FeedbackLaw& law, const Eigen::VectorXd& x0,
    double t_end, const IntegratorOptions& options = {},
    const Eigen::VectorXd* initial_costate = nullptr);

struct CostReport {
  double cost = 0.0;
  double final_time = 0.0;
  /// Running cost at the final time.
  double tail_integrand = 0.0;
  /// Estimate of the neglected tail assuming exponential decay.
  double tail_bound = 0.0;
  /// False when the integrand had not decayed below the threshold.
  bool decayed = false;
  bool truncated = false;
  std::string message;
};

/// Infinite-horizon cost: integrates until the running cost stays below
/// `integrand_tol` for one time unit or until `t_cap`.
CostReport InfiniteHorizonCost(const OcpModel& model, const FeedbackLaw& law,
                               const Eigen::VectorXd& x0, double t_cap = 200.0,
                               double integrand_tol = 1e-8,
                               const IntegratorOptions& options = {},
                               const Eigen::VectorXd* initial_costate = nullptr);

struct CostateLimitResult {
  /// |lambda(t_end) - lambda_p|.
  double final_deviation = 0.0;
  /// Smallest |lambda(t) - lambda_p| on the sampled times and when it occurs.
  double min_deviation = 0.0;
  double min_time = 0.0;
  bool escaped = false;
  double escape_time = 0.0;
  std::string message;
};

/// Integrates the Pontryagin field from (x0, Lambda(x0)) and tracks the
/// costate distance to lambda_p, sampled every `sample_step`.
CostateLimitResult CostateLimitCheck(const PontryaginField& field,
                                     const FeedbackLaw& law,
                                     const Eigen::VectorXd& x0, double t_end,
                                     double sample_step = 0.05,
                                     double bound = 1e6);

}  // namespace pkopt
