#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/model.h"

namespace pkopt {

enum class IntegratorMethod { kAdaptiveRk45, kFixedRk4 };

struct IntegratorOptions {
  IntegratorMethod method = IntegratorMethod::kAdaptiveRk45;
  /// Per-step error bound for RK45, measured against tol * (1 + |y_i|).
  double tol = 1e-10;
  /// Fixed step for RK4; initial step guess for RK45.
  double step = 1e-2;
  /// Blow-up guard on the Euclidean norm of the state.
  double bound = 1e8;
  /// States are recorded exactly at these times (plus 0 and t_end). When
  /// empty every accepted step is recorded.
  std::vector<double> output_times;
  long max_steps = 50'000'000;
};

enum class Termination {
  kCompleted,
  kBlowUp,
  kRhsFailure,
  kStopped,
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  IntegratorMethod method = IntegratorMethod::kAdaptiveRk45;
  double tol = 0.0;
  Termination termination = Termination::kCompleted;
  /// Reason for early termination, empty otherwise.
  std::string message;

  bool completed() const { return termination == Termination::kCompleted; }
  double final_time() const { return times.back(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// dy/dt = rhs(t, y). The callback may throw pkopt::Error, which ends the
/// integration with Termination::kRhsFailure.
using VectorField =
    std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd* dy)>;

/// Returns true to stop after an accepted step.
using StopCondition = std::function<bool(double t, const Eigen::VectorXd& y)>;

/// Integrates from t = 0 to t_end with Dormand-Prince 5(4) or classical RK4.
Trajectory Integrate(const VectorField& rhs, const Eigen::VectorXd& y0,
                     double t_end, const IntegratorOptions& options = {},
                     const StopCondition& stop = {});

/// Flow and its derivative: integrates z' = F(z) jointly with G' = F_y(z) G,
/// G(0) = I.
struct VariationalResult {
  Eigen::VectorXd state;
  Eigen::MatrixXd monodromy;
  Termination termination = Termination::kCompleted;
  std::string message;
};

VariationalResult IntegrateVariational(const PontryaginField& field,
                                       const Eigen::VectorXd& z0, double t,
                                       const IntegratorOptions& options = {});

}  // namespace pkopt
