#include "pkopt/integrator.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pkopt/error.h"

namespace pkopt {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

bool Finite(const Eigen::VectorXd& y) { return y.allFinite(); }

}  // namespace

Trajectory Integrate(const VectorField& rhs, const Eigen::VectorXd& y0,
                     double t_end, const IntegratorOptions& options,
                     const StopCondition& stop) {
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  if (!Finite(y0)) throw std::invalid_argument("initial state is not finite");
  if (options.tol <= 0.0 || options.step <= 0.0) {
    throw std::invalid_argument("integrator tol and step must be positive");
  }

  Trajectory traj;
  traj.method = options.method;
  traj.tol = options.tol;
  traj.times.push_back(0.0);
  traj.states.push_back(y0);
  if (t_end == 0.0) return traj;

  std::vector<double> targets;
  for (double t : options.output_times) {
    if (t > 0.0 && t < t_end) targets.push_back(t);
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(t_end);
  const bool record_all = options.output_times.empty();

  const int n = static_cast<int>(y0.size());
  Eigen::VectorXd y = y0;
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n);
  double t = 0.0;
  double h = std::min(options.step, t_end);
  std::size_t next_target = 0;
  long steps = 0;

  try {
    if (options.method == IntegratorMethod::kAdaptiveRk45) rhs(t, y, &k1);
    while (next_target < targets.size()) {
      if (++steps > options.max_steps) {
        throw SolverError("integrator exceeded max_steps");
      }
      const double target = targets[next_target];
      bool hits_target = false;
      double step = h;
      if (t + step >= target - 1e-14 * std::max(1.0, std::abs(target))) {
        step = target - t;
        hits_target = true;
      }

      Eigen::VectorXd y_new(n);
      if (options.method == IntegratorMethod::kFixedRk4) {
        rhs(t, y, &k1);
        tmp = y + 0.5 * step * k1;
        rhs(t + 0.5 * step, tmp, &k2);
        tmp = y + 0.5 * step * k2;
        rhs(t + 0.5 * step, tmp, &k3);
        tmp = y + step * k3;
        rhs(t + step, tmp, &k4);
        y_new = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      } else {
        tmp = y + step * a21 * k1;
        rhs(t + c2 * step, tmp, &k2);
        tmp = y + step * (a31 * k1 + a32 * k2);
        rhs(t + c3 * step, tmp, &k3);
        tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * step, tmp, &k4);
        tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * step, tmp, &k5);
        tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + step, tmp, &k6);
        y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + step, y_new, &k7);

        const Eigen::VectorXd err =
            step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err_norm = 0.0;
        for (int i = 0; i < n; ++i) {
          const double scale =
              options.tol * (1.0 + std::max(std::abs(y[i]), std::abs(y_new[i])));
          err_norm = std::max(err_norm, std::abs(err[i]) / scale);
        }
        if (!std::isfinite(err_norm)) err_norm = 1e10;
        const double factor =
            err_norm == 0.0 ? 5.0
                            : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        if (err_norm > 1.0) {
          h = step * std::max(0.2, factor);
          if (h < 1e-14 * std::max(1.0, t)) {
            throw SolverError("integrator step size underflow");
          }
          continue;
        }
        // Keep the unclamped proposal when the step was cut to hit a target.
        h = hits_target ? std::max(h, step * factor) : step * factor;
        k1 = k7;
      }

      t = hits_target ? target : t + step;
      y = std::move(y_new);

      if (!Finite(y) || y.norm() > options.bound) {
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.termination = Termination::kBlowUp;
        traj.message = "state norm exceeded bound at t=" + std::to_string(t);
        return traj;
      }
      if (hits_target) ++next_target;
      if (record_all || hits_target) {
        traj.times.push_back(t);
        traj.states.push_back(y);
      }
      if (stop && stop(t, y)) {
        if (!(record_all || hits_target)) {
          traj.times.push_back(t);
          traj.states.push_back(y);
        }
        traj.termination = Termination::kStopped;
        return traj;
      }
    }
  } catch (const Error& e) {
    traj.termination = Termination::kRhsFailure;
    traj.message = e.what();
  }
  return traj;
}

VariationalResult IntegrateVariational(const PontryaginField& field,
                                       const Eigen::VectorXd& z0, double t,
                                       const IntegratorOptions& options) {
  const int d = field.dim();
  if (z0.size() != d) throw std::invalid_argument("z0 has wrong dimension");

  Eigen::VectorXd y0(d + d * d);
  y0.head(d) = z0;
  Eigen::Map<Eigen::MatrixXd>(y0.data() + d, d, d).setIdentity();

  VectorField rhs = [&field, d](double, const Eigen::VectorXd& y,
                                Eigen::VectorXd* dy) {
    const Eigen::VectorXd z = y.head(d);
    dy->resize(y.size());
    dy->head(d) = field.Evaluate(z);
    const Eigen::Map<const Eigen::MatrixXd> G(y.data() + d, d, d);
    Eigen::Map<Eigen::MatrixXd>(dy->data() + d, d, d) =
        field.EvaluateJacobian(z) * G;
  };

  IntegratorOptions opts = options;
  opts.output_times.clear();
  const Trajectory traj = Integrate(rhs, y0, t, opts);

  VariationalResult result;
  result.state = traj.final_state().head(d);
  result.monodromy =
      Eigen::Map<const Eigen::MatrixXd>(traj.final_state().data() + d, d, d);
  result.termination = traj.termination;
  result.message = traj.message;
  return result;
}

}  // namespace pkopt
