#include "pkopt/simulation.h"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pkopt/error.h"

namespace pkopt {

SteadyState Linearize(const OcpModel& model, const SteadyStatePoint& point) {
  const VariableLayout& lay = model.layout();
  const int nx = lay.n_x;
  const int nu = lay.n_u;
  if (point.x.size() != nx || point.u.size() != nu ||
      point.lambda.size() != nx) {
    throw std::invalid_argument("steady state has wrong dimensions");
  }
  const Eigen::VectorXd z = model.FullPoint(point.x, point.u, point.lambda);
  const PolyExpr H = Hamiltonian(model);

  const Eigen::VectorXd f = model.Dynamics(point.x, point.u);
  if (f.size() > 0 && f.cwiseAbs().maxCoeff() > 1e-10) {
    throw CheckError("steady state violates f(x_p, u_p) = 0");
  }
  for (int i = 0; i < nu; ++i) {
    if (std::abs(H.Differentiate(lay.u(i)).Evaluate(z)) > 1e-10) {
      throw CheckError("steady state violates H_u = 0");
    }
  }

  SteadyState ss{point.x, point.u, point.lambda, {}};
  Linearization& lin = ss.lin;
  lin.A.resize(nx, nx);
  lin.B.resize(nx, nu);
  lin.Q.resize(nx, nx);
  lin.R.resize(nu, nu);
  lin.S.resize(nx, nu);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nx; ++j) {
      lin.A(i, j) = model.f()[i].Differentiate(lay.x(j)).Evaluate(z);
    }
    for (int j = 0; j < nu; ++j) {
      lin.B(i, j) = model.f()[i].Differentiate(lay.u(j)).Evaluate(z);
    }
  }
  for (int i = 0; i < nx; ++i) {
    const PolyExpr Hx = H.Differentiate(lay.x(i));
    for (int j = 0; j < nx; ++j) {
      lin.Q(i, j) = Hx.Differentiate(lay.x(j)).Evaluate(z);
    }
    for (int j = 0; j < nu; ++j) {
      lin.S(i, j) = Hx.Differentiate(lay.u(j)).Evaluate(z);
    }
  }
  for (int i = 0; i < nu; ++i) {
    const PolyExpr Hu = H.Differentiate(lay.u(i));
    for (int j = 0; j < nu; ++j) {
      lin.R(i, j) = Hu.Differentiate(lay.u(j)).Evaluate(z);
    }
  }
  return ss;
}

namespace {

Eigen::MatrixXd RiccatiRhs(const Linearization& lin, const Eigen::MatrixXd& P) {
  Eigen::MatrixXd out = P * lin.A + lin.A.transpose() * P + lin.Q;
  if (lin.R.rows() > 0) {
    const Eigen::MatrixXd PBS = P * lin.B + lin.S;
    out -= PBS * lin.R.llt().solve(PBS.transpose());
  }
  return out;
}

}  // namespace

double AreResidual(const Linearization& lin, const Eigen::MatrixXd& P) {
  return RiccatiRhs(lin, P).cwiseAbs().maxCoeff();
}

AreSolution SolveAre(const Linearization& lin, double eps) {
  const int n = static_cast<int>(lin.A.rows());
  if (lin.R.rows() > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(lin.R);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("R must be positive definite");
    }
  }
  // Reverse time s = T - t turns the backward sweep into dP/ds = rhs(P).
  VectorField rhs = [&lin, n](double, const Eigen::VectorXd& y,
                              Eigen::VectorXd* dy) {
    const Eigen::Map<const Eigen::MatrixXd> P(y.data(), n, n);
    const Eigen::MatrixXd Ps = 0.5 * (P + P.transpose());
    const Eigen::MatrixXd d = RiccatiRhs(lin, Ps);
    dy->resize(n * n);
    Eigen::Map<Eigen::MatrixXd>(dy->data(), n, n) = 0.5 * (d + d.transpose());
  };

  Eigen::VectorXd y(n * n);
  Eigen::Map<Eigen::MatrixXd>(y.data(), n, n) =
      eps * Eigen::MatrixXd::Identity(n, n);
  IntegratorOptions opts;
  opts.tol = 1e-12;
  opts.bound = 1e12;

  double horizon = 0.0;
  double chunk = 10.0;
  for (int round = 0; round < 16; ++round) {
    const Trajectory tr = Integrate(rhs, y, chunk, opts);
    if (!tr.completed()) {
      throw SolverError("Riccati sweep diverged; the linearization is not "
                        "stabilizable: " + tr.message);
    }
    y = tr.final_state();
    horizon += chunk;
    Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(y.data(), n, n);
    P = 0.5 * (P + P.transpose());
    if (RiccatiRhs(lin, P).norm() <= 1e-11) {
      AreSolution sol;
      sol.P = P;
      sol.residual = AreResidual(lin, P);
      sol.horizon = horizon;
      if (sol.residual > 1e-9) {
        throw SolverError("Riccati residual " + std::to_string(sol.residual) +
                          " above 1e-9");
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
      if (!(es.eigenvalues().minCoeff() > 0.0)) {
        throw SolverError("Riccati solution is not positive definite");
      }
      return sol;
    }
    chunk *= 2.0;
  }
  throw SolverError("Riccati sweep did not converge");
}

namespace {

// Integrates [x; cost] under the feedback law; keeps the last costate as the
// next warm start.
struct LoopSystem {
  const OcpModel& model;
  const FeedbackLaw& law;
  Eigen::VectorXd warm;

  void operator()(double, const Eigen::VectorXd& y, Eigen::VectorXd* dy) {
    const int nx = model.n_x();
    const Eigen::VectorXd x = y.head(nx);
    const Eigen::VectorXd guess = warm.size() == nx && warm.allFinite()
                                      ? warm
                                      : law.InitialGuess(x);
    CostateSolution s = law.TrySolveCostate(x, &guess);
    if (!s.converged) s = law.SolveCostate(x);  // retry from the Riccati guess
    warm = s.lambda;
    const Eigen::VectorXd u = law.ustar().Evaluate(x, s.lambda);
    dy->resize(nx + 1);
    dy->head(nx) = model.Dynamics(x, u);
    (*dy)[nx] = model.RunningCost(x, u) - model.l_star();
  }

  double Integrand(const Eigen::VectorXd& x) {
    const Eigen::VectorXd guess =
        warm.size() == x.size() ? warm : law.InitialGuess(x);
    const CostateSolution s = law.SolveCostate(x, &guess);
    return model.RunningCost(x, law.ustar().Evaluate(x, s.lambda)) -
           model.l_star();
  }
};

ClosedLoopResult Split(const Trajectory& aug, int nx) {
  ClosedLoopResult r;
  r.trajectory.times = aug.times;
  r.trajectory.method = aug.method;
  r.trajectory.tol = aug.tol;
  r.trajectory.termination = aug.termination;
  r.trajectory.message = aug.message;
  for (const auto& s : aug.states) {
    r.trajectory.states.push_back(s.head(nx));
    r.cost.push_back(s[nx]);
  }
  r.truncated = aug.termination == Termination::kRhsFailure;
  r.message = aug.message;
  return r;
}

}  // namespace

ClosedLoopResult ClosedLoopRollout(const OcpModel& model,
                                   const FeedbackLaw& law,
                                   const Eigen::VectorXd& x0, double t_end,
                                   const IntegratorOptions& options,
                                   const Eigen::VectorXd* initial_costate) {
  const int nx = model.n_x();
  if (x0.size() != nx) throw std::invalid_argument("x0 has wrong dimension");
  LoopSystem sys{model, law,
                 initial_costate ? *initial_costate : Eigen::VectorXd()};
  VectorField rhs = [&sys](double t, const Eigen::VectorXd& y,
                           Eigen::VectorXd* dy) { sys(t, y, dy); };
  Eigen::VectorXd y0(nx + 1);
  y0 << x0, 0.0;
  return Split(Integrate(rhs, y0, t_end, options), nx);
}

CostReport InfiniteHorizonCost(const OcpModel& model, const FeedbackLaw& law,
                               const Eigen::VectorXd& x0, double t_cap,
                               double integrand_tol,
                               const IntegratorOptions& options,
                               const Eigen::VectorXd* initial_costate) {
  const int nx = model.n_x();
  if (x0.size() != nx) throw std::invalid_argument("x0 has wrong dimension");
  LoopSystem sys{model, law,
                 initial_costate ? *initial_costate : Eigen::VectorXd()};
  VectorField rhs = [&sys](double t, const Eigen::VectorXd& y,
                           Eigen::VectorXd* dy) { sys(t, y, dy); };

  // Running cost history for the decay window and tail estimate.
  std::vector<std::pair<double, double>> history;
  constexpr double kWindow = 1.0;
  StopCondition stop = [&](double t, const Eigen::VectorXd& y) {
    history.emplace_back(t, sys.Integrand(y.head(nx)));
    if (t < kWindow) return false;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (it->first < t - kWindow) break;
      if (!(std::abs(it->second) < integrand_tol)) return false;
    }
    return true;
  };

  IntegratorOptions opts = options;
  opts.output_times.clear();
  Eigen::VectorXd y0(nx + 1);
  y0 << x0, 0.0;
  const Trajectory tr = Integrate(rhs, y0, t_cap, opts, stop);

  CostReport rep;
  rep.cost = tr.final_state()[nx];
  rep.final_time = tr.final_time();
  rep.truncated = tr.termination == Termination::kRhsFailure ||
                  tr.termination == Termination::kBlowUp;
  rep.message = tr.message;
  rep.tail_integrand = history.empty() ? 0.0 : std::abs(history.back().second);
  rep.decayed = tr.termination == Termination::kStopped ||
                (!rep.truncated && rep.tail_integrand < integrand_tol);
  // Exponential-decay extrapolation from the last window.
  rep.tail_bound = 0.0;
  if (rep.tail_integrand > 0.0 && history.size() >= 2) {
    const double t1 = history.back().first;
    double t0 = t1;
    double g0 = rep.tail_integrand;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      t0 = it->first;
      g0 = std::abs(it->second);
      if (it->first <= t1 - kWindow) break;
    }
    const double g1 = rep.tail_integrand;
    if (t1 > t0 && g0 > g1 && g1 > 0.0) {
      const double rate = std::log(g0 / g1) / (t1 - t0);
      rep.tail_bound = g1 / rate;
    } else {
      rep.tail_bound = std::numeric_limits<double>::infinity();
    }
  }
  if (!rep.decayed && rep.message.empty()) {
    rep.message = "running cost had not decayed below " +
                  std::to_string(integrand_tol) + " by t = " +
                  std::to_string(rep.final_time);
  }
  return rep;
}

CostateLimitResult CostateLimitCheck(const PontryaginField& field,
                                     const FeedbackLaw& law,
                                     const Eigen::VectorXd& x0, double t_end,
                                     double sample_step, double bound) {
  const int nx = field.n_x();
  if (x0.size() != nx) throw std::invalid_argument("x0 has wrong dimension");
  if (!(sample_step > 0.0)) throw std::invalid_argument("sample_step must be positive");
  const CostateSolution s = law.SolveCostate(x0);
  Eigen::VectorXd z0(2 * nx);
  z0 << x0, s.lambda;

  IntegratorOptions opts;
  opts.bound = bound;
  for (double t = sample_step; t < t_end; t += sample_step) {
    opts.output_times.push_back(t);
  }
  VectorField rhs = [&field](double, const Eigen::VectorXd& y,
                             Eigen::VectorXd* dy) { *dy = field.Evaluate(y); };
  const Trajectory tr = Integrate(rhs, z0, t_end, opts);

  CostateLimitResult r;
  r.min_deviation = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double d = (tr.states[k].tail(nx) - law.lambda_p()).norm();
    if (!std::isfinite(d)) continue;
    if (d < r.min_deviation) {
      r.min_deviation = d;
      r.min_time = tr.times[k];
    }
  }
  r.final_deviation = (tr.final_state().tail(nx) - law.lambda_p()).norm();
  if (tr.termination == Termination::kBlowUp) {
    r.escaped = true;
    r.escape_time = tr.final_time();
    r.message = "trajectory left the bound at t = " +
                std::to_string(r.escape_time);
    r.final_deviation = std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace pkopt
