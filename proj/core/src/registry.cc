#include "pkopt/registry.h"

#include "pkopt/error.h"

namespace pkopt {

namespace {

// Builds sum_k coeff_k * prod z^e over the full (x, u, lambda) space.
PolyExpr Terms(int num_vars,
               const std::vector<std::pair<Exponent, double>>& terms) {
  PolyExpr p(num_vars);
  for (const auto& [e, c] : terms) p.AddTerm(e, c);
  return p;
}

SteadyStatePoint Origin(int n_x, int n_u) {
  return {Eigen::VectorXd::Zero(n_x), Eigen::VectorXd::Zero(n_u),
          Eigen::VectorXd::Zero(n_x)};
}

}  // namespace

ProblemDefinition VanDerPolProblem() {
  // Full-space order: x1, x2, u, lambda1, lambda2.
  constexpr int n = 5;
  PolyExpr f1 = Terms(n, {{{0, 1, 0, 0, 0}, 1.0}});
  PolyExpr f2 = Terms(n, {{{1, 0, 0, 0, 0}, -1.0},
                          {{0, 1, 0, 0, 0}, -0.5},
                          {{2, 1, 0, 0, 0}, 0.5},
                          {{1, 0, 1, 0, 0}, 1.0}});
  PolyExpr l = Terms(n, {{{0, 2, 0, 0, 0}, 0.5}, {{0, 0, 2, 0, 0}, 0.5}});
  return {OcpModel("vanderpol", 2, 1, {f1, f2}, l, 0.0), BoxDomain::Cube(4, 0.5),
          Origin(2, 1)};
}

ProblemDefinition DoubleIntegratorLqrProblem() {
  constexpr int n = 5;
  PolyExpr f1 = Terms(n, {{{0, 1, 0, 0, 0}, 1.0}});
  PolyExpr f2 = Terms(n, {{{0, 0, 1, 0, 0}, 1.0}});
  PolyExpr l = Terms(n, {{{2, 0, 0, 0, 0}, 0.5},
                         {{0, 2, 0, 0, 0}, 0.5},
                         {{0, 0, 2, 0, 0}, 0.5}});
  return {OcpModel("double_integrator_lqr", 2, 1, {f1, f2}, l, 0.0),
          BoxDomain::Cube(4, 0.5), Origin(2, 1)};
}

ProblemDefinition RegistryProblem(const std::string& name) {
  if (name == "vanderpol") return VanDerPolProblem();
  if (name == "double_integrator_lqr") return DoubleIntegratorLqrProblem();
  throw ConfigError("unknown problem '" + name + "'");
}

std::vector<std::string> RegistryNames() {
  return {"vanderpol", "double_integrator_lqr"};
}

}  // namespace pkopt
