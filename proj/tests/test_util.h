#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "pkopt/basis.h"
#include "pkopt/model.h"
#include "pkopt/polynomial.h"
#include "pkopt/registry.h"

namespace pkopt::testing {

inline PontryaginField FieldOf(const ProblemDefinition& problem) {
  return MakePontryaginField(problem.model,
                             MinimizeHamiltonianControl(problem.model));
}

inline PontryaginField VanDerPolField() { return FieldOf(VanDerPolProblem()); }
inline PontryaginField LqrField() { return FieldOf(DoubleIntegratorLqrProblem()); }

// Matrix exponential by scaling and squaring with a Taylor series.
inline Eigen::MatrixXd Expm(const Eigen::MatrixXd& A) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::ldexp(1.0, s) > 0.25) ++s;
  const Eigen::MatrixXd B = A / std::ldexp(1.0, s);
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * B / k;
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

// Random polynomial in dim variables with per-variable degree at most max_deg.
inline PolyExpr RandomPoly(int dim, int max_deg, int num_terms,
                           std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, max_deg);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolyExpr p(dim);
  for (int t = 0; t < num_terms; ++t) {
    Exponent e(dim);
    for (int& v : e) v = pick(rng);
    p.AddTerm(e, coef(rng));
  }
  return p;
}

inline Eigen::VectorXd RandomPoint(const BoxDomain& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd z(box.dim());
  for (int k = 0; k < box.dim(); ++k) {
    z[k] = box.center[k] + box.half_width[k] * u(rng);
  }
  return z;
}

// Exact integral of a monomial over the box.
inline double MonomialIntegral(const Exponent& e, const BoxDomain& box) {
  double v = 1.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double a = box.center[k] - box.half_width[k];
    const double b = box.center[k] + box.half_width[k];
    v *= (std::pow(b, e[k] + 1) - std::pow(a, e[k] + 1)) / (e[k] + 1);
  }
  return v;
}

inline double ExactIntegral(const PolyExpr& p, const BoxDomain& box) {
  double s = 0.0;
  for (const auto& [e, c] : p.terms()) s += c * MonomialIntegral(e, box);
  return s;
}

// Double integrator Riccati solution for Q = I, R = 1.
inline Eigen::Matrix2d LqrP() {
  const double r3 = std::sqrt(3.0);
  Eigen::Matrix2d P;
  P << r3, 1.0, 1.0, r3;
  return P;
}

inline double BetaP() { return std::sqrt(983.0 + 96.0 * std::sqrt(143.0)); }
inline double BetaM() { return std::sqrt(-983.0 + 96.0 * std::sqrt(143.0)); }

}  // namespace pkopt::testing
