#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/basis.h"
#include "pkopt/integrator.h"
#include "pkopt/model.h"
#include "pkopt/polynomial.h"

namespace pkopt {

/// Omega = [[0, I], [-I, 0]] of size 2 n_x.
Eigen::MatrixXd SymplecticMatrix(int n_x);

/// Throws std::invalid_argument unless quad integrates every product
/// d_k phi * d_j Phi with Omega_kj != 0 exactly.
template <typename T>
void RequireExactForForm(const Polynomial<T>& phi, const Polynomial<T>& Phi,
                         const QuadratureRule& quad) {
  const int d = phi.num_vars();
  if (Phi.num_vars() != d || d % 2 != 0 || quad.box.dim() != d) {
    throw std::invalid_argument("symplectic form needs two functions over y");
  }
  const int n = d / 2;
  const std::vector<int> dp = phi.degrees();
  const std::vector<int> dq = Phi.degrees();
  for (int k = 0; k < n; ++k) {
    for (int pair = 0; pair < 2; ++pair) {
      const int a = pair == 0 ? k : n + k;
      const int b = pair == 0 ? n + k : k;
      std::vector<int> deg(d);
      for (int v = 0; v < d; ++v) {
        deg[v] = std::max(0, dp[v] - (v == a ? 1 : 0)) +
                 std::max(0, dq[v] - (v == b ? 1 : 0));
      }
      if (!quad.IsExactFor(deg)) {
        throw std::invalid_argument(
            "quadrature with " + std::to_string(quad.nodes_per_dim) +
            " nodes per dimension is not exact for the symplectic form");
      }
    }
  }
}

/// omega(phi, Phi) = integral over the box of grad(phi)' Omega grad(Phi).
/// Complex arguments are handled bilinearly (no conjugation).
template <typename T>
T SymplecticForm(const Polynomial<T>& phi, const Polynomial<T>& Phi,
                 const QuadratureRule& quad) {
  RequireExactForForm(phi, Phi, quad);
  const int n = phi.num_vars() / 2;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  Vec integrand = Vec::Zero(quad.num_nodes());
  for (int k = 0; k < n; ++k) {
    const Vec a = quad.EvaluateAtNodes(phi.Differentiate(k));
    const Vec b = quad.EvaluateAtNodes(Phi.Differentiate(n + k));
    const Vec c = quad.EvaluateAtNodes(phi.Differentiate(n + k));
    const Vec e = quad.EvaluateAtNodes(Phi.Differentiate(k));
    integrand.array() += a.array() * b.array() - c.array() * e.array();
  }
  return (quad.weights.template cast<T>().array() * integrand.array()).sum();
}

/// Max-entry defect of G' Omega G - Omega and |det G - 1|.
struct MonodromyDefects {
  double symplectic = 0.0;
  double det = 0.0;
};
MonodromyDefects MonodromyDefect(const Eigen::MatrixXd& G);

/// Derivative of the time-t flow map at z0 from the variational equation.
/// Throws SolverError if the trajectory leaves the configured bound.
Eigen::MatrixXd Monodromy(const PontryaginField& field,
                          const Eigen::VectorXd& z0, double t,
                          double tol = 1e-10, double bound = 1e8);

struct StructureReport {
  double symmetry_defect = 0.0;
  double divergence = 0.0;
  double monodromy_symplectic_defect = 0.0;
  double monodromy_det_defect = 0.0;
  double adjoint_defect = 0.0;
};

/// Pointwise symmetry of Omega F_y and trace of F_y over the samples.
/// Monodromy and adjoint entries are left at zero.
StructureReport CheckHamiltonianStructure(
    const PontryaginField& field, const std::vector<Eigen::VectorXd>& samples);

/// w(z) = prod_i (h_i^2 - (z_i - c_i)^2)^2, which vanishes with its gradient
/// on the boundary of the box.
PolyExpr BoundaryWeight(const BoxDomain& box);

/// True when p and grad p restrict to zero on every face of the box.
bool VanishesOnBoundary(const PolyExpr& p, const BoxDomain& box);

struct AdjointCheck {
  double defect = 0.0;
  bool boundary_vanishing = true;
  /// Set when a test function does not vanish on the boundary, in which case
  /// the defect contains an integration-by-parts boundary term.
  std::string warning;
};

/// |omega(p, Lq) + omega(Lp, q)| with L the Lie derivative along the field.
AdjointCheck AdjointDefect(const PontryaginField& field, const PolyExpr& p,
                           const PolyExpr& q, const QuadratureRule& quad);

/// Same, on the smallest exact rule for the given test functions.
AdjointCheck AdjointDefect(const PontryaginField& field, const PolyExpr& p,
                           const PolyExpr& q, const BoxDomain& box);

/// Matrix of omega(f_i, f_j).
Eigen::MatrixXd SymplecticGram(const std::vector<PolyExpr>& fns,
                               const QuadratureRule& quad);

/// Skew Gram-Schmidt with pivoting: returns combinations q of fns whose
/// omega-Gram matrix is Omega. Throws SolverError when no pivot exceeds 1e-12.
std::vector<PolyExpr> SkewGramSchmidt(const std::vector<PolyExpr>& fns,
                                      const QuadratureRule& quad);

struct StructureSuiteOptions {
  int num_samples = 100;
  std::uint64_t seed = 0;
  /// Initial points and horizon for the monodromy checks.
  std::vector<Eigen::VectorXd> monodromy_points;
  double monodromy_time = 1.0;
  double tol = 1e-10;
  int num_adjoint_pairs = 20;
};

/// Full battery on one field: random samples in the box, monodromy from the
/// given points, random boundary-vanishing adjoint pairs.
StructureReport RunStructureSuite(const PontryaginField& field,
                                  const BoxDomain& box,
                                  const StructureSuiteOptions& options);

}  // namespace pkopt
