#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "pkopt/basis.h"
#include "pkopt/model.h"
#include "pkopt/polynomial.h"

namespace pkopt {

/// L phi = F' grad phi, computed exactly.
template <typename T>
Polynomial<T> ApplyLift(const PontryaginField& field, const Polynomial<T>& phi) {
  if (phi.num_vars() != field.dim()) {
    throw std::invalid_argument("lift expects a function of (x, lambda)");
  }
  Polynomial<T> out(field.dim());
  for (int k = 0; k < field.dim(); ++k) {
    const Polynomial<T> d = phi.Differentiate(k);
    if (d.is_zero()) continue;
    if constexpr (std::is_same_v<T, double>) {
      out += field.components()[k] * d;
    } else {
      out += field.components()[k].ToComplex() * d;
    }
  }
  return out;
}

/// M_ij = <L phi_i, phi_j> on the box.
struct GalerkinMatrix {
  Eigen::MatrixXd M;
  std::string basis_ref;
  std::string field_ref;
  int nodes_per_dim = 0;
};

/// Throws std::invalid_argument when the rule is not exact for every
/// product L phi_i * phi_j. Columns are computed on `threads` workers; the
/// result does not depend on the thread count.
GalerkinMatrix AssembleGalerkin(const PontryaginField& field,
                                const BasisSet& basis,
                                const QuadratureRule& quad, int threads = 1);

/// Rule with DefaultNodesPerDim for this field and basis.
QuadratureRule DefaultGalerkinRule(const PontryaginField& field,
                                   const BasisSet& basis);

/// Left eigenpair of M: M' a = kappa a.
struct EigenPair {
  std::complex<double> kappa;
  /// Unit 2-norm, first significant entry real and positive.
  Eigen::VectorXcd a;
  double residual = 0.0;
  /// Share of |a|^2 on the highest-degree basis functions.
  double top_degree_mass = 0.0;
  bool truncation_dominated = false;
};

/// Full eigendecomposition of M' sorted by descending real part, then
/// descending imaginary part. tol < 0 selects 1e-8 * ||M||_F. Throws
/// SolverError if the eigensolver fails or a residual exceeds tol.
std::vector<EigenPair> Eigendecompose(const Eigen::MatrixXd& M,
                                      double tol = -1.0);

/// Fills top_degree_mass and marks pairs with more than `threshold` of their
/// mass on the top-degree slice. Only applied when the basis has at least
/// two distinct nonzero degrees; otherwise nothing is flagged.
void FlagTruncationDominated(std::vector<EigenPair>* eigs,
                             const BasisSet& basis, double threshold = 0.9);

struct MirrorPair {
  int i = 0;
  int j = 0;
  double defect = 0.0;
};

struct MirrorPairing {
  double tolerance = 0.0;
  std::vector<MirrorPair> pairs;
  /// Unflagged eigenvalues without a partner.
  std::vector<int> unpaired;
  /// Truncation-dominated eigenvalues, left out of the matching.
  std::vector<int> excluded;

  /// Number of paired eigenvalues with |kappa| above the tolerance.
  int NontrivialPairedCount(const std::vector<EigenPair>& eigs) const;
  /// Partner index of i, or -1.
  int PartnerOf(int i) const;
  /// |kappa_i + kappa_partner|, or NaN when unpaired.
  double DefectOf(int i) const;
};

/// 1e-6 * max(1, max |kappa|).
double DefaultPairTolerance(const std::vector<EigenPair>& eigs);

/// Greedy smallest-defect matching of kappa_i with -kappa_j. tol < 0 selects
/// DefaultPairTolerance.
MirrorPairing MirrorPairs(const std::vector<EigenPair>& eigs, double tol = -1.0);

/// Psi = sum_i a_i phi_i with its gradient.
struct Eigenfunction {
  std::complex<double> kappa;
  ComplexPoly psi;
  std::vector<ComplexPoly> gradient;

  std::complex<double> Evaluate(const Eigen::VectorXd& y) const {
    return psi.Evaluate(y);
  }
};

Eigenfunction MakeEigenfunction(const EigenPair& pair, const BasisSet& basis);

/// omega(Psi_1, Psi_2), bilinear.
std::complex<double> SymplecticCoupling(const Eigenfunction& p1,
                                        const Eigenfunction& p2,
                                        const QuadratureRule& quad);

}  // namespace pkopt
