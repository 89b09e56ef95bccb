#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/basis.h"
#include "pkopt/model.h"
#include "pkopt/spectral.h"

namespace pkopt {

/// One unstable eigenvalue used to build the manifold equations.
struct SelectedMode {
  int index = 0;
  std::complex<double> kappa;
  /// |omega(Psi_kappa, Psi_partner)| with the mirror partner, or with the
  /// eigenvalue closest to -kappa when unpaired.
  double coupling = 0.0;
  bool paired = false;
};

/// Psi_kappa(x, lambda) = 0 for the selected unstable eigenfunctions, split
/// into real equations over y = (x, lambda).
struct StableManifoldSystem {
  int n_x = 0;
  double tau = 0.0;
  std::vector<PolyExpr> equations;
  std::vector<SelectedMode> selected;
  /// d equations[r] / d lambda_c.
  PolyMatrix jacobian_lambda;
  /// Real and imaginary parts of the unstable eigenfunctions that were not
  /// selected; their values are reported but not enforced.
  std::vector<PolyExpr> unselected_equations;
};

/// 1e-6 * max |kappa|.
double DefaultUnstableThreshold(const std::vector<EigenPair>& eigs);

/// Picks unflagged eigenvalues with Re kappa > tau until exactly n_x real
/// equations are collected: mirror-paired eigenvalues first, then by
/// decreasing coupling, then by index. A complex pair contributes Re Psi and
/// Im Psi. tau < 0 selects DefaultUnstableThreshold. Throws SolverError when
/// fewer than n_x equations are available.
StableManifoldSystem SelectUnstable(const std::vector<EigenPair>& eigs,
                                    const MirrorPairing& pairing,
                                    const BasisSet& basis, int n_x,
                                    double tau = -1.0);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int max_halvings = 20;
};

struct CostateSolution {
  Eigen::VectorXd lambda;
  int iterations = 0;
  /// Max-norm of the manifold equations at lambda.
  double residual = 0.0;
  /// 2-norm condition number of the lambda-Jacobian at lambda.
  double condition = 0.0;
  bool converged = false;
  std::string message;
};

/// Costate map Lambda(x) from the stable-manifold equations and the
/// feedback mu(x) = u*(x, Lambda(x)).
class FeedbackLaw {
 public:
  /// warm_start is the Riccati matrix P; the default guess at x is
  /// lambda_p + P (x - x_p).
  FeedbackLaw(StableManifoldSystem system, UStar ustar, NewtonOptions newton,
              Eigen::MatrixXd warm_start, Eigen::VectorXd x_p,
              Eigen::VectorXd lambda_p);

  const StableManifoldSystem& system() const { return system_; }
  const UStar& ustar() const { return ustar_; }
  const NewtonOptions& newton() const { return newton_; }
  const Eigen::MatrixXd& warm_start() const { return warm_start_; }
  int n_x() const { return system_.n_x; }
  const Eigen::VectorXd& x_p() const { return x_p_; }
  const Eigen::VectorXd& lambda_p() const { return lambda_p_; }

  Eigen::VectorXd InitialGuess(const Eigen::VectorXd& x) const;

  /// Damped Newton from `guess` (InitialGuess when null). Throws SolverError
  /// on a singular Jacobian or non-convergence.
  CostateSolution SolveCostate(const Eigen::VectorXd& x,
                               const Eigen::VectorXd* guess = nullptr) const;

  /// Same, returning the failure record instead of throwing.
  CostateSolution TrySolveCostate(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd* guess = nullptr) const;

  /// mu(x); throws like SolveCostate.
  Eigen::VectorXd Feedback(const Eigen::VectorXd& x,
                           const Eigen::VectorXd* guess = nullptr) const;

  /// Equation values at (x, lambda).
  Eigen::VectorXd Residual(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lambda) const;

  /// Largest |value| of the unselected unstable eigenfunction parts.
  double UnselectedResidual(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& lambda) const;

 private:
  Eigen::VectorXd Point(const Eigen::VectorXd& x,
                        const Eigen::VectorXd& lambda) const;
  Eigen::MatrixXd Jacobian(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lambda) const;

  StableManifoldSystem system_;
  UStar ustar_;
  NewtonOptions newton_;
  Eigen::MatrixXd warm_start_;
  Eigen::VectorXd x_p_;
  Eigen::VectorXd lambda_p_;
};

/// Distinct roots of the manifold equations at x found from the default
/// guess and `restarts` randomly perturbed guesses. The first entry is the
/// root continued from the default guess when that solve converges.
std::vector<Eigen::VectorXd> FindCandidateRoots(const FeedbackLaw& law,
                                                const Eigen::VectorXd& x,
                                                std::uint64_t seed,
                                                int restarts = 8,
                                                double spread = 0.5);

/// Tensor grid with `per_dim` points per axis including the box faces;
/// the last coordinate varies fastest.
std::vector<Eigen::VectorXd> GridPoints(const BoxDomain& box, int per_dim);

struct GridSolution {
  Eigen::VectorXd x;
  CostateSolution costate;
  Eigen::VectorXd u;
};

/// Solves at every point, visiting points by distance from the steady state
/// and warm-starting each from the nearest solved point. Results are in the
/// order of `points`; failures are recorded, not thrown.
std::vector<GridSolution> SolveOnGrid(const FeedbackLaw& law,
                                      const std::vector<Eigen::VectorXd>& points);

struct ReferenceComparison {
  double l2sq_error = 0.0;
  double max_error = 0.0;
  std::vector<int> failed_nodes;
  bool valid() const { return failed_nodes.empty(); }
};

/// Integral of |mu - mu_ref|^2 over the rule's box and the largest
/// pointwise deviation at its nodes. `reference` holds one polynomial in x
/// per control.
ReferenceComparison CompareReference(const FeedbackLaw& law,
                                     const std::vector<PolyExpr>& reference,
                                     const QuadratureRule& quad);

}  // namespace pkopt
