#include "pkopt/spectral.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include <Eigen/Eigenvalues>

#include "pkopt/error.h"
#include "pkopt/structure.h"

namespace pkopt {

GalerkinMatrix AssembleGalerkin(const PontryaginField& field,
                                const BasisSet& basis,
                                const QuadratureRule& quad, int threads) {
  const int n = basis.size();
  if (n == 0) throw std::invalid_argument("empty basis");
  if (quad.box.dim() != field.dim()) {
    throw std::invalid_argument("quadrature box does not match field dimension");
  }

  std::vector<PolyExpr> lifted(n);
  std::vector<int> deg_lift(field.dim(), 0);
  std::vector<int> deg_phi(field.dim(), 0);
  for (int i = 0; i < n; ++i) {
    lifted[i] = ApplyLift(field, basis.functions[i]);
    const std::vector<int> a = lifted[i].degrees();
    const std::vector<int> b = basis.functions[i].degrees();
    for (int k = 0; k < field.dim(); ++k) {
      deg_lift[k] = std::max(deg_lift[k], a[k]);
      deg_phi[k] = std::max(deg_phi[k], b[k]);
    }
  }
  std::vector<int> need(field.dim());
  for (int k = 0; k < field.dim(); ++k) need[k] = deg_lift[k] + deg_phi[k];
  if (!quad.IsExactFor(need)) {
    throw std::invalid_argument(
        "quadrature with " + std::to_string(quad.nodes_per_dim) +
        " nodes per dimension is not exact for the Galerkin integrands");
  }

  const int K = quad.num_nodes();
  Eigen::MatrixXd A(K, n);  // L phi_i at the nodes
  Eigen::MatrixXd B(K, n);  // phi_j at the nodes
  auto column = [&](int i) {
    A.col(i) = quad.EvaluateAtNodes(lifted[i]);
    B.col(i) = quad.EvaluateAtNodes(basis.functions[i]);
  };
  const int workers = std::clamp(threads, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) column(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int i = next++; i < n; i = next++) column(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  GalerkinMatrix g;
  g.M = A.transpose() * quad.weights.asDiagonal() * B;
  g.basis_ref = basis.fingerprint();
  g.field_ref = field.fingerprint();
  g.nodes_per_dim = quad.nodes_per_dim;
  return g;
}

QuadratureRule DefaultGalerkinRule(const PontryaginField& field,
                                   const BasisSet& basis) {
  return GaussLegendreRule(basis.box,
                           DefaultNodesPerDim(basis.max_degree(), field.degree()));
}

std::vector<EigenPair> Eigendecompose(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) throw std::invalid_argument("M must be square");
  if (!M.allFinite()) throw std::invalid_argument("M has non-finite entries");
  if (tol < 0.0) tol = 1e-8 * M.norm();
  const int n = static_cast<int>(M.rows());
  const Eigen::MatrixXd Mt = M.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> solver(Mt, true);
  if (solver.info() != Eigen::Success) {
    throw SolverError("eigensolver did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();
  const Eigen::MatrixXcd Mtc = Mt.cast<std::complex<double>>();

  std::vector<EigenPair> out(n);
  for (int k = 0; k < n; ++k) {
    EigenPair& p = out[k];
    p.kappa = values[k];
    p.a = vectors.col(k);
    const double norm = p.a.norm();
    if (norm == 0.0) throw SolverError("zero eigenvector at index " + std::to_string(k));
    p.a /= norm;
    const double amax = p.a.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      const double m = std::abs(p.a[i]);
      if (m > 1e-8 * amax) {
        p.a *= std::conj(p.a[i]) / m;
        p.a[i] = m;
        break;
      }
    }
    p.residual = (Mtc * p.a - p.kappa * p.a).norm();
    if (!(p.residual <= tol)) {
      throw SolverError("eigenpair " + std::to_string(k) + " has residual " +
                        std::to_string(p.residual) + " above " +
                        std::to_string(tol));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EigenPair& a, const EigenPair& b) {
                     if (a.kappa.real() != b.kappa.real()) {
                       return a.kappa.real() > b.kappa.real();
                     }
                     return a.kappa.imag() > b.kappa.imag();
                   });
  return out;
}

void FlagTruncationDominated(std::vector<EigenPair>* eigs,
                             const BasisSet& basis, double threshold) {
  std::set<int> nonzero;
  for (int d : basis.degrees) {
    if (d > 0) nonzero.insert(d);
  }
  const int top = basis.max_degree();
  const bool active = nonzero.size() >= 2;
  for (EigenPair& p : *eigs) {
    if (p.a.size() != basis.size()) {
      throw std::invalid_argument("eigenvector length differs from basis size");
    }
    double mass = 0.0;
    for (int i = 0; i < basis.size(); ++i) {
      if (basis.degrees[i] == top) mass += std::norm(p.a[i]);
    }
    p.top_degree_mass = mass / std::max(p.a.squaredNorm(), 1e-300);
    p.truncation_dominated = active && p.top_degree_mass > threshold;
  }
}

int MirrorPairing::NontrivialPairedCount(
    const std::vector<EigenPair>& eigs) const {
  int count = 0;
  for (const MirrorPair& p : pairs) {
    if (std::abs(eigs[p.i].kappa) > tolerance) ++count;
    if (std::abs(eigs[p.j].kappa) > tolerance) ++count;
  }
  return count;
}

int MirrorPairing::PartnerOf(int i) const {
  for (const MirrorPair& p : pairs) {
    if (p.i == i) return p.j;
    if (p.j == i) return p.i;
  }
  return -1;
}

double MirrorPairing::DefectOf(int i) const {
  for (const MirrorPair& p : pairs) {
    if (p.i == i || p.j == i) return p.defect;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double DefaultPairTolerance(const std::vector<EigenPair>& eigs) {
  double m = 1.0;
  for (const EigenPair& p : eigs) m = std::max(m, std::abs(p.kappa));
  return 1e-6 * m;
}

MirrorPairing MirrorPairs(const std::vector<EigenPair>& eigs, double tol) {
  MirrorPairing pairing;
  pairing.tolerance = tol < 0.0 ? DefaultPairTolerance(eigs) : tol;
  const int n = static_cast<int>(eigs.size());
  std::vector<MirrorPair> candidates;
  for (int i = 0; i < n; ++i) {
    if (eigs[i].truncation_dominated) continue;
    for (int j = i + 1; j < n; ++j) {
      if (eigs[j].truncation_dominated) continue;
      const double d = std::abs(eigs[i].kappa + eigs[j].kappa);
      if (d <= pairing.tolerance) candidates.push_back({i, j, d});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const MirrorPair& a, const MirrorPair& b) {
                     return a.defect < b.defect;
                   });
  std::vector<bool> used(n, false);
  for (const MirrorPair& c : candidates) {
    if (used[c.i] || used[c.j]) continue;
    used[c.i] = used[c.j] = true;
    pairing.pairs.push_back(c);
  }
  std::sort(pairing.pairs.begin(), pairing.pairs.end(),
            [](const MirrorPair& a, const MirrorPair& b) { return a.i < b.i; });
  for (int i = 0; i < n; ++i) {
    if (eigs[i].truncation_dominated) {
      pairing.excluded.push_back(i);
    } else if (!used[i]) {
      pairing.unpaired.push_back(i);
    }
  }
  return pairing;
}

Eigenfunction MakeEigenfunction(const EigenPair& pair, const BasisSet& basis) {
  if (pair.a.size() != basis.size()) {
    throw std::invalid_argument("eigenvector length differs from basis size");
  }
  const int d = basis.box.dim();
  Eigenfunction ef;
  ef.kappa = pair.kappa;
  ef.psi = ComplexPoly(d);
  for (int i = 0; i < basis.size(); ++i) {
    if (pair.a[i] == std::complex<double>(0.0)) continue;
    ef.psi += basis.functions[i].ToComplex() * pair.a[i];
  }
  ef.gradient = ef.psi.Gradient();
  return ef;
}

std::complex<double> SymplecticCoupling(const Eigenfunction& p1,
                                        const Eigenfunction& p2,
                                        const QuadratureRule& quad) {
  return SymplecticForm(p1.psi, p2.psi, quad);
}

}  // namespace pkopt
