#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/polynomial.h"

namespace pkopt {

/// Axis-aligned box center ± half_width, the region of interest on which
/// observables are defined and integrated.
struct BoxDomain {
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;

  BoxDomain() = default;
  BoxDomain(Eigen::VectorXd c, Eigen::VectorXd h);

  /// [-half, half]^dim.
  static BoxDomain Cube(int dim, double half);

  int dim() const { return static_cast<int>(center.size()); }
  double volume() const;
  bool Contains(const Eigen::VectorXd& z) const;
  /// Box over the first k coordinates.
  BoxDomain Leading(int k) const;
};

/// The first `count` multi-indices in graded order (total degree, then the
/// larger power of the earlier variable first).
std::vector<Exponent> GradedIndexSet(int dim, int count);

/// Legendre polynomial P_n on [-1, 1] in one variable.
PolyExpr LegendreP(int n);

/// Tensor Legendre basis, orthonormal in L2 over the box.
struct BasisSet {
  BoxDomain box;
  std::vector<Exponent> indices;
  std::vector<PolyExpr> functions;
  std::vector<int> degrees;

  int size() const { return static_cast<int>(functions.size()); }
  int max_degree() const;
  std::string fingerprint() const;
};

/// phi_a(z) = prod_k sqrt((2 a_k + 1) / (2 h_k)) P_{a_k}((z_k - c_k) / h_k).
BasisSet LegendreBasis(const BoxDomain& box, std::vector<Exponent> indices);

/// Tensor Gauss-Legendre rule on a box.
struct QuadratureRule {
  BoxDomain box;
  int nodes_per_dim = 0;
  /// Largest exponent per variable that is integrated exactly (2m - 1).
  int exact_degree = 0;
  /// One node per column.
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;

  int num_nodes() const { return static_cast<int>(weights.size()); }

  /// True when every per-variable exponent is at most exact_degree.
  bool IsExactFor(const std::vector<int>& per_variable_degree) const;

  /// Values of p at every node, computed term by term from per-coordinate
  /// power tables.
  template <typename T>
  Eigen::Matrix<T, Eigen::Dynamic, 1> EvaluateAtNodes(
      const Polynomial<T>& p) const {
    const int dim = static_cast<int>(nodes.rows());
    if (p.num_vars() != dim) {
      throw std::invalid_argument("polynomial and quadrature differ in dimension");
    }
    const std::vector<int> deg = p.degrees();
    // powers[k] is (deg_k + 1) x K with row e holding z_k^e.
    std::vector<Eigen::ArrayXXd> powers(dim);
    for (int k = 0; k < dim; ++k) {
      powers[k].resize(deg[k] + 1, num_nodes());
      powers[k].row(0).setOnes();
      for (int e = 1; e <= deg[k]; ++e) {
        powers[k].row(e) = powers[k].row(e - 1) * nodes.row(k).array();
      }
    }
    Eigen::Array<T, Eigen::Dynamic, 1> out =
        Eigen::Array<T, Eigen::Dynamic, 1>::Zero(num_nodes());
    Eigen::ArrayXd term(num_nodes());
    for (const auto& [e, c] : p.terms()) {
      term.setOnes();
      for (int k = 0; k < dim; ++k) {
        if (e[k] > 0) term *= powers[k].row(e[k]).transpose();
      }
      out += c * term.template cast<T>();
    }
    return out.matrix();
  }

  /// Weighted sum over the nodes, in node order.
  template <typename T>
  T Integrate(const Polynomial<T>& p) const {
    return (weights.template cast<T>().array() * EvaluateAtNodes(p).array())
        .sum();
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void GaussLegendre1D(int m, Eigen::VectorXd* nodes, Eigen::VectorXd* weights);

QuadratureRule GaussLegendreRule(const BoxDomain& box, int nodes_per_dim);

/// Smallest rule that integrates polynomials with the given per-variable
/// degrees exactly.
QuadratureRule RuleForDegrees(const BoxDomain& box,
                              const std::vector<int>& per_variable_degree);

/// Nodes per dimension for Galerkin assembly: ceil((d_basis + d_F + 1) / 2) + 1,
/// raised when needed so that deg(L phi_i) + deg(phi_j) <= 2m - 1.
int DefaultNodesPerDim(int basis_degree, int field_degree);

}  // namespace pkopt
