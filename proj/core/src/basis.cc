#include "pkopt/basis.h"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace pkopt {

BoxDomain::BoxDomain(Eigen::VectorXd c, Eigen::VectorXd h)
    : center(std::move(c)), half_width(std::move(h)) {
  if (center.size() != half_width.size()) {
    throw std::invalid_argument("box center and half_width differ in size");
  }
  if (center.size() == 0) throw std::invalid_argument("empty box");
  for (int k = 0; k < half_width.size(); ++k) {
    if (!(half_width[k] > 0.0)) {
      throw std::invalid_argument("box half_width must be positive");
    }
  }
}

BoxDomain BoxDomain::Cube(int dim, double half) {
  return BoxDomain(Eigen::VectorXd::Zero(dim),
                   Eigen::VectorXd::Constant(dim, half));
}

double BoxDomain::volume() const { return (2.0 * half_width).prod(); }

bool BoxDomain::Contains(const Eigen::VectorXd& z) const {
  return ((z - center).cwiseAbs().array() <= half_width.array()).all();
}

BoxDomain BoxDomain::Leading(int k) const {
  return BoxDomain(center.head(k), half_width.head(k));
}

namespace {

void AppendDegree(int dim, int degree, Exponent* prefix,
                  std::vector<Exponent>* out, int max_count) {
  if (static_cast<int>(out->size()) >= max_count) return;
  const int pos = static_cast<int>(prefix->size());
  if (pos == dim - 1) {
    prefix->push_back(degree);
    out->push_back(*prefix);
    prefix->pop_back();
    return;
  }
  for (int e = degree; e >= 0; --e) {
    prefix->push_back(e);
    AppendDegree(dim, degree - e, prefix, out, max_count);
    prefix->pop_back();
  }
}

}  // namespace

std::vector<Exponent> GradedIndexSet(int dim, int count) {
  if (dim < 1) throw std::invalid_argument("dim must be positive");
  if (count < 1) throw std::invalid_argument("count must be positive");
  std::vector<Exponent> out;
  Exponent prefix;
  for (int degree = 0; static_cast<int>(out.size()) < count; ++degree) {
    AppendDegree(dim, degree, &prefix, &out, count);
  }
  return out;
}

PolyExpr LegendreP(int n) {
  if (n < 0) throw std::invalid_argument("negative Legendre degree");
  PolyExpr p0 = PolyExpr::Constant(1, 1.0);
  if (n == 0) return p0;
  const PolyExpr s = PolyExpr::Variable(1, 0);
  PolyExpr p1 = s;
  for (int k = 1; k < n; ++k) {
    // (k+1) P_{k+1} = (2k+1) s P_k - k P_{k-1}
    PolyExpr next = ((2.0 * k + 1.0) * (s * p1) - static_cast<double>(k) * p0) *
                    (1.0 / (k + 1.0));
    p0 = std::move(p1);
    p1 = std::move(next);
  }
  return p1;
}

int BasisSet::max_degree() const {
  int d = 0;
  for (int v : degrees) d = std::max(d, v);
  return d;
}

std::string BasisSet::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(box.center.data(), sizeof(double) * box.center.size());
  mix(box.half_width.data(), sizeof(double) * box.half_width.size());
  for (const auto& a : indices) mix(a.data(), sizeof(int) * a.size());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BasisSet LegendreBasis(const BoxDomain& box, std::vector<Exponent> indices) {
  const int dim = box.dim();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (static_cast<int>(indices[i].size()) != dim) {
      throw std::invalid_argument("basis index has wrong dimension");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (indices[i] == indices[j]) {
        throw std::invalid_argument("basis indices must be distinct");
      }
    }
  }

  int max_order = 0;
  for (const auto& a : indices) {
    for (int v : a) max_order = std::max(max_order, v);
  }

  // factors[k][n] = normalized P_n((z_k - c_k)/h_k) as a polynomial over z.
  std::vector<std::vector<PolyExpr>> factors(dim);
  for (int k = 0; k < dim; ++k) {
    const PolyExpr s = (PolyExpr::Variable(dim, k) -
                        PolyExpr::Constant(dim, box.center[k])) *
                       (1.0 / box.half_width[k]);
    for (int n = 0; n <= max_order; ++n) {
      const double norm = std::sqrt((2.0 * n + 1.0) / (2.0 * box.half_width[k]));
      factors[k].push_back(LegendreP(n).Compose({s}) * norm);
    }
  }

  BasisSet basis;
  basis.box = box;
  for (const auto& a : indices) {
    PolyExpr phi = PolyExpr::Constant(dim, 1.0);
    int degree = 0;
    for (int k = 0; k < dim; ++k) {
      phi = phi * factors[k][a[k]];
      degree += a[k];
    }
    basis.functions.push_back(std::move(phi));
    basis.degrees.push_back(degree);
  }
  basis.indices = std::move(indices);
  return basis;
}

void GaussLegendre1D(int m, Eigen::VectorXd* nodes, Eigen::VectorXd* weights) {
  if (m < 1) throw std::invalid_argument("need at least one node");
  nodes->resize(m);
  weights->resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // Newton on P_m starting from the Tricomi-type initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 1; k < m; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 1; k < m; ++k) {
      const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
      p0 = p1;
      p1 = p2;
    }
    dp = m * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    (*nodes)[i] = -x;
    (*nodes)[m - 1 - i] = x;
    (*weights)[i] = w;
    (*weights)[m - 1 - i] = w;
  }
  if (m % 2 == 1) (*nodes)[m / 2] = 0.0;
}

QuadratureRule GaussLegendreRule(const BoxDomain& box, int nodes_per_dim) {
  if (nodes_per_dim < 1) throw std::invalid_argument("nodes_per_dim must be >= 1");
  Eigen::VectorXd x1;
  Eigen::VectorXd w1;
  GaussLegendre1D(nodes_per_dim, &x1, &w1);

  const int dim = box.dim();
  std::int64_t total = 1;
  for (int k = 0; k < dim; ++k) total *= nodes_per_dim;
  if (total > 50'000'000) throw std::invalid_argument("quadrature grid too large");

  QuadratureRule rule;
  rule.box = box;
  rule.nodes_per_dim = nodes_per_dim;
  rule.exact_degree = 2 * nodes_per_dim - 1;
  rule.nodes.resize(dim, total);
  rule.weights.resize(total);

  std::vector<int> digit(dim, 0);
  for (std::int64_t n = 0; n < total; ++n) {
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      rule.nodes(k, n) = box.center[k] + box.half_width[k] * x1[digit[k]];
      w *= box.half_width[k] * w1[digit[k]];
    }
    rule.weights[n] = w;
    // Odometer with the last coordinate fastest.
    for (int k = dim - 1; k >= 0; --k) {
      if (++digit[k] < nodes_per_dim) break;
      digit[k] = 0;
    }
  }
  return rule;
}

bool QuadratureRule::IsExactFor(const std::vector<int>& per_variable_degree) const {
  for (int d : per_variable_degree) {
    if (d > exact_degree) return false;
  }
  return true;
}

QuadratureRule RuleForDegrees(const BoxDomain& box,
                              const std::vector<int>& per_variable_degree) {
  int d = 0;
  for (int v : per_variable_degree) d = std::max(d, v);
  return GaussLegendreRule(box, d / 2 + 1);
}

int DefaultNodesPerDim(int basis_degree, int field_degree) {
  const int heuristic = (basis_degree + field_degree + 2) / 2 + 1;
  // L phi_i has degree <= d_basis - 1 + d_F; times phi_j.
  const int integrand = std::max(0, 2 * basis_degree + field_degree - 1);
  const int required = integrand / 2 + 1;
  return std::max(heuristic, required);
}

}  // namespace pkopt
