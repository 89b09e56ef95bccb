#include "pkopt/structure.h"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/LU>

#include "pkopt/error.h"
#include "pkopt/spectral.h"

namespace pkopt {

Eigen::MatrixXd SymplecticMatrix(int n_x) {
  if (n_x < 1) throw std::invalid_argument("n_x must be positive");
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_x, 2 * n_x);
  omega.topRightCorner(n_x, n_x).setIdentity();
  omega.bottomLeftCorner(n_x, n_x) = -Eigen::MatrixXd::Identity(n_x, n_x);
  return omega;
}

MonodromyDefects MonodromyDefect(const Eigen::MatrixXd& G) {
  if (G.rows() != G.cols() || G.rows() % 2 != 0) {
    throw std::invalid_argument("monodromy must be square of even size");
  }
  const Eigen::MatrixXd omega = SymplecticMatrix(static_cast<int>(G.rows()) / 2);
  MonodromyDefects d;
  d.symplectic = (G.transpose() * omega * G - omega).cwiseAbs().maxCoeff();
  d.det = std::abs(G.determinant() - 1.0);
  return d;
}

Eigen::MatrixXd Monodromy(const PontryaginField& field,
                          const Eigen::VectorXd& z0, double t, double tol,
                          double bound) {
  IntegratorOptions opts;
  opts.tol = tol;
  opts.bound = bound;
  const VariationalResult r = IntegrateVariational(field, z0, t, opts);
  if (r.termination != Termination::kCompleted) {
    throw SolverError("monodromy integration failed: " + r.message);
  }
  return r.monodromy;
}

StructureReport CheckHamiltonianStructure(
    const PontryaginField& field, const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw std::invalid_argument("no sample points");
  const Eigen::MatrixXd omega = SymplecticMatrix(field.n_x());
  StructureReport report;
  for (const auto& z : samples) {
    const Eigen::MatrixXd J = field.EvaluateJacobian(z);
    const Eigen::MatrixXd S = omega * J;
    report.symmetry_defect = std::max(
        report.symmetry_defect, (S - S.transpose()).cwiseAbs().maxCoeff());
    report.divergence = std::max(report.divergence, std::abs(J.trace()));
  }
  return report;
}

PolyExpr BoundaryWeight(const BoxDomain& box) {
  const int d = box.dim();
  PolyExpr w = PolyExpr::Constant(d, 1.0);
  for (int k = 0; k < d; ++k) {
    const double c = box.center[k];
    const double h = box.half_width[k];
    // h^2 - (z - c)^2 = -z^2 + 2cz + h^2 - c^2
    PolyExpr g(d);
    Exponent e(d, 0);
    g.AddTerm(e, h * h - c * c);
    e[k] = 1;
    g.AddTerm(e, 2.0 * c);
    e[k] = 2;
    g.AddTerm(e, -1.0);
    w = w * g * g;
  }
  return w;
}

bool VanishesOnBoundary(const PolyExpr& p, const BoxDomain& box) {
  const int d = box.dim();
  if (p.num_vars() != d) {
    throw std::invalid_argument("test function and box differ in dimension");
  }
  if (p.is_zero()) return true;
  const int deg = p.degree();
  for (int k = 0; k < d; ++k) {
    const PolyExpr dp = p.Differentiate(k);
    for (double side : {-1.0, 1.0}) {
      const double v = box.center[k] + side * box.half_width[k];
      const PolyExpr value = PolyExpr::Constant(d, v);
      const double tol = 1e-10 * p.max_abs_coefficient() *
                         std::pow(std::max(1.0, std::abs(v)), deg);
      if (p.Substitute(k, value).max_abs_coefficient() > tol) return false;
      if (dp.Substitute(k, value).max_abs_coefficient() > deg * tol) {
        return false;
      }
    }
  }
  return true;
}

AdjointCheck AdjointDefect(const PontryaginField& field, const PolyExpr& p,
                           const PolyExpr& q, const QuadratureRule& quad) {
  const PolyExpr Lp = ApplyLift(field, p);
  const PolyExpr Lq = ApplyLift(field, q);
  AdjointCheck check;
  check.defect =
      std::abs(SymplecticForm(p, Lq, quad) + SymplecticForm(Lp, q, quad));
  check.boundary_vanishing =
      VanishesOnBoundary(p, quad.box) && VanishesOnBoundary(q, quad.box);
  if (!check.boundary_vanishing) {
    check.warning =
        "test functions do not vanish on the box boundary; the defect "
        "includes a boundary term";
  }
  return check;
}

AdjointCheck AdjointDefect(const PontryaginField& field, const PolyExpr& p,
                           const PolyExpr& q, const BoxDomain& box) {
  const std::vector<int> dp = p.degrees();
  const std::vector<int> dq = q.degrees();
  const std::vector<int> dLp = ApplyLift(field, p).degrees();
  const std::vector<int> dLq = ApplyLift(field, q).degrees();
  std::vector<int> deg(dp.size());
  for (std::size_t v = 0; v < deg.size(); ++v) {
    deg[v] = std::max(dp[v] + dLq[v], dLp[v] + dq[v]);
  }
  return AdjointDefect(field, p, q, RuleForDegrees(box, deg));
}

Eigen::MatrixXd SymplecticGram(const std::vector<PolyExpr>& fns,
                               const QuadratureRule& quad) {
  const int m = static_cast<int>(fns.size());
  if (m == 0) return Eigen::MatrixXd(0, 0);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) RequireExactForForm(fns[i], fns[j], quad);
  }
  const int d = fns.front().num_vars();
  const int n = d / 2;
  // grads[i] holds d_k f_i at the nodes, one column per k.
  std::vector<Eigen::MatrixXd> grads(m, Eigen::MatrixXd(quad.num_nodes(), d));
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) {
      grads[i].col(k) = quad.EvaluateAtNodes(fns[i].Differentiate(k));
    }
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      Eigen::ArrayXd integrand = Eigen::ArrayXd::Zero(quad.num_nodes());
      for (int k = 0; k < n; ++k) {
        integrand += grads[i].col(k).array() * grads[j].col(n + k).array() -
                     grads[i].col(n + k).array() * grads[j].col(k).array();
      }
      gram(i, j) = (quad.weights.array() * integrand).sum();
      gram(j, i) = -gram(i, j);
    }
  }
  return gram;
}

std::vector<PolyExpr> SkewGramSchmidt(const std::vector<PolyExpr>& fns,
                                      const QuadratureRule& quad) {
  const int m = static_cast<int>(fns.size());
  if (m == 0 || fns.front().num_vars() != m) {
    throw std::invalid_argument(
        "skew Gram-Schmidt needs one function per y coordinate");
  }
  const int n = m / 2;
  const Eigen::MatrixXd gram = SymplecticGram(fns, quad);
  const double pivot_tol = 1e-12 * std::max(1.0, gram.cwiseAbs().maxCoeff());

  // Columns of V are coefficient vectors over fns.
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd out(m, m);
  std::vector<bool> used(m, false);
  auto omega = [&gram](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(gram * b);
  };

  for (int step = 0; step < n; ++step) {
    int bi = -1;
    int bj = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      if (used[i]) continue;
      for (int j = 0; j < m; ++j) {
        if (used[j] || j == i) continue;
        const double c = std::abs(omega(V.col(i), V.col(j)));
        if (c > best) {
          best = c;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0 || best < pivot_tol) {
      throw SolverError("symplectic Gram matrix is singular (pivot " +
                        std::to_string(best) + ")");
    }
    const double c = omega(V.col(bi), V.col(bj));
    const Eigen::VectorXd e = V.col(bi) / std::sqrt(std::abs(c));
    const Eigen::VectorXd f =
        V.col(bj) * ((c > 0 ? 1.0 : -1.0) / std::sqrt(std::abs(c)));
    used[bi] = used[bj] = true;
    out.col(step) = e;
    out.col(n + step) = f;
    for (int r = 0; r < m; ++r) {
      if (used[r]) continue;
      const Eigen::VectorXd v = V.col(r);
      V.col(r) = v + omega(v, e) * f - omega(v, f) * e;
    }
  }

  std::vector<PolyExpr> q;
  q.reserve(m);
  for (int k = 0; k < m; ++k) {
    PolyExpr s(m);
    for (int i = 0; i < m; ++i) {
      if (out(i, k) != 0.0) s += out(i, k) * fns[i];
    }
    q.push_back(std::move(s));
  }
  return q;
}

StructureReport RunStructureSuite(const PontryaginField& field,
                                  const BoxDomain& box,
                                  const StructureSuiteOptions& options) {
  const int d = field.dim();
  if (box.dim() != d) throw std::invalid_argument("box dimension mismatch");
  if (options.num_samples < 1) {
    throw std::invalid_argument("num_samples must be positive");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_point = [&]() {
    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) {
      z[k] = box.center[k] + box.half_width[k] * unit(rng);
    }
    return z;
  };

  std::vector<Eigen::VectorXd> samples;
  for (int s = 0; s < options.num_samples; ++s) samples.push_back(random_point());
  StructureReport report = CheckHamiltonianStructure(field, samples);

  std::vector<Eigen::VectorXd> starts = options.monodromy_points;
  if (starts.empty()) {
    for (int s = 0; s < 3; ++s) starts.push_back(random_point());
  }
  for (const auto& z0 : starts) {
    MonodromyDefects md;
    try {
      md = MonodromyDefect(
          Monodromy(field, z0, options.monodromy_time, options.tol));
    } catch (const SolverError&) {
      md.symplectic = md.det = std::numeric_limits<double>::infinity();
    }
    report.monodromy_symplectic_defect =
        std::max(report.monodromy_symplectic_defect, md.symplectic);
    report.monodromy_det_defect = std::max(report.monodromy_det_defect, md.det);
  }

  if (options.num_adjoint_pairs > 0) {
    const PolyExpr w = BoundaryWeight(box);
    auto random_affine = [&]() {
      PolyExpr p(d);
      p.AddTerm(Exponent(d, 0), unit(rng));
      for (int k = 0; k < d; ++k) {
        Exponent e(d, 0);
        e[k] = 1;
        p.AddTerm(e, unit(rng));
      }
      return w * p;
    };
    std::vector<std::pair<PolyExpr, PolyExpr>> pairs;
    for (int s = 0; s < options.num_adjoint_pairs; ++s) {
      PolyExpr p = random_affine();
      PolyExpr q = random_affine();
      pairs.emplace_back(std::move(p), std::move(q));
    }
    // One rule covers every pair since they share per-variable degrees.
    std::vector<int> deg(d, 0);
    for (const auto& [p, q] : pairs) {
      const std::vector<int> dp = p.degrees();
      const std::vector<int> dLq = ApplyLift(field, q).degrees();
      const std::vector<int> dLp = ApplyLift(field, p).degrees();
      const std::vector<int> dq = q.degrees();
      for (int v = 0; v < d; ++v) {
        deg[v] = std::max({deg[v], dp[v] + dLq[v], dLp[v] + dq[v]});
      }
    }
    const QuadratureRule quad = RuleForDegrees(box, deg);
    for (const auto& [p, q] : pairs) {
      report.adjoint_defect = std::max(report.adjoint_defect,
                                       AdjointDefect(field, p, q, quad).defect);
    }
  }
  return report;
}

}  // namespace pkopt
