#include "pkopt/synthesis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "pkopt/error.h"
#include "pkopt/structure.h"

namespace pkopt {

namespace {

struct Candidate {
  int index;
  int partner;
  bool paired;
  double coupling;
  int equations;
};

}  // namespace

double DefaultUnstableThreshold(const std::vector<EigenPair>& eigs) {
  double m = 0.0;
  for (const EigenPair& p : eigs) m = std::max(m, std::abs(p.kappa));
  return 1e-6 * m;
}

StableManifoldSystem SelectUnstable(const std::vector<EigenPair>& eigs,
                                    const MirrorPairing& pairing,
                                    const BasisSet& basis, int n_x,
                                    double tau) {
  if (n_x < 1) throw std::invalid_argument("n_x must be positive");
  if (basis.box.dim() != 2 * n_x) {
    throw std::invalid_argument("basis is not over (x, lambda)");
  }
  StableManifoldSystem sys;
  sys.n_x = n_x;
  sys.tau = tau < 0.0 ? DefaultUnstableThreshold(eigs) : tau;

  std::vector<int> exps(basis.box.dim(), 0);
  for (const PolyExpr& f : basis.functions) {
    const std::vector<int> d = f.degrees();
    for (std::size_t k = 0; k < exps.size(); ++k) {
      exps[k] = std::max(exps[k], 2 * d[k]);
    }
  }
  const QuadratureRule quad = RuleForDegrees(basis.box, exps);

  const int n = static_cast<int>(eigs.size());
  std::vector<Candidate> candidates;
  for (int i = 0; i < n; ++i) {
    const EigenPair& e = eigs[i];
    if (e.truncation_dominated) continue;
    if (!(e.kappa.real() > sys.tau)) continue;
    if (e.kappa.imag() < 0.0) continue;  // represented by its conjugate
    int partner = pairing.PartnerOf(i);
    const bool paired = partner >= 0;
    if (!paired) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j == i || eigs[j].truncation_dominated) continue;
        const double d = std::abs(eigs[j].kappa + e.kappa);
        if (d < best) {
          best = d;
          partner = j;
        }
      }
    }
    double coupling = 0.0;
    if (partner >= 0) {
      coupling = std::abs(SymplecticCoupling(MakeEigenfunction(e, basis),
                                             MakeEigenfunction(eigs[partner], basis),
                                             quad));
    }
    candidates.push_back(
        {i, partner, paired, coupling, e.kappa.imag() > 0.0 ? 2 : 1});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.paired != b.paired) return a.paired;
                     return a.coupling > b.coupling;
                   });

  int have = 0;
  for (const Candidate& c : candidates) {
    const Eigenfunction ef = MakeEigenfunction(eigs[c.index], basis);
    const bool take = have + c.equations <= n_x;
    std::vector<PolyExpr>& dest = take ? sys.equations : sys.unselected_equations;
    dest.push_back(RealPart(ef.psi));
    if (c.equations == 2) dest.push_back(ImagPart(ef.psi));
    if (take) {
      have += c.equations;
      sys.selected.push_back(
          {c.index, eigs[c.index].kappa, c.coupling, c.paired});
    }
  }
  if (have < n_x) {
    if (candidates.empty()) {
      throw SolverError("no unstable eigenvalues above tau = " +
                        std::to_string(sys.tau));
    }
    throw SolverError("only " + std::to_string(have) + " of " +
                      std::to_string(n_x) +
                      " manifold equations available from unstable "
                      "eigenvalues above tau = " +
                      std::to_string(sys.tau));
  }

  for (const PolyExpr& eq : sys.equations) {
    std::vector<PolyExpr> row;
    for (int c = 0; c < n_x; ++c) row.push_back(eq.Differentiate(n_x + c));
    sys.jacobian_lambda.push_back(std::move(row));
  }
  return sys;
}

FeedbackLaw::FeedbackLaw(StableManifoldSystem system, UStar ustar,
                         NewtonOptions newton, Eigen::MatrixXd warm_start,
                         Eigen::VectorXd x_p, Eigen::VectorXd lambda_p)
    : system_(std::move(system)),
      ustar_(std::move(ustar)),
      newton_(newton),
      warm_start_(std::move(warm_start)),
      x_p_(std::move(x_p)),
      lambda_p_(std::move(lambda_p)) {
  const int n = system_.n_x;
  if (static_cast<int>(system_.equations.size()) != n ||
      warm_start_.rows() != n || warm_start_.cols() != n || x_p_.size() != n ||
      lambda_p_.size() != n) {
    throw std::invalid_argument("feedback law dimensions are inconsistent");
  }
}

Eigen::VectorXd FeedbackLaw::InitialGuess(const Eigen::VectorXd& x) const {
  return lambda_p_ + warm_start_ * (x - x_p_);
}

Eigen::VectorXd FeedbackLaw::Point(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lambda) const {
  Eigen::VectorXd y(2 * n_x());
  y << x, lambda;
  return y;
}

Eigen::VectorXd FeedbackLaw::Residual(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd y = Point(x, lambda);
  Eigen::VectorXd r(n_x());
  for (int i = 0; i < n_x(); ++i) r[i] = system_.equations[i].Evaluate(y);
  return r;
}

double FeedbackLaw::UnselectedResidual(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd y = Point(x, lambda);
  double m = 0.0;
  for (const PolyExpr& e : system_.unselected_equations) {
    m = std::max(m, std::abs(e.Evaluate(y)));
  }
  return m;
}

Eigen::MatrixXd FeedbackLaw::Jacobian(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& lambda) const {
  const Eigen::VectorXd y = Point(x, lambda);
  Eigen::MatrixXd J(n_x(), n_x());
  for (int i = 0; i < n_x(); ++i) {
    for (int j = 0; j < n_x(); ++j) {
      J(i, j) = system_.jacobian_lambda[i][j].Evaluate(y);
    }
  }
  return J;
}

CostateSolution FeedbackLaw::TrySolveCostate(
    const Eigen::VectorXd& x, const Eigen::VectorXd* guess) const {
  if (x.size() != n_x()) throw std::invalid_argument("x has wrong dimension");
  CostateSolution sol;
  sol.lambda = guess ? *guess : InitialGuess(x);
  if (sol.lambda.size() != n_x() || !sol.lambda.allFinite()) {
    throw std::invalid_argument("invalid costate guess");
  }
  Eigen::VectorXd r = Residual(x, sol.lambda);
  double norm = r.cwiseAbs().maxCoeff();
  for (;;) {
    const Eigen::MatrixXd J = Jacobian(x, sol.lambda);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const Eigen::VectorXd s = svd.singularValues();
    const double smax = s[0];
    const double smin = s[s.size() - 1];
    sol.condition = smin > 0.0 ? smax / smin
                               : std::numeric_limits<double>::infinity();
    if (!std::isfinite(norm)) {
      sol.residual = norm;
      sol.message = "non-finite residual";
      return sol;
    }
    if (norm <= newton_.tol) {
      sol.residual = norm;
      sol.converged = true;
      return sol;
    }
    if (sol.iterations >= newton_.max_iter) {
      sol.residual = norm;
      sol.message = "Newton did not converge in " +
                    std::to_string(newton_.max_iter) + " iterations";
      return sol;
    }
    if (!(smin > 1e-14 * std::max(smax, 1e-300))) {
      sol.residual = norm;
      sol.message = "singular lambda-Jacobian";
      return sol;
    }
    const Eigen::VectorXd step = J.partialPivLu().solve(-r);
    double alpha = 1.0;
    Eigen::VectorXd trial = sol.lambda + step;
    Eigen::VectorXd r_trial = Residual(x, trial);
    double n_trial = r_trial.cwiseAbs().maxCoeff();
    for (int h = 0; h < newton_.max_halvings && !(n_trial < norm); ++h) {
      alpha *= 0.5;
      trial = sol.lambda + alpha * step;
      r_trial = Residual(x, trial);
      n_trial = r_trial.cwiseAbs().maxCoeff();
    }
    ++sol.iterations;
    if (!(n_trial < norm)) {
      sol.residual = norm;
      sol.message = "Newton line search stalled";
      return sol;
    }
    sol.lambda = trial;
    r = r_trial;
    norm = n_trial;
  }
}

CostateSolution FeedbackLaw::SolveCostate(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd* guess) const {
  CostateSolution sol = TrySolveCostate(x, guess);
  if (!sol.converged) {
    std::string where;
    for (int i = 0; i < x.size(); ++i) {
      where += (i ? ", " : "") + std::to_string(x[i]);
    }
    throw SolverError("costate solve failed at x = (" + where + "): " +
                      sol.message);
  }
  return sol;
}

Eigen::VectorXd FeedbackLaw::Feedback(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd* guess) const {
  return ustar_.Evaluate(x, SolveCostate(x, guess).lambda);
}

std::vector<Eigen::VectorXd> FindCandidateRoots(const FeedbackLaw& law,
                                                const Eigen::VectorXd& x,
                                                std::uint64_t seed,
                                                int restarts, double spread) {
  std::vector<Eigen::VectorXd> roots;
  auto add = [&roots](const CostateSolution& s) {
    if (!s.converged) return;
    for (const auto& r : roots) {
      if ((r - s.lambda).norm() <= 1e-6 * std::max(1.0, r.norm())) return;
    }
    roots.push_back(s.lambda);
  };
  const Eigen::VectorXd base = law.InitialGuess(x);
  add(law.TrySolveCostate(x, &base));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd g = base;
    for (int k = 0; k < g.size(); ++k) {
      g[k] += spread * std::max(1.0, std::abs(base[k])) * unit(rng);
    }
    add(law.TrySolveCostate(x, &g));
  }
  return roots;
}

std::vector<Eigen::VectorXd> GridPoints(const BoxDomain& box, int per_dim) {
  if (per_dim < 1) throw std::invalid_argument("grid needs at least one point");
  const int d = box.dim();
  std::vector<Eigen::VectorXd> pts;
  std::vector<int> idx(d, 0);
  for (;;) {
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) {
      const double s = per_dim == 1 ? 0.0 : -1.0 + 2.0 * idx[k] / (per_dim - 1);
      p[k] = box.center[k] + s * box.half_width[k];
    }
    pts.push_back(p);
    int k = d - 1;
    while (k >= 0 && ++idx[k] == per_dim) idx[k--] = 0;
    if (k < 0) break;
  }
  return pts;
}

std::vector<GridSolution> SolveOnGrid(
    const FeedbackLaw& law, const std::vector<Eigen::VectorXd>& points) {
  const int n = static_cast<int>(points.size());
  std::vector<int> order(n);
  std::vector<double> dist(n);
  for (int i = 0; i < n; ++i) {
    order[i] = i;
    dist[i] = (points[i] - law.x_p()).norm();
  }
  std::stable_sort(order.begin(), order.end(),
                   [&dist](int a, int b) { return dist[a] < dist[b]; });

  std::vector<GridSolution> out(n);
  std::vector<int> solved;
  for (int i : order) {
    GridSolution& g = out[i];
    g.x = points[i];
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j : solved) {
      const double d = (points[j] - g.x).norm();
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    Eigen::VectorXd guess =
        nearest < 0 ? law.InitialGuess(g.x)
                    : Eigen::VectorXd(out[nearest].costate.lambda +
                                      law.warm_start() * (g.x - points[nearest]));
    g.costate = law.TrySolveCostate(g.x, &guess);
    if (!g.costate.converged && nearest >= 0) {
      // Fall back to the Riccati guess before giving up.
      guess = law.InitialGuess(g.x);
      CostateSolution retry = law.TrySolveCostate(g.x, &guess);
      if (retry.converged) g.costate = retry;
    }
    if (g.costate.converged) {
      g.u = law.ustar().Evaluate(g.x, g.costate.lambda);
      solved.push_back(i);
    }
  }
  return out;
}

ReferenceComparison CompareReference(const FeedbackLaw& law,
                                     const std::vector<PolyExpr>& reference,
                                     const QuadratureRule& quad) {
  const int n_u = law.ustar().layout().n_u;
  if (static_cast<int>(reference.size()) != n_u) {
    throw std::invalid_argument("reference needs one polynomial per control");
  }
  for (const PolyExpr& r : reference) {
    if (r.num_vars() != law.n_x()) {
      throw std::invalid_argument("reference law must be a polynomial in x");
    }
  }
  if (quad.box.dim() != law.n_x()) {
    throw std::invalid_argument("comparison rule must be over the state box");
  }
  std::vector<Eigen::VectorXd> nodes;
  for (int k = 0; k < quad.num_nodes(); ++k) nodes.push_back(quad.nodes.col(k));
  const std::vector<GridSolution> sol = SolveOnGrid(law, nodes);

  ReferenceComparison cmp;
  for (int k = 0; k < quad.num_nodes(); ++k) {
    if (!sol[k].costate.converged) {
      cmp.failed_nodes.push_back(k);
      continue;
    }
    double sq = 0.0;
    for (int c = 0; c < n_u; ++c) {
      const double e = sol[k].u[c] - reference[c].Evaluate(nodes[k]);
      sq += e * e;
      cmp.max_error = std::max(cmp.max_error, std::abs(e));
    }
    cmp.l2sq_error += quad.weights[k] * sq;
  }
  if (!cmp.valid()) cmp.l2sq_error = std::numeric_limits<double>::quiet_NaN();
  return cmp;
}

}  // namespace pkopt
