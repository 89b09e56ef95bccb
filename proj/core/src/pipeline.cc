#include "pkopt/pipeline.h"

#include <cmath>

#include <Eigen/QR>

#include "pkopt/error.h"

namespace pkopt {

namespace {

UStar ClosedFormUStar(const OcpModel& model) {
  UStar u = MinimizeHamiltonianControl(model);
  if (!u.is_closed_form()) {
    throw ConfigError("problem '" + model.name() +
                      "' needs f affine and l quadratic in u so that the "
                      "Pontryagin field is polynomial");
  }
  return u;
}

std::vector<Eigen::VectorXd> Corners(const BoxDomain& box) {
  const int d = box.dim();
  std::vector<Eigen::VectorXd> out;
  for (int mask = 0; mask < (1 << d); ++mask) {
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) {
      const double s = (mask >> (d - 1 - k)) & 1 ? 1.0 : -1.0;
      p[k] = box.center[k] + s * box.half_width[k];
    }
    out.push_back(p);
  }
  return out;
}

std::string PointString(const Eigen::VectorXd& x) {
  std::string s = "(";
  for (int i = 0; i < x.size(); ++i) {
    s += (i ? ", " : "") + std::to_string(x[i]);
  }
  return s + ")";
}

}  // namespace

PolyExpr FitPolynomial(const std::vector<Eigen::VectorXd>& points,
                       const std::vector<double>& values, int degree) {
  if (points.empty() || points.size() != values.size()) {
    throw std::invalid_argument("fit needs one value per point");
  }
  const int d = static_cast<int>(points.front().size());
  std::vector<Exponent> monomials;
  for (int count = 1;; ++count) {
    const std::vector<Exponent> set = GradedIndexSet(d, count);
    int deg = 0;
    for (int e : set.back()) deg += e;
    if (deg > degree) break;
    monomials = set;
  }
  const int n = static_cast<int>(points.size());
  const int m = static_cast<int>(monomials.size());
  Eigen::MatrixXd A(n, m);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      A(i, j) = PolyExpr::Monomial(monomials[j], 1.0).Evaluate(points[i]);
    }
    b[i] = values[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  PolyExpr p(d);
  for (int j = 0; j < m; ++j) p.AddTerm(monomials[j], c[j]);
  return p;
}

Pipeline::Pipeline(PipelineConfig config)
    : config_(std::move(config)),
      ustar_(ClosedFormUStar(config_.problem.model)),
      field_(MakePontryaginField(config_.problem.model, ustar_)) {
  if (config_.problem.box.dim() != field_.dim()) {
    throw ConfigError("box must have 2 n_x = " + std::to_string(field_.dim()) +
                      " dimensions");
  }
  for (const Exponent& e : config_.BasisIndices()) {
    if (static_cast<int>(e.size()) != field_.dim()) {
      throw ConfigError("basis index has wrong length");
    }
  }
}

CheckOutcome Pipeline::Check() const {
  const CheckConfig& c = config_.check;
  std::optional<PontryaginField> corrupted;
  if (c.flip_sign_component) {
    std::vector<PolyExpr> F = field_.components();
    F[*c.flip_sign_component] = -F[*c.flip_sign_component];
    corrupted = PontryaginField::FromComponents(field_.n_x(), F, false);
  }
  const PontryaginField& field = corrupted ? *corrupted : field_;

  StructureSuiteOptions opts;
  opts.num_samples = c.samples;
  opts.seed = config_.seed;
  opts.monodromy_points = c.monodromy_points;
  opts.monodromy_time = c.monodromy_time;
  opts.num_adjoint_pairs = c.adjoint_pairs;

  CheckOutcome out;
  out.report = RunStructureSuite(field, config_.problem.box, opts);
  out.divergence_vanishes = field.Divergence().is_zero();

  const ToleranceConfig& t = config_.tol;
  const StructureReport& r = out.report;
  auto fail = [&out](bool ok, const char* name) {
    if (!ok) out.failures.emplace_back(name);
  };
  fail(r.symmetry_defect <= t.structure, "symmetry_defect");
  fail(r.divergence <= t.structure && out.divergence_vanishes, "divergence");
  fail(r.monodromy_symplectic_defect <= t.monodromy,
       "monodromy_symplectic_defect");
  fail(r.monodromy_det_defect <= t.monodromy, "monodromy_det_defect");
  fail(r.adjoint_defect <= t.structure, "adjoint_defect");
  return out;
}

const SpectrumOutcome& Pipeline::Spectrum() {
  if (spectrum_) return *spectrum_;
  SpectrumOutcome s;
  s.basis = LegendreBasis(config_.problem.box, config_.BasisIndices());
  s.quad = config_.nodes_per_dim
               ? GaussLegendreRule(config_.problem.box, *config_.nodes_per_dim)
               : DefaultGalerkinRule(field_, s.basis);
  try {
    s.galerkin = AssembleGalerkin(field_, s.basis, s.quad, config_.threads);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  s.eigs = Eigendecompose(s.galerkin.M, config_.tol.eigen * s.galerkin.M.norm());
  FlagTruncationDominated(&s.eigs, s.basis);
  s.pairing = MirrorPairs(s.eigs, config_.tol.pairing.value_or(-1.0));
  spectrum_ = std::move(s);
  return *spectrum_;
}

const SynthesisOutcome& Pipeline::Synthesize() {
  if (synthesis_) return *synthesis_;
  const SpectrumOutcome& spec = Spectrum();
  const int n_x = model().n_x();
  const int n_u = model().n_u();

  SynthesisOutcome s;
  s.steady = Linearize(model(), config_.problem.steady_state);
  s.are = SolveAre(s.steady.lin);
  StableManifoldSystem system =
      SelectUnstable(spec.eigs, spec.pairing, spec.basis, n_x,
                     config_.tol.tau.value_or(-1.0));
  NewtonOptions newton;
  newton.tol = config_.tol.newton;
  s.law.emplace(std::move(system), ustar_, newton, s.are.P, s.steady.x_p,
                s.steady.lambda_p);
  const FeedbackLaw& law = *s.law;

  s.steady_state_residual =
      law.Residual(s.steady.x_p, s.steady.lambda_p).cwiseAbs().maxCoeff();
  if (s.steady_state_residual > 1e-8) {
    s.warnings.push_back("steady state violates the manifold equations by " +
                         std::to_string(s.steady_state_residual));
  }

  s.grid_points = GridPoints(config_.grid.box, config_.grid.points_per_dim);
  s.grid = SolveOnGrid(law, s.grid_points);
  std::vector<Eigen::VectorXd> solved_x;
  std::vector<std::vector<double>> solved_u(n_u);
  for (const GridSolution& g : s.grid) {
    if (!g.costate.converged) {
      s.warnings.push_back("costate solve failed at x = " + PointString(g.x) +
                           ": " + g.costate.message);
      continue;
    }
    solved_x.push_back(g.x);
    for (int c = 0; c < n_u; ++c) solved_u[c].push_back(g.u[c]);
    s.unselected_residual = std::max(
        s.unselected_residual, law.UnselectedResidual(g.x, g.costate.lambda));
  }
  if (!solved_x.empty()) {
    for (int c = 0; c < n_u; ++c) {
      s.fit.push_back(
          FitPolynomial(solved_x, solved_u[c], config_.grid.fit_degree));
    }
  }

  std::vector<Eigen::VectorXd> probes = config_.simulate.initial_states;
  if (probes.empty()) probes = Corners(config_.grid.box);
  for (const Eigen::VectorXd& x0 : probes) {
    const std::vector<Eigen::VectorXd> roots =
        FindCandidateRoots(law, x0, config_.seed);
    if (roots.size() < 2) continue;
    s.warnings.push_back(std::to_string(roots.size()) +
                         " distinct costate roots at x = " + PointString(x0));
    for (const Eigen::VectorXd& root : roots) {
      s.candidates.push_back(
          {x0, root,
           InfiniteHorizonCost(model(), law, x0, config_.simulate.cost_horizon,
                               1e-8, config_.simulate.integrator, &root)});
    }
  }
  synthesis_ = std::move(s);
  return *synthesis_;
}

std::vector<RolloutOutcome> Pipeline::Simulate() {
  const SynthesisOutcome& syn = Synthesize();
  const SimulateConfig& sc = config_.simulate;
  std::vector<Eigen::VectorXd> starts = sc.initial_states;
  if (starts.empty()) starts = Corners(config_.grid.box);
  std::vector<RolloutOutcome> out;
  for (const Eigen::VectorXd& x0 : starts) {
    RolloutOutcome r;
    r.x0 = x0;
    r.rollout = ClosedLoopRollout(model(), *syn.law, x0, sc.t_end, sc.integrator);
    r.cost = InfiniteHorizonCost(model(), *syn.law, x0, sc.cost_horizon, 1e-8,
                                 sc.integrator);
    out.push_back(std::move(r));
  }
  return out;
}

ComparisonOutcome Pipeline::Compare() {
  ComparisonOutcome out;
  if (!config_.reference) {
    out.notice = "no reference law configured; comparison skipped";
    return out;
  }
  const SynthesisOutcome& syn = Synthesize();
  out.skipped = false;
  out.comparison = CompareReference(
      *syn.law, *config_.reference,
      GaussLegendreRule(config_.grid.box, config_.compare_nodes_per_dim));
  return out;
}

}  // namespace pkopt
