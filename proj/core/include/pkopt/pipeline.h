#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/basis.h"
#include "pkopt/config.h"
#include "pkopt/model.h"
#include "pkopt/simulation.h"
#include "pkopt/spectral.h"
#include "pkopt/structure.h"
#include "pkopt/synthesis.h"

namespace pkopt {

struct CheckOutcome {
  StructureReport report;
  /// The symbolic divergence is the zero polynomial.
  bool divergence_vanishes = false;
  /// Names of the report entries above their thresholds.
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

struct SpectrumOutcome {
  BasisSet basis;
  QuadratureRule quad;
  GalerkinMatrix galerkin;
  std::vector<EigenPair> eigs;
  MirrorPairing pairing;
};

/// Alternative root of the manifold equations at a probe point and the
/// closed-loop cost obtained by continuing it.
struct CandidateLaw {
  Eigen::VectorXd x0;
  Eigen::VectorXd lambda;
  CostReport cost;
};

struct SynthesisOutcome {
  SteadyState steady;
  AreSolution are;
  std::optional<FeedbackLaw> law;
  std::vector<Eigen::VectorXd> grid_points;
  std::vector<GridSolution> grid;
  /// Least-squares fit of each control over the grid, as polynomials in x.
  std::vector<PolyExpr> fit;
  /// Residual of the Newton solve at the steady state.
  double steady_state_residual = 0.0;
  /// Largest unselected-equation magnitude over the solved grid.
  double unselected_residual = 0.0;
  std::vector<CandidateLaw> candidates;
  std::vector<std::string> warnings;
};

struct RolloutOutcome {
  Eigen::VectorXd x0;
  ClosedLoopResult rollout;
  CostReport cost;
};

struct ComparisonOutcome {
  bool skipped = true;
  std::string notice;
  ReferenceComparison comparison;
};

/// Least-squares fit with all monomials of total degree <= degree.
PolyExpr FitPolynomial(const std::vector<Eigen::VectorXd>& points,
                       const std::vector<double>& values, int degree);

/// Config-driven orchestration of the stages. Spectrum and synthesis results
/// are computed on first use and cached.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const OcpModel& model() const { return config_.problem.model; }
  const UStar& ustar() const { return ustar_; }
  const PontryaginField& field() const { return field_; }

  CheckOutcome Check() const;
  const SpectrumOutcome& Spectrum();
  const SynthesisOutcome& Synthesize();
  std::vector<RolloutOutcome> Simulate();
  ComparisonOutcome Compare();

 private:
  PipelineConfig config_;
  UStar ustar_;
  PontryaginField field_;
  std::optional<SpectrumOutcome> spectrum_;
  std::optional<SynthesisOutcome> synthesis_;
};

}  // namespace pkopt
