#include "pkopt/synthesis.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "law_fixture.h"
#include "pkopt/error.h"
#include "pkopt/pipeline.h"
#include "test_util.h"

namespace pkopt {
namespace {

const BoxDomain kStateBox = BoxDomain::Cube(2, 0.5);

TEST(SelectTest, ReproductionBasisUsesOneComplexPair) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4());
  const StableManifoldSystem& sys = fx.law.system();
  EXPECT_EQ(sys.equations.size(), 2u);
  // Re and Im of a single complex eigenfunction give both equations.
  ASSERT_EQ(sys.selected.size(), 1u);
  EXPECT_GT(sys.selected[0].kappa.real(), 0.0);
  EXPECT_GT(std::abs(sys.selected[0].kappa.imag()), 0.0);
  EXPECT_TRUE(sys.selected[0].paired);
  EXPECT_GT(sys.tau, 0.0);
}

TEST(SelectTest, ThresholdAboveSpectrumFails) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4());
  try {
    SelectUnstable(fx.eigs, fx.pairing, fx.basis, 2, 100.0);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("no unstable eigenvalues"), std::string::npos);
  }
}

TEST(SelectTest, TooFewUnstableModes) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4());
  std::vector<EigenPair> eigs = fx.eigs;
  // Keep only one real unstable mode.
  for (auto& e : eigs) {
    if (e.kappa.real() > 0.0) e.kappa = {e.kappa.real(), 0.0};
  }
  eigs.erase(eigs.begin() + 1);
  EXPECT_THROW(SelectUnstable(eigs, MirrorPairs(eigs), fx.basis, 2), SolverError);
}

TEST(CostateTest, SteadyStateIsOnManifold) {
  for (const auto& fx :
       {testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4()),
        testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15))}) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    EXPECT_LE(fx.law.Residual(zero, zero).cwiseAbs().maxCoeff(), 1e-8);
    const CostateSolution sol = fx.law.SolveCostate(zero);
    EXPECT_LE(sol.lambda.norm(), 1e-10);
    EXPECT_LE(std::abs(fx.law.Feedback(zero)[0]), 1e-10);
  }
}

TEST(CostateTest, LqrCostateIsRiccatiGradient) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  const Eigen::Matrix2d P = testing::LqrP();
  for (const Eigen::VectorXd& x : GridPoints(kStateBox, 7)) {
    const CostateSolution sol = fx.law.SolveCostate(x);
    EXPECT_LE((sol.lambda - P * x).cwiseAbs().maxCoeff(), 1e-6);
    const double u = fx.law.Feedback(x)[0];
    EXPECT_NEAR(u, -x[0] - std::sqrt(3.0) * x[1], 1e-6);
  }
}

TEST(CostateTest, NewtonReportsConvergence) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  Eigen::VectorXd x(2);
  x << 0.3, -0.2;
  const CostateSolution sol = fx.law.SolveCostate(x);
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.residual, 1e-10);
  EXPECT_LE(fx.law.Residual(x, sol.lambda).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GE(sol.condition, 1.0);
  EXPECT_TRUE(std::isfinite(sol.condition));
}

TEST(CostateTest, ScaleInvariance) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  std::vector<EigenPair> scaled = fx.eigs;
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (auto& e : scaled) {
    const std::complex<double> c = std::polar(u(rng), u(rng));
    e.a *= c;
  }
  // Conjugate modes must stay conjugate for the real and imaginary parts to
  // span the same space.
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    for (std::size_t j = i + 1; j < scaled.size(); ++j) {
      if (fx.eigs[i].kappa.imag() != 0.0 &&
          fx.eigs[j].kappa == std::conj(fx.eigs[i].kappa)) {
        scaled[j].a = scaled[i].a.conjugate();
      }
    }
  }
  StableManifoldSystem sys = SelectUnstable(scaled, fx.pairing, fx.basis, 2);
  const FeedbackLaw other(std::move(sys), fx.ustar, NewtonOptions{}, fx.are.P,
                          fx.steady.x_p, fx.steady.lambda_p);
  for (const Eigen::VectorXd& x : GridPoints(kStateBox, 5)) {
    EXPECT_LE((fx.law.SolveCostate(x).lambda - other.SolveCostate(x).lambda)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-8);
  }
}

TEST(CostateTest, SingularJacobianIsReported) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4());
  StableManifoldSystem sys;
  sys.n_x = 2;
  sys.equations = {PolyExpr::Variable(4, 0), PolyExpr::Variable(4, 1)};
  sys.jacobian_lambda = {{PolyExpr(4), PolyExpr(4)}, {PolyExpr(4), PolyExpr(4)}};
  const FeedbackLaw law(std::move(sys), fx.ustar, NewtonOptions{}, fx.are.P,
                        fx.steady.x_p, fx.steady.lambda_p);
  Eigen::VectorXd x(2);
  x << 0.2, 0.1;
  const CostateSolution sol = law.TrySolveCostate(x);
  EXPECT_FALSE(sol.converged);
  EXPECT_NE(sol.message.find("singular"), std::string::npos);
  EXPECT_THROW(law.SolveCostate(x), SolverError);
}

TEST(CostateTest, CandidateRootsSolveTheSystem) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  Eigen::VectorXd x(2);
  x << 0.5, 0.5;
  const auto roots = FindCandidateRoots(fx.law, x, 3);
  ASSERT_FALSE(roots.empty());
  EXPECT_LE((roots[0] - fx.law.SolveCostate(x).lambda).norm(), 1e-9);
  for (const auto& r : roots) {
    EXPECT_LE(fx.law.Residual(x, r).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_EQ(roots.size(), FindCandidateRoots(fx.law, x, 3).size());
}

TEST(GridTest, PointsAndOrder) {
  const auto pts = GridPoints(kStateBox, 3);
  ASSERT_EQ(pts.size(), 9u);
  EXPECT_EQ(pts[0], Eigen::Vector2d(-0.5, -0.5));
  EXPECT_EQ(pts[1], Eigen::Vector2d(-0.5, 0.0));
  EXPECT_EQ(pts[8], Eigen::Vector2d(0.5, 0.5));
  EXPECT_THROW(GridPoints(kStateBox, 0), std::invalid_argument);
}

TEST(GridTest, SolveIsDeterministic) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  const auto pts = GridPoints(kStateBox, 11);
  const auto a = SolveOnGrid(fx.law, pts);
  const auto b = SolveOnGrid(fx.law, pts);
  ASSERT_EQ(a.size(), pts.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].costate.converged);
    EXPECT_EQ(a[i].x, pts[i]);
    EXPECT_EQ(a[i].costate.lambda, b[i].costate.lambda);
    EXPECT_EQ(a[i].u, b[i].u);
  }
}

TEST(GridTest, ReproductionFeedbackCoefficients) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4());
  const auto pts = GridPoints(kStateBox, 21);
  std::vector<double> u;
  for (const auto& g : SolveOnGrid(fx.law, pts)) {
    ASSERT_TRUE(g.costate.converged);
    u.push_back(g.u[0]);
  }
  const PolyExpr fit = FitPolynomial(pts, u, 2);
  const double c20 = 12.0 - std::sqrt(143.0);
  const double c11 = (11.0 - testing::BetaM()) / 2.0;
  EXPECT_NEAR(fit.coefficient({2, 0}), c20, 1e-6);
  EXPECT_NEAR(fit.coefficient({1, 1}), c11, 1e-6);
  EXPECT_NEAR(fit.coefficient({0, 2}), 0.0, 1e-6);
  EXPECT_NEAR(fit.coefficient({1, 0}), 0.0, 1e-6);
  EXPECT_NEAR(fit.coefficient({0, 0}), 0.0, 1e-6);
}

TEST(CompareTest, LqrMatchesOptimalGain) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  PolyExpr ref = PolyExpr::Monomial({1, 0}, -1.0);
  ref.AddTerm({0, 1}, -std::sqrt(3.0));
  const ReferenceComparison c =
      CompareReference(fx.law, {ref}, GaussLegendreRule(kStateBox, 10));
  EXPECT_TRUE(c.valid());
  EXPECT_LE(c.l2sq_error, 1e-12);
}

TEST(CompareTest, ReproductionErrorAgainstExactLaw) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), testing::LinearIndices4());
  const PolyExpr ref = PolyExpr::Monomial({1, 1}, -1.0);
  const QuadratureRule rule = GaussLegendreRule(kStateBox, 10);
  const ReferenceComparison c = CompareReference(fx.law, {ref}, rule);
  ASSERT_TRUE(c.valid());
  // The fitted law is exactly quadratic, so the error has a closed form.
  const double c20 = 12.0 - std::sqrt(143.0);
  const double c11 = (11.0 - testing::BetaM()) / 2.0 + 1.0;
  // On [-1/2,1/2]^2: int x^4 = 1/80, int x^2 y^2 = 1/144, cross term odd.
  const double expected = c20 * c20 / 80.0 + c11 * c11 / 144.0;
  EXPECT_NEAR(c.l2sq_error, expected, 1e-10);
  EXPECT_NEAR(c.l2sq_error, 6.35e-5, 0.05e-5);
}

TEST(CompareTest, RejectsWrongShapes) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  EXPECT_THROW(CompareReference(fx.law, {}, GaussLegendreRule(kStateBox, 3)),
               std::invalid_argument);
  EXPECT_THROW(CompareReference(fx.law, {PolyExpr(4)}, GaussLegendreRule(kStateBox, 3)),
               std::invalid_argument);
}

}  // namespace
}  // namespace pkopt
