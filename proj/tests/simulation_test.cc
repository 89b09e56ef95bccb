#include "pkopt/simulation.h"

#include <cmath>

#include <gtest/gtest.h>

#include "law_fixture.h"
#include "pkopt/error.h"
#include "pkopt/structure.h"
#include "test_util.h"

namespace pkopt {
namespace {

TEST(AreTest, DoubleIntegrator) {
  const SteadyState ss =
      Linearize(DoubleIntegratorLqrProblem().model, DoubleIntegratorLqrProblem().steady_state);
  const AreSolution are = SolveAre(ss.lin);
  EXPECT_LE((are.P - testing::LqrP()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(are.residual, 1e-9);
  EXPECT_LE((are.P - are.P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(AreResidual(ss.lin, testing::LqrP()), 1e-12);
}

TEST(AreTest, StableDiagonalSystem) {
  Linearization lin;
  lin.A = -Eigen::MatrixXd::Identity(2, 2);
  lin.B = Eigen::MatrixXd::Zero(2, 1);
  lin.Q = Eigen::MatrixXd::Identity(2, 2);
  lin.R = Eigen::MatrixXd::Identity(1, 1);
  lin.S = Eigen::MatrixXd::Zero(2, 1);
  const AreSolution are = SolveAre(lin);
  EXPECT_LE((are.P - 0.5 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(AreTest, VanDerPolLinearization) {
  const ProblemDefinition p = VanDerPolProblem();
  const SteadyState ss = Linearize(p.model, p.steady_state);
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, -1, -0.5;
  EXPECT_LE((ss.lin.A - A).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(ss.lin.B.cwiseAbs().maxCoeff(), 0.0);
  const AreSolution are = SolveAre(ss.lin);
  EXPECT_LE((are.P - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(are.residual, 1e-9);
}

TEST(AreTest, RejectsNonSteadyPoint) {
  ProblemDefinition p = VanDerPolProblem();
  p.steady_state.x[0] = 0.3;
  EXPECT_THROW(Linearize(p.model, p.steady_state), CheckError);
}

TEST(RolloutTest, OriginStaysAtRest) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  const ClosedLoopResult r =
      ClosedLoopRollout(fx.problem.model, fx.law, Eigen::VectorXd::Zero(2), 5.0);
  EXPECT_FALSE(r.truncated);
  EXPECT_LE(r.trajectory.final_state().norm(), 1e-12);
  EXPECT_LE(r.cost.back(), 1e-20);
}

TEST(RolloutTest, LqrMatchesClosedLoopExponential) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  Eigen::MatrixXd Acl(2, 2);
  Acl << 0, 1, -1, -std::sqrt(3.0);
  Eigen::VectorXd x0(2);
  x0 << 0.4, 0.3;
  IntegratorOptions opts;
  opts.output_times = {1.0, 2.5, 5.0};
  const ClosedLoopResult r = ClosedLoopRollout(fx.problem.model, fx.law, x0, 5.0, opts);
  ASSERT_FALSE(r.truncated) << r.message;
  for (std::size_t i = 0; i < r.trajectory.times.size(); ++i) {
    const Eigen::VectorXd expected = testing::Expm(Acl * r.trajectory.times[i]) * x0;
    EXPECT_LE((r.trajectory.states[i].head(2) - expected).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(RolloutTest, VanDerPolCornersStabilize) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  for (double a : {-1.0, 1.0}) {
    for (double b : {-1.0, 1.0}) {
      const Eigen::Vector2d x0(a, b);
      const ClosedLoopResult r = ClosedLoopRollout(fx.problem.model, fx.law, x0, 20.0);
      ASSERT_FALSE(r.truncated) << r.message;
      EXPECT_LE(r.trajectory.final_state().head(2).norm(), 1e-2);
    }
  }
}

TEST(CostTest, OriginHasZeroCost) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  const CostReport c = InfiniteHorizonCost(fx.problem.model, fx.law, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(c.cost, 0.0);
  EXPECT_TRUE(c.decayed);
}

TEST(CostTest, LqrCostIsQuadraticForm) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  for (const Eigen::Vector2d x0 : {Eigen::Vector2d(0.4, 0.3), Eigen::Vector2d(-0.5, 0.2)}) {
    const CostReport c = InfiniteHorizonCost(fx.problem.model, fx.law, x0);
    EXPECT_TRUE(c.decayed);
    EXPECT_NEAR(c.cost, 0.5 * x0.dot(testing::LqrP() * x0), 1e-6);
  }
}

TEST(CostTest, VanDerPolCostNearValueFunction) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  const Eigen::Vector2d x0(0.4, 0.3);
  const double V = 0.5 * x0.squaredNorm();
  const CostReport c = InfiniteHorizonCost(fx.problem.model, fx.law, x0);
  EXPECT_TRUE(c.decayed);
  // The optimal value is a lower bound for any admissible feedback.
  EXPECT_GE(c.cost, V - 1e-4);
  EXPECT_LE(c.cost, 1.02 * V);
}

TEST(CostateLimitTest, OriginStays) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  const CostateLimitResult r =
      CostateLimitCheck(fx.field, fx.law, Eigen::VectorXd::Zero(2), 5.0);
  EXPECT_LE(r.final_deviation, 1e-12);
  EXPECT_FALSE(r.escaped);
}

TEST(CostateLimitTest, LqrCostateDecays) {
  const auto fx = testing::MakeLaw(DoubleIntegratorLqrProblem(), testing::LinearIndices4());
  const CostateLimitResult r =
      CostateLimitCheck(fx.field, fx.law, Eigen::Vector2d(0.3, 0.2), 10.0);
  EXPECT_FALSE(r.escaped);
  // lambda(t) = P exp((A - B B' P) t) x0.
  const Eigen::Matrix2d P = testing::LqrP();
  Eigen::Matrix2d Acl;
  Acl << 0.0, 1.0, -P(1, 0), -P(1, 1);
  const Eigen::Vector2d lam = P * testing::Expm(10.0 * Acl) * Eigen::Vector2d(0.3, 0.2);
  EXPECT_NEAR(r.final_deviation, lam.norm(), 1e-6 * lam.norm());
}

TEST(CostateLimitTest, VanDerPolApproachesSteadyCostate) {
  const auto fx = testing::MakeLaw(VanDerPolProblem(), GradedIndexSet(4, 15));
  const CostateLimitResult r =
      CostateLimitCheck(fx.field, fx.law, Eigen::Vector2d(0.3, 0.2), 8.0);
  EXPECT_LE(r.min_deviation, 0.05);
  EXPECT_GT(r.min_time, 0.0);
}

TEST(MonodromyConsistencyTest, StructureAndIntegratorAgree) {
  const PontryaginField F = testing::VanDerPolField();
  Eigen::VectorXd z0(4);
  z0 << 0.3, 0.2, 0.3, 0.2;
  IntegratorOptions opts;
  opts.tol = 1e-10;
  const VariationalResult v = IntegrateVariational(F, z0, 1.0, opts);
  EXPECT_EQ(Monodromy(F, z0, 1.0, 1e-10), v.monodromy);
}

}  // namespace
}  // namespace pkopt
