#include "pkopt/config.h"

#include <gtest/gtest.h>

#include "pkopt/error.h"
#include "pkopt/model.h"
#include "test_util.h"

namespace pkopt {
namespace {

TEST(ConfigTest, RegistryProblemWithDefaults) {
  const PipelineConfig c = ParseConfig(R"({"problem": "vanderpol"})");
  EXPECT_EQ(c.problem.model.name(), "vanderpol");
  EXPECT_EQ(c.basis_count, 15);
  EXPECT_EQ(c.BasisIndices(), GradedIndexSet(4, 15));
  EXPECT_EQ(c.grid.points_per_dim, 21);
  EXPECT_EQ(c.grid.box.dim(), 2);
  EXPECT_DOUBLE_EQ(c.grid.box.half_width[0], 0.5);
  EXPECT_FALSE(c.reference.has_value());
  EXPECT_EQ(c.output_dir, ".");
  EXPECT_EQ(c.hash.size(), 16u);
}

TEST(ConfigTest, ExplicitIndicesAndTolerances) {
  const PipelineConfig c = ParseConfig(R"({
    "problem": "double_integrator_lqr",
    "basis": {"indices": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]},
    "tolerances": {"eigen": 1e-9, "tau": 0.1},
    "simulate": {"integrator": {"method": "rk4", "step": 0.01}, "t_end": 3}
  })");
  EXPECT_EQ(c.BasisIndices().size(), 4u);
  EXPECT_DOUBLE_EQ(c.tol.eigen, 1e-9);
  ASSERT_TRUE(c.tol.tau.has_value());
  EXPECT_DOUBLE_EQ(*c.tol.tau, 0.1);
  EXPECT_EQ(c.simulate.integrator.method, IntegratorMethod::kFixedRk4);
  EXPECT_DOUBLE_EQ(c.simulate.t_end, 3.0);
}

TEST(ConfigTest, SchemaErrors) {
  const char* bad[] = {
      R"({})",
      R"({"problem": "pendulum"})",
      R"({"problem": "vanderpol", "extra": 1})",
      R"({"problem": "vanderpol", "basis": {"count": 3, "indices": [[0,0,0,0]]}})",
      R"({"problem": "vanderpol", "basis": {"count": 0}})",
      R"({"problem": "vanderpol", "basis": {"indices": [[1,0,0]]}})",
      R"({"problem": "vanderpol", "basis": {"indices": [[1,0,0,0],[1,0,0,0]]}})",
      R"({"problem": "vanderpol", "tolerances": {"eigen": -1}})",
      R"({"problem": "vanderpol", "simulate": {"integrator": {"method": "euler"}}})",
      R"({"problem": "vanderpol", "check": {"flip_sign_component": 4}})",
      R"({"problem": "vanderpol", "grid": {"points_per_dim": "many"}})",
      R"({"problem": "vanderpol", "reference": []})",
      R"({"problem": "vanderpol", "reference": [{"vars": ["lambda1"], "terms": []}]})",
      R"({"problem": "vanderpol",)",
  };
  for (const char* text : bad) {
    EXPECT_THROW(ParseConfig(text), ConfigError) << text;
  }
}

TEST(ConfigTest, InlineProblemMatchesRegistry) {
  const PipelineConfig c = ParseConfig(R"({
    "problem": {
      "name": "vdp", "n_x": 2, "n_u": 1,
      "f": [
        {"vars": ["x2"], "terms": [{"exps": [1], "coeff": 1.0}]},
        {"vars": ["x1", "x2", "u1"], "terms": [
          {"exps": [1,0,0], "coeff": -1.0}, {"exps": [0,1,0], "coeff": -0.5},
          {"exps": [2,1,0], "coeff": 0.5}, {"exps": [1,0,1], "coeff": 1.0}]}
      ],
      "l": {"vars": ["x2", "u1"], "terms": [
        {"exps": [2,0], "coeff": 0.5}, {"exps": [0,2], "coeff": 0.5}]},
      "box": {"center": [0,0,0,0], "half_width": [0.5,0.5,0.5,0.5]}
    }
  })");
  const PontryaginField a = testing::FieldOf(c.problem);
  const PontryaginField b = testing::VanDerPolField();
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a.components()[k], b.components()[k]);
}

TEST(ConfigTest, InlineProblemRejectsLambdaInDynamics) {
  EXPECT_THROW(ParseConfig(R"({
    "problem": {
      "name": "bad", "n_x": 1, "n_u": 1,
      "f": [{"vars": ["lambda1"], "terms": [{"exps": [1], "coeff": 1.0}]}],
      "l": {"vars": ["u1"], "terms": [{"exps": [2], "coeff": 0.5}]},
      "box": {"center": [0,0], "half_width": [1,1]}
    }
  })"),
               ConfigError);
}

TEST(ConfigTest, HashIgnoresOutputLocationOnly) {
  const std::string base = ParseConfig(R"({"problem": "vanderpol"})").hash;
  EXPECT_EQ(ParseConfig(R"({"problem": "vanderpol", "output_dir": "x", "threads": 3})").hash,
            base);
  EXPECT_NE(ParseConfig(R"({"problem": "vanderpol", "seed": 4})").hash, base);
  EXPECT_NE(ParseConfig(R"({"problem": "vanderpol", "basis": {"count": 5}})").hash, base);
}

TEST(ConfigTest, Fnv1aKnownValues) {
  EXPECT_EQ(Fnv1aHex(""), "cbf29ce484222325");
  EXPECT_EQ(Fnv1aHex("a"), "af63dc4c8601ec8c");
}

TEST(ConfigTest, MissingFile) {
  EXPECT_THROW(LoadConfig("/nonexistent/config.json"), ConfigError);
}

}  // namespace
}  // namespace pkopt
