#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pkopt/basis.h"
#include "pkopt/integrator.h"
#include "pkopt/registry.h"

namespace pkopt {

struct ToleranceConfig {
  /// Eigenpair residual bound relative to ||M||_F.
  double eigen = 1e-8;
  /// Absolute mirror-pairing tolerance; default 1e-6 * max(1, max|kappa|).
  std::optional<double> pairing;
  double newton = 1e-10;
  /// Unstable threshold; default 1e-6 * max|kappa|.
  std::optional<double> tau;
  /// Pass threshold for symmetry, divergence and adjoint defects.
  double structure = 1e-10;
  /// Pass threshold for the monodromy defects.
  double monodromy = 1e-6;
};

struct GridConfig {
  int points_per_dim = 21;
  /// State box; defaults to the x-part of the problem box.
  BoxDomain box;
  /// Total degree of the least-squares polynomial fit of mu in law.json.
  int fit_degree = 2;
};

struct SimulateConfig {
  std::vector<Eigen::VectorXd> initial_states;
  double t_end = 20.0;
  IntegratorOptions integrator;
  /// Cap for the infinite-horizon cost integral.
  double cost_horizon = 200.0;
};

struct CheckConfig {
  int samples = 100;
  std::vector<Eigen::VectorXd> monodromy_points;
  double monodromy_time = 1.0;
  int adjoint_pairs = 20;
  /// Negates one field component before checking (negative fixture).
  std::optional<int> flip_sign_component;
};

struct PipelineConfig {
  ProblemDefinition problem;
  /// Explicit basis multi-indices; graded order of `basis_count` otherwise.
  std::vector<Exponent> basis_indices;
  int basis_count = 15;
  std::optional<int> nodes_per_dim;
  ToleranceConfig tol;
  GridConfig grid;
  /// One polynomial in x per control.
  std::optional<std::vector<PolyExpr>> reference;
  int compare_nodes_per_dim = 10;
  SimulateConfig simulate;
  CheckConfig check;
  std::string output_dir = ".";
  int threads = 1;
  std::uint64_t seed = 0;
  /// FNV-1a hash of the canonical JSON form of the config.
  std::string hash;

  std::vector<Exponent> BasisIndices() const;
};

/// Parses and validates a JSON config. Unknown keys, missing required keys
/// and malformed values raise ConfigError.
PipelineConfig ParseConfig(const std::string& json_text);
PipelineConfig LoadConfig(const std::string& path);

/// 64-bit FNV-1a as 16 hex digits.
std::string Fnv1aHex(const std::string& bytes);

}  // namespace pkopt
