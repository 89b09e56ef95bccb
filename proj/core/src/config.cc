#include "pkopt/config.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "pkopt/error.h"

namespace pkopt {

namespace {

using nlohmann::json;

void CheckKeys(const json& obj, const std::set<std::string>& allowed,
               const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

const json& Require(const json& obj, const std::string& key,
                    const std::string& where) {
  if (!obj.contains(key)) {
    throw ConfigError("missing key '" + key + "' in " + where);
  }
  return obj.at(key);
}

double Number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  return v.get<double>();
}

double PositiveNumber(const json& v, const std::string& where) {
  const double x = Number(v, where);
  if (!(x > 0.0)) throw ConfigError(where + " must be positive");
  return x;
}

int Integer(const json& v, const std::string& where, int min_value) {
  if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
  const long long x = v.get<long long>();
  if (x < min_value || x > 1'000'000'000) {
    throw ConfigError(where + " must be an integer >= " +
                      std::to_string(min_value));
  }
  return static_cast<int>(x);
}

Eigen::VectorXd Vector(const json& v, const std::string& where,
                       int expected_size = -1) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        Number(v[i], where + "[" + std::to_string(i) + "]");
  }
  if (expected_size >= 0 && out.size() != expected_size) {
    throw ConfigError(where + " must have " + std::to_string(expected_size) +
                      " entries");
  }
  return out;
}

std::vector<Eigen::VectorXd> VectorList(const json& v, const std::string& where,
                                        int expected_size) {
  if (!v.is_array()) throw ConfigError(where + " must be an array");
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(
        Vector(v[i], where + "[" + std::to_string(i) + "]", expected_size));
  }
  return out;
}

BoxDomain ParseBox(const json& v, const std::string& where, int dim) {
  CheckKeys(v, {"center", "half_width"}, where);
  const Eigen::VectorXd c =
      Vector(Require(v, "center", where), where + ".center", dim);
  const Eigen::VectorXd h =
      Vector(Require(v, "half_width", where), where + ".half_width", dim);
  try {
    return BoxDomain(c, h);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// {vars: [...], terms: [{exps: [...], coeff: c}]} over the named variables,
/// placed into a space of `num_vars` variables via `index_of`.
PolyExpr ParsePolynomial(const json& v, const std::string& where,
                         const std::vector<std::string>& names) {
  CheckKeys(v, {"vars", "terms"}, where);
  const json& vars = Require(v, "vars", where);
  if (!vars.is_array()) throw ConfigError(where + ".vars must be an array");
  std::vector<int> slot;
  for (const auto& name : vars) {
    if (!name.is_string()) throw ConfigError(where + ".vars must be strings");
    const std::string s = name.get<std::string>();
    int found = -1;
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == s) found = static_cast<int>(k);
    }
    if (found < 0) {
      throw ConfigError(where + ": unknown variable '" + s + "'");
    }
    for (int other : slot) {
      if (other == found) {
        throw ConfigError(where + ": variable '" + s + "' listed twice");
      }
    }
    slot.push_back(found);
  }
  const json& terms = Require(v, "terms", where);
  if (!terms.is_array()) throw ConfigError(where + ".terms must be an array");
  PolyExpr p(static_cast<int>(names.size()));
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string tw = where + ".terms[" + std::to_string(t) + "]";
    CheckKeys(terms[t], {"exps", "coeff"}, tw);
    const json& exps = Require(terms[t], "exps", tw);
    if (!exps.is_array() || exps.size() != slot.size()) {
      throw ConfigError(tw + ".exps must have one entry per variable");
    }
    Exponent e(names.size(), 0);
    for (std::size_t k = 0; k < slot.size(); ++k) {
      e[slot[k]] = Integer(exps[k], tw + ".exps", 0);
    }
    p.AddTerm(e, Number(Require(terms[t], "coeff", tw), tw + ".coeff"));
  }
  return p;
}

ProblemDefinition ParseInlineProblem(const json& v) {
  const std::string where = "problem";
  CheckKeys(v, {"name", "n_x", "n_u", "f", "l", "l_star", "steady_state", "box"},
            where);
  const std::string name =
      v.contains("name") ? v.at("name").get<std::string>() : "inline";
  const int n_x = Integer(Require(v, "n_x", where), "problem.n_x", 1);
  const int n_u = Integer(Require(v, "n_u", where), "problem.n_u", 0);
  const VariableLayout layout{n_x, n_u};
  std::vector<std::string> names = layout.FullNames();

  const json& f = Require(v, "f", where);
  if (!f.is_array() || static_cast<int>(f.size()) != n_x) {
    throw ConfigError("problem.f must list n_x polynomials");
  }
  std::vector<PolyExpr> dyn;
  for (std::size_t i = 0; i < f.size(); ++i) {
    dyn.push_back(
        ParsePolynomial(f[i], "problem.f[" + std::to_string(i) + "]", names));
  }
  PolyExpr l = ParsePolynomial(Require(v, "l", where), "problem.l", names);
  const double l_star =
      v.contains("l_star") ? Number(v.at("l_star"), "problem.l_star") : 0.0;

  SteadyStatePoint ss{Eigen::VectorXd::Zero(n_x), Eigen::VectorXd::Zero(n_u),
                      Eigen::VectorXd::Zero(n_x)};
  if (v.contains("steady_state")) {
    const json& s = v.at("steady_state");
    CheckKeys(s, {"x", "u", "lambda"}, "problem.steady_state");
    if (s.contains("x")) ss.x = Vector(s.at("x"), "problem.steady_state.x", n_x);
    if (s.contains("u")) ss.u = Vector(s.at("u"), "problem.steady_state.u", n_u);
    if (s.contains("lambda")) {
      ss.lambda = Vector(s.at("lambda"), "problem.steady_state.lambda", n_x);
    }
  }
  BoxDomain box = BoxDomain::Cube(2 * n_x, 0.5);
  if (v.contains("box")) box = ParseBox(v.at("box"), "problem.box", 2 * n_x);
  try {
    return {OcpModel(name, n_x, n_u, std::move(dyn), std::move(l), l_star), box,
            ss};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
}

IntegratorOptions ParseIntegrator(const json& v, const std::string& where) {
  CheckKeys(v, {"method", "tol", "step", "bound"}, where);
  IntegratorOptions o;
  if (v.contains("method")) {
    const std::string m = v.at("method").is_string()
                              ? v.at("method").get<std::string>()
                              : std::string();
    if (m == "rk45") {
      o.method = IntegratorMethod::kAdaptiveRk45;
    } else if (m == "rk4") {
      o.method = IntegratorMethod::kFixedRk4;
    } else {
      throw ConfigError(where + ".method must be \"rk45\" or \"rk4\"");
    }
  }
  if (v.contains("tol")) o.tol = PositiveNumber(v.at("tol"), where + ".tol");
  if (v.contains("step")) o.step = PositiveNumber(v.at("step"), where + ".step");
  if (v.contains("bound")) {
    o.bound = PositiveNumber(v.at("bound"), where + ".bound");
  }
  return o;
}

}  // namespace

std::string Fnv1aHex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Exponent> PipelineConfig::BasisIndices() const {
  if (!basis_indices.empty()) return basis_indices;
  return GradedIndexSet(problem.box.dim(), basis_count);
}

PipelineConfig ParseConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  CheckKeys(root,
            {"problem", "box", "basis", "quadrature", "tolerances", "grid",
             "reference", "compare", "simulate", "check", "output_dir",
             "threads", "seed"},
            "config");

  PipelineConfig cfg{
      VanDerPolProblem(), {}, 15, std::nullopt, {}, {}, std::nullopt, 10,
      {},                 {}, ".", 1, 0, ""};

  const json& problem = Require(root, "problem", "config");
  if (problem.is_string()) {
    cfg.problem = RegistryProblem(problem.get<std::string>());
  } else if (problem.is_object()) {
    cfg.problem = ParseInlineProblem(problem);
  } else {
    throw ConfigError("problem must be a registry name or an inline definition");
  }
  const int n_x = cfg.problem.model.n_x();
  const int n_u = cfg.problem.model.n_u();
  const int dim = 2 * n_x;

  if (root.contains("box")) cfg.problem.box = ParseBox(root.at("box"), "box", dim);

  if (root.contains("basis")) {
    const json& b = root.at("basis");
    CheckKeys(b, {"count", "indices"}, "basis");
    if (b.contains("count") == b.contains("indices")) {
      throw ConfigError("basis needs exactly one of 'count' or 'indices'");
    }
    if (b.contains("count")) {
      cfg.basis_count = Integer(b.at("count"), "basis.count", 1);
    } else {
      const json& idx = b.at("indices");
      if (!idx.is_array() || idx.empty()) {
        throw ConfigError("basis.indices must be a non-empty array");
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::string w = "basis.indices[" + std::to_string(i) + "]";
        if (!idx[i].is_array() || static_cast<int>(idx[i].size()) != dim) {
          throw ConfigError(w + " must have " + std::to_string(dim) +
                            " entries");
        }
        Exponent e;
        for (const auto& x : idx[i]) e.push_back(Integer(x, w, 0));
        cfg.basis_indices.push_back(e);
      }
      cfg.basis_count = static_cast<int>(cfg.basis_indices.size());
    }
  }

  if (root.contains("quadrature")) {
    const json& q = root.at("quadrature");
    CheckKeys(q, {"nodes_per_dim"}, "quadrature");
    if (q.contains("nodes_per_dim")) {
      cfg.nodes_per_dim =
          Integer(q.at("nodes_per_dim"), "quadrature.nodes_per_dim", 1);
    }
  }

  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    CheckKeys(t, {"eigen", "pairing", "newton", "tau", "structure", "monodromy"},
              "tolerances");
    if (t.contains("eigen")) {
      cfg.tol.eigen = PositiveNumber(t.at("eigen"), "tolerances.eigen");
    }
    if (t.contains("pairing")) {
      cfg.tol.pairing = PositiveNumber(t.at("pairing"), "tolerances.pairing");
    }
    if (t.contains("newton")) {
      cfg.tol.newton = PositiveNumber(t.at("newton"), "tolerances.newton");
    }
    if (t.contains("tau")) cfg.tol.tau = Number(t.at("tau"), "tolerances.tau");
    if (t.contains("structure")) {
      cfg.tol.structure =
          PositiveNumber(t.at("structure"), "tolerances.structure");
    }
    if (t.contains("monodromy")) {
      cfg.tol.monodromy =
          PositiveNumber(t.at("monodromy"), "tolerances.monodromy");
    }
  }

  cfg.grid.box = cfg.problem.box.Leading(n_x);
  if (root.contains("grid")) {
    const json& g = root.at("grid");
    CheckKeys(g, {"points_per_dim", "box", "fit_degree"}, "grid");
    if (g.contains("points_per_dim")) {
      cfg.grid.points_per_dim =
          Integer(g.at("points_per_dim"), "grid.points_per_dim", 1);
    }
    if (g.contains("box")) cfg.grid.box = ParseBox(g.at("box"), "grid.box", n_x);
    if (g.contains("fit_degree")) {
      cfg.grid.fit_degree = Integer(g.at("fit_degree"), "grid.fit_degree", 0);
    }
  }

  if (root.contains("reference")) {
    const json& r = root.at("reference");
    if (!r.is_array() || static_cast<int>(r.size()) != n_u) {
      throw ConfigError("reference must list one polynomial per control");
    }
    std::vector<std::string> xnames;
    for (int i = 0; i < n_x; ++i) xnames.push_back("x" + std::to_string(i + 1));
    std::vector<PolyExpr> ref;
    for (std::size_t i = 0; i < r.size(); ++i) {
      ref.push_back(ParsePolynomial(
          r[i], "reference[" + std::to_string(i) + "]", xnames));
    }
    cfg.reference = std::move(ref);
  }

  if (root.contains("compare")) {
    const json& c = root.at("compare");
    CheckKeys(c, {"nodes_per_dim"}, "compare");
    if (c.contains("nodes_per_dim")) {
      cfg.compare_nodes_per_dim =
          Integer(c.at("nodes_per_dim"), "compare.nodes_per_dim", 1);
    }
  }

  if (root.contains("simulate")) {
    const json& s = root.at("simulate");
    CheckKeys(s, {"initial_states", "t_end", "integrator", "cost_horizon"},
              "simulate");
    if (s.contains("initial_states")) {
      cfg.simulate.initial_states =
          VectorList(s.at("initial_states"), "simulate.initial_states", n_x);
    }
    if (s.contains("t_end")) {
      cfg.simulate.t_end = PositiveNumber(s.at("t_end"), "simulate.t_end");
    }
    if (s.contains("integrator")) {
      cfg.simulate.integrator =
          ParseIntegrator(s.at("integrator"), "simulate.integrator");
    }
    if (s.contains("cost_horizon")) {
      cfg.simulate.cost_horizon =
          PositiveNumber(s.at("cost_horizon"), "simulate.cost_horizon");
    }
  }

  if (root.contains("check")) {
    const json& c = root.at("check");
    CheckKeys(c,
              {"samples", "monodromy_points", "monodromy_time", "adjoint_pairs",
               "flip_sign_component"},
              "check");
    if (c.contains("samples")) {
      cfg.check.samples = Integer(c.at("samples"), "check.samples", 1);
    }
    if (c.contains("monodromy_points")) {
      cfg.check.monodromy_points =
          VectorList(c.at("monodromy_points"), "check.monodromy_points", dim);
    }
    if (c.contains("monodromy_time")) {
      cfg.check.monodromy_time =
          Number(c.at("monodromy_time"), "check.monodromy_time");
      if (cfg.check.monodromy_time < 0.0) {
        throw ConfigError("check.monodromy_time must be >= 0");
      }
    }
    if (c.contains("adjoint_pairs")) {
      cfg.check.adjoint_pairs =
          Integer(c.at("adjoint_pairs"), "check.adjoint_pairs", 0);
    }
    if (c.contains("flip_sign_component")) {
      const int k = Integer(c.at("flip_sign_component"),
                            "check.flip_sign_component", 0);
      if (k >= dim) {
        throw ConfigError("check.flip_sign_component must be below " +
                          std::to_string(dim));
      }
      cfg.check.flip_sign_component = k;
    }
  }

  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) {
      throw ConfigError("output_dir must be a string");
    }
    cfg.output_dir = root.at("output_dir").get<std::string>();
  }
  if (root.contains("threads")) {
    cfg.threads = Integer(root.at("threads"), "threads", 1);
  }
  if (root.contains("seed")) {
    cfg.seed = static_cast<std::uint64_t>(Integer(root.at("seed"), "seed", 0));
  }

  // Every basis index must address the (x, lambda) space.
  if (!cfg.basis_indices.empty()) {
    std::set<Exponent> seen(cfg.basis_indices.begin(), cfg.basis_indices.end());
    if (seen.size() != cfg.basis_indices.size()) {
      throw ConfigError("basis.indices contains duplicates");
    }
  }
  json canonical = root;
  canonical.erase("output_dir");
  canonical.erase("threads");
  cfg.hash = Fnv1aHex(canonical.dump());
  return cfg;
}

PipelineConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace pkopt
