#include "pkopt/report.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "pkopt/error.h"

#ifndef PKOPT_VERSION_STRING
#define PKOPT_VERSION_STRING "0.0.0"
#endif

namespace pkopt {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ordered_json Meta(const std::string& hash) {
  ordered_json m;
  m["version"] = Version();
  m["config_hash"] = hash;
  ordered_json modules;
  for (const char* name :
       {"model", "structure", "basis", "spectral", "synthesis", "sim", "cli"}) {
    modules[name] = Version();
  }
  m["modules"] = modules;
  return m;
}

std::string CsvHeader(const std::string& hash) {
  return "# pkopt " + Version() + " config " + hash + "\n";
}

ordered_json Complex(std::complex<double> z) {
  return ordered_json::array({z.real(), z.imag()});
}

ordered_json Vec(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json Mat(const Eigen::MatrixXd& m) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(Vec(m.row(i).transpose()));
  return a;
}

ordered_json PolyJson(const PolyExpr& p) {
  ordered_json terms = ordered_json::array();
  for (const auto& [e, c] : p.terms()) {
    terms.push_back({{"exps", e}, {"coeff", c}});
  }
  return terms;
}

std::string Dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string Version() { return PKOPT_VERSION_STRING; }

std::string StructureReportJson(const CheckOutcome& check,
                                const std::string& config_hash) {
  const StructureReport& r = check.report;
  ordered_json j;
  j["symmetry_defect"] = r.symmetry_defect;
  j["divergence"] = r.divergence;
  j["monodromy_symplectic_defect"] = r.monodromy_symplectic_defect;
  j["monodromy_det_defect"] = r.monodromy_det_defect;
  j["adjoint_defect"] = r.adjoint_defect;
  j["meta"] = Meta(config_hash);
  return Dump(j);
}

std::string SpectrumCsv(const SpectrumOutcome& spectrum,
                        const std::string& config_hash) {
  std::ostringstream out;
  out << CsvHeader(config_hash);
  out << "index,re_kappa,im_kappa,residual,paired_with,pair_defect\n";
  for (std::size_t i = 0; i < spectrum.eigs.size(); ++i) {
    const EigenPair& e = spectrum.eigs[i];
    const int partner = spectrum.pairing.PartnerOf(static_cast<int>(i));
    out << i << ',' << Num(e.kappa.real()) << ',' << Num(e.kappa.imag()) << ','
        << Num(e.residual) << ',' << partner << ','
        << (partner < 0 ? std::string("nan")
                        : Num(spectrum.pairing.DefectOf(static_cast<int>(i))))
        << '\n';
  }
  return out.str();
}

std::string PairingJson(const SpectrumOutcome& spectrum, int n_x,
                        const std::string& config_hash) {
  const MirrorPairing& p = spectrum.pairing;
  ordered_json j;
  j["tolerance"] = p.tolerance;
  ordered_json pairs = ordered_json::array();
  for (const MirrorPair& m : p.pairs) {
    pairs.push_back({{"i", m.i},
                     {"j", m.j},
                     {"kappa_i", Complex(spectrum.eigs[m.i].kappa)},
                     {"kappa_j", Complex(spectrum.eigs[m.j].kappa)},
                     {"defect", m.defect}});
  }
  j["pairs"] = pairs;
  j["unpaired"] = p.unpaired;
  j["truncation_dominated"] = p.excluded;
  const int count = p.NontrivialPairedCount(spectrum.eigs);
  j["nontrivial_paired_count"] = count;
  j["mirrored"] = count >= 2 * n_x;
  j["matrix_norm"] = spectrum.galerkin.M.norm();
  j["basis_size"] = spectrum.basis.size();
  j["nodes_per_dim"] = spectrum.quad.nodes_per_dim;
  j["meta"] = Meta(config_hash);
  return Dump(j);
}

std::string FeedbackGridCsv(const SynthesisOutcome& synthesis, int n_x,
                            int n_u, const std::string& config_hash) {
  std::ostringstream out;
  out << CsvHeader(config_hash);
  for (int i = 0; i < n_x; ++i) out << 'x' << i + 1 << ',';
  for (int i = 0; i < n_u; ++i) out << 'u' << i + 1 << ',';
  for (int i = 0; i < n_x; ++i) out << "lambda" << i + 1 << ',';
  out << "newton_iters,residual\n";
  for (const GridSolution& g : synthesis.grid) {
    for (int i = 0; i < n_x; ++i) out << Num(g.x[i]) << ',';
    const bool ok = g.costate.converged;
    for (int i = 0; i < n_u; ++i) out << (ok ? Num(g.u[i]) : "nan") << ',';
    for (int i = 0; i < n_x; ++i) {
      out << (ok ? Num(g.costate.lambda[i]) : "nan") << ',';
    }
    out << g.costate.iterations << ',' << Num(g.costate.residual) << '\n';
  }
  return out.str();
}

std::string LawJson(const SynthesisOutcome& synthesis,
                    const SpectrumOutcome& spectrum, int n_x,
                    const std::string& config_hash) {
  const FeedbackLaw& law = *synthesis.law;
  const StableManifoldSystem& sys = law.system();
  ordered_json j;
  j["basis_indices"] = spectrum.basis.indices;
  j["tau"] = sys.tau;
  ordered_json modes = ordered_json::array();
  for (const SelectedMode& m : sys.selected) {
    ordered_json coeffs = ordered_json::array();
    const Eigen::VectorXcd& a = spectrum.eigs[m.index].a;
    for (int i = 0; i < a.size(); ++i) coeffs.push_back(Complex(a[i]));
    modes.push_back({{"index", m.index},
                     {"kappa", Complex(m.kappa)},
                     {"paired", m.paired},
                     {"coupling", m.coupling},
                     {"coefficients", coeffs}});
  }
  j["selected"] = modes;
  j["newton"] = {{"tol", law.newton().tol},
                 {"max_iter", law.newton().max_iter},
                 {"max_halvings", law.newton().max_halvings}};
  j["riccati"] = {{"P", Mat(synthesis.are.P)},
                  {"residual", synthesis.are.residual}};
  j["steady_state_residual"] = synthesis.steady_state_residual;
  j["unselected_residual"] = synthesis.unselected_residual;
  ordered_json fit = ordered_json::array();
  for (const PolyExpr& p : synthesis.fit) fit.push_back(PolyJson(p));
  j["feedback_fit"] = fit;
  ordered_json failed = ordered_json::array();
  for (std::size_t k = 0; k < synthesis.grid.size(); ++k) {
    if (!synthesis.grid[k].costate.converged) {
      failed.push_back({{"node", k}, {"x", Vec(synthesis.grid[k].x)}});
    }
  }
  j["failed_nodes"] = failed;
  ordered_json cands = ordered_json::array();
  for (const CandidateLaw& c : synthesis.candidates) {
    cands.push_back({{"x0", Vec(c.x0)},
                     {"lambda", Vec(c.lambda)},
                     {"cost", c.cost.cost},
                     {"decayed", c.cost.decayed}});
  }
  j["candidate_laws"] = cands;
  j["warnings"] = synthesis.warnings;
  j["n_x"] = n_x;
  j["meta"] = Meta(config_hash);
  return Dump(j);
}

std::string TrajectoriesCsv(const std::vector<RolloutOutcome>& runs,
                            const std::string& config_hash) {
  std::ostringstream out;
  out << CsvHeader(config_hash);
  const int n = runs.empty() ? 0 : static_cast<int>(runs.front().x0.size());
  out << "run,t";
  for (int i = 0; i < n; ++i) out << ",y" << i + 1;
  out << '\n';
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const Trajectory& tr = runs[r].rollout.trajectory;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      out << r << ',' << Num(tr.times[k]);
      for (int i = 0; i < n; ++i) out << ',' << Num(tr.states[k][i]);
      out << '\n';
    }
  }
  return out.str();
}

std::string CostJson(const std::vector<RolloutOutcome>& runs,
                     const std::string& config_hash) {
  ordered_json arr = ordered_json::array();
  for (const RolloutOutcome& r : runs) {
    const Trajectory& tr = r.rollout.trajectory;
    arr.push_back({{"x0", Vec(r.x0)},
                   {"t_end", tr.final_time()},
                   {"final_state", Vec(tr.final_state())},
                   {"final_norm", tr.final_state().norm()},
                   {"truncated", r.rollout.truncated},
                   {"cost", r.cost.cost},
                   {"cost_horizon", r.cost.final_time},
                   {"tail_integrand", r.cost.tail_integrand},
                   {"tail_bound", r.cost.tail_bound},
                   {"decayed", r.cost.decayed},
                   {"message", r.rollout.message.empty() ? r.cost.message
                                                         : r.rollout.message}});
  }
  ordered_json j;
  j["runs"] = arr;
  j["meta"] = Meta(config_hash);
  return Dump(j);
}

std::string ComparisonJson(const ComparisonOutcome& comparison,
                           const std::string& config_hash) {
  ordered_json j;
  if (comparison.skipped) {
    j["skipped"] = true;
    j["notice"] = comparison.notice;
  } else {
    const ReferenceComparison& c = comparison.comparison;
    j["l2sq_error"] = c.l2sq_error;
    j["max_error"] = c.max_error;
    j["failed_nodes"] = c.failed_nodes;
  }
  j["meta"] = Meta(config_hash);
  return Dump(j);
}

void WriteOutput(const std::string& dir, const std::string& name,
                 const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) {
    throw ConfigError("cannot write output file '" + path.string() + "'");
  }
}

}  // namespace pkopt
