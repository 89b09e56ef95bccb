// pkopt command line tool: check, spectrum, synthesize, simulate, compare.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pkopt/config.h"
#include "pkopt/error.h"
#include "pkopt/pipeline.h"
#include "pkopt/report.h"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

struct Options {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

int ExitCode(pkopt::ErrorKind kind) {
  switch (kind) {
    case pkopt::ErrorKind::kNumericalCheck:
      return kCheckFailed;
    case pkopt::ErrorKind::kConfig:
      return kConfigError;
    case pkopt::ErrorKind::kSolver:
      return kSolverError;
  }
  return kSolverError;
}

pkopt::PipelineConfig Load(const Options& o) {
  pkopt::PipelineConfig cfg = pkopt::LoadConfig(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.threads > 0) cfg.threads = o.threads;
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.hash = pkopt::Fnv1aHex(cfg.hash + ":seed=" + std::to_string(*o.seed));
  }
  return cfg;
}

int RunCheck(const Options& o) {
  pkopt::Pipeline p(Load(o));
  const pkopt::CheckOutcome c = p.Check();
  const std::string& dir = p.config().output_dir;
  pkopt::WriteOutput(dir, "structure_report.json",
                     pkopt::StructureReportJson(c, p.config().hash));
  const pkopt::StructureReport& r = c.report;
  std::printf("symmetry_defect              %.3e\n", r.symmetry_defect);
  std::printf("divergence                   %.3e\n", r.divergence);
  std::printf("monodromy_symplectic_defect  %.3e\n",
              r.monodromy_symplectic_defect);
  std::printf("monodromy_det_defect         %.3e\n", r.monodromy_det_defect);
  std::printf("adjoint_defect               %.3e\n", r.adjoint_defect);
  if (!c.passed()) {
    for (const std::string& f : c.failures) {
      std::fprintf(stderr, "check failed: %s\n", f.c_str());
    }
    return kCheckFailed;
  }
  return kOk;
}

void WriteSpectrum(pkopt::Pipeline& p) {
  const pkopt::SpectrumOutcome& s = p.Spectrum();
  const std::string& dir = p.config().output_dir;
  pkopt::WriteOutput(dir, "spectrum.csv",
                     pkopt::SpectrumCsv(s, p.config().hash));
  pkopt::WriteOutput(dir, "pairing.json",
                     pkopt::PairingJson(s, p.model().n_x(), p.config().hash));
  std::printf("basis size %d, %zu eigenvalues, %zu mirrored pairs, %zu "
              "truncation-dominated\n",
              s.basis.size(), s.eigs.size(), s.pairing.pairs.size(),
              s.pairing.excluded.size());
}

int RunSpectrum(const Options& o) {
  pkopt::Pipeline p(Load(o));
  WriteSpectrum(p);
  return kOk;
}

int RunSynthesize(const Options& o) {
  pkopt::Pipeline p(Load(o));
  WriteSpectrum(p);
  const pkopt::SynthesisOutcome& s = p.Synthesize();
  const std::string& dir = p.config().output_dir;
  const int n_x = p.model().n_x();
  pkopt::WriteOutput(dir, "feedback_grid.csv",
                     pkopt::FeedbackGridCsv(s, n_x, p.model().n_u(),
                                            p.config().hash));
  pkopt::WriteOutput(dir, "law.json",
                     pkopt::LawJson(s, p.Spectrum(), n_x, p.config().hash));
  int failed = 0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (!s.grid[k].costate.converged) {
      ++failed;
      std::fprintf(stderr, "costate solve failed at node %zu: %s\n", k,
                   s.grid[k].costate.message.c_str());
    }
  }
  for (const std::string& w : s.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  std::printf("solved %zu of %zu grid nodes\n", s.grid.size() - failed,
              s.grid.size());
  return failed > 0 ? kSolverError : kOk;
}

int RunSimulate(const Options& o) {
  pkopt::Pipeline p(Load(o));
  const std::vector<pkopt::RolloutOutcome> runs = p.Simulate();
  const std::string& dir = p.config().output_dir;
  pkopt::WriteOutput(dir, "trajectories.csv",
                     pkopt::TrajectoriesCsv(runs, p.config().hash));
  pkopt::WriteOutput(dir, "cost.json", pkopt::CostJson(runs, p.config().hash));
  int truncated = 0;
  for (const pkopt::RolloutOutcome& r : runs) {
    const auto& tr = r.rollout.trajectory;
    std::printf("x0 = (");
    for (int i = 0; i < r.x0.size(); ++i) {
      std::printf(i ? ", %g" : "%g", r.x0[i]);
    }
    std::printf(")  |x(%g)| = %.3e  cost = %.6g\n", tr.final_time(),
                tr.final_state().norm(), r.cost.cost);
    if (r.rollout.truncated) {
      ++truncated;
      std::fprintf(stderr, "rollout truncated: %s\n",
                   r.rollout.message.c_str());
    }
  }
  return truncated > 0 ? kSolverError : kOk;
}

int RunCompare(const Options& o) {
  pkopt::Pipeline p(Load(o));
  const pkopt::ComparisonOutcome c = p.Compare();
  pkopt::WriteOutput(p.config().output_dir, "comparison.json",
                     pkopt::ComparisonJson(c, p.config().hash));
  if (c.skipped) {
    std::printf("%s\n", c.notice.c_str());
    return kOk;
  }
  std::printf("l2sq_error %.6e  max_error %.6e\n", c.comparison.l2sq_error,
              c.comparison.max_error);
  if (!c.comparison.valid()) {
    for (int k : c.comparison.failed_nodes) {
      std::fprintf(stderr, "costate solve failed at quadrature node %d\n", k);
    }
    return kSolverError;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pontryagin-Koopman feedback synthesis"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"check", "verify the Hamiltonian structure of the Pontryagin field",
       RunCheck},
      {"spectrum", "Galerkin spectrum and mirrored pairs", RunSpectrum},
      {"synthesize", "costate map and feedback on the grid", RunSynthesize},
      {"simulate", "closed-loop rollouts and costs", RunSimulate},
      {"compare", "compare the feedback with the reference law", RunCompare},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opts.config, "config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--threads", opts.threads, "worker threads for assembly")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for perturbed-restart root search");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    if (subs[i]->count("--seed") > 0) opts.seed = seed;
    try {
      return commands[i].run(opts);
    } catch (const pkopt::Error& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return ExitCode(e.kind());
    } catch (const std::invalid_argument& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kConfigError;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kSolverError;
    }
  }
  return kConfigError;
}
