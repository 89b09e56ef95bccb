#pragma once

#include <string>
#include <vector>

#include "pkopt/pipeline.h"

namespace pkopt {

/// Library version, e.g. "0.1.0".
std::string Version();

// Output files. Every JSON file carries a "meta" object and every CSV file a
// leading "# pkopt <version> config <hash>" line.

/// structure_report.json
std::string StructureReportJson(const CheckOutcome& check,
                                const std::string& config_hash);

/// spectrum.csv: index, re_kappa, im_kappa, residual, paired_with, pair_defect
std::string SpectrumCsv(const SpectrumOutcome& spectrum,
                        const std::string& config_hash);

/// pairing.json
std::string PairingJson(const SpectrumOutcome& spectrum, int n_x,
                        const std::string& config_hash);

/// feedback_grid.csv: x1.., u1.., lambda1.., newton_iters, residual
std::string FeedbackGridCsv(const SynthesisOutcome& synthesis, int n_x,
                            int n_u, const std::string& config_hash);

/// law.json
std::string LawJson(const SynthesisOutcome& synthesis,
                    const SpectrumOutcome& spectrum, int n_x,
                    const std::string& config_hash);

/// trajectories.csv: run, t, y1..
std::string TrajectoriesCsv(const std::vector<RolloutOutcome>& runs,
                            const std::string& config_hash);

/// cost.json
std::string CostJson(const std::vector<RolloutOutcome>& runs,
                     const std::string& config_hash);

/// comparison.json: l2sq_error, max_error, failed_nodes
std::string ComparisonJson(const ComparisonOutcome& comparison,
                           const std::string& config_hash);

/// Writes `content` to dir/name, creating dir. Throws ConfigError when the
/// file cannot be written.
void WriteOutput(const std::string& dir, const std::string& name,
                 const std::string& content);

}  // namespace pkopt
