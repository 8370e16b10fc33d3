#pragma once

// Internals shared by the command implementations; not installed.

#include <filesystem>
#include <map>
#include <string>

#include "scnp/dense.hpp"
#include "scnp/harness.hpp"
#include "scnp/pipelines.hpp"

namespace scnp::detail {

struct InputChecksums {
    std::string edges;
    std::string features;
    std::string labels;
};

// Checksums of the three dataset files; IoError names the missing one.
InputChecksums input_checksums(const ExperimentConfig& cfg);

std::filesystem::path sidecar_path(const ExperimentConfig& cfg);
void write_sidecar(const ExperimentConfig& cfg, const InputChecksums& ck);

// True when the sidecar exists and matches the current inputs and options;
// false when it is absent. StaleCache when present but different.
bool sidecar_matches(const ExperimentConfig& cfg, const InputChecksums& ck);

// Guard before consuming precomputed artifacts: MissingArtifact when none
// were ever built, StaleCache when they came from other inputs or options.
void check_artifact_freshness(const ExperimentConfig& cfg);

PprMatrix load_ppr_artifact(const ExperimentConfig& cfg, std::size_t node_count);
SigmaMatrix load_sigma_artifact(const ExperimentConfig& cfg, double epsilon,
                                std::size_t node_count);

// Evaluation-mode class probabilities for trained parameters.
DenseMatrix eval_probs(ModelKind kind, const Dataset& data,
                       const PropagationArtifacts& art, const MlpParams& params,
                       const TrainConfig& tc);

// JSONL history file: one identity line for the cell, then the per-epoch
// records and summary.
void write_cell_history(const SweepRow& row, const TrainResult& result,
                        const std::filesystem::path& path);

// Filesystem-safe piece of an output file name.
std::string sanitize_component(const std::string& s);

}  // namespace scnp::detail
