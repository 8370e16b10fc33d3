#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scnp/dataset.hpp"
#include "scnp/experiment.hpp"

namespace scnp {

// Process exit codes for the command-line tool.
inline constexpr int kExitFailure = 1;  // unexpected error
inline constexpr int kExitConfig = 2;   // bad configuration or arguments
inline constexpr int kExitIo = 3;       // missing/corrupt files, stale artifacts
inline constexpr int kExitNumeric = 4;  // numeric failure

// Maps a thrown library error to the exit-code table above.
int exit_code_for(const std::exception& e);

struct PreparedDataset {
    Dataset data;
    std::vector<std::string> warnings;
    std::size_t raw_node_count = 0;  // before component extraction
};

// Loads edges.tsv / features.tsv / labels.tsv from the dataset directory
// and applies the configured cleanup steps.
PreparedDataset prepare_dataset(const ExperimentConfig& cfg);

// Artifact layout under out_dir.
std::filesystem::path artifacts_dir(const ExperimentConfig& cfg);
std::filesystem::path ppr_artifact_path(const ExperimentConfig& cfg);
std::filesystem::path sigma_artifact_path(const ExperimentConfig& cfg, double epsilon);
std::filesystem::path runs_dir(const ExperimentConfig& cfg);
std::filesystem::path results_csv_path(const ExperimentConfig& cfg);

// Compact "%g" rendering used in artifact names and CSV cells.
std::string format_number(double v);

// FNV-1a checksum of a file's bytes, as 16 hex digits.
std::string file_checksum_hex(const std::filesystem::path& path);

// Commands. Each throws typed library errors; the tool maps them to exit
// codes. `log` receives human-readable progress lines.
void run_validate(const ExperimentConfig& cfg, std::ostream& log);
void run_precompute(const ExperimentConfig& cfg, std::ostream& log);
void run_train(const ExperimentConfig& cfg, std::ostream& log);
void run_sweep(const ExperimentConfig& cfg, std::ostream& log);

struct ReportOptions {
    std::filesystem::path results_dir;
    bool force = false;     // accept rows with differing config hashes
    bool csv_only = false;  // skip SVG emission
};
void run_report(const ReportOptions& opt, std::ostream& log);

// One benchmark cell. Metric fields are meaningful only when `error` is
// empty; `epsilon` is the formatted threshold, empty for models that do not
// use one.
struct SweepRow {
    std::string dataset;
    std::string model;
    std::string epsilon;
    double alpha = 0.0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    double macro_f1 = 0.0;
    double wall_time = 0.0;
    std::string error;
    std::string config_hash;

    // Identity of the cell within one experiment.
    std::string key() const;
};

// RFC-4180 quoting: wraps the field when it holds a comma, quote, or
// newline, doubling embedded quotes.
std::string csv_quote(const std::string& field);

extern const char* const kSweepCsvHeader;
std::string sweep_row_csv(const SweepRow& row);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

// JSONL history file for one cell, under runs_dir.
std::filesystem::path history_path(const std::filesystem::path& runs,
                                   const SweepRow& row);

}  // namespace scnp
