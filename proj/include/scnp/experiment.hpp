#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scnp/nn.hpp"

namespace scnp {

// Declarative description of a benchmark run. Defaults follow the standard
// protocol: 20 labeled nodes per class, 500 validation nodes, teleport 0.1,
// 64 hidden units, weight decay 0.005, dropout 0.5, 80 epochs, 10 runs.
struct ExperimentConfig {
    std::filesystem::path dataset_dir;
    std::string dataset_name;  // defaults to the directory's basename
    std::vector<std::string> models = {"ppnp", "scnp"};
    double alpha = 0.1;
    std::vector<double> epsilons = {1e-5, 1e-4, 1e-3, 1e-2};
    std::size_t power_steps = 10;
    std::size_t per_class_train = 20;
    std::size_t val_size = 500;
    std::vector<std::size_t> epochs = {80};
    std::size_t runs = 10;
    std::uint64_t base_seed = 0;
    std::filesystem::path out_dir = "out";
    std::size_t hidden = 64;
    double learning_rate = 0.01;
    double lambda_l2 = 0.005;
    double dropout = 0.5;
    bool adjacency_dropout = true;
    bool literal_algorithm1 = false;
    bool normalize_features = false;
    bool largest_component = true;
    std::size_t threads = 1;

    // ConfigError on empty grids, zero runs, out-of-range rates, unknown
    // model names, or a missing dataset directory setting.
    void validate() const;

    // The per-run training settings for one sweep cell.
    TrainConfig train_config(std::size_t max_epochs, std::uint64_t seed) const;

    // Dataset name with the directory basename as fallback.
    std::string effective_name() const;
};

// Applies one `key = value` assignment; ConfigError on unknown keys or
// unparseable values. Keys mirror the long command-line flags.
void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

// Reads a key = value file ('#' starts a comment, blank lines ignored) on
// top of the current contents of `cfg`.
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

// Canonical one-key-per-line rendering of the full effective config.
std::string serialize_config(const ExperimentConfig& cfg);

// Hash of the result-determining settings. Execution details that cannot
// change any result (output directory, dataset location on disk, worker
// count) are excluded, so moving an output tree does not orphan it.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

}  // namespace scnp
