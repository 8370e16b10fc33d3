// Command-line front end: precompute, train, sweep, report, validate-dataset.

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "scnp/error.hpp"
#include "scnp/experiment.hpp"
#include "scnp/harness.hpp"

namespace {

// Options arrive in three layers: built-in defaults, then a config file,
// then explicit flags. CLI11 parses flags before we know whether a config
// file was given, so flag values are staged here and applied only for flags
// the user actually passed.
struct FlagValues {
    std::string dataset_dir;
    std::string dataset_name;
    std::vector<std::string> models;
    double alpha = 0.0;
    std::vector<double> epsilons;
    std::size_t k = 0;
    std::size_t per_class_train = 0;
    std::size_t val_size = 0;
    std::vector<std::size_t> epochs;
    std::size_t runs = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t hidden = 0;
    double lr = 0.0;
    double l2 = 0.0;
    double dropout = 0.0;
    bool no_adjacency_dropout = false;
    bool literal_algorithm1 = false;
    bool normalize_features = false;
    bool keep_all_components = false;
    std::size_t threads = 0;
    std::string config_file;
};

void add_common_flags(CLI::App* cmd, FlagValues& v) {
    cmd->add_option("--config", v.config_file,
                    "key = value file applied before explicit flags");
    cmd->add_option("--dataset-dir", v.dataset_dir,
                    "directory holding edges.tsv, features.tsv, labels.tsv");
    cmd->add_option("--dataset-name", v.dataset_name,
                    "name used in outputs (default: directory basename)");
    cmd->add_option("--alpha", v.alpha, "teleport probability");
    cmd->add_option("--epsilon", v.epsilons, "pruning threshold (repeatable)");
    cmd->add_option("--model", v.models,
                    "model to run: gcn, ppnp, appnp, scnp (repeatable)");
    cmd->add_option("--epochs", v.epochs, "training epoch budget (repeatable)");
    cmd->add_option("--runs", v.runs, "repetitions per cell");
    cmd->add_option("--seed", v.seed, "base seed; run r uses seed+r");
    cmd->add_option("--out", v.out, "output directory");
    cmd->add_option("--per-class-train", v.per_class_train,
                    "labeled training nodes per class");
    cmd->add_option("--val-size", v.val_size, "validation set size");
    cmd->add_option("--k", v.k, "power steps of the iterative propagation");
    cmd->add_option("--hidden", v.hidden, "hidden layer width");
    cmd->add_option("--lr", v.lr, "learning rate");
    cmd->add_option("--l2", v.l2, "first-layer weight decay");
    cmd->add_option("--dropout", v.dropout, "dropout rate");
    cmd->add_flag("--no-adjacency-dropout", v.no_adjacency_dropout,
                  "apply dropout to features and hidden units only");
    cmd->add_flag("--literal-algorithm1", v.literal_algorithm1,
                  "double-count the self pair when assembling the correlation "
                  "diagonal (diagonal 2 instead of 1)");
    cmd->add_flag("--normalize-features", v.normalize_features,
                  "scale feature rows to sum to 1");
    cmd->add_flag("--keep-all-components", v.keep_all_components,
                  "skip the largest-connected-component restriction");
    cmd->add_option("--threads", v.threads, "worker threads for sweep/precompute");
}

// Folds the layered options into one config, honoring only flags present on
// the command line.
scnp::ExperimentConfig resolve_config(const CLI::App* cmd, const FlagValues& v) {
    scnp::ExperimentConfig cfg;
    if (!v.config_file.empty()) scnp::apply_config_file(cfg, v.config_file);
    auto passed = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (passed("--dataset-dir")) cfg.dataset_dir = v.dataset_dir;
    if (passed("--dataset-name")) cfg.dataset_name = v.dataset_name;
    if (passed("--model")) cfg.models = v.models;
    if (passed("--alpha")) cfg.alpha = v.alpha;
    if (passed("--epsilon")) cfg.epsilons = v.epsilons;
    if (passed("--k")) cfg.power_steps = v.k;
    if (passed("--per-class-train")) cfg.per_class_train = v.per_class_train;
    if (passed("--val-size")) cfg.val_size = v.val_size;
    if (passed("--epochs")) cfg.epochs = v.epochs;
    if (passed("--runs")) cfg.runs = v.runs;
    if (passed("--seed")) cfg.base_seed = v.seed;
    if (passed("--out")) cfg.out_dir = v.out;
    if (passed("--hidden")) cfg.hidden = v.hidden;
    if (passed("--lr")) cfg.learning_rate = v.lr;
    if (passed("--l2")) cfg.lambda_l2 = v.l2;
    if (passed("--dropout")) cfg.dropout = v.dropout;
    if (passed("--no-adjacency-dropout")) cfg.adjacency_dropout = false;
    if (passed("--literal-algorithm1")) cfg.literal_algorithm1 = true;
    if (passed("--normalize-features")) cfg.normalize_features = true;
    if (passed("--keep-all-components")) cfg.largest_component = false;
    if (passed("--threads")) cfg.threads = v.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"node classification via decoupled propagation"};
    app.require_subcommand(1);

    FlagValues precompute_v, train_v, sweep_v, validate_v;
    CLI::App* precompute = app.add_subcommand(
        "precompute", "build and cache the propagation artifacts");
    add_common_flags(precompute, precompute_v);
    CLI::App* train =
        app.add_subcommand("train", "train one model once and save a checkpoint");
    add_common_flags(train, train_v);
    CLI::App* sweep = app.add_subcommand(
        "sweep", "run the models x epsilons x epochs x seeds grid");
    add_common_flags(sweep, sweep_v);
    CLI::App* validate = app.add_subcommand(
        "validate-dataset", "load a dataset and print its shape and problems");
    add_common_flags(validate, validate_v);

    CLI::App* report = app.add_subcommand(
        "report", "aggregate a finished sweep into CSV and SVG charts");
    scnp::ReportOptions report_opt;
    std::string results_dir;
    report->add_option("--results", results_dir, "sweep output directory")
        ->required();
    report->add_flag("--force", report_opt.force,
                     "aggregate even when rows mix configurations");
    report->add_flag("--csv-only", report_opt.csv_only,
                     "write the aggregate table but no charts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : scnp::kExitConfig;
    }

    try {
        if (precompute->parsed()) {
            scnp::run_precompute(resolve_config(precompute, precompute_v), std::cout);
        } else if (train->parsed()) {
            scnp::run_train(resolve_config(train, train_v), std::cout);
        } else if (sweep->parsed()) {
            scnp::run_sweep(resolve_config(sweep, sweep_v), std::cout);
        } else if (validate->parsed()) {
            scnp::run_validate(resolve_config(validate, validate_v), std::cout);
        } else if (report->parsed()) {
            report_opt.results_dir = results_dir;
            scnp::run_report(report_opt, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return scnp::exit_code_for(e);
    }
    return 0;
}
